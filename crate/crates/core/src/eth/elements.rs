//! Observable matrix elements in the energy eigenbasis.

use faer::Mat;
use serde::Serialize;

use crate::basis::{SectorSpec, SymBasis};
use crate::hamiltonian::{Observable, OperatorBlock};
use crate::spectra::{max_abs, split_complex, RealForm, Spectrum};
use crate::{c64, Error, Result};

/// Imaginary residue allowed when reading eigenvectors in the real form.
const REAL_VECTOR_TOL: f64 = 1e-9;
/// Relative size below which a real or imaginary part of a block is dropped.
const PART_TOL: f64 = 1e-13;

/// A diagonalized sector with its real form and, when available, the real
/// eigenvectors `V_r` with `V = W V_r`.
pub struct EigenSector<'a> {
    pub basis: &'a SymBasis,
    pub spectrum: &'a Spectrum,
    pub rf: RealForm,
    pub vr: Option<Mat<f64>>,
}

impl<'a> EigenSector<'a> {
    pub fn new(basis: &'a SymBasis, spectrum: &'a Spectrum) -> Result<Self> {
        if basis.spec != spectrum.spec {
            return Err(Error::InvalidPair(format!(
                "basis {} and spectrum {} differ",
                basis.spec.tag(),
                spectrum.spec.tag()
            )));
        }
        let v = spectrum.vectors()?;
        if v.nrows() != basis.dim() {
            return Err(Error::InvalidPair(format!(
                "eigenvectors of length {} for a basis of dimension {}",
                v.nrows(),
                basis.dim()
            )));
        }
        let rf = RealForm::new(basis)?;
        let (re, im) = split_complex(&rf.reduce(v));
        let vr = (max_abs(&im) <= REAL_VECTOR_TOL).then_some(re);
        Ok(Self { basis, spectrum, rf, vr })
    }

    pub fn spec(&self) -> SectorSpec {
        self.basis.spec
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn energies(&self) -> &[f64] {
        &self.spectrum.eigenvalues
    }
}

/// How a block was rotated into the eigenbasis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementPath {
    /// `W†OW` real: one real triple product.
    Real,
    /// `W†OW` imaginary.
    Imaginary,
    /// Both parts present, two real triple products.
    Split,
    /// Complex eigenvectors, complex triple product.
    Complex,
}

/// `O_mn = ⟨ψ_m|O|ψ_n⟩` for all `m` in the bra sector and `n` in the ket sector.
#[derive(Clone, Debug)]
pub struct MatrixElementSet {
    pub label: String,
    pub bra: SectorSpec,
    pub ket: SectorSpec,
    pub bra_energies: Vec<f64>,
    pub ket_energies: Vec<f64>,
    pub re: Option<Mat<f64>>,
    pub im: Option<Mat<f64>>,
    /// `‖O ψ_n‖²` for every ket column.
    pub column_norms2: Vec<f64>,
    pub path: ElementPath,
}

impl MatrixElementSet {
    pub fn rows(&self) -> usize {
        self.bra_energies.len()
    }

    pub fn cols(&self) -> usize {
        self.ket_energies.len()
    }

    /// True for a block within one sector.
    pub fn same_sector(&self) -> bool {
        self.bra == self.ket
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> c64 {
        let re = self.re.as_ref().map_or(0.0, |a| a[(m, n)]);
        let im = self.im.as_ref().map_or(0.0, |a| a[(m, n)]);
        c64::new(re, im)
    }

    #[inline]
    pub fn abs2(&self, m: usize, n: usize) -> f64 {
        let re = self.re.as_ref().map_or(0.0, |a| a[(m, n)]);
        let im = self.im.as_ref().map_or(0.0, |a| a[(m, n)]);
        re * re + im * im
    }

    /// Real parts of the diagonal; errors on a cross-sector block.
    pub fn diagonal(&self) -> Result<Vec<f64>> {
        if !self.same_sector() {
            return Err(Error::InvalidPair("diagonal of a cross-sector block".into()));
        }
        Ok((0..self.rows()).map(|m| self.get(m, m).re).collect())
    }

    /// Largest `|Σ_m |O_mn|² − ‖O ψ_n‖²|` over ket columns.
    pub fn sum_rule_defect(&self) -> f64 {
        (0..self.cols())
            .map(|n| {
                let s: f64 = (0..self.rows()).map(|m| self.abs2(m, n)).sum();
                (s - self.column_norms2[n]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|O_mn − conj(O_nm)|` within a same-sector block.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.same_sector() {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for n in 0..self.cols() {
            for m in 0..=n {
                worst = worst.max((self.get(m, n) - self.get(n, m).conj()).norm());
            }
        }
        worst
    }

    /// `Σ_{m,n} |O_mn|²`.
    pub fn frobenius2(&self) -> f64 {
        self.re.as_ref().map_or(0.0, |a| a.squared_norm_l2()) + self.im.as_ref().map_or(0.0, |a| a.squared_norm_l2())
    }
}

fn check_block(block: &OperatorBlock, bra: &EigenSector, ket: &EigenSector) -> Result<()> {
    if block.bra_spec != bra.spec() || block.spec != ket.spec() {
        return Err(Error::InvalidPair(format!(
            "block {}→{} applied to sectors {}→{}",
            block.spec.tag(),
            block.bra_spec.tag(),
            ket.spec().tag(),
            bra.spec().tag()
        )));
    }
    if block.matrix.nrows() != bra.dim() || block.matrix.ncols() != ket.dim() {
        return Err(Error::InvalidPair(format!(
            "block of shape {}×{} for sectors of dimension {} and {}",
            block.matrix.nrows(),
            block.matrix.ncols(),
            bra.dim(),
            ket.dim()
        )));
    }
    Ok(())
}

fn column_norms2(x: &Mat<f64>) -> Vec<f64> {
    (0..x.ncols())
        .map(|j| (0..x.nrows()).map(|i| x[(i, j)] * x[(i, j)]).sum())
        .collect()
}

/// The two real parts of `W_b† O W_k`, dropping a part that vanishes.
fn real_parts(block: &OperatorBlock, bra: &EigenSector, ket: &EigenSector) -> (Option<Mat<f64>>, Option<Mat<f64>>) {
    let t = bra.rf.transform(&block.matrix, &ket.rf);
    let (re, im) = split_complex(&t);
    let (a, b) = (max_abs(&re), max_abs(&im));
    let scale = a.max(b);
    let keep = |x: f64| scale > 0.0 && x > PART_TOL * scale;
    let re = keep(a).then_some(re);
    let im = keep(b).then_some(im);
    (re, im)
}

/// Full rotation `V_b† O V_k` of an operator block.
pub fn matrix_elements(block: &OperatorBlock, bra: &EigenSector, ket: &EigenSector) -> Result<MatrixElementSet> {
    check_block(block, bra, ket)?;
    let (rows, cols) = (bra.dim(), ket.dim());
    let mut norms = vec![0.0; cols];
    let (re, im, path) = match (&bra.vr, &ket.vr) {
        (Some(vb), Some(vk)) => {
            let (r, i) = real_parts(block, bra, ket);
            let mut rotate = |part: Option<Mat<f64>>| {
                part.map(|p| {
                    let x = &p * vk;
                    for (acc, v) in norms.iter_mut().zip(column_norms2(&x)) {
                        *acc += v;
                    }
                    vb.transpose() * &x
                })
            };
            let path = match (r.is_some(), i.is_some()) {
                (true, false) | (false, false) => ElementPath::Real,
                (false, true) => ElementPath::Imaginary,
                (true, true) => ElementPath::Split,
            };
            let re = rotate(r);
            let im = rotate(i);
            let re = if re.is_none() && im.is_none() { Some(Mat::<f64>::zeros(rows, cols)) } else { re };
            (re, im, path)
        }
        _ => {
            let x = &block.matrix * ket.spectrum.vectors()?;
            for (j, acc) in norms.iter_mut().enumerate() {
                *acc = (0..x.nrows()).map(|i| x[(i, j)].norm_sqr()).sum();
            }
            let e = bra.spectrum.vectors()?.adjoint() * &x;
            let (re, im) = split_complex(&e);
            (Some(re), Some(im), ElementPath::Complex)
        }
    };
    Ok(MatrixElementSet {
        label: block.label.clone(),
        bra: bra.spec(),
        ket: ket.spec(),
        bra_energies: bra.energies().to_vec(),
        ket_energies: ket.energies().to_vec(),
        re,
        im,
        column_norms2: norms,
        path,
    })
}

/// Diagonal elements `O_mm` only, at the cost of one triple product column pass.
pub fn diagonal_elements(block: &OperatorBlock, sector: &EigenSector) -> Result<Vec<f64>> {
    check_block(block, sector, sector)?;
    let n = sector.dim();
    match &sector.vr {
        Some(v) => {
            let (r, _) = real_parts(block, sector, sector);
            let Some(r) = r else { return Ok(vec![0.0; n]) };
            let x = &r * v;
            Ok((0..n).map(|m| (0..n).map(|i| v[(i, m)] * x[(i, m)]).sum()).collect())
        }
        None => {
            let v = sector.spectrum.vectors()?;
            let x = &block.matrix * v;
            Ok((0..n)
                .map(|m| (0..n).map(|i| (v[(i, m)].conj() * x[(i, m)]).re).sum())
                .collect())
        }
    }
}

/// Prefactor `L` (or `L−2`, or 1) that makes `L·|O_mn|²` size-independent
/// for intensive sums of local terms.
pub fn hs_prefactor(which: Observable, l: usize) -> f64 {
    match which {
        Observable::ZN | Observable::ZNN | Observable::JN => l as f64,
        Observable::ZNNAvgObc => (l - 2) as f64,
        Observable::Identity | Observable::ZNNLocal(_) => 1.0,
    }
}

//! Diagonalization of operator blocks and spectral statistics.
//!
//! Every sector used here has an antiunitary symmetry `A` (complex conjugation,
//! or reflection times conjugation at `k ≠ 0, π`) that commutes with the
//! Hamiltonian. In an `A`-invariant basis the block is real symmetric, so the
//! eigenproblem is solved in real arithmetic and the eigenvectors come out in
//! a gauge where matrix elements of `A`-even operators are real.

use faer::{Mat, Side};
use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::basis::{SectorSpec, SymBasis};
use crate::error::{Error, Result};
use crate::hamiltonian::OperatorBlock;
use crate::rmt::Distribution;
use crate::stats;

pub use crate::stats::{BinSpec, FitModel, FitResult, Histogram};

const RESIDUAL_TOL: f64 = 1e-9;
const ORTHONORMALITY_TOL: f64 = 1e-10;
const REALNESS_TOL: f64 = 1e-10;
const RESIDUAL_SAMPLE: usize = 16;

/// Eigenvalues (ascending) and, optionally, eigenvectors of one sector.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub spec: SectorSpec,
    pub params_hash: u64,
    pub eigenvalues: Vec<f64>,
    /// Column `m` is `|ψ_m⟩` in the coordinates of the sector's [`SymBasis`].
    pub eigenvectors: Option<Mat<c64>>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vectors(&self) -> Result<&Mat<c64>> {
        self.eigenvectors
            .as_ref()
            .ok_or_else(|| Error::InvalidInput(format!("spectrum {} carries no eigenvectors", self.spec.tag())))
    }

    /// Drops the eigenvectors, keeping the eigenvalues.
    pub fn values_only(mut self) -> Self {
        self.eigenvectors = None;
        self
    }

    /// Columns checked by [`Spectrum::verify`]: all of them for small blocks,
    /// otherwise an evenly spaced sample that includes both spectral edges.
    fn sample_columns(&self) -> Vec<usize> {
        let n = self.dim();
        if n <= 4 * RESIDUAL_SAMPLE {
            return (0..n).collect();
        }
        (0..RESIDUAL_SAMPLE).map(|i| i * (n - 1) / (RESIDUAL_SAMPLE - 1)).collect()
    }

    /// Relative residual `max_m |H v_m − E_m v_m| / max|E|` and orthonormality
    /// defect over the sampled columns.
    pub fn verify(&self, block: &OperatorBlock) -> Result<(f64, f64)> {
        let v = self.vectors()?;
        let h = &block.matrix;
        if h.nrows() != v.nrows() {
            return Err(Error::InvalidPair("block and eigenvectors differ in dimension".into()));
        }
        let cols = self.sample_columns();
        let scale = self.eigenvalues.iter().fold(0.0f64, |a, &e| a.max(e.abs())).max(1.0);
        let n = v.nrows();
        let mut residual = 0.0f64;
        for &m in &cols {
            let e = self.eigenvalues[m];
            let mut r2 = 0.0;
            for i in 0..n {
                let mut acc = c64::new(0.0, 0.0);
                for j in 0..n {
                    acc += h[(i, j)] * v[(j, m)];
                }
                r2 += (acc - v[(i, m)] * e).norm_sqr();
            }
            residual = residual.max(r2.sqrt() / scale);
        }
        let mut ortho = 0.0f64;
        for &a in &cols {
            for &b in &cols {
                let mut dot = c64::new(0.0, 0.0);
                for i in 0..n {
                    dot += v[(i, a)].conj() * v[(i, b)];
                }
                let target = if a == b { 1.0 } else { 0.0 };
                ortho = ortho.max((dot - target).norm());
            }
        }
        Ok((residual, ortho))
    }

    /// Fails unless [`Spectrum::verify`] is within tolerance.
    pub fn check(&self, block: &OperatorBlock) -> Result<()> {
        let (res, ortho) = self.verify(block)?;
        if !(res <= RESIDUAL_TOL && ortho <= ORTHONORMALITY_TOL) {
            return Err(Error::numeric(
                format!("eigensolver for {}", self.spec.tag()),
                format!("residual {res:e}, orthonormality defect {ortho:e}"),
            ));
        }
        Ok(())
    }
}

/// Unitary change of basis `W` to an `A`-invariant basis, sparse with at most
/// two nonzeros per column.
#[derive(Clone, Debug)]
pub struct RealForm {
    cols: Vec<[(usize, c64); 2]>,
}

impl RealForm {
    pub fn new(basis: &SymBasis) -> Result<Self> {
        let (sigma, u) = basis.antiunitary_map()?;
        let n = basis.dim();
        let zero = c64::new(0.0, 0.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut cols = Vec::with_capacity(n);
        for a in 0..n {
            let b = sigma[a];
            if b == a {
                cols.push([(a, u[a].sqrt()), (a, zero)]);
            } else if a < b {
                if sigma[b] != a {
                    return Err(Error::Consistency("antiunitary map is not an involution".into()));
                }
                let i = c64::new(0.0, 1.0);
                cols.push([(a, c64::new(h, 0.0)), (b, u[a] * h)]);
                cols.push([(a, i * h), (b, -i * u[a] * h)]);
            }
        }
        if cols.len() != n {
            return Err(Error::Consistency("real form has the wrong dimension".into()));
        }
        Ok(Self { cols })
    }

    pub fn dim(&self) -> usize {
        self.cols.len()
    }

    /// `W† A W'` for a block between the sector of `self` (rows) and `ket`.
    pub fn transform(&self, a: &Mat<c64>, ket: &RealForm) -> Mat<c64> {
        let (n, m) = (self.dim(), ket.dim());
        let zero = c64::new(0.0, 0.0);
        let mut aw = Mat::<c64>::zeros(a.nrows(), m);
        for (j, col) in ket.cols.iter().enumerate() {
            for &(r, w) in col {
                if w == zero {
                    continue;
                }
                for i in 0..a.nrows() {
                    aw[(i, j)] += a[(i, r)] * w;
                }
            }
        }
        let mut out = Mat::<c64>::zeros(n, m);
        for (i, col) in self.cols.iter().enumerate() {
            for &(r, w) in col {
                if w == zero {
                    continue;
                }
                let wc = w.conj();
                for j in 0..m {
                    out[(i, j)] += wc * aw[(r, j)];
                }
            }
        }
        out
    }

    /// `W v` for real columns `v`.
    pub fn expand(&self, v: &Mat<f64>) -> Mat<c64> {
        let mut out = Mat::<c64>::zeros(v.nrows(), v.ncols());
        for (j, col) in self.cols.iter().enumerate() {
            for &(r, w) in col {
                if w == c64::new(0.0, 0.0) {
                    continue;
                }
                for m in 0..v.ncols() {
                    out[(r, m)] += w * v[(j, m)];
                }
            }
        }
        out
    }

    /// `W† v`; real for vectors in the real gauge.
    pub fn reduce(&self, v: &Mat<c64>) -> Mat<c64> {
        let mut out = Mat::<c64>::zeros(v.nrows(), v.ncols());
        for (j, col) in self.cols.iter().enumerate() {
            for &(r, w) in col {
                if w == c64::new(0.0, 0.0) {
                    continue;
                }
                let wc = w.conj();
                for m in 0..v.ncols() {
                    out[(j, m)] += wc * v[(r, m)];
                }
            }
        }
        out
    }
}

/// Splits a complex matrix into real and imaginary parts.
pub fn split_complex(a: &Mat<c64>) -> (Mat<f64>, Mat<f64>) {
    let re = Mat::<f64>::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].re);
    let im = Mat::<f64>::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].im);
    (re, im)
}

pub fn max_abs(a: &Mat<f64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].abs());
        }
    }
    m
}

fn eig_error(spec: &SectorSpec, e: impl std::fmt::Debug) -> Error {
    Error::numeric(format!("eigensolver for {}", spec.tag()), format!("{e:?}"))
}

/// Sign gauge: the largest-modulus component of every column is positive.
fn fix_real_gauge(v: &mut Mat<f64>) {
    for m in 0..v.ncols() {
        let mut best = 0usize;
        for i in 0..v.nrows() {
            if v[(i, m)].abs() > v[(best, m)].abs() {
                best = i;
            }
        }
        if v[(best, m)] < 0.0 {
            for i in 0..v.nrows() {
                v[(i, m)] = -v[(i, m)];
            }
        }
    }
}

/// Phase gauge: the largest-modulus component of every column is real positive.
pub fn fix_phase_gauge(v: &mut Mat<c64>) {
    for m in 0..v.ncols() {
        let mut best = 0usize;
        for i in 0..v.nrows() {
            if v[(i, m)].norm_sqr() > v[(best, m)].norm_sqr() {
                best = i;
            }
        }
        let p = v[(best, m)];
        if p.norm() == 0.0 {
            continue;
        }
        let phase = p.conj() / p.norm();
        for i in 0..v.nrows() {
            v[(i, m)] *= phase;
        }
    }
}

fn real_block(block: &OperatorBlock, rf: &RealForm) -> Result<Mat<f64>> {
    let t = rf.transform(&block.matrix, rf);
    let (re, im) = split_complex(&t);
    let scale = max_abs(&re).max(1.0);
    let defect = max_abs(&im);
    if defect > REALNESS_TOL * scale {
        return Err(Error::Consistency(format!(
            "block {} is not real in the antiunitary basis (defect {defect:e})",
            block.spec.tag()
        )));
    }
    Ok(re)
}

/// Dense complex Hermitian diagonalization; eigenvectors in the
/// largest-component-real-positive gauge.
pub fn diagonalize(block: &OperatorBlock, params_hash: u64) -> Result<Spectrum> {
    let n = block.dim();
    if n == 0 {
        return Err(Error::InvalidInput(format!("empty sector {}", block.spec.tag())));
    }
    let evd = block
        .matrix
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| eig_error(&block.spec, e))?;
    let eigenvalues: Vec<f64> = (0..n).map(|i| evd.S().column_vector()[i].re).collect();
    let mut v = evd.U().to_owned();
    fix_phase_gauge(&mut v);
    let s = Spectrum { spec: block.spec, params_hash, eigenvalues, eigenvectors: Some(v) };
    s.check(block)?;
    Ok(s)
}

/// Diagonalization through the sector's real form.
pub fn diagonalize_real(block: &OperatorBlock, basis: &SymBasis, params_hash: u64) -> Result<Spectrum> {
    if basis.spec != block.spec {
        return Err(Error::InvalidPair("block and basis belong to different sectors".into()));
    }
    if block.dim() == 0 {
        return Err(Error::InvalidInput(format!("empty sector {}", block.spec.tag())));
    }
    let rf = RealForm::new(basis)?;
    let hr = real_block(block, &rf)?;
    let evd = hr.self_adjoint_eigen(Side::Lower).map_err(|e| eig_error(&block.spec, e))?;
    let n = hr.nrows();
    let eigenvalues: Vec<f64> = (0..n).map(|i| evd.S().column_vector()[i]).collect();
    let mut vr = evd.U().to_owned();
    fix_real_gauge(&mut vr);
    let s = Spectrum {
        spec: block.spec,
        params_hash,
        eigenvalues,
        eigenvectors: Some(rf.expand(&vr)),
    };
    s.check(block)?;
    Ok(s)
}

/// Eigenvalues only, through the real form.
pub fn eigenvalues_real(block: &OperatorBlock, basis: &SymBasis, params_hash: u64) -> Result<Spectrum> {
    let rf = RealForm::new(basis)?;
    let hr = real_block(block, &rf)?;
    let mut ev = hr
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| eig_error(&block.spec, e))?;
    ev.sort_by(|a, b| a.total_cmp(b));
    Ok(Spectrum { spec: block.spec, params_hash, eigenvalues: ev, eigenvectors: None })
}

/// Density of states of pooled sectors of one chain length.
#[derive(Clone, Debug, Serialize)]
pub struct DosReport {
    pub l: usize,
    pub histogram: Histogram,
    pub gaussian: FitResult,
    /// Standard deviation of `E_m/L` over the pooled eigenvalues.
    pub sigma: f64,
    pub mean: f64,
}

pub fn dos(spectra: &[&Spectrum], bins: BinSpec) -> Result<DosReport> {
    let first = spectra.first().ok_or_else(|| Error::InvalidInput("no spectra for the DOS".into()))?;
    let l = first.spec.l;
    if spectra.iter().any(|s| s.spec.l != l) {
        return Err(Error::InvalidInput("DOS input mixes chain lengths".into()));
    }
    let x: Vec<f64> = spectra
        .iter()
        .flat_map(|s| s.eigenvalues.iter().map(move |e| e / l as f64))
        .collect();
    if x.is_empty() {
        return Err(Error::InvalidInput("empty spectra for the DOS".into()));
    }
    let histogram = Histogram::from_samples(&x, bins)?;
    let gaussian = stats::gaussian_fit_lsq(&histogram)?;
    let m = stats::moments(&x);
    Ok(DosReport { l, histogram, gaussian, sigma: m.variance.sqrt(), mean: m.mean })
}

/// Window `[lo, hi)` of indices covering the central `fraction` of `n` levels.
pub fn central_window(n: usize, fraction: f64) -> (usize, usize) {
    let keep = ((n as f64 * fraction).round() as usize).min(n);
    let lo = (n - keep) / 2;
    (lo, lo + keep)
}

#[derive(Clone, Debug, Serialize)]
pub struct SpacingReport {
    pub histogram: Histogram,
    pub spacings: usize,
    /// Mean of the pooled unfolded spacings (one by construction).
    pub mean_spacing: f64,
    pub ks_wigner: f64,
    pub ks_poisson: f64,
}

/// Unfolded nearest-neighbour spacings from the central part of each sector.
pub fn unfolded_spacings(spectra: &[&Spectrum], central_fraction: f64) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for s in spectra {
        let n = s.dim();
        if (n as f64 * central_fraction) < 50.0 {
            return Err(Error::InvalidInput(format!(
                "sector {} keeps fewer than 50 levels at fraction {central_fraction}",
                s.spec.tag()
            )));
        }
        let (lo, hi) = central_window(n, central_fraction);
        let w = &s.eigenvalues[lo..hi];
        let raw: Vec<f64> = w.windows(2).map(|p| p[1] - p[0]).collect();
        let mean = raw.iter().sum::<f64>() / raw.len() as f64;
        if !(mean > 0.0) {
            return Err(Error::InvalidInput(format!("sector {} has a degenerate window", s.spec.tag())));
        }
        out.extend(raw.iter().map(|d| d / mean));
    }
    Ok(out)
}

pub fn level_spacing_stats(spectra: &[&Spectrum], central_fraction: f64, bins: BinSpec) -> Result<SpacingReport> {
    let s = unfolded_spacings(spectra, central_fraction)?;
    let histogram = Histogram::from_samples(&s, bins)?;
    Ok(SpacingReport {
        spacings: s.len(),
        mean_spacing: s.iter().sum::<f64>() / s.len() as f64,
        ks_wigner: stats::ks_distance(&s, |x| Distribution::WignerGoe.cdf(x)),
        ks_poisson: stats::ks_distance(&s, |x| Distribution::PoissonSpacing.cdf(x)),
        histogram,
    })
}

/// Consecutive-spacing ratios `min(s_m, s_{m−1}) / max(s_m, s_{m−1})`.
/// A pair of zero spacings yields `r = 0`.
pub fn spacing_ratios(eigenvalues: &[f64]) -> Vec<f64> {
    let s: Vec<f64> = eigenvalues.windows(2).map(|p| p[1] - p[0]).collect();
    s.windows(2)
        .map(|p| {
            let (a, b) = (p[0].min(p[1]), p[0].max(p[1]));
            if b > 0.0 {
                a / b
            } else {
                0.0
            }
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioReport {
    pub histogram: Histogram,
    pub mean_r: f64,
    pub std_error: f64,
    pub count: usize,
    pub per_sector: Vec<(SectorSpec, f64)>,
    pub ks_goe: f64,
    pub ks_poisson: f64,
}

pub fn ratio_stats(spectra: &[&Spectrum]) -> Result<RatioReport> {
    let mut all = Vec::new();
    let mut per_sector = Vec::new();
    for s in spectra {
        let r = spacing_ratios(&s.eigenvalues);
        if r.is_empty() {
            return Err(Error::InvalidInput(format!("sector {} has fewer than three levels", s.spec.tag())));
        }
        per_sector.push((s.spec, r.iter().sum::<f64>() / r.len() as f64));
        all.extend(r);
    }
    if all.is_empty() {
        return Err(Error::InvalidInput("no spectra for ratio statistics".into()));
    }
    let (mean_r, std_error) = stats::mean_and_se(&all);
    let histogram = Histogram::from_samples(&all, BinSpec::Range { lo: 0.0, hi: 1.0, n: 50 })?;
    Ok(RatioReport {
        ks_goe: stats::ks_distance(&all, |x| Distribution::RatioGoe.cdf(x)),
        ks_poisson: stats::ks_distance(&all, |x| Distribution::RatioPoisson.cdf(x)),
        histogram,
        mean_r,
        std_error,
        count: all.len(),
        per_sector,
    })
}

/// Per-chain-length DOS widths and the fit `σ ∝ L^{−γ}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SigmaScaling {
    pub ls: Vec<usize>,
    pub sigmas: Vec<f64>,
    pub fit: FitResult,
}

pub fn sigma_scaling(reports: &[DosReport], use_fit_width: bool) -> Result<SigmaScaling> {
    let ls: Vec<usize> = reports.iter().map(|r| r.l).collect();
    let sigmas: Vec<f64> = reports
        .iter()
        .map(|r| if use_fit_width { r.gaussian.params[1] } else { r.sigma })
        .collect();
    let x: Vec<f64> = ls.iter().map(|&l| l as f64).collect();
    let fit = stats::power_law_fit(&x, &sigmas)?;
    Ok(SigmaScaling { ls, sigmas, fit })
}

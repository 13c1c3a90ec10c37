//! Spin-1 XXZ Hamiltonians and observables as dense blocks in a [`SymBasis`].
//!
//! Operators are kept as lists of one- and two-site terms acting on product
//! states. A block is assembled by applying every term to the expansion of
//! each ket basis vector and projecting the image onto the bra basis through
//! its lookup table, so the `3^L`-dimensional operator is never formed.

use faer::Mat;
use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::basis::{Boundary, SectorSpec, SymBasis, POW3};
use crate::error::{Error, Result};

const HERMITICITY_TOL: f64 = 1e-12;

/// Model parameters. `mu` and `nu` are always derived from `delta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub delta: f64,
    pub lambda: f64,
    pub bc: Boundary,
    /// Edge field on the first site, used only for open chains.
    pub hz1: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { delta: 0.55, lambda: 0.0, bc: Boundary::Pbc, hz1: 0.1 }
    }
}

impl ModelParams {
    pub fn new(delta: f64, lambda: f64, bc: Boundary, hz1: f64) -> Result<Self> {
        let p = Self { delta, lambda, bc, hz1 };
        p.validate()?;
        Ok(p)
    }

    pub fn pbc(delta: f64, lambda: f64) -> Self {
        Self { delta, lambda, ..Self::default() }
    }

    pub fn obc(delta: f64, hz1: f64) -> Self {
        Self { delta, lambda: 0.0, bc: Boundary::Obc, hz1 }
    }

    pub fn mu(&self) -> f64 {
        self.delta - 1.0
    }

    pub fn nu(&self) -> f64 {
        2.0 - (2.0 * (1.0 + self.delta)).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.lambda.is_finite() && self.hz1.is_finite()) {
            return Err(Error::InvalidInput("model parameters must be finite".into()));
        }
        if 1.0 + self.delta < 0.0 {
            return Err(Error::InvalidInput(format!("1 + Δ must be ≥ 0, got Δ = {}", self.delta)));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidInput(format!("λ must lie in [0, 1], got {}", self.lambda)));
        }
        Ok(())
    }

    /// Parameters that actually enter the operator (the edge field only
    /// matters for open chains).
    fn canonical(&self) -> (f64, f64, u8, f64) {
        match self.bc {
            Boundary::Pbc => (self.delta, self.lambda, 0, 0.0),
            Boundary::Obc => (self.delta, self.lambda, 1, self.hz1),
        }
    }

    /// Stable 64-bit digest of the parameters.
    pub fn digest(&self) -> u64 {
        use sha2::{Digest, Sha256};
        let (d, l, bc, h) = self.canonical();
        let mut hasher = Sha256::new();
        hasher.update(b"spin1-xxz-v1");
        hasher.update(d.to_le_bytes());
        hasher.update(l.to_le_bytes());
        hasher.update([bc]);
        hasher.update(h.to_le_bytes());
        let out = hasher.finalize();
        u64::from_le_bytes(out[..8].try_into().unwrap())
    }
}

pub type Mat3 = [[c64; 3]; 3];
pub type Mat9 = [[c64; 9]; 9];

fn zero3() -> Mat3 {
    [[c64::new(0.0, 0.0); 3]; 3]
}

fn zero9() -> Mat9 {
    [[c64::new(0.0, 0.0); 9]; 9]
}

/// Spin-1 matrices in the trit basis `(m = −1, 0, +1)`: `(S^x, S^y, S^z)`.
pub fn spin_matrices() -> (Mat3, Mat3, Mat3) {
    let sp = splus();
    let sm = adjoint3(&sp);
    let mut sx = zero3();
    let mut sy = zero3();
    let mut sz = zero3();
    for i in 0..3 {
        for j in 0..3 {
            sx[i][j] = (sp[i][j] + sm[i][j]) * 0.5;
            sy[i][j] = (sp[i][j] - sm[i][j]) / c64::new(0.0, 2.0);
        }
        sz[i][i] = c64::new(i as f64 - 1.0, 0.0);
    }
    (sx, sy, sz)
}

/// `S^+` with `S^+|m⟩ = √(2 − m(m+1)) |m+1⟩`.
pub fn splus() -> Mat3 {
    let mut sp = zero3();
    let r2 = std::f64::consts::SQRT_2;
    sp[1][0] = c64::new(r2, 0.0);
    sp[2][1] = c64::new(r2, 0.0);
    sp
}

fn adjoint3(a: &Mat3) -> Mat3 {
    let mut out = zero3();
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

fn identity3() -> Mat3 {
    let mut out = zero3();
    for (i, row) in out.iter_mut().enumerate() {
        row[i] = c64::new(1.0, 0.0);
    }
    out
}

/// Two-site product `a ⊗ b`, first site as the slow index.
pub fn kron(a: &Mat3, b: &Mat3) -> Mat9 {
    let mut out = zero9();
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    out[3 * i + k][3 * j + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn mul9(a: &Mat9, b: &Mat9) -> Mat9 {
    let mut out = zero9();
    for i in 0..9 {
        for k in 0..9 {
            if a[i][k] == c64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..9 {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn add9(terms: &[(f64, &Mat9)]) -> Mat9 {
    let mut out = zero9();
    for (w, m) in terms {
        for i in 0..9 {
            for j in 0..9 {
                out[i][j] += m[i][j] * *w;
            }
        }
    }
    out
}

fn adjoint9(a: &Mat9) -> Mat9 {
    let mut out = zero9();
    for i in 0..9 {
        for j in 0..9 {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

/// The two-site term of the periodic Hamiltonian for the bond `(j, j+1)`,
/// including the on-site `2μ(S^z_j)²` piece attached to its first site.
pub fn bond_matrix(params: &ModelParams) -> Mat9 {
    let (sx, sy, sz) = spin_matrices();
    let id = identity3();
    let xx = kron(&sx, &sx);
    let yy = kron(&sy, &sy);
    let zz = kron(&sz, &sz);
    let xy = add9(&[(1.0, &xx), (1.0, &yy)]);
    let sdots = add9(&[(1.0, &xy), (1.0, &zz)]);
    let biquad = mul9(&sdots, &sdots);
    let sz2 = {
        let mut m = zero3();
        for i in 0..3 {
            m[i][i] = sz[i][i] * sz[i][i];
        }
        m
    };
    let onsite = kron(&sz2, &id);
    let zz2 = mul9(&zz, &zz);
    let mixed = mul9(&xy, &zz);
    let mixed_hc = adjoint9(&mixed);
    let (mu, nu, lam) = (params.mu(), params.nu(), params.lambda);
    add9(&[
        (-1.0, &xy),
        (-params.delta, &zz),
        (lam, &biquad),
        (-lam * mu * 2.0, &onsite),
        (lam * mu, &zz2),
        (-lam * nu, &mixed),
        (-lam * nu, &mixed_hc),
    ])
}

/// Sparse local action: for every input local index, the nonzero outputs.
#[derive(Clone, Debug)]
struct SparseLocal {
    cols: Vec<Vec<(u8, c64)>>,
}

impl SparseLocal {
    fn from_dense<const N: usize>(m: &[[c64; N]; N], scale: f64) -> Self {
        let cols = (0..N)
            .map(|j| {
                (0..N)
                    .filter(|&i| m[i][j].norm() > 1e-15)
                    .map(|i| (i as u8, m[i][j] * scale))
                    .collect()
            })
            .collect();
        Self { cols }
    }
}

#[derive(Clone, Debug)]
enum Term {
    One { site: usize, local: SparseLocal },
    Two { a: usize, b: usize, local: SparseLocal },
}

/// An operator as a sum of one- and two-site terms on an `L`-site chain.
#[derive(Clone, Debug)]
pub struct Operator {
    pub l: usize,
    pub label: String,
    terms: Vec<Term>,
}

impl Operator {
    pub fn new(l: usize, label: impl Into<String>) -> Self {
        Self { l, label: label.into(), terms: Vec::new() }
    }

    pub fn add_one_site(&mut self, site: usize, m: &Mat3, scale: f64) {
        assert!(site < self.l);
        self.terms.push(Term::One { site, local: SparseLocal::from_dense(m, scale) });
    }

    /// Adds `scale · m` acting on sites `(a, b)`, `a` as the slow index of `m`.
    pub fn add_two_site(&mut self, a: usize, b: usize, m: &Mat9, scale: f64) {
        assert!(a < self.l && b < self.l && a != b);
        self.terms.push(Term::Two { a, b, local: SparseLocal::from_dense(m, scale) });
    }

    /// Calls `f(s', ⟨s'|O|s⟩)` for every term's image of `code`. The same
    /// output state may be reported several times.
    #[inline]
    pub fn apply(&self, code: u32, mut f: impl FnMut(u32, c64)) {
        let code_i = code as i64;
        for t in &self.terms {
            match t {
                Term::One { site, local } => {
                    let p = POW3[*site] as i64;
                    let ta = (code_i / p) % 3;
                    for &(out, w) in &local.cols[ta as usize] {
                        f((code_i + (out as i64 - ta) * p) as u32, w);
                    }
                }
                Term::Two { a, b, local } => {
                    let pa = POW3[*a] as i64;
                    let pb = POW3[*b] as i64;
                    let ta = (code_i / pa) % 3;
                    let tb = (code_i / pb) % 3;
                    for &(out, w) in &local.cols[(3 * ta + tb) as usize] {
                        let (oa, ob) = ((out / 3) as i64, (out % 3) as i64);
                        f((code_i + (oa - ta) * pa + (ob - tb) * pb) as u32, w);
                    }
                }
            }
        }
    }

    /// `O|s⟩` as a sorted, merged list.
    pub fn apply_merged(&self, code: u32) -> Vec<(u32, c64)> {
        let mut out: Vec<(u32, c64)> = Vec::new();
        self.apply(code, |s, w| out.push((s, w)));
        out.sort_by_key(|x| x.0);
        let mut merged: Vec<(u32, c64)> = Vec::with_capacity(out.len());
        for (s, w) in out {
            match merged.last_mut() {
                Some(last) if last.0 == s => last.1 += w,
                _ => merged.push((s, w)),
            }
        }
        merged.retain(|(_, w)| w.norm() > 1e-15);
        merged
    }

    /// True when every term is diagonal in the product basis.
    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(|t| {
            let local = match t {
                Term::One { local, .. } | Term::Two { local, .. } => local,
            };
            local
                .cols
                .iter()
                .enumerate()
                .all(|(j, col)| col.iter().all(|&(i, _)| i as usize == j))
        })
    }
}

/// Hamiltonian as a sum of local terms.
pub fn hamiltonian_operator(params: &ModelParams, l: usize) -> Result<Operator> {
    params.validate()?;
    if l < 2 {
        return Err(Error::InvalidSpec(format!("the Hamiltonian needs L ≥ 2, got {l}")));
    }
    let h2 = bond_matrix(params);
    let mut op = Operator::new(l, "H");
    match params.bc {
        Boundary::Pbc => {
            for j in 0..l {
                op.add_two_site(j, (j + 1) % l, &h2, 1.0);
            }
        }
        Boundary::Obc => {
            for j in 0..l - 1 {
                op.add_two_site(j, j + 1, &h2, 1.0);
            }
            if params.hz1 != 0.0 {
                let (_, _, sz) = spin_matrices();
                op.add_one_site(0, &sz, params.hz1);
            }
        }
    }
    Ok(op)
}

/// Observables of the chain. Site indices are zero-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Identity,
    /// `(1/L) Σ_j S^z_j S^z_{j+1}`.
    ZN,
    /// `(1/L) Σ_j S^z_j S^z_{j+2}`.
    ZNN,
    /// `(i/L) Σ_j (S^+_j S^-_{j+1} − S^-_j S^+_{j+1})`.
    JN,
    /// `S^z_j S^z_{j+2}` (periodic wrap for closed chains).
    ZNNLocal(usize),
    /// `(1/(L−2)) Σ_{j<L−2} S^z_j S^z_{j+2}` on an open chain.
    ZNNAvgObc,
}

impl Observable {
    pub fn label(&self) -> String {
        match self {
            Observable::Identity => "identity".into(),
            Observable::ZN => "Z_N".into(),
            Observable::ZNN => "Z_NN".into(),
            Observable::JN => "J_N".into(),
            Observable::ZNNLocal(j) => format!("Z_NN^{j}"),
            Observable::ZNNAvgObc => "Z_NN_avg".into(),
        }
    }

    /// Whether the operator carries an intensive `1/L` or `1/(L−2)` prefactor.
    pub fn is_intensive(&self) -> bool {
        matches!(self, Observable::ZN | Observable::ZNN | Observable::JN | Observable::ZNNAvgObc)
    }

    /// True for operators that commute with translations.
    pub fn is_translation_invariant(&self) -> bool {
        matches!(self, Observable::Identity | Observable::ZN | Observable::ZNN | Observable::JN)
    }

    fn odd_under_parity_and_flip(&self) -> bool {
        matches!(self, Observable::JN)
    }
}

/// `S^z ⊗ S^z`.
pub fn zz_matrix() -> Mat9 {
    let (_, _, sz) = spin_matrices();
    kron(&sz, &sz)
}

/// `i(S^+ ⊗ S^- − S^- ⊗ S^+)`.
pub fn current_matrix() -> Mat9 {
    let sp = splus();
    let sm = adjoint3(&sp);
    let a = kron(&sp, &sm);
    let b = kron(&sm, &sp);
    let mut out = zero9();
    for i in 0..9 {
        for j in 0..9 {
            out[i][j] = (a[i][j] - b[i][j]) * c64::new(0.0, 1.0);
        }
    }
    out
}

pub fn observable_operator(which: Observable, l: usize, bc: Boundary) -> Result<Operator> {
    let mut op = Operator::new(l, which.label());
    let zz = zz_matrix();
    match which {
        Observable::Identity => {
            op.add_one_site(0, &identity3(), 1.0);
        }
        Observable::ZN | Observable::ZNN | Observable::JN => {
            if bc != Boundary::Pbc {
                return Err(Error::InvalidSpec(format!(
                    "{} is defined for periodic chains; use Z_NN_avg on open chains",
                    which.label()
                )));
            }
            let (dist, m) = match which {
                Observable::ZN => (1, zz),
                Observable::ZNN => (2, zz),
                _ => (1, current_matrix()),
            };
            if l <= dist {
                return Err(Error::InvalidSpec(format!("{} needs L > {dist}", which.label())));
            }
            for j in 0..l {
                op.add_two_site(j, (j + dist) % l, &m, 1.0 / l as f64);
            }
        }
        Observable::ZNNLocal(j) => {
            let ok = match bc {
                Boundary::Pbc => j < l && l > 2,
                Boundary::Obc => j + 2 < l,
            };
            if !ok {
                return Err(Error::InvalidSpec(format!("Z_NN^{j} not defined on L = {l} ({bc:?})")));
            }
            op.add_two_site(j, (j + 2) % l, &zz, 1.0);
        }
        Observable::ZNNAvgObc => {
            if bc != Boundary::Obc || l < 3 {
                return Err(Error::InvalidSpec("Z_NN_avg needs an open chain with L ≥ 3".into()));
            }
            for j in 0..l - 2 {
                op.add_two_site(j, j + 2, &zz, 1.0 / (l - 2) as f64);
            }
        }
    }
    Ok(op)
}

/// Dense matrix of an operator between two sectors (rows: bra basis).
#[derive(Clone, Debug)]
pub struct OperatorBlock {
    pub spec: SectorSpec,
    pub bra_spec: SectorSpec,
    pub matrix: Mat<c64>,
    pub label: String,
    /// The intensive prefactor (`1/L` or `1/(L−2)`) is included in `matrix`.
    pub hs_norm_factor_applied: bool,
    /// The operator does not commute with the sector symmetries, so only its
    /// sector-diagonal part is represented.
    pub truncated: bool,
}

impl OperatorBlock {
    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    /// Largest `|A_ij − conj(A_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.matrix)
    }

    pub fn trace(&self) -> c64 {
        (0..self.matrix.nrows().min(self.matrix.ncols()))
            .map(|i| self.matrix[(i, i)])
            .sum()
    }

    /// True when all off-diagonal entries vanish.
    pub fn is_diagonal(&self) -> bool {
        let m = &self.matrix;
        (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| i == j || m[(i, j)] == c64::new(0.0, 0.0)))
    }
}

pub fn hermiticity_defect(m: &Mat<c64>) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `⟨v_a|O|v_b⟩` for all bra vectors `a` and ket vectors `b`.
pub fn build_block(op: &Operator, bra: &SymBasis, ket: &SymBasis) -> Result<Mat<c64>> {
    if bra.l() != op.l || ket.l() != op.l {
        return Err(Error::InvalidPair(format!(
            "operator on L = {} with bases on L = {} and {}",
            op.l,
            bra.l(),
            ket.l()
        )));
    }
    let mut m = Mat::<c64>::zeros(bra.dim(), ket.dim());
    for b in 0..ket.dim() {
        for (s, amp) in ket.expansion(b) {
            op.apply(s, |s2, w| {
                if let Some((a, ov)) = bra.lookup(s2) {
                    m[(a, b)] += ov * w * amp;
                }
            });
        }
    }
    Ok(m)
}

fn check_boundary(spec: &SectorSpec, bc: Boundary) -> Result<()> {
    if spec.bc != bc {
        return Err(Error::InvalidSpec(format!("basis is {:?} but the model is {bc:?}", spec.bc)));
    }
    Ok(())
}

pub fn build_hamiltonian(params: &ModelParams, basis: &SymBasis) -> Result<OperatorBlock> {
    check_boundary(&basis.spec, params.bc)?;
    if params.bc == Boundary::Obc && basis.spec.spin_flip.is_some() && params.hz1 != 0.0 {
        return Err(Error::InvalidSpec("the edge field breaks spin inversion".into()));
    }
    let op = hamiltonian_operator(params, basis.l())?;
    let matrix = build_block(&op, basis, basis)?;
    let block = OperatorBlock {
        spec: basis.spec,
        bra_spec: basis.spec,
        matrix,
        label: "H".into(),
        hs_norm_factor_applied: false,
        truncated: false,
    };
    let defect = block.hermiticity_defect();
    if defect > HERMITICITY_TOL {
        return Err(Error::Consistency(format!(
            "Hamiltonian block {} not Hermitian (defect {defect:e})",
            basis.spec.tag()
        )));
    }
    Ok(block)
}

pub fn build_observable(which: Observable, basis: &SymBasis) -> Result<OperatorBlock> {
    let spec = basis.spec;
    let op = observable_operator(which, spec.l, spec.bc)?;
    let truncated = match which {
        Observable::ZNNLocal(_) => spec.eta.is_some(),
        _ => {
            which.odd_under_parity_and_flip() && (spec.parity.is_some() || spec.spin_flip.is_some())
        }
    };
    let matrix = build_block(&op, basis, basis)?;
    let block = OperatorBlock {
        spec,
        bra_spec: spec,
        matrix,
        label: which.label(),
        hs_norm_factor_applied: which.is_intensive(),
        truncated,
    };
    let defect = block.hermiticity_defect();
    if defect > HERMITICITY_TOL {
        return Err(Error::Consistency(format!("{} block not Hermitian (defect {defect:e})", block.label)));
    }
    Ok(block)
}

/// Block of `which` between two sectors of the same `(L, M)` family.
pub fn cross_sector_block(which: Observable, bra: &SymBasis, ket: &SymBasis) -> Result<OperatorBlock> {
    let (b, k) = (bra.spec, ket.spec);
    if b.l != k.l || b.m != k.m || b.bc != k.bc {
        return Err(Error::InvalidPair(format!("sectors {} and {} differ in L, M or bc", b.tag(), k.tag())));
    }
    let op = observable_operator(which, k.l, k.bc)?;
    Ok(OperatorBlock {
        spec: k,
        bra_spec: b,
        matrix: build_block(&op, bra, ket)?,
        label: which.label(),
        hs_norm_factor_applied: which.is_intensive(),
        truncated: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spin_algebra() {
        let (sx, sy, sz) = spin_matrices();
        // [S^x, S^y] = i S^z
        for i in 0..3 {
            for j in 0..3 {
                let mut comm = c64::new(0.0, 0.0);
                for k in 0..3 {
                    comm += sx[i][k] * sy[k][j] - sy[i][k] * sx[k][j];
                }
                assert!((comm - c64::new(0.0, 1.0) * sz[i][j]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn bond_matrix_is_real_symmetric() {
        let h = bond_matrix(&ModelParams::pbc(0.55, 1.0));
        for i in 0..9 {
            for j in 0..9 {
                assert!(h[i][j].im.abs() < 1e-14);
                assert!((h[i][j] - h[j][i]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn derived_couplings() {
        let p = ModelParams::pbc(0.55, 0.0);
        assert!((p.mu() + 0.45).abs() < 1e-15);
        assert!((p.nu() - (2.0 - 3.1f64.sqrt())).abs() < 1e-15);
        assert!(ModelParams::new(-1.5, 0.0, Boundary::Pbc, 0.0).is_err());
    }

    #[test]
    fn polarized_state_expectations() {
        let op = observable_operator(Observable::ZN, 5, Boundary::Pbc).unwrap();
        let all_up = POW3[5] - 1;
        let out = op.apply_merged(all_up);
        assert_eq!(out.len(), 1);
        assert!((out[0].1.re - 1.0).abs() < 1e-14);
        let zeros: u32 = (0..5).map(|j| POW3[j]).sum();
        assert!(op.apply_merged(zeros).is_empty());
    }
}

//! Random-matrix and Haar references: Gaussian ensembles, Haar-random
//! orthogonal/unitary matrices, closed-form spacing/ratio/amplitude
//! distributions, Weingarten 4-point moments and matrix-element moments.
//!
//! Every sample is drawn from a ChaCha stream keyed by the ensemble
//! specification and a draw index, so any single draw can be regenerated
//! independently of the others.

use std::f64::consts::PI;

use faer::{Mat, Side};
use num_complex::Complex64 as c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::stats::{self, integrate};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    Goe,
    Gue,
    HaarO,
    HaarU,
}

impl EnsembleKind {
    /// Dyson index: 1 for real ensembles, 2 for complex ones.
    pub fn beta(&self) -> u8 {
        match self {
            EnsembleKind::Goe | EnsembleKind::HaarO => 1,
            EnsembleKind::Gue | EnsembleKind::HaarU => 2,
        }
    }

    fn tag(&self) -> u64 {
        match self {
            EnsembleKind::Goe => 1,
            EnsembleKind::Gue => 2,
            EnsembleKind::HaarO => 3,
            EnsembleKind::HaarU => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub dim: usize,
    pub seed: u64,
    pub sigma: f64,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, dim: usize, seed: u64) -> Self {
        Self { kind, dim, seed, sigma: 1.0 }
    }

    fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidInput(format!("ensemble dimension must be ≥ 2, got {}", self.dim)));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidInput("ensemble scale σ must be positive".into()));
        }
        Ok(())
    }
}

/// Deterministic generator for draw `draw` of `spec`.
pub fn rng_for(spec: &EnsembleSpec, draw: u64) -> ChaCha8Rng {
    let key = spec
        .seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(spec.kind.tag() << 56)
        .wrapping_add(spec.dim as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(draw);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Real symmetric GOE matrix, `H = (A + Aᵀ)/2` with iid `N(0, σ²)` entries:
/// diagonal variance `σ²`, off-diagonal `σ²/2`.
pub fn sample_goe(spec: &EnsembleSpec, draw: u64) -> Result<Mat<f64>> {
    spec.validate()?;
    let d = spec.dim;
    let mut rng = rng_for(spec, draw);
    let a = Mat::<f64>::from_fn(d, d, |_, _| normal(&mut rng) * spec.sigma);
    Ok(Mat::<f64>::from_fn(d, d, |i, j| 0.5 * (a[(i, j)] + a[(j, i)])))
}

/// GUE matrix: diagonal variance `σ²/2`, `⟨|H_jk|²⟩ = σ²/2` off the diagonal.
pub fn sample_gue(spec: &EnsembleSpec, draw: u64) -> Result<Mat<c64>> {
    spec.validate()?;
    let d = spec.dim;
    let mut rng = rng_for(spec, draw);
    let s = spec.sigma / 2f64.sqrt();
    let a = Mat::<c64>::from_fn(d, d, |_, _| c64::new(normal(&mut rng), normal(&mut rng)) * s);
    Ok(Mat::<c64>::from_fn(d, d, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5))
}

/// GOE or GUE sample as a complex matrix.
pub fn sample_gaussian_ensemble(spec: &EnsembleSpec, draw: u64) -> Result<Mat<c64>> {
    match spec.kind {
        EnsembleKind::Goe => {
            let h = sample_goe(spec, draw)?;
            Ok(Mat::<c64>::from_fn(h.nrows(), h.ncols(), |i, j| c64::new(h[(i, j)], 0.0)))
        }
        EnsembleKind::Gue => sample_gue(spec, draw),
        _ => Err(Error::InvalidInput("Gaussian ensemble requested with a Haar kind".into())),
    }
}

/// Haar-random orthogonal matrix: QR of a Gaussian matrix with the signs of
/// `diag(R)` moved into `Q`.
pub fn sample_haar_orthogonal(spec: &EnsembleSpec, draw: u64) -> Result<Mat<f64>> {
    spec.validate()?;
    let d = spec.dim;
    let mut rng = rng_for(spec, draw);
    let g = Mat::<f64>::from_fn(d, d, |_, _| normal(&mut rng));
    let qr = g.qr();
    let mut q = qr.compute_Q();
    let r = qr.R();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Ok(q)
}

/// Haar-random unitary matrix: QR of a complex Gaussian matrix with the
/// phases of `diag(R)` moved into `Q`.
pub fn sample_haar_unitary(spec: &EnsembleSpec, draw: u64) -> Result<Mat<c64>> {
    spec.validate()?;
    let d = spec.dim;
    let mut rng = rng_for(spec, draw);
    let g = Mat::<c64>::from_fn(d, d, |_, _| c64::new(normal(&mut rng), normal(&mut rng)));
    let qr = g.qr();
    let mut q = qr.compute_Q();
    let r = qr.R();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { c64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

/// Haar sample as a complex matrix for either kind.
pub fn sample_haar(spec: &EnsembleSpec, draw: u64) -> Result<Mat<c64>> {
    match spec.kind {
        EnsembleKind::HaarO => {
            let q = sample_haar_orthogonal(spec, draw)?;
            Ok(Mat::<c64>::from_fn(q.nrows(), q.ncols(), |i, j| c64::new(q[(i, j)], 0.0)))
        }
        EnsembleKind::HaarU => sample_haar_unitary(spec, draw),
        _ => Err(Error::InvalidInput("Haar sample requested with a Gaussian kind".into())),
    }
}

/// Uniformly random unit vector in `C^dim` (a Haar column).
pub fn haar_random_state(dim: usize, seed: u64, draw: u64) -> Vec<c64> {
    let spec = EnsembleSpec { kind: EnsembleKind::HaarU, dim: dim.max(2), seed, sigma: 1.0 };
    let mut rng = rng_for(&spec, draw);
    let mut v: Vec<c64> = (0..dim).map(|_| c64::new(normal(&mut rng), normal(&mut rng))).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    v
}

/// Closed-form reference densities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    /// `(π/2) s e^{−πs²/4}`.
    WignerGoe,
    /// `(32/π²) s² e^{−4s²/π}`.
    WignerGue,
    /// `e^{−s}`.
    PoissonSpacing,
    /// `(2/Z₁)(r+r²)/(1+r+r²)^{5/2}` on `[0, 1]`, `Z₁ = 8/27`.
    RatioGoe,
    /// `(2/Z₂)(r+r²)²/(1+r+r²)^4` on `[0, 1]`, `Z₂ = 4π/(81√3)`.
    RatioGue,
    /// `2/(1+r)²` on `[0, 1]`.
    RatioPoisson,
    /// `(2πX)^{−1/2} e^{−X/2}`.
    PorterThomasO,
    /// `e^{−X}`.
    PorterThomasU,
    /// `(1/σ) exp[−z − e^{−z}]`, `z = (x−μ)/σ`.
    Gumbel { mu: f64, sigma: f64 },
    /// `(1/π)√(2 − x²)` on `[−√2, √2]`.
    Semicircle,
}

impl Distribution {
    /// Support `[lo, hi]`.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Distribution::RatioGoe | Distribution::RatioGue | Distribution::RatioPoisson => (0.0, 1.0),
            Distribution::Gumbel { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Distribution::Semicircle => (-2f64.sqrt(), 2f64.sqrt()),
            _ => (0.0, f64::INFINITY),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if !(x >= lo && x <= hi) {
            return 0.0;
        }
        match *self {
            Distribution::WignerGoe => 0.5 * PI * x * (-0.25 * PI * x * x).exp(),
            Distribution::WignerGue => 32.0 / (PI * PI) * x * x * (-4.0 * x * x / PI).exp(),
            Distribution::PoissonSpacing => (-x).exp(),
            Distribution::RatioGoe => {
                let z1 = 8.0 / 27.0;
                2.0 / z1 * (x + x * x) / (1.0 + x + x * x).powf(2.5)
            }
            Distribution::RatioGue => {
                let z2 = 4.0 * PI / (81.0 * 3f64.sqrt());
                2.0 / z2 * (x + x * x).powi(2) / (1.0 + x + x * x).powi(4)
            }
            Distribution::RatioPoisson => 2.0 / (1.0 + x).powi(2),
            Distribution::PorterThomasO => {
                if x == 0.0 {
                    f64::INFINITY
                } else {
                    (-0.5 * x).exp() / (2.0 * PI * x).sqrt()
                }
            }
            Distribution::PorterThomasU => (-x).exp(),
            Distribution::Gumbel { mu, sigma } => stats::gumbel_pdf(x, mu, sigma),
            Distribution::Semicircle => (2.0 - x * x).max(0.0).sqrt() / PI,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        match *self {
            Distribution::WignerGoe => 1.0 - (-0.25 * PI * x * x).exp(),
            Distribution::WignerGue => {
                let a: f64 = 4.0 / PI;
                let core = PI.sqrt() / (4.0 * a.powf(1.5)) * erf(a.sqrt() * x) - x * (-a * x * x).exp() / (2.0 * a);
                32.0 / (PI * PI) * core
            }
            Distribution::PoissonSpacing | Distribution::PorterThomasU => 1.0 - (-x).exp(),
            Distribution::RatioPoisson => 2.0 * x / (1.0 + x),
            Distribution::PorterThomasO => erf((0.5 * x).sqrt()),
            Distribution::Gumbel { mu, sigma } => (-(-(x - mu) / sigma).exp()).exp(),
            Distribution::Semicircle => 0.5 + (x * (2.0 - x * x).sqrt() + 2.0 * (x / 2f64.sqrt()).asin()) / (2.0 * PI),
            Distribution::RatioGoe | Distribution::RatioGue => {
                let d = *self;
                integrate(&|r| d.pdf(r), 0.0, x, 1e-12).min(1.0)
            }
        }
    }

    /// Mean by quadrature.
    pub fn mean(&self) -> f64 {
        let d = *self;
        let (lo, hi) = self.support();
        match self {
            Distribution::Gumbel { mu, sigma } => mu + sigma * 0.577_215_664_901_532_9,
            Distribution::PorterThomasO => {
                // substitute X = u² to remove the endpoint singularity
                integrate(&|u| 2.0 * u * u * u * d.pdf(u * u), 0.0, 12.0, 1e-13)
            }
            _ => integrate(&|x| x * d.pdf(x), lo, if hi.is_finite() { hi } else { 60.0 }, 1e-13),
        }
    }
}

/// Eigenvalues of one draw rescaled so that the density tends to the
/// semicircle on `[−√2, √2]`.
pub fn rescaled_eigenvalues(spec: &EnsembleSpec, draw: u64) -> Result<Vec<f64>> {
    let ev = match spec.kind {
        EnsembleKind::Goe => sample_goe(spec, draw)?
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::numeric("GOE eigenvalues", format!("{e:?}")))?,
        EnsembleKind::Gue => sample_gue(spec, draw)?
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::numeric("GUE eigenvalues", format!("{e:?}")))?,
        _ => return Err(Error::InvalidInput("semicircle check needs a Gaussian ensemble".into())),
    };
    let scale = spec.sigma * (spec.dim as f64).sqrt();
    Ok(ev.into_iter().map(|x| x / scale).collect())
}

/// KS distance of one draw's rescaled spectrum to the semicircle.
pub fn semicircle_ks(spec: &EnsembleSpec, draw: u64) -> Result<f64> {
    let x = rescaled_eigenvalues(spec, draw)?;
    Ok(stats::ks_distance(&x, |v| Distribution::Semicircle.cdf(v)))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PorterThomasReport {
    pub kind: EnsembleKind,
    pub dim: usize,
    pub samples: usize,
    pub ks: f64,
    pub mean_x: f64,
    pub var_x: f64,
}

/// Pools `X = D|c|²` over eigenvector (or Haar column) amplitudes and compares
/// with the Porter–Thomas law of the matching symmetry class.
pub fn porter_thomas_test(spec: &EnsembleSpec, n_samples: usize) -> Result<PorterThomasReport> {
    spec.validate()?;
    let d = spec.dim as f64;
    let mut x: Vec<f64> = Vec::with_capacity(n_samples);
    let mut draw = 0u64;
    while x.len() < n_samples {
        let vecs: Mat<c64> = match spec.kind {
            EnsembleKind::HaarO | EnsembleKind::HaarU => sample_haar(spec, draw)?,
            EnsembleKind::Goe => {
                let h = sample_goe(spec, draw)?;
                let evd = h.self_adjoint_eigen(Side::Lower).map_err(|e| Error::numeric("GOE", format!("{e:?}")))?;
                let u = evd.U();
                Mat::<c64>::from_fn(u.nrows(), u.ncols(), |i, j| c64::new(u[(i, j)], 0.0))
            }
            EnsembleKind::Gue => {
                let h = sample_gue(spec, draw)?;
                let evd = h.self_adjoint_eigen(Side::Lower).map_err(|e| Error::numeric("GUE", format!("{e:?}")))?;
                evd.U().to_owned()
            }
        };
        'outer: for j in 0..vecs.ncols() {
            for i in 0..vecs.nrows() {
                if x.len() == n_samples {
                    break 'outer;
                }
                x.push(d * vecs[(i, j)].norm_sqr());
            }
        }
        draw += 1;
    }
    let law = if spec.kind.beta() == 1 { Distribution::PorterThomasO } else { Distribution::PorterThomasU };
    let m = stats::moments(&x);
    Ok(PorterThomasReport {
        kind: spec.kind,
        dim: spec.dim,
        samples: x.len(),
        ks: stats::ks_distance(&x, |v| law.cdf(v)),
        mean_x: m.mean,
        var_x: m.variance,
    })
}

/// Diagonal and off-diagonal entry statistics of GOE/GUE draws.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntryVarianceReport {
    pub draws: usize,
    pub mean_entry_max_z: f64,
    pub var_diag: f64,
    pub var_off: f64,
    pub ratio: f64,
    pub ratio_se: f64,
}

fn var_and_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    (m2, ((m4 - m2 * m2) / n).sqrt())
}

/// Empirical variance of the diagonal vs off-diagonal entries over `draws`
/// samples. For GUE the off-diagonal variance is that of `|H_jk|`'s real and
/// imaginary parts combined, `⟨|H_jk|²⟩`.
pub fn entry_variance_ratio(spec: &EnsembleSpec, draws: usize) -> Result<EntryVarianceReport> {
    let d = spec.dim;
    let mut diag = Vec::with_capacity(draws * d);
    let mut off = Vec::with_capacity(draws * d * (d - 1) / 2);
    let mut sums = vec![c64::new(0.0, 0.0); d * d];
    let mut sums2 = vec![0.0f64; d * d];
    for draw in 0..draws as u64 {
        let h = sample_gaussian_ensemble(spec, draw)?;
        for j in 0..d {
            for i in 0..d {
                sums[i + d * j] += h[(i, j)];
                sums2[i + d * j] += h[(i, j)].norm_sqr();
            }
            diag.push(h[(j, j)].re);
            for i in 0..j {
                match spec.kind {
                    EnsembleKind::Goe => off.push(h[(i, j)].re),
                    _ => {
                        // each part carries half the variance of |H_ij|
                        off.push(h[(i, j)].re * 2f64.sqrt());
                    }
                }
            }
        }
    }
    let n = draws as f64;
    let mut max_z = 0.0f64;
    for (s, s2) in sums.iter().zip(&sums2) {
        let mean = *s / n;
        let var = s2 / n - mean.norm_sqr();
        if var > 0.0 {
            max_z = max_z.max(mean.norm() / (var / n).sqrt());
        }
    }
    let (vd, sd) = var_and_se(&diag);
    let (vo, so) = var_and_se(&off);
    let ratio = vd / vo;
    let ratio_se = ratio * ((sd / vd).powi(2) + (so / vo).powi(2)).sqrt();
    Ok(EntryVarianceReport { draws, mean_entry_max_z: max_z, var_diag: vd, var_off: vo, ratio, ratio_se })
}

/// Groups entering the Weingarten calculus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Orthogonal,
    Unitary,
}

/// Weingarten function for `N ≤ 2`, indexed by coset type (orthogonal) or
/// cycle type (unitary).
pub fn weingarten(group: Group, shape: &[usize], d: usize) -> Result<f64> {
    let df = d as f64;
    match (group, shape) {
        (Group::Unitary, [1]) | (Group::Orthogonal, [1]) => Ok(1.0 / df),
        (Group::Unitary, [1, 1]) => Ok(1.0 / (df * df - 1.0)),
        (Group::Unitary, [2]) => Ok(-1.0 / (df * (df * df - 1.0))),
        (Group::Orthogonal, [1, 1]) => Ok((df + 1.0) / (df * (df - 1.0) * (df + 2.0))),
        (Group::Orthogonal, [2]) => Ok(-1.0 / (df * (df - 1.0) * (df + 2.0))),
        _ => Err(Error::Domain(format!("Weingarten function of shape {shape:?} (only N ≤ 2)"))),
    }
}

/// All pairings of `{0, …, 2n−1}`.
pub fn pairings(points: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(rest: &[usize], acc: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if rest.is_empty() {
            out.push(acc.clone());
            return;
        }
        let first = rest[0];
        for k in 1..rest.len() {
            let partner = rest[k];
            let remaining: Vec<usize> = rest[1..].iter().copied().filter(|&x| x != partner).collect();
            acc.push((first, partner));
            rec(&remaining, acc, out);
            acc.pop();
        }
    }
    let pts: Vec<usize> = (0..points).collect();
    let mut out = Vec::new();
    rec(&pts, &mut Vec::new(), &mut out);
    out
}

/// Coset type of two pairings: half-lengths of the cycles of the graph whose
/// edges are the pairs of both, sorted descending.
pub fn coset_type(p: &[(usize, usize)], q: &[(usize, usize)]) -> Vec<usize> {
    let n = 2 * p.len();
    let partner = |pairs: &[(usize, usize)], v: usize| {
        pairs
            .iter()
            .find_map(|&(a, b)| if a == v { Some(b) } else if b == v { Some(a) } else { None })
            .unwrap()
    };
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        // walk alternating p- and q-edges until the cycle closes
        let mut v = start;
        let mut edges = 0;
        loop {
            seen[v] = true;
            let w = partner(p, v);
            seen[w] = true;
            edges += 1;
            let u = partner(q, w);
            edges += 1;
            if u == start {
                break;
            }
            v = u;
        }
        out.push(edges / 2);
    }
    out.sort_unstable_by(|a, b| b.cmp(a));
    out
}

/// One term of the Weingarten sum.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairingTerm {
    /// Lower-index matching (pairing of four positions, or `σ ∈ S₂`).
    pub lower: Vec<(usize, usize)>,
    /// Upper-index matching.
    pub upper: Vec<(usize, usize)>,
    pub coset_type: Vec<usize>,
    pub value: f64,
}

/// All `3 × 3` pairing terms of the orthogonal 4-point function.
pub fn orthogonal_pairing_terms(d: usize) -> Result<Vec<PairingTerm>> {
    let ps = pairings(4);
    let mut out = Vec::new();
    for p in &ps {
        for q in &ps {
            let ct = coset_type(p, q);
            out.push(PairingTerm { lower: p.clone(), upper: q.clone(), value: weingarten(Group::Orthogonal, &ct, d)?, coset_type: ct });
        }
    }
    Ok(out)
}

/// All `2 × 2` permutation terms of the unitary 4-point function. A
/// permutation is stored as pairs `(r, σ(r))`.
pub fn unitary_pairing_terms(d: usize) -> Result<Vec<PairingTerm>> {
    let perms = [vec![(0, 0), (1, 1)], vec![(0, 1), (1, 0)]];
    let mut out = Vec::new();
    for s in &perms {
        for t in &perms {
            // σ⁻¹τ is the identity iff σ = τ
            let ct = if s == t { vec![1, 1] } else { vec![2] };
            out.push(PairingTerm { lower: s.clone(), upper: t.clone(), value: weingarten(Group::Unitary, &ct, d)?, coset_type: ct });
        }
    }
    Ok(out)
}

/// Index tuple `(j, k, j′, k′, m, n, m′, n′)`.
pub type FourIndex = [usize; 8];

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// `E[c^m_j c^n_k c^{m′}_{j′} c^{n′}_{k′}]` over O(D) by summing pairing terms.
pub fn four_point_orthogonal_enumerated(idx: &FourIndex, d: usize) -> Result<f64> {
    let lower = [idx[0], idx[1], idx[2], idx[3]];
    let upper = [idx[4], idx[5], idx[6], idx[7]];
    Ok(orthogonal_pairing_terms(d)?
        .iter()
        .map(|t| {
            let dl: f64 = t.lower.iter().map(|&(a, b)| delta(lower[a], lower[b])).product();
            let du: f64 = t.upper.iter().map(|&(a, b)| delta(upper[a], upper[b])).product();
            t.value * dl * du
        })
        .sum())
}

/// Same moment from the closed nine-term expression.
pub fn four_point_orthogonal_closed(idx: &FourIndex, d: usize) -> f64 {
    let [j, k, jp, kp, m, n, mp, np] = *idx;
    let df = d as f64;
    let pre = (df + 1.0) / (df * (df - 1.0) * (df + 2.0));
    let c = 1.0 / (df + 1.0);
    let (a_mm, a_mn, a_mnp) = (delta(m, mp) * delta(n, np), delta(m, n) * delta(mp, np), delta(m, np) * delta(n, mp));
    pre * (delta(j, jp) * delta(k, kp) * (a_mm - c * (a_mn + a_mnp))
        + delta(j, k) * delta(jp, kp) * (a_mn - c * (a_mm + a_mnp))
        + delta(j, kp) * delta(k, jp) * (a_mnp - c * (a_mm + a_mn)))
}

/// `E[c^m_j c^n_k (c^{m′}_{j′})* (c^{n′}_{k′})*]` over U(D) by summing
/// permutation terms.
pub fn four_point_unitary_enumerated(idx: &FourIndex, d: usize) -> Result<f64> {
    let [j, k, jp, kp, m, n, mp, np] = *idx;
    let (lo, lo_p, up, up_p) = ([j, k], [jp, kp], [m, n], [mp, np]);
    Ok(unitary_pairing_terms(d)?
        .iter()
        .map(|t| {
            let dl: f64 = t.lower.iter().map(|&(r, s)| delta(lo[r], lo_p[s])).product();
            let du: f64 = t.upper.iter().map(|&(r, s)| delta(up[r], up_p[s])).product();
            t.value * dl * du
        })
        .sum())
}

/// Same moment from the closed four-term expression.
pub fn four_point_unitary_closed(idx: &FourIndex, d: usize) -> f64 {
    let [j, k, jp, kp, m, n, mp, np] = *idx;
    let df = d as f64;
    let direct = delta(j, jp) * delta(k, kp);
    let crossed = delta(j, kp) * delta(k, jp);
    let up_direct = delta(m, mp) * delta(n, np);
    let up_crossed = delta(m, np) * delta(n, mp);
    (direct * up_direct + crossed * up_crossed - (direct * up_crossed + crossed * up_direct) / df) / (df * df - 1.0)
}

/// Canonical index assignments for every equality pattern of four lower and
/// four upper indices realizable with `d` values (set partitions, block `b`
/// mapped to value `b`).
pub fn four_index_patterns(d: usize) -> Vec<FourIndex> {
    fn partitions(n: usize) -> Vec<[usize; 4]> {
        // restricted growth strings of length 4
        let mut out = Vec::new();
        for a in 0..1 {
            for b in 0..=a + 1 {
                let mb = a.max(b);
                for c in 0..=mb + 1 {
                    let mc = mb.max(c);
                    for e in 0..=mc + 1 {
                        out.push([a, b, c, e]);
                    }
                }
            }
        }
        out.retain(|p| p.iter().max().unwrap() + 1 <= n);
        out
    }
    let parts = partitions(d);
    let mut out = Vec::new();
    for lo in &parts {
        for up in &parts {
            out.push([lo[0], lo[1], lo[2], lo[3], up[0], up[1], up[2], up[3]]);
        }
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeingartenCheck {
    pub group: Group,
    pub dim: usize,
    pub index: FourIndex,
    pub samples: usize,
    pub empirical: f64,
    pub std_error: f64,
    pub analytic: f64,
    pub enumerated: f64,
    /// `(empirical − analytic)/std_error`; zero when both the deviation and
    /// the error vanish.
    pub z: f64,
}

struct Accumulator {
    sum: Vec<f64>,
    sum2: Vec<f64>,
}

/// Monte-Carlo check of every realizable 4-point pattern at dimension `d`.
pub fn weingarten_pattern_scan(group: Group, d: usize, n_samples: usize, seed: u64) -> Result<Vec<WeingartenCheck>> {
    if d < 3 {
        return Err(Error::InvalidInput("Weingarten checks need D ≥ 3".into()));
    }
    let patterns = four_index_patterns(d);
    let mut acc = Accumulator { sum: vec![0.0; patterns.len()], sum2: vec![0.0; patterns.len()] };
    let kind = match group {
        Group::Orthogonal => EnsembleKind::HaarO,
        Group::Unitary => EnsembleKind::HaarU,
    };
    let spec = EnsembleSpec::new(kind, d, seed);
    for draw in 0..n_samples as u64 {
        match group {
            Group::Orthogonal => {
                let q = sample_haar_orthogonal(&spec, draw)?;
                for (p, idx) in patterns.iter().enumerate() {
                    let v = q[(idx[0], idx[4])] * q[(idx[1], idx[5])] * q[(idx[2], idx[6])] * q[(idx[3], idx[7])];
                    acc.sum[p] += v;
                    acc.sum2[p] += v * v;
                }
            }
            Group::Unitary => {
                let u = sample_haar_unitary(&spec, draw)?;
                for (p, idx) in patterns.iter().enumerate() {
                    let v = u[(idx[0], idx[4])] * u[(idx[1], idx[5])] * u[(idx[2], idx[6])].conj() * u[(idx[3], idx[7])].conj();
                    // the analytic moment is real; its estimator is the real part
                    acc.sum[p] += v.re;
                    acc.sum2[p] += v.re * v.re;
                }
            }
        }
    }
    let n = n_samples as f64;
    patterns
        .iter()
        .enumerate()
        .map(|(p, idx)| {
            let mean = acc.sum[p] / n;
            let var = (acc.sum2[p] / n - mean * mean).max(0.0);
            let se = (var / (n - 1.0)).sqrt();
            let (analytic, enumerated) = match group {
                Group::Orthogonal => (four_point_orthogonal_closed(idx, d), four_point_orthogonal_enumerated(idx, d)?),
                Group::Unitary => (four_point_unitary_closed(idx, d), four_point_unitary_enumerated(idx, d)?),
            };
            let dev = mean - analytic;
            let z = if se > 0.0 { dev / se } else if dev.abs() < 1e-15 { 0.0 } else { f64::INFINITY };
            Ok(WeingartenCheck { group, dim: d, index: *idx, samples: n_samples, empirical: mean, std_error: se, analytic, enumerated, z })
        })
        .collect()
}

/// Single-pattern Monte-Carlo check.
pub fn weingarten_4point_check(group: Group, d: usize, n_samples: usize, idx: FourIndex, seed: u64) -> Result<WeingartenCheck> {
    if idx.iter().any(|&i| i >= d) {
        return Err(Error::InvalidInput(format!("indices must lie below D = {d}")));
    }
    let kind = match group {
        Group::Orthogonal => EnsembleKind::HaarO,
        Group::Unitary => EnsembleKind::HaarU,
    };
    let spec = EnsembleSpec::new(kind, d, seed);
    let (mut s, mut s2) = (0.0, 0.0);
    for draw in 0..n_samples as u64 {
        let v = match group {
            Group::Orthogonal => {
                let q = sample_haar_orthogonal(&spec, draw)?;
                q[(idx[0], idx[4])] * q[(idx[1], idx[5])] * q[(idx[2], idx[6])] * q[(idx[3], idx[7])]
            }
            Group::Unitary => {
                let u = sample_haar_unitary(&spec, draw)?;
                (u[(idx[0], idx[4])] * u[(idx[1], idx[5])] * u[(idx[2], idx[6])].conj() * u[(idx[3], idx[7])].conj()).re
            }
        };
        s += v;
        s2 += v * v;
    }
    let n = n_samples as f64;
    let mean = s / n;
    let se = ((s2 / n - mean * mean).max(0.0) / (n - 1.0)).sqrt();
    let (analytic, enumerated) = match group {
        Group::Orthogonal => (four_point_orthogonal_closed(&idx, d), four_point_orthogonal_enumerated(&idx, d)?),
        Group::Unitary => (four_point_unitary_closed(&idx, d), four_point_unitary_enumerated(&idx, d)?),
    };
    let dev = mean - analytic;
    let z = if se > 0.0 { dev / se } else if dev.abs() < 1e-15 { 0.0 } else { f64::INFINITY };
    Ok(WeingartenCheck { group, dim: d, index: idx, samples: n_samples, empirical: mean, std_error: se, analytic, enumerated, z })
}

/// Moments of `O_mn = Σ_j O_j (c^m_j)* c^n_j` under Haar rotations.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixElementMoments {
    pub group: Group,
    pub dim: usize,
    pub samples: usize,
    pub mean_diag: f64,
    pub mean_diag_se: f64,
    pub var_diag: f64,
    pub var_diag_se: f64,
    pub var_off: f64,
    pub var_off_se: f64,
    /// `Σ O_j / D`.
    pub o_bar: f64,
    /// `(mean(O²) − Ō²)/D`.
    pub leading_var_off: f64,
    /// Exact finite-D predictions from the 4-point functions.
    pub exact_var_diag: f64,
    pub exact_var_off: f64,
    pub ratio: f64,
    pub ratio_se: f64,
}

pub fn rmt_matrix_element_moments(group: Group, o_diag: &[f64], n_samples: usize, seed: u64) -> Result<MatrixElementMoments> {
    let d = o_diag.len();
    if d < 3 {
        return Err(Error::InvalidInput("matrix-element moments need D ≥ 3".into()));
    }
    let df = d as f64;
    let kind = match group {
        Group::Orthogonal => EnsembleKind::HaarO,
        Group::Unitary => EnsembleKind::HaarU,
    };
    let spec = EnsembleSpec::new(kind, d, seed);
    let mut diag = Vec::with_capacity(n_samples * d);
    let mut off2 = Vec::with_capacity(n_samples * d * (d - 1) / 2);
    for draw in 0..n_samples as u64 {
        let u = sample_haar(&spec, draw)?;
        for m in 0..d {
            for n in m..d {
                let mut acc = c64::new(0.0, 0.0);
                for j in 0..d {
                    acc += u[(j, m)].conj() * u[(j, n)] * o_diag[j];
                }
                if m == n {
                    diag.push(acc.re);
                } else {
                    off2.push(acc.norm_sqr());
                }
            }
        }
    }
    let o_bar = o_diag.iter().sum::<f64>() / df;
    let o2_bar = o_diag.iter().map(|x| x * x).sum::<f64>() / df;
    let s1 = o_diag.iter().sum::<f64>();
    let s2 = o_diag.iter().map(|x| x * x).sum::<f64>();
    // Σ_jk O_j O_k (a + b δ_jk) = a s1² + b s2
    let (exact_var_diag, exact_var_off) = match group {
        Group::Unitary => {
            let diag_moment = (s1 * s1 + s2) / (df * (df + 1.0));
            let off_moment = (s2 - s1 * s1 / df) / (df * df - 1.0);
            (diag_moment - o_bar * o_bar, off_moment)
        }
        Group::Orthogonal => {
            let pre = (df + 1.0) / (df * (df - 1.0) * (df + 2.0));
            let c = 1.0 / (df + 1.0);
            let diag_moment = pre * ((1.0 - 2.0 * c) * s1 * s1 + (2.0 - 4.0 * c) * s2);
            let off_moment = pre * ((1.0 - c) * s2 - c * s1 * s1);
            (diag_moment - o_bar * o_bar, off_moment)
        }
    };
    let (mean_diag, mean_diag_se) = stats::mean_and_se(&diag);
    let (var_diag, var_diag_se) = var_and_se(&diag);
    let (var_off, var_off_se) = stats::mean_and_se(&off2);
    let ratio = var_diag / var_off;
    let ratio_se = ratio * ((var_diag_se / var_diag).powi(2) + (var_off_se / var_off).powi(2)).sqrt();
    Ok(MatrixElementMoments {
        group,
        dim: d,
        samples: n_samples,
        mean_diag,
        mean_diag_se,
        var_diag,
        var_diag_se,
        var_off,
        var_off_se,
        o_bar,
        leading_var_off: (o2_bar - o_bar * o_bar) / df,
        exact_var_diag,
        exact_var_off,
        ratio,
        ratio_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_pairings_of_four_points() {
        let p = pairings(4);
        assert_eq!(p.len(), 3);
        assert_eq!(coset_type(&p[0], &p[0]), vec![1, 1]);
        assert_eq!(coset_type(&p[0], &p[1]), vec![2]);
    }

    #[test]
    fn fifteen_set_partitions() {
        assert_eq!(four_index_patterns(4).len(), 15 * 15);
        assert_eq!(four_index_patterns(3).len(), 14 * 14);
    }

    #[test]
    fn closed_forms_match_enumeration_on_all_patterns() {
        for d in [3, 5, 8] {
            for idx in four_index_patterns(d) {
                let a = four_point_orthogonal_closed(&idx, d);
                let b = four_point_orthogonal_enumerated(&idx, d).unwrap();
                assert!((a - b).abs() < 1e-15, "{idx:?}");
                let a = four_point_unitary_closed(&idx, d);
                let b = four_point_unitary_enumerated(&idx, d).unwrap();
                assert!((a - b).abs() < 1e-15, "{idx:?}");
            }
        }
    }

    #[test]
    fn deterministic_draws() {
        let spec = EnsembleSpec::new(EnsembleKind::Goe, 5, 7);
        assert_eq!(sample_goe(&spec, 3).unwrap(), sample_goe(&spec, 3).unwrap());
        assert_ne!(sample_goe(&spec, 3).unwrap(), sample_goe(&spec, 4).unwrap());
    }
}

//! Bipartite von Neumann entanglement of eigenstates and the Haar-random
//! references at fixed magnetization: the exact digamma sum, its large-`L`
//! asymptotics and a sampling oracle.

use std::collections::HashMap;

use faer::{Mat, Side};
use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;

use crate::basis::{magnetization, sector_dimension, SymBasis, POW3};
use crate::error::{Error, Result};
use crate::rmt::haar_random_state;
use crate::spectra::Spectrum;

const NEGATIVE_EIGENVALUE_TOL: f64 = 1e-10;
const NORM_TOL: f64 = 1e-10;

/// Contiguous cut: subsystem `A` is sites `0..l_a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartitionSpec {
    pub l: usize,
    pub l_a: usize,
}

impl BipartitionSpec {
    pub fn new(l: usize, l_a: usize) -> Result<Self> {
        if l_a == 0 || l_a >= l {
            return Err(Error::InvalidSpec(format!("subsystem size {l_a} must lie in 1..{l}")));
        }
        Ok(Self { l, l_a })
    }

    /// `f = L_A/L` as a reduced fraction.
    pub fn fraction(&self) -> (usize, usize) {
        fn gcd(a: usize, b: usize) -> usize {
            if b == 0 {
                a
            } else {
                gcd(b, a % b)
            }
        }
        let g = gcd(self.l_a, self.l);
        (self.l_a / g, self.l / g)
    }

    pub fn f(&self) -> f64 {
        self.l_a as f64 / self.l as f64
    }
}

/// Product-state amplitudes of a state of one magnetization sector.
#[derive(Clone, Debug)]
pub struct ProductAmplitudes {
    pub l: usize,
    pub codes: Vec<u32>,
    pub amps: Vec<c64>,
}

/// Expands basis coordinates over the sector's product states.
pub fn expand_to_product_basis(state: &[c64], basis: &SymBasis) -> Result<ProductAmplitudes> {
    let in_norm: f64 = state.iter().map(|z| z.norm_sqr()).sum();
    let amps = basis.to_product_amplitudes(state)?;
    let out_norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    if (out_norm - in_norm).abs() > NORM_TOL * in_norm.max(1.0) {
        return Err(Error::Consistency(format!(
            "projection bug: norm {in_norm} became {out_norm} on expansion in {}",
            basis.spec.tag()
        )));
    }
    Ok(ProductAmplitudes { l: basis.l(), codes: basis.sector_codes().to_vec(), amps })
}

/// Index layout of the Schmidt blocks of one cut: for every product state
/// its block (subsystem magnetization), row (`A` part) and column (`B` part).
#[derive(Clone, Debug)]
pub struct SchmidtLayout {
    pub cut: BipartitionSpec,
    entries: Vec<(u32, u32, u32)>,
    shapes: Vec<(usize, usize)>,
}

impl SchmidtLayout {
    pub fn new(codes: &[u32], cut: BipartitionSpec) -> Self {
        let base = POW3[cut.l_a];
        let mut block_of: HashMap<i32, usize> = HashMap::new();
        let mut rows: Vec<HashMap<u32, u32>> = Vec::new();
        let mut cols: Vec<HashMap<u32, u32>> = Vec::new();
        let mut entries = Vec::with_capacity(codes.len());
        for &s in codes {
            let (a, b) = (s % base, s / base);
            let ma = magnetization(a, cut.l_a);
            let blk = *block_of.entry(ma).or_insert_with(|| {
                rows.push(HashMap::new());
                cols.push(HashMap::new());
                rows.len() - 1
            });
            let nr = rows[blk].len() as u32;
            let r = *rows[blk].entry(a).or_insert(nr);
            let nc = cols[blk].len() as u32;
            let c = *cols[blk].entry(b).or_insert(nc);
            entries.push((blk as u32, r, c));
        }
        let shapes = rows.iter().zip(&cols).map(|(r, c)| (r.len(), c.len())).collect();
        Self { cut, entries, shapes }
    }

    /// Number of Schmidt blocks.
    pub fn blocks(&self) -> usize {
        self.shapes.len()
    }

    /// Entanglement spectrum (eigenvalues of `ρ_A`) from all blocks.
    pub fn spectrum(&self, amps: &[c64]) -> Result<Vec<f64>> {
        if amps.len() != self.entries.len() {
            return Err(Error::InvalidPair("amplitudes do not match the Schmidt layout".into()));
        }
        let mut psi: Vec<Mat<c64>> = self.shapes.iter().map(|&(r, c)| Mat::<c64>::zeros(r, c)).collect();
        for (&(b, r, c), &z) in self.entries.iter().zip(amps) {
            psi[b as usize][(r as usize, c as usize)] = z;
        }
        let mut out = Vec::new();
        for p in &psi {
            // the smaller Gram matrix carries the same nonzero spectrum
            let rho = if p.nrows() <= p.ncols() { p * p.adjoint() } else { p.adjoint() * p };
            let ev = rho
                .self_adjoint_eigenvalues(Side::Lower)
                .map_err(|e| Error::numeric("reduced density matrix", format!("{e:?}")))?;
            out.extend(ev);
        }
        Ok(out)
    }

    pub fn entropy(&self, amps: &[c64]) -> Result<f64> {
        entropy_from_spectrum(&self.spectrum(amps)?)
    }
}

/// `−Σ p ln p`, clipping tiny negative eigenvalues.
pub fn entropy_from_spectrum(p: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &x in p {
        if x < -NEGATIVE_EIGENVALUE_TOL {
            return Err(Error::numeric("entanglement entropy", format!("negative eigenvalue {x:e} of ρ_A")));
        }
        if x > 0.0 {
            s -= x * x.ln();
        }
    }
    Ok(s)
}

/// Entropy of a state given over product states.
pub fn entanglement_entropy(state: &ProductAmplitudes, cut: BipartitionSpec) -> Result<f64> {
    if cut.l != state.l {
        return Err(Error::InvalidPair(format!("cut on L = {} for a state on L = {}", cut.l, state.l)));
    }
    let norm: f64 = state.amps.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidInput(format!("state norm {norm} is not 1")));
    }
    SchmidtLayout::new(&state.codes, cut).entropy(&state.amps)
}

/// Dense `ρ_A` over all `3^{L_A}` subsystem states (small-`L` oracle).
pub fn dense_reduced_density_matrix(state: &ProductAmplitudes, cut: BipartitionSpec) -> Mat<c64> {
    let base = POW3[cut.l_a] as usize;
    let nb = POW3[cut.l - cut.l_a] as usize;
    let mut psi = Mat::<c64>::zeros(base, nb);
    for (&s, &z) in state.codes.iter().zip(&state.amps) {
        psi[(s as usize % base, s as usize / base)] = z;
    }
    &psi * psi.adjoint()
}

fn dim_f64(n: i64, l: usize) -> Result<f64> {
    if n < 0 || n > 2 * l as i64 {
        return Ok(0.0);
    }
    Ok(sector_dimension(n, l)? as f64)
}

/// Exact Haar average of `S_A` at fixed particle number `N = M + L`.
pub fn page_exact_sum(n: i64, l: usize, l_a: usize) -> Result<f64> {
    BipartitionSpec::new(l, l_a)?;
    let d_n = dim_f64(n, l)?;
    if d_n == 0.0 {
        return Err(Error::InvalidSpec(format!("empty sector N = {n}, L = {l}")));
    }
    let l_b = l - l_a;
    let psi_n = digamma(d_n + 1.0);
    let mut total = 0.0;
    for n_a in 0..=(2 * l_a as i64) {
        let d_a = dim_f64(n_a, l_a)?;
        let d_b = dim_f64(n - n_a, l_b)?;
        if d_a == 0.0 || d_b == 0.0 {
            continue;
        }
        let rho = d_a * d_b / d_n;
        let phi = psi_n - digamma(d_a.max(d_b) + 1.0) - ((d_a - 1.0) / (2.0 * d_b)).min((d_b - 1.0) / (2.0 * d_a));
        total += rho * phi;
    }
    Ok(total)
}

/// Sum of the weights `d_A d_B / d_N` (equals one).
pub fn page_weight_sum(n: i64, l: usize, l_a: usize) -> Result<f64> {
    let d_n = dim_f64(n, l)?;
    let mut w = 0.0;
    for n_a in 0..=(2 * l_a as i64) {
        w += dim_f64(n_a, l_a)? * dim_f64(n - n_a, l - l_a)? / d_n;
    }
    Ok(w)
}

/// Volume-law prefactor `β(n)` of the sector dimension at filling `n = N/L`.
pub fn beta(n: f64) -> Result<f64> {
    if !(n > 0.0 && n < 2.0) {
        return Err(Error::Domain(format!("β(n) undefined at filling n = {n}")));
    }
    let root = (1.0 - 3.0 * n * (n - 2.0)).sqrt();
    Ok((n - 2.0) * (2.0 - n).ln() + (n - 1.0) * 2f64.ln() + (7.0 - 3.0 * n + root).ln() - n * (n - 1.0 + root).ln())
}

const FD_STEP: f64 = 1e-5;

/// `β′(n)` by central differences.
pub fn beta_prime(n: f64) -> Result<f64> {
    Ok((beta(n + FD_STEP)? - beta(n - FD_STEP)?) / (2.0 * FD_STEP))
}

/// `β″(n)` by central differences.
pub fn beta_second(n: f64) -> Result<f64> {
    Ok((beta(n + FD_STEP)? - 2.0 * beta(n)? + beta(n - FD_STEP)?) / (FD_STEP * FD_STEP))
}

/// Large-`L` form of the fixed-`N` Haar average; `f > 1/2` is mapped to `1 − f`.
pub fn page_asymptotic(n: f64, f: f64, l: usize) -> Result<f64> {
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::Domain(format!("subsystem fraction {f} outside (0, 1)")));
    }
    let f = if f > 0.5 { 1.0 - f } else { f };
    let lf = l as f64;
    let half = (f - 0.5).abs() < 1e-12;
    let at_max = (n - 1.0).abs() < 1e-9;
    let mut s = beta(n)? * f * lf;
    if half {
        let b1 = beta_prime(n)?;
        let b2 = beta_second(n)?;
        // β′ vanishes at the maximum, where the term drops out
        if !at_max {
            s -= b1.abs() / (2.0 * std::f64::consts::PI * b2.abs()).sqrt() * lf.sqrt();
        }
    }
    let delta = if half && at_max { 1.0 } else { 0.0 };
    s += 0.5 * (f + (1.0 - f).ln() - delta);
    Ok(s)
}

/// Leading volume-law term `β(n) f L` (with `f ≤ 1/2` folding).
pub fn page_leading(n: f64, f: f64, l: usize) -> Result<f64> {
    let f = if f > 0.5 { 1.0 - f } else { f };
    Ok(beta(n)? * f * l as f64)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PagePoint {
    pub l_a: usize,
    pub f: f64,
    pub mean: f64,
    pub std: f64,
    pub std_error: f64,
    pub exact_sum: f64,
    pub asymptotic: f64,
    pub leading: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PageCurve {
    pub l: usize,
    pub m: i32,
    pub n_states: usize,
    pub selection: String,
    pub warning: Option<String>,
    pub points: Vec<PagePoint>,
}

/// Average entanglement of the `n_states` eigenstates closest to the median
/// of the pooled spectrum of `sectors` (all of one `(L, M)`).
pub fn eigenstate_page_curve(sectors: &[(&SymBasis, &Spectrum)], n_states: usize, cuts: &[usize]) -> Result<PageCurve> {
    let (first, _) = sectors.first().ok_or_else(|| Error::InvalidInput("no sectors given".into()))?;
    let (l, m) = (first.l(), first.spec.m);
    if sectors.iter().any(|(b, s)| b.l() != l || b.spec.m != m || b.spec != s.spec) {
        return Err(Error::InvalidPair("page curve needs sectors of one (L, M) with matching spectra".into()));
    }
    let mut pooled: Vec<(f64, usize, usize)> = Vec::new();
    for (si, (_, s)) in sectors.iter().enumerate() {
        for (i, &e) in s.eigenvalues.iter().enumerate() {
            pooled.push((e, si, i));
        }
    }
    let mut energies: Vec<f64> = pooled.iter().map(|p| p.0).collect();
    energies.sort_by(|a, b| a.total_cmp(b));
    let median = crate::stats::quantile_sorted(&energies, 0.5);
    pooled.sort_by(|a, b| (a.0 - median).abs().total_cmp(&(b.0 - median).abs()));
    let warning = (n_states > pooled.len()).then(|| format!("requested {n_states} states, only {} available", pooled.len()));
    pooled.truncate(n_states);
    let cut_specs: Vec<BipartitionSpec> = cuts.iter().map(|&la| BipartitionSpec::new(l, la)).collect::<Result<_>>()?;
    let layouts: Vec<SchmidtLayout> = cut_specs.iter().map(|&c| SchmidtLayout::new(first.sector_codes(), c)).collect();
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(pooled.len()); cuts.len()];
    for &(_, si, i) in &pooled {
        let (basis, spec) = sectors[si];
        let v = spec.vectors()?;
        let coeffs: Vec<c64> = (0..v.nrows()).map(|r| v[(r, i)]).collect();
        let state = expand_to_product_basis(&coeffs, basis)?;
        for (k, lay) in layouts.iter().enumerate() {
            values[k].push(lay.entropy(&state.amps)?);
        }
    }
    let n = (m + l as i32) as i64;
    let filling = n as f64 / l as f64;
    let mut points = Vec::new();
    for (k, cut) in cut_specs.iter().enumerate() {
        let (mean, se) = crate::stats::mean_and_se(&values[k]);
        let std = se * (values[k].len() as f64).sqrt();
        points.push(PagePoint {
            l_a: cut.l_a,
            f: cut.f(),
            mean,
            std,
            std_error: se,
            exact_sum: page_exact_sum(n, l, cut.l_a)?,
            asymptotic: page_asymptotic(filling, cut.f(), l)?,
            leading: page_leading(filling, cut.f(), l)?,
        });
    }
    Ok(PageCurve {
        l,
        m,
        n_states: pooled.len(),
        selection: "closest to the median of the pooled spectrum".into(),
        warning,
        points,
    })
}

/// Mean and standard error of `S_A` over Haar-random states of the
/// magnetization sector `(L, M)`.
pub fn haar_page_average(l: usize, m: i32, l_a: usize, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let cut = BipartitionSpec::new(l, l_a)?;
    let codes = crate::basis::sector_codes(l, m);
    let layout = SchmidtLayout::new(&codes, cut);
    let mut s = Vec::with_capacity(samples);
    for draw in 0..samples as u64 {
        let amps = haar_random_state(codes.len(), seed, draw);
        s.push(layout.entropy(&amps)?);
    }
    Ok(crate::stats::mean_and_se(&s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_maximum() {
        assert!((beta(1.0).unwrap() - 3f64.ln()).abs() < 1e-14);
        assert!(beta_prime(1.0).unwrap().abs() < 1e-8);
        assert!(beta(0.0).is_err());
    }

    #[test]
    fn weights_sum_to_one() {
        for (n, l, la) in [(8, 8, 4), (5, 7, 3), (12, 12, 5)] {
            assert!((page_weight_sum(n, l, la).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn maximally_entangled_pair() {
        // (|+−⟩ + |−+⟩ + |00⟩)/√3 on two sites: codes 2+0·3, 0+2·3, 1+1·3
        let a = 1.0 / 3f64.sqrt();
        let state = ProductAmplitudes { l: 2, codes: vec![2, 4, 6], amps: vec![c64::new(a, 0.0); 3] };
        let s = entanglement_entropy(&state, BipartitionSpec::new(2, 1).unwrap()).unwrap();
        assert!((s - 3f64.ln()).abs() < 1e-12);
    }
}

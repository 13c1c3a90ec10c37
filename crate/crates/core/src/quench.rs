//! Unitary dynamics in the energy eigenbasis: `O(t)`, the diagonal and
//! microcanonical ensembles, and temporal fluctuations.

use faer::Mat;
use serde::Serialize;

use crate::basis::{sector_codes, SectorSpec, POW3};
use crate::eth::elements::{EigenSector, MatrixElementSet};
use crate::hamiltonian::{hamiltonian_operator, ModelParams};
use crate::{c64, Error, Result};

/// Tolerance on the weight of the initial state captured by the sectors.
pub const NORM_TOL: f64 = 1e-10;
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Default microcanonical window in units of `σ_E`.
pub const DEFAULT_WINDOW_SIGMA: f64 = 0.4;
pub const MIN_WINDOW_STATES: usize = 20;

/// Initial product states and eigenstates of another Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitialState {
    /// `+, −, +, −, …` (trits `2, 0, 2, 0, …`).
    Neel,
    /// Every site in `S^z = 0`.
    Zeros,
    /// Eigenstate number `index` (ascending energy) of the periodic
    /// Hamiltonian at `(λ′, Δ′)` in the full `M` sector.
    Eigenstate { lambda: f64, delta: f64, index: usize },
}

fn product_state(l: usize, m: i32, trits: impl Fn(usize) -> u32) -> Result<Vec<c64>> {
    let code: u32 = (0..l).map(|j| trits(j) * POW3[j]).sum();
    let codes = sector_codes(l, m);
    let p = codes
        .binary_search(&code)
        .map_err(|_| Error::InvalidSpec(format!("the product state is not in the M = {m} sector")))?;
    let mut amps = vec![c64::new(0.0, 0.0); codes.len()];
    amps[p] = c64::new(1.0, 0.0);
    Ok(amps)
}

/// Amplitudes of the initial state over `sector_codes(l, m)`.
pub fn initial_amplitudes(init: InitialState, l: usize, m: i32) -> Result<Vec<c64>> {
    match init {
        InitialState::Neel => product_state(l, m, |j| if j % 2 == 0 { 2 } else { 0 }),
        InitialState::Zeros => product_state(l, m, |_| 1),
        InitialState::Eigenstate { lambda, delta, index } => {
            let params = ModelParams::pbc(delta, lambda);
            let op = hamiltonian_operator(&params, l)?;
            let codes = sector_codes(l, m);
            let n = codes.len();
            if index >= n {
                return Err(Error::InvalidInput(format!("eigenstate {index} of a sector with {n} states")));
            }
            let mut h = Mat::<f64>::zeros(n, n);
            for (b, &s) in codes.iter().enumerate() {
                let mut bad = false;
                op.apply(s, |t, w| match codes.binary_search(&t) {
                    Ok(a) => h[(a, b)] += w.re,
                    Err(_) => bad = true,
                });
                if bad {
                    return Err(Error::Consistency("Hamiltonian leaves the magnetization sector".into()));
                }
            }
            let evd = h
                .self_adjoint_eigen(faer::Side::Lower)
                .map_err(|e| Error::numeric("initial eigenstate", format!("{e:?}")))?;
            let u = evd.U();
            Ok((0..n).map(|i| c64::new(u[(i, index)], 0.0)).collect())
        }
    }
}

/// Overlaps of an initial state with the eigenstates of every sector.
#[derive(Clone, Debug, Serialize)]
pub struct QuenchSetup {
    pub l: usize,
    pub m: i32,
    pub sectors: Vec<SectorSpec>,
    /// Start of each sector in `energies` and `c`.
    pub offsets: Vec<usize>,
    pub energies: Vec<f64>,
    #[serde(skip)]
    pub c: Vec<c64>,
    pub norm: f64,
    pub e_bar: f64,
    pub delta_e0: f64,
}

impl QuenchSetup {
    /// `amps` over `sector_codes(l, m)`; the sectors must span the state.
    pub fn new(sectors: &[EigenSector], amps: &[c64]) -> Result<Self> {
        let first = sectors.first().ok_or_else(|| Error::InvalidInput("no sectors".into()))?.spec();
        let (l, m) = (first.l, first.m);
        let input_norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        if (input_norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidInput(format!("initial state norm {input_norm}")));
        }
        let mut offsets = Vec::new();
        let mut energies = Vec::new();
        let mut c = Vec::new();
        for s in sectors {
            if s.spec().l != l || s.spec().m != m {
                return Err(Error::InvalidPair("sectors from different (L, M) families".into()));
            }
            offsets.push(energies.len());
            let coeffs = s.basis.from_product_amplitudes(amps)?;
            let v = s.spectrum.vectors()?;
            for k in 0..v.ncols() {
                let mut acc = c64::new(0.0, 0.0);
                for (i, &x) in coeffs.iter().enumerate() {
                    acc += v[(i, k)].conj() * x;
                }
                c.push(acc);
            }
            energies.extend_from_slice(s.energies());
        }
        offsets.push(energies.len());
        let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidInput(format!(
                "the sectors capture weight {norm} of the initial state"
            )));
        }
        let e_bar: f64 = c.iter().zip(&energies).map(|(z, e)| z.norm_sqr() * e).sum();
        let e2: f64 = c.iter().zip(&energies).map(|(z, e)| z.norm_sqr() * e * e).sum();
        Ok(Self {
            l,
            m,
            sectors: sectors.iter().map(|s| s.spec()).collect(),
            offsets,
            energies,
            c,
            norm,
            e_bar,
            delta_e0: (e2 - e_bar * e_bar).max(0.0).sqrt(),
        })
    }

    fn range(&self, s: usize) -> std::ops::Range<usize> {
        self.offsets[s]..self.offsets[s + 1]
    }

    fn check_elements(&self, elements: &[MatrixElementSet]) -> Result<()> {
        if elements.len() != self.sectors.len() {
            return Err(Error::InvalidPair(format!(
                "{} element blocks for {} sectors",
                elements.len(),
                self.sectors.len()
            )));
        }
        for (e, s) in elements.iter().zip(&self.sectors) {
            if e.bra != *s || e.ket != *s {
                return Err(Error::InvalidPair(format!("element block for {} given for {}", e.ket.tag(), s.tag())));
            }
        }
        Ok(())
    }

    /// Amplitudes `c_m e^{−iE_m t}`.
    pub fn amplitudes(&self, t: f64) -> Vec<c64> {
        self.c
            .iter()
            .zip(&self.energies)
            .map(|(c, e)| c * c64::from_polar(1.0, -e * t))
            .collect()
    }
}

/// `a† O a` within one sector block.
fn quadratic_form(set: &MatrixElementSet, a: &[c64]) -> c64 {
    let mut acc = c64::new(0.0, 0.0);
    for (n, &an) in a.iter().enumerate() {
        if an == c64::new(0.0, 0.0) {
            continue;
        }
        let mut col = c64::new(0.0, 0.0);
        for (m, am) in a.iter().enumerate() {
            col += am.conj() * set.get(m, n);
        }
        acc += col * an;
    }
    acc
}

/// `O(t)` for an observable whose blocks between different sectors vanish.
pub fn evolve_expectation(setup: &QuenchSetup, elements: &[MatrixElementSet], times: &[f64]) -> Result<Vec<c64>> {
    setup.check_elements(elements)?;
    Ok(times
        .iter()
        .map(|&t| {
            let a = setup.amplitudes(t);
            elements
                .iter()
                .enumerate()
                .map(|(s, set)| quadratic_form(set, &a[setup.range(s)]))
                .sum()
        })
        .collect())
}

/// `Σ |c_m|² O_mm`.
pub fn diagonal_ensemble(setup: &QuenchSetup, elements: &[MatrixElementSet]) -> Result<f64> {
    setup.check_elements(elements)?;
    let mut acc = 0.0;
    for (s, set) in elements.iter().enumerate() {
        for (i, idx) in setup.range(s).enumerate() {
            acc += setup.c[idx].norm_sqr() * set.get(i, i).re;
        }
    }
    Ok(acc)
}

#[derive(Clone, Debug, Serialize)]
pub struct MicrocanonicalAverage {
    pub value: f64,
    pub e_bar: f64,
    pub width: f64,
    pub states: usize,
    pub warning: Option<String>,
}

/// Mean of `O_mm` over `|E_m − Ē| < ΔE/2`, widening by 1.5 until the window
/// holds [`MIN_WINDOW_STATES`] states.
pub fn microcanonical_average(energies: &[f64], diagonal: &[f64], e_bar: f64, width: f64) -> Result<MicrocanonicalAverage> {
    if energies.len() != diagonal.len() || energies.is_empty() {
        return Err(Error::InvalidPair("energies and diagonal elements differ in length".into()));
    }
    if !(width > 0.0) {
        return Err(Error::InvalidSpec(format!("window width {width} must be positive")));
    }
    let need = MIN_WINDOW_STATES.min(energies.len());
    let mut w = width;
    let mut widened = 0;
    loop {
        let picked: Vec<f64> = energies
            .iter()
            .zip(diagonal)
            .filter(|(e, _)| (*e - e_bar).abs() < 0.5 * w)
            .map(|(_, o)| *o)
            .collect();
        if picked.len() >= need {
            return Ok(MicrocanonicalAverage {
                value: picked.iter().sum::<f64>() / picked.len() as f64,
                e_bar,
                width: w,
                states: picked.len(),
                warning: (widened > 0).then(|| format!("window widened {widened} times to ΔE = {w}")),
            });
        }
        w *= 1.5;
        widened += 1;
    }
}

/// Standard deviation of a spectrum.
pub fn energy_spread(energies: &[f64]) -> f64 {
    let n = energies.len() as f64;
    let mean = energies.iter().sum::<f64>() / n;
    (energies.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n).sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct TemporalReport {
    pub t_max: f64,
    pub samples: usize,
    pub mean: f64,
    pub empirical_variance: f64,
    /// `Σ_{m≠n} |c_m|²|c_n|²|O_mn|²`.
    pub analytic_variance: f64,
    /// `max_{m≠n} |O_mn|²`.
    pub bound: f64,
    pub degenerate_pairs: usize,
    pub max_imaginary: f64,
}

/// Fluctuations of `O(t)` at `samples` evenly spaced times in `(0, T)`.
pub fn temporal_fluctuations(setup: &QuenchSetup, elements: &[MatrixElementSet], t_max: f64, samples: usize) -> Result<TemporalReport> {
    if samples < 2 || !(t_max > 0.0) {
        return Err(Error::InvalidSpec("need T > 0 and at least two samples".into()));
    }
    let times: Vec<f64> = (0..samples).map(|i| t_max * (i as f64 + 0.5) / samples as f64).collect();
    let series = evolve_expectation(setup, elements, &times)?;
    let max_imaginary = series.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let re: Vec<f64> = series.iter().map(|z| z.re).collect();
    let mean = re.iter().sum::<f64>() / samples as f64;
    let empirical_variance = re.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / samples as f64;
    let mut analytic = 0.0;
    let mut bound = 0.0f64;
    let mut degenerate = 0;
    for (s, set) in elements.iter().enumerate() {
        let r = setup.range(s);
        let e = &setup.energies[r.clone()];
        let c = &setup.c[r];
        for n in 0..set.cols() {
            for m in 0..set.rows() {
                if m == n {
                    continue;
                }
                let a = set.abs2(m, n);
                bound = bound.max(a);
                analytic += c[m].norm_sqr() * c[n].norm_sqr() * a;
                if m < n && (e[m] - e[n]).abs() < DEGENERACY_TOL {
                    degenerate += 1;
                }
            }
        }
    }
    Ok(TemporalReport {
        t_max,
        samples,
        mean,
        empirical_variance,
        analytic_variance: analytic,
        bound,
        degenerate_pairs: degenerate,
        max_imaginary,
    })
}

/// Exact average of `O(t)` over `[0, T]` and the bound
/// `(2/T) Σ_{m≠n} |c_m c_n O_mn| / |ω_mn|` on its distance to the diagonal ensemble.
#[derive(Clone, Debug, Serialize)]
pub struct LongTimeAverage {
    pub t_max: f64,
    pub average: f64,
    pub diagonal_ensemble: f64,
    pub bound: f64,
}

pub fn long_time_average(setup: &QuenchSetup, elements: &[MatrixElementSet], t_max: f64) -> Result<LongTimeAverage> {
    let de = diagonal_ensemble(setup, elements)?;
    let mut acc = c64::new(0.0, 0.0);
    let mut k = 0.0;
    for (s, set) in elements.iter().enumerate() {
        let r = setup.range(s);
        let e = &setup.energies[r.clone()];
        let c = &setup.c[r];
        for n in 0..set.cols() {
            for m in 0..set.rows() {
                if m == n {
                    continue;
                }
                let w = e[m] - e[n];
                let term = c[m].conj() * c[n] * set.get(m, n);
                if w.abs() < DEGENERACY_TOL {
                    acc += term;
                    continue;
                }
                // (1/T)∫_0^T e^{iωt} dt
                let avg = (c64::from_polar(1.0, w * t_max) - 1.0) / c64::new(0.0, w * t_max);
                acc += term * avg;
                k += 2.0 * term.norm() / w.abs();
            }
        }
    }
    Ok(LongTimeAverage { t_max, average: de + acc.re, diagonal_ensemble: de, bound: k / t_max })
}

/// `⟨Ψ(t)|H|Ψ(t)⟩` and `⟨Ψ(t)|Ψ(t)⟩` from the state rebuilt over product states.
pub fn energy_and_norm(setup: &QuenchSetup, sectors: &[EigenSector], params: &ModelParams, t: f64) -> Result<(f64, f64)> {
    let codes = sector_codes(setup.l, setup.m);
    let mut psi = vec![c64::new(0.0, 0.0); codes.len()];
    let a = setup.amplitudes(t);
    for (s, sec) in sectors.iter().enumerate() {
        let v = sec.spectrum.vectors()?;
        let part = &a[setup.range(s)];
        let coeffs: Vec<c64> = (0..v.nrows())
            .map(|i| (0..v.ncols()).map(|k| v[(i, k)] * part[k]).sum())
            .collect();
        for (p, z) in sec.basis.to_product_amplitudes(&coeffs)?.into_iter().enumerate() {
            psi[p] += z;
        }
    }
    let op = hamiltonian_operator(params, setup.l)?;
    let mut energy = c64::new(0.0, 0.0);
    for (b, &s) in codes.iter().enumerate() {
        if psi[b] == c64::new(0.0, 0.0) {
            continue;
        }
        op.apply(s, |t2, w| {
            if let Ok(a2) = codes.binary_search(&t2) {
                energy += psi[a2].conj() * w * psi[b];
            }
        });
    }
    Ok((energy.re, psi.iter().map(|z| z.norm_sqr()).sum()))
}


//! Spectral functions of off-diagonal matrix elements: the frequency-binned
//! variance (`var`), the Gaussian-broadened autocorrelation transform
//! (`corr`) and its density-of-states rescaling (`resc`).
//!
//! Elements are pooled over *families*: unions of symmetry sectors whose pairs
//! all count in the variance denominator, including pairs whose elements
//! vanish by symmetry.

use serde::Serialize;
use statrs::function::erf::erf;

use super::diagonal::central_density;
use super::elements::MatrixElementSet;
use crate::spectra::central_window;
use crate::{Error, Result};

/// Gaussian tails beyond this many widths are dropped (`e^{−32}`).
const KERNEL_CUTOFF: f64 = 8.0;

/// Bins on `|ω|`: `[0, ω_min)`, logarithmic up to 1, linear above.
#[derive(Clone, Debug, Serialize)]
pub struct OmegaBins {
    pub edges: Vec<f64>,
    /// Index of the first linear bin.
    pub first_linear: usize,
}

impl OmegaBins {
    pub fn log_linear(omega_min: f64, n_log: usize, omega_max: f64, linear_width: f64) -> Result<Self> {
        if !(omega_min > 0.0 && omega_min < 1.0 && omega_max > 1.0 && linear_width > 0.0 && n_log > 0) {
            return Err(Error::InvalidSpec(format!(
                "bad ω bins: min {omega_min}, {n_log} log bins, max {omega_max}, width {linear_width}"
            )));
        }
        let mut edges = vec![0.0];
        let ratio = (1.0 / omega_min).ln() / n_log as f64;
        for i in 0..n_log {
            edges.push(omega_min * (ratio * i as f64).exp());
        }
        let first_linear = edges.len();
        let n_lin = ((omega_max - 1.0) / linear_width).ceil() as usize;
        for i in 0..=n_lin {
            edges.push(1.0 + linear_width * i as f64);
        }
        Ok(Self { edges, first_linear })
    }

    /// Plain equal-width bins on `[0, omega_max]`.
    pub fn linear(omega_max: f64, width: f64) -> Result<Self> {
        if !(omega_max > 0.0 && width > 0.0) {
            return Err(Error::InvalidSpec("bad linear ω bins".into()));
        }
        let n = (omega_max / width).ceil() as usize;
        Ok(Self { edges: (0..=n).map(|i| width * i as f64).collect(), first_linear: 0 })
    }

    pub fn len(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Geometric centres for logarithmic bins, midpoints otherwise.
    pub fn centers(&self) -> Vec<f64> {
        (0..self.len())
            .map(|b| {
                let (lo, hi) = (self.edges[b], self.edges[b + 1]);
                if b > 0 && b < self.first_linear {
                    (lo * hi).sqrt()
                } else {
                    0.5 * (lo + hi)
                }
            })
            .collect()
    }

    /// Bin with `edge_b ≤ w < edge_{b+1}`.
    #[inline]
    pub fn locate(&self, w: f64) -> Option<usize> {
        let b = self.edges.partition_point(|&e| e <= w);
        (b >= 1 && b < self.edges.len()).then(|| b - 1)
    }
}

/// Uniform grid `0, h, 2h, …` up to `omega_max`.
pub fn uniform_grid(omega_max: f64, h: f64) -> Vec<f64> {
    let n = (omega_max / h).round() as usize;
    (0..=n).map(|i| h * i as f64).collect()
}

/// Number of unordered pairs of `sorted` with `|E_i − E_j| < x`.
pub fn pairs_below(sorted: &[f64], x: f64) -> f64 {
    let mut count = 0u64;
    let mut i = 0;
    for j in 0..sorted.len() {
        while i < j && sorted[j] - sorted[i] >= x {
            i += 1;
        }
        count += (j - i) as u64;
    }
    count as f64
}

/// Mean spacing over the central `fraction` of a sorted spectrum.
pub fn mean_central_spacing(sorted: &[f64], fraction: f64) -> f64 {
    let (lo, hi) = central_window(sorted.len(), fraction);
    if hi < lo + 2 {
        return f64::NAN;
    }
    (sorted[hi - 1] - sorted[lo]) / (hi - lo - 1) as f64
}

/// `σ = 0.1 ω_H`, with `ω_H` the central-10% spacing averaged over families.
pub fn default_broadening(families: &[&[f64]]) -> f64 {
    let mut acc = 0.0;
    for f in families {
        let mut e = f.to_vec();
        e.sort_by(|a, b| a.total_cmp(b));
        acc += mean_central_spacing(&e, 0.1);
    }
    0.1 * acc / families.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralKind {
    Var,
    Corr,
    Resc,
}

/// `|f(ω)|²` on a grid (or at bin centres for `var`).
#[derive(Clone, Debug, Serialize)]
pub struct SpectralFunction {
    pub kind: SpectralKind,
    pub label: String,
    pub l: usize,
    pub omega: Vec<f64>,
    /// `None` for empty bins.
    pub values: Vec<Option<f64>>,
    /// Mean central density of states `Ω`.
    pub omega_dos: f64,
    pub sigma_e2: f64,
    pub broadening: Option<f64>,
    pub bin_edges: Option<Vec<f64>>,
    /// Pairs per bin, `var` only.
    pub pair_counts: Option<Vec<f64>>,
}

impl SpectralFunction {
    /// Value at the grid point or bin nearest to `w`.
    pub fn at(&self, w: f64) -> Option<f64> {
        let i = self
            .omega
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - w).abs().total_cmp(&(b.1 - w).abs()))?
            .0;
        self.values[i]
    }
}

/// `√2 exp(ω²/(4σ_E²))`.
#[inline]
pub fn resc_factor(omega: f64, sigma_e2: f64) -> f64 {
    std::f64::consts::SQRT_2 * (omega * omega / (4.0 * sigma_e2)).exp()
}

/// Streaming accumulator for one observable at one system size.
#[derive(Clone, Debug)]
pub struct SpectralAccumulator {
    label: String,
    l: usize,
    prefactor: f64,
    bins: OmegaBins,
    grid: Vec<f64>,
    sigma: f64,
    zero_window: f64,
    families: usize,
    dim_total: usize,
    omega_dos_sum: f64,
    e_n: f64,
    e_sum: f64,
    e_sumsq: f64,
    pair_counts: Vec<f64>,
    sum_abs2: Vec<f64>,
    corr: Vec<f64>,
    zero_pairs: f64,
    zero_abs2: f64,
    /// Integral of the broadened weight over `[0, zero_window)`.
    zero_corr_mass: f64,
    offdiag_sum: f64,
}

/// Outputs of an accumulator.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralSet {
    pub var: SpectralFunction,
    pub corr: SpectralFunction,
    pub resc: SpectralFunction,
    /// Mean of the broadened `corr` over `[0, w)` divided by the variance
    /// estimate from pairs with `|ω| < w`.
    pub corr_var_ratio_zero: Option<f64>,
    /// `ρ(0)/(DΩ)` from the ordered pair density in `|ω| < w`, the value the
    /// corr/var ratio takes for structureless elements at this DOS.
    pub pair_density_ratio_zero: f64,
    pub zero_window: f64,
    /// `(L/D) Σ_{m≠n} |O_mn|²` over ordered pairs.
    pub offdiag_weight: f64,
    pub dim: usize,
    pub families: usize,
}

impl SpectralAccumulator {
    /// `prefactor` is `L` for intensive translation-invariant sums.
    pub fn new(label: impl Into<String>, l: usize, prefactor: f64, bins: OmegaBins, grid: Vec<f64>, sigma: f64, zero_window: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidSpec(format!("broadening σ = {sigma} must be positive")));
        }
        if grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidSpec("ω grid must be ascending".into()));
        }
        let nb = bins.len();
        let ng = grid.len();
        Ok(Self {
            label: label.into(),
            l,
            prefactor,
            bins,
            grid,
            sigma,
            zero_window,
            families: 0,
            dim_total: 0,
            omega_dos_sum: 0.0,
            e_n: 0.0,
            e_sum: 0.0,
            e_sumsq: 0.0,
            pair_counts: vec![0.0; nb],
            sum_abs2: vec![0.0; nb],
            corr: vec![0.0; ng],
            zero_pairs: 0.0,
            zero_abs2: 0.0,
            zero_corr_mass: 0.0,
            offdiag_sum: 0.0,
        })
    }

    /// Registers a family by the union of its energies.
    pub fn add_family(&mut self, energies: &[f64]) {
        let mut e = energies.to_vec();
        e.sort_by(|a, b| a.total_cmp(b));
        let counts: Vec<f64> = self.bins.edges.iter().map(|&x| pairs_below(&e, x)).collect();
        for b in 0..self.bins.len() {
            self.pair_counts[b] += counts[b + 1] - counts[b];
        }
        self.zero_pairs += pairs_below(&e, self.zero_window);
        self.families += 1;
        self.dim_total += e.len();
        self.omega_dos_sum += central_density(&e, 0.5);
        for &x in &e {
            self.e_n += 1.0;
            self.e_sum += x;
            self.e_sumsq += x * x;
        }
    }

    #[inline]
    fn deposit(&mut self, w: f64, weight: f64) {
        let reach = KERNEL_CUTOFF * self.sigma;
        let norm = 1.0 / (self.sigma * (2.0 * std::f64::consts::PI).sqrt());
        let inv = 1.0 / (2.0 * self.sigma * self.sigma);
        for centre in [w, -w] {
            let lo = self.grid.partition_point(|&g| g < centre - reach);
            for (i, &g) in self.grid.iter().enumerate().skip(lo) {
                let d = g - centre;
                if d > reach {
                    break;
                }
                self.corr[i] += weight * norm * (-d * d * inv).exp();
            }
        }
    }

    /// Adds a block's unordered pairs: `m < n` within a sector, all pairs
    /// across sectors.
    pub fn add_block(&mut self, set: &MatrixElementSet) {
        for n in 0..set.cols() {
            let en = set.ket_energies[n];
            let m_end = if set.same_sector() { n } else { set.rows() };
            for m in 0..m_end {
                let a = set.abs2(m, n);
                let w = (set.bra_energies[m] - en).abs();
                if let Some(b) = self.bins.locate(w) {
                    self.sum_abs2[b] += a;
                }
                if w < self.zero_window {
                    self.zero_abs2 += a;
                }
                if w < self.zero_window + KERNEL_CUTOFF * self.sigma {
                    self.zero_corr_mass += a * self.window_mass(w);
                }
                self.offdiag_sum += 2.0 * a;
                if a != 0.0 {
                    self.deposit(w, a);
                }
            }
        }
    }

    /// Mass of the kernels at `±w` inside `[0, zero_window)`.
    fn window_mass(&self, w: f64) -> f64 {
        let cdf = |x: f64| 0.5 * (1.0 + erf(x / (self.sigma * std::f64::consts::SQRT_2)));
        let z = self.zero_window;
        (cdf(z - w) - cdf(-w)) + (cdf(z + w) - cdf(w))
    }

    pub fn sigma_e2(&self) -> f64 {
        let mean = self.e_sum / self.e_n;
        self.e_sumsq / self.e_n - mean * mean
    }

    pub fn finish(self) -> Result<SpectralSet> {
        if self.families == 0 {
            return Err(Error::InvalidInput("no families were added".into()));
        }
        let d = self.dim_total as f64;
        let omega_dos = self.omega_dos_sum / self.families as f64;
        let sigma_e2 = self.sigma_e2();
        let var_values: Vec<Option<f64>> = (0..self.bins.len())
            .map(|b| {
                (self.pair_counts[b] > 0.0)
                    .then(|| self.prefactor * omega_dos * self.sum_abs2[b] / self.pair_counts[b])
            })
            .collect();
        let corr_values: Vec<f64> = self.corr.iter().map(|c| self.prefactor / d * c).collect();
        let resc_values: Vec<Option<f64>> = self
            .grid
            .iter()
            .zip(&corr_values)
            .map(|(&w, &c)| Some(resc_factor(w, sigma_e2) * c))
            .collect();
        let var_zero = self.prefactor * omega_dos * self.zero_abs2 / self.zero_pairs;
        let corr_zero = self.prefactor / d * self.zero_corr_mass / self.zero_window;
        let corr_var_ratio_zero = (var_zero > 0.0).then(|| corr_zero / var_zero);
        let base = |kind, omega: Vec<f64>, values| SpectralFunction {
            kind,
            label: self.label.clone(),
            l: self.l,
            omega,
            values,
            omega_dos,
            sigma_e2,
            broadening: None,
            bin_edges: None,
            pair_counts: None,
        };
        let mut var = base(SpectralKind::Var, self.bins.centers(), var_values);
        var.bin_edges = Some(self.bins.edges.clone());
        var.pair_counts = Some(self.pair_counts.clone());
        let mut corr = base(SpectralKind::Corr, self.grid.clone(), corr_values.iter().map(|&c| Some(c)).collect());
        corr.broadening = Some(self.sigma);
        let mut resc = base(SpectralKind::Resc, self.grid.clone(), resc_values);
        resc.broadening = Some(self.sigma);
        Ok(SpectralSet {
            var,
            corr,
            resc,
            corr_var_ratio_zero,
            pair_density_ratio_zero: self.zero_pairs / (self.zero_window * d * omega_dos),
            zero_window: self.zero_window,
            offdiag_weight: self.prefactor / d * self.offdiag_sum,
            dim: self.dim_total,
            families: self.families,
        })
    }
}

/// Empirical distribution of `ω_mn` over ordered pairs `m ≠ n` within each
/// family, against a Gaussian of variance `2σ_E²`.
#[derive(Clone, Debug, Serialize)]
pub struct RhoOmegaReport {
    pub pairs: f64,
    pub sigma_e2: f64,
    /// Largest CDF difference over the probe points.
    pub distance: f64,
    pub probes: usize,
}

pub fn rho_omega_check(families: &[&[f64]], probes: usize) -> Result<RhoOmegaReport> {
    let mut sorted: Vec<Vec<f64>> = Vec::new();
    let (mut n, mut s, mut s2) = (0.0, 0.0, 0.0);
    for f in families {
        let mut e = f.to_vec();
        e.sort_by(|a, b| a.total_cmp(b));
        for &x in &e {
            n += 1.0;
            s += x;
            s2 += x * x;
        }
        sorted.push(e);
    }
    if n < 2.0 || probes == 0 {
        return Err(Error::InvalidInput("ρ(ω) check needs a spectrum and probe points".into()));
    }
    let mean = s / n;
    let sigma_e2 = s2 / n - mean * mean;
    let total: f64 = sorted.iter().map(|e| (e.len() * (e.len() - 1) / 2) as f64).sum();
    let scale = (2.0 * sigma_e2).sqrt();
    let mut distance = 0.0f64;
    for i in 0..=probes {
        let x = 6.0 * scale * i as f64 / probes as f64;
        // P(ω ≤ x) for x ≥ 0 over ordered pairs, symmetric in ω
        let within: f64 = sorted.iter().map(|e| pairs_below(e, x)).sum();
        let empirical = 0.5 + 0.5 * within / total;
        let reference = 0.5 * (1.0 + erf(x / (scale * std::f64::consts::SQRT_2)));
        distance = distance.max((empirical - reference).abs());
    }
    Ok(RhoOmegaReport { pairs: 2.0 * total, sigma_e2, distance, probes })
}

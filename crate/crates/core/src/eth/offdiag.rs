//! Distributions and variances of off-diagonal matrix elements in a narrow
//! window around the middle of the spectrum.

use serde::Serialize;

use super::elements::MatrixElementSet;
use crate::stats::{gaussian_fit_moments, gumbel_fit_mle, power_law_fit, quantile_sorted, BinSpec, FitResult, Histogram};
use crate::{Error, Result};

/// Window on the pair mean energy `Ē` and the frequency `ω`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OffdiagWindow {
    /// Fraction of the sector's states, centred on the median, whose energy
    /// range bounds `Ē`.
    pub energy_fraction: f64,
    /// `|ω| < omega_max`; `None` keeps every frequency.
    pub omega_max: Option<f64>,
    /// Pairs required before the frequency window stops doubling.
    pub min_pairs: usize,
}

impl Default for OffdiagWindow {
    fn default() -> Self {
        Self { energy_fraction: 0.05, omega_max: Some(0.01), min_pairs: 50 }
    }
}

const MAX_WIDENINGS: u32 = 12;

/// Off-diagonal elements inside a window.
#[derive(Clone, Debug, Serialize)]
pub struct OffdiagSample {
    /// Real parts, followed by the imaginary parts of complex blocks.
    pub components: Vec<f64>,
    /// `|O_mn|²` per pair.
    pub abs2: Vec<f64>,
    pub pairs: usize,
    pub omega_max_used: Option<f64>,
    pub widenings: u32,
    pub warning: Option<String>,
}

fn energy_bounds(set: &MatrixElementSet, fraction: f64) -> (f64, f64) {
    let mut e: Vec<f64> = set.bra_energies.clone();
    if !set.same_sector() {
        e.extend_from_slice(&set.ket_energies);
    }
    e.sort_by(|a, b| a.total_cmp(b));
    (quantile_sorted(&e, 0.5 - fraction / 2.0), quantile_sorted(&e, 0.5 + fraction / 2.0))
}

/// Each unordered pair once: `m < n` within a sector, all pairs across sectors.
fn collect(sets: &[&MatrixElementSet], fraction: f64, omega_max: Option<f64>) -> OffdiagSample {
    let mut re = Vec::new();
    let mut im = Vec::new();
    let mut abs2 = Vec::new();
    for set in sets {
        let (lo, hi) = energy_bounds(set, fraction);
        for n in 0..set.cols() {
            let en = set.ket_energies[n];
            let m_end = if set.same_sector() { n } else { set.rows() };
            for m in 0..m_end {
                let em = set.bra_energies[m];
                let ebar = 0.5 * (em + en);
                if ebar < lo || ebar > hi {
                    continue;
                }
                if let Some(w) = omega_max {
                    if (em - en).abs() >= w {
                        continue;
                    }
                }
                let z = set.get(m, n);
                re.push(z.re);
                if set.im.is_some() {
                    im.push(z.im);
                }
                abs2.push(z.norm_sqr());
            }
        }
    }
    let pairs = abs2.len();
    re.extend(im);
    OffdiagSample { components: re, abs2, pairs, omega_max_used: omega_max, widenings: 0, warning: None }
}

/// Pairs in the window, doubling `omega_max` until `min_pairs` are found.
pub fn offdiag_sample(sets: &[&MatrixElementSet], window: OffdiagWindow) -> Result<OffdiagSample> {
    let mut omega = window.omega_max;
    for widenings in 0..=MAX_WIDENINGS {
        let mut s = collect(sets, window.energy_fraction, omega);
        if s.pairs >= window.min_pairs {
            if widenings > 0 {
                s.widenings = widenings;
                s.warning = Some(format!(
                    "frequency window widened {widenings} times to |ω| < {} to reach {} pairs",
                    omega.unwrap_or(f64::INFINITY),
                    window.min_pairs
                ));
            }
            return Ok(s);
        }
        match omega {
            Some(w) => omega = Some(2.0 * w),
            None => break,
        }
    }
    Err(Error::InvalidInput(format!("fewer than {} pairs in the off-diagonal window", window.min_pairs)))
}

/// Histogram of a sample with Gaussian (moments) and Gumbel (likelihood) fits.
#[derive(Clone, Debug, Serialize)]
pub struct DistributionFits {
    pub histogram: Histogram,
    pub gaussian: FitResult,
    pub gumbel: FitResult,
    pub count: usize,
}

pub fn distribution_fits(x: &[f64], bins: BinSpec) -> Result<DistributionFits> {
    let histogram = Histogram::from_samples(x, bins)?;
    Ok(DistributionFits {
        gaussian: gaussian_fit_moments(x, &histogram)?,
        gumbel: gumbel_fit_mle(x, &histogram)?,
        count: x.len(),
        histogram,
    })
}

/// Raw elements and `x = |ln|O_mn|²|`, each with both fits.
#[derive(Clone, Debug, Serialize)]
pub struct OffdiagDistribution {
    pub sample_pairs: usize,
    pub omega_max_used: Option<f64>,
    pub warning: Option<String>,
    pub raw: DistributionFits,
    pub log_abs2: DistributionFits,
    /// Pairs with `O_mn = 0` dropped from the logarithmic sample.
    pub nonfinite_skipped: usize,
    /// Mean of `|O_mn|²` over the window.
    pub variance: f64,
}

pub fn offdiag_distribution(sets: &[&MatrixElementSet], window: OffdiagWindow, bins: BinSpec) -> Result<OffdiagDistribution> {
    let s = offdiag_sample(sets, window)?;
    let raw = distribution_fits(&s.components, bins)?;
    let logs: Vec<f64> = s.abs2.iter().map(|a| a.ln().abs()).filter(|x| x.is_finite()).collect();
    let log_abs2 = distribution_fits(&logs, bins)?;
    Ok(OffdiagDistribution {
        sample_pairs: s.pairs,
        omega_max_used: s.omega_max_used,
        nonfinite_skipped: s.pairs - logs.len(),
        variance: s.abs2.iter().sum::<f64>() / s.pairs as f64,
        warning: s.warning,
        raw,
        log_abs2,
    })
}

/// Off-diagonal variance at one system size.
#[derive(Clone, Debug, Serialize)]
pub struct OffdiagVariancePoint {
    pub l: usize,
    pub l_omega: f64,
    pub variance: f64,
    pub pairs: usize,
}

/// Fit of `mean|O_mn|² ∝ (LΩ)^{−γ}`.
pub fn offdiag_variance_scaling(points: &[OffdiagVariancePoint]) -> Result<FitResult> {
    let x: Vec<f64> = points.iter().map(|p| p.l_omega).collect();
    let y: Vec<f64> = points.iter().map(|p| p.variance).collect();
    power_law_fit(&x, &y)
}

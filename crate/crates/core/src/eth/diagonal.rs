//! Eigenstate-to-eigenstate fluctuations of diagonal matrix elements.

use serde::Serialize;

use crate::spectra::central_window;
use crate::stats::{gaussian_fit_moments, moments, power_law_fit, BinSpec, FitResult, Histogram, Moments};
use crate::{Error, Result};

/// States per side are `window/2`; the window shrinks near the spectrum edges.
pub const DEFAULT_WINDOW: usize = 50;
pub const DEFAULT_CENTRAL_FRACTION: f64 = 0.5;

/// Energies and diagonal elements of one sector, energies ascending.
#[derive(Clone, Debug)]
pub struct DiagonalSeries {
    pub energies: Vec<f64>,
    pub values: Vec<f64>,
}

impl DiagonalSeries {
    pub fn new(energies: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if energies.len() != values.len() {
            return Err(Error::InvalidPair(format!(
                "{} energies for {} diagonal elements",
                energies.len(),
                values.len()
            )));
        }
        if energies.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput("energies must be ascending".into()));
        }
        Ok(Self { energies, values })
    }
}

/// Count per unit energy over the central `fraction` of a sorted spectrum.
pub fn central_density(energies: &[f64], fraction: f64) -> f64 {
    let (lo, hi) = central_window(energies.len(), fraction);
    if hi < lo + 2 {
        return f64::NAN;
    }
    (hi - lo) as f64 / (energies[hi - 1] - energies[lo])
}

/// `|O_mm − running mean|` for the states in the central window, and whether
/// the window had to shrink to fit the sector.
pub fn running_deviations(series: &DiagonalSeries, window: usize, fraction: f64) -> (Vec<f64>, bool) {
    let n = series.values.len();
    let w = window.min(n).max(1);
    let shrunk = w < window;
    let half = w / 2;
    let (lo, hi) = central_window(n, fraction);
    let mut out = Vec::with_capacity(hi - lo);
    for i in lo..hi {
        let a = i.saturating_sub(half).min(n - w);
        let mean = series.values[a..a + w].iter().sum::<f64>() / w as f64;
        out.push((series.values[i] - mean).abs());
    }
    (out, shrunk)
}

/// `δO` at one system size, pooled over sectors.
#[derive(Clone, Debug, Serialize)]
pub struct DiagFluctuationPoint {
    pub l: usize,
    pub sectors: usize,
    pub states: usize,
    /// Mean of the per-sector central densities `Ω`.
    pub omega: f64,
    pub l_omega: f64,
    pub delta_o: f64,
    pub window_shrunk: bool,
}

pub fn diag_fluctuation_point(l: usize, sectors: &[DiagonalSeries], window: usize, fraction: f64) -> Result<DiagFluctuationPoint> {
    if sectors.is_empty() {
        return Err(Error::InvalidInput("no sectors for the diagonal fluctuation".into()));
    }
    let mut devs = Vec::new();
    let mut omega = 0.0;
    let mut shrunk = false;
    for s in sectors {
        let (d, sh) = running_deviations(s, window, fraction);
        devs.extend(d);
        shrunk |= sh;
        omega += central_density(&s.energies, fraction);
    }
    omega /= sectors.len() as f64;
    if devs.is_empty() {
        return Err(Error::InvalidInput("central window is empty".into()));
    }
    Ok(DiagFluctuationPoint {
        l,
        sectors: sectors.len(),
        states: devs.len(),
        omega,
        l_omega: l as f64 * omega,
        delta_o: devs.iter().sum::<f64>() / devs.len() as f64,
        window_shrunk: shrunk,
    })
}

/// Fits `δO ∝ (LΩ)^{−γ}` and `δO ∝ L^{−δ}`.
#[derive(Clone, Debug, Serialize)]
pub struct DiagFluctuationScaling {
    pub points: Vec<DiagFluctuationPoint>,
    pub fit_l_omega: FitResult,
    pub fit_l: FitResult,
}

pub fn diag_fluctuation_scaling(points: Vec<DiagFluctuationPoint>) -> Result<DiagFluctuationScaling> {
    if points.len() < 3 {
        return Err(Error::InvalidInput("fluctuation scaling needs at least three sizes".into()));
    }
    let y: Vec<f64> = points.iter().map(|p| p.delta_o).collect();
    let lo: Vec<f64> = points.iter().map(|p| p.l_omega).collect();
    let l: Vec<f64> = points.iter().map(|p| p.l as f64).collect();
    Ok(DiagFluctuationScaling { fit_l_omega: power_law_fit(&lo, &y)?, fit_l: power_law_fit(&l, &y)?, points })
}

/// Histogram of `O_mm` in the central energy window with a Gaussian by moments.
#[derive(Clone, Debug, Serialize)]
pub struct DiagDistribution {
    pub histogram: Histogram,
    pub gaussian: FitResult,
    pub moments: Moments,
    pub count: usize,
}

pub const MIN_DISTRIBUTION_STATES: usize = 200;

/// Pools the central `fraction` of every sector.
pub fn diag_distribution(sectors: &[DiagonalSeries], fraction: f64, bins: BinSpec) -> Result<DiagDistribution> {
    let mut x = Vec::new();
    for s in sectors {
        let (lo, hi) = central_window(s.values.len(), fraction);
        x.extend_from_slice(&s.values[lo..hi]);
    }
    if x.len() < MIN_DISTRIBUTION_STATES {
        return Err(Error::InvalidInput(format!(
            "{} states in the window, need {MIN_DISTRIBUTION_STATES}",
            x.len()
        )));
    }
    let histogram = Histogram::from_samples(&x, bins)?;
    let gaussian = gaussian_fit_moments(&x, &histogram)?;
    Ok(DiagDistribution { moments: moments(&x), count: x.len(), histogram, gaussian })
}

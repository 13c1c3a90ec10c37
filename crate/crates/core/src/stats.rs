//! Histograms, simple fits and distribution distances shared by the analyses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How to choose histogram bins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinSpec {
    /// Freedman–Diaconis width over the sample range, at least 20 bins.
    Auto,
    /// Fixed number of equal bins over the sample range.
    Count(usize),
    /// Fixed number of equal bins over `[lo, hi]`; samples outside are dropped.
    Range { lo: f64, hi: f64, n: usize },
}

const MIN_AUTO_BINS: usize = 20;
const MAX_AUTO_BINS: usize = 10_000;

/// Normalized histogram: `Σ density·width = 1` over the retained samples.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub densities: Vec<f64>,
    pub counts: Vec<u64>,
    pub count: u64,
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < n {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[n - 1]
    }
}

fn sorted_copy(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

impl Histogram {
    pub fn from_samples(samples: &[f64], bins: BinSpec) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("histogram of an empty sample".into()));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("histogram samples must be finite".into()));
        }
        let (lo, hi, n) = match bins {
            BinSpec::Range { lo, hi, n } => (lo, hi, n),
            BinSpec::Count(n) => {
                let s = sorted_copy(samples);
                (s[0], s[s.len() - 1], n)
            }
            BinSpec::Auto => {
                let s = sorted_copy(samples);
                let (lo, hi) = (s[0], s[s.len() - 1]);
                let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
                let width = 2.0 * iqr / (s.len() as f64).cbrt();
                let n = if width > 0.0 && hi > lo {
                    (((hi - lo) / width).ceil() as usize).clamp(MIN_AUTO_BINS, MAX_AUTO_BINS)
                } else {
                    MIN_AUTO_BINS
                };
                (lo, hi, n)
            }
        };
        if !(hi > lo) || n == 0 {
            return Err(Error::InvalidInput(format!(
                "degenerate histogram range [{lo}, {hi}] with {n} bins; at least two distinct values are required"
            )));
        }
        let width = (hi - lo) / n as f64;
        let bin_edges: Vec<f64> = (0..=n).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0u64; n];
        for &x in samples {
            if x < lo || x > hi {
                continue;
            }
            let i = (((x - lo) / width) as usize).min(n - 1);
            counts[i] += 1;
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidInput("no samples fall inside the histogram range".into()));
        }
        let populated = counts.iter().filter(|&&c| c > 0).count();
        if populated < 2 {
            return Err(Error::InvalidInput("histogram needs at least two populated bins".into()));
        }
        let densities = bin_edges
            .windows(2)
            .zip(&counts)
            .map(|(e, &c)| c as f64 / (total as f64 * (e[1] - e[0])))
            .collect();
        Ok(Self { bin_edges, densities, counts, count: total })
    }

    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|e| e[1] - e[0]).collect()
    }

    /// `Σ density·width`, equal to one up to rounding.
    pub fn area(&self) -> f64 {
        self.densities.iter().zip(self.widths()).map(|(d, w)| d * w).sum()
    }

    /// Per-bin RMS deviation from a reference density evaluated at bin centers.
    pub fn rms_residual(&self, pdf: impl Fn(f64) -> f64) -> f64 {
        let c = self.centers();
        let ss: f64 = c.iter().zip(&self.densities).map(|(&x, &d)| (d - pdf(x)).powi(2)).sum();
        (ss / c.len() as f64).sqrt()
    }

    /// Sum of squared per-bin residuals against a reference density.
    pub fn ssr(&self, pdf: impl Fn(f64) -> f64) -> f64 {
        self.centers().iter().zip(&self.densities).map(|(&x, &d)| (d - pdf(x)).powi(2)).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitModel {
    Gaussian,
    Powerlaw,
    Gumbel,
}

/// Result of a fit. Parameter meaning by model:
/// gaussian `[μ, σ]`, powerlaw `[γ, ln A]` for `y = A·x^{−γ}`, gumbel `[μ, σ]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub params: Vec<f64>,
    /// Standard errors of `params`, when available.
    pub std_errors: Vec<f64>,
    pub ssr: f64,
    pub n: usize,
    /// Per-bin RMS residual against the histogram that was fitted or compared.
    pub rms_residual: f64,
}

pub fn gaussian_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

pub fn gumbel_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-z - (-z).exp()).exp() / sigma
}

/// Sample moments.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    /// Unbiased variance.
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

pub fn moments(x: &[f64]) -> Moments {
    let n = x.len();
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    Moments {
        n,
        mean,
        variance: if n > 1 { m2 * nf / (nf - 1.0) } else { 0.0 },
        skewness: if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 },
        excess_kurtosis: if m2 > 0.0 { m4 / (m2 * m2) - 3.0 } else { 0.0 },
    }
}

/// Gaussian with the sample mean and standard deviation, compared with `hist`.
pub fn gaussian_fit_moments(samples: &[f64], hist: &Histogram) -> Result<FitResult> {
    if samples.len() < 2 {
        return Err(Error::InvalidInput("Gaussian fit needs at least two samples".into()));
    }
    let m = moments(samples);
    let sigma = m.variance.sqrt();
    if !(sigma > 0.0) {
        return Err(Error::InvalidInput("Gaussian fit of a constant sample".into()));
    }
    let n = samples.len() as f64;
    let pdf = |x| gaussian_pdf(x, m.mean, sigma);
    Ok(FitResult {
        model: FitModel::Gaussian,
        params: vec![m.mean, sigma],
        std_errors: vec![sigma / n.sqrt(), sigma / (2.0 * (n - 1.0)).sqrt()],
        ssr: hist.ssr(pdf),
        n: samples.len(),
        rms_residual: hist.rms_residual(pdf),
    })
}

/// Least-squares Gaussian fit of a histogram: a count-weighted quadratic fit
/// of the log-density, exact for Gaussian data.
pub fn gaussian_fit_lsq(hist: &Histogram) -> Result<FitResult> {
    let centers = hist.centers();
    let mut rows = Vec::new();
    for ((&x, &d), &c) in centers.iter().zip(&hist.densities).zip(&hist.counts) {
        if c > 0 && d > 0.0 {
            rows.push((x, d.ln(), c as f64));
        }
    }
    if rows.len() < 3 {
        return Err(Error::InvalidInput("Gaussian least-squares fit needs three populated bins".into()));
    }
    // shift and scale x for conditioning
    let x0 = rows.iter().map(|r| r.0 * r.2).sum::<f64>() / rows.iter().map(|r| r.2).sum::<f64>();
    let scale = rows.iter().map(|r| (r.0 - x0).abs()).fold(0.0, f64::max).max(1e-300);
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for &(x, y, w) in &rows {
        let t = (x - x0) / scale;
        let phi = [1.0, t, t * t];
        for i in 0..3 {
            atb[i] += w * phi[i] * y;
            for j in 0..3 {
                ata[i][j] += w * phi[i] * phi[j];
            }
        }
    }
    let coef = solve3(ata, atb).ok_or_else(|| Error::numeric("gaussian_fit_lsq", "singular normal equations"))?;
    let c2 = coef[2] / (scale * scale);
    if !(c2 < 0.0) {
        return Err(Error::numeric("gaussian_fit_lsq", "log-density is not concave"));
    }
    let sigma = (-0.5 / c2).sqrt();
    let mu = x0 - coef[1] / scale / (2.0 * c2);
    let pdf = |x| gaussian_pdf(x, mu, sigma);
    Ok(FitResult {
        model: FitModel::Gaussian,
        params: vec![mu, sigma],
        std_errors: vec![f64::NAN, f64::NAN],
        ssr: hist.ssr(pdf),
        n: hist.count as usize,
        rms_residual: hist.rms_residual(pdf),
    })
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Maximum-likelihood Gumbel fit, compared with `hist`.
pub fn gumbel_fit_mle(samples: &[f64], hist: &Histogram) -> Result<FitResult> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InvalidInput("Gumbel fit needs at least two samples".into()));
    }
    let m = moments(samples);
    let sd = m.variance.sqrt();
    if !(sd > 0.0) {
        return Err(Error::InvalidInput("Gumbel fit of a constant sample".into()));
    }
    // The ML scale solves g(σ) = mean − σ − Σx e^{−x/σ}/Σe^{−x/σ} = 0, which is
    // monotone in σ; bracket around the moment estimate and bisect.
    let xmin = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let g = |s: f64| {
        let (mut num, mut den) = (0.0, 0.0);
        for &x in samples {
            let w = (-(x - xmin) / s).exp();
            num += x * w;
            den += w;
        }
        m.mean - s - num / den
    };
    let guess = sd * 6f64.sqrt() / std::f64::consts::PI;
    let (mut lo, mut hi) = (guess * 1e-3, guess * 10.0);
    let mut expand = 0;
    while g(lo) * g(hi) > 0.0 && expand < 60 {
        lo *= 0.5;
        hi *= 2.0;
        expand += 1;
    }
    if g(lo) * g(hi) > 0.0 {
        return Err(Error::numeric("gumbel_fit_mle", "could not bracket the scale"));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(lo) * g(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let sigma = 0.5 * (lo + hi);
    let mean_w = samples.iter().map(|&x| (-(x - xmin) / sigma).exp()).sum::<f64>() / n as f64;
    let mu = xmin - sigma * mean_w.ln();
    let pdf = |x| gumbel_pdf(x, mu, sigma);
    let nf = n as f64;
    Ok(FitResult {
        model: FitModel::Gumbel,
        params: vec![mu, sigma],
        // asymptotic ML standard errors of the Gumbel family
        std_errors: vec![1.053 * sigma / nf.sqrt(), 0.780 * sigma / nf.sqrt()],
        ssr: hist.ssr(pdf),
        n,
        rms_residual: hist.rms_residual(pdf),
    })
}

/// Fit `y = A·x^{−γ}` by linear regression in log-log space.
pub fn power_law_fit(x: &[f64], y: &[f64]) -> Result<FitResult> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidInput("power-law fit needs two or more (x, y) pairs".into()));
    }
    if x.iter().chain(y).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput("power-law fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidInput("power-law fit needs distinct x values".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let se_slope = if lx.len() > 2 { (ssr / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    Ok(FitResult {
        model: FitModel::Powerlaw,
        params: vec![-slope, intercept],
        std_errors: vec![se_slope, f64::NAN],
        ssr,
        n: lx.len(),
        rms_residual: (ssr / n).sqrt(),
    })
}

/// Kolmogorov–Smirnov distance between a sample and a reference CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let s = sorted_copy(samples);
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    rec(f, a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, 50)
}

/// Mean and standard error of the mean.
pub fn mean_and_se(x: &[f64]) -> (f64, f64) {
    let m = moments(x);
    (m.mean, (m.variance / x.len() as f64).sqrt())
}

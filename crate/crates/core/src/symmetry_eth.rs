//! Quasimomentum-resolved spectral functions of local operators on periodic
//! chains, and the distance-resolved decomposition on open chains.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::basis::{eta_range, Boundary};
use crate::eth::elements::{matrix_elements, EigenSector, MatrixElementSet};
use crate::eth::diagonal::{running_deviations, DiagonalSeries};
use crate::eth::spectral::{OmegaBins, SpectralAccumulator, SpectralFunction};
use crate::hamiltonian::{build_observable, cross_sector_block, Observable};
use crate::{c64, Error, Result};

/// Energies closer than this count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Momentum-difference class `ℓ = min(|η_a − η_b| mod L, L − …)`.
pub fn momentum_class(l: usize, eta_a: i32, eta_b: i32) -> usize {
    let d = (eta_a - eta_b).rem_euclid(l as i32) as usize;
    d.min(l - d)
}

/// Ordered `(η_m, η_n)` blocks in class `ℓ`.
pub fn class_multiplicity(l: usize, ell: usize) -> usize {
    if ell == 0 || 2 * ell == l {
        l
    } else {
        2 * l
    }
}

fn eta_of(s: &EigenSector) -> Result<i32> {
    s.spec()
        .eta
        .ok_or_else(|| Error::InvalidSpec(format!("sector {} has no momentum label", s.spec().tag())))
}

/// Errors unless the sectors are exactly the momentum sectors of one `(L, M)`
/// family, without parity or spin-inversion resolution.
fn check_family(sectors: &[EigenSector]) -> Result<(usize, i32)> {
    let first = sectors.first().ok_or_else(|| Error::InvalidInput("no sectors".into()))?.spec();
    let (l, m) = (first.l, first.m);
    let mut seen = BTreeSet::new();
    for s in sectors {
        let sp = s.spec();
        if sp.l != l || sp.m != m || sp.bc != Boundary::Pbc {
            return Err(Error::InvalidPair(format!("sector {} is outside the family (L={l}, M={m}, pbc)", sp.tag())));
        }
        if sp.parity.is_some() || sp.spin_flip.is_some() {
            return Err(Error::InvalidSpec(format!("sector {} resolves a discrete symmetry", sp.tag())));
        }
        if !seen.insert(eta_of(s)?) {
            return Err(Error::InvalidInput(format!("sector {} given twice", sp.tag())));
        }
    }
    let missing: Vec<i32> = eta_range(l).filter(|e| !seen.contains(e)).collect();
    if !missing.is_empty() {
        return Err(Error::InvalidInput(format!("missing momentum sectors η = {missing:?}")));
    }
    Ok((l, m))
}

/// Outcome of comparing `O^l_mn` with `O^j_mn e^{i(j−l)(k_m−k_n)}`.
#[derive(Clone, Debug, Serialize)]
pub struct PhaseCheck {
    pub site_j: usize,
    pub site_l: usize,
    pub blocks: usize,
    pub pairs_checked: usize,
    pub degenerate_skipped: usize,
    /// Largest `|O^l_mn − O^j_mn e^{i(j−l)(k_m−k_n)}|`.
    pub max_violation: f64,
    /// Largest `||O^l_mn| − |O^j_mn||`.
    pub max_modulus_violation: f64,
}

fn degenerate_flags(e: &[f64]) -> Vec<bool> {
    (0..e.len())
        .map(|i| {
            (i > 0 && (e[i] - e[i - 1]).abs() < DEGENERACY_TOL)
                || (i + 1 < e.len() && (e[i + 1] - e[i]).abs() < DEGENERACY_TOL)
        })
        .collect()
}

/// The phase relation between two local operators over all pairs of sectors
/// `(a, b)` with `a ≤ b` in the given list.
pub fn local_op_phase_check(sectors: &[EigenSector], site_j: usize, site_l: usize) -> Result<PhaseCheck> {
    let mut out = PhaseCheck {
        site_j,
        site_l,
        blocks: 0,
        pairs_checked: 0,
        degenerate_skipped: 0,
        max_violation: 0.0,
        max_modulus_violation: 0.0,
    };
    let shift = site_j as f64 - site_l as f64;
    for (ia, a) in sectors.iter().enumerate() {
        let deg_a = degenerate_flags(a.energies());
        for b in &sectors[ia..] {
            let deg_b = degenerate_flags(b.energies());
            let oj = matrix_elements(&cross_sector_block(Observable::ZNNLocal(site_j), a.basis, b.basis)?, a, b)?;
            let ol = matrix_elements(&cross_sector_block(Observable::ZNNLocal(site_l), a.basis, b.basis)?, a, b)?;
            let phase = c64::from_polar(1.0, shift * (a.spec().k() - b.spec().k()));
            out.blocks += 1;
            for n in 0..oj.cols() {
                for m in 0..oj.rows() {
                    if deg_a[m] || deg_b[n] {
                        out.degenerate_skipped += 1;
                        continue;
                    }
                    let (x, y) = (oj.get(m, n), ol.get(m, n));
                    out.max_violation = out.max_violation.max((y - x * phase).norm());
                    out.max_modulus_violation = out.max_modulus_violation.max((y.norm() - x.norm()).abs());
                    out.pairs_checked += 1;
                }
            }
        }
    }
    Ok(out)
}

/// Largest entry of the invariant operator's blocks between different momenta.
pub fn selection_rule_defect(sectors: &[EigenSector], which: Observable) -> Result<f64> {
    let mut worst = 0.0f64;
    for (ia, a) in sectors.iter().enumerate() {
        for b in &sectors[ia + 1..] {
            let blk = cross_sector_block(which, a.basis, b.basis)?;
            for j in 0..blk.matrix.ncols() {
                for i in 0..blk.matrix.nrows() {
                    worst = worst.max(blk.matrix[(i, j)].norm());
                }
            }
        }
    }
    Ok(worst)
}

/// Per-bin mean of `|O_mn|²` with its standard error.
#[derive(Clone, Debug)]
struct BinMeans {
    n: Vec<f64>,
    s: Vec<f64>,
    s2: Vec<f64>,
}

impl BinMeans {
    fn of(set: &MatrixElementSet, bins: &OmegaBins) -> Self {
        let k = bins.len();
        let mut out = Self { n: vec![0.0; k], s: vec![0.0; k], s2: vec![0.0; k] };
        for n in 0..set.cols() {
            let m_end = if set.same_sector() { n } else { set.rows() };
            for m in 0..m_end {
                let w = (set.bra_energies[m] - set.ket_energies[n]).abs();
                if let Some(b) = bins.locate(w) {
                    let a = set.abs2(m, n);
                    out.n[b] += 1.0;
                    out.s[b] += a;
                    out.s2[b] += a * a;
                }
            }
        }
        out
    }

    fn mean_se(&self, b: usize) -> Option<(f64, f64)> {
        let n = self.n[b];
        if n < 2.0 {
            return None;
        }
        let mean = self.s[b] / n;
        let var = (self.s2[b] / n - mean * mean).max(0.0) * n / (n - 1.0);
        Some((mean, (var / n).sqrt()))
    }
}

/// Spread of the block curves within one class: `χ²/dof` of the per-block
/// bin means about their weighted mean, over bins with enough pairs.
#[derive(Clone, Debug, Serialize)]
pub struct ClassCollapse {
    pub ell: usize,
    pub blocks: usize,
    pub bins_used: usize,
    pub reduced_chi2: f64,
    /// Largest relative deviation of a block mean from the class mean.
    pub max_relative_spread: f64,
}

const MIN_PAIRS_PER_BIN: f64 = 30.0;

fn collapse_stats(ell: usize, blocks: &[BinMeans], bins: &OmegaBins, window: (f64, f64)) -> ClassCollapse {
    let mut chi2 = 0.0;
    let mut dof = 0usize;
    let mut used = 0usize;
    let mut spread = 0.0f64;
    for b in 0..bins.len() {
        if bins.edges[b] < window.0 || bins.edges[b + 1] > window.1 {
            continue;
        }
        let pts: Vec<(f64, f64)> = blocks
            .iter()
            .filter(|bm| bm.n[b] >= MIN_PAIRS_PER_BIN)
            .filter_map(|bm| bm.mean_se(b))
            .filter(|&(_, se)| se > 0.0)
            .collect();
        if pts.len() < 2 {
            continue;
        }
        let wsum: f64 = pts.iter().map(|(_, se)| 1.0 / (se * se)).sum();
        let mean = pts.iter().map(|(x, se)| x / (se * se)).sum::<f64>() / wsum;
        for (x, se) in &pts {
            chi2 += ((x - mean) / se).powi(2);
            spread = spread.max(((x - mean) / mean).abs());
        }
        dof += pts.len() - 1;
        used += 1;
    }
    ClassCollapse {
        ell,
        blocks: blocks.len(),
        bins_used: used,
        reduced_chi2: if dof > 0 { chi2 / dof as f64 } else { f64::NAN },
        max_relative_spread: spread,
    }
}

/// Settings shared by the decompositions.
#[derive(Clone, Debug)]
pub struct SpectralGrid {
    pub bins: OmegaBins,
    pub grid: Vec<f64>,
    pub sigma: f64,
    pub zero_window: f64,
    /// Frequency range used for the collapse and significance statistics.
    pub window: (f64, f64),
}

/// Contribution of one class `Δ_ℓ = 2πℓ/L` to the local spectral function.
#[derive(Clone, Debug, Serialize)]
pub struct ClassContribution {
    pub ell: usize,
    pub delta_k: f64,
    pub multiplicity: usize,
    pub corr: SpectralFunction,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentumResolvedSF {
    pub l: usize,
    pub m: i32,
    pub site: usize,
    pub classes: Vec<ClassContribution>,
    /// `|f^corr_{O^j}|²` accumulated over every block.
    pub total_local: SpectralFunction,
    /// `|f^corr_Ō|²` of the invariant operator.
    pub invariant: SpectralFunction,
    /// `max|Σ_ℓ class − total| / max total`.
    pub reconstruction_defect: f64,
    /// `max|class₀ − invariant/L| / max invariant/L`.
    pub delta0_defect: f64,
    pub selection_rule_max: f64,
    pub collapse: Vec<ClassCollapse>,
}

fn accumulator(label: &str, l: usize, prefactor: f64, g: &SpectralGrid, sectors: &[EigenSector]) -> Result<SpectralAccumulator> {
    let mut acc = SpectralAccumulator::new(label, l, prefactor, g.bins.clone(), g.grid.clone(), g.sigma, g.zero_window)?;
    for s in sectors {
        acc.add_family(s.energies());
    }
    Ok(acc)
}

fn values(f: &SpectralFunction) -> Vec<f64> {
    f.values.iter().map(|v| v.unwrap_or(0.0)).collect()
}

fn relative_defect(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Resolves `|f^corr|²` of the local `Z_NN^j` by momentum-difference class and
/// compares the diagonal class with the invariant `Z_NN`.
pub fn momentum_resolved_sf(sectors: &[EigenSector], site: usize, g: &SpectralGrid) -> Result<MomentumResolvedSF> {
    let (l, m) = check_family(sectors)?;
    let n_classes = l / 2 + 1;
    let mut classes: Vec<SpectralAccumulator> = (0..n_classes)
        .map(|ell| accumulator(&format!("Z_NN^{site} class {ell}"), l, 1.0, g, sectors))
        .collect::<Result<_>>()?;
    let mut total = accumulator(&format!("Z_NN^{site}"), l, 1.0, g, sectors)?;
    let mut invariant = accumulator("Z_NN", l, l as f64, g, sectors)?;
    let mut per_class_blocks: Vec<Vec<BinMeans>> = vec![Vec::new(); n_classes];
    for (ia, a) in sectors.iter().enumerate() {
        for b in &sectors[ia..] {
            let ell = momentum_class(l, eta_of(a)?, eta_of(b)?);
            let set = matrix_elements(&cross_sector_block(Observable::ZNNLocal(site), a.basis, b.basis)?, a, b)?;
            classes[ell].add_block(&set);
            total.add_block(&set);
            per_class_blocks[ell].push(BinMeans::of(&set, &g.bins));
        }
        let inv = matrix_elements(&build_observable(Observable::ZNN, a.basis)?, a, a)?;
        invariant.add_block(&inv);
    }
    let total = total.finish()?.corr;
    let invariant = invariant.finish()?.corr;
    let mut contributions = Vec::new();
    let mut sum = vec![0.0; total.values.len()];
    for (ell, acc) in classes.into_iter().enumerate() {
        let corr = acc.finish()?.corr;
        for (s, v) in sum.iter_mut().zip(values(&corr)) {
            *s += v;
        }
        contributions.push(ClassContribution {
            ell,
            delta_k: 2.0 * std::f64::consts::PI * ell as f64 / l as f64,
            multiplicity: class_multiplicity(l, ell),
            corr,
        });
    }
    let inv_over_l: Vec<f64> = values(&invariant).iter().map(|v| v / l as f64).collect();
    let collapse = per_class_blocks
        .iter()
        .enumerate()
        .map(|(ell, blocks)| collapse_stats(ell, blocks, &g.bins, g.window))
        .collect();
    Ok(MomentumResolvedSF {
        l,
        m,
        site,
        reconstruction_defect: relative_defect(&sum, &values(&total)),
        delta0_defect: relative_defect(&values(&contributions[0].corr), &inv_over_l),
        selection_rule_max: selection_rule_defect(sectors, Observable::ZNN)?,
        classes: contributions,
        total_local: total,
        invariant,
        collapse,
    })
}

/// Significance of the cross-site terms at one distance.
#[derive(Clone, Debug, Serialize)]
pub struct DistanceSignificance {
    pub d: usize,
    /// `Σ x_mn` over pairs in the frequency window, `x_mn = Σ_{|j−l|=d} Re O^j_mn conj(O^l_mn)`.
    pub sum: f64,
    pub std_error: f64,
    pub z: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceResolvedSF {
    pub l: usize,
    pub m: i32,
    pub sites: Vec<usize>,
    pub bulk_site: usize,
    /// Contribution of each distance `d = 0..` to `|f^corr_Ō|²`.
    pub contributions: Vec<SpectralFunction>,
    /// `|f^corr_Ō|²` from the average operator's own elements.
    pub average: SpectralFunction,
    pub average_resc: SpectralFunction,
    pub bulk: SpectralFunction,
    pub bulk_resc: SpectralFunction,
    /// `max|Σ_d − average| / max average`.
    pub reconstruction_defect: f64,
    pub significance: Vec<DistanceSignificance>,
    /// Cross-site terms `d ≠ 0` pooled.
    pub cross_site: DistanceSignificance,
    /// Largest `|running mean of Ō_mm − running mean of O^j_mm|` over the
    /// central half, in units of the bulk operator's `δO`.
    pub running_mean_gap: f64,
}

/// Decomposes the average `Z_NN` on an open chain by the distance between
/// the local terms, `|f^corr_Ō|² = Σ_d c_d`.
pub fn obc_distance_decomposition(sector: &EigenSector, g: &SpectralGrid) -> Result<DistanceResolvedSF> {
    let spec = sector.spec();
    if spec.bc != Boundary::Obc {
        return Err(Error::InvalidSpec("the distance decomposition needs an open chain".into()));
    }
    let l = spec.l;
    if l < 4 {
        return Err(Error::InvalidSpec("the distance decomposition needs L ≥ 4".into()));
    }
    let n_ops = l - 2;
    let bulk_site = l / 2 - 1;
    let sites: Vec<usize> = (0..n_ops).collect();
    let local: Vec<MatrixElementSet> = sites
        .iter()
        .map(|&j| matrix_elements(&build_observable(Observable::ZNNLocal(j), sector.basis)?, sector, sector))
        .collect::<Result<_>>()?;
    let avg_set = matrix_elements(&build_observable(Observable::ZNNAvgObc, sector.basis)?, sector, sector)?;
    let energies = sector.energies();
    let dim = energies.len();

    let mut avg = accumulator("Z_NN_avg", l, n_ops as f64, g, std::slice::from_ref(sector))?;
    avg.add_block(&avg_set);
    let avg = avg.finish()?;
    let mut bulk = accumulator(&format!("Z_NN^{bulk_site}"), l, 1.0, g, std::slice::from_ref(sector))?;
    bulk.add_block(&local[bulk_site]);
    let bulk = bulk.finish()?;

    // c_d(ω) = 1/((L−2)D) Σ_{m≠n} Σ_{|j−l|=d} O^j_mn conj(O^l_mn) g(ω − ω_mn)
    let norm = 1.0 / (n_ops as f64 * dim as f64);
    let inv2s2 = 1.0 / (2.0 * g.sigma * g.sigma);
    let gnorm = 1.0 / (g.sigma * (2.0 * std::f64::consts::PI).sqrt());
    let reach = 8.0 * g.sigma;
    let mut contrib = vec![vec![0.0; g.grid.len()]; n_ops];
    let mut sig_sum = vec![0.0; n_ops];
    let mut sig_sq = vec![0.0; n_ops];
    let mut x = vec![0.0; n_ops];
    for n in 0..dim {
        for m in 0..n {
            x.iter_mut().for_each(|v| *v = 0.0);
            for (a, oa) in local.iter().enumerate() {
                let za = oa.get(m, n);
                for (b, ob) in local.iter().enumerate() {
                    x[a.abs_diff(b)] += (za * ob.get(m, n).conj()).re;
                }
            }
            let w = (energies[m] - energies[n]).abs();
            if w > g.window.0 && w <= g.window.1 {
                for d in 0..n_ops {
                    sig_sum[d] += x[d];
                    sig_sq[d] += x[d] * x[d];
                }
            }
            for centre in [w, -w] {
                let lo = g.grid.partition_point(|&t| t < centre - reach);
                for (i, &t) in g.grid.iter().enumerate().skip(lo) {
                    let dd = t - centre;
                    if dd > reach {
                        break;
                    }
                    let k = gnorm * (-dd * dd * inv2s2).exp();
                    for d in 0..n_ops {
                        contrib[d][i] += norm * x[d] * k;
                    }
                }
            }
        }
    }
    let avg_vals = values(&avg.corr);
    let mut sum = vec![0.0; g.grid.len()];
    for c in &contrib {
        for (s, v) in sum.iter_mut().zip(c) {
            *s += v;
        }
    }
    let contributions = contrib
        .into_iter()
        .enumerate()
        .map(|(d, v)| {
            let mut f = avg.corr.clone();
            f.label = format!("Z_NN_avg distance {d}");
            f.values = v.into_iter().map(Some).collect();
            f
        })
        .collect();
    let significance: Vec<DistanceSignificance> = (0..n_ops)
        .map(|d| {
            let se = sig_sq[d].sqrt();
            DistanceSignificance { d, sum: sig_sum[d], std_error: se, z: if se > 0.0 { sig_sum[d] / se } else { 0.0 } }
        })
        .collect();
    let cross_site = {
        // pairs are shared between distances, so pool x before squaring
        let (s, q) = pooled_cross_site(&local, energies, g.window);
        DistanceSignificance { d: 0, sum: s, std_error: q.sqrt(), z: if q > 0.0 { s / q.sqrt() } else { 0.0 } }
    };
    let running_mean_gap = running_mean_gap(energies, &avg_set.diagonal()?, &local[bulk_site].diagonal()?)?;
    Ok(DistanceResolvedSF {
        l,
        m: spec.m,
        sites,
        bulk_site,
        reconstruction_defect: relative_defect(&sum, &avg_vals),
        contributions,
        average: avg.corr,
        average_resc: avg.resc,
        bulk: bulk.corr,
        bulk_resc: bulk.resc,
        significance,
        cross_site,
        running_mean_gap,
    })
}

fn pooled_cross_site(local: &[MatrixElementSet], energies: &[f64], window: (f64, f64)) -> (f64, f64) {
    let (mut s, mut q) = (0.0, 0.0);
    for n in 0..energies.len() {
        for m in 0..n {
            let w = (energies[m] - energies[n]).abs();
            if !(w > window.0 && w <= window.1) {
                continue;
            }
            let mut x = 0.0;
            for (a, oa) in local.iter().enumerate() {
                for (b, ob) in local.iter().enumerate() {
                    if a != b {
                        x += (oa.get(m, n) * ob.get(m, n).conj()).re;
                    }
                }
            }
            s += x;
            q += x * x;
        }
    }
    (s, q)
}

fn running_means(values: &[f64], window: usize) -> Vec<f64> {
    let n = values.len();
    let w = window.min(n).max(1);
    (0..n)
        .map(|i| {
            let a = i.saturating_sub(w / 2).min(n - w);
            values[a..a + w].iter().sum::<f64>() / w as f64
        })
        .collect()
}

fn running_mean_gap(energies: &[f64], avg: &[f64], bulk: &[f64]) -> Result<f64> {
    let window = crate::eth::diagonal::DEFAULT_WINDOW;
    let series = DiagonalSeries::new(energies.to_vec(), bulk.to_vec())?;
    let (dev, _) = running_deviations(&series, window, 0.5);
    let delta = dev.iter().sum::<f64>() / dev.len().max(1) as f64;
    let ra = running_means(avg, window);
    let rb = running_means(bulk, window);
    let (lo, hi) = crate::spectra::central_window(energies.len(), 0.5);
    let gap = (lo..hi).map(|i| (ra[i] - rb[i]).abs()).fold(0.0f64, f64::max);
    Ok(if delta > 0.0 { gap / delta } else { f64::INFINITY })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classes_partition_blocks() {
        for l in [4usize, 5, 10, 11] {
            let mut counts = vec![0; l / 2 + 1];
            for a in eta_range(l) {
                for b in eta_range(l) {
                    counts[momentum_class(l, a, b)] += 1;
                }
            }
            for (ell, c) in counts.iter().enumerate() {
                assert_eq!(*c, class_multiplicity(l, ell));
            }
        }
    }
}

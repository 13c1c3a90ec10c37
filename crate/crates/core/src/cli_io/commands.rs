//! Subcommand drivers: each turns a [`RunConfig`] into tables and a summary.

use serde_json::{json, Value};

use super::config::RunConfig;
use super::output::{Cell, RunOutput, Table};
use super::pipeline::{partition, SolvedSector, Solver};
use crate::basis::{all_momentum_sectors, Boundary, SectorSpec};
use crate::entanglement::{eigenstate_page_curve, haar_page_average};
use crate::eth::diagonal::{diag_distribution, diag_fluctuation_point, diag_fluctuation_scaling, central_density, DiagonalSeries};
use crate::eth::elements::{diagonal_elements, hs_prefactor, matrix_elements, EigenSector, MatrixElementSet};
use crate::eth::offdiag::{offdiag_distribution, offdiag_variance_scaling, OffdiagVariancePoint, OffdiagWindow};
use crate::eth::spectral::{default_broadening, uniform_grid, OmegaBins, SpectralAccumulator, SpectralFunction};
use crate::eth::cumulants::microcanonical_coefficients;
use crate::hamiltonian::{build_observable, cross_sector_block, ModelParams, Observable};
use crate::quench::{
    diagonal_ensemble, energy_and_norm, energy_spread, evolve_expectation, initial_amplitudes, long_time_average,
    microcanonical_average, temporal_fluctuations, QuenchSetup,
};
use crate::rmt::{
    entry_variance_ratio, porter_thomas_test, rescaled_eigenvalues, weingarten_pattern_scan, Distribution,
    EnsembleKind, EnsembleSpec, Group,
};
use crate::spectra::{dos, level_spacing_stats, ratio_stats, sigma_scaling, Spectrum};
use crate::stats::{gaussian_pdf, gumbel_pdf, BinSpec, Histogram};
use crate::symmetry_eth::{momentum_resolved_sf, obc_distance_decomposition, SpectralGrid};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Levels,
    Dos,
    Page,
    EthDiag,
    EthOffdiag,
    Spectral,
    MomentumSf,
    ObcSf,
    Quench,
    Rmt,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::Levels,
        Command::Dos,
        Command::Page,
        Command::EthDiag,
        Command::EthOffdiag,
        Command::Spectral,
        Command::MomentumSf,
        Command::ObcSf,
        Command::Quench,
        Command::Rmt,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Levels => "levels",
            Command::Dos => "dos",
            Command::Page => "page",
            Command::EthDiag => "eth-diag",
            Command::EthOffdiag => "eth-offdiag",
            Command::Spectral => "spectral",
            Command::MomentumSf => "momentum-sf",
            Command::ObcSf => "obc-sf",
            Command::Quench => "quench",
            Command::Rmt => "rmt",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

pub fn run(cmd: Command, cfg: &RunConfig, solver: &Solver) -> Result<RunOutput> {
    cfg.validate()?;
    let mut out = RunOutput::default();
    let summary = match cmd {
        Command::Levels => levels(cfg, solver, &mut out),
        Command::Dos => dos_cmd(cfg, solver, &mut out),
        Command::Page => page(cfg, solver, &mut out),
        Command::EthDiag => eth_diag(cfg, solver, &mut out),
        Command::EthOffdiag => eth_offdiag(cfg, solver, &mut out),
        Command::Spectral => spectral(cfg, solver, &mut out),
        Command::MomentumSf => momentum_sf(cfg, solver, &mut out),
        Command::ObcSf => obc_sf(cfg, solver, &mut out),
        Command::Quench => quench(cfg, solver, &mut out),
        Command::Rmt => rmt(cfg, &mut out),
    }?;
    out.warnings.extend(solver.take_warnings());
    out.summary = summary;
    Ok(out)
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

/// Solves the configured sectors of one size; failures go to `out.errors`.
fn solve_size(solver: &Solver, l: usize, specs: &[SectorSpec], params: &ModelParams, vectors: bool, out: &mut RunOutput) -> Result<Vec<SolvedSector>> {
    let (ok, errors) = partition(solver.solve_all(specs, params, vectors));
    out.errors.extend(errors);
    if ok.is_empty() {
        return Err(Error::numeric(format!("L = {l}"), "every sector failed"));
    }
    Ok(ok)
}

fn configured_sectors(cfg: &RunConfig, l: usize) -> Result<Vec<SectorSpec>> {
    cfg.sectors.sectors(l, cfg.model.bc)
}

fn eigen_sectors(solved: &[SolvedSector]) -> Result<Vec<EigenSector<'_>>> {
    solved.iter().map(|s| EigenSector::new(&s.basis, &s.spectrum)).collect()
}

/// Groups sectors by quasimomentum; symmetry-resolved partners form one family.
fn families(sectors: &[EigenSector]) -> Vec<Vec<usize>> {
    let mut keys: Vec<(Option<i32>, Boundary)> = Vec::new();
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, s) in sectors.iter().enumerate() {
        let key = (s.spec().eta, s.spec().bc);
        match keys.iter().position(|k| *k == key) {
            Some(p) => out[p].push(i),
            None => {
                keys.push(key);
                out.push(vec![i]);
            }
        }
    }
    out
}

/// Element blocks `a ≤ b` inside a family, skipping blocks the observable
/// does not connect.
fn family_blocks(which: Observable, sectors: &[EigenSector], family: &[usize]) -> Result<Vec<MatrixElementSet>> {
    let mut sets = Vec::new();
    for (x, &a) in family.iter().enumerate() {
        for &b in &family[x..] {
            let (sa, sb) = (&sectors[a], &sectors[b]);
            let block = if a == b { build_observable(which, sa.basis)? } else { cross_sector_block(which, sa.basis, sb.basis)? };
            let m = &block.matrix;
            let nonzero = (0..m.ncols()).any(|j| (0..m.nrows()).any(|i| m[(i, j)].norm() > 1e-14));
            if nonzero || a == b {
                sets.push(matrix_elements(&block, sa, sb)?);
            }
        }
    }
    Ok(sets)
}

fn hist_table(name: String, h: &Histogram, curves: &[(&str, &dyn Fn(f64) -> f64)]) -> Table {
    let mut headers = vec!["bin_lo", "bin_hi", "center", "density", "count"];
    headers.extend(curves.iter().map(|c| c.0));
    let mut t = Table::new(name, &headers);
    let centers = h.centers();
    for (i, c) in centers.iter().enumerate() {
        let mut row: Vec<Cell> = vec![
            h.bin_edges[i].into(),
            h.bin_edges[i + 1].into(),
            (*c).into(),
            h.densities[i].into(),
            (h.counts[i] as usize).into(),
        ];
        row.extend(curves.iter().map(|(_, f)| Cell::from(f(*c))));
        t.push(row);
    }
    t
}

fn spectral_rows(t: &mut Table, l: usize, f: &SpectralFunction, extra: Option<&SpectralFunction>) {
    for (i, w) in f.omega.iter().enumerate() {
        let mut row: Vec<Cell> = vec![l.into(), (*w).into(), f.values[i].into()];
        if let Some(e) = extra {
            row.push(e.values[i].into());
        }
        t.push(row);
    }
}

fn spectral_grid(cfg: &RunConfig, sigma: f64) -> Result<SpectralGrid> {
    let a = &cfg.analysis;
    Ok(SpectralGrid {
        bins: OmegaBins::log_linear(a.omega_min, a.n_log, a.grid_max, a.bin_width)?,
        grid: uniform_grid(a.grid_max, a.grid_step),
        sigma,
        zero_window: a.zero_window,
        window: a.collapse_window,
    })
}

fn levels(cfg: &RunConfig, solver: &Solver, out: &mut RunOutput) -> Result<Value> {
    let params = cfg.model.params()?;
    let mut per_size = Vec::new();
    for &l in &cfg.sizes {
        let specs = configured_sectors(cfg, l)?;
        let solved = solve_size(solver, l, &specs, &params, false, out)?;
        let spectra: Vec<&Spectrum> = solved.iter().map(|s| &s.spectrum).collect();
        let r = ratio_stats(&spectra)?;
        out.tables.push(hist_table(
            format!("ratio_L{l}"),
            &r.histogram,
            &[
                ("goe", &|x| Distribution::RatioGoe.pdf(x)),
                ("poisson", &|x| Distribution::RatioPoisson.pdf(x)),
            ],
        ));
        let spacing = match level_spacing_stats(&spectra, cfg.analysis.central_fraction, cfg.analysis.bins) {
            Ok(s) => {
                out.tables.push(hist_table(
                    format!("spacing_L{l}"),
                    &s.histogram,
                    &[
                        ("wigner_goe", &|x| Distribution::WignerGoe.pdf(x)),
                        ("poisson", &|x| Distribution::PoissonSpacing.pdf(x)),
                    ],
                ));
                json!({"spacings": s.spacings, "mean_spacing": s.mean_spacing, "ks_wigner": s.ks_wigner, "ks_poisson": s.ks_poisson})
            }
            Err(e) => {
                out.warnings.push(format!("L = {l}: spacing statistics skipped: {e}"));
                Value::Null
            }
        };
        let per_sector: Vec<Value> = r.per_sector.iter().map(|(s, v)| json!({"sector": s.tag(), "mean_r": v})).collect();
        per_size.push(json!({
            "L": l,
            "mean_r": r.mean_r,
            "std_error": r.std_error,
            "count": r.count,
            "ks_goe": r.ks_goe,
            "ks_poisson": r.ks_poisson,
            "per_sector": per_sector,
            "spacing": spacing,
        }));
    }
    Ok(json!({ "sizes": per_size }))
}

fn dos_cmd(cfg: &RunConfig, solver: &Solver, out: &mut RunOutput) -> Result<Value> {
    let params = cfg.model.params()?;
    let mut reports = Vec::new();
    for &l in &cfg.sizes {
        let specs = configured_sectors(cfg, l)?;
        let solved = solve_size(solver, l, &specs, &params, false, out)?;
        let spectra: Vec<&Spectrum> = solved.iter().map(|s| &s.spectrum).collect();
        let rep = dos(&spectra, cfg.analysis.bins)?;
        let (mu, sd) = (rep.gaussian.params[0], rep.gaussian.params[1]);
        out.tables.push(hist_table(format!("dos_L{l}"), &rep.histogram, &[("gaussian_fit", &|x| gaussian_pdf(x, mu, sd))]));
        reports.push(rep);
    }
    let scaling = if reports.len() >= 2 { Some(sigma_scaling(&reports, false)?) } else { None };
    let sizes: Vec<Value> = reports
        .iter()
        .map(|r| json!({"L": r.l, "sigma": r.sigma, "mean": r.mean, "gaussian": to_value(&r.gaussian)}))
        .collect();
    Ok(json!({ "sizes": sizes, "sigma_scaling": to_value(&scaling) }))
}

fn page(cfg: &RunConfig, solver: &Solver, out: &mut RunOutput) -> Result<Value> {
    let params = cfg.model.params()?;
    let a = &cfg.analysis;
    let mut curves = Vec::new();
    let mut t = Table::new("curve", &["L", "L_A", "f", "mean", "std_error", "exact_sum", "asymptotic", "leading", "haar_mean", "haar_std_error"]);
    for &l in &cfg.sizes {
        let specs = configured_sectors(cfg, l)?;
        let solved = solve_size(solver, l, &specs, &params, true, out)?;
        let pairs: Vec<_> = solved.iter().map(|s| (&s.basis, &s.spectrum)).collect();
        let cuts: Vec<usize> = a.cuts.clone().unwrap_or_else(|| (1..l).collect());
        let curve = eigenstate_page_curve(&pairs, a.n_states, &cuts)?;
        if let Some(w) = &curve.warning {
            out.warnings.push(format!("L = {l}: {w}"));
        }
        for p in &curve.points {
            let haar = if a.haar_samples > 0 {
                Some(haar_page_average(l, cfg.sectors.m, p.l_a, a.haar_samples, cfg.seed)?)
            } else {
                None
            };
            t.push(vec![
                l.into(),
                p.l_a.into(),
                p.f.into(),
                p.mean.into(),
                p.std_error.into(),
                p.exact_sum.into(),
                p.asymptotic.into(),
                p.leading.into(),
                haar.map(|h| h.0).into(),
                haar.map(|h| h.1).into(),
            ]);
        }
        curves.push(to_value(&curve));
    }
    out.tables.push(t);
    Ok(json!({ "curves": curves }))
}

fn eth_diag(cfg: &RunConfig, solver: &Solver, out: &mut RunOutput) -> Result<Value> {
    let params = cfg.model.params()?;
    let which = cfg.observable()?;
    let a = &cfg.analysis;
    let mut points = Vec::new();
    let mut per_size = Vec::new();
    for &l in &cfg.sizes {
        let specs = configured_sectors(cfg, l)?;
        let solved = solve_size(solver, l, &specs, &params, true, out)?;
        let sectors = eigen_sectors(&solved)?;
        let coeffs = match which {
            Observable::ZN | Observable::ZNN if cfg.model.bc == Boundary::Pbc => {
                Some(microcanonical_coefficients(which, l, cfg.sectors.m, cfg.model.delta)?)
            }
            _ => None,
        };
        let mut t = Table::new(format!("elements_L{l}"), &["sector", "energy", "energy_density", "o_mm", "microcanonical"]);
        let mut series = Vec::new();
        for s in &sectors {
            let block = build_observable(which, s.basis)?;
            let d = diagonal_elements(&block, s)?;
            for (e, o) in s.energies().iter().zip(&d) {
                let mc = coeffs.as_ref().map(|c| c.evaluate(*e));
                t.push(vec![s.spec().tag().into(), (*e).into(), (e / l as f64).into(), (*o).into(), mc.into()]);
            }
            series.push(DiagonalSeries::new(s.energies().to_vec(), d)?);
        }
        out.tables.push(t);
        let point = diag_fluctuation_point(l, &series, a.window, a.central_fraction)?;
        if point.window_shrunk {
            out.warnings.push(format!("L = {l}: running window shrunk for small sectors"));
        }
        let dist = match diag_distribution(&series, a.central_fraction, a.bins) {
            Ok(d) => {
                let (mu, sd) = (d.gaussian.params[0], d.gaussian.params[1]);
                out.tables.push(hist_table(format!("distribution_L{l}"), &d.histogram, &[("gaussian", &|x| gaussian_pdf(x, mu, sd))]));
                json!({"gaussian": to_value(&d.gaussian), "moments": to_value(&d.moments), "count": d.count})
            }
            Err(e) => {
                out.warnings.push(format!("L = {l}: distribution skipped: {e}"));
                Value::Null
            }
        };
        per_size.push(json!({"L": l, "point": to_value(&point), "distribution": dist, "microcanonical": to_value(&coeffs)}));
        points.push(point);
    }
    let scaling = if points.len() >= 3 { Some(diag_fluctuation_scaling(points)?) } else { None };
    if let Some(s) = &scaling {
        let mut t = Table::new("scaling", &["L", "L_omega", "delta_o", "states"]);
        for p in &s.points {
            t.push(vec![p.l.into(), p.l_omega.into(), p.delta_o.into(), p.states.into()]);
        }
        out.tables.push(t);
    }
    Ok(json!({"observable": which.label(), "sizes": per_size, "scaling": to_value(&scaling)}))
}

fn all_family_sets(which: Observable, sectors: &[EigenSector]) -> Result<Vec<MatrixElementSet>> {
    let mut sets = Vec::new();
    for fam in families(sectors) {
        sets.extend(family_blocks(which, sectors, &fam)?);
    }
    Ok(sets)
}

fn eth_offdiag(cfg: &RunConfig, solver: &Solver, out: &mut RunOutput) -> Result<Value> {
    let params = cfg.model.params()?;
    let which = cfg.observable()?;
    let a = &cfg.analysis;
    let window = OffdiagWindow { energy_fraction: a.energy_fraction, omega_max: a.omega_max, min_pairs: a.min_pairs };
    let mut points = Vec::new();
    let mut per_size = Vec::new();
    for &l in &cfg.sizes {
        let specs = configured_sectors(cfg, l)?;
        let solved = solve_size(solver, l, &specs, &params, true, out)?;
        let sectors = eigen_sectors(&solved)?;
        let sets = all_family_sets(which, &sectors)?;
        let refs: Vec<&MatrixElementSet> = sets.iter().collect();
        let d = offdiag_distribution(&refs, window, a.bins)?;
        if let Some(w) = &d.warning {
            out.warnings.push(format!("L = {l}: {w}"));
        }
        for (name, f) in [("raw", &d.raw), ("log_abs2", &d.log_abs2)] {
            let (gm, gs) = (f.gaussian.params[0], f.gaussian.params[1]);
            let (um, us) = (f.gumbel.params[0], f.gumbel.params[1]);
            out.tables.push(hist_table(
                format!("{name}_L{l}"),
                &f.histogram,
                &[("gaussian", &|x| gaussian_pdf(x, gm, gs)), ("gumbel", &|x| gumbel_pdf(x, um, us))],
            ));
        }
        let omega: f64 = sectors.iter().map(|s| central_density(s.energies(), a.central_fraction)).sum::<f64>() / sectors.len() as f64;
        let point = OffdiagVariancePoint { l, l_omega: l as f64 * omega, variance: d.variance, pairs: d.sample_pairs };
        per_size.push(json!({"L": l, "distribution": to_value(&d), "point": to_value(&point)}));
        points.push(point);
    }
    let scaling = if points.len() >= 2 { Some(offdiag_variance_scaling(&points)?) } else { None };
    Ok(json!({"observable": which.label(), "sizes": per_size, "variance_scaling": to_value(&scaling)}))
}

fn spectral(cfg: &RunConfig, solver: &Solver, out: &mut RunOutput) -> Result<Value> {
    let params = cfg.model.params()?;
    let which = cfg.observable()?;
    let a = &cfg.analysis;
    let mut var_t = Table::new("var", &["L", "omega", "var", "pairs"]);
    let mut corr_t = Table::new("corr", &["L", "omega", "corr", "resc"]);
    let mut per_size = Vec::new();
    for &l in &cfg.sizes {
        let specs = configured_sectors(cfg, l)?;
        let solved = solve_size(solver, l, &specs, &params, true, out)?;
        let sectors = eigen_sectors(&solved)?;
        let fams = families(&sectors);
        let unions: Vec<Vec<f64>> = fams
            .iter()
            .map(|f| f.iter().flat_map(|&i| sectors[i].energies().iter().copied()).collect())
            .collect();
        let refs: Vec<&[f64]> = unions.iter().map(|u| u.as_slice()).collect();
        let sigma = a.sigma.unwrap_or_else(|| default_broadening(&refs));
        let g = spectral_grid(cfg, sigma)?;
        let mut acc = SpectralAccumulator::new(which.label(), l, hs_prefactor(which, l), g.bins, g.grid, sigma, a.zero_window)?;
        for (fam, e) in fams.iter().zip(&unions) {
            acc.add_family(e);
            for set in family_blocks(which, &sectors, fam)? {
                acc.add_block(&set);
            }
        }
        let s = acc.finish()?;
        for (i, w) in s.var.omega.iter().enumerate() {
            let pairs = s.var.pair_counts.as_ref().map(|p| p[i]);
            var_t.push(vec![l.into(), (*w).into(), s.var.values[i].into(), pairs.into()]);
        }
        spectral_rows(&mut corr_t, l, &s.corr, Some(&s.resc));
        per_size.push(json!({
            "L": l,
            "broadening": sigma,
            "sigma_e2": s.corr.sigma_e2,
            "omega_dos": s.corr.omega_dos,
            "corr_var_ratio_zero": s.corr_var_ratio_zero,
            "pair_density_ratio_zero": s.pair_density_ratio_zero,
            "offdiag_weight": s.offdiag_weight,
            "dim": s.dim,
            "families": s.families,
        }));
    }
    out.tables.push(var_t);
    out.tables.push(corr_t);
    Ok(json!({"observable": which.label(), "sizes": per_size}))
}

fn momentum_sf(cfg: &RunConfig, solver: &Solver, out: &mut RunOutput) -> Result<Value> {
    let params = cfg.model.params()?;
    if params.bc != Boundary::Pbc {
        return Err(Error::Config("momentum-sf needs a periodic chain".into()));
    }
    let a = &cfg.analysis;
    let mut per_size = Vec::new();
    let mut t = Table::new("classes", &["L", "omega", "ell", "delta_k", "multiplicity", "corr"]);
    let mut tot = Table::new("total", &["L", "omega", "total_local", "invariant"]);
    for &l in &cfg.sizes {
        let specs = all_momentum_sectors(l, cfg.sectors.m, false);
        let solved = solve_size(solver, l, &specs, &params, true, out)?;
        if solved.len() != specs.len() {
            return Err(Error::numeric(format!("L = {l}"), "momentum decomposition needs every sector"));
        }
        let sectors = eigen_sectors(&solved)?;
        let refs: Vec<&[f64]> = sectors.iter().map(|s| s.energies()).collect();
        let sigma = a.sigma.unwrap_or_else(|| default_broadening(&refs));
        let site = a.site.unwrap_or(0);
        let r = momentum_resolved_sf(&sectors, site, &spectral_grid(cfg, sigma)?)?;
        for c in &r.classes {
            for (i, w) in c.corr.omega.iter().enumerate() {
                t.push(vec![l.into(), (*w).into(), c.ell.into(), c.delta_k.into(), c.multiplicity.into(), c.corr.values[i].into()]);
            }
        }
        spectral_rows(&mut tot, l, &r.total_local, Some(&r.invariant));
        per_size.push(json!({
            "L": l,
            "site": site,
            "broadening": sigma,
            "reconstruction_defect": r.reconstruction_defect,
            "delta0_defect": r.delta0_defect,
            "selection_rule_max": r.selection_rule_max,
            "collapse": to_value(&r.collapse),
        }));
    }
    out.tables.push(t);
    out.tables.push(tot);
    Ok(json!({"sizes": per_size}))
}

fn obc_sf(cfg: &RunConfig, solver: &Solver, out: &mut RunOutput) -> Result<Value> {
    let params = cfg.model.params()?;
    if params.bc != Boundary::Obc {
        return Err(Error::Config("obc-sf needs model.bc = \"obc\"".into()));
    }
    let a = &cfg.analysis;
    let mut per_size = Vec::new();
    let mut t = Table::new("distances", &["L", "omega", "d", "corr"]);
    let mut avg = Table::new("average", &["L", "omega", "average", "average_resc", "bulk", "bulk_resc"]);
    for &l in &cfg.sizes {
        let spec = SectorSpec::magnetization(l, cfg.sectors.m, Boundary::Obc);
        let solved = solve_size(solver, l, &[spec], &params, true, out)?;
        let sectors = eigen_sectors(&solved)?;
        let sigma = a.sigma.unwrap_or_else(|| default_broadening(&[sectors[0].energies()]));
        let r = obc_distance_decomposition(&sectors[0], &spectral_grid(cfg, sigma)?)?;
        for (d, c) in r.contributions.iter().enumerate() {
            for (i, w) in c.omega.iter().enumerate() {
                t.push(vec![l.into(), (*w).into(), d.into(), c.values[i].into()]);
            }
        }
        for (i, w) in r.average.omega.iter().enumerate() {
            avg.push(vec![
                l.into(),
                (*w).into(),
                r.average.values[i].into(),
                r.average_resc.values[i].into(),
                r.bulk.values[i].into(),
                r.bulk_resc.values[i].into(),
            ]);
        }
        per_size.push(json!({
            "L": l,
            "bulk_site": r.bulk_site,
            "broadening": sigma,
            "reconstruction_defect": r.reconstruction_defect,
            "significance": to_value(&r.significance),
            "cross_site": to_value(&r.cross_site),
            "running_mean_gap": r.running_mean_gap,
        }));
    }
    out.tables.push(t);
    out.tables.push(avg);
    Ok(json!({"sizes": per_size}))
}

fn quench(cfg: &RunConfig, solver: &Solver, out: &mut RunOutput) -> Result<Value> {
    let params = cfg.model.params()?;
    if params.bc != Boundary::Pbc {
        return Err(Error::Config("quench needs a periodic chain".into()));
    }
    let which = cfg.observable()?;
    if !which.is_translation_invariant() {
        return Err(Error::Config(format!("quench tracks translation-invariant observables, not {}", which.label())));
    }
    let init = cfg.init()?;
    let a = &cfg.analysis;
    if a.nt < 2 {
        return Err(Error::Config("nt must be at least 2".into()));
    }
    let mut t = Table::new("series", &["L", "t", "o_t"]);
    let mut per_size = Vec::new();
    for &l in &cfg.sizes {
        let specs = all_momentum_sectors(l, cfg.sectors.m, true);
        let solved = solve_size(solver, l, &specs, &params, true, out)?;
        if solved.len() != specs.len() {
            return Err(Error::numeric(format!("L = {l}"), "quench needs every sector"));
        }
        let sectors = eigen_sectors(&solved)?;
        let amps = initial_amplitudes(init, l, cfg.sectors.m)?;
        let setup = QuenchSetup::new(&sectors, &amps)?;
        let elements: Vec<MatrixElementSet> = sectors
            .iter()
            .map(|s| matrix_elements(&build_observable(which, s.basis)?, s, s))
            .collect::<Result<_>>()?;
        let times: Vec<f64> = (0..a.nt).map(|i| a.tmax * i as f64 / (a.nt - 1) as f64).collect();
        let series = evolve_expectation(&setup, &elements, &times)?;
        for (ti, o) in times.iter().zip(&series) {
            t.push(vec![l.into(), (*ti).into(), o.re.into()]);
        }
        let de = diagonal_ensemble(&setup, &elements)?;
        let diag: Vec<f64> = elements.iter().map(|e| e.diagonal()).collect::<Result<Vec<_>>>()?.concat();
        let width = a.window_sigma * energy_spread(&setup.energies);
        let me = microcanonical_average(&setup.energies, &diag, setup.e_bar, width)?;
        if let Some(w) = &me.warning {
            out.warnings.push(format!("L = {l}: {w}"));
        }
        let fl = temporal_fluctuations(&setup, &elements, a.tmax, a.nt)?;
        let lt = long_time_average(&setup, &elements, a.tmax)?;
        let mut energy_drift = 0.0f64;
        let mut norm_drift = 0.0f64;
        for &ti in [0.0, 0.5 * a.tmax, a.tmax].iter() {
            let (e, n) = energy_and_norm(&setup, &sectors, &params, ti)?;
            energy_drift = energy_drift.max((e - setup.e_bar).abs());
            norm_drift = norm_drift.max((n - 1.0).abs());
        }
        per_size.push(json!({
            "L": l,
            "e_bar": setup.e_bar,
            "delta_e0": setup.delta_e0,
            "diagonal_ensemble": de,
            "microcanonical": to_value(&me),
            "temporal": to_value(&fl),
            "long_time": to_value(&lt),
            "energy_drift": energy_drift,
            "norm_drift": norm_drift,
        }));
    }
    out.tables.push(t);
    Ok(json!({"observable": which.label(), "init": to_value(&init), "sizes": per_size}))
}

fn rmt(cfg: &RunConfig, out: &mut RunOutput) -> Result<Value> {
    let a = &cfg.analysis;
    let spec = EnsembleSpec::new(a.ensemble, a.dim, cfg.seed);
    let mut summary = serde_json::Map::new();
    if matches!(a.ensemble, EnsembleKind::Goe | EnsembleKind::Gue) {
        let ev = rescaled_eigenvalues(&spec, 0)?;
        let h = Histogram::from_samples(&ev, BinSpec::Range { lo: -1.5, hi: 1.5, n: 60 })?;
        out.tables.push(hist_table("semicircle".into(), &h, &[("semicircle", &|x| Distribution::Semicircle.pdf(x))]));
        summary.insert("semicircle_ks".into(), json!(crate::stats::ks_distance(&ev, |v| Distribution::Semicircle.cdf(v))));
        summary.insert("entry_variance".into(), to_value(&entry_variance_ratio(&spec, a.draws)?));
    }
    summary.insert("porter_thomas".into(), to_value(&porter_thomas_test(&spec, a.samples)?));
    if a.dim <= 8 && a.dim >= 3 {
        let group = if a.ensemble.beta() == 1 { Group::Orthogonal } else { Group::Unitary };
        let checks = weingarten_pattern_scan(group, a.dim, a.samples, cfg.seed)?;
        let mut t = Table::new("weingarten", &["pattern", "empirical", "std_error", "analytic", "enumerated", "z"]);
        for c in &checks {
            t.push(vec![
                format!("{:?}", c.index).replace(' ', "").into(),
                c.empirical.into(),
                c.std_error.into(),
                c.analytic.into(),
                c.enumerated.into(),
                c.z.into(),
            ]);
        }
        let max_z = checks.iter().map(|c| c.z.abs()).fold(0.0, f64::max);
        summary.insert("weingarten".into(), json!({"patterns": checks.len(), "max_abs_z": max_z}));
        out.tables.push(t);
    }
    Ok(Value::Object(summary))
}

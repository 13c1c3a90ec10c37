//! Versioned JSON run configuration. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::basis::{all_momentum_sectors, Boundary, SectorSpec};
use crate::hamiltonian::{ModelParams, Observable};
use crate::quench::InitialState;
use crate::rmt::EnsembleKind;
use crate::stats::BinSpec;
use crate::{Error, Result};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub delta: f64,
    pub lambda: f64,
    pub bc: Boundary,
    /// Edge field on site 0 of open chains.
    pub hz1: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let p = ModelParams::default();
        Self { delta: p.delta, lambda: p.lambda, bc: p.bc, hz1: p.hz1 }
    }
}

impl ModelConfig {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.delta, self.lambda, self.bc, self.hz1).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Which symmetry sectors of each chain length enter a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SectorSelection {
    #[serde(rename = "M")]
    pub m: i32,
    /// Quasimomentum indices; all of them when absent.
    pub etas: Option<Vec<i32>>,
    /// Split parity at `k ∈ {0, π}` and spin inversion at `M = 0`.
    pub resolve_discrete: bool,
    /// Drop `k = 0` and `k = π`.
    pub exclude_real_momenta: bool,
}

impl Default for SectorSelection {
    fn default() -> Self {
        Self { m: 0, etas: None, resolve_discrete: true, exclude_real_momenta: false }
    }
}

impl SectorSelection {
    /// Sectors of a chain of `l` sites. Open chains resolve only `M`.
    pub fn sectors(&self, l: usize, bc: Boundary) -> Result<Vec<SectorSpec>> {
        let out: Vec<SectorSpec> = match bc {
            Boundary::Obc => vec![SectorSpec::magnetization(l, self.m, Boundary::Obc)],
            Boundary::Pbc => all_momentum_sectors(l, self.m, self.resolve_discrete)
                .into_iter()
                .filter(|s| self.etas.as_ref().map_or(true, |e| e.contains(&s.eta.unwrap())))
                .filter(|s| !(self.exclude_real_momenta && s.is_real_momentum()))
                .collect(),
        };
        for s in &out {
            s.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if out.is_empty() {
            return Err(Error::Config(format!("the sector selection is empty for L = {l}")));
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CachePolicy {
    /// Read valid entries, write new ones.
    #[default]
    Use,
    /// Ignore existing entries and overwrite them.
    Refresh,
    Off,
}

/// Analysis knobs. Each subcommand reads the ones it needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub central_fraction: f64,
    pub bins: BinSpec,
    /// `Z_N`, `Z_NN`, `J_N`, `Z_NN_avg` or `Z_NN^j`.
    pub observable: String,
    /// Running window for diagonal fluctuations.
    pub window: usize,
    pub energy_fraction: f64,
    pub omega_max: Option<f64>,
    pub min_pairs: usize,
    /// Gaussian broadening of the autocorrelation; `0.1·ω_H` when absent.
    pub sigma: Option<f64>,
    pub grid_max: f64,
    pub grid_step: f64,
    pub omega_min: f64,
    pub n_log: usize,
    pub bin_width: f64,
    pub zero_window: f64,
    pub collapse_window: (f64, f64),
    pub site: Option<usize>,
    pub n_states: usize,
    pub cuts: Option<Vec<usize>>,
    pub haar_samples: usize,
    /// `neel`, `zeros` or `eig:λ′,Δ′[,index]`.
    pub init: String,
    pub tmax: f64,
    pub nt: usize,
    pub window_sigma: f64,
    pub ensemble: EnsembleKind,
    pub dim: usize,
    pub draws: usize,
    pub samples: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            central_fraction: 0.5,
            bins: BinSpec::Auto,
            observable: "Z_N".into(),
            window: crate::eth::diagonal::DEFAULT_WINDOW,
            energy_fraction: 0.05,
            omega_max: Some(0.01),
            min_pairs: 50,
            sigma: None,
            grid_max: 12.0,
            grid_step: 0.01,
            omega_min: 0.01,
            n_log: 8,
            bin_width: 0.5,
            zero_window: 0.05,
            collapse_window: (0.5, 4.0),
            site: None,
            n_states: 100,
            cuts: None,
            haar_samples: 0,
            init: "neel".into(),
            tmax: 200.0,
            nt: 400,
            window_sigma: crate::quench::DEFAULT_WINDOW_SIGMA,
            ensemble: EnsembleKind::Goe,
            dim: 1000,
            draws: 20,
            samples: 100_000,
        }
    }
}

/// Parses an observable label.
pub fn parse_observable(s: &str) -> Result<Observable> {
    let t = s.trim();
    let norm = t.to_ascii_lowercase().replace('_', "");
    Ok(match norm.as_str() {
        "identity" => Observable::Identity,
        "zn" => Observable::ZN,
        "znn" => Observable::ZNN,
        "jn" => Observable::JN,
        "znnavg" => Observable::ZNNAvgObc,
        _ => match norm.strip_prefix("znn^") {
            Some(j) => Observable::ZNNLocal(
                j.parse().map_err(|_| Error::Config(format!("bad site in observable {t:?}")))?,
            ),
            None => return Err(Error::Config(format!("unknown observable {t:?}"))),
        },
    })
}

/// Parses `neel`, `zeros` or `eig:λ′,Δ′[,index]`.
pub fn parse_init(s: &str) -> Result<InitialState> {
    let t = s.trim().to_ascii_lowercase();
    let bad = || Error::Config(format!("initial state {s:?} is not neel, zeros or eig:λ′,Δ′[,index]"));
    match t.as_str() {
        "neel" => Ok(InitialState::Neel),
        "zeros" => Ok(InitialState::Zeros),
        _ => {
            let rest = t.strip_prefix("eig:").ok_or_else(bad)?;
            let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
            if parts.len() < 2 || parts.len() > 3 {
                return Err(bad());
            }
            let lambda: f64 = parts[0].parse().map_err(|_| bad())?;
            let delta: f64 = parts[1].parse().map_err(|_| bad())?;
            let index = match parts.get(2) {
                Some(i) => i.parse().map_err(|_| bad())?,
                None => 0,
            };
            Ok(InitialState::Eigenstate { lambda, delta, index })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default)]
    pub model: ModelConfig,
    /// Chain lengths.
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub sectors: SectorSelection,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub cache: CachePolicy,
    #[serde(default)]
    pub seed: u64,
}

fn default_sizes() -> Vec<usize> {
    vec![8]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("eth-lab-out")
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            model: ModelConfig::default(),
            sizes: default_sizes(),
            sectors: SectorSelection::default(),
            analysis: AnalysisConfig::default(),
            output_dir: default_output_dir(),
            cache: CachePolicy::default(),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.version != CONFIG_VERSION {
            return bad(format!("config version {} is not supported (expected {CONFIG_VERSION})", self.version));
        }
        self.model.params()?;
        if self.sizes.is_empty() {
            return bad("sizes is empty".into());
        }
        let a = &self.analysis;
        if !(a.central_fraction > 0.0 && a.central_fraction <= 1.0) {
            return bad(format!("central_fraction {} outside (0, 1]", a.central_fraction));
        }
        if !(a.energy_fraction > 0.0 && a.energy_fraction <= 1.0) {
            return bad(format!("energy_fraction {} outside (0, 1]", a.energy_fraction));
        }
        for (name, v) in [
            ("grid_max", a.grid_max),
            ("grid_step", a.grid_step),
            ("omega_min", a.omega_min),
            ("bin_width", a.bin_width),
            ("zero_window", a.zero_window),
            ("tmax", a.tmax),
            ("window_sigma", a.window_sigma),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        if let Some(s) = a.sigma {
            if !(s > 0.0) {
                return bad(format!("sigma = {s} must be positive"));
            }
        }
        if a.collapse_window.0 >= a.collapse_window.1 {
            return bad("collapse_window must be increasing".into());
        }
        parse_observable(&a.observable)?;
        parse_init(&a.init)?;
        Ok(())
    }

    pub fn observable(&self) -> Result<Observable> {
        parse_observable(&self.analysis.observable)
    }

    pub fn init(&self) -> Result<InitialState> {
        parse_init(&self.analysis.init)
    }
}

//! `eth-lab`: exact-diagonalization and ETH diagnostics from the command line.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use eth_lab::basis::Boundary;
use eth_lab::cli_io::commands::{self, Command};
use eth_lab::cli_io::{cache_dir_from_env, write_run, CachePolicy, RunConfig, Solver};
use eth_lab::rmt::EnsembleKind;
use eth_lab::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "eth-lab", version, about = "Symmetry-resolved ED and eigenstate-thermalization diagnostics for spin-1 XXZ chains")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    over: Overrides,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Sub {
    /// Level-spacing and spacing-ratio statistics.
    Levels,
    /// Density of states and its width scaling.
    Dos,
    /// Eigenstate entanglement against the fixed-magnetization Page curve.
    Page,
    /// Diagonal matrix elements and their fluctuations.
    EthDiag,
    /// Off-diagonal element distributions and variance scaling.
    EthOffdiag,
    /// Spectral functions var, corr and resc.
    Spectral,
    /// Local spectral function resolved by momentum-transfer class.
    MomentumSf,
    /// Open-chain spectral function resolved by site distance.
    ObcSf,
    /// Quench dynamics in the energy eigenbasis.
    Quench,
    /// Random-matrix reference checks.
    Rmt,
}

impl Sub {
    fn command(self) -> Command {
        match self {
            Sub::Levels => Command::Levels,
            Sub::Dos => Command::Dos,
            Sub::Page => Command::Page,
            Sub::EthDiag => Command::EthDiag,
            Sub::EthOffdiag => Command::EthOffdiag,
            Sub::Spectral => Command::Spectral,
            Sub::MomentumSf => Command::MomentumSf,
            Sub::ObcSf => Command::ObcSf,
            Sub::Quench => Command::Quench,
            Sub::Rmt => Command::Rmt,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum BcArg {
    Pbc,
    Obc,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum CacheArg {
    Use,
    Refresh,
    Off,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum EnsembleArg {
    Goe,
    Gue,
    HaarO,
    HaarU,
}

/// Flags override the config file.
#[derive(clap::Args, Debug, Default)]
struct Overrides {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Chain lengths, comma separated.
    #[arg(long = "L", global = true, value_delimiter = ',')]
    sizes: Vec<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    bc: Option<BcArg>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    hz1: Option<f64>,
    /// Magnetization sector.
    #[arg(long = "M", global = true, allow_hyphen_values = true)]
    m: Option<i32>,
    /// `all`, `nonreal` (drop k = 0, π) or a comma-separated list of η.
    #[arg(long, global = true, allow_hyphen_values = true)]
    sectors: Option<String>,
    /// Do not split parity and spin-inversion sectors.
    #[arg(long, global = true)]
    no_discrete: bool,
    #[arg(long, global = true)]
    observable: Option<String>,
    /// `neel`, `zeros` or `eig:λ′,Δ′[,index]`.
    #[arg(long, global = true)]
    init: Option<String>,
    #[arg(long, global = true)]
    tmax: Option<f64>,
    #[arg(long, global = true)]
    nt: Option<usize>,
    /// Broadening of the autocorrelation.
    #[arg(long, global = true)]
    sigma: Option<f64>,
    #[arg(long, global = true)]
    site: Option<usize>,
    #[arg(long, global = true)]
    n_states: Option<usize>,
    #[arg(long, global = true)]
    haar_samples: Option<usize>,
    #[arg(long, global = true)]
    ensemble: Option<EnsembleArg>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    draws: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    cache: Option<CacheArg>,
}

fn apply(cfg: &mut RunConfig, o: &Overrides) -> Result<(), Error> {
    if !o.sizes.is_empty() {
        cfg.sizes = o.sizes.clone();
    }
    let m = &mut cfg.model;
    m.lambda = o.lambda.unwrap_or(m.lambda);
    m.delta = o.delta.unwrap_or(m.delta);
    m.hz1 = o.hz1.unwrap_or(m.hz1);
    if let Some(bc) = o.bc {
        m.bc = match bc {
            BcArg::Pbc => Boundary::Pbc,
            BcArg::Obc => Boundary::Obc,
        };
    }
    let s = &mut cfg.sectors;
    s.m = o.m.unwrap_or(s.m);
    if o.no_discrete {
        s.resolve_discrete = false;
    }
    match o.sectors.as_deref().map(str::trim) {
        None => {}
        Some("all") => {
            s.etas = None;
            s.exclude_real_momenta = false;
        }
        Some("nonreal") => {
            s.etas = None;
            s.exclude_real_momenta = true;
        }
        Some(list) => {
            let etas = list
                .split(',')
                .map(|x| x.trim().parse::<i32>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| Error::Config(format!("--sectors {list:?} is not all, nonreal or a list of η")))?;
            s.etas = Some(etas);
        }
    }
    let a = &mut cfg.analysis;
    if let Some(v) = &o.observable {
        a.observable = v.clone();
    }
    if let Some(v) = &o.init {
        a.init = v.clone();
    }
    a.tmax = o.tmax.unwrap_or(a.tmax);
    a.nt = o.nt.unwrap_or(a.nt);
    a.sigma = o.sigma.or(a.sigma);
    a.site = o.site.or(a.site);
    a.n_states = o.n_states.unwrap_or(a.n_states);
    a.haar_samples = o.haar_samples.unwrap_or(a.haar_samples);
    a.dim = o.dim.unwrap_or(a.dim);
    a.samples = o.samples.unwrap_or(a.samples);
    a.draws = o.draws.unwrap_or(a.draws);
    if let Some(e) = o.ensemble {
        a.ensemble = match e {
            EnsembleArg::Goe => EnsembleKind::Goe,
            EnsembleArg::Gue => EnsembleKind::Gue,
            EnsembleArg::HaarO => EnsembleKind::HaarO,
            EnsembleArg::HaarU => EnsembleKind::HaarU,
        };
    }
    cfg.seed = o.seed.unwrap_or(cfg.seed);
    if let Some(p) = &o.out {
        cfg.output_dir = p.clone();
    }
    if let Some(c) = o.cache {
        cfg.cache = match c {
            CacheArg::Use => CachePolicy::Use,
            CacheArg::Refresh => CachePolicy::Refresh,
            CacheArg::Off => CachePolicy::Off,
        };
    }
    cfg.validate()
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numeric() || matches!(e, Error::Io(_)) {
        EXIT_NUMERIC
    } else {
        EXIT_CONFIG
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let started = Instant::now();
    let cmd = cli.command.command();
    let mut cfg = match &cli.over.config {
        Some(p) => match RunConfig::from_file(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_CONFIG);
            }
        },
        None => RunConfig::default(),
    };
    if let Err(e) = apply(&mut cfg, &cli.over) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let cache_dir = cache_dir_from_env(&cfg.output_dir.join("cache"));
    let solver = match Solver::new(cfg.cache, Some(cache_dir)) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let out = match commands::run(cmd, &cfg, &solver) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {}: {e}", cmd.name());
            return ExitCode::from(exit_code(&e));
        }
    };
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    let wall = started.elapsed().as_secs_f64();
    match write_run(&cfg.output_dir, cmd.name(), &cfg, &out, &solver.stats(), wall) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: writing outputs: {e}");
            return ExitCode::from(EXIT_NUMERIC);
        }
    }
    if !out.errors.is_empty() {
        for e in &out.errors {
            eprintln!("error: {e}");
        }
        return ExitCode::from(EXIT_NUMERIC);
    }
    ExitCode::SUCCESS
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::InvalidSpec("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::numeric("eig", "no convergence")), EXIT_NUMERIC);
        assert_eq!(exit_code(&Error::Consistency("x".into())), EXIT_NUMERIC);
    }

    #[test]
    fn flags_override_config() {
        let cli = Cli::try_parse_from(["eth-lab", "levels", "--L", "8,10", "--lambda", "1", "--sectors", "nonreal", "--cache", "off"]).unwrap();
        let mut cfg = RunConfig::default();
        apply(&mut cfg, &cli.over).unwrap();
        assert_eq!(cfg.sizes, vec![8, 10]);
        assert_eq!(cfg.model.lambda, 1.0);
        assert!(cfg.sectors.exclude_real_momenta);
        assert_eq!(cfg.cache, CachePolicy::Off);
        let cli = Cli::try_parse_from(["eth-lab", "levels", "--sectors", "1,-2"]).unwrap();
        apply(&mut cfg, &cli.over).unwrap();
        assert_eq!(cfg.sectors.etas, Some(vec![1, -2]));
    }
}

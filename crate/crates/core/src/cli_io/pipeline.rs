//! Cached sector solves shared by the subcommands.

use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;

use super::cache::{Lookup, SpectrumCache};
use super::config::CachePolicy;
use super::output::SolveStats;
use crate::basis::{build_sym_basis, SectorSpec, SymBasis};
use crate::hamiltonian::{build_hamiltonian, ModelParams};
use crate::spectra::{diagonalize_real, eigenvalues_real, Spectrum};
use crate::Result;

pub struct SolvedSector {
    pub basis: SymBasis,
    pub spectrum: Spectrum,
    pub from_cache: bool,
}

/// Diagonalizes sectors, reading and writing the spectrum cache.
pub struct Solver {
    cache: Option<SpectrumCache>,
    policy: CachePolicy,
    stats: Mutex<SolveStats>,
    warnings: Mutex<Vec<String>>,
    /// Serializes cache writes.
    writer: Mutex<()>,
}

impl Solver {
    pub fn new(policy: CachePolicy, dir: Option<PathBuf>) -> Result<Self> {
        let cache = match (policy, dir) {
            (CachePolicy::Off, _) | (_, None) => None,
            (_, Some(d)) => Some(SpectrumCache::new(d)?),
        };
        Ok(Self {
            cache,
            policy,
            stats: Mutex::new(SolveStats::default()),
            warnings: Mutex::new(Vec::new()),
            writer: Mutex::new(()),
        })
    }

    /// A solver without a cache.
    pub fn uncached() -> Self {
        Self::new(CachePolicy::Off, None).expect("no cache directory to create")
    }

    pub fn cache_dir(&self) -> Option<&std::path::Path> {
        self.cache.as_ref().map(|c| c.dir.as_path())
    }

    pub fn stats(&self) -> SolveStats {
        self.stats.lock().unwrap().clone()
    }

    pub fn take_warnings(&self) -> Vec<String> {
        std::mem::take(&mut *self.warnings.lock().unwrap())
    }

    fn warn(&self, msg: String) {
        log::warn!("{msg}");
        self.warnings.lock().unwrap().push(msg);
    }

    /// Solves one sector. Without `vectors` only eigenvalues are computed,
    /// and nothing is written to the cache.
    pub fn solve(&self, spec: SectorSpec, params: &ModelParams, vectors: bool) -> Result<SolvedSector> {
        let basis = build_sym_basis(spec)?;
        let digest = params.digest();
        let block = build_hamiltonian(params, &basis)?;
        if let (Some(cache), CachePolicy::Use) = (&self.cache, self.policy) {
            match cache.load(&spec, digest) {
                Lookup::Hit(s) => match s.check(&block) {
                    Ok(()) => {
                        self.stats.lock().unwrap().cache_hits += 1;
                        let spectrum = if vectors { s } else { s.values_only() };
                        return Ok(SolvedSector { basis, spectrum, from_cache: true });
                    }
                    Err(e) => self.warn(format!("cache entry for {} fails verification ({e}); recomputing", spec.tag())),
                },
                Lookup::Invalid(why) => self.warn(format!("unusable cache entry ({why}); recomputing")),
                Lookup::Miss => {}
            }
        }
        let t0 = Instant::now();
        let spectrum = if vectors {
            diagonalize_real(&block, &basis, digest)?
        } else {
            eigenvalues_real(&block, &basis, digest)?
        };
        {
            let mut st = self.stats.lock().unwrap();
            st.cache_misses += 1;
            st.diagonalizations += 1;
            st.diagonalization_seconds += t0.elapsed().as_secs_f64();
        }
        if let (Some(cache), true) = (&self.cache, vectors) {
            let _guard = self.writer.lock().unwrap();
            if let Err(e) = cache.store(&spectrum) {
                self.warn(format!("cannot write cache entry for {}: {e}", spec.tag()));
            }
        }
        Ok(SolvedSector { basis, spectrum, from_cache: false })
    }

    /// Solves every sector; one failure does not stop the others.
    pub fn solve_all(&self, specs: &[SectorSpec], params: &ModelParams, vectors: bool) -> Vec<(SectorSpec, Result<SolvedSector>)> {
        specs.par_iter().map(|&s| (s, self.solve(s, params, vectors))).collect()
    }
}

/// Splits per-sector results into successes and error messages.
pub fn partition(results: Vec<(SectorSpec, Result<SolvedSector>)>) -> (Vec<SolvedSector>, Vec<String>) {
    let mut ok = Vec::new();
    let mut errors = Vec::new();
    for (spec, r) in results {
        match r {
            Ok(s) => ok.push(s),
            Err(e) => errors.push(format!("{}: {e}", spec.tag())),
        }
    }
    (ok, errors)
}

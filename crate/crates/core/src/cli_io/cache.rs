//! On-disk spectrum cache.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "ETHS" | version u32 | params digest u64
//! | L u32 | M i32 | η flag u8, η i32 | parity i8 | spin flip i8 | boundary u8
//! | dims u64 | payload checksum u64
//! | eigenvalues f64[dims] | Re V f64[dims²] | Im V f64[dims²]   (column-major)
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use faer::Mat;
use sha2::{Digest, Sha256};

use crate::basis::{Boundary, SectorSpec};
use crate::spectra::Spectrum;
use crate::{c64, Error, Result};

pub const MAGIC: &[u8; 4] = b"ETHS";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 4 + 4 + 8 + 4 + 4 + 1 + 4 + 1 + 1 + 1 + 8 + 8;

/// First eight bytes of the SHA-256 of the payload.
fn checksum(payload: &[u8]) -> u64 {
    u64::from_le_bytes(Sha256::digest(payload)[..8].try_into().unwrap())
}

/// Payload size in bytes for a sector of dimension `dims`.
pub fn payload_len(dims: usize) -> usize {
    dims * (1 + 2 * dims) * 8
}

fn encode_spec(out: &mut Vec<u8>, spec: &SectorSpec) {
    out.extend((spec.l as u32).to_le_bytes());
    out.extend(spec.m.to_le_bytes());
    out.push(spec.eta.is_some() as u8);
    out.extend(spec.eta.unwrap_or(0).to_le_bytes());
    out.push(spec.parity.unwrap_or(0) as u8);
    out.push(spec.spin_flip.unwrap_or(0) as u8);
    out.push(match spec.bc {
        Boundary::Pbc => 0,
        Boundary::Obc => 1,
    });
}

/// Serializes a spectrum with eigenvectors.
pub fn encode(s: &Spectrum) -> Result<Vec<u8>> {
    let v = s.vectors()?;
    let n = s.dim();
    let mut out = Vec::with_capacity(HEADER_LEN + payload_len(n));
    out.extend(MAGIC);
    out.extend(FORMAT_VERSION.to_le_bytes());
    out.extend(s.params_hash.to_le_bytes());
    encode_spec(&mut out, &s.spec);
    out.extend((n as u64).to_le_bytes());
    let mut payload = Vec::with_capacity(payload_len(n));
    for e in &s.eigenvalues {
        payload.extend(e.to_le_bytes());
    }
    let parts: [fn(c64) -> f64; 2] = [|z| z.re, |z| z.im];
    for part in parts {
        for j in 0..n {
            for i in 0..n {
                payload.extend(part(v[(i, j)]).to_le_bytes());
            }
        }
    }
    out.extend(checksum(&payload).to_le_bytes());
    out.extend(payload);
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let bytes = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| Error::InvalidInput("truncated cache header".into()))?;
        self.pos = end;
        Ok(bytes.try_into().unwrap())
    }
}

/// Parses and validates a cache file against the expected key.
pub fn decode(buf: &[u8], spec: &SectorSpec, params_hash: u64) -> Result<Spectrum> {
    let bad = |msg: String| Err(Error::InvalidInput(msg));
    let mut r = Reader { buf, pos: 0 };
    if &r.take::<4>()? != MAGIC {
        return bad("bad magic".into());
    }
    let version = u32::from_le_bytes(r.take()?);
    if version != FORMAT_VERSION {
        return bad(format!("format version {version}, expected {FORMAT_VERSION}"));
    }
    let digest = u64::from_le_bytes(r.take()?);
    if digest != params_hash {
        return bad(format!("params digest {digest:016x}, expected {params_hash:016x}"));
    }
    let mut expected = Vec::new();
    encode_spec(&mut expected, spec);
    let stored = &buf[r.pos..(r.pos + expected.len()).min(buf.len())];
    if stored != expected.as_slice() {
        return bad(format!("sector header does not match {}", spec.tag()));
    }
    r.pos += expected.len();
    let n = u64::from_le_bytes(r.take()?) as usize;
    let sum = u64::from_le_bytes(r.take()?);
    let body = &buf[r.pos..];
    if n == 0 || n.checked_mul(1 + 2 * n).map(|x| x * 8) != Some(body.len()) {
        return bad(format!("payload of {} bytes for dims = {n}", body.len()));
    }
    if checksum(body) != sum {
        return bad("payload checksum mismatch".into());
    }
    let f = |k: usize| f64::from_le_bytes(body[8 * k..8 * k + 8].try_into().unwrap());
    let eigenvalues: Vec<f64> = (0..n).map(f).collect();
    if eigenvalues.iter().any(|e| !e.is_finite()) || eigenvalues.windows(2).any(|w| w[1] < w[0]) {
        return bad("eigenvalues not finite and ascending".into());
    }
    let re0 = n;
    let im0 = n + n * n;
    let v = Mat::<c64>::from_fn(n, n, |i, j| c64::new(f(re0 + j * n + i), f(im0 + j * n + i)));
    Ok(Spectrum { spec: *spec, params_hash, eigenvalues, eigenvectors: Some(v) })
}

/// Outcome of a cache lookup.
#[derive(Debug)]
pub enum Lookup {
    Hit(Spectrum),
    Miss,
    /// The file exists but is unusable; the reason is reported as a warning.
    Invalid(String),
}

/// Directory of `.eths` files keyed by sector tag and params digest.
#[derive(Clone, Debug)]
pub struct SpectrumCache {
    pub dir: PathBuf,
}

impl SpectrumCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn path_for(&self, spec: &SectorSpec, params_hash: u64) -> PathBuf {
        self.dir.join(format!("{}_{params_hash:016x}.eths", spec.tag()))
    }

    pub fn load(&self, spec: &SectorSpec, params_hash: u64) -> Lookup {
        let path = self.path_for(spec, params_hash);
        match fs::read(&path) {
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Lookup::Miss,
            Err(e) => Lookup::Invalid(format!("{}: {e}", path.display())),
            Ok(buf) => match decode(&buf, spec, params_hash) {
                Ok(s) => Lookup::Hit(s),
                Err(e) => Lookup::Invalid(format!("{}: {e}", path.display())),
            },
        }
    }

    /// Writes through a temporary file and a rename, so readers never see a
    /// partial entry.
    pub fn store(&self, s: &Spectrum) -> Result<PathBuf> {
        let path = self.path_for(&s.spec, s.params_hash);
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        let bytes = encode(s)?;
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(path)
    }
}

/// `ETH_LAB_CACHE_DIR`, else `fallback`.
pub fn cache_dir_from_env(fallback: &Path) -> PathBuf {
    std::env::var_os("ETH_LAB_CACHE_DIR")
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| fallback.to_path_buf())
}

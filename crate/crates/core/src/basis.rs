//! Spin-1 product states, magnetization sectors and symmetry-adapted bases.
//!
//! A product state of `L` sites is stored as a base-3 integer whose digit `j`
//! is the trit `t_j = m_j + 1` of site `j`. Translation moves the content of
//! site `j` to site `j + 1` (periodically), so `T|a⟩` has `(Ta)_{j+1} = a_j`.
//!
//! Momentum states are `|a,k⟩ = N⁻¹ Σ_r e^{ikr} T^r |a⟩`, which satisfy
//! `T|a,k⟩ = e^{-ik}|a,k⟩`. Parity (site reversal) and spin inversion are
//! applied on top of the translation orbits as a projection with characters
//! `±1`.

use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest chain length accepted by basis construction.
pub const MAX_SITES: usize = 16;

/// Chains up to this length use a dense `3^L` lookup table.
const DIRECT_TABLE_MAX_SITES: usize = 12;

const fn pow3_table() -> [u32; MAX_SITES + 1] {
    let mut t = [1u32; MAX_SITES + 1];
    let mut i = 1;
    while i <= MAX_SITES {
        t[i] = t[i - 1] * 3;
        i += 1;
    }
    t
}

/// `POW3[j] = 3^j`.
pub const POW3: [u32; MAX_SITES + 1] = pow3_table();

#[inline]
pub fn trit(code: u32, j: usize) -> u8 {
    ((code / POW3[j]) % 3) as u8
}

#[inline]
pub fn sz(code: u32, j: usize) -> i32 {
    trit(code, j) as i32 - 1
}

pub fn magnetization(code: u32, l: usize) -> i32 {
    let mut c = code;
    let mut m = 0i32;
    for _ in 0..l {
        m += (c % 3) as i32 - 1;
        c /= 3;
    }
    m
}

/// Moves the content of site `j` to site `(j + r) mod L`.
#[inline]
pub fn translate_code(code: u32, l: usize, r: usize) -> u32 {
    let r = r % l;
    if r == 0 {
        return code;
    }
    let split = POW3[l - r];
    let low = code % split;
    let high = code / split;
    low * POW3[r] + high
}

/// Site reversal `j → L − 1 − j`.
pub fn reflect_code(code: u32, l: usize) -> u32 {
    let mut c = code;
    let mut out = 0u32;
    for _ in 0..l {
        out = out * 3 + c % 3;
        c /= 3;
    }
    out
}

/// Spin inversion `m → −m` on every site.
#[inline]
pub fn flip_code(code: u32, l: usize) -> u32 {
    (POW3[l] - 1) - code
}

/// A computational basis element of an `L`-site spin-1 chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProductState {
    pub code: u32,
    pub len: u8,
}

impl ProductState {
    pub fn new(code: u32, len: usize) -> Result<Self> {
        if len == 0 || len > MAX_SITES {
            return Err(Error::InvalidSpec(format!("chain length {len} outside 1..={MAX_SITES}")));
        }
        if code >= POW3[len] {
            return Err(Error::InvalidInput(format!("code {code} ≥ 3^{len}")));
        }
        Ok(Self { code, len: len as u8 })
    }

    /// Builds a state from per-site trits (site 0 first).
    pub fn from_trits(trits: &[u8]) -> Result<Self> {
        if trits.iter().any(|&t| t > 2) {
            return Err(Error::InvalidInput("trits must be 0, 1 or 2".into()));
        }
        let code = trits
            .iter()
            .enumerate()
            .map(|(j, &t)| t as u32 * POW3[j])
            .sum();
        Self::new(code, trits.len())
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn trits(&self) -> Vec<u8> {
        (0..self.len()).map(|j| trit(self.code, j)).collect()
    }

    pub fn sz(&self, j: usize) -> i32 {
        sz(self.code, j)
    }

    pub fn magnetization(&self) -> i32 {
        magnetization(self.code, self.len())
    }

    pub fn translate(&self, r: usize) -> Self {
        Self { code: translate_code(self.code, self.len(), r), len: self.len }
    }

    pub fn reflect(&self) -> Self {
        Self { code: reflect_code(self.code, self.len()), len: self.len }
    }

    pub fn flip(&self) -> Self {
        Self { code: flip_code(self.code, self.len()), len: self.len }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[serde(alias = "PBC")]
    Pbc,
    #[serde(alias = "OBC")]
    Obc,
}

/// Symmetry quantum numbers of a block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SectorSpec {
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "M")]
    pub m: i32,
    /// Quasimomentum index, `k = 2πη/L`. `None` leaves translations unresolved.
    pub eta: Option<i32>,
    pub parity: Option<i8>,
    pub spin_flip: Option<i8>,
    pub bc: Boundary,
}

/// Allowed quasimomentum indices for a ring of `l` sites.
pub fn eta_range(l: usize) -> std::ops::RangeInclusive<i32> {
    let l = l as i32;
    if l % 2 == 0 {
        (-l / 2 + 1)..=(l / 2)
    } else {
        (-(l / 2))..=(l / 2)
    }
}

impl SectorSpec {
    /// Plain magnetization sector.
    pub fn magnetization(l: usize, m: i32, bc: Boundary) -> Self {
        Self { l, m, eta: None, parity: None, spin_flip: None, bc }
    }

    /// Periodic momentum sector.
    pub fn momentum(l: usize, m: i32, eta: i32) -> Self {
        Self { l, m, eta: Some(eta), parity: None, spin_flip: None, bc: Boundary::Pbc }
    }

    pub fn with_parity(mut self, p: i8) -> Self {
        self.parity = Some(p);
        self
    }

    pub fn with_spin_flip(mut self, z: i8) -> Self {
        self.spin_flip = Some(z);
        self
    }

    /// `k = 2πη/L`, zero when translations are unresolved.
    pub fn k(&self) -> f64 {
        self.eta.map_or(0.0, |e| 2.0 * PI * e as f64 / self.l as f64)
    }

    /// True when `k ∈ {0, π}` (or translations are unresolved).
    pub fn is_real_momentum(&self) -> bool {
        match self.eta {
            None => true,
            Some(e) => (2 * e).rem_euclid(self.l as i32) == 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.l == 0 || self.l > MAX_SITES {
            return bad(format!("L = {} outside 1..={MAX_SITES}", self.l));
        }
        if self.m.unsigned_abs() as usize > self.l {
            return bad(format!("|M| = {} exceeds L = {}", self.m.abs(), self.l));
        }
        for (name, v) in [("parity", self.parity), ("spin_flip", self.spin_flip)] {
            if let Some(v) = v {
                if v != 1 && v != -1 {
                    return bad(format!("{name} must be ±1, got {v}"));
                }
            }
        }
        if self.spin_flip.is_some() && self.m != 0 {
            return bad(format!("spin inversion requires M = 0, got M = {}", self.m));
        }
        match self.bc {
            Boundary::Obc => {
                if self.eta.is_some() {
                    return bad("open chains carry no quasimomentum".into());
                }
                if self.parity.is_some() {
                    return bad("parity is resolved only for periodic chains".into());
                }
            }
            Boundary::Pbc => {
                if let Some(e) = self.eta {
                    if !eta_range(self.l).contains(&e) {
                        return bad(format!("η = {e} outside {:?} for L = {}", eta_range(self.l), self.l));
                    }
                }
                if self.parity.is_some() {
                    match self.eta {
                        None => return bad("parity requires a momentum sector".into()),
                        Some(_) if !self.is_real_momentum() => {
                            return bad(format!("parity requires k ∈ {{0, π}}, got η = {:?}", self.eta))
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(())
    }

    /// Short stable identifier, used in file names and logs.
    pub fn tag(&self) -> String {
        let opt = |v: Option<i32>| v.map_or("x".to_string(), |v| v.to_string());
        format!(
            "L{}_M{}_k{}_p{}_z{}_{}",
            self.l,
            self.m,
            opt(self.eta),
            opt(self.parity.map(i32::from)),
            opt(self.spin_flip.map(i32::from)),
            match self.bc {
                Boundary::Pbc => "pbc",
                Boundary::Obc => "obc",
            }
        )
    }
}

fn binomial(n: i128, k: i128) -> Result<i128> {
    if n < 0 || k < 0 || k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: i128 = 1;
    for i in 0..k {
        acc = acc
            .checked_mul(n - i)
            .ok_or_else(|| Error::Overflow(format!("C({n}, {k})")))?
            / (i + 1);
    }
    Ok(acc)
}

/// Dimension of the sector with `N = M + L` "particles" on `L` sites,
/// `Σ_k (−1)^k C(L,k) C(N−3k+L−1, L−1)`, evaluated exactly in 128-bit integers.
pub fn sector_dimension(n: i64, l: usize) -> Result<u128> {
    if n < 0 || n > 2 * l as i64 {
        return Err(Error::InvalidInput(format!("N = {n} outside 0..=2L for L = {l}")));
    }
    let (n, l) = (n as i128, l as i128);
    if l == 0 {
        return Ok(1);
    }
    let mut total: i128 = 0;
    let mut k = 0;
    while 3 * k <= n && k <= l {
        let term = binomial(l, k)?
            .checked_mul(binomial(n - 3 * k + l - 1, l - 1)?)
            .ok_or_else(|| Error::Overflow(format!("term k = {k} of D({n}, {l})")))?;
        total = if k % 2 == 0 { total.checked_add(term) } else { total.checked_sub(term) }
            .ok_or_else(|| Error::Overflow(format!("D({n}, {l})")))?;
        k += 1;
    }
    u128::try_from(total).map_err(|_| Error::Consistency(format!("negative dimension for D({n}, {l})")))
}

/// `D^L_M`, zero outside `|M| ≤ L`.
pub fn dim_lm(l: usize, m: i64) -> Result<u128> {
    if m.unsigned_abs() > l as u64 {
        return Ok(0);
    }
    sector_dimension(m + l as i64, l)
}

/// All `D^L_M` for `M = −L..=L` via the trinomial recursion. Stays exact for
/// chains far longer than the alternating sum tolerates.
pub fn trinomial_dimensions(l: usize) -> Result<Vec<u128>> {
    let mut row = vec![1u128];
    for step in 1..=l {
        let mut next = vec![0u128; 2 * step + 1];
        for (i, &v) in row.iter().enumerate() {
            for d in 0..3 {
                next[i + d] = next[i + d]
                    .checked_add(v)
                    .ok_or_else(|| Error::Overflow(format!("trinomial row {step}")))?;
            }
        }
        row = next;
    }
    Ok(row)
}

/// The values entering the two dimension recursions at `(L, M)`.
#[derive(Clone, Debug, Serialize)]
pub struct DimensionIdentityReport {
    pub l: usize,
    pub m: i32,
    pub d: u128,
    pub d_prev_plus: u128,
    pub d_prev_zero: u128,
    pub d_prev_minus: u128,
}

/// Checks `D^L_M = D^{L−1}_{M+1} + D^{L−1}_M + D^{L−1}_{M−1}` and
/// `M·D^L_M = L·(D^{L−1}_{M−1} − D^{L−1}_{M+1})` in exact arithmetic.
pub fn check_dimension_identities(l: usize, m: i32) -> Result<DimensionIdentityReport> {
    if l < 2 || m.unsigned_abs() as usize > l {
        return Err(Error::InvalidInput(format!("need L ≥ 2 and |M| ≤ L, got L = {l}, M = {m}")));
    }
    let m64 = m as i64;
    let report = DimensionIdentityReport {
        l,
        m,
        d: dim_lm(l, m64)?,
        d_prev_plus: dim_lm(l - 1, m64 + 1)?,
        d_prev_zero: dim_lm(l - 1, m64)?,
        d_prev_minus: dim_lm(l - 1, m64 - 1)?,
    };
    let sum = report.d_prev_plus + report.d_prev_zero + report.d_prev_minus;
    if sum != report.d {
        return Err(Error::Consistency(format!(
            "D^{l}_{m} = {} but neighbours sum to {sum}",
            report.d
        )));
    }
    let lhs = m as i128 * report.d as i128;
    let rhs = l as i128 * (report.d_prev_minus as i128 - report.d_prev_plus as i128);
    if lhs != rhs {
        return Err(Error::Consistency(format!("M·D = {lhs} but L·ΔD = {rhs} at L = {l}, M = {m}")));
    }
    Ok(report)
}

/// Ascending list of all codes with magnetization `m`.
pub fn enumerate_m_sector(l: usize, m: i32) -> Vec<ProductState> {
    sector_codes(l, m)
        .into_iter()
        .map(|code| ProductState { code, len: l as u8 })
        .collect()
}

/// Codes of the magnetization sector in ascending order.
pub fn sector_codes(l: usize, m: i32) -> Vec<u32> {
    fn walk(pos: usize, need: i32, prefix: u32, out: &mut Vec<u32>) {
        // digits are fixed from the most significant site downwards, which
        // keeps the output sorted
        if pos == 0 {
            if need == 0 {
                out.push(prefix);
            }
            return;
        }
        let site = pos - 1;
        for t in 0..3u32 {
            let rest = need - (t as i32 - 1);
            if rest.unsigned_abs() as usize <= site {
                walk(site, rest, prefix + t * POW3[site], out);
            }
        }
    }
    let mut out = Vec::new();
    if l <= MAX_SITES && m.unsigned_abs() as usize <= l {
        walk(l, m, 0, &mut out);
    }
    out
}

const NO_ENTRY: u32 = u32::MAX;

/// Symmetry-adapted basis of one sector.
///
/// Each basis vector is stored through its expansion over product states.
/// `lookup` maps a product state to the unique basis vector whose support
/// contains it, together with the overlap `⟨v_a|s⟩`.
#[derive(Clone, Debug)]
pub struct SymBasis {
    pub spec: SectorSpec,
    pub reps: Vec<ProductState>,
    pub periods: Vec<u32>,
    pub norms: Vec<f64>,
    sector: Vec<u32>,
    direct: Option<Vec<u32>>,
    owner: Vec<u32>,
    overlap: Vec<c64>,
    exp_offsets: Vec<usize>,
    exp_codes: Vec<u32>,
    exp_amps: Vec<c64>,
}

/// One element `T^r P^p Z^z` of the symmetry group together with its character.
#[derive(Clone, Copy)]
struct GroupElement {
    shift: usize,
    reflect: bool,
    flip: bool,
    character: c64,
}

fn group_elements(spec: &SectorSpec) -> Vec<GroupElement> {
    let l = spec.l;
    let shifts: Vec<usize> = if spec.eta.is_some() { (0..l).collect() } else { vec![0] };
    let refl: &[bool] = if spec.parity.is_some() { &[false, true] } else { &[false] };
    let flips: &[bool] = if spec.spin_flip.is_some() { &[false, true] } else { &[false] };
    let k = spec.k();
    let mut out = Vec::with_capacity(shifts.len() * refl.len() * flips.len());
    for &r in &shifts {
        for &p in refl {
            for &z in flips {
                let mut chi = c64::from_polar(1.0, k * r as f64);
                if p {
                    chi *= spec.parity.unwrap() as f64;
                }
                if z {
                    chi *= spec.spin_flip.unwrap() as f64;
                }
                out.push(GroupElement { shift: r, reflect: p, flip: z, character: chi });
            }
        }
    }
    out
}

impl GroupElement {
    fn apply(&self, code: u32, l: usize) -> u32 {
        let mut c = code;
        if self.flip {
            c = flip_code(c, l);
        }
        if self.reflect {
            c = reflect_code(c, l);
        }
        translate_code(c, l, self.shift)
    }
}

fn translation_period(code: u32, l: usize) -> u32 {
    (1..=l).find(|&r| translate_code(code, l, r) == code).unwrap_or(l) as u32
}

impl SymBasis {
    pub fn build(spec: SectorSpec) -> Result<Self> {
        spec.validate()?;
        let l = spec.l;
        let sector = sector_codes(l, spec.m);
        let direct = (l <= DIRECT_TABLE_MAX_SITES).then(|| {
            let mut t = vec![NO_ENTRY; POW3[l] as usize];
            for (i, &c) in sector.iter().enumerate() {
                t[c as usize] = i as u32;
            }
            t
        });
        let group = group_elements(&spec);

        let mut basis = SymBasis {
            spec,
            reps: Vec::new(),
            periods: Vec::new(),
            norms: Vec::new(),
            owner: vec![NO_ENTRY; sector.len()],
            overlap: vec![c64::new(0.0, 0.0); sector.len()],
            sector,
            direct,
            exp_offsets: vec![0],
            exp_codes: Vec::new(),
            exp_amps: Vec::new(),
        };
        let mut visited = vec![false; basis.sector.len()];
        let mut images: Vec<(u32, c64)> = Vec::with_capacity(group.len());

        for pos in 0..basis.sector.len() {
            if visited[pos] {
                continue;
            }
            let a = basis.sector[pos];
            images.clear();
            for g in &group {
                let s = g.apply(a, l);
                match images.iter_mut().find(|(c, _)| *c == s) {
                    Some(entry) => entry.1 += g.character,
                    None => images.push((s, g.character)),
                }
            }
            // the scan is ascending, so `a` is the smallest member of its orbit
            for &(s, _) in &images {
                let p = basis.position(s).ok_or_else(|| {
                    Error::Consistency(format!("symmetry image {s} of {a} left the sector"))
                })?;
                visited[p] = true;
            }
            let norm2: f64 = images.iter().map(|(_, w)| w.norm_sqr()).sum();
            if norm2 < 1e-8 {
                continue;
            }
            let norm = norm2.sqrt();
            let idx = basis.reps.len() as u32;
            basis.reps.push(ProductState { code: a, len: l as u8 });
            basis.periods.push(translation_period(a, l));
            basis.norms.push(norm);
            images.sort_by_key(|(c, _)| *c);
            for &(s, w) in &images {
                let amp = w / norm;
                if amp.norm_sqr() < 1e-24 {
                    continue;
                }
                let p = basis.position(s).unwrap();
                basis.owner[p] = idx;
                basis.overlap[p] = amp.conj();
                basis.exp_codes.push(s);
                basis.exp_amps.push(amp);
            }
            basis.exp_offsets.push(basis.exp_codes.len());
        }
        Ok(basis)
    }

    pub fn dim(&self) -> usize {
        self.reps.len()
    }

    pub fn l(&self) -> usize {
        self.spec.l
    }

    /// Codes of the underlying magnetization sector, ascending.
    pub fn sector_codes(&self) -> &[u32] {
        &self.sector
    }

    /// Position of `code` in the magnetization sector.
    #[inline]
    pub fn position(&self, code: u32) -> Option<usize> {
        match &self.direct {
            Some(t) => {
                let v = *t.get(code as usize)?;
                (v != NO_ENTRY).then_some(v as usize)
            }
            None => self.sector.binary_search(&code).ok(),
        }
    }

    /// Basis vector containing `code` and the overlap `⟨v_a|code⟩`; `None` when
    /// the state lies outside the sector or its orbit is incompatible with
    /// the quantum numbers.
    #[inline]
    pub fn lookup(&self, code: u32) -> Option<(usize, c64)> {
        let p = self.position(code)?;
        let o = self.owner[p];
        (o != NO_ENTRY).then(|| (o as usize, self.overlap[p]))
    }

    /// Product-state expansion `v_a = Σ_s amp_s |s⟩`.
    pub fn expansion(&self, a: usize) -> impl Iterator<Item = (u32, c64)> + '_ {
        let r = self.exp_offsets[a]..self.exp_offsets[a + 1];
        self.exp_codes[r.clone()].iter().copied().zip(self.exp_amps[r].iter().copied())
    }

    /// Largest expansion length over the basis.
    pub fn max_expansion(&self) -> usize {
        self.exp_offsets.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    /// JSON-ready description `{L, M, eta, parity, spin_flip, dim}`.
    pub fn inventory(&self) -> serde_json::Value {
        serde_json::json!({
            "L": self.spec.l,
            "M": self.spec.m,
            "eta": self.spec.eta,
            "parity": self.spec.parity,
            "spin_flip": self.spec.spin_flip,
            "bc": self.spec.bc,
            "dim": self.dim(),
        })
    }

    /// Expands a vector given in basis coordinates over the product states of
    /// the magnetization sector (ordered as [`SymBasis::sector_codes`]).
    pub fn to_product_amplitudes(&self, coeffs: &[c64]) -> Result<Vec<c64>> {
        if coeffs.len() != self.dim() {
            return Err(Error::InvalidPair(format!(
                "vector of length {} for basis of dimension {}",
                coeffs.len(),
                self.dim()
            )));
        }
        let mut out = vec![c64::new(0.0, 0.0); self.sector.len()];
        for (a, &c) in coeffs.iter().enumerate() {
            if c == c64::new(0.0, 0.0) {
                continue;
            }
            for (s, amp) in self.expansion(a) {
                out[self.position(s).unwrap()] += c * amp;
            }
        }
        Ok(out)
    }

    /// Projects product-state amplitudes back onto the basis, `c_a = ⟨v_a|ψ⟩`.
    pub fn from_product_amplitudes(&self, amps: &[c64]) -> Result<Vec<c64>> {
        if amps.len() != self.sector.len() {
            return Err(Error::InvalidPair(format!(
                "amplitude vector of length {} for sector of size {}",
                amps.len(),
                self.sector.len()
            )));
        }
        let mut out = vec![c64::new(0.0, 0.0); self.dim()];
        for (p, &amp) in amps.iter().enumerate() {
            let o = self.owner[p];
            if o != NO_ENTRY {
                out[o as usize] += self.overlap[p] * amp;
            }
        }
        Ok(out)
    }

    /// The antiunitary symmetry used for the real form of the sector:
    /// complex conjugation when the basis is real (`k ∈ {0, π}`, open chains),
    /// otherwise reflection combined with complex conjugation.
    ///
    /// Returns `(σ, u)` with `A|v_a⟩ = u_a |v_{σ(a)}⟩`.
    pub fn antiunitary_map(&self) -> Result<(Vec<usize>, Vec<c64>)> {
        let l = self.l();
        let use_reflection = !self.spec.is_real_momentum();
        let mut sigma = Vec::with_capacity(self.dim());
        let mut phase = Vec::with_capacity(self.dim());
        for a in 0..self.dim() {
            let mut target: Option<usize> = None;
            let mut u = c64::new(0.0, 0.0);
            for (s, amp) in self.expansion(a) {
                let s2 = if use_reflection { reflect_code(s, l) } else { s };
                let (b, ov) = self.lookup(s2).ok_or_else(|| {
                    Error::Consistency(format!("antiunitary image of {s} leaves {}", self.spec.tag()))
                })?;
                if *target.get_or_insert(b) != b {
                    return Err(Error::Consistency(format!(
                        "antiunitary image of basis vector {a} spans several vectors"
                    )));
                }
                u += ov * amp.conj();
            }
            if (u.norm() - 1.0).abs() > 1e-10 {
                return Err(Error::Consistency(format!(
                    "antiunitary image of basis vector {a} has norm {}",
                    u.norm()
                )));
            }
            sigma.push(target.unwrap());
            phase.push(u);
        }
        Ok((sigma, phase))
    }
}

/// Free-function alias matching the library vocabulary.
pub fn build_sym_basis(spec: SectorSpec) -> Result<SymBasis> {
    SymBasis::build(spec)
}

/// Every symmetry-resolved sector of `(L, M)` under periodic boundaries:
/// all momenta, with parity split at `k ∈ {0, π}` and spin inversion at `M = 0`
/// when `resolve_discrete` is set.
pub fn all_momentum_sectors(l: usize, m: i32, resolve_discrete: bool) -> Vec<SectorSpec> {
    let mut out = Vec::new();
    for eta in eta_range(l) {
        let base = SectorSpec::momentum(l, m, eta);
        let parities: Vec<Option<i8>> = if resolve_discrete && base.is_real_momentum() {
            vec![Some(1), Some(-1)]
        } else {
            vec![None]
        };
        let flips: Vec<Option<i8>> = if resolve_discrete && m == 0 {
            vec![Some(1), Some(-1)]
        } else {
            vec![None]
        };
        for &p in &parities {
            for &z in &flips {
                out.push(SectorSpec { parity: p, spin_flip: z, ..base });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn translate_moves_site_content_forward() {
        let s = ProductState::from_trits(&[2, 1, 0]).unwrap();
        assert_eq!(s.code, 5);
        assert_eq!(s.translate(1).trits(), vec![0, 2, 1]);
        assert_eq!(s.translate(3), s);
        assert_eq!(s.reflect().trits(), vec![0, 1, 2]);
        assert_eq!(s.flip().trits(), vec![0, 1, 2]);
    }

    #[test]
    fn binomial_edges() {
        assert_eq!(binomial(5, 2).unwrap(), 10);
        assert_eq!(binomial(-1, 0).unwrap(), 0);
        assert_eq!(binomial(3, 4).unwrap(), 0);
    }

    #[test]
    fn small_dimensions() {
        assert_eq!(sector_dimension(2, 2).unwrap(), 3);
        assert_eq!(sector_dimension(0, 5).unwrap(), 1);
        assert_eq!(sector_dimension(4, 4).unwrap(), 19);
        assert!(sector_dimension(5, 2).is_err());
    }

    #[test]
    fn overflow_is_reported() {
        assert!(matches!(sector_dimension(80, 80), Err(Error::Overflow(_))));
        assert!(trinomial_dimensions(80).is_ok());
    }

    #[test]
    fn parity_needs_real_momentum() {
        let spec = SectorSpec::momentum(6, 0, 1).with_parity(1);
        assert!(matches!(spec.validate(), Err(Error::InvalidSpec(_))));
        let spec = SectorSpec::momentum(6, 1, 0).with_spin_flip(1);
        assert!(matches!(spec.validate(), Err(Error::InvalidSpec(_))));
    }
}

//! Infinite-temperature sector traces and the Taylor coefficients of the
//! microcanonical function around the sector mean energy.
//!
//! Everything here is at `λ = 0` on a periodic chain. Each sector trace has two
//! independent evaluations: closed forms in the sector dimensions `D^L_M`, and
//! explicit sums over the product states of the sector.

use serde::Serialize;

use crate::basis::{dim_lm, sector_codes, sz, Boundary};
use crate::hamiltonian::{hamiltonian_operator, observable_operator, splus, ModelParams, Observable, Operator};
use crate::{c64, Error, Result};

/// Agreement required between the two pathways.
pub const PATHWAY_TOL: f64 = 1e-10;

/// Sector expectations of the few-spin strings, sites all distinct.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct FourSpin {
    /// `⟨(S^z_i)²⟩`
    pub z2: f64,
    /// `⟨S^z_i S^z_j⟩`
    pub zz: f64,
    /// `⟨S^z_i S^z_j S^z_k S^z_l⟩`
    pub zzzz: f64,
    /// `⟨S^z_i (S^z_j)² S^z_k⟩`
    pub z_z2_z: f64,
    /// `⟨(S^z_i)² (S^z_j)²⟩`
    pub z2_z2: f64,
    /// `¼⟨(S^+_i S^-_j + h.c.)²⟩`
    pub xy2: f64,
}

impl FourSpin {
    pub fn entries(&self) -> [(&'static str, f64); 6] {
        [
            ("<Sz^2>", self.z2),
            ("<Sz Sz>", self.zz),
            ("<Sz Sz Sz Sz>", self.zzzz),
            ("<Sz Sz^2 Sz>", self.z_z2_z),
            ("<Sz^2 Sz^2>", self.z2_z2),
            ("1/4<(S+S- + h.c.)^2>", self.xy2),
        ]
    }
}

fn check_sector(l: usize, m: i32, min_l: usize) -> Result<f64> {
    if l < min_l {
        return Err(Error::InvalidSpec(format!("sector traces need L ≥ {min_l}, got {l}")));
    }
    if m.unsigned_abs() as usize > l {
        return Err(Error::InvalidSpec(format!("|M| = {} exceeds L = {l}", m.abs())));
    }
    Ok(dim_lm(l, m as i64)? as f64)
}

/// `Σ_a w_a D^{L−s}_{M−a}` for a generating polynomial `Σ_a w_a x^a`.
fn reduced(l: usize, m: i32, s: usize, terms: &[(i32, f64)]) -> Result<f64> {
    let mut acc = 0.0;
    for &(a, w) in terms {
        acc += w * dim_lm(l - s, (m - a) as i64)? as f64;
    }
    Ok(acc)
}

/// Closed forms in the sector dimensions.
pub fn four_spin_formula(l: usize, m: i32) -> Result<FourSpin> {
    let d = check_sector(l, m, 4)?;
    Ok(FourSpin {
        z2: reduced(l, m, 1, &[(1, 1.0), (-1, 1.0)])? / d,
        zz: reduced(l, m, 2, &[(2, 1.0), (0, -2.0), (-2, 1.0)])? / d,
        zzzz: reduced(l, m, 4, &[(4, 1.0), (2, -4.0), (0, 6.0), (-2, -4.0), (-4, 1.0)])? / d,
        z_z2_z: reduced(l, m, 3, &[(3, 1.0), (1, -1.0), (-1, -1.0), (-3, 1.0)])? / d,
        z2_z2: reduced(l, m, 2, &[(2, 1.0), (0, 2.0), (-2, 1.0)])? / d,
        xy2: reduced(l, m, 2, &[(1, 2.0), (0, 4.0), (-1, 2.0)])? / d,
    })
}

/// `(S^+_0 S^-_1 + h.c.)/2` on an `L`-site chain.
fn half_flip_bond(l: usize) -> Operator {
    let sp = splus();
    let mut m = [[c64::new(0.0, 0.0); 9]; 9];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for d in 0..3 {
                    // ⟨ab|S^+⊗S^-|cd⟩ and its adjoint
                    let fwd = sp[a][c] * sp[d][b].conj();
                    let bwd = sp[c][a].conj() * sp[b][d];
                    m[3 * a + b][3 * c + d] = fwd + bwd;
                }
            }
        }
    }
    let mut op = Operator::new(l, "(S+S- + h.c.)/2");
    op.add_two_site(0, 1, &m, 0.5);
    op
}

/// `‖O|s⟩‖²` for a product state.
fn image_norm2(op: &Operator, code: u32) -> f64 {
    op.apply_merged(code).iter().map(|(_, w)| w.norm_sqr()).sum()
}

/// `⟨s|O|s⟩` for a product state.
fn diagonal_entry(op: &Operator, code: u32) -> f64 {
    let mut acc = 0.0;
    op.apply(code, |s, w| {
        if s == code {
            acc += w.re;
        }
    });
    acc
}

/// Direct sums over the product states of the sector.
pub fn four_spin_enumerated(l: usize, m: i32) -> Result<FourSpin> {
    let d = check_sector(l, m, 4)?;
    let bond = half_flip_bond(l);
    let mut acc = FourSpin::default();
    for &s in &sector_codes(l, m) {
        let z: [f64; 4] = std::array::from_fn(|j| sz(s, j) as f64);
        acc.z2 += z[0] * z[0];
        acc.zz += z[0] * z[1];
        acc.zzzz += z[0] * z[1] * z[2] * z[3];
        acc.z_z2_z += z[0] * z[1] * z[1] * z[2];
        acc.z2_z2 += z[0] * z[0] * z[1] * z[1];
        acc.xy2 += image_norm2(&bond, s);
    }
    Ok(FourSpin {
        z2: acc.z2 / d,
        zz: acc.zz / d,
        zzzz: acc.zzzz / d,
        z_z2_z: acc.z_z2_z / d,
        z2_z2: acc.z2_z2 / d,
        xy2: acc.xy2 / d,
    })
}

/// Sector traces of `H` at `λ = 0` with the observables, divided by `D^L_M`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct SectorMoments {
    pub h: f64,
    pub h2: f64,
    pub o: f64,
    pub ho: f64,
    /// `⟨H² O⟩`; only from the enumeration pathway.
    pub h2o: Option<f64>,
}

impl SectorMoments {
    /// `⟨H²⟩_c`
    pub fn h2_c(&self) -> f64 {
        self.h2 - self.h * self.h
    }

    /// `⟨H O⟩_c`
    pub fn ho_c(&self) -> f64 {
        self.ho - self.h * self.o
    }

    /// `⟨H² O⟩_c`
    pub fn h2o_c(&self) -> Option<f64> {
        self.h2o
            .map(|h2o| h2o - self.h2 * self.o - 2.0 * self.ho * self.h + 2.0 * self.h * self.h * self.o)
    }
}

fn check_diagonal_observable(which: Observable) -> Result<()> {
    match which {
        Observable::ZN | Observable::ZNN => Ok(()),
        other => Err(Error::InvalidSpec(format!("sector moments defined for Z_N and Z_NN, not {}", other.label()))),
    }
}

/// Closed forms built from [`four_spin_formula`].
pub fn sector_moments_formula(which: Observable, l: usize, m: i32, delta: f64) -> Result<SectorMoments> {
    check_diagonal_observable(which)?;
    if l < 5 {
        return Err(Error::InvalidSpec(format!("the overlap decompositions need L ≥ 5, got {l}")));
    }
    let f = four_spin_formula(l, m)?;
    let lf = l as f64;
    let hzn = -delta / lf * (lf * (lf - 3.0) * f.zzzz + 2.0 * lf * f.z_z2_z + lf * f.z2_z2);
    let hznn = -delta / lf * (lf * (lf - 4.0) * f.zzzz + 4.0 * lf * f.z_z2_z);
    Ok(SectorMoments {
        h: -delta * lf * f.zz,
        h2: -delta * lf * hzn + lf * f.xy2,
        o: f.zz,
        ho: if which == Observable::ZN { hzn } else { hznn },
        h2o: None,
    })
}

/// Direct sums `Σ_s ⟨s|…|s⟩` over the sector's product states.
pub fn sector_moments_enumerated(which: Observable, l: usize, m: i32, delta: f64) -> Result<SectorMoments> {
    check_diagonal_observable(which)?;
    let d = check_sector(l, m, 3)?;
    let h = hamiltonian_operator(&ModelParams::pbc(delta, 0.0), l)?;
    let o = observable_operator(which, l, Boundary::Pbc)?;
    let mut acc = SectorMoments { h2o: Some(0.0), ..Default::default() };
    for &s in &sector_codes(l, m) {
        let hss = diagonal_entry(&h, s);
        let oss = diagonal_entry(&o, s);
        let hs2 = image_norm2(&h, s);
        acc.h += hss;
        acc.h2 += hs2;
        acc.o += oss;
        acc.ho += hss * oss;
        *acc.h2o.as_mut().unwrap() += hs2 * oss;
    }
    Ok(SectorMoments {
        h: acc.h / d,
        h2: acc.h2 / d,
        o: acc.o / d,
        ho: acc.ho / d,
        h2o: acc.h2o.map(|x| x / d),
    })
}

/// Full-space traces `⟨H⟩`, `⟨H²⟩`, `⟨O⟩`, `⟨HO⟩`, `⟨H²O⟩` over all `3^L` states.
pub fn full_space_moments(which: Observable, l: usize, delta: f64) -> Result<SectorMoments> {
    check_diagonal_observable(which)?;
    let mut sum = SectorMoments { h2o: Some(0.0), ..Default::default() };
    let mut total = 0.0;
    for m in -(l as i32)..=(l as i32) {
        let d = dim_lm(l, m as i64)? as f64;
        let s = sector_moments_enumerated(which, l, m, delta)?;
        sum.h += d * s.h;
        sum.h2 += d * s.h2;
        sum.o += d * s.o;
        sum.ho += d * s.ho;
        *sum.h2o.as_mut().unwrap() += d * s.h2o.unwrap();
        total += d;
    }
    Ok(SectorMoments {
        h: sum.h / total,
        h2: sum.h2 / total,
        o: sum.o / total,
        ho: sum.ho / total,
        h2o: sum.h2o.map(|x| x / total),
    })
}

/// `Tr_M(H^n J_N)` for `n = 0, 1, 2` by sparse application at `λ = 0`.
pub fn current_traces(l: usize, m: i32, delta: f64) -> Result<[c64; 3]> {
    check_sector(l, m, 3)?;
    let h = hamiltonian_operator(&ModelParams::pbc(delta, 0.0), l)?;
    let j = observable_operator(Observable::JN, l, Boundary::Pbc)?;
    let mut out = [c64::new(0.0, 0.0); 3];
    for &s in &sector_codes(l, m) {
        let js = j.apply_merged(s);
        let hs = h.apply_merged(s);
        // Tr J: ⟨s|J|s⟩
        out[0] += js.iter().filter(|(t, _)| *t == s).map(|(_, w)| *w).sum::<c64>();
        // Tr HJ: ⟨Hs|Js⟩
        out[1] += sparse_dot(&hs, &js);
        // Tr H²J: ⟨Hs|H Js⟩
        let mut hjs: Vec<(u32, c64)> = Vec::new();
        for &(t, w) in &js {
            h.apply(t, |u, x| hjs.push((u, w * x)));
        }
        out[2] += sparse_dot(&hs, &merge(hjs));
    }
    Ok(out)
}

fn merge(mut v: Vec<(u32, c64)>) -> Vec<(u32, c64)> {
    v.sort_by_key(|x| x.0);
    let mut out: Vec<(u32, c64)> = Vec::with_capacity(v.len());
    for (s, w) in v {
        match out.last_mut() {
            Some(last) if last.0 == s => last.1 += w,
            _ => out.push((s, w)),
        }
    }
    out
}

/// `⟨a|b⟩` for sorted sparse vectors.
fn sparse_dot(a: &[(u32, c64)], b: &[(u32, c64)]) -> c64 {
    let (mut i, mut j) = (0, 0);
    let mut acc = c64::new(0.0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += a[i].1.conj() * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

/// One line of a pathway comparison.
#[derive(Clone, Debug, Serialize)]
pub struct TraceLine {
    pub label: String,
    pub l: usize,
    pub m: i32,
    pub formula: f64,
    pub enumerated: f64,
}

impl TraceLine {
    pub fn difference(&self) -> f64 {
        (self.formula - self.enumerated).abs()
    }
}

/// Both pathways side by side for one sector.
#[derive(Clone, Debug, Serialize)]
pub struct TraceComparison {
    pub lines: Vec<TraceLine>,
}

impl TraceComparison {
    pub fn max_difference(&self) -> f64 {
        self.lines.iter().map(TraceLine::difference).fold(0.0, f64::max)
    }

    /// Errors with the term-by-term breakdown when any line disagrees.
    pub fn check(&self) -> Result<()> {
        let bad: Vec<String> = self
            .lines
            .iter()
            .filter(|t| !(t.difference() <= PATHWAY_TOL))
            .map(|t| format!("{} at (L={}, M={}): formula {} vs enumerated {}", t.label, t.l, t.m, t.formula, t.enumerated))
            .collect();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Consistency(format!("trace pathways disagree: {}", bad.join("; "))))
        }
    }
}

/// Few-spin strings and the `H`, `HO`, `H²` traces for `O = Z_N, Z_NN`.
pub fn trace_moments(l: usize, m: i32, delta: f64) -> Result<TraceComparison> {
    let f = four_spin_formula(l, m)?;
    let e = four_spin_enumerated(l, m)?;
    let mut lines: Vec<TraceLine> = f
        .entries()
        .iter()
        .zip(e.entries())
        .map(|(&(label, a), (_, b))| TraceLine { label: label.into(), l, m, formula: a, enumerated: b })
        .collect();
    if l >= 5 {
        for which in [Observable::ZN, Observable::ZNN] {
            let a = sector_moments_formula(which, l, m, delta)?;
            let b = sector_moments_enumerated(which, l, m, delta)?;
            let name = which.label();
            for (label, x, y) in [
                ("<H>".to_string(), a.h, b.h),
                ("<H^2>".to_string(), a.h2, b.h2),
                (format!("<{name}>"), a.o, b.o),
                (format!("<H {name}>"), a.ho, b.ho),
            ] {
                lines.push(TraceLine { label, l, m, formula: x, enumerated: y });
            }
        }
    }
    Ok(TraceComparison { lines })
}

/// `Z(E∞)` for `Z_N` and `Z_NN`.
pub fn z_infinite_temperature(l: usize, m: i32) -> Result<f64> {
    let d = check_sector(l, m, 2)?;
    let (lf, mf) = (l as f64, m as f64);
    let r1 = dim_lm(l - 1, m as i64)? as f64 / d;
    Ok(mf * mf / (lf * (lf - 1.0)) - (1.0 - r1) / (lf - 1.0))
}

/// Leading-order linear coefficients in `1/L` for `Z_N` and `Z_NN`.
pub fn linear_coefficient_leading(which: Observable, l: usize, m: i32, delta: f64) -> Result<f64> {
    let d = check_sector(l, m, 2)?;
    let mm = m as f64 / l as f64;
    let r1 = dim_lm(l - 1, m as i64)? as f64 / d;
    let r2 = dim_lm(l - 2, m as i64)? as f64 / d;
    let q = mm * mm - 1.0;
    let den = delta * delta * q * q + 2.0 * (1.0 + delta * delta * q) * r1 + (2.0 + delta * delta) * r2;
    match which {
        Observable::ZN => Ok(-delta * (q * q + 2.0 * q * r1 + r2) / den),
        Observable::ZNN => {
            let m2 = mm * mm;
            let num = (2.0 * m2 * m2 - 5.0 * m2 + 3.0) + (4.0 * m2 - 6.0 + r1) * r1 - 2.0 * r2;
            Ok(delta * num / den / l as f64)
        }
        Observable::JN => Ok(0.0),
        other => Err(Error::InvalidSpec(format!("no closed form for {}", other.label()))),
    }
}

/// Taylor coefficients of `o(ε)` around the sector mean energy density.
#[derive(Clone, Debug, Serialize)]
pub struct MicrocanonicalCoefficients {
    pub observable: Observable,
    pub l: usize,
    pub m: i32,
    pub delta: f64,
    /// `O(E∞)`
    pub o_inf: f64,
    /// `E∞`
    pub e_inf: f64,
    /// `⟨HO⟩_c L / ⟨H²⟩_c` from the closed-form traces.
    pub linear: f64,
    /// The leading-order closed form of the linear coefficient.
    pub linear_leading: f64,
    /// `(L²/2) ⟨H²O⟩_c / ⟨H²⟩_c²` from the enumerated traces.
    pub quadratic: f64,
    pub h2_c: f64,
}

impl MicrocanonicalCoefficients {
    /// `o(ε) ≈ o∞ + c₁ (ε − ε∞) + c₂ (ε − ε∞)²`.
    pub fn evaluate(&self, energy: f64) -> f64 {
        let x = (energy - self.e_inf) / self.l as f64;
        self.o_inf + self.linear * x + self.quadratic * x * x
    }
}

pub fn microcanonical_coefficients(which: Observable, l: usize, m: i32, delta: f64) -> Result<MicrocanonicalCoefficients> {
    let z_inf = z_infinite_temperature(l, m)?;
    let e_inf = -delta * l as f64 * z_inf;
    if which == Observable::JN {
        check_sector(l, m, 3)?;
        let h2_c = sector_moments_enumerated(Observable::ZN, l, m, delta)?.h2_c();
        return Ok(MicrocanonicalCoefficients {
            observable: which,
            l,
            m,
            delta,
            o_inf: 0.0,
            e_inf,
            linear: 0.0,
            linear_leading: 0.0,
            quadratic: 0.0,
            h2_c,
        });
    }
    let closed = sector_moments_formula(which, l, m, delta)?;
    let traced = sector_moments_enumerated(which, l, m, delta)?;
    let lf = l as f64;
    let h2_c = closed.h2_c();
    let quadratic = 0.5 * lf * lf * traced.h2o_c().unwrap_or(f64::NAN) / (h2_c * h2_c);
    Ok(MicrocanonicalCoefficients {
        observable: which,
        l,
        m,
        delta,
        o_inf: z_inf,
        e_inf,
        linear: closed.ho_c() * lf / h2_c,
        linear_leading: linear_coefficient_leading(which, l, m, delta)?,
        quadratic,
        h2_c,
    })
}

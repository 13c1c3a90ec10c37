//! Independent reference computations checked against the library.

use eth_lab::basis::{all_momentum_sectors, build_sym_basis, Boundary, SectorSpec, SymBasis};
use eth_lab::c64;
use eth_lab::entanglement::{dense_reduced_density_matrix, expand_to_product_basis, BipartitionSpec, SchmidtLayout};
use eth_lab::eth::elements::{matrix_elements, EigenSector};
use eth_lab::eth::spectral::{resc_factor, uniform_grid, OmegaBins, SpectralAccumulator};
use eth_lab::hamiltonian::{build_hamiltonian, build_observable, ModelParams, Observable};
use eth_lab::rmt::haar_random_state;
use eth_lab::spectra::{diagonalize_real, eigenvalues_real, spacing_ratios, Spectrum};
use faer::{Mat, Side};

type M3 = [[c64; 3]; 3];
type M9 = [[c64; 9]; 9];

fn re(x: f64) -> c64 {
    c64::new(x, 0.0)
}

/// Spin-1 matrices over `m = −1, 0, +1`, written out by hand.
fn spin1() -> (M3, M3, M3) {
    let z = re(0.0);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let sx = [[z, re(s), z], [re(s), z, re(s)], [z, re(s), z]];
    let sy = [
        [z, c64::new(0.0, s), z],
        [c64::new(0.0, -s), z, c64::new(0.0, s)],
        [z, c64::new(0.0, -s), z],
    ];
    let sz = [[re(-1.0), z, z], [z, z, z], [z, z, re(1.0)]];
    (sx, sy, sz)
}

fn eye3() -> M3 {
    let mut e = [[re(0.0); 3]; 3];
    for (i, row) in e.iter_mut().enumerate() {
        row[i] = re(1.0);
    }
    e
}

fn kron(a: &M3, b: &M3) -> M9 {
    let mut out = [[re(0.0); 9]; 9];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    out[3 * i + k][3 * j + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn mul(a: &M9, b: &M9) -> M9 {
    let mut out = [[re(0.0); 9]; 9];
    for i in 0..9 {
        for j in 0..9 {
            out[i][j] = (0..9).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn add(acc: &mut M9, a: &M9, s: f64) {
    for i in 0..9 {
        for j in 0..9 {
            acc[i][j] += a[i][j] * s;
        }
    }
}

fn adjoint(a: &M9) -> M9 {
    let mut out = [[re(0.0); 9]; 9];
    for i in 0..9 {
        for j in 0..9 {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

/// One bond of the chain, first site as the slow index.
fn reference_bond(delta: f64, lambda: f64) -> M9 {
    let (sx, sy, sz) = spin1();
    let mu = delta - 1.0;
    let nu = 2.0 - (2.0 * (1.0 + delta)).sqrt();
    let xx = kron(&sx, &sx);
    let yy = kron(&sy, &sy);
    let zz = kron(&sz, &sz);
    let mut xy = xx;
    add(&mut xy, &yy, 1.0);
    let mut dot = xy;
    add(&mut dot, &zz, 1.0);
    let sz2 = {
        let mut m = [[re(0.0); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = (0..3).map(|k| sz[i][k] * sz[k][j]).sum();
            }
        }
        m
    };
    let sz2_first = kron(&sz2, &eye3());
    let mut h = [[re(0.0); 9]; 9];
    add(&mut h, &xy, -1.0);
    add(&mut h, &zz, -delta);
    add(&mut h, &mul(&dot, &dot), lambda);
    add(&mut h, &sz2_first, -2.0 * mu * lambda);
    add(&mut h, &mul(&zz, &zz), mu * lambda);
    let mixed = mul(&xy, &zz);
    add(&mut h, &mixed, -nu * lambda);
    add(&mut h, &adjoint(&mixed), -nu * lambda);
    h
}

fn trit(code: usize, j: usize) -> usize {
    code / 3usize.pow(j as u32) % 3
}

/// Dense `3^L` Hamiltonian with site `j` carried by trit `j` of the index.
fn reference_hamiltonian(l: usize, delta: f64, lambda: f64, bc: Boundary, hz1: f64) -> Mat<c64> {
    let d = 3usize.pow(l as u32);
    let bond = reference_bond(delta, lambda);
    let bonds: Vec<(usize, usize)> = match bc {
        Boundary::Pbc => (0..l).map(|j| (j, (j + 1) % l)).collect(),
        Boundary::Obc => (0..l - 1).map(|j| (j, j + 1)).collect(),
    };
    let mut h = Mat::<c64>::zeros(d, d);
    for col in 0..d {
        for &(a, b) in &bonds {
            let (ta, tb) = (trit(col, a), trit(col, b));
            let rest = col - ta * 3usize.pow(a as u32) - tb * 3usize.pow(b as u32);
            for na in 0..3 {
                for nb in 0..3 {
                    let v = bond[3 * na + nb][3 * ta + tb];
                    if v != re(0.0) {
                        let row = rest + na * 3usize.pow(a as u32) + nb * 3usize.pow(b as u32);
                        h[(row, col)] += v;
                    }
                }
            }
        }
        if bc == Boundary::Obc {
            h[(col, col)] += re(hz1 * (trit(col, 0) as f64 - 1.0));
        }
    }
    h
}

fn sector_union(l: usize, params: &ModelParams) -> Vec<f64> {
    let l_i = l as i32;
    let mut all = Vec::new();
    for m in -l_i..=l_i {
        let specs = match params.bc {
            Boundary::Pbc => all_momentum_sectors(l, m, true),
            Boundary::Obc => vec![SectorSpec::magnetization(l, m, Boundary::Obc)],
        };
        for spec in specs {
            let Ok(basis) = build_sym_basis(spec) else { continue };
            if basis.dim() == 0 {
                continue;
            }
            let h = build_hamiltonian(params, &basis).unwrap();
            all.extend(eigenvalues_real(&h, &basis, params.digest()).unwrap().eigenvalues);
        }
    }
    all.sort_by(f64::total_cmp);
    all
}

fn solve(spec: SectorSpec, params: &ModelParams) -> (SymBasis, Spectrum) {
    let basis = build_sym_basis(spec).unwrap();
    let h = build_hamiltonian(params, &basis).unwrap();
    let s = diagonalize_real(&h, &basis, params.digest()).unwrap();
    (basis, s)
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn symmetry_sectors_reproduce_the_dense_spectrum() {
    let cases = [
        (3, ModelParams::pbc(0.55, 0.0)),
        (4, ModelParams::pbc(0.55, 1.0)),
        (5, ModelParams::pbc(0.55, 0.3)),
        (6, ModelParams::pbc(0.8, 0.7)),
        (4, ModelParams::obc(0.55, 0.1)),
        (5, ModelParams::new(0.3, 0.6, Boundary::Obc, 0.25).unwrap()),
    ];
    for (l, params) in cases {
        let h = reference_hamiltonian(l, params.delta, params.lambda, params.bc, params.hz1);
        let mut dense = h.self_adjoint_eigenvalues(Side::Lower).unwrap();
        dense.sort_by(f64::total_cmp);
        let union = sector_union(l, &params);
        let gap = max_gap(&dense, &union);
        println!("L={l} {:?} λ={} max |ΔE| = {gap:e}", params.bc, params.lambda);
        assert!(gap < 1e-10, "L={l}: sector spectra differ from the dense spectrum by {gap}");
    }
}

#[test]
fn traceless_at_zero_lambda_and_linear_in_lambda() {
    let l = 6;
    let h0 = reference_hamiltonian(l, 0.55, 0.0, Boundary::Pbc, 0.0);
    let tr: c64 = (0..h0.nrows()).map(|i| h0[(i, i)]).sum();
    assert!(tr.norm() < 1e-10);
    let union: f64 = sector_union(l, &ModelParams::pbc(0.55, 0.0)).iter().sum();
    assert!(union.abs() < 1e-8, "sum of sector eigenvalues {union}");

    let spec = SectorSpec::momentum(l, 0, 1);
    let basis = build_sym_basis(spec).unwrap();
    let block = |lam: f64| build_hamiltonian(&ModelParams::pbc(0.55, lam), &basis).unwrap().matrix;
    let (a, b, c) = (block(0.0), block(1.0), block(0.37));
    let lin = &a + (&b - &a) * faer::Scale(c64::new(0.37, 0.0));
    let err = (&c - &lin).norm_max();
    assert!(err < 1e-12, "λ-linearity defect {err}");
}

#[test]
fn opposite_momenta_are_degenerate() {
    let params = ModelParams::pbc(0.55, 0.0);
    for eta in 1..=3 {
        let aa = build_sym_basis(SectorSpec::momentum(8, 0, eta)).unwrap();
        let a = eigenvalues_real(&build_hamiltonian(&params, &aa).unwrap(), &aa, 0).unwrap();
        let bspec = SectorSpec::momentum(8, 0, -eta);
        let bb = build_sym_basis(bspec).unwrap();
        let b = eigenvalues_real(&build_hamiltonian(&params, &bb).unwrap(), &bb, 0).unwrap();
        assert!(max_gap(&a.eigenvalues, &b.eigenvalues) < 1e-10);
    }
}

#[test]
fn eigenbasis_elements_obey_exact_identities() {
    let params = ModelParams::pbc(0.55, 0.0);
    let l = 7;
    let specs = [SectorSpec::momentum(l, 1, 0).with_parity(1), SectorSpec::momentum(l, 1, 2)];
    let solved: Vec<_> = specs.iter().map(|&s| solve(s, &params)).collect();
    for (basis, spectrum) in &solved {
        let sector = EigenSector::new(basis, spectrum).unwrap();
        let id = build_observable(Observable::Identity, basis).unwrap();
        let e = matrix_elements(&id, &sector, &sector).unwrap();
        let mut dev: f64 = 0.0;
        for m in 0..e.rows() {
            for n in 0..e.cols() {
                let want = if m == n { 1.0 } else { 0.0 };
                dev = dev.max((e.get(m, n) - re(want)).norm());
            }
        }
        assert!(dev < 1e-10, "identity elements deviate by {dev}");

        let h = build_hamiltonian(&params, basis).unwrap();
        let he = matrix_elements(&h, &sector, &sector).unwrap();
        let diag = he.diagonal().unwrap();
        assert!(max_gap(&diag, &spectrum.eigenvalues) < 1e-10);

        for which in [Observable::ZN, Observable::ZNN, Observable::JN] {
            let block = build_observable(which, basis).unwrap();
            let set = matrix_elements(&block, &sector, &sector).unwrap();
            assert!(set.sum_rule_defect() < 1e-9, "{which:?} sum rule");
            let hs: f64 = block.matrix.norm_l2().powi(2);
            let parseval = (set.frobenius2() - hs).abs();
            assert!(parseval < 1e-8 * hs.max(1.0), "{which:?} Parseval defect {parseval}");
            if which == Observable::JN && basis.spec.parity.is_some() {
                // a parity-odd operator has no block inside a parity sector
                assert!(block.matrix.norm_max() < 1e-14);
            }
        }
    }
}

#[test]
fn spectral_functions_integrate_to_the_offdiagonal_weight() {
    let params = ModelParams::pbc(0.55, 0.0);
    let l = 7;
    let (basis, spectrum) = solve(SectorSpec::momentum(l, 1, 1), &params);
    let sector = EigenSector::new(&basis, &spectrum).unwrap();
    let bins = OmegaBins::log_linear(1e-2, 8, 30.0, 0.5).unwrap();
    let h = 0.002;
    let grid = uniform_grid(30.0, h);
    for which in [Observable::ZN, Observable::Identity] {
        let block = build_observable(which, &basis).unwrap();
        let set = matrix_elements(&block, &sector, &sector).unwrap();
        let mut acc = SpectralAccumulator::new(which.label(), l, l as f64, bins.clone(), grid.clone(), 0.05, 0.05).unwrap();
        acc.add_family(sector.energies());
        acc.add_block(&set);
        let out = acc.finish().unwrap();
        let corr: Vec<f64> = out.corr.values.iter().map(|v| v.unwrap()).collect();
        let integral: f64 = corr.windows(2).map(|p| 0.5 * h * (p[0] + p[1])).sum();
        let want = out.offdiag_weight / 2.0;
        println!("{which:?}: ∫corr = {integral:.10}, weight/2 = {want:.10}");
        assert!((integral - want).abs() < 1e-6 * want.max(1.0));
        for ((w, c), r) in out.corr.omega.iter().zip(&corr).zip(&out.resc.values) {
            assert_eq!(r.unwrap().to_bits(), (resc_factor(*w, out.corr.sigma_e2) * c).to_bits());
        }
        if which == Observable::Identity {
            assert!(out.offdiag_weight < 1e-20);
            assert!(out.var.values.iter().flatten().all(|&v| v.abs() < 1e-20));
        }
    }
}

#[test]
fn schmidt_layout_matches_dense_reduced_density_matrix() {
    let l = 7;
    let basis = build_sym_basis(SectorSpec::momentum(l, 1, 2)).unwrap();
    let state = haar_random_state(basis.dim(), 11, 0);
    let amps = expand_to_product_basis(&state, &basis).unwrap();
    for l_a in 1..l {
        let cut = BipartitionSpec::new(l, l_a).unwrap();
        let mut fast = SchmidtLayout::new(&amps.codes, cut).spectrum(&amps.amps).unwrap();
        let mut dense = dense_reduced_density_matrix(&amps, cut).self_adjoint_eigenvalues(Side::Lower).unwrap();
        fast.sort_by(f64::total_cmp);
        dense.sort_by(f64::total_cmp);
        // the dense matrix carries extra exact zeros from absent blocks
        let tail = &dense[dense.len() - fast.len()..];
        assert!(max_gap(&fast, tail) < 1e-12, "L_A = {l_a}");
        assert!(dense[..dense.len() - fast.len()].iter().all(|x| x.abs() < 1e-12));
    }
}

#[test]
fn picket_fence_and_poisson_limits_of_the_ratio() {
    let fence: Vec<f64> = (0..100).map(|i| i as f64 * 0.3).collect();
    assert!(spacing_ratios(&fence).iter().all(|&r| (r - 1.0).abs() < 1e-12));
    let mut rng = 12345u64;
    let mut levels: Vec<f64> = (0..200_000)
        .map(|_| {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect();
    levels.sort_by(f64::total_cmp);
    let r = spacing_ratios(&levels);
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    let poisson = 2.0 * std::f64::consts::LN_2 - 1.0;
    assert!((mean - poisson).abs() < 5e-3, "Poisson ⟨r⟩ = {mean}");
}

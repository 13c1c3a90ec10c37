use eth_lab::basis::check_dimension_identities;
use eth_lab::eth::cumulants::*;
use eth_lab::hamiltonian::Observable;

const DELTA: f64 = 0.55;

#[test]
fn full_space_cumulants_at_six_sites() {
    let zn = full_space_moments(Observable::ZN, 6, DELTA).unwrap();
    let znn = full_space_moments(Observable::ZNN, 6, DELTA).unwrap();
    let four_ninths = (2.0f64 / 3.0).powi(2);
    assert!((zn.ho_c() + DELTA * four_ninths).abs() < 1e-10, "{}", zn.ho_c());
    assert!((zn.h2_c() - 6.0 * (2.0 + DELTA * DELTA) * four_ninths).abs() < 1e-10);
    assert!((znn.h2o_c().unwrap() - 2.0 * DELTA * DELTA * (2.0f64 / 3.0).powi(3)).abs() < 1e-10);
    assert!(zn.h.abs() < 1e-12 && zn.o.abs() < 1e-12);
}

#[test]
fn current_traces_vanish() {
    for l in 3..=6 {
        for m in -(l as i32)..=(l as i32) {
            for t in current_traces(l, m, DELTA).unwrap() {
                assert!(t.norm() < 1e-10, "L={l} M={m}: {t}");
            }
        }
    }
}

#[test]
fn pathways_agree_up_to_eight_sites() {
    for l in 4..=8 {
        for m in -(l as i32)..=(l as i32) {
            let c = trace_moments(l, m, DELTA).unwrap();
            c.check().unwrap();
        }
    }
}

#[test]
fn frozen_sector_moments_are_one() {
    for l in [4, 7] {
        for m in [l as i32, -(l as i32)] {
            let f = four_spin_formula(l, m).unwrap();
            let e = four_spin_enumerated(l, m).unwrap();
            for v in [f.z2, f.zz, f.zzzz, f.z_z2_z, f.z2_z2, e.zz, e.zzzz] {
                assert_eq!(v, 1.0);
            }
            assert_eq!(f.xy2, 0.0);
        }
    }
}

#[test]
fn dimension_identities_to_fourteen() {
    for l in 2..=14usize {
        for m in -(l as i32)..=(l as i32) {
            check_dimension_identities(l, m).unwrap();
        }
    }
}

#[test]
fn znn_linear_coefficient_decays_as_inverse_length() {
    let c: Vec<f64> = [8, 10, 12]
        .iter()
        .map(|&l| microcanonical_coefficients(Observable::ZNN, l, 0, DELTA).unwrap().linear)
        .collect();
    for (i, l) in [8.0, 10.0, 12.0].iter().enumerate().skip(1) {
        let ratio = c[i] / c[0];
        let law = 8.0 / l;
        assert!((ratio / law - 1.0).abs() < 0.15, "L={l}: ratio {ratio} vs {law} ({c:?})");
    }
}

#[test]
fn current_coefficients_are_zero() {
    let c = microcanonical_coefficients(Observable::JN, 8, 1, DELTA).unwrap();
    assert_eq!((c.linear, c.quadratic, c.o_inf), (0.0, 0.0, 0.0));
}

#[test]
fn leading_forms_track_exact_coefficients() {
    for l in [10, 12] {
        let zn = microcanonical_coefficients(Observable::ZN, l, 0, DELTA).unwrap();
        let znn = microcanonical_coefficients(Observable::ZNN, l, 0, DELTA).unwrap();
        println!("L={l}: Z_N {} vs {}, Z_NN {} vs {}, quad {}", zn.linear, zn.linear_leading, znn.linear, znn.linear_leading, znn.quadratic);
    }
}

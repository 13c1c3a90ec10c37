use eth_lab::basis::{all_momentum_sectors, build_sym_basis, SymBasis};
use eth_lab::eth::elements::{matrix_elements, EigenSector};
use eth_lab::hamiltonian::{build_hamiltonian, build_observable, ModelParams, Observable};
use eth_lab::quench::*;
use eth_lab::spectra::{diagonalize_real, Spectrum};

fn solve_all(l: usize, m: i32, params: &ModelParams) -> Vec<(SymBasis, Spectrum)> {
    all_momentum_sectors(l, m, true)
        .into_iter()
        .map(|spec| {
            let basis = build_sym_basis(spec).unwrap();
            let h = build_hamiltonian(params, &basis).unwrap();
            let s = diagonalize_real(&h, &basis, params.digest()).unwrap();
            (basis, s)
        })
        .collect()
}

#[test]
fn neel_quench_conserves_energy_and_relaxes() {
    let params = ModelParams::pbc(0.55, 0.0);
    let solved = solve_all(8, 0, &params);
    let sectors: Vec<EigenSector> = solved.iter().map(|(b, s)| EigenSector::new(b, s).unwrap()).collect();
    let amps = initial_amplitudes(InitialState::Neel, 8, 0).unwrap();
    let setup = QuenchSetup::new(&sectors, &amps).unwrap();
    assert!((setup.norm - 1.0).abs() < 1e-10);
    let elements: Vec<_> = sectors
        .iter()
        .map(|s| matrix_elements(&build_observable(Observable::ZNN, s.basis).unwrap(), s, s).unwrap())
        .collect();

    // t = 0 reproduces the Néel value of Z_NN: sites j and j+2 are parallel
    let o0 = evolve_expectation(&setup, &elements, &[0.0]).unwrap()[0];
    assert!((o0.re - 1.0).abs() < 1e-10, "{o0}");
    assert!(o0.im.abs() < 1e-12);

    for t in [0.0, 1.3, 17.0] {
        let (e, n) = energy_and_norm(&setup, &sectors, &params, t).unwrap();
        assert!((e - setup.e_bar).abs() < 1e-9, "{e} {}", setup.e_bar);
        assert!((n - 1.0).abs() < 1e-10);
    }

    let de = diagonal_ensemble(&setup, &elements).unwrap();
    let fl = temporal_fluctuations(&setup, &elements, 2000.0, 4000).unwrap();
    println!("DE {de} {fl:?}");
    assert!(fl.max_imaginary < 1e-10);
    assert!(fl.analytic_variance <= fl.bound);
    assert!((fl.mean - de).abs() < 5.0 * fl.analytic_variance.sqrt() + 1e-3);

    let lt = long_time_average(&setup, &elements, 500.0).unwrap();
    assert!((lt.average - lt.diagonal_ensemble).abs() <= lt.bound);

    let energies: Vec<f64> = sectors.iter().flat_map(|s| s.energies().iter().copied()).collect();
    let diag: Vec<f64> = elements.iter().flat_map(|e| e.diagonal().unwrap()).collect();
    let width = DEFAULT_WINDOW_SIGMA * energy_spread(&energies);
    let me = microcanonical_average(&energies, &diag, setup.e_bar, width).unwrap();
    println!("ME {me:?}");
    assert!(me.states >= MIN_WINDOW_STATES);
}

#[test]
fn product_states_and_projection_errors() {
    let zeros = initial_amplitudes(InitialState::Zeros, 6, 0).unwrap();
    assert_eq!(zeros.iter().filter(|z| z.norm() > 0.0).count(), 1);
    assert!(initial_amplitudes(InitialState::Neel, 6, 1).is_err());
    let eig = initial_amplitudes(InitialState::Eigenstate { lambda: 0.3, delta: 0.55, index: 0 }, 6, 0).unwrap();
    let nrm: f64 = eig.iter().map(|z| z.norm_sqr()).sum();
    assert!((nrm - 1.0).abs() < 1e-12);

    // an initial eigenstate of the post-quench Hamiltonian is stationary
    let params = ModelParams::pbc(0.55, 0.3);
    let solved = solve_all(6, 0, &params);
    let sectors: Vec<EigenSector> = solved.iter().map(|(b, s)| EigenSector::new(b, s).unwrap()).collect();
    let setup = QuenchSetup::new(&sectors, &eig).unwrap();
    assert!(setup.delta_e0 < 1e-6, "{}", setup.delta_e0);
    // Néel spreads over η = 0 and η = L/2, so one sector cannot hold it
    let neel = initial_amplitudes(InitialState::Neel, 6, 0).unwrap();
    assert!(QuenchSetup::new(&sectors[..1], &neel).is_err());
}

#[test]
fn ensembles_and_trivial_limits() {
    use eth_lab::basis::{sector_codes, Boundary};
    use eth_lab::hamiltonian::observable_operator;
    use eth_lab::c64;

    let params = ModelParams::pbc(0.55, 0.3);
    let solved = solve_all(6, 0, &params);
    let sectors: Vec<EigenSector> = solved.iter().map(|(b, s)| EigenSector::new(b, s).unwrap()).collect();
    let znn: Vec<_> = sectors
        .iter()
        .map(|s| matrix_elements(&build_observable(Observable::ZNN, s.basis).unwrap(), s, s).unwrap())
        .collect();
    let ident: Vec<_> = sectors
        .iter()
        .map(|s| matrix_elements(&build_observable(Observable::Identity, s.basis).unwrap(), s, s).unwrap())
        .collect();

    // stationary expectation for an initial eigenstate
    let eig = initial_amplitudes(InitialState::Eigenstate { lambda: 0.3, delta: 0.55, index: 0 }, 6, 0).unwrap();
    let setup = QuenchSetup::new(&sectors, &eig).unwrap();
    let series = evolve_expectation(&setup, &znn, &[0.0, 0.7, 3.0, 40.0]).unwrap();
    for o in &series {
        assert!((o.re - series[0].re).abs() < 1e-9);
    }
    assert!((diagonal_ensemble(&setup, &ident).unwrap() - 1.0).abs() < 1e-10);

    // O(0) from the eigen-sum against the product-state expectation
    let neel = initial_amplitudes(InitialState::Neel, 6, 0).unwrap();
    let setup = QuenchSetup::new(&sectors, &neel).unwrap();
    let eigen_sum = evolve_expectation(&setup, &znn, &[0.0]).unwrap()[0];
    let codes = sector_codes(6, 0);
    let op = observable_operator(Observable::ZNN, 6, Boundary::Pbc).unwrap();
    let mut direct = c64::new(0.0, 0.0);
    for (b, &s) in codes.iter().enumerate() {
        op.apply(s, |t, w| {
            let a = codes.binary_search(&t).unwrap();
            direct += neel[a].conj() * w * neel[b];
        });
    }
    assert!((eigen_sum - direct).norm() < 1e-10);

    // the whole spectrum as window gives Tr(O)/D
    let energies: Vec<f64> = sectors.iter().flat_map(|s| s.energies().iter().copied()).collect();
    let diag: Vec<f64> = znn.iter().flat_map(|e| e.diagonal().unwrap()).collect();
    let me = microcanonical_average(&energies, &diag, 0.0, 1e3).unwrap();
    let trace = diag.iter().sum::<f64>() / diag.len() as f64;
    assert!((me.value - trace).abs() < 1e-12);
    let ones = vec![1.0; energies.len()];
    assert!((microcanonical_average(&energies, &ones, 0.0, 0.1).unwrap().value - 1.0).abs() < 1e-15);
    assert!(microcanonical_average(&energies, &diag, 0.0, 0.0).is_err());
}

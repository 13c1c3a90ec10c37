use eth_lab::basis::{all_momentum_sectors, build_sym_basis, SectorSpec, SymBasis};
use eth_lab::eth::elements::EigenSector;
use eth_lab::eth::spectral::{uniform_grid, OmegaBins};
use eth_lab::hamiltonian::{build_hamiltonian, ModelParams};
use eth_lab::spectra::{diagonalize_real, Spectrum};
use eth_lab::symmetry_eth::*;

fn solve(spec: SectorSpec, params: &ModelParams) -> (SymBasis, Spectrum) {
    let basis = build_sym_basis(spec).unwrap();
    let h = build_hamiltonian(params, &basis).unwrap();
    let s = diagonalize_real(&h, &basis, params.digest()).unwrap();
    (basis, s)
}

fn grid(sigma: f64) -> SpectralGrid {
    SpectralGrid {
        bins: OmegaBins::log_linear(1e-2, 8, 12.0, 0.5).unwrap(),
        grid: uniform_grid(12.0, 0.01),
        sigma,
        zero_window: 0.05,
        window: (0.5, 4.0),
    }
}

#[test]
fn momentum_decomposition_small_chain() {
    let params = ModelParams::pbc(0.55, 0.0);
    let solved: Vec<_> = all_momentum_sectors(7, 1, false).into_iter().map(|s| solve(s, &params)).collect();
    let sectors: Vec<EigenSector> = solved.iter().map(|(b, s)| EigenSector::new(b, s).unwrap()).collect();
    let pc = local_op_phase_check(&sectors, 0, 3).unwrap();
    println!("{pc:?}");
    assert!(pc.max_violation < 1e-8);
    let same = local_op_phase_check(&sectors[..2], 2, 2).unwrap();
    assert_eq!(same.max_violation, 0.0);
    let r = momentum_resolved_sf(&sectors, 2, &grid(0.05)).unwrap();
    println!("recon {} delta0 {} sel {} collapse {:?}", r.reconstruction_defect, r.delta0_defect, r.selection_rule_max, r.collapse);
    assert!(r.reconstruction_defect < 1e-8);
    assert!(r.delta0_defect < 1e-8);
    assert!(r.selection_rule_max <= 1e-12);
    assert!(momentum_resolved_sf(&sectors[1..], 2, &grid(0.05)).is_err());
}

#[test]
fn distance_decomposition_small_chain() {
    let params = ModelParams::obc(0.55, 0.1);
    let (b, s) = solve(SectorSpec::magnetization(7, 1, eth_lab::basis::Boundary::Obc), &params);
    let sector = EigenSector::new(&b, &s).unwrap();
    let r = obc_distance_decomposition(&sector, &grid(0.05)).unwrap();
    println!("recon {} cross {:?} sig {:?} gap {}", r.reconstruction_defect, r.cross_site, r.significance, r.running_mean_gap);
    assert!(r.reconstruction_defect < 1e-8);
}

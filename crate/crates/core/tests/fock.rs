use std::sync::Arc;
use std::time::Instant;

use pphi2_core::fock::{
    assemble_hamiltonian, gap_scan, lowest_eigenvalues, semiclassical_limit_check, FockOptions, ScanOptions,
};
use pphi2_core::harmonic::{harmonic_ground_energy, QuadraticPerturbation};
use pphi2_core::linalg::sorted_eigen;
use pphi2_core::potential::{make_example_potential, ExampleVariant};
use pphi2_core::{Boundary, ClassicalPotential, CutoffFunction, Field, Grid, ModeBasis, PolynomialPotential};

fn periodic(l: f64, n: usize) -> Arc<ModeBasis> {
    Arc::new(ModeBasis::new(Grid::new(l, n, Boundary::Periodic).unwrap(), 1.0).unwrap())
}

fn poly(basis: &Arc<ModeBasis>, coeffs: Vec<f64>) -> ClassicalPotential {
    let g = CutoffFunction::uniform(basis);
    ClassicalPotential::new(basis.clone(), PolynomialPotential::new(coeffs).unwrap(), g).unwrap()
}

fn double_well(n: usize) -> ClassicalPotential {
    let basis = periodic(2.0, n);
    let g = CutoffFunction::uniform(&basis);
    make_example_potential(1.0, 1.0, 1, ExampleVariant::Interval, basis, g).unwrap()
}

#[test]
fn free_spectrum_matches_diagonal() {
    let basis = periodic(2.0 * std::f64::consts::PI, 16);
    let pot = ClassicalPotential::free(basis.clone());
    let h = assemble_hamiltonian(&pot, 1.0, 2, 6, &FockOptions::default()).unwrap();
    let res = lowest_eigenvalues(&h, 3, 0).unwrap();
    let w = basis.frequencies();
    let mut expected = vec![0.0, w[0], w[1], 2.0 * w[0]];
    expected.sort_by(f64::total_cmp);
    for i in 0..3 {
        assert!((res.eigenvalues[i] - expected[i]).abs() < 1e-10, "{:?}", res.eigenvalues);
    }
}

#[test]
fn one_mode_quadratic_matches_harmonic_formula() {
    // l = 1, one constant mode with Ω = m = 1; v = ½P″g = 0.75.
    let basis = periodic(1.0, 4);
    let pot = poly(&basis, vec![0.0, 0.0, 0.75]);
    let one = basis.truncated(1).unwrap();
    let hs = harmonic_ground_energy(&one, &QuadraticPerturbation::new(vec![0.75; 4]).unwrap()).unwrap();
    assert!((hs.energy + 0.25).abs() < 1e-12);
    let h = assemble_hamiltonian(&pot, 1.0, 1, 200, &FockOptions::default()).unwrap();
    let e = lowest_eigenvalues(&h, 1, 0).unwrap().eigenvalues[0];
    assert!((e - hs.energy).abs() < 1e-6, "{e}");
    // Bogoliubov: Ω_v = √(Ω² + 4u), E = ½(Ω_v − Ω) − u/Ω.
    let u = 0.75;
    let bogoliubov = 0.5 * ((1.0 + 4.0 * u as f64).sqrt() - 1.0) - u;
    assert!((e - bogoliubov).abs() < 1e-6);
}

#[test]
fn quadratic_hamiltonian_matches_harmonic_at_two_modes() {
    let basis = periodic(2.0, 8);
    let pot = poly(&basis, vec![0.0, 0.0, 0.4]);
    let two = basis.truncated(2).unwrap();
    let target = harmonic_ground_energy(&two, &QuadraticPerturbation::new(vec![0.4; 8]).unwrap())
        .unwrap()
        .energy;
    let h = assemble_hamiltonian(&pot, 1.0, 2, 40, &FockOptions::default()).unwrap();
    let e = lowest_eigenvalues(&h, 1, 0).unwrap().eigenvalues[0];
    assert!((e - target).abs() < 1e-4, "{e} vs {target}");
}

#[test]
fn lanczos_agrees_with_dense_on_fock_matrix() {
    let pot = double_well(8);
    let h = assemble_hamiltonian(&pot, 3.0, 3, 10, &FockOptions::default()).unwrap();
    assert!(h.dim() <= 2000);
    let res = lowest_eigenvalues(&h, 4, 7).unwrap();
    let (dense, _) = sorted_eigen(&h.dense()).unwrap();
    for i in 0..4 {
        assert!((res.eigenvalues[i] - dense[i]).abs() < 1e-9, "{i}: {} vs {}", res.eigenvalues[i], dense[i]);
        assert!(res.residuals[i] <= 1e-8 * res.norm_estimate);
    }
}

#[test]
fn double_well_ground_state_is_simple_and_even() {
    let pot = double_well(8);
    let h = assemble_hamiltonian(&pot, 6.0, 2, 14, &FockOptions::default()).unwrap();
    let scale = h.dense().amax();
    assert!(h.max_asymmetry() <= 1e-12 * scale);
    assert_eq!(h.parity_defect(), 0.0);
    let low = pphi2_core::fock::low_spectrum(&h, &ScanOptions::default()).unwrap();
    assert!(low.e1 < low.e2);
    assert_eq!(low.parities, Some((1, -1)));
}

#[test]
fn energy_nonincreasing_in_cutoff() {
    let pot = double_well(8);
    let mut last = f64::INFINITY;
    for n_max in [4, 6, 8, 10, 12] {
        let h = assemble_hamiltonian(&pot, 4.0, 2, n_max, &FockOptions::default()).unwrap();
        let e = lowest_eigenvalues(&h, 1, 0).unwrap().eigenvalues[0];
        assert!(e <= last + 1e-10, "N_max {n_max}: {e} > {last}");
        last = e;
    }
}

#[test]
fn one_mode_gap_scan() {
    let pot = double_well(16);
    let lambdas = [4.0, 6.0, 8.0, 10.0, 12.0];
    let start = Instant::now();
    let rows = gap_scan(&pot, &lambdas, 1, 400, &ScanOptions::default()).unwrap();
    eprintln!("gap scan took {:?}", start.elapsed());
    // Independent 40-digit diagonalization of the same one-mode matrix.
    let reference = [
        (-2.702451238131975781, 1.71664957873912e-6),
        (-2.548475801184544265, 1.08510639556747e-8),
        (-2.472628009886098101, 6.25082543758861e-11),
        (-2.427500647279580618, 3.44035387190988e-13),
        (-2.397578659897695533, 1.84309608111537e-15),
    ];
    for (row, (e1, r)) in rows.iter().zip(reference) {
        assert!(((row.gap - r) / r).abs() < 1e-7, "λ = {}: {:e} vs {r:e}", row.lambda, row.gap);
        assert!((row.e1 - e1).abs() < 1e-13, "λ = {}: {} vs {e1}", row.lambda, row.e1);
        assert!(!row.precision_limited);
        assert_eq!(row.parities, Some((1, -1)));
    }
    for w in rows.windows(2) {
        assert!(w[1].gap < w[0].gap);
    }
    let slopes: Vec<f64> = rows.iter().filter_map(|r| r.slope).collect();
    assert_eq!(slopes.len(), 4);
    for w in slopes.windows(2) {
        assert!(w[1] > w[0], "{slopes:?}");
    }
    let last = *slopes.last().unwrap();
    assert!((last - 8.0 / 3.0).abs() <= 0.25 * 8.0 / 3.0, "{last}");
}

#[test]
fn quartic_limit_deviation_decreases() {
    let basis = periodic(1.0, 8);
    let pot = poly(&basis, vec![0.0, 0.0, 0.0, 0.0, 1.0]);
    let start = Instant::now();
    let check = semiclassical_limit_check(&pot, &[], &[2.0, 4.0, 8.0, 16.0], 2, 12, &ScanOptions::default()).unwrap();
    assert!(start.elapsed().as_secs() < 600);
    assert!(check.min_value.abs() < 1e-12);
    let dev: Vec<f64> = check.rows.iter().map(|r| r.deviation).collect();
    for w in dev[1..].windows(2) {
        assert!(w[1] < w[0], "{dev:?}");
    }
}

#[test]
fn free_limit_is_exact() {
    let basis = periodic(1.0, 8);
    let pot = ClassicalPotential::free(basis);
    let check = semiclassical_limit_check(&pot, &[], &[1.0, 5.0], 2, 6, &ScanOptions::default()).unwrap();
    for r in &check.rows {
        assert!(r.e1.abs() < 1e-12 && r.target.abs() < 1e-12);
    }
}

#[test]
fn double_well_limit_targets_agree_at_both_wells() {
    let pot = double_well(8);
    let basis = pot.basis().clone();
    let starts = [Field::constant(&basis, 1.0), Field::constant(&basis, -1.0)];
    let check = semiclassical_limit_check(&pot, &starts, &[4.0, 8.0], 1, 40, &ScanOptions::default()).unwrap();
    assert_eq!(check.harmonic_energies.len(), 2);
    assert!((check.harmonic_energies[0] - check.harmonic_energies[1]).abs() < 1e-10);
    assert!((check.harmonic_energies[0] + 2.25).abs() < 1e-8);
    assert!(check.rows[1].deviation < check.rows[0].deviation);
}

#[test]
fn lowest_eigenvalues_resolve_degenerate_doublet() {
    let pot = double_well(16);
    let h = assemble_hamiltonian(&pot, 12.0, 1, 400, &FockOptions::default()).unwrap();
    let r = lowest_eigenvalues(&h, 4, 0).unwrap();
    assert!((r.eigenvalues[0] + 2.397578659897695533).abs() < 1e-12, "{:?}", r.eigenvalues);
    assert!((r.eigenvalues[1] - r.eigenvalues[0]).abs() < 1e-12);
    assert!(r.eigenvalues[2] - r.eigenvalues[1] > 1.0);
    assert_eq!(r.eigenvectors.len(), 4);
}

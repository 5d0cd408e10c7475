//! The `oracles`, `invariants` and `paper-values` suites.

use std::sync::Arc;

use nalgebra::DVector;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pphi2_core::agmon::{
    agmon_1dim, agmon_distance, path_energy, path_length, reparametrize_constant_speed, segment_speeds, AgmonOptions,
    Path,
};
use pphi2_core::fock::{
    assemble_hamiltonian, lowest_eigenvalues, smearing_constant, wick_coefficients, FockCouplings, FockOptions,
};
use pphi2_core::harmonic::{harmonic_ground_energy, QuadraticPerturbation};
use pphi2_core::linalg::sorted_eigen;
use pphi2_core::potential::{make_example_potential, ExampleVariant};
use pphi2_core::spectral::{cauchy_semigroup, sobolev_norm};
use pphi2_core::{Boundary, ClassicalPotential, CutoffFunction, Field, Grid, ModeBasis, PolynomialPotential};

use crate::oracles::{self, SchrodingerGrid};
use crate::Check;

pub fn periodic(l: f64, n: usize) -> Arc<ModeBasis> {
    Arc::new(ModeBasis::new(Grid::new(l, n, Boundary::Periodic).expect("grid"), 1.0).expect("basis"))
}

/// `a = 1`, `x₀ = 1`, `l = 2`, uniform cutoff, mass absorbed into `P`.
pub fn double_well(n: usize) -> ClassicalPotential {
    let basis = periodic(2.0, n);
    let g = CutoffFunction::uniform(&basis);
    make_example_potential(1.0, 1.0, 1, ExampleVariant::Interval, basis, g).expect("double well")
}

pub fn polynomial(basis: &Arc<ModeBasis>, coeffs: Vec<f64>) -> ClassicalPotential {
    let g = CutoffFunction::uniform(basis);
    ClassicalPotential::new(basis.clone(), PolynomialPotential::new(coeffs).expect("polynomial"), g).expect("potential")
}

fn run(name: &str, anchor: &str, f: impl FnOnce() -> pphi2_core::Result<Check>) -> Check {
    f().unwrap_or_else(|e| Check::failed(name, anchor, e))
}

/// A random path with `segments` pieces and random knot times on `[0, 1]`.
pub fn random_path(basis: &Arc<ModeBasis>, rng: &mut ChaCha8Rng, segments: usize, amplitude: f64) -> Path {
    let k = basis.len();
    let h = DVector::from_fn(k, |_, _| amplitude * (rng.gen::<f64>() - 0.5));
    let e = DVector::from_fn(k, |_, _| amplitude * (rng.gen::<f64>() - 0.5));
    let bump = DVector::from_fn(k, |_, _| amplitude * (rng.gen::<f64>() - 0.5));
    let mut steps: Vec<f64> = (0..segments).map(|_| 0.2 + rng.gen::<f64>()).collect();
    let total: f64 = steps.iter().sum();
    steps.iter_mut().for_each(|s| *s /= total);
    let mut times = vec![0.0];
    for s in &steps {
        times.push(times.last().unwrap() + s);
    }
    *times.last_mut().unwrap() = 1.0;
    let knots = times
        .iter()
        .map(|&t| &h * (1.0 - t) + &e * t + &bump * (4.0 * t * (1.0 - t)))
        .collect();
    Path::from_coefficients(basis.clone(), times, knots).expect("path")
}

pub fn oracles(seed: u64) -> Vec<Check> {
    let mut out = Vec::new();

    out.push(run("one-mode Bogoliubov vs HS formula", "E_v = −¼‖(A_v² − A²)A⁻¹‖²_HS", || {
        let basis = periodic(1.0, 4);
        let one = basis.truncated(1)?;
        let e = harmonic_ground_energy(&one, &QuadraticPerturbation::new(vec![0.75; 4])?)?.energy;
        Ok(Check::close(
            "one-mode Bogoliubov vs HS formula",
            "E_v = −¼‖(A_v² − A²)A⁻¹‖²_HS",
            e,
            oracles::bogoliubov_one_mode(1.0, 0.75),
            1e-12,
        ))
    }));

    out.push(run("one-mode Fock ground energy vs HS formula", "E₁ = inf σ(−L_A + Q_v)", || {
        let basis = periodic(1.0, 4);
        let pot = polynomial(&basis, vec![0.0, 0.0, 0.75]);
        let h = assemble_hamiltonian(&pot, 1.0, 1, 200, &FockOptions::default())?;
        let e = lowest_eigenvalues(&h, 1, seed)?.eigenvalues[0];
        Ok(Check::close(
            "one-mode Fock ground energy vs HS formula",
            "E₁ = inf σ(−L_A + Q_v)",
            e,
            -0.25,
            1e-6,
        ))
    }));

    let mut worst: f64 = 0.0;
    for k in 1..=8u32 {
        for s2 in [0.5, 1.0, 2.0] {
            let table = wick_coefficients(k);
            worst = worst.max(oracles::gaussian_mean(|x| table.evaluate(x, s2), s2, 20).abs());
        }
    }
    out.push(Check::close(
        "Gaussian means of :x^k:, k = 1..8 (Gauss–Hermite)",
        "E[:x^k:] = 0",
        worst,
        0.0,
        1e-10,
    ));

    let mut worst: f64 = 0.0;
    for k in 0..=12u32 {
        let table = wick_coefficients(k);
        let poly = oracles::wick_polynomial(k as usize, 1.0);
        for j in 0..=(k as usize / 2) {
            worst = worst.max((table.coefficient_f64(j) - poly[k as usize - 2 * j]).abs());
        }
    }
    out.push(Check::close(
        "Wick coefficients vs Hermite recurrence, k ≤ 12",
        "c_{k,j} = (−½)^j k!/(j!(k−2j)!)",
        worst,
        0.0,
        0.0,
    ));

    for (n, m) in [(1u32, 1.0), (2, 1.0), (4, 0.5), (3, 2.0)] {
        let name = format!("smearing constant n = {n}, m = {m} vs Bessel K₀ identity");
        let anchor = "c_n² = (1/2π)∫₀^∞ e^{−m²t}/√(t(t + 2/n)) dt";
        out.push(run(&name, anchor, || {
            Ok(Check::close(&name, anchor, smearing_constant(n, m)?, oracles::smearing_oracle(n, m), 1e-8))
        }));
    }

    out.push(run("gradient of U vs central differences", "∇U = ½(m² − Δ)h + P′(h)g", || {
        let pot = double_well(12);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = DVector::from_fn(pot.basis().len(), |_, _| rng.gen::<f64>() - 0.5);
        let g = pot.gradient_of_coefficients(&c);
        let fd = oracles::central_gradient(|x| pot.value_of_coefficients(x), &c, 1e-5);
        let err = (&g - &fd).amax() / g.amax();
        Ok(Check::close("gradient of U vs central differences", "∇U = ½(m² − Δ)h + P′(h)g", err, 0.0, 1e-6))
    }));

    out.push(run("one-mode Fock spectrum vs 1D finite differences", "K = 1 block ≅ 1D Schrödinger operator", || {
        let pot = double_well(16);
        let lambda = 4.0;
        let h = assemble_hamiltonian(&pot, lambda, 1, 200, &FockOptions::default())?;
        let fock = lowest_eigenvalues(&h, 4, seed)?.eigenvalues;
        let fd = oracles::one_mode_schrodinger(
            pot.polynomial().coefficients(),
            lambda,
            2.0,
            1.0,
            4,
            SchrodingerGrid { half_width: 12.0, points: 2400 },
        );
        let err = fock.iter().zip(&fd).map(|(a, b)| ((a - b) / b).abs()).fold(0.0, f64::max);
        Ok(Check::close(
            "one-mode Fock spectrum vs 1D finite differences (λ = 4, lowest 4)",
            "K = 1 block ≅ 1D Schrödinger operator",
            err,
            0.0,
            1e-4,
        ))
    }));

    out.push(run("Lanczos vs dense eigenvalues", "σ(H) lowest four", || {
        let pot = double_well(8);
        let h = assemble_hamiltonian(&pot, 3.0, 3, 10, &FockOptions::default())?;
        let lanczos = lowest_eigenvalues(&h, 4, seed)?.eigenvalues;
        let (dense, _) = sorted_eigen(&h.dense())?;
        let err = (0..4).map(|i| (lanczos[i] - dense[i]).abs()).fold(0.0, f64::max);
        Ok(Check::close("Lanczos vs dense eigenvalues", "σ(H) lowest four", err, 0.0, 1e-9))
    }));

    out
}

pub fn invariants(seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let pot = double_well(12);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let path = random_path(pot.basis(), &mut rng, 24, 3.0);
        let l = path_length(&pot, &path).unwrap_or(f64::NAN);
        let e = path_energy(&pot, &path).unwrap_or(f64::NAN);
        worst = worst.max(l - e.sqrt() * (1.0 + 1e-12));
    }
    out.push(Check::holds(
        "ℓ ≤ √e sweep (100 random paths)",
        "ℓ(c) ≤ √e(c)",
        worst <= 0.0,
        worst,
        "max of ℓ − √e",
    ));

    let free = ClassicalPotential::free(periodic(2.0 * std::f64::consts::PI, 16));
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let path = random_path(free.basis(), &mut rng, 200, 2.0);
        let l = path_length(&free, &path).unwrap_or(f64::NAN);
        let h = sobolev_norm(&path.start(), 0.5).powi(2);
        let k = sobolev_norm(&path.end(), 0.5).powi(2);
        let bound = 0.25 * (k - h).abs();
        worst = worst.max((bound - l) / bound.max(1e-12));
    }
    // Radial paths along a single mode attain the bound.
    for k in 0..10 {
        let b = free.basis();
        let end = Field::mode(b, k).map(|f| f.scaled(0.5 + rng.gen::<f64>())).expect("mode");
        let path = Path::straight(&Field::zero(b), &end, 64, 1.0, 1.0).expect("path");
        let l = path_length(&free, &path).unwrap_or(f64::NAN);
        let bound = 0.25 * sobolev_norm(&end, 0.5).powi(2);
        worst = worst.max((bound - l) / bound);
    }
    out.push(Check::holds(
        "free-field lower bound on random and radial paths",
        "ℓ(c) ≥ ¼|‖k‖²_H − ‖h‖²_H|",
        worst <= 1e-3,
        worst,
        "max relative violation; midpoint-rule tolerance 1e-3",
    ));

    let mut worst_len: f64 = 0.0;
    let mut worst_speed: f64 = 0.0;
    let mut failure = None;
    for _ in 0..20 {
        let path = random_path(pot.basis(), &mut rng, 32, 3.0);
        let result = (|| -> pphi2_core::Result<(f64, f64)> {
            let before = path_length(&pot, &path)?;
            let re = reparametrize_constant_speed(&pot, &path)?;
            let after = path_length(&pot, &re)?;
            let speeds = segment_speeds(&pot, &re)?;
            let mean = speeds.iter().sum::<f64>() / speeds.len() as f64;
            let spread = speeds.iter().map(|s| (s / mean - 1.0).abs()).fold(0.0, f64::max);
            Ok(((after - before).abs() / before, spread))
        })();
        match result {
            Ok((dl, spread)) => {
                worst_len = worst_len.max(dl);
                worst_speed = worst_speed.max(spread);
            }
            Err(e) => failure = Some(e.to_string()),
        }
    }
    if let Some(e) = failure {
        out.push(Check::failed("reparametrization", "ℓ(c∘φ) = ℓ(c)", e));
    } else {
        out.push(Check::close(
            "reparametrization preserves ℓ",
            "ℓ(c∘φ) = ℓ(c)",
            worst_len,
            0.0,
            1e-6,
        ));
        out.push(Check::close(
            "constant speed after reparametrization",
            "√U(c)‖c′‖ constant",
            worst_speed,
            0.0,
            0.05,
        ));
    }

    out.push(run("semigroup law", "S_t S_s = S_{t+s}", || {
        let basis = periodic(2.0, 32);
        let f = Field::from_fn(&basis, |x| (3.0 * x).sin() + x * x);
        let a = cauchy_semigroup(&cauchy_semigroup(&f, 0.3)?, 0.45)?;
        let b = cauchy_semigroup(&f, 0.75)?;
        let err = (a.coefficients() - b.coefficients()).amax();
        Ok(Check::close("semigroup law", "S_t S_s = S_{t+s}", err, 0.0, 1e-12))
    }));

    out.push(run("gradient vs finite differences", "∇U", || {
        let c = DVector::from_fn(pot.basis().len(), |_, _| rng.gen::<f64>() - 0.5);
        let g = pot.gradient_of_coefficients(&c);
        let fd = oracles::central_gradient(|x| pot.value_of_coefficients(x), &c, 1e-5);
        Ok(Check::close("gradient vs finite differences", "∇U", (&g - &fd).amax() / g.amax(), 0.0, 1e-6))
    }));

    out.push(run("Fock Hamiltonian symmetric and parity preserving", "HΠ = ΠH", || {
        let pot = double_well(8);
        let h = assemble_hamiltonian(&pot, 5.0, 3, 8, &FockOptions::default())?;
        let asym = h.max_asymmetry() / h.dense().amax();
        let parity = h.parity_defect();
        Ok(Check::holds(
            "Fock Hamiltonian symmetric and parity preserving",
            "HΠ = ΠH",
            asym <= 1e-12 && parity == 0.0,
            asym.max(parity),
            "max relative asymmetry and parity defect",
        ))
    }));

    out.push(run("λ-scaling of the degree-n blocks", "V_λ(w) = λ:V(w/√λ):", || {
        let pot = double_well(8);
        let c = Arc::new(FockCouplings::new(&pot, 2, 8, &FockOptions::default())?);
        let h1 = c.hamiltonian(1.0)?.dense();
        let h4 = c.hamiltonian(4.0)?.dense();
        let h9 = c.hamiltonian(9.0)?.dense();
        // H(λ) = λB₀ + F + B₂ + λ⁻¹B₄; eliminate the λ-independent part.
        let lhs = (&h4 - &h1) * (1.0 / 3.0);
        let rhs = (&h9 - &h1) * (1.0 / 8.0);
        // Three values of λ determine B₀ and B₄; a fourth is predicted.
        let b4 = (&lhs - &rhs) * (1.0 / (-0.25 + 1.0 / 9.0));
        let b0 = &lhs + &b4 * 0.25;
        let fixed = &h1 - (&b0 + &b4);
        let predicted = &fixed + &b0 * 16.0 + &b4 * (1.0 / 16.0);
        let err = (c.hamiltonian(16.0)?.dense() - predicted).amax() / h1.amax();
        Ok(Check::close("λ-scaling of the degree-n blocks", "V_λ(w) = λ:V(w/√λ):", err, 0.0, 1e-12))
    }));

    out.push(run("E₁ nonincreasing in N_max", "variational truncation", || {
        let pot = double_well(8);
        let mut values = Vec::new();
        for n_max in [4, 6, 8, 10] {
            let h = assemble_hamiltonian(&pot, 4.0, 2, n_max, &FockOptions::default())?;
            values.push(lowest_eigenvalues(&h, 1, seed)?.eigenvalues[0]);
        }
        let worst = values.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        Ok(Check::holds(
            "E₁ nonincreasing in N_max",
            "variational truncation",
            worst <= 1e-10,
            worst,
            format!("{values:?}"),
        ))
    }));

    out
}

pub fn paper_values(seed: u64) -> Vec<Check> {
    let mut out = Vec::new();

    out.push(run("free-field Agmon distance 0 → e₁ = ¼√2 ±2%", "d(0, h) = ¼‖h‖²_H", || {
        let free = ClassicalPotential::free(periodic(2.0 * std::f64::consts::PI, 16));
        let b = free.basis().clone();
        let e1 = Field::mode(&b, 1)?;
        let opts = AgmonOptions { seed, ..Default::default() };
        let d = agmon_distance(&free, &Field::zero(&b), &e1, &opts)?.distance;
        Ok(Check::relative(
            "free-field Agmon distance 0 → e₁ = ¼√2 ±2%",
            "d(0, h) = ¼‖h‖²_H",
            d,
            0.25 * 2f64.sqrt(),
            0.02,
        ))
    }));

    out.push(run("1D Agmon integral = 4/3", "∫√Q = 4√a x₀³/3", || {
        let v = agmon_1dim(|x| (x * x - 1.0).powi(2), -1.0, 1.0)?;
        Ok(Check::close("1D Agmon integral = 4/3", "∫√Q = 4√a x₀³/3", v, 4.0 / 3.0, 1e-8))
    }));

    out.push(run("double-well Agmon distance = 8/3 ±2%", "d(−h₀, h₀) = 8/3", || {
        let pot = double_well(32);
        let b = pot.basis().clone();
        let opts = AgmonOptions { seed, ..Default::default() };
        let d = agmon_distance(&pot, &Field::constant(&b, -1.0), &Field::constant(&b, 1.0), &opts)?.distance;
        Ok(Check::relative("double-well Agmon distance = 8/3 ±2%", "d(−h₀, h₀) = 8/3", d, 8.0 / 3.0, 0.02))
    }));

    out.push(run("tanh instanton action = 8/3 ±2%", "I(x₀ tanh(2√a x₀ t)) = 8/3", || {
        let pot = double_well(16);
        let b = pot.basis().clone();
        let (h, k) = (Field::constant(&b, -1.0), Field::constant(&b, 1.0));
        let u = pphi2_core::instanton::SpaceTimeField::interpolate(&h, &k, 4.0, 400, |t| 0.5 * (1.0 + (2.0 * t).tanh()))?;
        let a = pphi2_core::instanton::action(&pot, &u)?.action;
        Ok(Check::relative("tanh instanton action = 8/3 ±2%", "I(x₀ tanh(2√a x₀ t)) = 8/3", a, 8.0 / 3.0, 0.02))
    }));

    let table = wick_coefficients(4);
    let exact = table.coefficient(1) == BigRational::from_integer(BigInt::from(-6))
        && table.coefficient(2) == BigRational::from_integer(BigInt::from(3));
    out.push(Check::holds(
        "c_{4,1} = −6, c_{4,2} = 3 exactly",
        ":x⁴: = x⁴ − 6c²x² + 3c⁴",
        exact,
        table.coefficient_f64(1),
        "exact rational comparison",
    ));

    out.push(run("one-mode harmonic energy = −0.25", "E_v = −¼‖(A_v² − A²)A⁻¹‖²_HS", || {
        let basis = periodic(1.0, 4);
        let one = basis.truncated(1)?;
        let e = harmonic_ground_energy(&one, &QuadraticPerturbation::new(vec![0.75; 4])?)?.energy;
        Ok(Check::close("one-mode harmonic energy = −0.25", "E_v = −¼‖(A_v² − A²)A⁻¹‖²_HS", e, -0.25, 1e-12))
    }));

    out.push(run("m² − Δ + 4v at ±h₀ has smallest eigenvalue 16", "Hessian of U ≥ 8", || {
        let pot = double_well(16);
        let b = pot.basis().clone();
        let lo = pot.hessian_smallest_eigenvalue(&Field::constant(&b, 1.0))?;
        Ok(Check::close("m² − Δ + 4v at ±h₀ has smallest eigenvalue 16", "Hessian of U ≥ 8", lo, 16.0, 1e-9))
    }));

    out
}

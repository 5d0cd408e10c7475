//! The classical potential `U(h) = ¼∫h′² + ∫(m²/4·h² + P(h)g)`.
//!
//! In mode coordinates the quadratic part is `¼Σ ω_k² c_k²` exactly and the
//! interaction is the grid quadrature `Δx Σ_j P(h_j) g_j`.

use std::cmp::Ordering;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::{Field, ModeBasis};

/// `P(x) = Σ_k a_k x^k`.
///
/// Either identically zero or of even degree with positive leading
/// coefficient, so `P` is bounded below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialPotential {
    coefficients: Vec<f64>,
}

impl PolynomialPotential {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("polynomial", "coefficients must be finite"));
        }
        let mut coefficients = coefficients;
        while coefficients.last() == Some(&0.0) {
            coefficients.pop();
        }
        if coefficients.len() > 1 {
            let degree = coefficients.len() - 1;
            if degree % 2 == 1 {
                return Err(Error::invalid("polynomial", format!("degree {degree} is odd")));
            }
            if coefficients[degree] <= 0.0 {
                return Err(Error::invalid("polynomial", "leading coefficient must be positive"));
            }
        }
        Ok(PolynomialPotential { coefficients })
    }

    pub fn zero() -> Self {
        PolynomialPotential {
            coefficients: Vec::new(),
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficient(&self, k: usize) -> f64 {
        self.coefficients.get(k).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// True when every odd coefficient vanishes.
    pub fn is_even(&self) -> bool {
        self.coefficients.iter().skip(1).step_by(2).all(|&a| a == 0.0)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &a| acc * x + a)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, &a)| acc * x + k as f64 * a)
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .skip(2)
            .rev()
            .fold(0.0, |acc, (k, &a)| acc * x + (k * (k - 1)) as f64 * a)
    }

    pub(crate) fn shifted(&self, delta: f64) -> Self {
        let mut c = self.coefficients.clone();
        if c.is_empty() {
            c.push(0.0);
        }
        c[0] += delta;
        PolynomialPotential { coefficients: c }
    }
}

/// Node samples of the nonnegative spatial cutoff `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffFunction {
    samples: Vec<f64>,
}

impl CutoffFunction {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if let Some(bad) = samples.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return Err(Error::invalid("cutoff", format!("samples must be finite and nonnegative, got {bad}")));
        }
        Ok(CutoffFunction { samples })
    }

    pub fn uniform(basis: &ModeBasis) -> Self {
        CutoffFunction {
            samples: vec![1.0; basis.grid().num_nodes()],
        }
    }

    pub fn zero(basis: &ModeBasis) -> Self {
        CutoffFunction {
            samples: vec![0.0; basis.grid().num_nodes()],
        }
    }

    pub fn from_fn(basis: &ModeBasis, g: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(basis.grid().nodes().into_iter().map(g).collect())
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }
}

/// `U` on a fixed mode basis.
#[derive(Debug, Clone)]
pub struct ClassicalPotential {
    basis: Arc<ModeBasis>,
    polynomial: PolynomialPotential,
    cutoff: CutoffFunction,
}

impl ClassicalPotential {
    pub fn new(basis: Arc<ModeBasis>, polynomial: PolynomialPotential, cutoff: CutoffFunction) -> Result<Self> {
        if cutoff.samples.len() != basis.grid().num_nodes() {
            return Err(Error::invalid(
                "cutoff",
                format!("expected {} samples, got {}", basis.grid().num_nodes(), cutoff.samples.len()),
            ));
        }
        Ok(ClassicalPotential {
            basis,
            polynomial,
            cutoff,
        })
    }

    /// `U₀(h) = ¼‖Ã²h‖²`, the free field.
    pub fn free(basis: Arc<ModeBasis>) -> Self {
        let cutoff = CutoffFunction::zero(&basis);
        ClassicalPotential {
            basis,
            polynomial: PolynomialPotential::zero(),
            cutoff,
        }
    }

    pub fn basis(&self) -> &Arc<ModeBasis> {
        &self.basis
    }

    pub fn polynomial(&self) -> &PolynomialPotential {
        &self.polynomial
    }

    pub fn cutoff(&self) -> &CutoffFunction {
        &self.cutoff
    }

    pub fn mass(&self) -> f64 {
        self.basis.mass()
    }

    /// `∫g` by grid quadrature.
    pub fn cutoff_integral(&self) -> f64 {
        self.cutoff.samples.iter().sum::<f64>() * self.basis.weight()
    }

    pub fn is_even(&self) -> bool {
        self.polynomial.is_even()
    }

    fn check(&self, h: &Field) -> Result<()> {
        if self.basis.same_as(h.basis()) {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    /// `U` from mode coefficients.
    pub fn value_of_coefficients(&self, c: &DVector<f64>) -> f64 {
        let kinetic: f64 = c
            .iter()
            .zip(self.basis.frequencies())
            .map(|(c, w)| w * w * c * c)
            .sum();
        0.25 * kinetic + self.interaction(&self.basis.to_values(c))
    }

    fn interaction(&self, values: &DVector<f64>) -> f64 {
        let s: f64 = values
            .iter()
            .zip(&self.cutoff.samples)
            .map(|(h, g)| if *g == 0.0 { 0.0 } else { self.polynomial.value(*h) * g })
            .sum();
        s * self.basis.weight()
    }

    /// L² gradient `½(m² − Δ)h + P′(h)g` in mode coefficients.
    pub fn gradient_of_coefficients(&self, c: &DVector<f64>) -> DVector<f64> {
        let values = self.basis.to_values(c);
        self.gradient_with_values(c, &values)
    }

    fn gradient_with_values(&self, c: &DVector<f64>, values: &DVector<f64>) -> DVector<f64> {
        let force = DVector::from_iterator(
            values.len(),
            values
                .iter()
                .zip(&self.cutoff.samples)
                .map(|(h, g)| self.polynomial.derivative(*h) * g),
        );
        let mut grad = self.basis.to_coefficients(&force);
        for (k, w) in self.basis.frequencies().iter().enumerate() {
            grad[k] += 0.5 * w * w * c[k];
        }
        grad
    }

    /// Value and gradient together, sharing the node transform.
    pub fn value_and_gradient(&self, c: &DVector<f64>) -> (f64, DVector<f64>) {
        let values = self.basis.to_values(c);
        let kinetic: f64 = c
            .iter()
            .zip(self.basis.frequencies())
            .map(|(c, w)| w * w * c * c)
            .sum();
        (
            0.25 * kinetic + self.interaction(&values),
            self.gradient_with_values(c, &values),
        )
    }

    pub fn value(&self, h: &Field) -> Result<f64> {
        self.check(h)?;
        Ok(self.value_of_coefficients(h.coefficients()))
    }

    pub fn gradient(&self, h: &Field) -> Result<Field> {
        self.check(h)?;
        Ok(Field::from_coefficients(&self.basis, self.gradient_of_coefficients(h.coefficients()))?)
    }

    /// `v = ½P″(h)g` at the nodes.
    pub fn schrodinger_potential(&self, h: &Field) -> Result<Vec<f64>> {
        self.check(h)?;
        Ok(h
            .values()
            .iter()
            .zip(&self.cutoff.samples)
            .map(|(x, g)| 0.5 * self.polynomial.second_derivative(*x) * g)
            .collect())
    }

    /// Mode matrix of `m² − Δ + 4v(h)`; twice the Hessian of `U` at `h`.
    pub fn schrodinger_matrix(&self, h: &Field) -> Result<DMatrix<f64>> {
        let v = self.schrodinger_potential(h)?;
        let mut m = self.basis.multiplication_matrix(&v) * 4.0;
        for (k, w) in self.basis.frequencies().iter().enumerate() {
            m[(k, k)] += w * w;
        }
        Ok(m)
    }

    /// Smallest eigenvalue of `m² − Δ + 4v(h)`.
    pub fn hessian_smallest_eigenvalue(&self, h: &Field) -> Result<f64> {
        let m = self.schrodinger_matrix(h)?;
        let asym = linalg::max_asymmetry(&m);
        if asym > 1e-12 * m.amax().max(1.0) {
            return Err(Error::Eigensolver(format!("Hessian asymmetric by {asym:e}")));
        }
        linalg::smallest_eigenvalue(&m)
    }

    /// Same potential with `P` shifted by a constant.
    pub fn with_constant_shift(&self, delta: f64) -> Self {
        ClassicalPotential {
            basis: self.basis.clone(),
            polynomial: self.polynomial.shifted(delta),
            cutoff: self.cutoff.clone(),
        }
    }
}

/// A stationary point found by [`find_minimizers`].
#[derive(Debug, Clone, Serialize)]
pub struct StationaryPoint {
    pub field: Field,
    pub value: f64,
    pub gradient_norm: f64,
    /// Smallest eigenvalue of `m² − Δ + 4v`.
    pub operator_min_eigenvalue: f64,
    /// Smallest eigenvalue of the Hessian of `U` (half the above).
    pub delta: f64,
    /// `δ > 1e−8`.
    pub nondegenerate: bool,
    /// Index of the first start that reached this point.
    pub start: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StartOutcome {
    pub start: usize,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub initial_value: f64,
    pub final_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimizerReport {
    /// Stationary points with positive semidefinite Hessian, sorted by
    /// `U` then by first mode coefficient.
    pub minimizers: Vec<StationaryPoint>,
    /// Stationary points with a negative Hessian direction.
    pub saddles: Vec<StationaryPoint>,
    pub starts: Vec<StartOutcome>,
}

impl MinimizerReport {
    pub fn min_value(&self) -> Option<f64> {
        self.minimizers.iter().map(|p| p.value).reduce(f64::min)
    }
}

const DEDUP_DISTANCE: f64 = 1e-4;
const NONDEGENERACY: f64 = 1e-8;

/// Damped Newton descent on `U` from each start.
///
/// The Newton system is shifted until positive definite (falling back toward
/// steepest descent), with backtracking on `U`. Starts run concurrently.
pub fn find_minimizers(pot: &ClassicalPotential, starts: &[Field], tol: f64) -> Result<MinimizerReport> {
    if starts.is_empty() {
        return Err(Error::invalid("starts", "need at least one start"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", format!("must be positive, got {tol}")));
    }
    for s in starts {
        pot.check(s)?;
    }
    let runs: Vec<(DVector<f64>, StartOutcome)> = starts
        .par_iter()
        .enumerate()
        .map(|(i, s)| newton_descent(pot, s.coefficients().clone(), tol, i))
        .collect();

    let mut points: Vec<StationaryPoint> = Vec::new();
    let mut outcomes = Vec::with_capacity(runs.len());
    for (c, outcome) in runs {
        if outcome.converged && !points.iter().any(|p| (p.field.coefficients() - &c).norm() < DEDUP_DISTANCE) {
            let field = Field::from_coefficients(pot.basis(), c)?;
            let op = pot.hessian_smallest_eigenvalue(&field)?;
            points.push(StationaryPoint {
                value: outcome.final_value,
                gradient_norm: outcome.gradient_norm,
                operator_min_eigenvalue: op,
                delta: 0.5 * op,
                nondegenerate: 0.5 * op > NONDEGENERACY,
                start: outcome.start,
                field,
            });
        }
        outcomes.push(outcome);
    }
    points.sort_by(|a, b| {
        a.value
            .partial_cmp(&b.value)
            .unwrap_or(Ordering::Equal)
            .then(a.field.coefficients()[0].total_cmp(&b.field.coefficients()[0]))
    });
    let (minimizers, saddles) = points.into_iter().partition(|p| p.delta > -NONDEGENERACY);
    Ok(MinimizerReport {
        minimizers,
        saddles,
        starts: outcomes,
    })
}

fn newton_descent(pot: &ClassicalPotential, mut c: DVector<f64>, tol: f64, start: usize) -> (DVector<f64>, StartOutcome) {
    const MAX_ITER: usize = 500;
    let basis = pot.basis().clone();
    let (mut u, mut g) = pot.value_and_gradient(&c);
    let initial_value = u;
    let mut iterations = 0;
    while g.norm() > tol && iterations < MAX_ITER {
        iterations += 1;
        let field = Field::from_coefficients(&basis, c.clone()).expect("basis");
        let hess = match pot.schrodinger_matrix(&field) {
            Ok(m) => m * 0.5,
            Err(_) => break,
        };
        let n = hess.nrows();
        let scale = hess.amax().max(1.0);
        let mut shift = 0.0;
        let mut step = None;
        for _ in 0..40 {
            let shifted = &hess + DMatrix::identity(n, n) * shift;
            if let Some(chol) = shifted.cholesky() {
                step = Some(-chol.solve(&g));
                break;
            }
            shift = if shift == 0.0 { 1e-8 * scale } else { shift * 10.0 };
        }
        let dir = step.unwrap_or_else(|| -&g / scale);
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let trial = &c + &dir * t;
            let (ut, gt) = pot.value_and_gradient(&trial);
            // Accept descent, or (near a minimum, where U stalls in rounding)
            // a step that shrinks the gradient.
            if ut.is_finite() && (ut < u - 1e-4 * t * dir.dot(&g).abs() || (ut <= u + 1e-14 * u.abs().max(1.0) && gt.norm() < g.norm())) {
                c = trial;
                u = ut;
                g = gt;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let gradient_norm = g.norm();
    (
        c,
        StartOutcome {
            start,
            converged: gradient_norm <= tol,
            iterations,
            gradient_norm,
            initial_value,
            final_value: u,
        },
    )
}

/// Which member of the double-well example family to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExampleVariant {
    /// `U(h) = ¼∫h′² + a∫(h² − x₀²)^{2M₀}`: the mass term is absorbed into
    /// `P`, minimizers are the constants `±x₀` and `min U = 0`.
    Interval,
    /// `P = a(x² − x₀²)^{2M₀}` with the mass term kept, shifted afterwards
    /// by `−min U / ∫g` so that `min U = 0`.
    Shifted,
}

/// Coefficients of `a(x² − x₀²)^{2M₀}`.
fn even_power_well(a: f64, x0: f64, m0: u32) -> Vec<f64> {
    let n = 2 * m0 as usize;
    let mut c = vec![0.0; 2 * n + 1];
    let mut binom = 1.0f64;
    for j in 0..=n {
        // (x²)^j (−x₀²)^{n−j}
        c[2 * j] = a * binom * (-x0 * x0).powi((n - j) as i32);
        binom = binom * (n - j) as f64 / (j + 1) as f64;
    }
    c
}

/// The symmetric double-well family.
///
/// For [`ExampleVariant::Interval`] a warning is logged when
/// `2a x₀² l² > π²`, beyond which nonconstant minimizers are not excluded.
/// [`ExampleVariant::Shifted`] minimizes numerically and rejects parameters
/// for which the only minimizer found is `h = 0`.
pub fn make_example_potential(
    a: f64,
    x0: f64,
    m0: u32,
    variant: ExampleVariant,
    basis: Arc<ModeBasis>,
    cutoff: CutoffFunction,
) -> Result<ClassicalPotential> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::invalid("a", format!("must be positive, got {a}")));
    }
    if !(x0.is_finite() && x0 > 0.0) {
        return Err(Error::invalid("x0", format!("must be positive, got {x0}")));
    }
    if m0 == 0 {
        return Err(Error::invalid("m0", "must be at least 1"));
    }
    let mut coeffs = even_power_well(a, x0, m0);
    match variant {
        ExampleVariant::Interval => {
            let m = basis.mass();
            coeffs[2] -= 0.25 * m * m;
            let l = basis.grid().length();
            if 2.0 * a * x0 * x0 * l * l > std::f64::consts::PI.powi(2) {
                log::warn!(
                    "2 a x0^2 l^2 = {:.4} exceeds pi^2; constant minimizers are not guaranteed",
                    2.0 * a * x0 * x0 * l * l
                );
            }
            ClassicalPotential::new(basis, PolynomialPotential::new(coeffs)?, cutoff)
        }
        ExampleVariant::Shifted => {
            let pot = ClassicalPotential::new(basis.clone(), PolynomialPotential::new(coeffs)?, cutoff)?;
            let integral = pot.cutoff_integral();
            if !(integral > 0.0) {
                return Err(Error::invalid("cutoff", "shifted family needs a cutoff with positive integral"));
            }
            let starts = [x0, 0.5 * x0, -x0, -0.5 * x0]
                .iter()
                .map(|&s| {
                    let g = pot.cutoff().samples().to_vec();
                    let vals: Vec<f64> = g.iter().map(|gj| s * gj.min(1.0).max(0.25)).collect();
                    Field::from_values(&basis, &vals)
                })
                .collect::<Result<Vec<_>>>()?;
            let report = find_minimizers(&pot, &starts, 1e-10)?;
            let best = report
                .minimizers
                .first()
                .ok_or_else(|| Error::Degenerate("no minimizer found for the shifted family".into()))?;
            if best.field.l2_norm() < 1e-6 {
                return Err(Error::Degenerate(format!(
                    "a = {a} is too small: the only minimizer is h = 0"
                )));
            }
            Ok(pot.with_constant_shift(-best.value / integral))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Boundary, Grid};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn double_well(n: usize) -> ClassicalPotential {
        let basis = Arc::new(ModeBasis::new(Grid::new(2.0, n, Boundary::Periodic).unwrap(), 1.0).unwrap());
        let g = CutoffFunction::uniform(&basis);
        make_example_potential(1.0, 1.0, 1, ExampleVariant::Interval, basis, g).unwrap()
    }

    #[test]
    fn polynomial_rules() {
        assert!(PolynomialPotential::new(vec![0.0, 1.0]).is_err());
        assert!(PolynomialPotential::new(vec![0.0, 0.0, 0.0, 0.0, -1.0]).is_err());
        let p = PolynomialPotential::new(vec![1.0, 0.0, -2.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(p.degree(), 4);
        assert!(p.is_even());
        assert_eq!(p.value(2.0), 9.0);
        assert_eq!(p.derivative(2.0), 24.0);
        assert_eq!(p.second_derivative(2.0), 44.0);
        assert!(PolynomialPotential::new(vec![]).unwrap().is_zero());
    }

    #[test]
    fn double_well_values() {
        let pot = double_well(16);
        let b = pot.basis().clone();
        assert_relative_eq!(pot.value(&Field::zero(&b)).unwrap(), 2.0, epsilon = 1e-12);
        assert!(pot.value(&Field::constant(&b, 1.0)).unwrap().abs() < 1e-12);
        assert!(pot.value(&Field::constant(&b, -1.0)).unwrap().abs() < 1e-12);
        assert!(pot.gradient(&Field::constant(&b, 1.0)).unwrap().l2_norm() < 1e-8);
        assert_relative_eq!(
            pot.hessian_smallest_eigenvalue(&Field::constant(&b, 1.0)).unwrap(),
            16.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn free_field_value_is_quarter_omega_squared() {
        let basis = Arc::new(ModeBasis::new(Grid::new(2.0 * PI, 16, Boundary::Periodic).unwrap(), 1.0).unwrap());
        let pot = ClassicalPotential::free(basis.clone());
        let e1 = Field::mode(&basis, 1).unwrap();
        assert_relative_eq!(pot.value(&e1).unwrap(), 0.5, epsilon = 1e-14);
        assert_eq!(pot.hessian_smallest_eigenvalue(&e1).unwrap(), 1.0);
        assert_eq!(pot.gradient(&Field::zero(&basis)).unwrap().l2_norm(), 0.0);
    }

    #[test]
    fn double_well_minimizers() {
        let pot = double_well(16);
        let b = pot.basis().clone();
        let starts = vec![Field::constant(&b, 0.5), Field::constant(&b, -0.5)];
        let report = find_minimizers(&pot, &starts, 1e-10).unwrap();
        assert_eq!(report.minimizers.len(), 2);
        for p in &report.minimizers {
            let v = p.field.values();
            assert!(v.iter().all(|x| (x.abs() - 1.0).abs() < 1e-8));
            assert!(p.nondegenerate);
            assert!(p.gradient_norm <= 1e-10);
        }
        assert!(report.minimizers[0].field.coefficients()[0] < 0.0);
    }

    #[test]
    fn convex_single_well_has_unique_minimizer() {
        let basis = Arc::new(ModeBasis::new(Grid::new(1.0, 12, Boundary::Dirichlet).unwrap(), 1.0).unwrap());
        let pot = ClassicalPotential::new(
            basis.clone(),
            PolynomialPotential::new(vec![0.0, 0.0, 0.0, 0.0, 1.0]).unwrap(),
            CutoffFunction::uniform(&basis),
        )
        .unwrap();
        let starts = vec![
            Field::from_fn(&basis, |x| 2.0 * (PI * x).cos()),
            Field::from_fn(&basis, |x| -1.0 + x),
        ];
        let report = find_minimizers(&pot, &starts, 1e-10).unwrap();
        assert_eq!(report.minimizers.len(), 1);
        assert!(report.minimizers[0].field.l2_norm() < 1e-8);
        for s in &report.starts {
            assert!(s.final_value <= s.initial_value);
        }
    }

    #[test]
    fn shifted_family_has_two_positive_minimizers() {
        let basis = Arc::new(ModeBasis::new(Grid::new(4.0, 24, Boundary::Dirichlet).unwrap(), 1.0).unwrap());
        let g = CutoffFunction::from_fn(&basis, |x| (1.0 - (x / 1.5).powi(2)).max(0.0)).unwrap();
        let pot = make_example_potential(20.0, 1.0, 1, ExampleVariant::Shifted, basis.clone(), g).unwrap();
        let starts = vec![Field::constant(&basis, 0.8), Field::constant(&basis, -0.8)];
        let report = find_minimizers(&pot, &starts, 1e-9).unwrap();
        assert_eq!(report.minimizers.len(), 2);
        assert!(report.min_value().unwrap().abs() < 1e-8);
        let top = report.minimizers.iter().find(|p| p.field.coefficients()[0] > 0.0).unwrap();
        assert!(top.field.values().iter().all(|&x| x > 0.0));
        assert!(top.nondegenerate);
    }

    #[test]
    fn shifted_family_rejects_tiny_coupling() {
        let basis = Arc::new(ModeBasis::new(Grid::new(2.0, 12, Boundary::Periodic).unwrap(), 3.0).unwrap());
        let g = CutoffFunction::uniform(&basis);
        let err = make_example_potential(0.01, 1.0, 1, ExampleVariant::Shifted, basis, g).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    proptest! {
        #[test]
        fn gradient_matches_finite_differences(
            vals in prop::collection::vec(-1.5f64..1.5, 12),
            dir in prop::collection::vec(-1.0f64..1.0, 12),
        ) {
            let pot = double_well(12);
            let b = pot.basis().clone();
            let h = Field::from_values(&b, &vals).unwrap();
            let d = Field::from_values(&b, &dir).unwrap();
            let eps = 1e-5;
            let up = pot.value(&h.plus(&d.scaled(eps)).unwrap()).unwrap();
            let down = pot.value(&h.minus(&d.scaled(eps)).unwrap()).unwrap();
            let fd = (up - down) / (2.0 * eps);
            let exact = pot.gradient(&h).unwrap().inner(&d);
            prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0));
        }

        #[test]
        fn even_potential_symmetry(vals in prop::collection::vec(-2.0f64..2.0, 10)) {
            let pot = double_well(10);
            let b = pot.basis().clone();
            let h = Field::from_values(&b, &vals).unwrap();
            let neg = h.scaled(-1.0);
            let (u1, u2) = (pot.value(&h).unwrap(), pot.value(&neg).unwrap());
            prop_assert!((u1 - u2).abs() <= 1e-10 * u1.abs().max(1.0));
            let g1 = pot.gradient(&h).unwrap();
            let g2 = pot.gradient(&neg).unwrap();
            prop_assert!(g1.plus(&g2).unwrap().l2_norm() <= 1e-12 * g1.l2_norm().max(1.0));
        }

        #[test]
        fn hessian_symmetric(vals in prop::collection::vec(-2.0f64..2.0, 10)) {
            let pot = double_well(10);
            let h = Field::from_values(pot.basis(), &vals).unwrap();
            let m = pot.schrodinger_matrix(&h).unwrap();
            prop_assert!(linalg::max_asymmetry(&m) <= 1e-12);
        }
    }
}

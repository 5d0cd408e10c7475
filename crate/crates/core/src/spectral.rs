//! Interval grids and exact spectral calculus for `m² − Δ`.
//!
//! Every boundary condition has a closed-form eigenbasis whose node samples
//! are orthonormal under the uniform grid quadrature `Δx · Σ_j`, so the
//! node-to-mode transform is an exact change of basis and any function of
//! `m² − Δ` is a diagonal multiplier on the mode coefficients.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Dirichlet,
    Neumann,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Boundary::Periodic => "periodic",
            Boundary::Dirichlet => "dirichlet",
            Boundary::Neumann => "neumann",
        };
        f.write_str(s)
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "periodic" => Ok(Boundary::Periodic),
            "dirichlet" => Ok(Boundary::Dirichlet),
            "neumann" => Ok(Boundary::Neumann),
            other => Err(Error::invalid(
                "boundary",
                format!("unknown boundary `{other}` (expected periodic, dirichlet or neumann)"),
            )),
        }
    }
}

/// Uniform grid on `[-l/2, l/2]`.
///
/// Periodic grids place nodes at `-l/2 + j·Δx` with `Δx = l/N`; Dirichlet
/// grids drop both walls (`Δx = l/(N+1)`); Neumann grids are cell-centred
/// (`Δx = l/N`, nodes at cell midpoints).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    length: f64,
    num_nodes: usize,
    boundary: Boundary,
}

impl Grid {
    pub fn new(length: f64, num_nodes: usize, boundary: Boundary) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::invalid("length", format!("must be positive, got {length}")));
        }
        if num_nodes < 2 {
            return Err(Error::invalid("num_nodes", format!("need at least 2 nodes, got {num_nodes}")));
        }
        Ok(Grid {
            length,
            num_nodes,
            boundary,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn spacing(&self) -> f64 {
        match self.boundary {
            Boundary::Periodic | Boundary::Neumann => self.length / self.num_nodes as f64,
            Boundary::Dirichlet => self.length / (self.num_nodes + 1) as f64,
        }
    }

    /// Offset of node `j` from the left wall `-l/2`.
    fn offset(&self, j: usize) -> f64 {
        let h = self.spacing();
        match self.boundary {
            Boundary::Periodic => j as f64 * h,
            Boundary::Dirichlet => (j + 1) as f64 * h,
            Boundary::Neumann => (j as f64 + 0.5) * h,
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.num_nodes)
            .map(|j| -0.5 * self.length + self.offset(j))
            .collect()
    }
}

/// Shape of one eigenmode of `m² − Δ`, labelled by its integer wavenumber index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeShape {
    Constant,
    Cosine(usize),
    Sine(usize),
}

/// Eigenmodes of `m² − Δ` on a grid, sampled at the nodes.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    grid: Grid,
    mass: f64,
    shapes: Vec<ModeShape>,
    wavenumbers: Vec<f64>,
    frequencies: Vec<f64>,
    /// Node samples, `num_nodes × num_modes`.
    samples: DMatrix<f64>,
    /// `Δx · samplesᵀ`, the analysis operator.
    analysis: DMatrix<f64>,
}

impl ModeBasis {
    /// Full-resolution basis: one mode per node.
    pub fn new(grid: Grid, mass: f64) -> Result<Self> {
        Self::with_modes(grid, mass, grid.num_nodes())
    }

    /// Basis keeping only the `count` lowest modes.
    pub fn with_modes(grid: Grid, mass: f64, count: usize) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::invalid("mass", format!("must be positive, got {mass}")));
        }
        if count == 0 || count > grid.num_nodes() {
            return Err(Error::invalid(
                "modes",
                format!(
                    "requested {count} modes but a grid of {} nodes holds at most {}",
                    grid.num_nodes(),
                    grid.num_nodes()
                ),
            ));
        }
        let n = grid.num_nodes();
        let l = grid.length();
        let shapes = mode_shapes(grid.boundary(), n, count);
        let wavenumbers: Vec<f64> = shapes
            .iter()
            .map(|s| wavenumber(grid.boundary(), l, *s))
            .collect();
        let frequencies = wavenumbers.iter().map(|xi| (mass * mass + xi * xi).sqrt()).collect();

        let mut samples = DMatrix::zeros(n, count);
        for (k, shape) in shapes.iter().enumerate() {
            let xi = wavenumbers[k];
            for j in 0..n {
                let x = grid.offset(j);
                samples[(j, k)] = match shape {
                    ModeShape::Constant => (1.0 / l).sqrt(),
                    ModeShape::Cosine(q) if is_nyquist(grid.boundary(), n, *q) => {
                        (1.0 / l).sqrt() * (xi * x).cos()
                    }
                    ModeShape::Cosine(_) => (2.0 / l).sqrt() * (xi * x).cos(),
                    ModeShape::Sine(_) => (2.0 / l).sqrt() * (xi * x).sin(),
                };
            }
        }
        let analysis = samples.transpose() * grid.spacing();
        Ok(ModeBasis {
            grid,
            mass,
            shapes,
            wavenumbers,
            frequencies,
            samples,
            analysis,
        })
    }

    /// Same grid and mass, keeping the first `count` modes.
    pub fn truncated(&self, count: usize) -> Result<Self> {
        Self::with_modes(self.grid, self.mass, count)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    pub fn shapes(&self) -> &[ModeShape] {
        &self.shapes
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// `ω_k = (m² + ξ_k²)^{1/2}`, nondecreasing.
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn frequency(&self, k: usize) -> f64 {
        self.frequencies[k]
    }

    /// Node samples of the modes (`num_nodes × len`).
    pub fn samples(&self) -> &DMatrix<f64> {
        &self.samples
    }

    pub fn weight(&self) -> f64 {
        self.grid.spacing()
    }

    /// Index of the first mode with the given shape.
    pub fn index_of(&self, shape: ModeShape) -> Option<usize> {
        self.shapes.iter().position(|s| *s == shape)
    }

    pub fn to_coefficients(&self, values: &DVector<f64>) -> DVector<f64> {
        &self.analysis * values
    }

    pub fn to_values(&self, coefficients: &DVector<f64>) -> DVector<f64> {
        &self.samples * coefficients
    }

    /// Gram matrix of the sampled modes under the grid quadrature.
    pub fn gram(&self) -> DMatrix<f64> {
        &self.analysis * &self.samples
    }

    /// Matrix of the multiplication operator `M_v` in mode coordinates,
    /// `∫ e_k v e_l dx` by grid quadrature.
    pub fn multiplication_matrix(&self, v: &[f64]) -> DMatrix<f64> {
        let mut weighted = self.samples.clone();
        for (j, mut row) in weighted.row_iter_mut().enumerate() {
            row *= v[j];
        }
        let mut m = &self.analysis * weighted;
        symmetrize(&mut m);
        m
    }

    pub fn same_as(&self, other: &ModeBasis) -> bool {
        std::ptr::eq(self, other)
            || (self.grid == other.grid && self.mass == other.mass && self.len() == other.len())
    }
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
}

fn is_nyquist(boundary: Boundary, n: usize, q: usize) -> bool {
    boundary == Boundary::Periodic && n % 2 == 0 && 2 * q == n
}

fn mode_shapes(boundary: Boundary, n: usize, count: usize) -> Vec<ModeShape> {
    let mut shapes = Vec::with_capacity(n);
    match boundary {
        Boundary::Periodic => {
            shapes.push(ModeShape::Constant);
            let mut q = 1;
            while shapes.len() < n {
                shapes.push(ModeShape::Cosine(q));
                if shapes.len() < n && !is_nyquist(boundary, n, q) {
                    shapes.push(ModeShape::Sine(q));
                }
                q += 1;
            }
        }
        Boundary::Dirichlet => shapes.extend((1..=n).map(ModeShape::Sine)),
        Boundary::Neumann => {
            shapes.push(ModeShape::Constant);
            shapes.extend((1..n).map(ModeShape::Cosine));
        }
    }
    shapes.truncate(count);
    shapes
}

fn wavenumber(boundary: Boundary, l: f64, shape: ModeShape) -> f64 {
    let q = match shape {
        ModeShape::Constant => 0,
        ModeShape::Cosine(q) | ModeShape::Sine(q) => q,
    } as f64;
    match boundary {
        Boundary::Periodic => 2.0 * PI * q / l,
        Boundary::Dirichlet | Boundary::Neumann => PI * q / l,
    }
}

/// Real function on the grid, stored by its mode coefficients.
#[derive(Debug, Clone)]
pub struct Field {
    basis: Arc<ModeBasis>,
    coefficients: DVector<f64>,
}

impl Field {
    pub fn zero(basis: &Arc<ModeBasis>) -> Self {
        Field {
            basis: basis.clone(),
            coefficients: DVector::zeros(basis.len()),
        }
    }

    pub fn from_coefficients(basis: &Arc<ModeBasis>, coefficients: DVector<f64>) -> Result<Self> {
        if coefficients.len() != basis.len() {
            return Err(Error::invalid(
                "coefficients",
                format!("expected {} mode coefficients, got {}", basis.len(), coefficients.len()),
            ));
        }
        Ok(Field {
            basis: basis.clone(),
            coefficients,
        })
    }

    pub fn from_values(basis: &Arc<ModeBasis>, values: &[f64]) -> Result<Self> {
        if values.len() != basis.grid().num_nodes() {
            return Err(Error::invalid(
                "values",
                format!("expected {} node values, got {}", basis.grid().num_nodes(), values.len()),
            ));
        }
        let coefficients = basis.to_coefficients(&DVector::from_column_slice(values));
        Ok(Field {
            basis: basis.clone(),
            coefficients,
        })
    }

    pub fn from_fn(basis: &Arc<ModeBasis>, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = basis.grid().nodes().into_iter().map(f).collect();
        Self::from_values(basis, &values).expect("node count matches")
    }

    pub fn constant(basis: &Arc<ModeBasis>, value: f64) -> Self {
        Self::from_fn(basis, |_| value)
    }

    /// Unit-norm eigenmode `e_k`.
    pub fn mode(basis: &Arc<ModeBasis>, k: usize) -> Result<Self> {
        if k >= basis.len() {
            return Err(Error::invalid("mode", format!("index {k} outside basis of {} modes", basis.len())));
        }
        let mut c = DVector::zeros(basis.len());
        c[k] = 1.0;
        Ok(Field {
            basis: basis.clone(),
            coefficients: c,
        })
    }

    pub fn basis(&self) -> &Arc<ModeBasis> {
        &self.basis
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    pub fn into_coefficients(self) -> DVector<f64> {
        self.coefficients
    }

    pub fn values(&self) -> DVector<f64> {
        self.basis.to_values(&self.coefficients)
    }

    pub fn l2_norm(&self) -> f64 {
        self.coefficients.norm()
    }

    pub fn inner(&self, other: &Field) -> f64 {
        self.coefficients.dot(&other.coefficients)
    }

    pub fn scaled(&self, factor: f64) -> Field {
        self.with_coefficients(&self.coefficients * factor)
    }

    pub fn plus(&self, other: &Field) -> Result<Field> {
        self.check_basis(other)?;
        Ok(self.with_coefficients(&self.coefficients + &other.coefficients))
    }

    pub fn minus(&self, other: &Field) -> Result<Field> {
        self.check_basis(other)?;
        Ok(self.with_coefficients(&self.coefficients - &other.coefficients))
    }

    pub fn is_finite(&self) -> bool {
        self.coefficients.iter().all(|c| c.is_finite())
    }

    pub(crate) fn with_coefficients(&self, coefficients: DVector<f64>) -> Field {
        Field {
            basis: self.basis.clone(),
            coefficients,
        }
    }

    pub(crate) fn check_basis(&self, other: &Field) -> Result<()> {
        if self.basis.same_as(&other.basis) {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }
}

impl Serialize for Field {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("Field", 2)?;
        st.serialize_field("coefficients", self.coefficients.as_slice())?;
        st.serialize_field("values", self.values().as_slice())?;
        st.end()
    }
}

/// `g(m² − Δ) h`: multiplies coefficient `c_k` by `f(ω_k²)`.
pub fn apply_spectral_function(f: impl Fn(f64) -> f64, field: &Field) -> Result<Field> {
    let mut out = field.coefficients.clone();
    for (c, w) in out.iter_mut().zip(field.basis.frequencies()) {
        let s = w * w;
        let factor = f(s);
        if !factor.is_finite() {
            return Err(Error::Domain { at: s });
        }
        *c *= factor;
    }
    Ok(field.with_coefficients(out))
}

/// `‖h‖_{H^s} = (Σ_k ω_k^{2s} c_k²)^{1/2}`.
pub fn sobolev_norm(field: &Field, s: f64) -> f64 {
    field
        .coefficients
        .iter()
        .zip(field.basis.frequencies())
        .map(|(c, w)| w.powf(2.0 * s) * c * c)
        .sum::<f64>()
        .sqrt()
}

/// Cauchy semigroup `S_t = exp(−t (m² − Δ)^{1/2})`.
pub fn cauchy_semigroup(field: &Field, t: f64) -> Result<Field> {
    if !(t >= 0.0) {
        return Err(Error::invalid("t", format!("semigroup time must be nonnegative, got {t}")));
    }
    let out = field
        .coefficients
        .iter()
        .zip(field.basis.frequencies())
        .map(|(c, w)| c * (-t * w).exp())
        .collect::<Vec<_>>();
    Ok(field.with_coefficients(DVector::from_vec(out)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::SQRT_2;

    fn basis(boundary: Boundary, l: f64, n: usize, m: f64) -> Arc<ModeBasis> {
        Arc::new(ModeBasis::new(Grid::new(l, n, boundary).unwrap(), m).unwrap())
    }

    fn field_from(basis: &Arc<ModeBasis>, seed_values: &[f64]) -> Field {
        Field::from_values(basis, seed_values).unwrap()
    }

    #[test]
    fn grid_nodes_increasing_inside_interval() {
        for b in [Boundary::Periodic, Boundary::Dirichlet, Boundary::Neumann] {
            let g = Grid::new(3.0, 9, b).unwrap();
            let x = g.nodes();
            assert!(x.windows(2).all(|w| w[1] > w[0]));
            assert!(x[0] >= -1.5 && x[8] <= 1.5);
            assert!(g.spacing() > 0.0);
        }
        assert_eq!(Grid::new(2.0, 4, Boundary::Dirichlet).unwrap().spacing(), 0.4);
        assert!(Grid::new(1.0, 1, Boundary::Periodic).is_err());
        assert!(Grid::new(-1.0, 8, Boundary::Periodic).is_err());
    }

    #[test]
    fn analytic_frequencies() {
        let p = basis(Boundary::Periodic, 2.0 * PI, 16, 1.0);
        assert_relative_eq!(p.frequency(1), SQRT_2, epsilon = 1e-15);
        assert_eq!(p.frequency(0), 1.0);
        let d = basis(Boundary::Dirichlet, PI, 16, 1.0);
        assert_eq!(d.shapes()[0], ModeShape::Sine(1));
        assert_relative_eq!(d.frequency(0), SQRT_2, epsilon = 1e-15);
        let n = basis(Boundary::Neumann, 3.0, 8, 0.7);
        assert_eq!(n.frequency(0), 0.7);
    }

    #[test]
    fn frequencies_nondecreasing_and_above_mass() {
        for b in [Boundary::Periodic, Boundary::Dirichlet, Boundary::Neumann] {
            for n in [2, 7, 16] {
                let basis = basis(b, 1.7, n, 0.3);
                let w = basis.frequencies();
                assert!(w.windows(2).all(|p| p[1] >= p[0]));
                assert!(w.iter().all(|&x| x >= 0.3));
            }
        }
    }

    #[test]
    fn gram_is_identity() {
        for b in [Boundary::Periodic, Boundary::Dirichlet, Boundary::Neumann] {
            for n in [2, 5, 8, 33] {
                let basis = basis(b, 2.3, n, 1.0);
                let g = basis.gram();
                let err = (g - DMatrix::identity(n, n)).amax();
                assert!(err < 1e-10, "{b} n={n}: {err}");
            }
        }
    }

    #[test]
    fn rejects_too_many_modes() {
        let g = Grid::new(1.0, 4, Boundary::Periodic).unwrap();
        assert!(ModeBasis::with_modes(g, 1.0, 5).is_err());
        assert!(ModeBasis::with_modes(g, 1.0, 0).is_err());
        assert!(ModeBasis::with_modes(g, 0.0, 2).is_err());
    }

    #[test]
    fn spectral_function_examples() {
        let b = basis(Boundary::Periodic, 2.0 * PI, 16, 1.0);
        let e1 = Field::mode(&b, 1).unwrap();
        let same = apply_spectral_function(|_| 1.0, &e1).unwrap();
        assert_eq!(same.coefficients(), e1.coefficients());
        let root = apply_spectral_function(f64::sqrt, &e1).unwrap();
        assert_relative_eq!(root.coefficients()[1], SQRT_2, epsilon = 1e-15);
        assert!(apply_spectral_function(|s| 1.0 / (s - 1.0), &e1).is_err());
    }

    #[test]
    fn sobolev_examples() {
        let b = basis(Boundary::Periodic, 2.0 * PI, 16, 1.0);
        let e1 = Field::mode(&b, 1).unwrap();
        assert_relative_eq!(sobolev_norm(&e1, 0.5), 2f64.powf(0.25), epsilon = 1e-14);
        assert_eq!(sobolev_norm(&Field::zero(&b), 1.3), 0.0);
    }

    #[test]
    fn semigroup_examples() {
        let b = basis(Boundary::Periodic, 2.0 * PI, 16, 1.0);
        let e1 = Field::mode(&b, 1).unwrap();
        assert_eq!(cauchy_semigroup(&e1, 0.0).unwrap().coefficients(), e1.coefficients());
        let s1 = cauchy_semigroup(&e1, 1.0).unwrap();
        assert_relative_eq!(s1.coefficients()[1], (-SQRT_2).exp(), epsilon = 1e-15);
        assert!(cauchy_semigroup(&e1, -0.1).is_err());
    }

    #[test]
    fn boundary_parse_names_field() {
        assert_eq!("Dirichlet".parse::<Boundary>().unwrap(), Boundary::Dirichlet);
        let err = "robin".parse::<Boundary>().unwrap_err().to_string();
        assert!(err.contains("boundary"), "{err}");
    }

    fn any_boundary() -> impl Strategy<Value = Boundary> {
        prop_oneof![
            Just(Boundary::Periodic),
            Just(Boundary::Dirichlet),
            Just(Boundary::Neumann)
        ]
    }

    proptest! {
        #[test]
        fn node_mode_round_trip(b in any_boundary(), vals in prop::collection::vec(-5.0f64..5.0, 12)) {
            let basis = basis(b, 2.7, 12, 1.3);
            let f = field_from(&basis, &vals);
            let back = f.values();
            let scale = vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            for (x, y) in back.iter().zip(&vals) {
                prop_assert!((x - y).abs() <= 1e-10 * scale);
            }
        }

        #[test]
        fn l2_norm_matches_quadrature(b in any_boundary(), vals in prop::collection::vec(-5.0f64..5.0, 10)) {
            let basis = basis(b, 1.9, 10, 0.8);
            let f = field_from(&basis, &vals);
            let direct: f64 = vals.iter().map(|v| v * v).sum::<f64>() * basis.weight();
            prop_assert!((sobolev_norm(&f, 0.0).powi(2) - direct).abs() <= 1e-10 * (1.0 + direct));
        }

        #[test]
        fn semigroup_law_and_contraction(
            vals in prop::collection::vec(-3.0f64..3.0, 16),
            t in 0.0f64..2.0,
            s in 0.0f64..2.0,
        ) {
            let basis = basis(Boundary::Periodic, 2.0 * PI, 16, 1.0);
            let h = field_from(&basis, &vals);
            let two_step = cauchy_semigroup(&cauchy_semigroup(&h, s).unwrap(), t).unwrap();
            let one_step = cauchy_semigroup(&h, t + s).unwrap();
            let diff = two_step.minus(&one_step).unwrap().l2_norm();
            prop_assert!(diff <= 1e-10 * h.l2_norm().max(1e-300));
            for order in [0.0, 0.5, 1.0] {
                let st = cauchy_semigroup(&h, t).unwrap();
                prop_assert!(sobolev_norm(&st, order) <= sobolev_norm(&h, order) * (1.0 + 1e-14));
            }
        }

        #[test]
        fn sobolev_norm_monotone_in_order(vals in prop::collection::vec(-3.0f64..3.0, 8), s in 0.0f64..2.0, ds in 0.0f64..1.0) {
            let basis = basis(Boundary::Neumann, 1.0, 8, 1.0);
            let h = field_from(&basis, &vals);
            prop_assert!(sobolev_norm(&h, s) <= sobolev_norm(&h, s + ds) * (1.0 + 1e-14));
        }

        #[test]
        fn spectral_functions_compose(vals in prop::collection::vec(-3.0f64..3.0, 9), p in -1.0f64..1.0, q in -1.0f64..1.0) {
            let basis = basis(Boundary::Dirichlet, 2.0, 9, 1.0);
            let h = field_from(&basis, &vals);
            let fg = apply_spectral_function(|x| x.powf(p), &apply_spectral_function(|x| x.powf(q), &h).unwrap()).unwrap();
            let direct = apply_spectral_function(|x| x.powf(p) * x.powf(q), &h).unwrap();
            let diff = fg.minus(&direct).unwrap().l2_norm();
            prop_assert!(diff <= 1e-10 * (1.0 + direct.l2_norm()));
        }
    }

    #[test]
    fn inverse_pair_is_identity() {
        let b = basis(Boundary::Periodic, 2.0 * PI, 16, 1.0);
        let h = Field::from_fn(&b, |x| (x.sin() + 0.3 * (2.0 * x).cos()).exp());
        let there = apply_spectral_function(|s| s.powf(-0.5), &h).unwrap();
        let back = apply_spectral_function(f64::sqrt, &there).unwrap();
        assert!(back.minus(&h).unwrap().l2_norm() <= 1e-10 * h.l2_norm());
    }
}

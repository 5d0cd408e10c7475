//! The Euclidean action `I_{T,P}(u) = ∫_{−T}^{T}(¼‖∂_t u‖² + U(u(t)))dt` on a
//! uniform time grid, its minimizers with fixed boundary rows, and the
//! instanton equation `∂²_t u + ∂²_x u = m²u + 2P′(u)g`.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::agmon::Path;
use crate::error::{Error, Result};
use crate::potential::ClassicalPotential;
use crate::quadrature;
use crate::spectral::{Boundary, Field, ModeBasis};

/// Field on the uniform space-time grid `[−T, T] × nodes`, stored as one
/// row of mode coefficients per time.
#[derive(Debug, Clone)]
pub struct SpaceTimeField {
    basis: Arc<ModeBasis>,
    half_width: f64,
    rows: Vec<DVector<f64>>,
}

impl SpaceTimeField {
    pub fn new(basis: Arc<ModeBasis>, half_width: f64, rows: Vec<DVector<f64>>) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::invalid("T", format!("must be positive, got {half_width}")));
        }
        if rows.len() < 3 {
            return Err(Error::invalid("time_steps", "need at least three time rows"));
        }
        if rows.iter().any(|r| r.len() != basis.len()) {
            return Err(Error::BasisMismatch);
        }
        Ok(SpaceTimeField {
            basis,
            half_width,
            rows,
        })
    }

    /// Rows interpolated as `h + (k − h)·s(t)` for a profile `s` with
    /// `s(−T) = 0`, `s(T) = 1`.
    pub fn interpolate(h: &Field, k: &Field, half_width: f64, steps: usize, profile: impl Fn(f64) -> f64) -> Result<Self> {
        h.check_basis(k)?;
        let n = steps.max(2) + 1;
        let times = uniform_times(half_width, n);
        let d = k.coefficients() - h.coefficients();
        let mut rows: Vec<DVector<f64>> = times.iter().map(|&t| h.coefficients() + &d * profile(t)).collect();
        rows[0] = h.coefficients().clone();
        rows[n - 1] = k.coefficients().clone();
        Self::new(h.basis().clone(), half_width, rows)
    }

    pub fn basis(&self) -> &Arc<ModeBasis> {
        &self.basis
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn time_step(&self) -> f64 {
        2.0 * self.half_width / (self.rows.len() - 1) as f64
    }

    pub fn times(&self) -> Vec<f64> {
        uniform_times(self.half_width, self.rows.len())
    }

    pub fn rows(&self) -> &[DVector<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> Field {
        Field::from_coefficients(&self.basis, self.rows[i].clone()).expect("row lives on the basis")
    }

    pub fn start(&self) -> Field {
        self.row(0)
    }

    pub fn end(&self) -> Field {
        self.row(self.rows.len() - 1)
    }

    /// Node values, one row per time.
    pub fn values(&self) -> DMatrix<f64> {
        let n = self.basis.grid().num_nodes();
        let mut out = DMatrix::zeros(self.rows.len(), n);
        for (i, r) in self.rows.iter().enumerate() {
            out.set_row(i, &self.basis.to_values(r).transpose());
        }
        out
    }

    /// Spatial mean `l⁻¹∫u(t, x)dx` of every row.
    pub fn space_average(&self) -> Vec<f64> {
        let w = self.basis.weight() / self.basis.grid().length();
        self.rows
            .iter()
            .map(|r| self.basis.to_values(r).sum() * w)
            .collect()
    }

    /// The time trace as a path in field space.
    pub fn as_path(&self) -> Result<Path> {
        Path::from_coefficients(self.basis.clone(), self.times(), self.rows.clone())
    }
}

impl Serialize for SpaceTimeField {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("SpaceTimeField", 3)?;
        st.serialize_field("times", &self.times())?;
        st.serialize_field("nodes", &self.basis.grid().nodes())?;
        let values = self.values();
        let rows: Vec<Vec<f64>> = values.row_iter().map(|r| r.iter().copied().collect()).collect();
        st.serialize_field("values", &rows)?;
        st.end()
    }
}

fn uniform_times(half_width: f64, n: usize) -> Vec<f64> {
    let dt = 2.0 * half_width / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { half_width } else { -half_width + i as f64 * dt })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ActionReport {
    pub action: f64,
    pub kinetic: f64,
    pub potential: f64,
    /// The same action summed as a node-space double integral.
    pub action_node_form: f64,
    /// `pde_residual` of the field.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Kinetic and potential parts: `Σ ¼‖Δu‖²/Δt` and the trapezoid sum of `U`.
fn action_parts(pot: &ClassicalPotential, u: &SpaceTimeField) -> (f64, f64) {
    let dt = u.time_step();
    let n = u.rows.len();
    let kinetic: f64 = u
        .rows
        .windows(2)
        .map(|w| 0.25 * (&w[1] - &w[0]).norm_squared() / dt)
        .sum();
    let potential: f64 = u
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let w = if i == 0 || i == n - 1 { 0.5 * dt } else { dt };
            w * pot.value_of_coefficients(r)
        })
        .sum();
    (kinetic, potential)
}

/// `¼∬(|∂_t u|² + |∂_x u|² + m²u²) + ∬P(u)g` with node-space sums; the
/// spatial quadratic form uses the node matrix of `m² − Δ`.
fn action_node_form(pot: &ClassicalPotential, u: &SpaceTimeField) -> f64 {
    let basis = &u.basis;
    let dx = basis.weight();
    let dt = u.time_step();
    let samples = basis.samples();
    let w2 = DVector::from_iterator(basis.len(), basis.frequencies().iter().map(|w| w * w));
    let mut scaled = samples.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= w2[k];
    }
    let laplace = &scaled * samples.transpose() * dx;
    let values = u.values();
    let g = pot.cutoff().samples();
    let p = pot.polynomial();
    let n = values.nrows();
    let mut total = 0.0;
    for i in 0..n {
        let row = values.row(i).transpose();
        let spatial = 0.25 * dx * row.dot(&(&laplace * &row));
        let interaction: f64 = row.iter().zip(g).map(|(v, gj)| p.value(*v) * gj).sum::<f64>() * dx;
        let w = if i == 0 || i == n - 1 { 0.5 * dt } else { dt };
        total += w * (spatial + interaction);
        if i + 1 < n {
            let d = values.row(i + 1) - values.row(i);
            total += 0.25 * dx * d.norm_squared() / dt;
        }
    }
    total
}

pub fn action(pot: &ClassicalPotential, u: &SpaceTimeField) -> Result<ActionReport> {
    if !pot.basis().same_as(&u.basis) {
        return Err(Error::BasisMismatch);
    }
    let (kinetic, potential) = action_parts(pot, u);
    Ok(ActionReport {
        action: kinetic + potential,
        kinetic,
        potential,
        action_node_form: action_node_form(pot, u),
        residual: pde_residual(pot, u)?,
        iterations: 0,
        converged: true,
    })
}

/// Discrete L² norm of `∂²_t u + ∂²_x u − m²u − 2P′(u)g` over interior time
/// rows, using three-point stencils in both `t` and `x` on node values.
pub fn pde_residual(pot: &ClassicalPotential, u: &SpaceTimeField) -> Result<f64> {
    if !pot.basis().same_as(&u.basis) {
        return Err(Error::BasisMismatch);
    }
    let values = u.values();
    let grid = u.basis.grid();
    let nx = grid.num_nodes();
    let dx = grid.spacing();
    let dt = u.time_step();
    let m2 = u.basis.mass().powi(2);
    let g = pot.cutoff().samples();
    let p = pot.polynomial();
    let mut sum = 0.0;
    for i in 1..values.nrows() - 1 {
        for j in 0..nx {
            let v = values[(i, j)];
            let (left, right) = match grid.boundary() {
                Boundary::Periodic => (values[(i, (j + nx - 1) % nx)], values[(i, (j + 1) % nx)]),
                Boundary::Dirichlet => (
                    if j == 0 { 0.0 } else { values[(i, j - 1)] },
                    if j == nx - 1 { 0.0 } else { values[(i, j + 1)] },
                ),
                Boundary::Neumann => (
                    values[(i, j.saturating_sub(1))],
                    values[(i, (j + 1).min(nx - 1))],
                ),
            };
            let utt = (values[(i + 1, j)] - 2.0 * v + values[(i - 1, j)]) / (dt * dt);
            let uxx = (left - 2.0 * v + right) / (dx * dx);
            let r = utt + uxx - m2 * v - 2.0 * p.derivative(v) * g[j];
            sum += r * r;
        }
    }
    Ok((sum * dt * dx).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WarmStart {
    /// `h + (k − h)(t + T)/(2T)`.
    Linear,
    /// `h + (k − h)(1 + tanh(rate·t))/2`.
    Tanh { rate: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct InstantonOptions {
    /// Target time step; the grid uses `round(2T/dt)` cells.
    pub dt: f64,
    /// Newton stops when the discrete Euler–Lagrange residual is below this.
    pub tol: f64,
    pub max_iterations: usize,
    pub warm_start: WarmStart,
}

impl Default for InstantonOptions {
    fn default() -> Self {
        InstantonOptions {
            dt: 0.05,
            tol: 1e-9,
            max_iterations: 200,
            warm_start: WarmStart::Linear,
        }
    }
}

/// Mode-space residual `u_tt − 2∇U(u)` on interior rows, from the action
/// gradient, and its discrete L² norm.
fn euler_lagrange(pot: &ClassicalPotential, rows: &[DVector<f64>], dt: f64) -> (Vec<DVector<f64>>, f64) {
    let n = rows.len();
    let grads: Vec<DVector<f64>> = (1..n - 1)
        .into_par_iter()
        .map(|i| {
            let lap = (&rows[i + 1] - &rows[i] * 2.0 + &rows[i - 1]) * (0.5 / dt);
            pot.gradient_of_coefficients(&rows[i]) * dt - lap
        })
        .collect();
    let norm = grads.iter().map(|g| g.norm_squared()).sum::<f64>() * 4.0 / dt;
    (grads, norm.sqrt())
}

/// Solves the block-tridiagonal system with diagonal blocks `diag[i] + μ`
/// and off-diagonal blocks `off·I`; `None` if a pivot block is not positive.
fn block_tridiagonal_solve(diag: &[DMatrix<f64>], off: f64, shift: f64, rhs: &[DVector<f64>]) -> Option<Vec<DVector<f64>>> {
    let n = diag.len();
    let k = diag[0].nrows();
    let eye = DMatrix::<f64>::identity(k, k);
    let mut factors: Vec<Cholesky<f64, Dyn>> = Vec::with_capacity(n);
    let mut y: Vec<DVector<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut block = &diag[i] + &eye * shift;
        let mut r = rhs[i].clone();
        if i > 0 {
            // Eliminate the sub-diagonal: D_i − off² D_{i−1}⁻¹.
            let prev: &Cholesky<f64, Dyn> = &factors[i - 1];
            block -= prev.inverse() * (off * off);
            r -= prev.solve(&y[i - 1]) * off;
        }
        let chol = Cholesky::new(block)?;
        factors.push(chol);
        y.push(r);
    }
    let mut x = vec![DVector::zeros(k); n];
    for i in (0..n).rev() {
        let mut r = y[i].clone();
        if i + 1 < n {
            r -= &x[i + 1] * off;
        }
        x[i] = factors[i].solve(&r);
    }
    Some(x)
}

/// Damped Newton on the discrete action with boundary rows `h`, `k`.
pub fn minimize_action(
    pot: &ClassicalPotential,
    h: &Field,
    k: &Field,
    half_width: f64,
    opts: &InstantonOptions,
) -> Result<(SpaceTimeField, ActionReport)> {
    h.check_basis(k)?;
    if !pot.basis().same_as(h.basis()) {
        return Err(Error::BasisMismatch);
    }
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(Error::invalid("T", format!("must be positive, got {half_width}")));
    }
    if !(opts.dt > 0.0) {
        return Err(Error::invalid("dt", format!("must be positive, got {}", opts.dt)));
    }
    let cells = ((2.0 * half_width / opts.dt).round() as usize).max(2);
    let start = match opts.warm_start {
        WarmStart::Linear => SpaceTimeField::interpolate(h, k, half_width, cells, |t| (t + half_width) / (2.0 * half_width))?,
        WarmStart::Tanh { rate } => {
            SpaceTimeField::interpolate(h, k, half_width, cells, |t| 0.5 * (1.0 + (rate * t).tanh()))?
        }
    };
    let dt = start.time_step();
    let mut rows = start.rows;
    let n = rows.len();
    let basis = pot.basis().clone();
    let kdim = basis.len();

    let mut action_value = {
        let u = SpaceTimeField::new(basis.clone(), half_width, rows.clone())?;
        let (a, b) = action_parts(pot, &u);
        a + b
    };
    let (mut grads, mut res) = euler_lagrange(pot, &rows, dt);
    let mut iterations = 0;
    let mut shift = 0.0f64;
    while res > opts.tol && iterations < opts.max_iterations {
        iterations += 1;
        let diag: Vec<DMatrix<f64>> = (1..n - 1)
            .into_par_iter()
            .map(|i| {
                let f = Field::from_coefficients(&basis, rows[i].clone()).expect("basis");
                let mut b = pot.schrodinger_matrix(&f).expect("basis") * (0.5 * dt);
                for q in 0..kdim {
                    b[(q, q)] += 1.0 / dt;
                }
                b
            })
            .collect();
        let rhs: Vec<DVector<f64>> = grads.iter().map(|g| -g).collect();
        let scale = diag.iter().map(|b| b.amax()).fold(1.0, f64::max);
        let mut step = None;
        let mut mu = shift;
        for _ in 0..60 {
            if let Some(s) = block_tridiagonal_solve(&diag, -0.5 / dt, mu, &rhs) {
                step = Some(s);
                break;
            }
            mu = if mu == 0.0 { 1e-8 * scale } else { mu * 4.0 };
        }
        let Some(step) = step else {
            return Err(Error::NoConvergence {
                what: "instanton Newton (no positive shift found)",
                iterations,
                residual: res,
            });
        };
        let slope: f64 = step.iter().zip(&grads).map(|(s, g)| s.dot(g)).sum();
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let mut trial = rows.clone();
            for i in 1..n - 1 {
                trial[i] += &step[i - 1] * alpha;
            }
            let u = SpaceTimeField::new(basis.clone(), half_width, trial.clone())?;
            let (a, b) = action_parts(pot, &u);
            let value = a + b;
            let (tg, tres) = euler_lagrange(pot, &trial, dt);
            let sufficient = value <= action_value + 1e-4 * alpha * slope.min(0.0);
            let stalled = value <= action_value + 1e-13 * action_value.abs().max(1.0) && tres < res;
            if value.is_finite() && (sufficient || stalled) {
                rows = trial;
                action_value = value;
                grads = tg;
                res = tres;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            if mu > 1e6 * scale {
                break;
            }
            shift = if mu == 0.0 { 1e-6 * scale } else { mu * 10.0 };
            continue;
        }
        shift = if alpha == 1.0 { 0.0 } else { mu };
    }

    let field = SpaceTimeField::new(basis, half_width, rows)?;
    let mut report = action(pot, &field)?;
    report.iterations = iterations;
    report.converged = res <= opts.tol;
    if !report.converged {
        log::warn!("minimize_action: Newton stopped at residual {res:e} after {iterations} iterations");
    }
    Ok((field, report))
}

/// `x₀ tanh(2√a x₀ t)`.
pub fn tanh_instanton(a: f64, x0: f64, times: &[f64]) -> Result<Vec<f64>> {
    if !(a > 0.0) {
        return Err(Error::invalid("a", format!("must be positive, got {a}")));
    }
    if !(x0 > 0.0) {
        return Err(Error::invalid("x0", format!("must be positive, got {x0}")));
    }
    let rate = 2.0 * a.sqrt() * x0;
    Ok(times.iter().map(|t| x0 * (rate * t).tanh()).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub half_width: f64,
    pub action: f64,
    pub residual: f64,
    pub converged: bool,
    pub error: Option<String>,
}

/// `𝓘(T)` for each `T` at a fixed time step; solves run concurrently.
pub fn scan_t(
    pot: &ClassicalPotential,
    h: &Field,
    k: &Field,
    t_list: &[f64],
    opts: &InstantonOptions,
) -> Result<Vec<ScanRow>> {
    if t_list.len() < 2 {
        return Err(Error::invalid("T_list", "need at least two values"));
    }
    if !t_list.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::invalid("T_list", "values must be strictly increasing"));
    }
    Ok(t_list
        .par_iter()
        .map(|&t| match minimize_action(pot, h, k, t, opts) {
            Ok((_, r)) => ScanRow {
                half_width: t,
                action: r.action,
                residual: r.residual,
                converged: r.converged,
                error: None,
            },
            Err(e) => ScanRow {
                half_width: t,
                action: f64::NAN,
                residual: f64::NAN,
                converged: false,
                error: Some(e.to_string()),
            },
        })
        .collect())
}

/// Time change of a geodesic into an instanton candidate on `[−T, T]`.
///
/// Along each segment `dt = ‖d‖dθ / (2√U(c + θd))`; the origin `t = 0` sits
/// at the Agmon-length midpoint. Rows at `±T` are the path's endpoints.
pub fn geodesic_to_instanton(
    pot: &ClassicalPotential,
    geodesic: &Path,
    half_width: f64,
    steps: usize,
) -> Result<SpaceTimeField> {
    if !pot.basis().same_as(geodesic.basis()) {
        return Err(Error::BasisMismatch);
    }
    let knots = geodesic.knots();
    let m = knots.len() - 1;
    let umax = knots
        .iter()
        .map(|c| pot.value_of_coefficients(c))
        .fold(0.0, f64::max);
    if !(umax > 0.0) {
        return Err(Error::Degenerate("geodesic lies in the zero set".into()));
    }
    for (j, c) in knots.iter().enumerate().take(m).skip(1) {
        if pot.value_of_coefficients(c) <= 1e-14 * umax {
            return Err(Error::Degenerate(format!("geodesic touches the zero set at interior knot {j}")));
        }
    }
    let seg = |i: usize, theta: f64| &knots[i] + (&knots[i + 1] - &knots[i]) * theta;
    let speed = |i: usize| (&knots[i + 1] - &knots[i]).norm();
    let sqrt_u = |i: usize, theta: f64| pot.value_of_coefficients(&seg(i, theta)).max(0.0).sqrt();
    let time_between = |i: usize, a: f64, b: f64| -> Result<f64> {
        let d = speed(i);
        if d == 0.0 || a == b {
            return Ok(0.0);
        }
        // Near a well the integrand grows like 1/(1 − θ); stop just short of it.
        let b = b.min(1.0 - 1e-13);
        if a >= b {
            return Ok(0.0);
        }
        quadrature::integrate(|th| d / (2.0 * sqrt_u(i, th).max(1e-300)), a, b, 1e-10, 1e-9)
    };
    let length_between = |i: usize, a: f64, b: f64| -> Result<f64> {
        let d = speed(i);
        quadrature::integrate(|th| d * sqrt_u(i, th), a, b, 1e-14, 1e-12)
    };

    // Locate the Agmon-length midpoint.
    let lengths: Vec<f64> = (0..m).map(|i| length_between(i, 0.0, 1.0)).collect::<Result<_>>()?;
    let total: f64 = lengths.iter().sum();
    let mut acc = 0.0;
    let mut origin = (m - 1, 1.0);
    for (i, l) in lengths.iter().enumerate() {
        if acc + l >= 0.5 * total {
            let target = 0.5 * total - acc;
            let th = bisect(|th| length_between(i, 0.0, th).map(|v| v - target), 0.0, 1.0)?;
            origin = (i, th);
            break;
        }
        acc += l;
    }

    let times = uniform_times(half_width, steps.max(2) + 1);
    let n = times.len();
    let mut rows = Vec::with_capacity(n);
    for (idx, &t) in times.iter().enumerate() {
        if idx == 0 {
            rows.push(knots[0].clone());
            continue;
        }
        if idx == n - 1 {
            rows.push(knots[m].clone());
            continue;
        }
        rows.push(locate(t, origin, m, &time_between, &seg, &knots[0], &knots[m])?);
    }
    SpaceTimeField::new(pot.basis().clone(), half_width, rows)
}

/// Field reached at signed time `t` from `origin = (segment, θ)`.
fn locate(
    t: f64,
    origin: (usize, f64),
    m: usize,
    time_between: &impl Fn(usize, f64, f64) -> Result<f64>,
    seg: &impl Fn(usize, f64) -> DVector<f64>,
    first: &DVector<f64>,
    last: &DVector<f64>,
) -> Result<DVector<f64>> {
    let (mut i, th0) = origin;
    if t >= 0.0 {
        let mut remaining = t;
        let mut from = th0;
        loop {
            let full = if i == m - 1 { f64::INFINITY } else { time_between(i, from, 1.0)? };
            if remaining <= full {
                let f = from;
                let th = bisect(|th| time_between(i, f, th).map(|v| v - remaining), from, 1.0)?;
                return Ok(seg(i, th));
            }
            remaining -= full;
            if i + 1 >= m {
                return Ok(last.clone());
            }
            i += 1;
            from = 0.0;
        }
    } else {
        let mut remaining = -t;
        let mut to = th0;
        loop {
            let full = if i == 0 { f64::INFINITY } else { time_between(i, 0.0, to)? };
            if remaining <= full {
                let hi = to;
                let th = bisect(|th| time_between(i, th, hi).map(|v| remaining - v), 0.0, to)?;
                return Ok(seg(i, th));
            }
            remaining -= full;
            if i == 0 {
                return Ok(first.clone());
            }
            i -= 1;
            to = 1.0;
        }
    }
}

/// Root of an increasing function on `[a, b]` by bisection.
fn bisect(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if f(mid)? < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

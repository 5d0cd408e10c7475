//! Limited-memory BFGS with Armijo backtracking.

use std::collections::VecDeque;

use nalgebra::DVector;

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop when `‖∇f‖ ≤ gradient_tol`.
    pub gradient_tol: f64,
    /// Stop when the relative decrease of `f` over one step falls below this.
    pub value_tol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            memory: 12,
            max_iterations: 500,
            gradient_tol: 1e-9,
            value_tol: 1e-13,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome {
    pub x: DVector<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f`, which returns the value and gradient at a point.
///
/// Every accepted step strictly decreases `f`, so the result is never worse
/// than the start.
pub fn lbfgs(
    mut f: impl FnMut(&DVector<f64>) -> (f64, DVector<f64>),
    x0: DVector<f64>,
    opts: &LbfgsOptions,
) -> LbfgsOutcome {
    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    let mut history: VecDeque<(DVector<f64>, DVector<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iterations {
        let gnorm = g.norm();
        if gnorm <= opts.gradient_tol {
            converged = true;
            break;
        }
        iterations += 1;

        // Two-loop recursion.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * s.dot(&q);
            q.axpy(-a, y, 1.0);
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.back() {
            q *= s.dot(y) / y.dot(y);
        } else {
            q *= 1.0 / gnorm.max(1.0);
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * y.dot(&q);
            q.axpy(a - b, s, 1.0);
        }
        let mut dir = -q;
        let mut slope = g.dot(&dir);
        if !(slope < 0.0) {
            history.clear();
            dir = -g.clone() / gnorm.max(1.0);
            slope = g.dot(&dir);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &x + &dir * step;
            let (ft, gt) = f(&trial);
            if ft.is_finite() && ft <= fx + 1e-4 * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gn)) = accepted else {
            if history.is_empty() {
                break;
            }
            history.clear();
            continue;
        };

        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        let decrease = fx - fnew;
        x = xn;
        g = gn;
        fx = fnew;
        if decrease <= opts.value_tol * fx.abs().max(1e-300) {
            converged = true;
            break;
        }
    }

    LbfgsOutcome {
        gradient_norm: g.norm(),
        x,
        value: fx,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &DVector<f64>| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = DVector::from_vec(vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ]);
            (v, g)
        };
        let out = lbfgs(
            f,
            DVector::from_vec(vec![-1.2, 1.0]),
            &LbfgsOptions {
                max_iterations: 1000,
                value_tol: 0.0,
                ..Default::default()
            },
        );
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6);
    }
}

//! Reference computations that do not share code paths with `pphi2-core`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Coefficients (ascending powers) of `:x^n:` for a Gaussian of variance `s2`,
/// from the recurrence `He_{n+1}(y) = y He_n(y) − n He_{n−1}(y)` and
/// `:x^n: = s^n He_n(x/s)`.
pub fn wick_polynomial(n: usize, s2: f64) -> Vec<f64> {
    let mut prev = vec![1.0];
    if n == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 1.0];
    for k in 1..n {
        let mut next = vec![0.0; k + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= k as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    // He_n(x/s)·s^n = Σ h_i x^i s^{n−i}
    let s = s2.sqrt();
    cur.iter().enumerate().map(|(i, h)| h * s.powi((n - i) as i32)).collect()
}

pub fn eval_poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

/// Gauss–Hermite rule for the standard normal density (Golub–Welsch).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// `E[f(X)]` for `X ~ N(0, s2)`.
pub fn gaussian_mean(f: impl Fn(f64) -> f64, s2: f64, points: usize) -> f64 {
    let (x, w) = gauss_hermite(points);
    let s = s2.sqrt();
    x.iter().zip(&w).map(|(xi, wi)| wi * f(s * xi)).sum()
}

/// `K₀(z) = ∫₀^∞ e^{−z cosh u} du` by the trapezoid rule, which converges
/// geometrically for this analytic, doubly exponentially decaying integrand.
pub fn bessel_k0(z: f64) -> f64 {
    assert!(z > 0.0);
    let h = 0.01;
    let mut sum = 0.5 * (-z).exp();
    let mut k = 1;
    loop {
        let t = (-z * (k as f64 * h).cosh()).exp();
        sum += t;
        if t < 1e-300 || (t < 1e-20 * sum && k > 10) {
            break;
        }
        k += 1;
    }
    sum * h
}

/// `(1/2π) e^{m²/n} K₀(m²/n)`, from `∫₀^∞ e^{−pt}/√(t(t+b)) dt = e^{pb/2} K₀(pb/2)`.
pub fn smearing_oracle(n: u32, m: f64) -> f64 {
    let z = m * m / n as f64;
    z.exp() * bessel_k0(z) / (2.0 * std::f64::consts::PI)
}

/// Ground energy of `Ω a†a + u:(a + a†)²:/Ω` from the Bogoliubov rotation:
/// zero-point shift `½(Ω_v − Ω)` minus the removed self-contraction `u/Ω`,
/// with `Ω_v = √(Ω² + 4u)`.
pub fn bogoliubov_one_mode(omega: f64, u: f64) -> f64 {
    0.5 * ((omega * omega + 4.0 * u).sqrt() - omega) - u / omega
}

/// Settings for [`one_mode_schrodinger`].
#[derive(Debug, Clone, Copy)]
pub struct SchrodingerGrid {
    pub half_width: f64,
    pub points: usize,
}

/// Lowest `count` eigenvalues of the one-mode reduction
/// `−d²/dφ² + ¼m²φ² − m/2 + Σ_n a_n λ^{1−n/2} l^{1−n/2} :φ^n:_{1/m}`
/// (constant mode `1/√l`, uniform cutoff) by second-order finite differences,
/// Sturm-sequence bisection and one Richardson step in the grid spacing.
pub fn one_mode_schrodinger(coeffs: &[f64], lambda: f64, l: f64, m: f64, count: usize, grid: SchrodingerGrid) -> Vec<f64> {
    let mut w = vec![0.0; coeffs.len().max(3)];
    w[2] += 0.25 * m * m;
    w[0] -= 0.5 * m;
    for (n, &a) in coeffs.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        let scale = a * lambda.powf(1.0 - 0.5 * n as f64) * l.powf(1.0 - 0.5 * n as f64);
        for (i, c) in wick_polynomial(n, 1.0 / m).iter().enumerate() {
            w[i] += scale * c;
        }
    }
    let coarse = fd_eigenvalues(&w, count, grid.half_width, grid.points);
    let fine = fd_eigenvalues(&w, count, grid.half_width, 2 * grid.points + 1);
    coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect()
}

fn fd_eigenvalues(w: &[f64], count: usize, half_width: f64, points: usize) -> Vec<f64> {
    let h = 2.0 * half_width / (points + 1) as f64;
    let diag: Vec<f64> = (1..=points)
        .map(|i| 2.0 / (h * h) + eval_poly(w, -half_width + i as f64 * h))
        .collect();
    let off = -1.0 / (h * h);
    let lo = diag.iter().copied().fold(f64::INFINITY, f64::min) - 4.0 / (h * h);
    let hi = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 4.0 / (h * h);
    // Number of eigenvalues below x.
    let below = |x: f64| {
        let mut q = diag[0] - x;
        let mut n = usize::from(q < 0.0);
        for d in &diag[1..] {
            let denom = if q == 0.0 { 1e-300 } else { q };
            q = d - x - off * off / denom;
            n += usize::from(q < 0.0);
        }
        n
    };
    (0..count)
        .map(|k| {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if below(mid) > k {
                    b = mid;
                } else {
                    a = mid;
                }
                if b - a <= 1e-15 * b.abs().max(1.0) {
                    break;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// Central-difference gradient of `f` at `x`.
pub fn central_gradient(f: impl Fn(&DVector<f64>) -> f64, x: &DVector<f64>, step: f64) -> DVector<f64> {
    DVector::from_iterator(
        x.len(),
        (0..x.len()).map(|i| {
            let mut p = x.clone();
            let mut q = x.clone();
            p[i] += step;
            q[i] -= step;
            (f(&p) - f(&q)) / (2.0 * step)
        }),
    )
}

/// Action `∫(¼|u′|² + a(u² − x₀²)²) dt` of the kink `x₀ tanh(2√a x₀ t)` over
/// `[−T, T]` on a uniform grid, for a spatially constant field on length `l`.
pub fn tanh_kink_action(a: f64, x0: f64, l: f64, half_width: f64, steps: usize) -> f64 {
    let dt = 2.0 * half_width / steps as f64;
    let k = 2.0 * a.sqrt() * x0;
    let u = |t: f64| x0 * (k * t).tanh();
    let du = |t: f64| x0 * k / (k * t).cosh().powi(2);
    let f = |t: f64| l * (0.25 * du(t).powi(2) + a * (u(t).powi(2) - x0 * x0).powi(2));
    // Simpson's rule.
    let mut s = f(-half_width) + f(half_width);
    for i in 1..steps {
        let t = -half_width + i as f64 * dt;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(t);
    }
    s * dt / 3.0
}

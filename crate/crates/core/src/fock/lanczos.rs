//! Lowest eigenpairs of sparse symmetric matrices by Lanczos iteration with
//! full reorthogonalization.
//!
//! Eigenpairs are found one at a time: each run works in the orthogonal
//! complement of the pairs locked so far and is restarted from its best Ritz
//! vector until the residual certificate holds.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::CsrMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::hamiltonian::{spmv, FockHamiltonian};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Residual target relative to the `‖H‖` estimate.
    pub tol: f64,
    /// Largest Krylov space built before a restart.
    pub max_krylov: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            tol: 1e-10,
            max_krylov: 200,
            max_restarts: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    /// `E₂ − E₁` when at least two pairs were requested.
    pub gap: Option<f64>,
    /// `‖Hψ_i − E_iψ_i‖` for each pair.
    pub residuals: Vec<f64>,
    pub norm_estimate: f64,
    pub matvecs: usize,
    pub restarts: usize,
    #[serde(skip)]
    pub eigenvectors: Vec<DVector<f64>>,
}

/// Lowest `count` eigenpairs of a symmetric CSR matrix.
pub fn lowest_eigenpairs(m: &CsrMatrix<f64>, count: usize, opts: &LanczosOptions) -> Result<SpectrumResult> {
    let n = m.nrows();
    if count == 0 || count > n {
        return Err(Error::invalid("count", format!("need 1..={n}, got {count}")));
    }
    let norm = row_sum_norm(m).max(f64::MIN_POSITIVE);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<DVector<f64>> = Vec::with_capacity(count);
    let mut eigenvalues = Vec::with_capacity(count);
    let mut residuals = Vec::with_capacity(count);
    let mut matvecs = 0;
    let mut restarts = 0;

    for _ in 0..count {
        let mut start = DVector::from_fn(n, |_, _| rng.gen::<f64>() - 0.5);
        let mut best = None;
        for attempt in 0..=opts.max_restarts {
            let run = lanczos_run(m, &start, &locked, opts.max_krylov, &mut matvecs)?;
            let done = run.residual <= opts.tol * norm;
            start = run.vector.clone();
            best = Some(run);
            if done {
                break;
            }
            if attempt == opts.max_restarts {
                let r = best.as_ref().map_or(f64::NAN, |b| b.residual);
                return Err(Error::NoConvergence {
                    what: "Lanczos",
                    iterations: opts.max_restarts,
                    residual: r / norm,
                });
            }
            restarts += 1;
        }
        let run = best.expect("at least one run");
        eigenvalues.push(run.value);
        residuals.push(run.residual);
        locked.push(run.vector);
    }

    // Locking finds each pair in the complement of the previous ones, which
    // yields the lowest values but not necessarily in order.
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&a, &b| eigenvalues[a].total_cmp(&eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eigenvalues[i]).collect();
    let residuals = order.iter().map(|&i| residuals[i]).collect();
    let eigenvectors = order.iter().map(|&i| locked[i].clone()).collect();
    let gap = (count >= 2).then(|| eigenvalues[1] - eigenvalues[0]);
    Ok(SpectrumResult {
        eigenvalues,
        gap,
        residuals,
        norm_estimate: norm,
        matvecs,
        restarts,
        eigenvectors,
    })
}

/// Lowest `count` eigenvalues of `H`, with the start vector drawn from `seed`.
///
/// For even `P` the two parity sectors are solved separately: tunneling
/// doublets can be degenerate below the Lanczos residual target, and a
/// full-space run then cannot separate them.
pub fn lowest_eigenvalues(h: &FockHamiltonian, count: usize, seed: u64) -> Result<SpectrumResult> {
    let opts = LanczosOptions {
        seed,
        ..LanczosOptions::default()
    };
    if !h.is_even() {
        return lowest_eigenpairs(h.matrix(), count, &opts);
    }
    if count == 0 || count > h.dim() {
        return Err(Error::invalid("count", format!("need 1..={}, got {count}", h.dim())));
    }
    let mut pairs: Vec<(f64, f64, DVector<f64>)> = Vec::new();
    let (mut matvecs, mut restarts) = (0, 0);
    for sign in [1, -1] {
        let indices = h.sector_indices(sign);
        let wanted = count.min(indices.len());
        if wanted == 0 {
            continue;
        }
        let r = lowest_eigenpairs(&h.restrict(&indices)?, wanted, &opts)?;
        matvecs += r.matvecs;
        restarts += r.restarts;
        for ((value, residual), v) in r.eigenvalues.iter().zip(&r.residuals).zip(&r.eigenvectors) {
            let mut full = DVector::zeros(h.dim());
            for (p, &i) in indices.iter().enumerate() {
                full[i] = v[p];
            }
            pairs.push((*value, *residual, full));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.truncate(count);
    let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let gap = (count >= 2).then(|| eigenvalues[1] - eigenvalues[0]);
    Ok(SpectrumResult {
        eigenvalues,
        gap,
        residuals: pairs.iter().map(|p| p.1).collect(),
        norm_estimate: row_sum_norm(h.matrix()),
        matvecs,
        restarts,
        eigenvectors: pairs.into_iter().map(|p| p.2).collect(),
    })
}

struct Run {
    value: f64,
    vector: DVector<f64>,
    residual: f64,
}

fn project_out(v: &mut DVector<f64>, basis: &[DVector<f64>]) {
    // Two passes keep the vector orthogonal to working precision.
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(v);
            v.axpy(-c, q, 1.0);
        }
    }
}

fn lanczos_run(
    m: &CsrMatrix<f64>,
    start: &DVector<f64>,
    locked: &[DVector<f64>],
    max_krylov: usize,
    matvecs: &mut usize,
) -> Result<Run> {
    let n = m.nrows();
    let room = n - locked.len();
    let mut q = start.clone();
    project_out(&mut q, locked);
    let mut norm = q.norm();
    if norm < 1e-300 {
        // The start vector lies in the locked space; use a basis vector instead.
        for i in 0..n {
            q = DVector::zeros(n);
            q[i] = 1.0;
            project_out(&mut q, locked);
            norm = q.norm();
            if norm > 1e-8 {
                break;
            }
        }
    }
    q /= norm;

    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let size = max_krylov.min(room).max(1);
    loop {
        let mut w = spmv(m, &q);
        *matvecs += 1;
        let a = q.dot(&w);
        alpha.push(a);
        basis.push(q.clone());
        if basis.len() == size {
            break;
        }
        let scale = w.norm();
        project_out(&mut w, locked);
        project_out(&mut w, &basis);
        let b = w.norm();
        if b <= 1e-10 * scale {
            // Invariant subspace reached.
            break;
        }
        beta.push(b);
        q = w / b;
        // Dividing by a small `b` amplifies rounding errors along the locked
        // and earlier directions; remove them again.
        project_out(&mut q, locked);
        project_out(&mut q, &basis);
        q.normalize_mut();
    }

    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let (_, vectors) = crate::linalg::sorted_eigen(&t)?;
    let y = vectors.column(0);
    let mut x = DVector::zeros(n);
    for (j, qj) in basis.iter().enumerate() {
        x.axpy(y[j], qj, 1.0);
    }
    project_out(&mut x, locked);
    x /= x.norm();
    let hx = spmv(m, &x);
    *matvecs += 1;
    let value = x.dot(&hx);
    let residual = (hx - &x * value).norm();
    Ok(Run {
        value,
        vector: x,
        residual,
    })
}

fn row_sum_norm(m: &CsrMatrix<f64>) -> f64 {
    let off = m.row_offsets();
    (0..m.nrows())
        .map(|i| m.values()[off[i]..off[i + 1]].iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

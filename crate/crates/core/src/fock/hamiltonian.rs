//! Assembly of `H_λ = dΓ((m² − Δ)^{1/2}) + λ:V(w/√λ):` on a truncated Fock space.
//!
//! With `φ(x) = Σ_k e_k(x)φ_k` and `φ_k = (a_k + a_k†)/√ω_k` (variance
//! `1/ω_k`), normal ordering factorizes over modes:
//!
//! `:φ(x)^n: = Σ_{|m| = n} n!/Πm_k! · Π_k e_k(x)^{m_k} ω_k^{−m_k/2} :(a_k + a_k†)^{m_k}:`
//!
//! so the degree-`n` part of the interaction is a fixed block scaled by
//! `λ^{1−n/2}`. Blocks are assembled once, with combinatorial factors in
//! double-double precision, and combined for each `λ`.

use std::sync::Arc;

use nalgebra::DVector;
use nalgebra_sparse::CsrMatrix;
use rayon::prelude::*;
use twofloat::TwoFloat;

use super::basis::FockBasis;
use crate::error::{Error, Result};
use crate::potential::ClassicalPotential;

#[derive(Debug, Clone, Copy)]
pub struct FockOptions {
    pub max_states: usize,
    /// Cap on the number of mode multisets per degree.
    pub max_multisets: usize,
}

impl Default for FockOptions {
    fn default() -> Self {
        FockOptions {
            max_states: 250_000,
            max_multisets: 100_000,
        }
    }
}

/// One degree of the interaction: sorted `(row, col, value)` triplets of
/// `a_n Σ_m S_m :Π(a + a†)^{m_k}:`, without the `λ` factor.
#[derive(Debug, Clone)]
pub struct DegreeBlock {
    pub degree: usize,
    pub entries: Vec<(usize, usize, TwoFloat)>,
}

/// `λ`-independent pieces of the Hamiltonian.
#[derive(Debug)]
pub struct FockCouplings {
    basis: FockBasis,
    blocks: Vec<DegreeBlock>,
    even: bool,
}

/// All multisets of size `n` over `k` modes, as occupation-count vectors.
fn multisets(k: usize, n: usize, out: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, pos: usize) {
    if pos == k - 1 {
        current[pos] = n as u32;
        out.push(current.clone());
        return;
    }
    for c in (0..=n).rev() {
        current[pos] = c as u32;
        multisets(k, n - c, out, current, pos + 1);
    }
    current[pos] = 0;
}

fn binomial(n: u32, r: u32) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}

/// `√(a!/b!)` for `a ≥ b` in double-double.
fn sqrt_factorial_ratio(a: u32, b: u32) -> TwoFloat {
    let mut p = TwoFloat::from(1.0);
    for i in (b + 1)..=a {
        p *= i as f64;
    }
    p.sqrt()
}

fn multinomial(counts: &[u32]) -> f64 {
    let n: u32 = counts.iter().sum();
    let mut remaining = n;
    let mut acc = 1.0;
    for &c in counts {
        acc *= binomial(remaining, c);
        remaining -= c;
    }
    acc
}

impl FockCouplings {
    pub fn new(pot: &ClassicalPotential, modes: usize, n_max: u32, opts: &FockOptions) -> Result<Self> {
        let basis_modes = pot.basis();
        if modes == 0 || modes > basis_modes.len() {
            return Err(Error::invalid(
                "K",
                format!("need 1..={} modes, got {modes}", basis_modes.len()),
            ));
        }
        let degree = pot.polynomial().degree();
        if (n_max as usize) < degree {
            return Err(Error::invalid(
                "N_max",
                format!("must be at least the polynomial degree {degree}, got {n_max}"),
            ));
        }
        let freqs = &basis_modes.frequencies()[..modes];
        let basis = FockBasis::new(freqs, n_max, opts.max_states)?;
        let samples = basis_modes.samples();
        let g = pot.cutoff().samples();
        let dx = basis_modes.weight();

        let mut blocks = Vec::new();
        for (n, &a_n) in pot.polynomial().coefficients().iter().enumerate() {
            if a_n == 0.0 {
                continue;
            }
            let mut ms = Vec::new();
            multisets(modes, n, &mut ms, &mut vec![0; modes], 0);
            if ms.len() > opts.max_multisets {
                return Err(Error::Budget(format!(
                    "degree {n} with K = {modes} needs {} couplings (limit {})",
                    ms.len(),
                    opts.max_multisets
                )));
            }
            let mut couplings: Vec<(Vec<u32>, f64)> = ms
                .into_iter()
                .map(|m| {
                    let s: f64 = (0..g.len())
                        .map(|j| {
                            let prod: f64 = m.iter().enumerate().map(|(k, &c)| samples[(j, k)].powi(c as i32)).product();
                            g[j] * prod
                        })
                        .sum::<f64>()
                        * dx;
                    let norm: f64 = m.iter().zip(freqs).map(|(&c, w)| w.powf(-0.5 * c as f64)).product();
                    let c = a_n * multinomial(&m) * s * norm;
                    (m, c)
                })
                .collect();
            // Mode integrals that vanish exactly come out at rounding level.
            let largest = couplings.iter().map(|c| c.1.abs()).fold(0.0, f64::max);
            couplings.retain(|c| c.1.abs() > 1e-13 * largest);
            let entries = apply_block(&basis, &couplings);
            blocks.push(DegreeBlock { degree: n, entries });
        }
        Ok(FockCouplings {
            basis,
            blocks,
            even: pot.is_even(),
        })
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn blocks(&self) -> &[DegreeBlock] {
        &self.blocks
    }

    pub fn is_even(&self) -> bool {
        self.even
    }

    /// `H_λ` with all couplings scaled by `λ^{1−n/2}`.
    pub fn hamiltonian(self: &Arc<Self>, lambda: f64) -> Result<FockHamiltonian> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid("lambda", format!("must be positive, got {lambda}")));
        }
        let dim = self.basis.len();
        let mut rows: Vec<Vec<(usize, TwoFloat)>> = (0..dim)
            .map(|i| vec![(i, TwoFloat::from(self.basis.free_energy(i)))])
            .collect();
        for block in &self.blocks {
            let scale = lambda.powf(1.0 - 0.5 * block.degree as f64);
            for &(r, c, v) in &block.entries {
                rows[r].push((c, v * scale));
            }
        }
        let mut offsets = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut exact = Vec::new();
        offsets.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, TwoFloat)> = Vec::with_capacity(row.len());
            for (c, v) in row {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            for (c, v) in merged {
                cols.push(c);
                vals.push(v.hi() + v.lo());
                exact.push(v);
            }
            offsets.push(cols.len());
        }
        let matrix = CsrMatrix::try_from_csr_data(dim, dim, offsets, cols, vals)
            .map_err(|e| Error::Eigensolver(format!("sparse assembly failed: {e}")))?;
        Ok(FockHamiltonian {
            couplings: self.clone(),
            lambda,
            matrix,
            exact,
        })
    }
}

/// Applies `Σ_m c_m Π_k :(a_k + a_k†)^{m_k}:` to every basis state.
fn apply_block(basis: &FockBasis, couplings: &[(Vec<u32>, f64)]) -> Vec<(usize, usize, TwoFloat)> {
    let n_max = basis.n_max();
    let per_col: Vec<Vec<(usize, usize, TwoFloat)>> = (0..basis.len())
        .into_par_iter()
        .map(|col| {
            let state = basis.state(col);
            let mut out: Vec<(usize, TwoFloat)> = Vec::new();
            for (m, c) in couplings {
                // Per mode: list of (new occupation, factor).
                let options: Vec<Vec<(u32, TwoFloat)>> = state
                    .iter()
                    .zip(m)
                    .map(|(&n, &mk)| {
                        let lo = mk.saturating_sub(n);
                        (lo..=mk)
                            .map(|r| {
                                let j = n + r - mk;
                                let np = j + r;
                                let f = sqrt_factorial_ratio(n, j) * sqrt_factorial_ratio(np, j) * binomial(mk, r);
                                (np, f)
                            })
                            .collect()
                    })
                    .collect();
                let mut target = vec![0u32; state.len()];
                expand(&options, 0, TwoFloat::from(*c), &mut target, n_max, basis, &mut out);
            }
            out.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, usize, TwoFloat)> = Vec::with_capacity(out.len());
            for (r, v) in out {
                match merged.last_mut() {
                    Some(last) if last.0 == r => last.2 += v,
                    _ => merged.push((r, col, v)),
                }
            }
            merged
        })
        .collect();
    let mut entries: Vec<(usize, usize, TwoFloat)> = per_col.into_iter().flatten().collect();
    entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    entries
}

fn expand(
    options: &[Vec<(u32, TwoFloat)>],
    pos: usize,
    acc: TwoFloat,
    target: &mut Vec<u32>,
    n_max: u32,
    basis: &FockBasis,
    out: &mut Vec<(usize, TwoFloat)>,
) {
    if pos == options.len() {
        if target.iter().sum::<u32>() <= n_max {
            let row = basis.index_of(target).expect("state within cutoff");
            out.push((row, acc));
        }
        return;
    }
    for &(np, f) in &options[pos] {
        target[pos] = np;
        expand(options, pos + 1, acc * f, target, n_max, basis, out);
    }
}

/// `H_λ` as a sparse symmetric matrix, with double-double entries kept.
#[derive(Debug, Clone)]
pub struct FockHamiltonian {
    couplings: Arc<FockCouplings>,
    lambda: f64,
    matrix: CsrMatrix<f64>,
    exact: Vec<TwoFloat>,
}

impl FockHamiltonian {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn basis(&self) -> &FockBasis {
        &self.couplings.basis
    }

    pub fn couplings(&self) -> &Arc<FockCouplings> {
        &self.couplings
    }

    pub fn matrix(&self) -> &CsrMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_even(&self) -> bool {
        self.couplings.even
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        spmv(&self.matrix, x)
    }

    /// `max_i Σ_j |H_ij|`, an upper bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        let m = &self.matrix;
        (0..m.nrows())
            .map(|i| m.values()[m.row_offsets()[i]..m.row_offsets()[i + 1]].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_asymmetry(&self) -> f64 {
        let dense = self.dense();
        crate::linalg::max_asymmetry(&dense)
    }

    pub fn dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.dim(), self.dim());
        for (i, j, v) in self.matrix.triplet_iter() {
            d[(i, j)] = *v;
        }
        d
    }

    /// Basis indices with parity `sign`.
    pub fn sector_indices(&self, sign: i8) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.basis().parity(i) == sign).collect()
    }

    /// Restriction to the given basis indices.
    pub fn restrict(&self, indices: &[usize]) -> Result<CsrMatrix<f64>> {
        let mut position = vec![usize::MAX; self.dim()];
        for (p, &i) in indices.iter().enumerate() {
            position[i] = p;
        }
        let m = &self.matrix;
        let mut offsets = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for &i in indices {
            for k in m.row_offsets()[i]..m.row_offsets()[i + 1] {
                let p = position[m.col_indices()[k]];
                if p != usize::MAX {
                    cols.push(p);
                    vals.push(m.values()[k]);
                }
            }
            offsets.push(cols.len());
        }
        // Columns stay sorted because `indices` is increasing.
        CsrMatrix::try_from_csr_data(indices.len(), indices.len(), offsets, cols, vals)
            .map_err(|e| Error::Eigensolver(format!("sector extraction failed: {e}")))
    }

    /// Dense double-double restriction, symmetrized.
    pub fn restrict_exact(&self, indices: &[usize]) -> Vec<Vec<TwoFloat>> {
        let n = indices.len();
        let mut position = vec![usize::MAX; self.dim()];
        for (p, &i) in indices.iter().enumerate() {
            position[i] = p;
        }
        let zero = TwoFloat::from(0.0);
        let mut out = vec![vec![zero; n]; n];
        let m = &self.matrix;
        for &i in indices {
            for k in m.row_offsets()[i]..m.row_offsets()[i + 1] {
                let p = position[m.col_indices()[k]];
                if p != usize::MAX {
                    out[position[i]][p] = self.exact[k];
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let s = (out[i][j] + out[j][i]) * 0.5;
                out[i][j] = s;
                out[j][i] = s;
            }
        }
        out
    }

    /// `‖HΠ − ΠH‖_∞` for the parity operator `Π`.
    pub fn parity_defect(&self) -> f64 {
        let b = self.basis();
        self.matrix
            .triplet_iter()
            .filter(|(i, j, _)| b.parity(*i) != b.parity(*j))
            .map(|(_, _, v)| 2.0 * v.abs())
            .fold(0.0, f64::max)
    }
}

pub fn spmv(m: &CsrMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let offsets = m.row_offsets();
    let cols = m.col_indices();
    let vals = m.values();
    DVector::from_iterator(
        m.nrows(),
        (0..m.nrows()).map(|i| (offsets[i]..offsets[i + 1]).map(|k| vals[k] * x[cols[k]]).sum::<f64>()),
    )
}

/// `H_λ` for one `λ`.
pub fn assemble_hamiltonian(
    pot: &ClassicalPotential,
    lambda: f64,
    modes: usize,
    n_max: u32,
    opts: &FockOptions,
) -> Result<FockHamiltonian> {
    Arc::new(FockCouplings::new(pot, modes, n_max, opts)?).hamiltonian(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{CutoffFunction, PolynomialPotential};
    use crate::spectral::{Boundary, Grid, ModeBasis};

    fn pot(coeffs: Vec<f64>, l: f64, n: usize) -> ClassicalPotential {
        let basis = Arc::new(ModeBasis::new(Grid::new(l, n, Boundary::Periodic).unwrap(), 1.0).unwrap());
        let g = CutoffFunction::uniform(&basis);
        ClassicalPotential::new(basis, PolynomialPotential::new(coeffs).unwrap(), g).unwrap()
    }

    #[test]
    fn free_hamiltonian_is_diagonal() {
        let p = pot(vec![], 2.0, 8);
        let h = assemble_hamiltonian(&p, 3.0, 3, 4, &FockOptions::default()).unwrap();
        for (i, j, v) in h.matrix().triplet_iter() {
            assert_eq!(i, j);
            assert_eq!(*v, h.basis().free_energy(i));
        }
    }

    #[test]
    fn vacuum_entry_is_constant_term_only() {
        let p = pot(vec![0.7, 0.0, 0.3, 0.0, 1.0], 2.0, 8);
        let lambda = 2.5;
        let h = assemble_hamiltonian(&p, lambda, 2, 6, &FockOptions::default()).unwrap();
        let vac = h.dense()[(0, 0)];
        assert!((vac - lambda * 0.7 * 2.0).abs() < 1e-12, "{vac}");
    }

    #[test]
    fn symmetric_and_parity_preserving() {
        let p = pot(vec![1.0, 0.0, -3.0, 0.0, 1.0], 2.0, 8);
        let h = assemble_hamiltonian(&p, 5.0, 3, 8, &FockOptions::default()).unwrap();
        let scale = h.dense().amax();
        assert!(h.max_asymmetry() <= 1e-12 * scale);
        assert_eq!(h.parity_defect(), 0.0);
    }

    #[test]
    fn lambda_scaling_of_blocks() {
        let p = pot(vec![0.0, 0.0, 0.5, 0.0, 1.0], 1.5, 6);
        let c = Arc::new(FockCouplings::new(&p, 2, 6, &FockOptions::default()).unwrap());
        let h1 = c.hamiltonian(1.0).unwrap().dense();
        let h4 = c.hamiltonian(4.0).unwrap().dense();
        let h9 = c.hamiltonian(9.0).unwrap().dense();
        // H(λ) = F + B₂ + λ⁻¹B₄, so three λ determine B₄ two ways.
        let b4_a = (&h1 - &h4) * (4.0 / 3.0);
        let b4_b = (&h1 - &h9) * (9.0 / 8.0);
        assert!((b4_a - b4_b).amax() < 1e-10);
    }

    #[test]
    fn rejects_small_cutoff() {
        let p = pot(vec![0.0, 0.0, 0.0, 0.0, 1.0], 1.0, 6);
        assert!(assemble_hamiltonian(&p, 1.0, 1, 3, &FockOptions::default()).is_err());
    }
}

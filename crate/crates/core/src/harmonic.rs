//! Ground energies and covariances of quadratic Hamiltonians `−L_A + Q_v`
//! (and `−L_A + Q_{v,J}`).
//!
//! Operators on `H = H^{1/2}` are represented in the orthonormal basis
//! `e_k/√ω_k`, where `A = Ã` is `diag √ω_k`, `A⁴ = diag ω_k²` and
//! `A⁴ + 4AK_vA` is the mode matrix of `m² − Δ + 4v`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::ModeBasis;

#[derive(Debug, Clone)]
pub struct QuadraticPerturbation {
    v: Vec<f64>,
    j: Option<DMatrix<f64>>,
}

impl QuadraticPerturbation {
    pub fn new(v: Vec<f64>) -> Result<Self> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("v", "samples must be finite"));
        }
        Ok(QuadraticPerturbation { v, j: None })
    }

    pub fn zero(basis: &ModeBasis) -> Self {
        QuadraticPerturbation {
            v: vec![0.0; basis.grid().num_nodes()],
            j: None,
        }
    }

    /// Adds a symmetric `J`, given in the `H`-orthonormal mode basis.
    pub fn with_j(mut self, j: DMatrix<f64>) -> Result<Self> {
        if !j.is_square() {
            return Err(Error::invalid("J", "must be square"));
        }
        if linalg::max_asymmetry(&j) > 1e-12 * j.amax().max(1.0) {
            return Err(Error::invalid("J", "must be symmetric"));
        }
        self.j = Some(j);
        Ok(self)
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn j(&self) -> Option<&DMatrix<f64>> {
        self.j.as_ref()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HarmonicReport {
    pub energy: f64,
    /// Smallest eigenvalue of the assembled `A⁴ + 4AK_vA (+ 4AJA)`.
    pub min_eigenvalue: f64,
    /// `‖(A_v² − A²)A⁻¹‖_HS`.
    pub hs_norm: f64,
    /// Ground-state covariance `(A⁴ + …)^{−1/2}` in L² mode coordinates.
    pub covariance: DMatrix<f64>,
    pub modes: usize,
}

/// Matrix of `K_v = Ã⁻²M_v` in the `H`-orthonormal basis,
/// `(K_v)_{kl} = ∫e_k v e_l / √(ω_k ω_l)`; symmetric by construction.
pub fn kv_operator(basis: &ModeBasis, v: &[f64]) -> Result<DMatrix<f64>> {
    check_samples(basis, v)?;
    let w = basis.frequencies();
    let mut k = basis.multiplication_matrix(v);
    for i in 0..k.nrows() {
        for j in 0..k.ncols() {
            k[(i, j)] /= (w[i] * w[j]).sqrt();
        }
    }
    Ok(k)
}

fn check_samples(basis: &ModeBasis, v: &[f64]) -> Result<()> {
    if v.len() != basis.grid().num_nodes() {
        return Err(Error::invalid(
            "v",
            format!("expected {} node samples, got {}", basis.grid().num_nodes(), v.len()),
        ));
    }
    Ok(())
}

/// `A⁴ + 4AK_vA + 4AJA` in mode coordinates.
pub fn perturbed_operator(basis: &ModeBasis, pert: &QuadraticPerturbation) -> Result<DMatrix<f64>> {
    let kv = kv_operator(basis, &pert.v)?;
    let n = basis.len();
    let mut inner = kv;
    if let Some(j) = &pert.j {
        if j.nrows() != n {
            return Err(Error::invalid("J", format!("expected {n}x{n}, got {}x{}", j.nrows(), j.ncols())));
        }
        inner += j;
    }
    let w = basis.frequencies();
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        for k in 0..n {
            b[(i, k)] = 4.0 * (w[i] * w[k]).sqrt() * inner[(i, k)];
        }
        b[(i, i)] += w[i] * w[i];
    }
    crate::spectral::symmetrize(&mut b);
    Ok(b)
}

fn evaluate(basis: &ModeBasis, pert: &QuadraticPerturbation) -> Result<HarmonicReport> {
    let b = perturbed_operator(basis, pert)?;
    let (values, vectors) = linalg::sorted_eigen(&b)?;
    let min_eigenvalue = values[0];
    let m = basis.mass();
    if !(min_eigenvalue > 1e-10 * m * m) {
        return Err(Error::NotStrictlyPositive { min_eigenvalue });
    }
    let n = b.nrows();
    let spectral = |f: &dyn Fn(f64) -> f64| {
        let mut scaled = vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(values[j]);
        }
        let mut out = scaled * vectors.transpose();
        crate::spectral::symmetrize(&mut out);
        out
    };
    let root = spectral(&|x: f64| x.sqrt());
    let covariance = spectral(&|x: f64| 1.0 / x.sqrt());
    let w = basis.frequencies();
    let mut hs2 = 0.0;
    for l in 0..n {
        for k in 0..n {
            let d = root[(k, l)] - if k == l { w[k] } else { 0.0 };
            hs2 += d * d / w[l];
        }
    }
    Ok(HarmonicReport {
        energy: -0.25 * hs2,
        min_eigenvalue,
        hs_norm: hs2.sqrt(),
        covariance,
        modes: n,
    })
}

/// `E_v = −¼‖(A_v² − A²)A⁻¹‖²_HS`; any `J` carried by `pert` is ignored.
pub fn harmonic_ground_energy(basis: &ModeBasis, pert: &QuadraticPerturbation) -> Result<HarmonicReport> {
    let plain = QuadraticPerturbation {
        v: pert.v.clone(),
        j: None,
    };
    evaluate(basis, &plain)
}

/// `E_{v,J}` with `A_{v,J} = (A⁴ + 4AK_vA + 4AJA)^{1/4}`.
pub fn harmonic_ground_energy_extended(basis: &ModeBasis, pert: &QuadraticPerturbation) -> Result<HarmonicReport> {
    evaluate(basis, pert)
}

/// `(m² − Δ + 4v)^{−1/2}` in L² mode coordinates.
pub fn ground_state_covariance(basis: &ModeBasis, pert: &QuadraticPerturbation) -> Result<DMatrix<f64>> {
    Ok(evaluate(basis, pert)?.covariance)
}

/// `E_v` at each retained-mode count, for truncation studies.
pub fn truncation_sequence(
    basis: &ModeBasis,
    pert: &QuadraticPerturbation,
    counts: &[usize],
) -> Result<Vec<(usize, f64)>> {
    counts
        .iter()
        .map(|&k| {
            let b = basis.truncated(k)?;
            Ok((k, harmonic_ground_energy(&b, pert)?.energy))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Boundary, Grid};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn basis(n: usize, k: usize, b: Boundary) -> ModeBasis {
        ModeBasis::with_modes(Grid::new(2.0, n, b).unwrap(), 1.0, k).unwrap()
    }

    /// One periodic mode on `l = 1`: the constant, `ω = m = 1`, and a constant
    /// `v = u` gives `V_00 = u`.
    fn one_mode() -> ModeBasis {
        ModeBasis::with_modes(Grid::new(1.0, 4, Boundary::Periodic).unwrap(), 1.0, 1).unwrap()
    }

    #[test]
    fn one_mode_example() {
        let b = one_mode();
        let r = harmonic_ground_energy(&b, &QuadraticPerturbation::new(vec![0.75; 4]).unwrap()).unwrap();
        assert!((r.energy + 0.25).abs() < 1e-12);
        assert!((r.covariance[(0, 0)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn free_case() {
        let b = basis(16, 16, Boundary::Periodic);
        let r = harmonic_ground_energy(&b, &QuadraticPerturbation::zero(&b)).unwrap();
        assert_eq!(r.energy, 0.0);
        for k in 0..16 {
            assert_relative_eq!(r.covariance[(k, k)], 1.0 / b.frequency(k), epsilon = 1e-13);
        }
        assert_eq!(kv_operator(&b, &vec![0.0; 16]).unwrap().amax(), 0.0);
    }

    #[test]
    fn constant_v_is_diagonal() {
        let b = basis(12, 12, Boundary::Periodic);
        let k = kv_operator(&b, &vec![0.3; 12]).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                let expect = if i == j { 0.3 / b.frequency(i) } else { 0.0 };
                assert!((k[(i, j)] - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn extended_with_zero_j_reduces() {
        let b = basis(10, 10, Boundary::Neumann);
        let v: Vec<f64> = b.grid().nodes().iter().map(|x| 0.4 * x.cos() - 0.1).collect();
        let p = QuadraticPerturbation::new(v).unwrap();
        let e = harmonic_ground_energy(&b, &p).unwrap().energy;
        let pj = p.clone().with_j(DMatrix::zeros(10, 10)).unwrap();
        let ej = harmonic_ground_energy_extended(&b, &pj).unwrap().energy;
        assert!((e - ej).abs() <= 1e-12);
    }

    #[test]
    fn diagonal_j_per_mode() {
        let b = basis(8, 8, Boundary::Dirichlet);
        let j: Vec<f64> = (0..8).map(|k| 0.1 * (k as f64 + 1.0)).collect();
        let p = QuadraticPerturbation::zero(&b).with_j(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(j.clone()))).unwrap();
        let e = harmonic_ground_energy_extended(&b, &p).unwrap().energy;
        let oracle: f64 = (0..8)
            .map(|k| {
                let w = b.frequency(k);
                let root = (w * w + 4.0 * w * j[k]).sqrt();
                -0.25 * (root - w).powi(2) / w
            })
            .sum();
        assert_relative_eq!(e, oracle, epsilon = 1e-12);
    }

    #[test]
    fn indefinite_rejected() {
        let b = basis(8, 8, Boundary::Periodic);
        let err = harmonic_ground_energy(&b, &QuadraticPerturbation::new(vec![-1.0; 8]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NotStrictlyPositive { .. }));
        let p = QuadraticPerturbation::zero(&b).with_j(DMatrix::identity(8, 8) * -5.0).unwrap();
        assert!(harmonic_ground_energy_extended(&b, &p).is_err());
    }

    #[test]
    fn truncation_converges() {
        let b = basis(64, 64, Boundary::Periodic);
        let v: Vec<f64> = b.grid().nodes().iter().map(|x| 0.5 * (-(x * x) * 4.0).exp()).collect();
        let seq = truncation_sequence(&b, &QuadraticPerturbation::new(v).unwrap(), &[4, 8, 16, 32, 64]).unwrap();
        let diffs: Vec<f64> = seq.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
        assert!(diffs.windows(2).all(|d| d[1] < d[0]), "{seq:?}");
    }

    proptest! {
        #[test]
        fn energy_negative_and_operator_identity(vals in prop::collection::vec(-0.2f64..1.0, 10)) {
            let b = basis(10, 10, Boundary::Periodic);
            let p = QuadraticPerturbation::new(vals.clone()).unwrap();
            let r = harmonic_ground_energy(&b, &p).unwrap();
            prop_assert!(r.energy < 0.0);
            prop_assert!((r.energy + 0.25 * r.hs_norm * r.hs_norm).abs() <= 1e-14 * r.energy.abs());
            let mut direct = b.multiplication_matrix(&vals) * 4.0;
            for k in 0..10 { direct[(k, k)] += b.frequency(k).powi(2); }
            let assembled = perturbed_operator(&b, &p).unwrap();
            prop_assert!((assembled - &direct).amax() <= 1e-10);
            let root = linalg::symmetric_function(&direct, f64::sqrt).unwrap();
            prop_assert!((&r.covariance * root - DMatrix::identity(10, 10)).amax() <= 1e-10);
        }
    }
}

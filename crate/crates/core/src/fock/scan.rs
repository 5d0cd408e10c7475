//! λ-scans of the low-lying spectrum: approach of `E₁(λ)` to the harmonic
//! value at the wells, and decay of the tunneling gap `E₂(λ) − E₁(λ)`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::hamiltonian::{FockCouplings, FockHamiltonian, FockOptions};
use super::lanczos::{lowest_eigenpairs, LanczosOptions};
use super::precision::{dd_to_f64, refine_eigenpair};
use crate::error::{Error, Result};
use crate::harmonic::{harmonic_ground_energy, QuadraticPerturbation};
use crate::potential::{find_minimizers, ClassicalPotential};
use crate::spectral::Field;

#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    pub fock: FockOptions,
    pub lanczos: LanczosOptions,
    /// Refine small gaps in double-double arithmetic.
    pub refine: bool,
    /// Largest parity sector refined densely.
    pub refine_max_dim: usize,
    /// Also solve at `N_max − 2` and report the change in `E₁`.
    pub cutoff_check: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            fock: FockOptions::default(),
            lanczos: LanczosOptions::default(),
            refine: true,
            refine_max_dim: 600,
            cutoff_check: true,
        }
    }
}

/// The two lowest eigenvalues of one Hamiltonian.
#[derive(Debug, Clone, Serialize)]
pub struct LowSpectrum {
    pub e1: f64,
    pub e2: f64,
    pub gap: f64,
    /// Parities of the two states, when `P` is even.
    pub parities: Option<(i8, i8)>,
    pub max_residual: f64,
    pub refined: bool,
    pub precision_limited: bool,
}

const F64_GAP_FLOOR: f64 = 1e-13;
const DD_GAP_FLOOR: f64 = 1e-26;

/// `E₁`, `E₂` of `H`, solved per parity sector when `P` is even.
pub fn low_spectrum(h: &FockHamiltonian, opts: &ScanOptions) -> Result<LowSpectrum> {
    if !h.is_even() {
        let count = 2.min(h.dim());
        let res = lowest_eigenpairs(h.matrix(), count, &opts.lanczos)?;
        let e1 = res.eigenvalues[0];
        let e2 = res.eigenvalues.get(1).copied().unwrap_or(f64::NAN);
        let gap = e2 - e1;
        return Ok(LowSpectrum {
            e1,
            e2,
            gap,
            parities: None,
            max_residual: res.residuals.iter().copied().fold(0.0, f64::max),
            refined: false,
            precision_limited: gap < F64_GAP_FLOOR * e1.abs().max(1.0),
        });
    }

    struct Candidate {
        value: f64,
        sign: i8,
        vector: nalgebra::DVector<f64>,
    }
    let mut candidates = Vec::new();
    let mut sectors = Vec::new();
    let mut max_residual: f64 = 0.0;
    for sign in [1i8, -1] {
        let indices = h.sector_indices(sign);
        if indices.is_empty() {
            sectors.push(indices);
            continue;
        }
        let block = h.restrict(&indices)?;
        let count = 2.min(indices.len());
        let res = lowest_eigenpairs(&block, count, &opts.lanczos)?;
        max_residual = res.residuals.iter().copied().fold(max_residual, f64::max);
        for (value, vector) in res.eigenvalues.iter().zip(res.eigenvectors) {
            candidates.push(Candidate {
                value: *value,
                sign,
                vector,
            });
        }
        sectors.push(indices);
    }
    candidates.sort_by(|a, b| a.value.total_cmp(&b.value));
    if candidates.len() < 2 {
        return Err(Error::invalid("N_max", "basis has fewer than two states"));
    }
    let (c1, c2) = (&candidates[0], &candidates[1]);
    let e1 = c1.value;
    let mut e2 = c2.value;
    let mut gap = e2 - e1;
    let mut refined = false;
    let sector_of = |sign: i8| if sign == 1 { &sectors[0] } else { &sectors[1] };
    let small = gap < 1e-8 * e1.abs().max(1.0);
    let fits = sector_of(c1.sign).len() <= opts.refine_max_dim && sector_of(c2.sign).len() <= opts.refine_max_dim;
    let mut e1_out = e1;
    let mut parities = (c1.sign, c2.sign);
    if opts.refine && small && fits {
        let a1 = h.restrict_exact(sector_of(c1.sign));
        let a2 = if c2.sign == c1.sign {
            a1.clone()
        } else {
            h.restrict_exact(sector_of(c2.sign))
        };
        let r1 = refine_eigenpair(&a1, c1.value, c1.vector.as_slice(), 30)?;
        let r2 = refine_eigenpair(&a2, c2.value, c2.vector.as_slice(), 30)?;
        // The f64 ordering of nearly degenerate values may be wrong.
        let (lo, hi) = if r2.value < r1.value {
            parities = (c2.sign, c1.sign);
            (r2, r1)
        } else {
            (r1, r2)
        };
        gap = dd_to_f64(hi.value - lo.value);
        e1_out = dd_to_f64(lo.value);
        e2 = dd_to_f64(hi.value);
        refined = true;
    }
    let floor = if refined { DD_GAP_FLOOR } else { F64_GAP_FLOOR };
    Ok(LowSpectrum {
        e1: e1_out,
        e2,
        gap,
        parities: Some(parities),
        max_residual,
        refined,
        precision_limited: gap < floor * e1.abs().max(1.0),
    })
}

fn check_lambdas(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::invalid("lambda", "list is empty"));
    }
    if lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::invalid("lambda", "values must be positive and finite"));
    }
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("lambda", "values must be strictly increasing"));
    }
    Ok(())
}

struct Solver {
    main: Arc<FockCouplings>,
    reduced: Option<Arc<FockCouplings>>,
}

impl Solver {
    fn new(pot: &ClassicalPotential, modes: usize, n_max: u32, opts: &ScanOptions) -> Result<Self> {
        let main = Arc::new(FockCouplings::new(pot, modes, n_max, &opts.fock)?);
        let degree = pot.polynomial().degree() as u32;
        let reduced = if opts.cutoff_check && n_max >= degree + 2 && n_max >= 2 {
            Some(Arc::new(FockCouplings::new(pot, modes, n_max - 2, &opts.fock)?))
        } else {
            None
        };
        Ok(Solver { main, reduced })
    }

    fn solve(&self, lambda: f64, opts: &ScanOptions) -> Result<(LowSpectrum, Option<f64>)> {
        let low = low_spectrum(&self.main.hamiltonian(lambda)?, opts)?;
        let delta = match &self.reduced {
            Some(c) => Some(low.e1 - low_spectrum(&c.hamiltonian(lambda)?, opts)?.e1),
            None => None,
        };
        Ok((low, delta))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GapRow {
    pub lambda: f64,
    pub e1: f64,
    pub e2: f64,
    pub gap: f64,
    pub log_gap: Option<f64>,
    /// `−(log gap(λ) − log gap(λ₋))/(λ − λ₋)` against the previous row.
    pub slope: Option<f64>,
    pub parities: Option<(i8, i8)>,
    pub refined: bool,
    pub precision_limited: bool,
    pub max_residual: f64,
    /// `E₁(N_max) − E₁(N_max − 2)`.
    pub cutoff_delta: Option<f64>,
}

/// `E₁`, `E₂`, the gap and its running log-slope along `lambdas`.
pub fn gap_scan(
    pot: &ClassicalPotential,
    lambdas: &[f64],
    modes: usize,
    n_max: u32,
    opts: &ScanOptions,
) -> Result<Vec<GapRow>> {
    check_lambdas(lambdas)?;
    if !pot.is_even() {
        return Err(Error::invalid("P", "gap scans need an even polynomial"));
    }
    let solver = Solver::new(pot, modes, n_max, opts)?;
    let solved: Vec<(LowSpectrum, Option<f64>)> = lambdas
        .par_iter()
        .map(|&l| solver.solve(l, opts))
        .collect::<Result<_>>()?;
    let mut rows: Vec<GapRow> = Vec::with_capacity(lambdas.len());
    for (&lambda, (low, delta)) in lambdas.iter().zip(solved) {
        let log_gap = (low.gap > 0.0).then(|| low.gap.ln());
        let slope = rows.last().and_then(|prev| match (prev.log_gap, log_gap) {
            (Some(a), Some(b)) => Some(-(b - a) / (lambda - prev.lambda)),
            _ => None,
        });
        rows.push(GapRow {
            lambda,
            e1: low.e1,
            e2: low.e2,
            gap: low.gap,
            log_gap,
            slope,
            parities: low.parities,
            refined: low.refined,
            precision_limited: low.precision_limited,
            max_residual: low.max_residual,
            cutoff_delta: delta,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitRow {
    pub lambda: f64,
    pub e1: f64,
    pub target: f64,
    pub deviation: f64,
    pub cutoff_delta: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitCheck {
    /// `min U` over the `K`-mode truncation.
    pub min_value: f64,
    /// Harmonic ground energies at each global minimizer.
    pub harmonic_energies: Vec<f64>,
    pub rows: Vec<LimitRow>,
}

/// Compares `E₁(λ)` with `λ min U + min_i E_{v_i}`, all at `K` retained modes.
///
/// Minimizers are recomputed in the `K`-mode truncation from `starts`
/// (projected onto the retained modes).
pub fn semiclassical_limit_check(
    pot: &ClassicalPotential,
    starts: &[Field],
    lambdas: &[f64],
    modes: usize,
    n_max: u32,
    opts: &ScanOptions,
) -> Result<LimitCheck> {
    check_lambdas(lambdas)?;
    if modes == 0 || modes > pot.basis().len() {
        return Err(Error::invalid("K", format!("need 1..={} modes, got {modes}", pot.basis().len())));
    }
    let basis = Arc::new(pot.basis().truncated(modes)?);
    let reduced = ClassicalPotential::new(basis.clone(), pot.polynomial().clone(), pot.cutoff().clone())?;
    let mut projected = Vec::with_capacity(starts.len() + 1);
    projected.push(Field::zero(&basis));
    for s in starts {
        let c = s.coefficients().rows(0, modes.min(s.coefficients().len())).into_owned();
        let mut full = nalgebra::DVector::zeros(modes);
        full.rows_mut(0, c.len()).copy_from(&c);
        projected.push(Field::from_coefficients(&basis, full)?);
    }
    let report = find_minimizers(&reduced, &projected, 1e-10)?;
    let min_value = report
        .min_value()
        .ok_or_else(|| Error::Degenerate("no minimizer found in the truncated model".into()))?;
    let harmonic_energies = report
        .minimizers
        .iter()
        .filter(|p| p.value <= min_value + 1e-8 * min_value.abs().max(1.0))
        .map(|p| {
            let v = reduced.schrodinger_potential(&p.field)?;
            Ok(harmonic_ground_energy(&basis, &QuadraticPerturbation::new(v)?)?.energy)
        })
        .collect::<Result<Vec<f64>>>()?;
    let e_min = harmonic_energies.iter().copied().fold(f64::INFINITY, f64::min);

    let solver = Solver::new(pot, modes, n_max, opts)?;
    let solved: Vec<(LowSpectrum, Option<f64>)> = lambdas
        .par_iter()
        .map(|&l| solver.solve(l, opts))
        .collect::<Result<_>>()?;
    let rows = lambdas
        .iter()
        .zip(solved)
        .map(|(&lambda, (low, delta))| {
            let target = lambda * min_value + e_min;
            LimitRow {
                lambda,
                e1: low.e1,
                target,
                deviation: (low.e1 - target).abs(),
                cutoff_delta: delta,
            }
        })
        .collect();
    Ok(LimitCheck {
        min_value,
        harmonic_energies,
        rows,
    })
}

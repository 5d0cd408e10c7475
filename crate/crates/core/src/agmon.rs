//! Paths in field space, the Agmon length `ℓ(c) = ∫√U(c)‖c′‖dt` and energy
//! `e(c) = ∫U(c)‖c′‖²dt`, and geodesic search for the Agmon distance.
//!
//! Paths are piecewise linear in L² between time knots. On each segment `U`
//! is sampled at the midpoint, so both functionals are midpoint-rule
//! quadratures and the discrete Cauchy–Schwarz inequality `ℓ² ≤ e·T` holds
//! exactly.

use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::optim::{lbfgs, LbfgsOptions};
use crate::potential::ClassicalPotential;
use crate::quadrature;
use crate::spectral::{sobolev_norm, Field, ModeBasis};

#[derive(Debug, Clone)]
pub struct Path {
    basis: Arc<ModeBasis>,
    times: Vec<f64>,
    knots: Vec<DVector<f64>>,
}

impl Path {
    pub fn new(times: Vec<f64>, fields: Vec<Field>) -> Result<Self> {
        let first = fields
            .first()
            .ok_or_else(|| Error::invalid("path", "needs at least two knots"))?;
        let basis = first.basis().clone();
        if fields.iter().any(|f| !basis.same_as(f.basis())) {
            return Err(Error::BasisMismatch);
        }
        Self::from_coefficients(basis, times, fields.into_iter().map(Field::into_coefficients).collect())
    }

    pub fn from_coefficients(basis: Arc<ModeBasis>, times: Vec<f64>, knots: Vec<DVector<f64>>) -> Result<Self> {
        if knots.len() < 2 || times.len() != knots.len() {
            return Err(Error::invalid(
                "path",
                format!("need matching times and knots (at least two), got {} and {}", times.len(), knots.len()),
            ));
        }
        if !times.windows(2).all(|w| w[1] > w[0]) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("times", "knot times must be finite and strictly increasing"));
        }
        if knots.iter().any(|c| c.len() != basis.len()) {
            return Err(Error::BasisMismatch);
        }
        Ok(Path { basis, times, knots })
    }

    /// Straight segment from `h` to `k` on `[0, duration]`, with parameter
    /// values clustered geometrically toward both ends by `ratio ≥ 1`.
    pub fn straight(h: &Field, k: &Field, segments: usize, duration: f64, ratio: f64) -> Result<Self> {
        h.check_basis(k)?;
        if segments == 0 {
            return Err(Error::invalid("knots", "need at least one segment"));
        }
        if !(duration > 0.0) {
            return Err(Error::invalid("T", format!("must be positive, got {duration}")));
        }
        let s = clustered_parameters(segments, ratio);
        let knots = s
            .iter()
            .map(|&t| h.coefficients() * (1.0 - t) + k.coefficients() * t)
            .collect();
        let times = s.iter().map(|t| t * duration).collect();
        Self::from_coefficients(h.basis().clone(), times, knots)
    }

    pub fn basis(&self) -> &Arc<ModeBasis> {
        &self.basis
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn knots(&self) -> &[DVector<f64>] {
        &self.knots
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn segments(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn duration(&self) -> f64 {
        self.times[self.times.len() - 1] - self.times[0]
    }

    pub fn field(&self, j: usize) -> Field {
        Field::from_coefficients(&self.basis, self.knots[j].clone()).expect("knot lives on the path basis")
    }

    pub fn start(&self) -> Field {
        self.field(0)
    }

    pub fn end(&self) -> Field {
        self.field(self.knots.len() - 1)
    }

    /// Same geometry with every segment split at its midpoint.
    pub fn refined(&self) -> Path {
        let mut times = Vec::with_capacity(2 * self.knots.len() - 1);
        let mut knots = Vec::with_capacity(2 * self.knots.len() - 1);
        for i in 0..self.segments() {
            times.push(self.times[i]);
            knots.push(self.knots[i].clone());
            times.push(0.5 * (self.times[i] + self.times[i + 1]));
            knots.push((&self.knots[i] + &self.knots[i + 1]) * 0.5);
        }
        times.push(*self.times.last().unwrap());
        knots.push(self.knots.last().unwrap().clone());
        Path {
            basis: self.basis.clone(),
            times,
            knots,
        }
    }
}

impl Serialize for Path {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("Path", 2)?;
        st.serialize_field("times", &self.times)?;
        let knots: Vec<&[f64]> = self.knots.iter().map(|c| c.as_slice()).collect();
        st.serialize_field("coefficients", &knots)?;
        st.end()
    }
}

fn clustered_parameters(segments: usize, ratio: f64) -> Vec<f64> {
    let ratio = ratio.max(1.0);
    // Symmetric geometric widths growing from both ends toward the middle.
    let widths: Vec<f64> = (0..segments)
        .map(|i| ratio.powi(i.min(segments - 1 - i) as i32))
        .collect();
    let total: f64 = widths.iter().sum();
    let mut s = Vec::with_capacity(segments + 1);
    let mut acc = 0.0;
    s.push(0.0);
    for w in &widths[..segments - 1] {
        acc += w;
        s.push(acc / total);
    }
    s.push(1.0);
    s
}

fn check_path(pot: &ClassicalPotential, path: &Path) -> Result<()> {
    if pot.basis().same_as(&path.basis) {
        Ok(())
    } else {
        Err(Error::BasisMismatch)
    }
}

/// `(√U(midpoint)·‖Δc‖, Δt)` for every segment.
fn segment_lengths(pot: &ClassicalPotential, path: &Path) -> Vec<(f64, f64)> {
    (0..path.segments())
        .map(|i| {
            let d = &path.knots[i + 1] - &path.knots[i];
            let mid = (&path.knots[i] + &path.knots[i + 1]) * 0.5;
            let u = pot.value_of_coefficients(&mid).max(0.0);
            (u.sqrt() * d.norm(), path.times[i + 1] - path.times[i])
        })
        .collect()
}

pub fn path_length(pot: &ClassicalPotential, path: &Path) -> Result<f64> {
    check_path(pot, path)?;
    Ok(segment_lengths(pot, path).iter().map(|s| s.0).sum())
}

pub fn path_energy(pot: &ClassicalPotential, path: &Path) -> Result<f64> {
    check_path(pot, path)?;
    Ok(segment_lengths(pot, path).iter().map(|(l, dt)| l * l / dt).sum())
}

/// Pointwise speeds `√U‖c′‖` on each segment.
pub fn segment_speeds(pot: &ClassicalPotential, path: &Path) -> Result<Vec<f64>> {
    check_path(pot, path)?;
    Ok(segment_lengths(pot, path).iter().map(|(l, dt)| l / dt).collect())
}

/// Re-knots the path by cumulative Agmon arclength over the same duration.
///
/// The knot fields are kept and only their times move, so `ℓ` is preserved
/// exactly and every segment has speed `ℓ/T`. Segments of zero length are
/// merged away.
pub fn reparametrize_constant_speed(pot: &ClassicalPotential, path: &Path) -> Result<Path> {
    check_path(pot, path)?;
    let lengths = segment_lengths(pot, path);
    let total: f64 = lengths.iter().map(|s| s.0).sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("path has zero Agmon length".into()));
    }
    let t0 = path.times[0];
    let duration = path.duration();
    let mut times = vec![t0];
    let mut knots = vec![path.knots[0].clone()];
    let mut acc = 0.0;
    for (i, (l, _)) in lengths.iter().enumerate() {
        if *l <= total * 1e-15 {
            continue;
        }
        acc += l;
        times.push(t0 + duration * (acc / total));
        knots.push(path.knots[i + 1].clone());
    }
    // Keep the endpoint exact even if the last segments were merged.
    *knots.last_mut().unwrap() = path.knots.last().unwrap().clone();
    *times.last_mut().unwrap() = t0 + duration;
    Path::from_coefficients(path.basis.clone(), times, knots)
}

#[derive(Debug, Clone, Copy)]
pub struct AgmonOptions {
    /// Segments of the initial path.
    pub knots: usize,
    /// Leading modes optimized at interior knots.
    pub reduced_modes: usize,
    /// Geometric clustering ratio of initial knots toward the endpoints.
    pub cluster_ratio: f64,
    /// Optimize/re-time cycles per resolution.
    pub max_cycles: usize,
    /// L-BFGS iterations per cycle.
    pub max_iterations: usize,
    /// Relative change of the length between cycles that counts as converged.
    pub tol: f64,
    /// Repeat the optimization once on the midpoint-refined path.
    pub refine: bool,
    /// Start from the harmonic-extension path as well as the straight one.
    pub harmonic_restart: bool,
    /// Additional randomly perturbed straight-path starts.
    pub random_restarts: usize,
    pub seed: u64,
}

impl Default for AgmonOptions {
    fn default() -> Self {
        AgmonOptions {
            knots: 64,
            reduced_modes: 16,
            cluster_ratio: 1.05,
            max_cycles: 30,
            max_iterations: 300,
            tol: 1e-9,
            refine: true,
            harmonic_restart: true,
            random_restarts: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RestartSummary {
    pub label: String,
    pub initial_length: f64,
    pub distance: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeodesicResult {
    /// `√e` of the optimized constant-speed path (equal to its length).
    pub distance: f64,
    pub path: Path,
    pub length: f64,
    pub energy: f64,
    /// Length of a concrete path, hence a rigorous upper bound on the
    /// discretized distance.
    pub upper_bound: f64,
    /// `¼|‖k‖²_H − ‖h‖²_H|` when the potential is the free field.
    pub lower_bound: Option<f64>,
    pub straight_length: f64,
    pub converged: bool,
    pub iterations: usize,
    /// `|d(2M) − d(M)|` from the refinement pass.
    pub refinement_change: Option<f64>,
    pub restarts: Vec<RestartSummary>,
}

/// Energy and its gradient with respect to the leading `reduced` coefficients
/// of every interior knot; times are fixed.
fn energy_and_gradient(
    pot: &ClassicalPotential,
    times: &[f64],
    knots: &[DVector<f64>],
    reduced: usize,
) -> (f64, DVector<f64>) {
    let segs = knots.len() - 1;
    let mut e = 0.0;
    let mut grad = DVector::zeros((segs - 1) * reduced);
    for i in 0..segs {
        let d = &knots[i + 1] - &knots[i];
        let mid = (&knots[i] + &knots[i + 1]) * 0.5;
        let (u, gu) = pot.value_and_gradient(&mid);
        let dt = times[i + 1] - times[i];
        let dd = d.norm_squared();
        let (u, gu) = if u > 0.0 { (u, gu) } else { (0.0, gu * 0.0) };
        e += u * dd / dt;
        // Knot i (left end) and knot i + 1 (right end) of segment i.
        for (knot, sign) in [(i, -1.0), (i + 1, 1.0)] {
            if knot == 0 || knot == segs {
                continue;
            }
            let off = (knot - 1) * reduced;
            for q in 0..reduced {
                grad[off + q] += 0.5 * gu[q] * dd / dt + sign * 2.0 * u * d[q] / dt;
            }
        }
    }
    (e, grad)
}

struct Optimized {
    path: Path,
    length: f64,
    converged: bool,
    iterations: usize,
}

fn optimize_path(pot: &ClassicalPotential, start: Path, opts: &AgmonOptions) -> Result<Optimized> {
    let reduced = opts.reduced_modes.clamp(1, pot.basis().len());
    let mut path = reparametrize_constant_speed(pot, &start)?;
    let mut length = path_length(pot, &path)?;
    let mut iterations = 0;
    let mut converged = false;
    let lopts = LbfgsOptions {
        max_iterations: opts.max_iterations,
        gradient_tol: 1e-12,
        value_tol: 1e-15,
        ..Default::default()
    };
    for _ in 0..opts.max_cycles {
        if path.segments() < 2 {
            converged = true;
            break;
        }
        let times = path.times.clone();
        let template = path.knots.clone();
        let interior = template.len() - 2;
        let mut x0 = DVector::zeros(interior * reduced);
        for j in 0..interior {
            x0.rows_mut(j * reduced, reduced).copy_from(&template[j + 1].rows(0, reduced));
        }
        let unpack = |x: &DVector<f64>| {
            let mut knots = template.clone();
            for j in 0..interior {
                knots[j + 1].rows_mut(0, reduced).copy_from(&x.rows(j * reduced, reduced));
            }
            knots
        };
        let out = lbfgs(|x| energy_and_gradient(pot, &times, &unpack(x), reduced), x0, &lopts);
        iterations += out.iterations;
        let candidate = Path::from_coefficients(path.basis.clone(), times, unpack(&out.x))?;
        let candidate = reparametrize_constant_speed(pot, &candidate)?;
        let new_length = path_length(pot, &candidate)?;
        if new_length <= length {
            let change = (length - new_length) / length;
            path = candidate;
            length = new_length;
            if change <= opts.tol {
                converged = true;
                break;
            }
        } else {
            converged = true;
            break;
        }
    }
    Ok(Optimized {
        path,
        length,
        converged,
        iterations,
    })
}

/// Samples the harmonic extension at `segments + 1` uniform times of `[0, T]`
/// and returns it with its closed-form free action `I_{T,0}(f)`.
pub fn harmonic_extension(basis: &Arc<ModeBasis>, h: &Field, k: &Field, t: f64, segments: usize) -> Result<(Path, f64)> {
    h.check_basis(k)?;
    if !basis.same_as(h.basis()) {
        return Err(Error::BasisMismatch);
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid("T", format!("must be positive, got {t}")));
    }
    if segments == 0 {
        return Err(Error::invalid("knots", "need at least one segment"));
    }
    let w = basis.frequencies();
    let (hc, kc) = (h.coefficients(), k.coefficients());
    let times: Vec<f64> = (0..=segments).map(|i| t * i as f64 / segments as f64).collect();
    let knots = times
        .iter()
        .map(|&s| {
            DVector::from_iterator(
                w.len(),
                (0..w.len()).map(|q| {
                    let (a, b) = harmonic_extension_weights(w[q], t, s);
                    a * kc[q] + b * hc[q]
                }),
            )
        })
        .collect();
    let action = (0..w.len())
        .map(|q| {
            let s = (-w[q] * t).exp();
            0.25 * w[q] * ((hc[q] * hc[q] + kc[q] * kc[q]) * (1.0 + s * s) - 4.0 * s * hc[q] * kc[q]) / (1.0 - s * s)
        })
        .sum();
    Ok((Path::from_coefficients(basis.clone(), times, knots)?, action))
}

/// Per-mode weights `(α, β)` with `f(t) = α k + β h`.
pub fn harmonic_extension_weights(w: f64, t_total: f64, t: f64) -> (f64, f64) {
    let s_t = (-w * t_total).exp();
    let denom = 1.0 - s_t * s_t;
    let a = (-w * (t_total - t)).exp();
    let b = (-w * t).exp();
    // S_{T−t}(k − S_T h) + S_t(h − S_T k), all over (1 − S_{2T}).
    ((a - b * s_t) / denom, (b - a * s_t) / denom)
}

fn is_free(pot: &ClassicalPotential) -> bool {
    pot.polynomial().is_zero() || pot.cutoff().samples().iter().all(|&g| g == 0.0)
}

/// Agmon distance by energy minimization over discretized paths.
pub fn agmon_distance(pot: &ClassicalPotential, h: &Field, k: &Field, opts: &AgmonOptions) -> Result<GeodesicResult> {
    h.check_basis(k)?;
    if !pot.basis().same_as(h.basis()) {
        return Err(Error::BasisMismatch);
    }
    let lower_bound = is_free(pot).then(|| {
        0.25 * (sobolev_norm(k, 0.5).powi(2) - sobolev_norm(h, 0.5).powi(2)).abs()
    });
    let straight = Path::straight(h, k, opts.knots.max(1), 1.0, opts.cluster_ratio)?;
    let straight_length = path_length(pot, &straight)?;
    if h.coefficients() == k.coefficients() || straight_length == 0.0 {
        return Ok(GeodesicResult {
            distance: 0.0,
            length: straight_length,
            energy: 0.0,
            upper_bound: 0.0,
            lower_bound,
            straight_length,
            converged: true,
            iterations: 0,
            refinement_change: None,
            restarts: Vec::new(),
            path: straight,
        });
    }

    let mut starts = vec![("straight".to_string(), straight.clone())];
    if opts.harmonic_restart {
        let t_ext = 2.0 / pot.mass();
        let (ext, _) = harmonic_extension(pot.basis(), h, k, t_ext, opts.knots.max(1))?;
        let ext = Path::from_coefficients(
            ext.basis.clone(),
            ext.times.iter().map(|t| t / t_ext).collect(),
            ext.knots,
        )?;
        starts.push(("harmonic-extension".to_string(), ext));
    }
    let reduced = opts.reduced_modes.clamp(1, pot.basis().len());
    let scale = (k.coefficients() - h.coefficients()).norm();
    for r in 0..opts.random_restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(r as u64));
        let xi: Vec<f64> = (0..reduced).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut p = straight.clone();
        let n = p.segments() as f64;
        for (j, c) in p.knots.iter_mut().enumerate().skip(1) {
            let bump = 0.2 * scale * (std::f64::consts::PI * j as f64 / n).sin();
            for q in 0..reduced {
                c[q] += bump * xi[q] / (reduced as f64).sqrt();
            }
        }
        *p.knots.last_mut().unwrap() = k.coefficients().clone();
        starts.push((format!("random-{r}"), p));
    }

    let runs: Vec<Result<(String, f64, Optimized)>> = starts
        .into_par_iter()
        .map(|(label, p)| {
            let initial = path_length(pot, &p)?;
            Ok((label, initial, optimize_path(pot, p, opts)?))
        })
        .collect();
    let mut restarts = Vec::new();
    let mut best: Option<Optimized> = None;
    for run in runs {
        let (label, initial_length, out) = run?;
        restarts.push(RestartSummary {
            label,
            initial_length,
            distance: out.length,
            converged: out.converged,
        });
        if best.as_ref().map_or(true, |b| out.length < b.length) {
            best = Some(out);
        }
    }
    let mut best = best.expect("at least the straight start ran");

    let mut refinement_change = None;
    if opts.refine {
        let coarse = best.length;
        let fine = optimize_path(pot, best.path.refined(), opts)?;
        refinement_change = Some((fine.length - coarse).abs());
        let iterations = best.iterations + fine.iterations;
        best = Optimized {
            iterations,
            converged: best.converged && fine.converged,
            ..fine
        };
    }

    let energy = path_energy(pot, &best.path)?;
    if !best.converged {
        log::warn!("agmon_distance: optimizer did not converge; {:.6} is an upper bound only", best.length);
    }
    Ok(GeodesicResult {
        distance: energy.sqrt(),
        length: best.length,
        energy,
        upper_bound: best.length,
        lower_bound,
        straight_length,
        converged: best.converged,
        iterations: best.iterations,
        refinement_change,
        restarts,
        path: best.path,
    })
}

/// `∫√Q` between two points of the line.
pub fn agmon_1dim(q: impl Fn(f64) -> f64, x_left: f64, x_right: f64) -> Result<f64> {
    let mut negative: Option<(f64, f64)> = None;
    let value = quadrature::integrate(
        |x| {
            let v = q(x);
            if v < 0.0 {
                negative.get_or_insert((v, x));
                0.0
            } else {
                v.sqrt()
            }
        },
        x_left,
        x_right,
        1e-13,
        1e-13,
    )?;
    if let Some((value, at)) = negative {
        return Err(Error::NegativePotential { value, at });
    }
    Ok(value)
}

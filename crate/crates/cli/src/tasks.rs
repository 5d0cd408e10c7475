//! Execution of one configured task.

use serde_json::{json, Value};

use pphi2_core::agmon::{agmon_distance, AgmonOptions};
use pphi2_core::fock::{
    assemble_hamiltonian, gap_scan, low_spectrum, lowest_eigenvalues, semiclassical_limit_check, FockOptions,
    ScanOptions,
};
use pphi2_core::harmonic::{harmonic_ground_energy, truncation_sequence, QuadraticPerturbation};
use pphi2_core::instanton::{minimize_action, scan_t, InstantonOptions};
use pphi2_core::potential::find_minimizers;
use pphi2_core::{ClassicalPotential, Field};

use crate::config::{ExperimentConfig, FieldSpec, PerturbationSpec, TaskConfig};

/// A CSV table; `None` cells are written empty.
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Option<f64>>>,
}

pub struct TaskOutput {
    pub results: Value,
    pub diagnostics: Value,
    pub table: Option<Table>,
    /// Column labels and `(x, y)` rows of `plot.dat`.
    pub plot: Option<((&'static str, &'static str), Vec<(f64, f64)>)>,
    /// Set when the computation finished but did not meet its own
    /// convergence criteria; the output is still written.
    pub failure: Option<String>,
}

impl TaskOutput {
    fn new(results: Value, diagnostics: Value) -> Self {
        TaskOutput {
            results,
            diagnostics,
            table: None,
            plot: None,
            failure: None,
        }
    }
}

fn fields(specs: &[FieldSpec], pot: &ClassicalPotential) -> pphi2_core::Result<Vec<Field>> {
    specs.iter().map(|s| s.build(pot.basis())).collect()
}

fn scan_options(seed: u64) -> ScanOptions {
    let mut opts = ScanOptions::default();
    opts.lanczos.seed = seed;
    opts
}

pub fn run(config: &ExperimentConfig, pot: &ClassicalPotential) -> pphi2_core::Result<TaskOutput> {
    let seed = config.seed;
    match &config.task {
        TaskConfig::Minimize { starts, tol } => {
            let report = find_minimizers(pot, &fields(starts, pot)?, *tol)?;
            let mut out = TaskOutput::new(
                json!({
                    "min_value": report.min_value(),
                    "minimizers": report.minimizers,
                    "saddles": report.saddles,
                }),
                json!({ "starts": report.starts }),
            );
            if report.minimizers.is_empty() {
                out.failure = Some("no minimizer found from the given starts".into());
            }
            Ok(out)
        }
        TaskConfig::Harmonic { v, truncation } => {
            let basis = pot.basis();
            let nodes = basis.grid().num_nodes();
            let samples = match v {
                PerturbationSpec::Constant(c) => vec![*c; nodes],
                PerturbationSpec::Samples(s) => s.clone(),
                PerturbationSpec::At { at } => pot.schrodinger_potential(&at.build(basis)?)?,
            };
            let pert = QuadraticPerturbation::new(samples)?;
            let report = harmonic_ground_energy(basis, &pert)?;
            let mut out = TaskOutput::new(
                json!({
                    "energy": report.energy,
                    "hs_norm": report.hs_norm,
                    "modes": report.modes,
                }),
                json!({ "min_eigenvalue": report.min_eigenvalue }),
            );
            if !truncation.is_empty() {
                let seq = truncation_sequence(basis, &pert, truncation)?;
                out.results["truncation"] = json!(seq.iter().map(|(k, e)| json!({"modes": k, "energy": e})).collect::<Vec<_>>());
                out.table = Some(Table {
                    columns: vec!["modes", "energy"],
                    rows: seq.iter().map(|(k, e)| vec![Some(*k as f64), Some(*e)]).collect(),
                });
                out.plot = Some((("modes", "energy"), seq.iter().map(|(k, e)| (*k as f64, *e)).collect()));
            }
            Ok(out)
        }
        TaskConfig::Agmon { from, to, knots, reduced_modes, random_restarts, tol, refine } => {
            let defaults = AgmonOptions::default();
            let opts = AgmonOptions {
                knots: knots.unwrap_or(defaults.knots),
                reduced_modes: reduced_modes.unwrap_or(defaults.reduced_modes),
                random_restarts: random_restarts.unwrap_or(defaults.random_restarts),
                tol: tol.unwrap_or(defaults.tol),
                refine: refine.unwrap_or(defaults.refine),
                seed,
                ..defaults
            };
            let r = agmon_distance(pot, &from.build(pot.basis())?, &to.build(pot.basis())?, &opts)?;
            let mut out = TaskOutput::new(
                json!({
                    "distance": r.distance,
                    "length": r.length,
                    "energy": r.energy,
                    "upper_bound": r.upper_bound,
                    "lower_bound": r.lower_bound,
                    "straight_length": r.straight_length,
                    "path": r.path,
                }),
                json!({
                    "converged": r.converged,
                    "iterations": r.iterations,
                    "refinement_change": r.refinement_change,
                    "restarts": r.restarts,
                }),
            );
            if !r.distance.is_finite() {
                out.failure = Some("geodesic optimization produced a non-finite distance".into());
            }
            Ok(out)
        }
        TaskConfig::Instanton { from, to, half_widths, dt, tol, max_iterations } => {
            let defaults = InstantonOptions::default();
            let opts = InstantonOptions {
                dt: dt.unwrap_or(defaults.dt),
                tol: tol.unwrap_or(defaults.tol),
                max_iterations: max_iterations.unwrap_or(defaults.max_iterations),
                ..defaults
            };
            let (h, k) = (from.build(pot.basis())?, to.build(pot.basis())?);
            if let [t] = half_widths[..] {
                let (u, r) = minimize_action(pot, &h, &k, t, &opts)?;
                let profile: Vec<(f64, f64)> = u.times().into_iter().zip(u.space_average()).collect();
                let mut out = TaskOutput::new(
                    json!({
                        "half_width": t,
                        "action": r.action,
                        "kinetic": r.kinetic,
                        "potential": r.potential,
                        "action_node_form": r.action_node_form,
                        "residual": r.residual,
                        "space_average": profile,
                    }),
                    json!({ "converged": r.converged, "iterations": r.iterations }),
                );
                out.plot = Some((("t", "space_average"), profile));
                if !r.converged {
                    out.failure = Some(format!("Newton stopped at residual {:e}", r.residual));
                }
                Ok(out)
            } else {
                let rows = scan_t(pot, &h, &k, half_widths, &opts)?;
                let mut out = TaskOutput::new(json!({ "rows": rows }), json!({}));
                out.table = Some(Table {
                    columns: vec!["T", "action", "residual", "converged"],
                    rows: rows
                        .iter()
                        .map(|r| {
                            vec![
                                Some(r.half_width),
                                Some(r.action),
                                Some(r.residual),
                                Some(if r.converged { 1.0 } else { 0.0 }),
                            ]
                        })
                        .collect(),
                });
                out.plot = Some((("T", "action"), rows.iter().map(|r| (r.half_width, r.action)).collect()));
                let bad: Vec<f64> = rows.iter().filter(|r| !r.converged).map(|r| r.half_width).collect();
                if !bad.is_empty() {
                    out.failure = Some(format!("instanton did not converge for T = {bad:?}"));
                }
                Ok(out)
            }
        }
        TaskConfig::Spectrum { lambda, modes, n_max, count } => {
            let h = assemble_hamiltonian(pot, *lambda, *modes, *n_max, &FockOptions::default())?;
            let count = (*count).min(h.dim());
            let spec = lowest_eigenvalues(&h, count, seed)?;
            let mut results = json!({
                "lambda": lambda,
                "dimension": h.dim(),
                "eigenvalues": spec.eigenvalues,
            });
            if h.dim() >= 2 {
                // Parity-resolved and, for tiny splittings, refined gap.
                let low = low_spectrum(&h, &scan_options(seed))?;
                results["gap"] = json!(low.gap);
                results["parities"] = json!(low.parities);
                results["gap_refined"] = json!(low.refined);
                results["precision_limited"] = json!(low.precision_limited);
            }
            Ok(TaskOutput::new(
                results,
                json!({
                    "residuals": spec.residuals,
                    "norm_estimate": spec.norm_estimate,
                    "matvecs": spec.matvecs,
                    "restarts": spec.restarts,
                }),
            ))
        }
        TaskConfig::GapScan { lambdas, modes, n_max } => {
            let rows = gap_scan(pot, lambdas, *modes, *n_max, &scan_options(seed))?;
            let mut out = TaskOutput::new(
                json!({ "rows": rows }),
                json!({
                    "max_residual": rows.iter().map(|r| r.max_residual).fold(0.0, f64::max),
                    "precision_limited": rows.iter().filter(|r| r.precision_limited).map(|r| r.lambda).collect::<Vec<_>>(),
                }),
            );
            out.table = Some(Table {
                columns: vec!["lambda", "E1", "E2", "gap", "log_gap", "slope"],
                rows: rows
                    .iter()
                    .map(|r| vec![Some(r.lambda), Some(r.e1), Some(r.e2), Some(r.gap), r.log_gap, r.slope])
                    .collect(),
            });
            out.plot = Some((
                ("lambda", "log_gap"),
                rows.iter().filter_map(|r| r.log_gap.map(|g| (r.lambda, g))).collect(),
            ));
            Ok(out)
        }
        TaskConfig::LimitCheck { lambdas, modes, n_max, starts } => {
            let check = semiclassical_limit_check(pot, &fields(starts, pot)?, lambdas, *modes, *n_max, &scan_options(seed))?;
            let mut out = TaskOutput::new(
                json!({
                    "min_value": check.min_value,
                    "harmonic_energies": check.harmonic_energies,
                    "rows": check.rows,
                }),
                json!({}),
            );
            out.table = Some(Table {
                columns: vec!["lambda", "E1", "target", "deviation"],
                rows: check
                    .rows
                    .iter()
                    .map(|r| vec![Some(r.lambda), Some(r.e1), Some(r.target), Some(r.deviation)])
                    .collect(),
            });
            out.plot = Some((("lambda", "deviation"), check.rows.iter().map(|r| (r.lambda, r.deviation)).collect()));
            Ok(out)
        }
    }
}

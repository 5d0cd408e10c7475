//! Experiment configuration: parsing (TOML, or JSON by extension) and
//! validation with errors that name the offending field.

use std::path::Path;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use pphi2_core::potential::{make_example_potential, ExampleVariant};
use pphi2_core::{Boundary, ClassicalPotential, CutoffFunction, Field, Grid, ModeBasis, PolynomialPotential};

/// A configuration problem; the message starts with the dotted field path.
#[derive(Debug)]
pub struct ValidationError(pub String);

impl std::fmt::Display for ValidationError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn invalid(field: &str, reason: impl std::fmt::Display) -> ValidationError {
    ValidationError(format!("{field}: {reason}"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub model: ModelConfig,
    pub task: TaskConfig,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "one")]
    pub mass: f64,
    pub length: f64,
    pub boundary: String,
    /// Grid nodes `N`.
    pub nodes: usize,
    /// Retained modes; all `N` when absent.
    #[serde(default)]
    pub modes: Option<usize>,
    #[serde(default)]
    pub cutoff: CutoffConfig,
    /// Ascending coefficients of `P`.
    #[serde(default)]
    pub polynomial: Option<Vec<f64>>,
    #[serde(default)]
    pub example: Option<ExampleConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CutoffConfig {
    Named(String),
    Samples(Vec<f64>),
}

impl Default for CutoffConfig {
    fn default() -> Self {
        CutoffConfig::Named("uniform".into())
    }
}

fn default_m0() -> u32 {
    1
}

fn default_variant() -> String {
    "interval".into()
}

/// `a(x² − x₀²)^{2M₀}` double wells.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleConfig {
    pub a: f64,
    pub x0: f64,
    #[serde(default = "default_m0")]
    pub m0: u32,
    #[serde(default = "default_variant")]
    pub variant: String,
}

fn default_amplitude() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FieldSpec {
    Zero,
    Constant {
        value: f64,
    },
    Mode {
        index: usize,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
    Coefficients {
        values: Vec<f64>,
    },
    /// Node values.
    Values {
        values: Vec<f64>,
    },
}

/// Quadratic perturbation `v` for the harmonic task.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerturbationSpec {
    Constant(f64),
    Samples(Vec<f64>),
    /// `v = ½P″(h)g` at a field `h`.
    At { at: FieldSpec },
}

fn default_tol() -> f64 {
    1e-10
}

fn default_count() -> usize {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TaskConfig {
    Minimize {
        starts: Vec<FieldSpec>,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    Harmonic {
        v: PerturbationSpec,
        /// Mode counts for a truncation table.
        #[serde(default)]
        truncation: Vec<usize>,
    },
    Agmon {
        from: FieldSpec,
        to: FieldSpec,
        #[serde(default)]
        knots: Option<usize>,
        #[serde(default)]
        reduced_modes: Option<usize>,
        #[serde(default)]
        random_restarts: Option<usize>,
        #[serde(default)]
        tol: Option<f64>,
        #[serde(default)]
        refine: Option<bool>,
    },
    Instanton {
        from: FieldSpec,
        to: FieldSpec,
        /// Half-widths `T`; more than one runs a scan.
        half_widths: Vec<f64>,
        #[serde(default)]
        dt: Option<f64>,
        #[serde(default)]
        tol: Option<f64>,
        #[serde(default)]
        max_iterations: Option<usize>,
    },
    Spectrum {
        lambda: f64,
        modes: usize,
        n_max: u32,
        #[serde(default = "default_count")]
        count: usize,
    },
    GapScan {
        lambdas: Vec<f64>,
        modes: usize,
        n_max: u32,
    },
    LimitCheck {
        lambdas: Vec<f64>,
        modes: usize,
        n_max: u32,
        #[serde(default)]
        starts: Vec<FieldSpec>,
    },
}

impl TaskConfig {
    pub fn name(&self) -> &'static str {
        match self {
            TaskConfig::Minimize { .. } => "minimize",
            TaskConfig::Harmonic { .. } => "harmonic",
            TaskConfig::Agmon { .. } => "agmon",
            TaskConfig::Instanton { .. } => "instanton",
            TaskConfig::Spectrum { .. } => "spectrum",
            TaskConfig::GapScan { .. } => "gap-scan",
            TaskConfig::LimitCheck { .. } => "limit-check",
        }
    }
}

pub fn load(path: &Path) -> Result<ExperimentConfig, ValidationError> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid("config", format!("cannot read {}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let config: ExperimentConfig = if is_json {
        serde_json::from_str(&text).map_err(|e| invalid("config", e))?
    } else {
        toml::from_str(&text).map_err(|e| invalid("config", e))?
    };
    config.validate()?;
    Ok(config)
}

fn positive(field: &str, v: f64) -> Result<(), ValidationError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be a positive finite number, got {v}")))
    }
}

fn finite_all(field: &str, v: &[f64]) -> Result<(), ValidationError> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(invalid(&format!("{field}[{i}]"), "must be finite")),
        None => Ok(()),
    }
}

fn increasing(field: &str, v: &[f64], min_len: usize) -> Result<(), ValidationError> {
    if v.len() < min_len {
        return Err(invalid(field, format!("need at least {min_len} values, got {}", v.len())));
    }
    for (i, x) in v.iter().enumerate() {
        positive(&format!("{field}[{i}]"), *x)?;
    }
    if v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid(field, "values must be strictly increasing"));
    }
    Ok(())
}

fn at_least(field: &str, v: usize, min: usize) -> Result<(), ValidationError> {
    if v < min {
        Err(invalid(field, format!("must be at least {min}, got {v}")))
    } else {
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ValidationError> {
        let m = &self.model;
        positive("model.mass", m.mass)?;
        positive("model.length", m.length)?;
        m.boundary.parse::<Boundary>().map_err(|e| invalid("model.boundary", root_reason(&e)))?;
        at_least("model.nodes", m.nodes, 1)?;
        if let Some(k) = m.modes {
            if k == 0 || k > m.nodes {
                return Err(invalid("model.modes", format!("need 1..={}, got {k}", m.nodes)));
            }
        }
        match &m.cutoff {
            CutoffConfig::Named(s) if s == "uniform" => {}
            CutoffConfig::Named(s) => return Err(invalid("model.cutoff", format!("expected \"uniform\" or a list of samples, got \"{s}\""))),
            CutoffConfig::Samples(g) => {
                if g.len() != m.nodes {
                    return Err(invalid("model.cutoff", format!("need {} samples, got {}", m.nodes, g.len())));
                }
                if let Some(i) = g.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(invalid(&format!("model.cutoff[{i}]"), "samples must be finite and nonnegative"));
                }
            }
        }
        match (&m.polynomial, &m.example) {
            (Some(_), Some(_)) => return Err(invalid("model", "give either `polynomial` or `example`, not both")),
            (Some(p), None) => finite_all("model.polynomial", p)?,
            (None, Some(ex)) => {
                positive("model.example.a", ex.a)?;
                positive("model.example.x0", ex.x0)?;
                if ex.m0 == 0 {
                    return Err(invalid("model.example.m0", "must be at least 1"));
                }
                parse_variant(&ex.variant)?;
            }
            (None, None) => {}
        }
        let modes = m.modes.unwrap_or(m.nodes);
        let check_field = |field: &str, f: &FieldSpec| -> Result<(), ValidationError> {
            match f {
                FieldSpec::Zero => Ok(()),
                FieldSpec::Constant { value } => finite_all(&format!("{field}.value"), &[*value]),
                FieldSpec::Mode { index, amplitude } => {
                    if *index >= modes {
                        return Err(invalid(&format!("{field}.index"), format!("need 0..{modes}, got {index}")));
                    }
                    finite_all(&format!("{field}.amplitude"), &[*amplitude])
                }
                FieldSpec::Coefficients { values } => {
                    if values.len() != modes {
                        return Err(invalid(&format!("{field}.values"), format!("need {modes} coefficients, got {}", values.len())));
                    }
                    finite_all(&format!("{field}.values"), values)
                }
                FieldSpec::Values { values } => {
                    if values.len() != m.nodes {
                        return Err(invalid(&format!("{field}.values"), format!("need {} node values, got {}", m.nodes, values.len())));
                    }
                    finite_all(&format!("{field}.values"), values)
                }
            }
        };
        let fock = |k: usize, n_max: u32| -> Result<(), ValidationError> {
            if k == 0 || k > modes {
                return Err(invalid("task.modes", format!("need 1..={modes}, got {k}")));
            }
            at_least("task.n_max", n_max as usize, 1)
        };
        match &self.task {
            TaskConfig::Minimize { starts, tol } => {
                at_least("task.starts", starts.len(), 1)?;
                for (i, s) in starts.iter().enumerate() {
                    check_field(&format!("task.starts[{i}]"), s)?;
                }
                positive("task.tol", *tol)?;
            }
            TaskConfig::Harmonic { v, truncation } => {
                match v {
                    PerturbationSpec::Constant(c) => finite_all("task.v", &[*c])?,
                    PerturbationSpec::Samples(s) => {
                        if s.len() != m.nodes {
                            return Err(invalid("task.v", format!("need {} samples, got {}", m.nodes, s.len())));
                        }
                        finite_all("task.v", s)?;
                    }
                    PerturbationSpec::At { at } => check_field("task.v.at", at)?,
                }
                for (i, &k) in truncation.iter().enumerate() {
                    if k == 0 || k > modes {
                        return Err(invalid(&format!("task.truncation[{i}]"), format!("need 1..={modes}, got {k}")));
                    }
                }
            }
            TaskConfig::Agmon { from, to, knots, reduced_modes, tol, .. } => {
                check_field("task.from", from)?;
                check_field("task.to", to)?;
                if let Some(n) = knots {
                    at_least("task.knots", *n, 2)?;
                }
                if let Some(r) = reduced_modes {
                    at_least("task.reduced_modes", *r, 1)?;
                }
                if let Some(t) = tol {
                    positive("task.tol", *t)?;
                }
            }
            TaskConfig::Instanton { from, to, half_widths, dt, tol, max_iterations } => {
                check_field("task.from", from)?;
                check_field("task.to", to)?;
                increasing("task.half_widths", half_widths, 1)?;
                if let Some(d) = dt {
                    positive("task.dt", *d)?;
                }
                if let Some(t) = tol {
                    positive("task.tol", *t)?;
                }
                if let Some(n) = max_iterations {
                    at_least("task.max_iterations", *n, 1)?;
                }
            }
            TaskConfig::Spectrum { lambda, modes: k, n_max, count } => {
                positive("task.lambda", *lambda)?;
                fock(*k, *n_max)?;
                at_least("task.count", *count, 1)?;
            }
            TaskConfig::GapScan { lambdas, modes: k, n_max } => {
                increasing("task.lambdas", lambdas, 1)?;
                fock(*k, *n_max)?;
            }
            TaskConfig::LimitCheck { lambdas, modes: k, n_max, starts } => {
                increasing("task.lambdas", lambdas, 1)?;
                fock(*k, *n_max)?;
                for (i, s) in starts.iter().enumerate() {
                    check_field(&format!("task.starts[{i}]"), s)?;
                }
            }
        }
        Ok(())
    }

    /// The discretized potential described by the model block.
    pub fn potential(&self) -> Result<ClassicalPotential, ValidationError> {
        let m = &self.model;
        let boundary: Boundary = m.boundary.parse().map_err(|e| invalid("model.boundary", root_reason(&e)))?;
        let grid = Grid::new(m.length, m.nodes, boundary).map_err(|e| invalid("model", root_reason(&e)))?;
        let basis = match m.modes {
            Some(k) => ModeBasis::with_modes(grid, m.mass, k),
            None => ModeBasis::new(grid, m.mass),
        }
        .map_err(|e| invalid("model", root_reason(&e)))?;
        let basis = Arc::new(basis);
        let cutoff = match &m.cutoff {
            CutoffConfig::Named(_) => CutoffFunction::uniform(&basis),
            CutoffConfig::Samples(g) => CutoffFunction::new(g.clone()).map_err(|e| invalid("model.cutoff", root_reason(&e)))?,
        };
        match (&m.polynomial, &m.example) {
            (Some(p), _) => {
                let poly = PolynomialPotential::new(p.clone()).map_err(|e| invalid("model.polynomial", root_reason(&e)))?;
                ClassicalPotential::new(basis, poly, cutoff).map_err(|e| invalid("model", root_reason(&e)))
            }
            (None, Some(ex)) => make_example_potential(ex.a, ex.x0, ex.m0, parse_variant(&ex.variant)?, basis, cutoff)
                .map_err(|e| invalid("model.example", root_reason(&e))),
            (None, None) => ClassicalPotential::new(basis, PolynomialPotential::zero(), cutoff)
                .map_err(|e| invalid("model", root_reason(&e))),
        }
    }
}

fn parse_variant(s: &str) -> Result<ExampleVariant, ValidationError> {
    match s {
        "interval" => Ok(ExampleVariant::Interval),
        "shifted" => Ok(ExampleVariant::Shifted),
        other => Err(invalid("model.example.variant", format!("unknown variant `{other}` (expected interval or shifted)"))),
    }
}

/// The reason part of a core parameter error, without its own field prefix.
fn root_reason(e: &pphi2_core::Error) -> String {
    match e {
        pphi2_core::Error::InvalidParameter { name, reason } => format!("{name}: {reason}"),
        other => other.to_string(),
    }
}

impl FieldSpec {
    pub fn build(&self, basis: &Arc<ModeBasis>) -> pphi2_core::Result<Field> {
        match self {
            FieldSpec::Zero => Ok(Field::zero(basis)),
            FieldSpec::Constant { value } => Ok(Field::constant(basis, *value)),
            FieldSpec::Mode { index, amplitude } => Ok(Field::mode(basis, *index)?.scaled(*amplitude)),
            FieldSpec::Coefficients { values } => Field::from_coefficients(basis, DVector::from_column_slice(values)),
            FieldSpec::Values { values } => Field::from_values(basis, values),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        [model]
        length = 2.0
        boundary = "periodic"
        nodes = 8
        example = { a = 1.0, x0 = 1.0 }

        [task]
        kind = "gap-scan"
        lambdas = [4.0, 6.0]
        modes = 1
        n_max = 40
    "#;

    fn parse(text: &str) -> ExperimentConfig {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn parses_and_validates() {
        let c = parse(BASE);
        c.validate().unwrap();
        assert_eq!(c.task.name(), "gap-scan");
        assert!(c.potential().unwrap().is_even());
    }

    #[test]
    fn bad_boundary_names_field() {
        let c = parse(&BASE.replace("\"periodic\"", "\"toroidal\""));
        let e = c.validate().unwrap_err();
        assert!(e.0.starts_with("model.boundary"), "{e}");
    }

    #[test]
    fn lambdas_must_increase() {
        let c = parse(&BASE.replace("[4.0, 6.0]", "[6.0, 4.0]"));
        assert!(c.validate().unwrap_err().0.starts_with("task.lambdas"));
    }

    #[test]
    fn mode_index_checked() {
        let text = BASE.replace(
            "kind = \"gap-scan\"\n        lambdas = [4.0, 6.0]\n        modes = 1\n        n_max = 40",
            "kind = \"agmon\"\n        from = { kind = \"zero\" }\n        to = { kind = \"mode\", index = 9 }",
        );
        let e = parse(&text).validate().unwrap_err();
        assert!(e.0.starts_with("task.to.index"), "{e}");
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<ExperimentConfig>(&BASE.replace("nodes = 8", "nodes = 8\n        nodez = 3")).is_err());
    }

    #[test]
    fn json_and_toml_agree() {
        let c = parse(BASE);
        let json = serde_json::to_string(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn shipped_configs_load() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
        let mut n = 0;
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            let c = load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            c.potential().unwrap();
            n += 1;
        }
        assert!(n >= 8);
    }
}

//! Experiment configuration: JSON schema and field-level validation.

use std::fmt;

use fermicert_core::dynamics::TimeProfile;
use fermicert_core::fock::{MonoSymbol, DENSE_SITE_CAP};
use fermicert_core::geometry::Boundary;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Default cap on `|Λ|`.
pub const DEFAULT_MAX_SITES: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    LrCertify,
    CondexpCheck,
    GapCertify,
    FlowCheck,
    ModelInfo,
}

impl Task {
    pub const ALL: [Task; 5] =
        [Task::LrCertify, Task::CondexpCheck, Task::GapCertify, Task::FlowCheck, Task::ModelInfo];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::LrCertify => "lr-certify",
            Task::CondexpCheck => "condexp-check",
            Task::GapCertify => "gap-certify",
            Task::FlowCheck => "flow-check",
            Task::ModelInfo => "model-info",
        }
    }

    fn parse(s: &str) -> Option<Task> {
        Task::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    #[serde(default)]
    pub dimension: Option<usize>,
    pub lengths: Vec<usize>,
    #[serde(default = "open")]
    pub boundary: Boundary,
}

impl LatticeSpec {
    pub fn sites(&self) -> usize {
        self.lengths.iter().product()
    }

    pub fn dimension(&self) -> usize {
        self.lengths.len()
    }
}

fn open() -> Boundary {
    Boundary::Open
}

fn one() -> f64 {
    1.0
}

fn default_pairing() -> f64 {
    0.8
}

fn default_width() -> usize {
    2
}

fn default_theta() -> f64 {
    0.6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    HoppingChain {
        #[serde(default = "one")]
        j: f64,
        #[serde(default)]
        mu: f64,
        /// Time profile of the hopping amplitude; overrides `j`.
        #[serde(default)]
        ramp: Option<TimeProfile>,
    },
    KitaevChain {
        #[serde(default = "one")]
        hopping: f64,
        #[serde(default = "default_pairing")]
        pairing: f64,
        /// Defaults to the frustration-free value.
        #[serde(default)]
        mu: Option<f64>,
    },
    FlatBand {
        #[serde(default = "default_width")]
        width: usize,
        #[serde(default = "default_theta")]
        theta: f64,
        #[serde(default)]
        phase: f64,
    },
    RandomEven {
        #[serde(default = "one")]
        range: f64,
        #[serde(default = "one")]
        strength: f64,
    },
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::HoppingChain { .. } => "hopping_chain",
            ModelSpec::KitaevChain { .. } => "kitaev_chain",
            ModelSpec::FlatBand { .. } => "flat_band",
            ModelSpec::RandomEven { .. } => "random_even",
        }
    }

    fn chain_only(&self) -> bool {
        !matches!(self, ModelSpec::RandomEven { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FFunctionSpec {
    pub nu: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub a: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Valence,
    Conduction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    /// `Σ_{x∈sites} a*_x a_x`.
    Number {
        sites: Vec<u32>,
    },
    Annihilator {
        site: u32,
    },
    Creator {
        site: u32,
    },
    /// `θ` restricted to `sites`.
    Parity {
        sites: Vec<u32>,
    },
    /// One symbol per lattice site.
    Monomial {
        label: Vec<MonoSymbol>,
    },
    /// Dressed flat-band annihilator `b_k` or `c_l`.
    Band {
        band: Band,
        index: usize,
    },
}

impl ObservableSpec {
    pub fn label(&self) -> String {
        serde_json::to_string(self).expect("observable descriptors serialize")
    }

    fn sites(&self) -> Vec<u32> {
        match self {
            ObservableSpec::Number { sites } | ObservableSpec::Parity { sites } => sites.clone(),
            ObservableSpec::Annihilator { site } | ObservableSpec::Creator { site } => vec![*site],
            ObservableSpec::Monomial { .. } | ObservableSpec::Band { .. } => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Observables {
    pub a: ObservableSpec,
    pub b: ObservableSpec,
    /// `commutator` or `anticommutator`; chosen from the parities when absent.
    #[serde(default)]
    pub mode: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    #[serde(default)]
    pub start: f64,
    #[serde(default = "default_end")]
    pub end: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_step")]
    pub step: f64,
    /// Samples for `∂_Φ X` and `∫‖Φ‖_G`.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_end() -> f64 {
    2.0
}

fn default_points() -> usize {
    41
}

fn default_step() -> f64 {
    fermicert_core::dynamics::DEFAULT_STEP
}

fn default_samples() -> usize {
    fermicert_core::geometry::DEFAULT_TIME_GRID
}

impl Default for TimeSpec {
    fn default() -> Self {
        Self {
            start: 0.0,
            end: default_end(),
            points: default_points(),
            step: default_step(),
            samples: default_samples(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CondExpSpec {
    /// `X`.
    pub region: Vec<u32>,
    /// `Y` for the composition and product identities; defaults to the complement of `X`.
    #[serde(default)]
    pub other: Option<Vec<u32>>,
    #[serde(default = "default_condexp_samples")]
    pub samples: usize,
}

fn default_condexp_samples() -> usize {
    20
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowPath {
    /// Orbital angle `θ(s) = θ_0 + s (θ_1 − θ_0)`.
    Rotation,
    /// Valence terms scaled by `1 − s`.
    GapClosing,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    #[serde(default = "rotation")]
    pub path: FlowPath,
    #[serde(default = "default_theta_to")]
    pub theta_to: f64,
    #[serde(default = "default_flow_points")]
    pub points: usize,
    #[serde(default = "default_gap_min")]
    pub gap_min: f64,
}

fn rotation() -> FlowPath {
    FlowPath::Rotation
}

fn default_theta_to() -> f64 {
    1.2
}

fn default_flow_points() -> usize {
    21
}

fn default_gap_min() -> f64 {
    0.01
}

impl Default for FlowSpec {
    fn default() -> Self {
        Self {
            path: FlowPath::Rotation,
            theta_to: default_theta_to(),
            points: default_flow_points(),
            gap_min: default_gap_min(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: String,
    /// File stem for the reports; defaults to the task name.
    #[serde(default)]
    pub stem: Option<String>,
}

fn default_dir() -> String {
    "fermicert-out".into()
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: default_dir(), stem: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    pub lattice: LatticeSpec,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub f_function: Option<FFunctionSpec>,
    #[serde(default)]
    pub observables: Option<Observables>,
    #[serde(default)]
    pub time: TimeSpec,
    #[serde(default)]
    pub condexp: Option<CondExpSpec>,
    #[serde(default)]
    pub flow: FlowSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default = "default_max_sites")]
    pub max_sites: usize,
}

fn default_max_sites() -> usize {
    DEFAULT_MAX_SITES
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    /// Dotted path of the offending field.
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

struct Checker<'a> {
    root: &'a serde_json::Map<String, Value>,
    out: Vec<Diagnostic>,
}

impl<'a> Checker<'a> {
    fn section<T: DeserializeOwned>(&mut self, field: &str, required: bool) -> Option<T> {
        match self.root.get(field) {
            None | Some(Value::Null) => {
                if required {
                    self.out.push(Diagnostic::new(field, "missing required field"));
                }
                None
            }
            Some(v) => match serde_json::from_value(v.clone()) {
                Ok(t) => Some(t),
                Err(e) => {
                    self.out.push(Diagnostic::new(field, e.to_string()));
                    None
                }
            },
        }
    }

    fn push(&mut self, field: &str, message: impl Into<String>) {
        self.out.push(Diagnostic::new(field, message));
    }
}

const KNOWN_FIELDS: [&str; 12] = [
    "task",
    "lattice",
    "model",
    "f_function",
    "observables",
    "time",
    "condexp",
    "flow",
    "output",
    "seed",
    "tolerance",
    "max_sites",
];

/// Schema and cross-field checks; an empty list means the config is usable.
pub fn validate(config: &Value) -> Vec<Diagnostic> {
    let Some(root) = config.as_object() else {
        return vec![Diagnostic::new("", "config must be a JSON object")];
    };
    let mut c = Checker { root, out: Vec::new() };
    for key in root.keys() {
        if !KNOWN_FIELDS.contains(&key.as_str()) {
            c.push(key, "unknown field");
        }
    }
    let task = match root.get("task") {
        None => {
            c.push("task", "missing required field");
            None
        }
        Some(Value::String(s)) => {
            let t = Task::parse(s);
            if t.is_none() {
                let names: Vec<_> = Task::ALL.iter().map(|t| t.as_str()).collect();
                c.push("task", format!("unknown task {s:?}; expected one of {}", names.join(", ")));
            }
            t
        }
        Some(_) => {
            c.push("task", "must be a string");
            None
        }
    };
    let max_sites: usize = c.section("max_sites", false).unwrap_or(DEFAULT_MAX_SITES);
    if max_sites > DENSE_SITE_CAP {
        c.push("max_sites", format!("cannot exceed the dense limit of {DENSE_SITE_CAP} sites"));
    }
    let lattice: Option<LatticeSpec> = c.section("lattice", true);
    if let Some(l) = &lattice {
        if l.lengths.is_empty() || l.lengths.contains(&0) {
            c.push("lattice.lengths", "side lengths must be positive");
        } else if l.sites() > max_sites {
            c.push("lattice.lengths", format!("|Λ| = {} exceeds the cap of {max_sites} sites", l.sites()));
        }
        if let Some(d) = l.dimension {
            if d != l.lengths.len() {
                c.push("lattice.dimension", format!("dimension {d} does not match {} side lengths", l.lengths.len()));
            }
        }
    }
    let n = lattice.as_ref().map_or(0, |l| l.sites());
    let model_required = !matches!(task, Some(Task::CondexpCheck) | None);
    let model: Option<ModelSpec> = c.section("model", model_required);
    if let (Some(m), Some(l)) = (&model, &lattice) {
        if m.chain_only() && l.dimension() != 1 {
            c.push("model", format!("{} is defined on one-dimensional chains", m.name()));
        }
        if n < 2 {
            c.push("lattice.lengths", "models need at least two sites");
        }
        if matches!(m, ModelSpec::KitaevChain { .. }) && l.boundary == Boundary::Periodic {
            c.push("lattice.boundary", "kitaev_chain is built with open boundaries");
        }
        if let ModelSpec::FlatBand { width, .. } = m {
            if *width < 2 || n % width != 0 {
                c.push("model.width", format!("cell width {width} does not tile {n} sites"));
            }
        }
    }
    let f: Option<FFunctionSpec> = c.section("f_function", task == Some(Task::LrCertify));
    if let Some(f) = f {
        if !(f.nu > 0.0 && f.epsilon > 0.0 && f.a >= 0.0) {
            c.push("f_function", "need nu > 0, epsilon > 0 and a ≥ 0");
        }
    }
    let observables: Option<Observables> = c.section("observables", task == Some(Task::LrCertify));
    if let Some(obs) = &observables {
        for (name, spec) in [("a", &obs.a), ("b", &obs.b)] {
            let field = format!("observables.{name}");
            if spec.sites().iter().any(|&s| s as usize >= n) {
                c.push(&field, format!("site outside the {n}-site lattice"));
            }
            if let ObservableSpec::Monomial { label } = spec {
                if label.len() != n {
                    c.push(&field, format!("label has {} symbols for {n} sites", label.len()));
                }
            }
            if matches!(spec, ObservableSpec::Band { .. }) && !matches!(model, Some(ModelSpec::FlatBand { .. })) {
                c.push(&field, "band observables need the flat_band model");
            }
        }
        if let Some(mode) = &obs.mode {
            if mode != "commutator" && mode != "anticommutator" {
                c.push("observables.mode", "expected commutator or anticommutator");
            }
        }
    }
    let time: Option<TimeSpec> = c.section("time", false);
    if let Some(t) = time {
        if !(t.end >= t.start) || t.points < 1 || !(t.step > 0.0) || t.samples < 2 {
            c.push("time", "need end ≥ start, points ≥ 1, step > 0 and samples ≥ 2");
        }
    }
    let condexp: Option<CondExpSpec> = c.section("condexp", task == Some(Task::CondexpCheck));
    if let Some(ce) = &condexp {
        let regions = [Some(&ce.region), ce.other.as_ref()];
        if regions.iter().flatten().any(|r| r.iter().any(|&s| s as usize >= n)) {
            c.push("condexp", format!("region site outside the {n}-site lattice"));
        }
        if ce.samples == 0 {
            c.push("condexp.samples", "need at least one sample");
        }
    }
    let flow: Option<FlowSpec> = c.section("flow", false);
    if task == Some(Task::FlowCheck) {
        if model.is_some() && !matches!(model, Some(ModelSpec::FlatBand { .. })) {
            c.push("model", "flow-check runs on the flat_band model");
        }
        if let Some(fl) = flow {
            if fl.points < 2 || !(fl.gap_min > 0.0) {
                c.push("flow", "need points ≥ 2 and gap_min > 0");
            }
        }
    }
    if task == Some(Task::GapCertify) {
        if let Some(m) = &model {
            if matches!(m, ModelSpec::HoppingChain { ramp: Some(_), .. }) {
                c.push("model.ramp", "gap-certify needs a time-independent model");
            }
        }
    }
    let _: Option<OutputSpec> = c.section("output", false);
    let _: Option<u64> = c.section("seed", false);
    let tol: Option<f64> = c.section("tolerance", false);
    if tol.is_some_and(|t| !(t > 0.0)) {
        c.push("tolerance", "must be positive");
    }
    c.out
}

/// Validates and deserializes.
pub fn parse(config: &Value) -> Result<ExperimentConfig, Vec<Diagnostic>> {
    let diagnostics = validate(config);
    if !diagnostics.is_empty() {
        return Err(diagnostics);
    }
    serde_json::from_value(config.clone()).map_err(|e| vec![Diagnostic::new("", e.to_string())])
}

//! Task execution.

use std::path::PathBuf;
use std::sync::Arc;
use std::thread;

use fermicert_core::cond_exp::{self, Method, BRUTE_FORCE_CAP, EXACT_COMMUTATOR_CAP};
use fermicert_core::dynamics::{local_hamiltonian, Interaction};
use fermicert_core::fock::{
    build_annihilator, build_creator, monomial, number_operator, parity_operator, FockOperator, Parity, Region, Site,
    SiteSet,
};
use fermicert_core::gap::{self, CertificateStatus, FlowOptions};
use fermicert_core::geometry::{g_from_f, interaction_g_norm, uniform_grid, DecayFunction, MetricGraph};
use fermicert_core::lieb_robinson::{self, BoundMode, CertifyOptions};
use fermicert_core::models::{self, KitaevParams, OrbitalSet};
use fermicert_core::random::{random_normalized, seeded};
use fermicert_core::MonomialLabel;
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Band, ExperimentConfig, FlowPath, ModelSpec, ObservableSpec, Task};
use crate::error::RunError;
use crate::report::{write_csv, write_json, write_plot, ReportPaths};

/// Transport defect accepted by `flow-check` unless overridden.
pub const DEFAULT_FLOW_TOL: f64 = 1e-6;
/// Defect accepted by `condexp-check` unless overridden.
pub const DEFAULT_CONDEXP_TOL: f64 = 1e-12;
/// Slack on `bound ≤ exact gap`.
pub const GAP_SOUNDNESS_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Passed,
    Failed,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub threads: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { threads: thread::available_parallelism().map_or(1, |n| n.get()) }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub status: Status,
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

pub struct Model {
    pub graph: MetricGraph,
    pub phi: Interaction,
    pub orbitals: Option<OrbitalSet>,
}

impl Model {
    pub fn lambda(&self) -> &Arc<SiteSet> {
        self.graph.sites()
    }
}

pub fn lattice(config: &ExperimentConfig) -> Result<MetricGraph, RunError> {
    Ok(MetricGraph::slab(&config.lattice.lengths, config.lattice.boundary)?)
}

pub fn build_model(config: &ExperimentConfig) -> Result<Model, RunError> {
    let graph = lattice(config)?;
    let n = graph.len();
    let boundary = config.lattice.boundary;
    let spec = config
        .model
        .as_ref()
        .ok_or_else(|| RunError::Core(fermicert_core::Error::InvalidArgument("no model configured".into())))?;
    let mut orbitals = None;
    let phi = match spec {
        ModelSpec::HoppingChain { j, mu, ramp } => match ramp {
            Some(profile) => models::ramped_hopping_chain(n, profile.clone(), *mu, boundary)?,
            None => models::hopping_chain(n, *j, *mu, boundary)?,
        },
        ModelSpec::KitaevChain { hopping, pairing, mu } => {
            let params = match mu {
                Some(mu) => KitaevParams { hopping: *hopping, pairing: *pairing, mu: *mu },
                None => KitaevParams::frustration_free(*hopping, *pairing)?,
            };
            models::kitaev_chain(n, &params)?
        }
        ModelSpec::FlatBand { width, theta, phase } => {
            let set = OrbitalSet::cells(graph.clone(), *width, *theta, *phase)?;
            let phi = models::flat_band_model(&set)?;
            orbitals = Some(set);
            phi
        }
        ModelSpec::RandomEven { range, strength } => {
            models::random_even_interaction(&graph, *range, *strength, config.seed)?
        }
    };
    Ok(Model { graph, phi, orbitals })
}

fn region(sites: &[u32]) -> Region {
    sites.iter().map(|&s| Site(s)).collect()
}

pub fn observable(spec: &ObservableSpec, model: &Model) -> Result<FockOperator, RunError> {
    let lambda = model.lambda();
    let op = match spec {
        ObservableSpec::Number { sites } => number_operator(lambda, &region(sites))?,
        ObservableSpec::Annihilator { site } => build_annihilator(lambda, Site(*site))?,
        ObservableSpec::Creator { site } => build_creator(lambda, Site(*site))?,
        ObservableSpec::Parity { sites } => parity_operator(lambda, &region(sites))?,
        ObservableSpec::Monomial { label } => monomial(lambda, &MonomialLabel(label.clone()))?,
        ObservableSpec::Band { band, index } => {
            let set = model.orbitals.as_ref().ok_or_else(|| {
                fermicert_core::Error::Precondition("band observables need the flat_band model".into())
            })?;
            let ops = models::band_operators(set)?;
            let list = match band {
                Band::Valence => ops.valence,
                Band::Conduction => ops.conduction,
            };
            list.into_iter()
                .nth(*index)
                .ok_or_else(|| fermicert_core::Error::InvalidArgument(format!("band index {index} out of range")))?
        }
    };
    Ok(op)
}

fn envelope(config: &ExperimentConfig, status: Status, result: Value) -> Value {
    json!({
        "task": config.task.as_str(),
        "status": status,
        "seed": config.seed,
        "config": config,
        "result": result,
    })
}

/// Runs the configured task and writes its reports.
pub fn run(config: &ExperimentConfig, options: &RunOptions) -> Result<Outcome, RunError> {
    let stem = config.output.stem.clone().unwrap_or_else(|| config.task.as_str().to_string());
    let paths = ReportPaths::new(&config.output.dir, stem)?;
    let (status, result, files) = match config.task {
        Task::LrCertify => lr_certify(config, &paths)?,
        Task::CondexpCheck => condexp_check(config, options, &paths)?,
        Task::GapCertify => gap_certify(config, &paths)?,
        Task::FlowCheck => flow_check(config, &paths)?,
        Task::ModelInfo => model_info(config, &paths)?,
    };
    let report = envelope(config, status, result);
    write_json(&paths.json(), &report)?;
    let mut all = vec![paths.json()];
    all.extend(files);
    let summary = json!({ "task": config.task.as_str(), "status": status, "files": all });
    Ok(Outcome { status, files: all, summary })
}

type TaskResult = Result<(Status, Value, Vec<PathBuf>), RunError>;

#[derive(Serialize)]
struct LrCsvRow {
    t: f64,
    measured: f64,
    bound: f64,
    ratio: f64,
    mode: &'static str,
}

fn lr_certify(config: &ExperimentConfig, paths: &ReportPaths) -> TaskResult {
    let model = build_model(config)?;
    let obs = config.observables.as_ref().ok_or_else(|| RunError::Config(Vec::new()))?;
    let a = observable(&obs.a, &model)?;
    let b = observable(&obs.b, &model)?;
    let f = config.f_function.as_ref().ok_or_else(|| RunError::Config(Vec::new()))?;
    let g = g_from_f(&DecayFunction::new(f.nu, f.epsilon, f.a)?, &model.graph);
    let mode = match obs.mode.as_deref() {
        Some("commutator") => Some(BoundMode::Commutator),
        Some("anticommutator") => Some(BoundMode::Anticommutator),
        _ => None,
    };
    let t = &config.time;
    let times = uniform_grid(t.start, t.end, t.points);
    let opts = CertifyOptions { mode, step: t.step, time_samples: t.samples };
    let report = lieb_robinson::measure(&a, &b, &model.phi, &g, t.start, &times, &opts)?
        .with_labels(&obs.a.label(), &obs.b.label());
    let mode_name = report.mode.as_str();
    let rows: Vec<LrCsvRow> = report
        .rows
        .iter()
        .map(|r| LrCsvRow { t: r.t, measured: r.measured, bound: r.bound, ratio: r.ratio, mode: mode_name })
        .collect();
    write_csv(&paths.csv(), &rows)?;
    let plot: Vec<Vec<f64>> = report.rows.iter().map(|r| vec![r.t, r.measured, r.bound]).collect();
    write_plot(&paths.plot(), &["t", "measured", "bound"], &plot)?;
    let status = if report.is_certified() { Status::Passed } else { Status::Failed };
    let result = json!({
        "certified": report.is_certified(),
        "worst": report.worst(),
        "report": report,
    });
    Ok((status, result, vec![paths.csv(), paths.plot()]))
}

#[derive(Clone, Debug, Serialize)]
struct CondexpRow {
    sample: usize,
    projection_defect: f64,
    range_defect: f64,
    norm_excess: f64,
    brute_force_defect: Option<f64>,
    e_f_defect: Option<f64>,
    local_error: f64,
    commutator_bound: f64,
    bound_is_exact: bool,
}

fn condexp_sample(lambda: &Arc<SiteSet>, x: &Region, sample: usize, seed: u64) -> Result<CondexpRow, RunError> {
    let mut rng = seeded(seed);
    let whole = lambda.region();
    let a = random_normalized(lambda, &whole, Parity::Mixed, &mut rng)?;
    let report = cond_exp::cond_exp_report(&a, x, Method::SiteSweep)?;
    let outside = whole.difference(x).len();
    let brute_force_defect = if outside <= EXACT_COMMUTATOR_CAP {
        Some(cond_exp::cond_exp_e_brute(&a, x)?.distance(&report.output)?)
    } else {
        None
    };
    let even = random_normalized(lambda, &whole, Parity::Even, &mut rng)?;
    let e_even = cond_exp::cond_exp_e(&even, x)?;
    let e_f_defect =
        if outside <= BRUTE_FORCE_CAP { Some(cond_exp::cond_exp_f(&even, x)?.distance(&e_even)?) } else { None };
    let local = cond_exp::local_approximation(&even, x)?;
    Ok(CondexpRow {
        sample,
        projection_defect: report.projection_defect,
        range_defect: report.range_defect,
        norm_excess: (report.output_norm - report.input_norm).max(0.0),
        brute_force_defect,
        e_f_defect,
        local_error: local.error,
        commutator_bound: local.commutator_bound,
        bound_is_exact: local.bound_is_exact,
    })
}

fn condexp_check(config: &ExperimentConfig, options: &RunOptions, paths: &ReportPaths) -> TaskResult {
    let graph = lattice(config)?;
    let lambda = graph.sites().clone();
    let spec = config.condexp.as_ref().ok_or_else(|| RunError::Config(Vec::new()))?;
    let x = region(&spec.region);
    let y = spec.other.as_ref().map_or_else(|| lambda.region().difference(&x), |o| region(o));
    let tol = config.tolerance.unwrap_or(DEFAULT_CONDEXP_TOL);

    let mut master = seeded(config.seed);
    let seeds: Vec<u64> = (0..spec.samples).map(|_| master.random()).collect();
    let threads = options.threads.clamp(1, spec.samples);
    let chunk = spec.samples.div_ceil(threads);
    let rows: Vec<CondexpRow> = thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .enumerate()
            .map(|(c, part)| {
                let (lambda, x) = (&lambda, &x);
                scope.spawn(move || {
                    part.iter()
                        .enumerate()
                        .map(|(k, &s)| condexp_sample(lambda, x, c * chunk + k, s))
                        .collect::<Result<Vec<_>, _>>()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect::<Result<Vec<Vec<_>>, _>>()
    })?
    .into_iter()
    .flatten()
    .collect();

    let family = cond_exp::verify_family_properties(&lambda, &x, &y, spec.samples.min(10), &mut master)?;
    let worst = |f: &dyn Fn(&CondexpRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let projection = worst(&|r| r.projection_defect);
    let range = worst(&|r| r.range_defect);
    let norm = worst(&|r| r.norm_excess);
    let brute = worst(&|r| r.brute_force_defect.unwrap_or(0.0));
    let e_f = worst(&|r| r.e_f_defect.unwrap_or(0.0));
    let local_violation = worst(&|r| r.local_error - r.commutator_bound);
    let passed =
        [projection, range, norm, brute, e_f, family.max_defect()].iter().all(|&d| d <= tol) && local_violation <= tol;
    write_csv(&paths.csv(), &rows)?;
    let result = json!({
        "region": x,
        "other": y,
        "tolerance": tol,
        "max_projection_defect": projection,
        "max_range_defect": range,
        "max_norm_excess": norm,
        "max_brute_force_defect": brute,
        "max_e_f_defect": e_f,
        "max_local_bound_violation": local_violation.max(0.0),
        "family": family,
        "samples": rows,
    });
    Ok((if passed { Status::Passed } else { Status::Failed }, result, vec![paths.csv()]))
}

#[derive(Serialize)]
struct GapCsvRow {
    n: usize,
    kernel_dim: Option<usize>,
    epsilon_squared: Option<f64>,
}

fn gap_certify(config: &ExperimentConfig, paths: &ReportPaths) -> TaskResult {
    let model = build_model(config)?;
    let lambda = model.lambda();
    let ff = gap::frustration_free_check(&model.phi, lambda)?;
    let mut seq = models::left_to_right_sequence(&model.phi, lambda)?;
    if let Some(tol) = config.tolerance {
        seq = seq.with_tolerance(tol);
    }
    let cert = gap::martingale_certificate(&seq)?;
    let target = local_hamiltonian(&model.phi, lambda, 0.0)?;
    let sandwich = gap::sandwich_check(&target, seq.last())?;
    let rows: Vec<GapCsvRow> = (0..=cert.steps)
        .map(|n| GapCsvRow {
            n,
            kernel_dim: n.checked_sub(1).map(|k| cert.kernel_dims[k]),
            epsilon_squared: cert.epsilon_squared.get(n).copied(),
        })
        .collect();
    write_csv(&paths.csv(), &rows)?;
    let plot: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| vec![r.n as f64, r.epsilon_squared.unwrap_or(f64::NAN), r.kernel_dim.map_or(f64::NAN, |d| d as f64)])
        .collect();
    write_plot(&paths.plot(), &["n", "epsilon_squared", "kernel_dim"], &plot)?;
    let sound = match (cert.bound, cert.exact_gap) {
        (Some(b), Some(g)) => b <= g + GAP_SOUNDNESS_TOL,
        _ => true,
    };
    let passed = cert.status == CertificateStatus::Certified && sound;
    let result = json!({
        "frustration_free": ff,
        "certificate": cert,
        "sound": sound,
        "sandwich": sandwich,
    });
    Ok((if passed { Status::Passed } else { Status::Failed }, result, vec![paths.csv(), paths.plot()]))
}

#[derive(Serialize)]
struct FlowCsvRow {
    s: f64,
    gap: f64,
    trace: f64,
    defect: f64,
}

fn flow_check(config: &ExperimentConfig, paths: &ReportPaths) -> TaskResult {
    let Some(ModelSpec::FlatBand { width, theta, phase }) = config.model.clone() else {
        return Err(fermicert_core::Error::Precondition("flow-check runs on the flat_band model".into()).into());
    };
    let graph = lattice(config)?;
    let lambda = graph.sites().clone();
    let spec = config.flow;
    let grid = uniform_grid(0.0, 1.0, spec.points);
    let options = FlowOptions { gap_min: spec.gap_min, ..FlowOptions::default() };
    let report = match spec.path {
        FlowPath::Rotation => {
            let family = |s: f64| {
                let set = OrbitalSet::cells(graph.clone(), width, theta + s * (spec.theta_to - theta), phase)?;
                models::flat_band_model(&set)
            };
            gap::projection_flow(family, &lambda, &grid, &options)?
        }
        FlowPath::GapClosing => {
            let set = OrbitalSet::cells(graph.clone(), width, theta, phase)?;
            let family = |s: f64| models::weighted_flat_band_model(&set, 1.0 - s, 1.0);
            gap::projection_flow(family, &lambda, &grid, &options)?
        }
    };
    let tol = config.tolerance.unwrap_or(DEFAULT_FLOW_TOL);
    let rank_constant = report.traces.iter().all(|t| (t - report.rank as f64).abs() <= 1e-8);
    let passed = rank_constant && report.max_defect <= tol;
    let rows: Vec<FlowCsvRow> = (0..grid.len())
        .map(|k| FlowCsvRow { s: grid[k], gap: report.gaps[k], trace: report.traces[k], defect: report.defects[k] })
        .collect();
    write_csv(&paths.csv(), &rows)?;
    let plot: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.s, r.gap, r.defect]).collect();
    write_plot(&paths.plot(), &["s", "gap", "defect"], &plot)?;
    let result = json!({ "tolerance": tol, "rank_constant": rank_constant, "flow": report });
    Ok((if passed { Status::Passed } else { Status::Failed }, result, vec![paths.csv(), paths.plot()]))
}

#[derive(Serialize)]
struct SpectrumRow {
    index: usize,
    eigenvalue: f64,
}

/// Number of eigenvalues listed by `model-info`.
pub const SPECTRUM_ROWS: usize = 16;

fn model_info(config: &ExperimentConfig, paths: &ReportPaths) -> TaskResult {
    let model = build_model(config)?;
    let lambda = model.lambda();
    let t0 = config.time.start;
    let h = local_hamiltonian(&model.phi, lambda, t0)?;
    let spectrum = gap::spectrum(&h)?;
    let rows: Vec<SpectrumRow> = spectrum
        .iter()
        .take(SPECTRUM_ROWS)
        .enumerate()
        .map(|(index, &eigenvalue)| SpectrumRow { index, eigenvalue })
        .collect();
    write_csv(&paths.csv(), &rows)?;
    let g_norm = match &config.f_function {
        Some(f) => Some(interaction_g_norm(
            &model.phi,
            &g_from_f(&DecayFunction::new(f.nu, f.epsilon, f.a)?, &model.graph),
            t0,
        )?),
        None => None,
    };
    let ff =
        if model.phi.is_time_independent() { Some(gap::frustration_free_check(&model.phi, lambda)?) } else { None };
    let result = json!({
        "model": config.model.as_ref().map(ModelSpec::name),
        "sites": lambda.len(),
        "terms": model.phi.terms().len(),
        "even": model.phi.is_even(),
        "time_independent": model.phi.is_time_independent(),
        "g_norm": g_norm,
        "ground_energy": spectrum[0],
        "lowest_eigenvalues": rows.iter().map(|r| r.eigenvalue).collect::<Vec<_>>(),
        "frustration_free": ff,
    });
    Ok((Status::Passed, result, vec![paths.csv()]))
}

//! Named experiments: each one runs a set of models, writes per-model
//! trajectory and metric CSVs, a JSON summary and SVG charts into an output
//! directory.

mod output;
pub mod scan;
pub mod svg;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dynamics::{ModelKind, ModelParams};
use crate::error::{Error, Result};
use crate::integrator::{
    best_response, convergence_check, integrate, reference_trajectory, IntegratorConfig, Trajectory,
};
use crate::metrics::{self, average_reward, passivity_report, qt_integrand, regret_report, tail_slope};
use crate::payoffs::{
    constant_signal, contractivity_report, example1_signal, example2_signal, is_nash, MatrixGame, PayoffSignal,
    PayoffSource,
};
use crate::simplex::{norm2, softmax, sub, vertex, SimplexPoint};

pub use scan::{classify, classify_dir, ClassificationRow, Evidence, ScanRecord};
use output::{decimate, ensure_dir, write_curves, write_json, write_text, write_trajectory};
use svg::{LineChart, Series};

/// Trailing fraction of samples examined by convergence checks.
pub const CONVERGENCE_TAIL: f64 = 0.05;
/// KL drift below which the zero-sum replicator orbit counts as conserved.
pub const KL_CONSERVATION_TOL: f64 = 1e-4;
/// Average reward reported for the latency model in the sinusoid game.
pub const LATENCY_REFERENCE_REWARD: f64 = -0.106;
pub const LATENCY_SWEEP: [f64; 3] = [0.5, 1.0, 2.0];
const CHART_POINTS: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    Example1,
    Example2,
    ExrdCounterexample,
    ZerosumCycle,
    Contractive,
    PassivityScan,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 6] = [
        ExperimentName::Example1,
        ExperimentName::Example2,
        ExperimentName::ExrdCounterexample,
        ExperimentName::ZerosumCycle,
        ExperimentName::Contractive,
        ExperimentName::PassivityScan,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::Example1 => "example1",
            ExperimentName::Example2 => "example2",
            ExperimentName::ExrdCounterexample => "exrd-counterexample",
            ExperimentName::ZerosumCycle => "zerosum-cycle",
            ExperimentName::Contractive => "contractive",
            ExperimentName::PassivityScan => "passivity-scan",
        }
    }

    pub fn default_models(self) -> Vec<ModelKind> {
        use ModelKind::*;
        match self {
            ExperimentName::Example1 => vec![Bnn, Smith, Logit, Tp],
            ExperimentName::Example2 => vec![RdLatency],
            ExperimentName::ExrdCounterexample => vec![ExRd],
            ExperimentName::ZerosumCycle => vec![Rd, ShoFtrl, ShoDp],
            ExperimentName::Contractive => vec![Rd, Dp, ShoFtrl, ShoDp],
            ExperimentName::PassivityScan => ModelKind::ALL.to_vec(),
        }
    }

    pub fn default_horizon(self) -> f64 {
        match self {
            ExperimentName::ExrdCounterexample => 20.0,
            ExperimentName::Contractive | ExperimentName::PassivityScan => 200.0,
            _ => 500.0,
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ExperimentName::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::UnknownExperiment(s.to_string()))
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    pub models: Vec<ModelKind>,
    pub params: ModelParams,
    pub integ: IntegratorConfig,
    pub seed: u64,
    pub outdir: PathBuf,
    /// Initial strategy; each experiment has its own default.
    pub x0: Option<SimplexPoint>,
    /// Replaces the experiment's default game (game-mode experiments).
    pub game: Option<MatrixGame>,
    /// Replaces the experiment's default signal (signal-mode experiments).
    pub signal: Option<PayoffSignal>,
}

impl ExperimentSpec {
    pub fn new(name: ExperimentName, outdir: impl Into<PathBuf>) -> Self {
        ExperimentSpec {
            name,
            models: name.default_models(),
            params: ModelParams::default(),
            integ: IntegratorConfig {
                horizon: name.default_horizon(),
                ..IntegratorConfig::default()
            },
            seed: 0,
            outdir: outdir.into(),
            x0: None,
            game: None,
            signal: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::Config("model list is empty".into()));
        }
        self.params.validate()?;
        self.integ.validate()
    }
}

/// Optional settings read from a JSON configuration file or the command
/// line; anything left unset keeps the experiment default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOverrides {
    #[serde(default)]
    pub experiment: Option<String>,
    #[serde(default)]
    pub models: Option<Vec<ModelKind>>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default, rename = "T")]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub outdir: Option<PathBuf>,
    #[serde(default)]
    pub record_every: Option<usize>,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    /// Row-major payoff matrix.
    #[serde(default)]
    pub game: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub signal: Option<PayoffSignal>,
}

impl RunOverrides {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `other` win.
    pub fn merged_with(self, other: RunOverrides) -> RunOverrides {
        RunOverrides {
            experiment: other.experiment.or(self.experiment),
            models: other.models.or(self.models),
            dt: other.dt.or(self.dt),
            horizon: other.horizon.or(self.horizon),
            lambda: other.lambda.or(self.lambda),
            gamma: other.gamma.or(self.gamma),
            seed: other.seed.or(self.seed),
            outdir: other.outdir.or(self.outdir),
            record_every: other.record_every.or(self.record_every),
            x0: other.x0.or(self.x0),
            game: other.game.or(self.game),
            signal: other.signal.or(self.signal),
        }
    }

    /// Build a spec for `name` with these overrides applied.
    pub fn into_spec(self, name: ExperimentName, default_outdir: &Path) -> Result<ExperimentSpec> {
        let mut spec = ExperimentSpec::new(name, self.outdir.clone().unwrap_or_else(|| default_outdir.to_path_buf()));
        if let Some(m) = self.models {
            spec.models = m;
        }
        if let Some(v) = self.dt {
            spec.integ.dt = v;
        }
        if let Some(v) = self.horizon {
            spec.integ.horizon = v;
        }
        if let Some(v) = self.record_every {
            spec.integ.record_every = v;
        }
        if let Some(v) = self.lambda {
            spec.params.lambda = v;
        }
        if let Some(v) = self.gamma {
            spec.params.gamma = v;
        }
        if let Some(v) = self.seed {
            spec.seed = v;
        }
        if let Some(x0) = self.x0 {
            spec.x0 = Some(SimplexPoint::new(x0)?);
        }
        if let Some(rows) = self.game {
            spec.game = Some(MatrixGame::from_rows(rows)?);
        }
        spec.signal = self.signal;
        spec.validate()?;
        Ok(spec)
    }
}

/// Settings recorded alongside every summary row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub dt: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub record_every: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub seed: u64,
    pub x0: Vec<f64>,
}

/// One row of an experiment's JSON summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    pub experiment: String,
    pub sup_regret: Option<f64>,
    pub storage_bound: Option<f64>,
    pub bounded_verdict: Option<bool>,
    pub delta_min: Option<f64>,
    pub ei_min: Option<f64>,
    pub final_avg_reward: Option<f64>,
    pub final_dist: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, serde_json::Value>,
    pub settings: RunSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ModelSummary {
    fn new(label: &str, experiment: ExperimentName, settings: RunSettings) -> Self {
        ModelSummary {
            model: label.to_string(),
            experiment: experiment.to_string(),
            sup_regret: None,
            storage_bound: None,
            bounded_verdict: None,
            delta_min: None,
            ei_min: None,
            final_avg_reward: None,
            final_dist: None,
            converged: None,
            extra: BTreeMap::new(),
            settings,
            error: None,
        }
    }

    fn failed(label: &str, experiment: ExperimentName, settings: RunSettings, err: &Error) -> Self {
        let mut s = Self::new(label, experiment, settings);
        s.error = Some(err.to_string());
        s
    }

    pub fn extra_f64(&self, key: &str) -> Option<f64> {
        self.extra.get(key).and_then(|v| v.as_f64())
    }

    pub fn extra_bool(&self, key: &str) -> Option<bool> {
        self.extra.get(key).and_then(|v| v.as_bool())
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub experiment: ExperimentName,
    pub summaries: Vec<ModelSummary>,
    pub classification: Option<Vec<ClassificationRow>>,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn any_diverged(&self) -> bool {
        self.summaries.iter().any(|s| s.error.is_some())
    }

    pub fn summary(&self, model: &str) -> Option<&ModelSummary> {
        self.summaries.iter().find(|s| s.model == model)
    }
}

/// Result of one simulated (or reference) run, reduced to what the
/// experiment reports.
struct JobOutput {
    summary: ModelSummary,
    charts: Vec<(&'static str, Series)>,
    files: Vec<PathBuf>,
}

fn settings(spec: &ExperimentSpec, params: &ModelParams, x0: &SimplexPoint) -> RunSettings {
    RunSettings {
        dt: spec.integ.dt,
        horizon: spec.integ.horizon,
        record_every: spec.integ.record_every,
        lambda: params.lambda,
        gamma: params.gamma,
        seed: spec.seed,
        x0: x0.to_vec(),
    }
}

fn chart_series(name: &str, times: &[f64], values: &[f64]) -> Series {
    let (xs, ys) = decimate(times, values, CHART_POINTS);
    Series { name: name.to_string(), xs, ys }
}

fn file_stem(spec: &ExperimentSpec, label: &str) -> PathBuf {
    spec.outdir.join(format!("{}_{}", spec.name, label))
}

fn with_ext(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Regret, average reward and delta curves common to the signal-mode runs;
/// writes the trajectory and metric CSVs.
fn signal_job(
    spec: &ExperimentSpec,
    label: &str,
    traj: &Trajectory,
    kind: Option<ModelKind>,
    x0: &SimplexPoint,
    params: &ModelParams,
) -> Result<JobOutput> {
    let n = traj.dim();
    let times = traj.times();
    let mut summary = ModelSummary::new(label, spec.name, settings(spec, params, x0));
    let avg = average_reward(traj);
    summary.final_avg_reward = avg.last().copied();

    let vertex_curves: Vec<Vec<f64>> = match kind {
        Some(k) => {
            let rep = regret_report(traj, k, x0)?;
            summary.sup_regret = Some(rep.sup_regret);
            summary.storage_bound = rep.storage_bound;
            summary.bounded_verdict = Some(rep.bounded_verdict);
            rep.vertex_regret_curves
        }
        None => (1..=n)
            .map(|i| metrics::regret(traj, &vertex(i, n)?))
            .collect::<Result<_>>()?,
    };
    if kind.is_none() {
        summary.sup_regret = vertex_curves.iter().flatten().copied().reduce(f64::max);
    }
    let slopes: Vec<f64> = vertex_curves.iter().map(|c| tail_slope(times, c, 0.5)).collect();
    summary.extra.insert("regret_slopes".into(), json!(slopes));
    summary.extra.insert(
        "regret_stabilizes".into(),
        json!(vertex_curves
            .iter()
            .map(|c| metrics::maximum_stabilizes(c, metrics::REGRET_SLACK))
            .collect::<Vec<_>>()),
    );
    summary.extra.insert("final_strategy".into(), json!(traj.final_strategy().map(|x| x.to_vec())));

    let pass = passivity_report(traj, None)?;
    summary.delta_min = Some(pass.delta_min);

    let mut columns = vec![("avg_reward".to_string(), avg.clone())];
    for (i, c) in vertex_curves.iter().enumerate() {
        columns.push((format!("regret_e{}", i + 1), c.clone()));
    }
    columns.push(("delta".into(), pass.delta_curve.clone()));

    if kind == Some(ModelKind::RdLatency) {
        let q = qt_integrand(traj)?;
        summary
            .extra
            .insert("qt_min".into(), json!(q.iter().copied().fold(f64::INFINITY, f64::min)));
        columns.push(("qt".into(), q));
    }

    let stem = file_stem(spec, label);
    let files = vec![
        write_trajectory(&with_ext(&stem, ".csv"), traj)?,
        write_curves(&with_ext(&stem, "_metrics.csv"), times, &columns)?,
    ];

    let mut charts = vec![("avg_reward", chart_series(label, times, &avg))];
    for (i, c) in vertex_curves.iter().enumerate() {
        charts.push(("regret", chart_series(&format!("{label} R(e{})", i + 1), times, c)));
    }
    Ok(JobOutput { summary, charts, files })
}

fn render_charts(spec: &ExperimentSpec, outputs: &mut [JobOutput], titles: &[(&str, &str, &str)]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for &(key, title, y_label) in titles {
        let mut chart = LineChart::new(title, "t", y_label);
        for out in outputs.iter_mut() {
            for (k, s) in out.charts.iter_mut() {
                if *k == key {
                    chart.push(std::mem::replace(s, Series::new("", &[], &[])));
                }
            }
        }
        if !chart.series.is_empty() {
            let path = spec.outdir.join(format!("{}_{key}.svg", spec.name));
            files.push(write_text(&path, &chart.render())?);
        }
    }
    Ok(files)
}

fn finish(spec: &ExperimentSpec, mut outputs: Vec<JobOutput>, titles: &[(&str, &str, &str)]) -> Result<RunOutcome> {
    let mut files: Vec<PathBuf> = outputs.iter().flat_map(|o| o.files.clone()).collect();
    files.extend(render_charts(spec, &mut outputs, titles)?);
    let summaries: Vec<ModelSummary> = outputs.into_iter().map(|o| o.summary).collect();
    files.push(write_json(&spec.outdir.join(format!("{}_summary.json", spec.name)), &summaries)?);
    Ok(RunOutcome {
        experiment: spec.name,
        summaries,
        classification: None,
        files,
    })
}

/// Run a model and fold any failure into its summary row.
fn model_job<F>(spec: &ExperimentSpec, label: &str, params: &ModelParams, x0: &SimplexPoint, f: F) -> Result<JobOutput>
where
    F: FnOnce() -> Result<JobOutput>,
{
    match f() {
        Ok(out) => Ok(out),
        Err(e @ (Error::IntegrationDiverged { .. } | Error::Domain(_))) => Ok(JobOutput {
            summary: ModelSummary::failed(label, spec.name, settings(spec, params, x0), &e),
            charts: Vec::new(),
            files: Vec::new(),
        }),
        Err(e) => Err(e),
    }
}

pub fn run(spec: &ExperimentSpec) -> Result<RunOutcome> {
    spec.validate()?;
    ensure_dir(&spec.outdir)?;
    match spec.name {
        ExperimentName::Example1 => run_example1(spec),
        ExperimentName::Example2 => run_example2(spec),
        ExperimentName::ExrdCounterexample => run_exrd(spec),
        ExperimentName::ZerosumCycle => run_zerosum(spec),
        ExperimentName::Contractive => run_contractive(spec),
        ExperimentName::PassivityScan => scan::run_scan(spec),
    }
}

fn signal_x0(spec: &ExperimentSpec, n: usize) -> Result<SimplexPoint> {
    match &spec.x0 {
        Some(x) if x.dim() == n => Ok(x.clone()),
        Some(x) => Err(Error::Config(format!("x0 has dimension {}, payoff has {n}", x.dim()))),
        None => Ok(SimplexPoint::uniform(n)),
    }
}

const SIGNAL_CHARTS: [(&str, &str, &str); 2] = [
    ("avg_reward", "Average reward", "(1/t) int p'x"),
    ("regret", "Regret against vertices", "R_t(e_i)"),
];

fn run_example1(spec: &ExperimentSpec) -> Result<RunOutcome> {
    let signal = spec.signal.clone().unwrap_or_else(example1_signal);
    let src = PayoffSource::Signal(signal);
    src.validate()?;
    let n = src.dim();
    let x0 = signal_x0(spec, n)?;

    let mut outputs: Vec<JobOutput> = spec
        .models
        .par_iter()
        .map(|&kind| {
            model_job(spec, kind.name(), &spec.params, &x0, || {
                let traj = integrate(kind, &spec.params, &x0, &src, &spec.integ)?;
                signal_job(spec, kind.name(), &traj, Some(kind), &x0, &spec.params)
            })
        })
        .collect::<Result<_>>()?;

    // reference policies: switching best response and every fixed action
    let mut refs: Vec<(String, Trajectory)> =
        vec![("x_opt".into(), reference_trajectory("x_opt", &src, &spec.integ, |_, p| best_response(p))?)];
    for i in 1..=n {
        let e = vertex(i, n)?;
        let name = format!("fixed-e{i}");
        refs.push((name.clone(), reference_trajectory(&name, &src, &spec.integ, |_, _| e.clone())?));
    }
    for (name, traj) in &refs {
        outputs.push(signal_job(spec, name, traj, None, &x0, &spec.params)?);
    }
    finish(spec, outputs, &SIGNAL_CHARTS)
}

fn lambda_label(kind: ModelKind, lambda: f64) -> String {
    format!("{kind}_lambda-{lambda}")
}

fn run_example2(spec: &ExperimentSpec) -> Result<RunOutcome> {
    let signal = spec.signal.clone().unwrap_or_else(example2_signal);
    let src = PayoffSource::Signal(signal);
    src.validate()?;
    let n = src.dim();
    let x0 = signal_x0(spec, n)?;

    let mut lambdas: Vec<f64> = LATENCY_SWEEP.to_vec();
    if !lambdas.contains(&spec.params.lambda) {
        lambdas.push(spec.params.lambda);
        lambdas.sort_by(f64::total_cmp);
    }
    let mut jobs: Vec<(ModelKind, ModelParams, String)> = Vec::new();
    for &kind in &spec.models {
        if kind == ModelKind::RdLatency {
            for &lambda in &lambdas {
                let params = ModelParams { lambda, ..spec.params.clone() };
                jobs.push((kind, params, lambda_label(kind, lambda)));
            }
        } else {
            jobs.push((kind, spec.params.clone(), kind.to_string()));
        }
    }
    let outputs: Vec<JobOutput> = jobs
        .par_iter()
        .map(|(kind, params, label)| {
            model_job(spec, label, params, &x0, || {
                let traj = integrate(*kind, params, &x0, &src, &spec.integ)?;
                let mut out = signal_job(spec, label, &traj, Some(*kind), &x0, params)?;
                if *kind == ModelKind::RdLatency {
                    let avg = out.summary.final_avg_reward.unwrap_or(f64::NAN);
                    out.summary.extra.insert("lambda".into(), json!(params.lambda));
                    out.summary.extra.insert(
                        "matches_reported_reward".into(),
                        json!((avg - LATENCY_REFERENCE_REWARD).abs() <= 0.03),
                    );
                }
                Ok(out)
            })
        })
        .collect::<Result<_>>()?;
    finish(spec, outputs, &SIGNAL_CHARTS)
}

fn run_exrd(spec: &ExperimentSpec) -> Result<RunOutcome> {
    let signal = spec.signal.clone().unwrap_or_else(|| constant_signal(vec![1.0, 0.0]));
    let src = PayoffSource::Signal(signal.clone());
    src.validate()?;
    let n = src.dim();
    let x0 = signal_x0(spec, n)?;
    // the strategy the filtered scores settle on under the payoff at t = T
    let target = softmax(&signal.value(spec.integ.horizon));

    let outputs: Vec<JobOutput> = spec
        .models
        .par_iter()
        .map(|&kind| {
            model_job(spec, kind.name(), &spec.params, &x0, || {
                let traj = integrate(kind, &spec.params, &x0, &src, &spec.integ)?;
                let mut out = signal_job(spec, kind.name(), &traj, Some(kind), &x0, &spec.params)?;
                let conv = convergence_check(&traj, &target, CONVERGENCE_TAIL)?;
                out.summary.final_dist = Some(conv.final_dist);
                out.summary.converged = Some(conv.converged);
                out.summary.extra.insert("target".into(), json!(target.to_vec()));
                Ok(out)
            })
        })
        .collect::<Result<_>>()?;
    finish(spec, outputs, &SIGNAL_CHARTS)
}

/// Equilibrium used as convergence target in game-mode experiments.
fn game_target(game: &MatrixGame) -> Result<SimplexPoint> {
    if let Some(ne) = game.known_ne() {
        return Ok(ne.clone());
    }
    let u = SimplexPoint::uniform(game.dim());
    if is_nash(game, &u, 1e-9) {
        Ok(u)
    } else {
        Err(Error::Config(
            "game has no known Nash equilibrium; pass one with known_ne or use a game with a uniform equilibrium".into(),
        ))
    }
}

fn kl_to(target: &[f64], x: &[f64]) -> f64 {
    target
        .iter()
        .zip(x)
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, xi)| t * (t / xi.max(metrics::LOG_FLOOR)).ln())
        .sum()
}

/// Distance and KL curves for a game-mode run; writes its CSVs when `write`.
fn game_job(
    spec: &ExperimentSpec,
    label: &str,
    kind: ModelKind,
    game: &MatrixGame,
    traj: &Trajectory,
    x0: &SimplexPoint,
    target: &SimplexPoint,
    write: bool,
) -> Result<JobOutput> {
    let times = traj.times();
    let mut summary = ModelSummary::new(label, spec.name, settings(spec, &spec.params, x0));
    let conv = convergence_check(traj, target, CONVERGENCE_TAIL)?;
    summary.final_dist = Some(conv.final_dist);
    summary.converged = Some(conv.converged);

    let dist: Vec<f64> = traj.strategies().iter().map(|x| norm2(&sub(x, target))).collect();
    let kl: Vec<f64> = traj.strategies().iter().map(|x| kl_to(target, x)).collect();
    let kl_drift = kl.iter().map(|v| (v - kl[0]).abs()).fold(0.0, f64::max);
    summary.extra.insert("kl_drift".into(), json!(kl_drift));
    summary.extra.insert("kl_conserved".into(), json!(kl_drift <= KL_CONSERVATION_TOL));

    let rep = regret_report(traj, kind, x0)?;
    summary.sup_regret = Some(rep.sup_regret);
    summary.storage_bound = rep.storage_bound;
    summary.bounded_verdict = Some(rep.bounded_verdict);
    let eq = metrics::Equilibrium {
        payoff: game.eval(target),
        strategy: target.clone(),
    };
    let pass = passivity_report(traj, Some(&eq))?;
    summary.delta_min = Some(pass.delta_min);
    summary.ei_min = pass.ei.as_ref().map(|e| e.min);
    let avg = average_reward(traj);
    summary.final_avg_reward = avg.last().copied();

    let mut files = Vec::new();
    if write {
        let stem = file_stem(spec, label);
        files.push(write_trajectory(&with_ext(&stem, ".csv"), traj)?);
        let columns = vec![
            ("dist_to_ne".to_string(), dist.clone()),
            ("kl_to_ne".to_string(), kl.clone()),
            ("delta".to_string(), pass.delta_curve.clone()),
            ("ei".to_string(), pass.ei.map(|e| e.curve).unwrap_or_default()),
        ];
        files.push(write_curves(&with_ext(&stem, "_metrics.csv"), times, &columns)?);
    }
    let charts = if write {
        vec![
            ("dist", chart_series(label, times, &dist)),
            ("kl", chart_series(label, times, &kl)),
        ]
    } else {
        Vec::new()
    };
    Ok(JobOutput { summary, charts, files })
}

fn default_game(spec: &ExperimentSpec) -> MatrixGame {
    spec.game.clone().unwrap_or_else(|| match spec.name {
        ExperimentName::Contractive => MatrixGame::good_rps(),
        _ => MatrixGame::standard_rps(),
    })
}

const GAME_CHARTS: [(&str, &str, &str); 2] = [
    ("dist", "Distance to Nash equilibrium", "||x - x*||"),
    ("kl", "KL divergence from Nash equilibrium", "KL(x* || x)"),
];

fn run_zerosum(spec: &ExperimentSpec) -> Result<RunOutcome> {
    let game = default_game(spec);
    let n = game.dim();
    let target = game_target(&game)?;
    let x0 = match &spec.x0 {
        Some(x) if x.dim() == n => x.clone(),
        Some(x) => return Err(Error::Config(format!("x0 has dimension {}, game has {n}", x.dim()))),
        None if n == 3 => SimplexPoint::new(vec![0.5, 0.25, 0.25])?,
        None => {
            let mut v = vec![1.0 / (n + 1) as f64; n];
            v[0] = 2.0 / (n + 1) as f64;
            SimplexPoint::new(v)?
        }
    };
    let src = PayoffSource::Game(game.clone());
    let outputs: Vec<JobOutput> = spec
        .models
        .par_iter()
        .map(|&kind| {
            model_job(spec, kind.name(), &spec.params, &x0, || {
                let traj = integrate(kind, &spec.params, &x0, &src, &spec.integ)?;
                game_job(spec, kind.name(), kind, &game, &traj, &x0, &target, true)
            })
        })
        .collect::<Result<_>>()?;
    finish(spec, outputs, &GAME_CHARTS)
}

/// Number of random initial strategies in the contractive experiment.
pub const CONTRACTIVE_STARTS: usize = 10;

/// Uniform samples from the simplex pulled slightly toward its center so
/// that log-parameterized models start strictly inside.
pub fn random_interior_points(n: usize, count: usize, seed: u64) -> Vec<SimplexPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
            let s: f64 = e.iter().sum();
            let v: Vec<f64> = e.iter().map(|v| 0.95 * v / s + 0.05 / n as f64).collect();
            let total: f64 = v.iter().sum();
            SimplexPoint::from_raw(v.iter().map(|x| x / total).collect())
        })
        .collect()
}

fn run_contractive(spec: &ExperimentSpec) -> Result<RunOutcome> {
    let game = default_game(spec);
    let n = game.dim();
    let target = game_target(&game)?;
    let report = contractivity_report(&game, 1000, spec.seed);
    let starts = match &spec.x0 {
        Some(x) if x.dim() == n => vec![x.clone()],
        Some(x) => return Err(Error::Config(format!("x0 has dimension {}, game has {n}", x.dim()))),
        None => random_interior_points(n, CONTRACTIVE_STARTS, spec.seed),
    };
    let src = PayoffSource::Game(game.clone());
    let jobs: Vec<(ModelKind, usize)> = spec
        .models
        .iter()
        .flat_map(|&k| (0..starts.len()).map(move |i| (k, i)))
        .collect();
    let outputs: Vec<JobOutput> = jobs
        .par_iter()
        .map(|&(kind, i)| {
            let label = format!("{kind}_start-{i}");
            model_job(spec, &label, &spec.params, &starts[i], || {
                let traj = integrate(kind, &spec.params, &starts[i], &src, &spec.integ)?;
                let mut out = game_job(spec, &label, kind, &game, &traj, &starts[i], &target, i == 0)?;
                out.summary.extra.insert("game_class".into(), json!(report.class));
                Ok(out)
            })
        })
        .collect::<Result<_>>()?;
    let mut outcome = finish(spec, outputs, &GAME_CHARTS)?;
    let game_file = spec.outdir.join(format!("{}_game.json", spec.name));
    outcome.files.push(write_json(
        &game_file,
        &json!({ "matrix": game.rows(), "equilibrium": target.to_vec(), "contractivity": report }),
    )?);
    Ok(outcome)
}

/// Reward of a fixed action under a signal averaged over `[0, horizon]`.
pub fn fixed_action_average(signal: &PayoffSignal, x: &SimplexPoint, cfg: &IntegratorConfig) -> Result<f64> {
    let src = PayoffSource::Signal(signal.clone());
    let traj = reference_trajectory("fixed", &src, cfg, |_, _| x.clone())?;
    Ok(*average_reward(&traj).last().expect("non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_parse() {
        for e in ExperimentName::ALL {
            assert_eq!(e.as_str().parse::<ExperimentName>().unwrap(), e);
        }
        assert!(matches!("nope".parse::<ExperimentName>(), Err(Error::UnknownExperiment(_))));
    }

    #[test]
    fn overrides_merge_and_apply() {
        let file: RunOverrides = serde_json::from_str(
            r#"{"models": ["rd", "dp"], "dt": 0.005, "T": 3.0, "seed": 4, "game": [[0, 1], [1, 0]]}"#,
        )
        .unwrap();
        let cli = RunOverrides {
            dt: Some(0.01),
            lambda: Some(2.0),
            ..Default::default()
        };
        let merged = file.merged_with(cli);
        let spec = merged.into_spec(ExperimentName::Contractive, Path::new("out")).unwrap();
        assert_eq!(spec.models, vec![ModelKind::Rd, ModelKind::Dp]);
        assert_eq!(spec.integ.dt, 0.01);
        assert_eq!(spec.integ.horizon, 3.0);
        assert_eq!(spec.params.lambda, 2.0);
        assert_eq!(spec.seed, 4);
        assert_eq!(spec.game.unwrap().dim(), 2);
        assert!(serde_json::from_str::<RunOverrides>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn invalid_overrides_are_rejected() {
        let bad = RunOverrides {
            dt: Some(0.5),
            ..Default::default()
        };
        assert!(bad.into_spec(ExperimentName::Example1, Path::new("o")).is_err());
        let empty = RunOverrides {
            models: Some(vec![]),
            ..Default::default()
        };
        assert!(empty.into_spec(ExperimentName::Example1, Path::new("o")).is_err());
    }

    #[test]
    fn random_starts_are_interior_and_seeded() {
        let a = random_interior_points(3, 10, 1);
        assert_eq!(a, random_interior_points(3, 10, 1));
        for x in &a {
            assert!(x.is_interior(0.01));
            assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

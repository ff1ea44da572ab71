//! Passivity scan over a battery of payoff signals and the evidence-based
//! classification built from its records.

use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::output::{write_curves, write_json, write_text, write_trajectory};
use super::svg::{LineChart, Series};
use super::{chart_series, settings, ExperimentSpec, ModelSummary, RunOutcome, CHART_POINTS};
use crate::dynamics::ModelKind;
use crate::error::{Error, Result};
use crate::integrator::{integrate, Trajectory};
use crate::metrics::{
    average_reward, ei_equilibria, maximum_stabilizes, minimum_stabilizes, passivity_report, regret_report, tail_slope,
    REGRET_SLACK,
};
use crate::payoffs::{constant_signal, example1_signal, example2_signal, random_smooth_signal, PayoffSignal, PayoffSource};
use crate::simplex::SimplexPoint;

/// Least-squares slope over the last half above which a curve counts as
/// growing without bound.
pub const DIVERGENCE_SLOPE: f64 = 0.01;
/// Slack for a running minimum to count as settled.
pub const STABILIZATION_TOL: f64 = 1e-3;
/// Random smooth signals in the battery, in addition to the fixed ones.
pub const RANDOM_SIGNALS: u64 = 4;
const RANDOM_TERMS: usize = 3;

/// Named payoff signals every model is driven with.
pub fn signal_battery(seed: u64) -> Vec<(String, PayoffSignal)> {
    let mut v = vec![
        ("example1".to_string(), example1_signal()),
        ("example2".to_string(), example2_signal()),
        ("constant".to_string(), constant_signal(vec![1.0, 0.0])),
    ];
    for k in 0..RANDOM_SIGNALS {
        let s = seed.wrapping_add(k);
        v.push((format!("random-{s}"), random_smooth_signal(3, RANDOM_TERMS, s)));
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Evidence {
    #[serde(rename = "bounded")]
    Bounded,
    #[serde(rename = "diverging")]
    Diverging,
    #[serde(rename = "inconclusive")]
    Inconclusive,
    #[serde(rename = "n/a")]
    NotApplicable,
}

impl Evidence {
    pub fn as_str(self) -> &'static str {
        match self {
            Evidence::Bounded => "bounded",
            Evidence::Diverging => "diverging",
            Evidence::Inconclusive => "inconclusive",
            Evidence::NotApplicable => "n/a",
        }
    }
}

impl fmt::Display for Evidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Trend of a cumulative supply curve whose minimum decides boundedness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupplyTrend {
    pub min: f64,
    pub stabilizes: bool,
    pub slope: f64,
}

impl SupplyTrend {
    fn of(times: &[f64], curve: &[f64]) -> Self {
        SupplyTrend {
            min: curve.iter().copied().fold(f64::INFINITY, f64::min),
            stabilizes: minimum_stabilizes(curve, STABILIZATION_TOL),
            slope: tail_slope(times, curve, 0.5),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EiTrend {
    pub strategy: Vec<f64>,
    pub payoff: Vec<f64>,
    #[serde(flatten)]
    pub trend: SupplyTrend,
}

/// Measurements of one model under one signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalEvidence {
    pub signal: String,
    pub sup_regret: Option<f64>,
    pub storage_bound: Option<f64>,
    /// Largest last-half regret slope over the vertices.
    pub max_regret_slope: Option<f64>,
    /// Every vertex regret stays below its midpoint value plus slack.
    pub regret_stabilizes: Option<bool>,
    pub delta: Option<SupplyTrend>,
    pub ei: Vec<EiTrend>,
    pub final_avg_reward: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Everything the scan recorded for one model; stored as `scan_<model>.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub model: ModelKind,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub dt: f64,
    pub signals: Vec<SignalEvidence>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRow {
    pub model: ModelKind,
    pub finite_regret_evidence: Evidence,
    pub delta_evidence: Evidence,
    pub ei_evidence: Evidence,
}

fn measure(kind: ModelKind, signal: &PayoffSignal, name: &str, spec: &ExperimentSpec) -> Result<(SignalEvidence, Trajectory)> {
    let src = PayoffSource::Signal(signal.clone());
    let n = src.dim();
    let x0 = SimplexPoint::uniform(n);
    let traj = integrate(kind, &spec.params, &x0, &src, &spec.integ)?;
    let times = traj.times();
    let rep = regret_report(&traj, kind, &x0)?;
    let ei_pairs = ei_equilibria(kind, n);
    let pass = passivity_report(&traj, None)?;
    let mut ei = Vec::with_capacity(ei_pairs.len());
    for eq in &ei_pairs {
        let r = passivity_report(&traj, Some(eq))?;
        let curve = r.ei.expect("equilibrium supplied").curve;
        ei.push(EiTrend {
            strategy: eq.strategy.to_vec(),
            payoff: eq.payoff.clone(),
            trend: SupplyTrend::of(times, &curve),
        });
    }
    let slope = rep
        .vertex_regret_curves
        .iter()
        .map(|c| tail_slope(times, c, 0.5))
        .fold(f64::NEG_INFINITY, f64::max);
    let stab = rep
        .vertex_regret_curves
        .iter()
        .all(|c| maximum_stabilizes(c, REGRET_SLACK));
    let evidence = SignalEvidence {
        signal: name.to_string(),
        sup_regret: Some(rep.sup_regret),
        storage_bound: rep.storage_bound,
        max_regret_slope: Some(slope),
        regret_stabilizes: Some(stab),
        delta: Some(SupplyTrend::of(times, &pass.delta_curve)),
        ei,
        final_avg_reward: average_reward(&traj).last().copied(),
        error: None,
    };
    Ok((evidence, traj))
}

fn failed_evidence(name: &str, e: &Error) -> SignalEvidence {
    SignalEvidence {
        signal: name.to_string(),
        sup_regret: None,
        storage_bound: None,
        max_regret_slope: None,
        regret_stabilizes: None,
        delta: None,
        ei: Vec::new(),
        final_avg_reward: None,
        error: Some(e.to_string()),
    }
}

struct ModelScan {
    record: ScanRecord,
    summary: ModelSummary,
    charts: Vec<(&'static str, Series)>,
    files: Vec<PathBuf>,
}

fn scan_model(spec: &ExperimentSpec, kind: ModelKind, battery: &[(String, PayoffSignal)]) -> Result<ModelScan> {
    let mut signals = Vec::with_capacity(battery.len());
    let mut files = Vec::new();
    let mut charts = Vec::new();
    let mut first_error = None;
    for (k, (name, signal)) in battery.iter().enumerate() {
        match measure(kind, signal, name, spec) {
            Ok((ev, traj)) => {
                if k == 0 {
                    let stem = spec.outdir.join(format!("{}_{}", spec.name, kind));
                    files.push(write_trajectory(&super::with_ext(&stem, ".csv"), &traj)?);
                    let pass = passivity_report(&traj, None)?;
                    let avg = average_reward(&traj);
                    let columns = vec![
                        ("avg_reward".to_string(), avg.clone()),
                        ("delta".to_string(), pass.delta_curve.clone()),
                    ];
                    files.push(write_curves(&super::with_ext(&stem, "_metrics.csv"), traj.times(), &columns)?);
                    charts.push(("delta", chart_series(kind.name(), traj.times(), &pass.delta_curve)));
                    charts.push(("avg_reward", chart_series(kind.name(), traj.times(), &avg)));
                }
                signals.push(ev);
            }
            Err(e @ (Error::IntegrationDiverged { .. } | Error::Domain(_))) => {
                first_error.get_or_insert_with(|| e.to_string());
                signals.push(failed_evidence(name, &e));
            }
            Err(e) => return Err(e),
        }
    }
    let record = ScanRecord {
        model: kind,
        horizon: spec.integ.horizon,
        dt: spec.integ.dt,
        signals,
    };
    files.push(write_json(&spec.outdir.join(format!("scan_{kind}.json")), &record)?);

    let x0 = SimplexPoint::uniform(2);
    let mut summary = ModelSummary::new(kind.name(), spec.name, settings(spec, &spec.params, &x0));
    summary.settings.x0 = Vec::new();
    let ok: Vec<&SignalEvidence> = record.signals.iter().filter(|s| s.error.is_none()).collect();
    summary.sup_regret = ok.iter().filter_map(|s| s.sup_regret).reduce(f64::max);
    summary.storage_bound = ok.iter().filter_map(|s| s.storage_bound).reduce(f64::max);
    summary.delta_min = ok.iter().filter_map(|s| s.delta.as_ref().map(|d| d.min)).reduce(f64::min);
    summary.ei_min = ok.iter().flat_map(|s| s.ei.iter().map(|e| e.trend.min)).reduce(f64::min);
    summary.final_avg_reward = ok.first().and_then(|s| s.final_avg_reward);
    if summary.storage_bound.is_some() {
        summary.bounded_verdict = Some(finite_regret_verdict(&record) == Evidence::Bounded);
    }
    summary.error = first_error;
    Ok(ModelScan {
        record,
        summary,
        charts,
        files,
    })
}

pub(super) fn run_scan(spec: &ExperimentSpec) -> Result<RunOutcome> {
    let battery = match &spec.signal {
        Some(s) => vec![("custom".to_string(), s.clone())],
        None => signal_battery(spec.seed),
    };
    let scans: Vec<ModelScan> = spec
        .models
        .par_iter()
        .map(|&kind| scan_model(spec, kind, &battery))
        .collect::<Result<_>>()?;

    let mut files: Vec<PathBuf> = scans.iter().flat_map(|s| s.files.clone()).collect();
    for (key, title, y_label) in [
        ("delta", "Delta-passivity supply on the first scan signal", "int x'.p' dt"),
        ("avg_reward", "Average reward on the first scan signal", "(1/t) int p'x"),
    ] {
        let mut chart = LineChart::new(title, "t", y_label);
        for s in &scans {
            for (k, series) in &s.charts {
                if *k == key {
                    chart.push(Series::new(series.name.clone(), &series.xs, &series.ys));
                }
            }
        }
        debug_assert!(chart.series.iter().all(|s| s.xs.len() <= CHART_POINTS + 1));
        files.push(write_text(&spec.outdir.join(format!("{}_{key}.svg", spec.name)), &chart.render())?);
    }

    let records: Vec<ScanRecord> = scans.iter().map(|s| s.record.clone()).collect();
    let summaries: Vec<ModelSummary> = scans.into_iter().map(|s| s.summary).collect();
    files.push(write_json(&spec.outdir.join(format!("{}_summary.json", spec.name)), &summaries)?);

    let complete = ModelKind::ALL.iter().all(|k| records.iter().any(|r| r.model == *k));
    let classification = if complete {
        let rows = classify(&records)?;
        files.extend(write_classification(&spec.outdir, &rows)?);
        Some(rows)
    } else {
        None
    };
    Ok(RunOutcome {
        experiment: spec.name,
        summaries,
        classification,
        files,
    })
}

fn finite_regret_verdict(rec: &ScanRecord) -> Evidence {
    let ok: Vec<&SignalEvidence> = rec.signals.iter().filter(|s| s.error.is_none()).collect();
    if ok.is_empty() {
        return Evidence::NotApplicable;
    }
    let diverging = ok
        .iter()
        .any(|s| s.max_regret_slope.is_some_and(|v| v >= DIVERGENCE_SLOPE));
    let bounded = ok.iter().all(|s| match s.storage_bound {
        Some(b) => s.sup_regret.is_some_and(|r| r <= b + REGRET_SLACK),
        None => s.regret_stabilizes == Some(true),
    });
    if bounded && !ok.iter().any(|s| s.storage_bound.is_none() && s.max_regret_slope.is_some_and(|v| v >= DIVERGENCE_SLOPE)) {
        Evidence::Bounded
    } else if diverging {
        Evidence::Diverging
    } else {
        Evidence::Inconclusive
    }
}

fn supply_verdict<'a>(trends: impl Iterator<Item = &'a SupplyTrend>) -> Evidence {
    let trends: Vec<&SupplyTrend> = trends.collect();
    if trends.is_empty() {
        return Evidence::NotApplicable;
    }
    if trends.iter().all(|t| t.stabilizes) {
        Evidence::Bounded
    } else if trends.iter().any(|t| !t.stabilizes && t.slope <= -DIVERGENCE_SLOPE) {
        Evidence::Diverging
    } else {
        Evidence::Inconclusive
    }
}

fn check_complete(records: &[ScanRecord], dir: &Path) -> Result<()> {
    let missing: Vec<String> = ModelKind::ALL
        .iter()
        .filter(|k| !records.iter().any(|r| r.model == **k))
        .map(|k| k.to_string())
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::IncompleteScan {
            dir: dir.to_path_buf(),
            missing,
        })
    }
}

/// One row per model in canonical model order.
pub fn classify(records: &[ScanRecord]) -> Result<Vec<ClassificationRow>> {
    check_complete(records, Path::new("<memory>"))?;
    Ok(ModelKind::ALL
        .iter()
        .map(|&kind| {
            let rec = records.iter().find(|r| r.model == kind).expect("checked");
            let ok = || rec.signals.iter().filter(|s| s.error.is_none());
            ClassificationRow {
                model: kind,
                finite_regret_evidence: finite_regret_verdict(rec),
                delta_evidence: supply_verdict(ok().filter_map(|s| s.delta.as_ref())),
                ei_evidence: supply_verdict(ok().flat_map(|s| s.ei.iter().map(|e| &e.trend))),
            }
        })
        .collect())
}

/// Read the `scan_<model>.json` records in `indir`, classify, and write the
/// classification table next to them.
pub fn classify_dir(indir: &Path) -> Result<(Vec<ClassificationRow>, Vec<PathBuf>)> {
    let mut records = Vec::new();
    for kind in ModelKind::ALL {
        let path = indir.join(format!("scan_{kind}.json"));
        if !path.exists() {
            continue;
        }
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        records.push(serde_json::from_str::<ScanRecord>(&text)?);
    }
    check_complete(&records, indir)?;
    let rows = classify(&records)?;
    let files = write_classification(indir, &rows)?;
    Ok((rows, files))
}

fn write_classification(dir: &Path, rows: &[ClassificationRow]) -> Result<Vec<PathBuf>> {
    let mut csv = String::from("model,finite_regret_evidence,delta_evidence,ei_evidence\n");
    for r in rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.model, r.finite_regret_evidence, r.delta_evidence, r.ei_evidence
        ));
    }
    Ok(vec![
        write_text(&dir.join("classification.csv"), &csv)?,
        write_json(&dir.join("classification.json"), &json!(rows))?,
    ])
}

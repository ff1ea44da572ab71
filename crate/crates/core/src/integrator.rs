//! Fixed-step RK4 trajectory generation.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    field_raw, init_state, strategy_raw, strategy_velocity_raw, ModelKind, ModelParams, ModelState,
};
use crate::error::{Error, Result};
use crate::payoffs::{eval_payoff, eval_payoff_derivative, PayoffSource};
use crate::simplex::{distance_to_simplex, norm2, safeguard_within, sub, SimplexPoint, SAFEGUARD_TOL};

pub const DEFAULT_DT: f64 = 1e-3;
pub const MAX_DT: f64 = 1e-2;
pub const MAX_STEPS: f64 = 1e9;
pub const CONVERGENCE_TOL: f64 = 1e-3;
/// Largest single-step overshoot past a face accepted for nonsmooth fields.
pub const MAX_OVERSHOOT: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub record_every: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: DEFAULT_DT,
            horizon: 500.0,
            record_every: 10,
        }
    }
}

impl IntegratorConfig {
    pub fn new(dt: f64, horizon: f64, record_every: usize) -> Result<Self> {
        let cfg = IntegratorConfig {
            dt,
            horizon,
            record_every,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(Error::Config(format!("dt must lie in (0, {MAX_DT}], got {}", self.dt)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!("T must be positive, got {}", self.horizon)));
        }
        if self.horizon / self.dt > MAX_STEPS {
            return Err(Error::Config("T/dt exceeds 1e9 steps".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn sample_spacing(&self) -> f64 {
        self.dt * self.record_every as f64
    }
}

/// What produced a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Model { kind: ModelKind, params: ModelParams },
    /// A prescribed strategy path, e.g. a fixed action or a switching policy.
    Reference { name: String },
}

/// Uniformly sampled record of a run. Every column has one entry per sample.
#[derive(Clone, Debug)]
pub struct Trajectory {
    origin: Origin,
    n: usize,
    times: Vec<f64>,
    strategies: Vec<SimplexPoint>,
    /// Empty for reference trajectories.
    states: Vec<ModelState>,
    payoffs: Vec<Vec<f64>>,
    payoff_derivatives: Vec<Vec<f64>>,
    strategy_derivatives: Vec<Vec<f64>>,
}

impl Trajectory {
    fn with_capacity(origin: Origin, n: usize, cap: usize) -> Self {
        Trajectory {
            origin,
            n,
            times: Vec::with_capacity(cap),
            strategies: Vec::with_capacity(cap),
            states: Vec::with_capacity(cap),
            payoffs: Vec::with_capacity(cap),
            payoff_derivatives: Vec::with_capacity(cap),
            strategy_derivatives: Vec::with_capacity(cap),
        }
    }

    pub fn origin(&self) -> &Origin {
        &self.origin
    }

    pub fn model(&self) -> Option<ModelKind> {
        match &self.origin {
            Origin::Model { kind, .. } => Some(*kind),
            Origin::Reference { .. } => None,
        }
    }

    pub fn label(&self) -> String {
        match &self.origin {
            Origin::Model { kind, .. } => kind.to_string(),
            Origin::Reference { name } => name.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn strategies(&self) -> &[SimplexPoint] {
        &self.strategies
    }

    pub fn states(&self) -> &[ModelState] {
        &self.states
    }

    pub fn payoffs(&self) -> &[Vec<f64>] {
        &self.payoffs
    }

    pub fn payoff_derivatives(&self) -> &[Vec<f64>] {
        &self.payoff_derivatives
    }

    pub fn strategy_derivatives(&self) -> &[Vec<f64>] {
        &self.strategy_derivatives
    }

    pub fn final_strategy(&self) -> Option<&SimplexPoint> {
        self.strategies.last()
    }

    /// CSV with header `t,x_1..x_n,p_1..p_n,xdot_1..xdot_n,pdot_1..pdot_n`,
    /// floats in scientific notation with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.n;
        let mut header = vec!["t".to_string()];
        for prefix in ["x", "p", "xdot", "pdot"] {
            header.extend((1..=n).map(|i| format!("{prefix}_{i}")));
        }
        writeln!(w, "{}", header.join(","))?;
        let mut line = String::new();
        for k in 0..self.len() {
            line.clear();
            push_float(&mut line, self.times[k]);
            for col in [
                self.strategies[k].as_slice(),
                &self.payoffs[k],
                &self.strategy_derivatives[k],
                &self.payoff_derivatives[k],
            ] {
                for &v in col {
                    line.push(',');
                    push_float(&mut line, v);
                }
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

pub(crate) fn push_float(out: &mut String, v: f64) {
    use std::fmt::Write as _;
    // a negative zero would make otherwise identical runs differ textually
    let v = if v == 0.0 { 0.0 } else { v };
    let _ = write!(out, "{v:.16e}");
}

/// Payoff for an RK stage: the signal at the stage time, or the game
/// evaluated at the stage's own strategy read-out.
fn stage_payoff(src: &PayoffSource, kind: ModelKind, n: usize, t: f64, data: &[f64]) -> Vec<f64> {
    match src {
        PayoffSource::Signal(s) => s.value(t),
        PayoffSource::Game(g) => g.eval(&strategy_raw(kind, n, data)),
    }
}

fn axpy(base: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    base.iter().zip(k).map(|(b, d)| b + h * d).collect()
}

/// Integrate `kind` from `x0` under `src` with classical RK4.
///
/// After every step the strategy block is passed through the simplex
/// safeguard. A step is repaired when the strategy lies within
/// `SAFEGUARD_TOL` of the simplex. Nonsmooth fields switch off at a face
/// only after crossing it, so for them the allowance grows by the distance
/// the step travelled, up to `MAX_OVERSHOOT`. Anything else, including
/// non-finite state, is a divergence.
pub fn integrate(
    kind: ModelKind,
    params: &ModelParams,
    x0: &SimplexPoint,
    src: &PayoffSource,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    src.validate()?;
    let n = x0.dim();
    if src.dim() != n {
        return Err(Error::domain(format!(
            "payoff dimension {} does not match strategy dimension {n}",
            src.dim()
        )));
    }
    let mut state = init_state(kind, n, params, x0)?;
    let steps = cfg.steps();
    let mut traj = Trajectory::with_capacity(
        Origin::Model {
            kind,
            params: params.clone(),
        },
        n,
        steps / cfg.record_every + 1,
    );
    record(&mut traj, kind, params, src, 0.0, &state);

    let dt = cfg.dt;
    for step in 1..=steps {
        let t0 = (step - 1) as f64 * dt;
        let y = state.as_slice();
        let k1 = field_raw(kind, n, y, &stage_payoff(src, kind, n, t0, y), params);
        let y2 = axpy(y, 0.5 * dt, &k1);
        let k2 = field_raw(kind, n, &y2, &stage_payoff(src, kind, n, t0 + 0.5 * dt, &y2), params);
        let y3 = axpy(y, 0.5 * dt, &k2);
        let k3 = field_raw(kind, n, &y3, &stage_payoff(src, kind, n, t0 + 0.5 * dt, &y3), params);
        let y4 = axpy(y, dt, &k3);
        let k4 = field_raw(kind, n, &y4, &stage_payoff(src, kind, n, t0 + dt, &y4), params);
        let next: Vec<f64> = (0..y.len())
            .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();

        let t = step as f64 * dt;
        let diverged = |reason: String| Error::IntegrationDiverged { time: t, reason };
        if next.iter().any(|v| !v.is_finite()) {
            return Err(diverged("non-finite state".into()));
        }
        let prev_x = state.as_slice()[..n].to_vec();
        let data = state.data_mut();
        *data = next;
        if kind.has_strategy_state() {
            let tol = if kind.is_nonsmooth() {
                SAFEGUARD_TOL + norm2(&sub(&data[..n], &prev_x)).min(MAX_OVERSHOOT)
            } else {
                SAFEGUARD_TOL
            };
            let fixed = safeguard_within(&data[..n], tol).map_err(|_| {
                diverged(format!(
                    "strategy at distance {:e} from the simplex",
                    distance_to_simplex(&data[..n])
                ))
            })?;
            data[..n].copy_from_slice(&fixed);
        }
        if step % cfg.record_every == 0 {
            record(&mut traj, kind, params, src, t, &state);
        }
    }
    Ok(traj)
}

fn record(
    traj: &mut Trajectory,
    kind: ModelKind,
    params: &ModelParams,
    src: &PayoffSource,
    t: f64,
    state: &ModelState,
) {
    let n = state.dim();
    let x = strategy_raw(kind, n, state.as_slice());
    let p = eval_payoff(src, t, &x);
    let xdot = strategy_velocity_raw(kind, n, state.as_slice(), &p, params);
    let pdot = eval_payoff_derivative(src, t, &x, &xdot);
    traj.times.push(t);
    traj.strategies.push(SimplexPoint::from_raw(x));
    traj.states.push(state.clone());
    traj.payoffs.push(p);
    traj.payoff_derivatives.push(pdot);
    traj.strategy_derivatives.push(xdot);
}

/// Sample a prescribed strategy path `policy(t, p(t))` on the integrator
/// grid. The strategy derivative column is zero: reference policies are
/// piecewise constant.
pub fn reference_trajectory<F>(
    name: &str,
    src: &PayoffSource,
    cfg: &IntegratorConfig,
    mut policy: F,
) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64]) -> SimplexPoint,
{
    cfg.validate()?;
    let signal = match src {
        PayoffSource::Signal(s) => s,
        PayoffSource::Game(_) => {
            return Err(Error::domain("reference policies need an exogenous signal"));
        }
    };
    let n = signal.dim();
    let steps = cfg.steps();
    let mut traj = Trajectory::with_capacity(
        Origin::Reference { name: name.into() },
        n,
        steps / cfg.record_every + 1,
    );
    for step in (0..=steps).step_by(cfg.record_every) {
        let t = step as f64 * cfg.dt;
        let p = signal.value(t);
        let x = policy(t, &p);
        if x.dim() != n {
            return Err(Error::domain("policy returned a strategy of the wrong dimension"));
        }
        traj.times.push(t);
        traj.strategies.push(x);
        traj.payoffs.push(p);
        traj.payoff_derivatives.push(signal.derivative(t));
        traj.strategy_derivatives.push(vec![0.0; n]);
    }
    Ok(traj)
}

/// Best response to the current payoff, ties to the lowest index.
pub fn best_response(p: &[f64]) -> SimplexPoint {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    let mut x = vec![0.0; p.len()];
    x[best] = 1.0;
    SimplexPoint::from_raw(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub final_dist: f64,
    pub converged: bool,
}

/// Largest Euclidean distance to `target` over the trailing `tail_fraction`
/// of samples; converged when that is below 1e-3.
pub fn convergence_check(traj: &Trajectory, target: &SimplexPoint, tail_fraction: f64) -> Result<ConvergenceReport> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::domain(format!("tail_fraction must lie in (0, 1], got {tail_fraction}")));
    }
    if target.dim() != traj.dim() {
        return Err(Error::domain("target dimension mismatch"));
    }
    let len = traj.len();
    let tail = ((len as f64 * tail_fraction).ceil() as usize).clamp(1, len);
    let final_dist = traj.strategies[len - tail..]
        .iter()
        .map(|x| norm2(&sub(x, target)))
        .fold(0.0, f64::max);
    Ok(ConvergenceReport {
        final_dist,
        converged: final_dist < CONVERGENCE_TOL,
    })
}

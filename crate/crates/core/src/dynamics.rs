//! Learning dynamics as state-space vector fields.
//!
//! Every model stores its state as one flat vector so the integrator can
//! treat all of them alike. The first block of `n` entries is either the
//! strategy `x` or the score vector `z`; models with an auxiliary state
//! (`xi` for the higher-order variants, the filtered payoff for the latency
//! model) carry it as a second block of `n` entries.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{
    dot, norm_inf, project_simplex_raw, softmax_raw, tangent_cone_raw, tangent_space_raw,
    SimplexPoint, TangentVector, EPS_ACTIVE,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    /// Replicator dynamics.
    #[serde(rename = "rd")]
    Rd,
    /// Follow-the-regularized-leader with entropic regularizer.
    #[serde(rename = "ftrl")]
    FtrlEntropy,
    /// Direct projection dynamics.
    #[serde(rename = "dp")]
    Dp,
    #[serde(rename = "sho-ftrl")]
    ShoFtrl,
    #[serde(rename = "sho-dp")]
    ShoDp,
    /// Brown-von Neumann-Nash.
    #[serde(rename = "bnn")]
    Bnn,
    #[serde(rename = "smith")]
    Smith,
    #[serde(rename = "logit")]
    Logit,
    /// Target projection.
    #[serde(rename = "tp")]
    Tp,
    /// Exponential replicator dynamics.
    #[serde(rename = "exrd")]
    ExRd,
    /// Replicator dynamics driven by a first-order filtered payoff.
    #[serde(rename = "rd-latency")]
    RdLatency,
}

impl ModelKind {
    pub const ALL: [ModelKind; 11] = [
        ModelKind::Rd,
        ModelKind::FtrlEntropy,
        ModelKind::Dp,
        ModelKind::ShoFtrl,
        ModelKind::ShoDp,
        ModelKind::Bnn,
        ModelKind::Smith,
        ModelKind::Logit,
        ModelKind::Tp,
        ModelKind::ExRd,
        ModelKind::RdLatency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Rd => "rd",
            ModelKind::FtrlEntropy => "ftrl",
            ModelKind::Dp => "dp",
            ModelKind::ShoFtrl => "sho-ftrl",
            ModelKind::ShoDp => "sho-dp",
            ModelKind::Bnn => "bnn",
            ModelKind::Smith => "smith",
            ModelKind::Logit => "logit",
            ModelKind::Tp => "tp",
            ModelKind::ExRd => "exrd",
            ModelKind::RdLatency => "rd-latency",
        }
    }

    /// Strategy is read out of a score vector through softmax.
    pub fn uses_scores(self) -> bool {
        matches!(self, ModelKind::FtrlEntropy | ModelKind::ShoFtrl | ModelKind::ExRd)
    }

    /// Models whose state carries `x` directly.
    pub fn has_strategy_state(self) -> bool {
        !self.uses_scores()
    }

    pub fn has_aux(self) -> bool {
        matches!(self, ModelKind::ShoFtrl | ModelKind::ShoDp)
    }

    pub fn has_filtered_payoff(self) -> bool {
        matches!(self, ModelKind::RdLatency)
    }

    /// Length of the flat state vector for dimension `n`.
    pub fn state_len(self, n: usize) -> usize {
        if self.has_aux() || self.has_filtered_payoff() {
            2 * n
        } else {
            n
        }
    }

    /// Initial strategy must be interior (log or softmax parameterization).
    pub fn needs_interior_start(self) -> bool {
        matches!(
            self,
            ModelKind::Rd
                | ModelKind::FtrlEntropy
                | ModelKind::ShoFtrl
                | ModelKind::ExRd
                | ModelKind::RdLatency
        )
    }

    /// Right-hand side is only Lipschitz (projections, positive parts).
    pub fn is_nonsmooth(self) -> bool {
        matches!(
            self,
            ModelKind::Dp | ModelKind::ShoDp | ModelKind::Bnn | ModelKind::Smith | ModelKind::Tp
        )
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::UnknownModel(s.to_string()))
    }
}

/// Filter rate `lambda` and feedback gain `gamma`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: f64,
    pub gamma: f64,
    /// Initial filtered payoff for the latency model; zeros when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter_init: Option<Vec<f64>>,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            lambda: 1.0,
            gamma: 1.0,
            filter_init: None,
        }
    }
}

impl ModelParams {
    pub fn new(lambda: f64, gamma: f64) -> Result<Self> {
        let p = ModelParams {
            lambda,
            gamma,
            filter_init: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::domain(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::domain(format!("gamma must be > 0, got {}", self.gamma)));
        }
        Ok(())
    }
}

/// Composite model state.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelState {
    kind: ModelKind,
    n: usize,
    data: Vec<f64>,
}

impl ModelState {
    /// Wrap a raw state vector laid out as described in the module docs.
    pub fn from_raw(kind: ModelKind, n: usize, data: Vec<f64>) -> Result<Self> {
        if n < 2 || data.len() != kind.state_len(n) {
            return Err(Error::domain(format!(
                "state of length {} does not fit model {kind} with n = {n}",
                data.len()
            )));
        }
        Ok(ModelState { kind, n, data })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut Vec<f64> {
        &mut self.data
    }

    pub fn x(&self) -> Option<&[f64]> {
        self.kind.has_strategy_state().then(|| &self.data[..self.n])
    }

    pub fn z(&self) -> Option<&[f64]> {
        self.kind.uses_scores().then(|| &self.data[..self.n])
    }

    pub fn xi(&self) -> Option<&[f64]> {
        self.kind.has_aux().then(|| &self.data[self.n..])
    }

    pub fn filtered_payoff(&self) -> Option<&[f64]> {
        self.kind.has_filtered_payoff().then(|| &self.data[self.n..])
    }
}

pub fn init_state(kind: ModelKind, n: usize, params: &ModelParams, x0: &SimplexPoint) -> Result<ModelState> {
    params.validate()?;
    if x0.dim() != n {
        return Err(Error::domain(format!("x0 has dimension {}, expected {n}", x0.dim())));
    }
    if kind.needs_interior_start() && !x0.is_interior(0.0) {
        return Err(Error::domain(format!(
            "model {kind} needs an interior initial strategy, got {:?}",
            x0.as_slice()
        )));
    }
    let mut data = Vec::with_capacity(kind.state_len(n));
    if kind.uses_scores() {
        data.extend(x0.iter().map(|v| v.ln()));
    } else {
        data.extend_from_slice(x0);
    }
    if kind.has_aux() {
        data.extend_from_slice(x0);
    }
    if kind.has_filtered_payoff() {
        match &params.filter_init {
            Some(p) if p.len() == n => data.extend_from_slice(p),
            Some(p) => {
                return Err(Error::domain(format!(
                    "filter_init has length {}, expected {n}",
                    p.len()
                )))
            }
            None => data.extend(std::iter::repeat(0.0).take(n)),
        }
    }
    ModelState::from_raw(kind, n, data)
}

/// Strategy read-out: `x` itself, or `softmax(z)`.
pub fn read_strategy(kind: ModelKind, state: &ModelState) -> SimplexPoint {
    debug_assert_eq!(kind, state.kind);
    SimplexPoint::from_raw(strategy_raw(kind, state.n, &state.data))
}

/// Read-out without simplex validation; used on intermediate RK stages.
pub(crate) fn strategy_raw(kind: ModelKind, n: usize, data: &[f64]) -> Vec<f64> {
    if kind.uses_scores() {
        softmax_raw(&data[..n])
    } else {
        data[..n].to_vec()
    }
}

pub fn vector_field(kind: ModelKind, state: &ModelState, p: &[f64], params: &ModelParams) -> Vec<f64> {
    debug_assert_eq!(kind, state.kind);
    field_raw(kind, state.n, &state.data, p, params)
}

fn replicator(x: &[f64], p: &[f64]) -> Vec<f64> {
    let avg = dot(x, p);
    x.iter().zip(p).map(|(xi, pi)| xi * (pi - avg)).collect()
}

pub(crate) fn field_raw(kind: ModelKind, n: usize, data: &[f64], p: &[f64], params: &ModelParams) -> Vec<f64> {
    let head = &data[..n];
    match kind {
        ModelKind::Rd => replicator(head, p),
        ModelKind::FtrlEntropy => p.to_vec(),
        ModelKind::Dp => tangent_cone_raw(head, p, EPS_ACTIVE),
        ModelKind::ShoFtrl => {
            let x = softmax_raw(head);
            let xi = &data[n..];
            let mut out = Vec::with_capacity(2 * n);
            out.extend((0..n).map(|i| p[i] - params.gamma * (x[i] - xi[i])));
            out.extend((0..n).map(|i| params.lambda * (x[i] - xi[i])));
            out
        }
        ModelKind::ShoDp => {
            let xi = &data[n..];
            let shaped: Vec<f64> = (0..n).map(|i| p[i] - params.gamma * (head[i] - xi[i])).collect();
            let mut out = tangent_cone_raw(head, &shaped, EPS_ACTIVE);
            out.extend((0..n).map(|i| params.lambda * (head[i] - xi[i])));
            out
        }
        ModelKind::Bnn => {
            let avg = dot(head, p);
            let excess: Vec<f64> = p.iter().map(|pi| (pi - avg).max(0.0)).collect();
            let total: f64 = excess.iter().sum();
            excess.iter().zip(head).map(|(e, xi)| e - xi * total).collect()
        }
        ModelKind::Smith => (0..n)
            .map(|i| {
                let inflow: f64 = (0..n).map(|j| head[j] * (p[i] - p[j]).max(0.0)).sum();
                let outflow: f64 = (0..n).map(|j| (p[j] - p[i]).max(0.0)).sum();
                inflow - head[i] * outflow
            })
            .collect(),
        ModelKind::Logit => softmax_raw(p).iter().zip(head).map(|(s, xi)| s - xi).collect(),
        ModelKind::Tp => {
            let target: Vec<f64> = head.iter().zip(p).map(|(a, b)| a + b).collect();
            project_simplex_raw(&target).iter().zip(head).map(|(t, xi)| t - xi).collect()
        }
        ModelKind::ExRd => p.iter().zip(head).map(|(pi, zi)| params.lambda * (pi - zi)).collect(),
        ModelKind::RdLatency => {
            let filtered = &data[n..];
            let mut out = replicator(head, filtered);
            out.extend((0..n).map(|i| params.lambda * (p[i] - filtered[i])));
            out
        }
    }
}

/// Time derivative of the strategy read-out, evaluated exactly: the strategy
/// block of the field, or the softmax Jacobian applied to the score velocity.
pub fn strategy_velocity(kind: ModelKind, state: &ModelState, p: &[f64], params: &ModelParams) -> TangentVector {
    TangentVector::from_raw(strategy_velocity_raw(kind, state.n, &state.data, p, params))
}

pub(crate) fn strategy_velocity_raw(
    kind: ModelKind,
    n: usize,
    data: &[f64],
    p: &[f64],
    params: &ModelParams,
) -> Vec<f64> {
    let f = field_raw(kind, n, data, p, params);
    if kind.uses_scores() {
        let x = softmax_raw(&data[..n]);
        let zdot = &f[..n];
        replicator(&x, zdot)
    } else {
        f[..n].to_vec()
    }
}

/// `||vector field||_inf <= tol`. Score blocks are compared modulo the
/// all-ones direction, which leaves the softmax read-out unchanged.
pub fn is_rest_point(kind: ModelKind, state: &ModelState, p: &[f64], params: &ModelParams, tol: f64) -> bool {
    let mut f = vector_field(kind, state, p, params);
    let n = state.n;
    if kind.uses_scores() {
        let head = tangent_space_raw(&f[..n]);
        f[..n].copy_from_slice(&head);
    }
    norm_inf(&f) <= tol
}

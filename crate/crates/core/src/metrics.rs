//! Integral functionals over sampled trajectories: regret, average reward,
//! passivity supply integrals and storage functions.
//!
//! All integrals are cumulative trapezoidal sums over the recorded grid and
//! are returned as curves aligned with `Trajectory::times`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{ModelKind, ModelState};
use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::simplex::{dot, softmax_raw, sub, vertices, SimplexPoint, SUM_TOL};

/// Slack added to storage bounds when judging regret curves.
pub const REGRET_SLACK: f64 = 1e-3;

/// Floor applied to strategy coordinates inside logarithmic storage.
pub const LOG_FLOOR: f64 = 1e-12;

/// Cumulative trapezoidal integral of `values` over `times`, starting at 0.
pub fn cumulative_trapezoid(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for k in 0..values.len() {
        if k > 0 {
            acc += 0.5 * (times[k] - times[k - 1]) * (values[k] + values[k - 1]);
        }
        out.push(acc);
    }
    out
}

fn check_anchor(traj: &Trajectory, anchor: &SimplexPoint) -> Result<()> {
    if anchor.dim() != traj.dim() {
        return Err(Error::domain("anchor dimension mismatch"));
    }
    if anchor.iter().any(|&v| v < 0.0) || (anchor.iter().sum::<f64>() - 1.0).abs() > SUM_TOL {
        return Err(Error::domain("anchor is not on the simplex"));
    }
    Ok(())
}

/// `R_t(anchor) = int_0^t p' (anchor - x) ds` at every sample.
pub fn regret(traj: &Trajectory, anchor: &SimplexPoint) -> Result<Vec<f64>> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    check_anchor(traj, anchor)?;
    let integrand: Vec<f64> = traj
        .payoffs()
        .iter()
        .zip(traj.strategies())
        .map(|(p, x)| dot(p, &sub(anchor, x)))
        .collect();
    Ok(cumulative_trapezoid(traj.times(), &integrand))
}

/// Initial storage value that bounds the regret of finite-regret models
/// against every vertex. `None` for models without such a certificate.
pub fn storage_bound(kind: ModelKind, x0: &SimplexPoint) -> Option<f64> {
    let verts = vertices(x0.dim());
    let kl = |i: usize| -x0[i].max(LOG_FLOOR).ln();
    let half_sq = |i: usize| 0.5 * sub(x0, &verts[i]).iter().map(|d| d * d).sum::<f64>();
    let worst = |f: &dyn Fn(usize) -> f64| (0..x0.dim()).map(f).fold(f64::NEG_INFINITY, f64::max);
    match kind {
        ModelKind::Rd | ModelKind::FtrlEntropy => Some(worst(&kl)),
        ModelKind::Dp => Some(worst(&half_sq)),
        ModelKind::ShoFtrl => Some(worst(&|i| kl(i) + half_sq(i))),
        ModelKind::ShoDp => Some(worst(&|i| 2.0 * half_sq(i))),
        _ => None,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegretReport {
    /// `vertex_regret_curves[i]` is `R_t(e_{i+1})`.
    pub vertex_regret_curves: Vec<Vec<f64>>,
    pub sup_regret: f64,
    pub storage_bound: Option<f64>,
    /// `sup_regret <= storage_bound + REGRET_SLACK`; false without a bound.
    pub bounded_verdict: bool,
}

pub fn regret_report(traj: &Trajectory, kind: ModelKind, x0: &SimplexPoint) -> Result<RegretReport> {
    let curves = vertices(traj.dim())
        .iter()
        .map(|e| regret(traj, e))
        .collect::<Result<Vec<_>>>()?;
    let sup_regret = curves.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let bound = storage_bound(kind, x0);
    Ok(RegretReport {
        vertex_regret_curves: curves,
        sup_regret,
        storage_bound: bound,
        bounded_verdict: bound.is_some_and(|b| sup_regret <= b + REGRET_SLACK),
    })
}

/// `(1/t) int_0^t p'x ds`; the first sample holds the instantaneous reward.
pub fn average_reward(traj: &Trajectory) -> Vec<f64> {
    let reward: Vec<f64> = traj
        .payoffs()
        .iter()
        .zip(traj.strategies())
        .map(|(p, x)| dot(p, x))
        .collect();
    let cum = cumulative_trapezoid(traj.times(), &reward);
    traj.times()
        .iter()
        .zip(cum)
        .zip(&reward)
        .map(|((&t, c), &r0)| if t > 0.0 { c / t } else { r0 })
        .collect()
}

/// An equilibrium pair `(p*, x*)` for the equilibrium-independent check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub payoff: Vec<f64>,
    pub strategy: SimplexPoint,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EiCurve {
    pub equilibrium: Equilibrium,
    pub curve: Vec<f64>,
    pub min: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PassivityReport {
    /// `plain_curves[i]` is `<p, x - e_{i+1}>_t`.
    pub plain_curves: Vec<Vec<f64>>,
    pub plain_min: Vec<f64>,
    /// `<x', p'>_t`.
    pub delta_curve: Vec<f64>,
    pub delta_min: f64,
    pub ei: Option<EiCurve>,
}

fn curve_min(c: &[f64]) -> f64 {
    c.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn passivity_report(traj: &Trajectory, equilibrium: Option<&Equilibrium>) -> Result<PassivityReport> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let plain_curves: Vec<Vec<f64>> = vertices(traj.dim())
        .iter()
        .map(|e| regret(traj, e).map(|r| r.into_iter().map(|v| -v).collect()))
        .collect::<Result<_>>()?;
    let plain_min = plain_curves.iter().map(|c| curve_min(c)).collect();

    let delta: Vec<f64> = traj
        .strategy_derivatives()
        .iter()
        .zip(traj.payoff_derivatives())
        .map(|(xd, pd)| dot(xd, pd))
        .collect();
    let delta_curve = cumulative_trapezoid(traj.times(), &delta);
    let delta_min = curve_min(&delta_curve);

    let ei = match equilibrium {
        None => None,
        Some(eq) => {
            check_anchor(traj, &eq.strategy)?;
            if eq.payoff.len() != traj.dim() {
                return Err(Error::domain("equilibrium payoff dimension mismatch"));
            }
            let integrand: Vec<f64> = traj
                .payoffs()
                .iter()
                .zip(traj.strategies())
                .map(|(p, x)| dot(&sub(p, &eq.payoff), &sub(x, &eq.strategy)))
                .collect();
            let curve = cumulative_trapezoid(traj.times(), &integrand);
            let min = curve_min(&curve);
            Some(EiCurve {
                equilibrium: eq.clone(),
                curve,
                min,
            })
        }
    };
    Ok(PassivityReport {
        plain_curves,
        plain_min,
        delta_curve,
        delta_min,
        ei,
    })
}

/// Equilibrium pairs used to probe equilibrium-independent passivity.
///
/// Models for which every strategy is at rest under the payoff `1` are
/// probed at `(1, e_i)` for every vertex. Logit and ExRD have the single
/// rest point `softmax(1) = uniform` for that payoff.
pub fn ei_equilibria(kind: ModelKind, n: usize) -> Vec<Equilibrium> {
    let ones = vec![1.0; n];
    match kind {
        ModelKind::Logit | ModelKind::ExRd => vec![Equilibrium {
            strategy: SimplexPoint::from_raw(softmax_raw(&ones)),
            payoff: ones,
        }],
        _ => vertices(n)
            .into_iter()
            .map(|e| Equilibrium {
                payoff: ones.clone(),
                strategy: e,
            })
            .collect(),
    }
}

/// Storage functions certifying passivity from `p` to `x - anchor`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StorageFn {
    /// `sum_i a_i log(a_i / x_i)`.
    Kl(SimplexPoint),
    /// `0.5 ||x - a||^2`.
    HalfSqDist(SimplexPoint),
    /// `max_y (z'y - h(y)) - (z'a - h(a))` with negative-entropy `h`.
    FtrlFenchel(SimplexPoint),
    /// Base storage plus `0.5 ||xi - a||^2` on the auxiliary state.
    PlusAuxSq(Box<StorageFn>, SimplexPoint),
}

impl StorageFn {
    pub fn anchor(&self) -> &SimplexPoint {
        match self {
            StorageFn::Kl(a) | StorageFn::HalfSqDist(a) | StorageFn::FtrlFenchel(a) => a,
            StorageFn::PlusAuxSq(base, _) => base.anchor(),
        }
    }

    /// The storage that certifies `kind`'s regret against `anchor`.
    pub fn matching(kind: ModelKind, anchor: &SimplexPoint) -> Option<StorageFn> {
        let a = anchor.clone();
        match kind {
            ModelKind::Rd => Some(StorageFn::Kl(a)),
            ModelKind::FtrlEntropy => Some(StorageFn::FtrlFenchel(a)),
            ModelKind::Dp => Some(StorageFn::HalfSqDist(a)),
            ModelKind::ShoFtrl => Some(StorageFn::PlusAuxSq(Box::new(StorageFn::FtrlFenchel(a.clone())), a)),
            ModelKind::ShoDp => Some(StorageFn::PlusAuxSq(Box::new(StorageFn::HalfSqDist(a.clone())), a)),
            _ => None,
        }
    }
}

fn xlogx(v: f64) -> f64 {
    if v > 0.0 {
        v * v.ln()
    } else {
        0.0
    }
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

pub fn storage_eval(storage: &StorageFn, state: &ModelState) -> Result<f64> {
    let kind = state.kind();
    let n = state.dim();
    let strategy = crate::dynamics::strategy_raw(kind, n, state.as_slice());
    if storage.anchor().dim() != n {
        return Err(Error::domain("storage anchor dimension mismatch"));
    }
    match storage {
        StorageFn::Kl(a) => Ok(a
            .iter()
            .zip(&strategy)
            .map(|(&ai, &xi)| xlogx(ai) - ai * xi.max(LOG_FLOOR).ln())
            .sum::<f64>()
            .max(0.0)),
        StorageFn::HalfSqDist(a) => Ok(0.5 * sub(&strategy, a).iter().map(|d| d * d).sum::<f64>()),
        StorageFn::FtrlFenchel(a) => {
            let z = state
                .z()
                .ok_or_else(|| Error::domain(format!("model {kind} has no score state")))?;
            // lse(z) - z'a = sum_i a_i (lse(z) - z_i), which stays accurate
            // when the scores grow large
            let lse = log_sum_exp(z);
            let v: f64 = a.iter().zip(z).map(|(&ai, &zi)| ai * (lse - zi)).sum::<f64>()
                + a.iter().map(|&ai| xlogx(ai)).sum::<f64>();
            Ok(v.max(0.0))
        }
        StorageFn::PlusAuxSq(base, xi_anchor) => {
            let xi = state
                .xi()
                .ok_or_else(|| Error::domain(format!("model {kind} has no auxiliary state")))?;
            Ok(storage_eval(base, state)? + 0.5 * sub(xi, xi_anchor).iter().map(|d| d * d).sum::<f64>())
        }
    }
}

/// Largest value of `V(state(t)) - V(state(0)) - <p, x - anchor>_t`; the
/// storage inequality says it is at most zero up to quadrature error.
pub fn dissipation_check(traj: &Trajectory, storage: &StorageFn) -> Result<f64> {
    let states = traj.states();
    if states.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let anchor = storage.anchor();
    let supply: Vec<f64> = regret(traj, anchor)?.into_iter().map(|r| -r).collect();
    let v0 = storage_eval(storage, &states[0])?;
    let mut worst = f64::NEG_INFINITY;
    for (state, s) in states.iter().zip(&supply) {
        worst = worst.max(storage_eval(storage, state)? - v0 - s);
    }
    Ok(worst)
}

/// [`dissipation_check`] with the model's own storage, maximized over all
/// vertex anchors. `None` for models without a storage certificate.
pub fn vertex_dissipation(traj: &Trajectory) -> Result<Option<f64>> {
    let Some(kind) = traj.model() else {
        return Ok(None);
    };
    let mut worst: Option<f64> = None;
    for e in vertices(traj.dim()) {
        let Some(storage) = StorageFn::matching(kind, &e) else {
            return Ok(None);
        };
        let v = dissipation_check(traj, &storage)?;
        worst = Some(worst.map_or(v, |w: f64| w.max(v)));
    }
    Ok(worst)
}

/// `p_hat' (diag(x) - x x') p_hat` at each sample of a latency-model run.
pub fn qt_integrand(traj: &Trajectory) -> Result<Vec<f64>> {
    let label = traj.label();
    traj.states()
        .iter()
        .zip(traj.strategies())
        .map(|(s, x)| {
            let ph = s
                .filtered_payoff()
                .ok_or_else(|| Error::MissingFilteredPayoff(label.clone()))?;
            Ok(quadratic_q(x, ph))
        })
        .collect::<Result<Vec<_>>>()
        .and_then(|v| if v.is_empty() { Err(Error::MissingFilteredPayoff(label.clone())) } else { Ok(v) })
}

/// `v' (diag(x) - x x') v = sum_i x_i (v_i - x'v)^2`, which is nonnegative
/// by construction.
pub fn quadratic_q(x: &[f64], v: &[f64]) -> f64 {
    let m = dot(x, v);
    x.iter().zip(v).map(|(xi, vi)| xi * (vi - m) * (vi - m)).sum()
}

/// Least-squares slope of `values` against `times` over the samples from
/// `from_fraction` of the way through to the end.
pub fn tail_slope(times: &[f64], values: &[f64], from_fraction: f64) -> f64 {
    let len = values.len();
    let start = ((len as f64 * from_fraction).floor() as usize).min(len.saturating_sub(2));
    let (t, v) = (&times[start..], &values[start..]);
    let m = t.len() as f64;
    let tm = t.iter().sum::<f64>() / m;
    let vm = v.iter().sum::<f64>() / m;
    let cov: f64 = t.iter().zip(v).map(|(a, b)| (a - tm) * (b - vm)).sum();
    let var: f64 = t.iter().map(|a| (a - tm) * (a - tm)).sum();
    if var > 0.0 {
        cov / var
    } else {
        0.0
    }
}

/// True when the last quarter of a curve sets no new minimum more than
/// `tol` below the minimum of the first three quarters.
pub fn minimum_stabilizes(values: &[f64], tol: f64) -> bool {
    let split = (values.len() * 3) / 4;
    if split == 0 || split >= values.len() {
        return true;
    }
    let head = curve_min(&values[..split]);
    let tail = curve_min(&values[split..]);
    tail >= head - tol
}

/// True when the curve never exceeds its value at the midpoint by more than
/// `tol` over the second half.
pub fn maximum_stabilizes(values: &[f64], tol: f64) -> bool {
    let mid = values.len() / 2;
    values[mid..].iter().all(|&v| v <= values[mid] + tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{init_state, ModelParams};
    use crate::integrator::{integrate, reference_trajectory, IntegratorConfig};
    use crate::payoffs::{constant_signal, example1_signal, PayoffSource};
    use crate::simplex::vertex;

    fn cfg(dt: f64, t: f64) -> IntegratorConfig {
        IntegratorConfig::new(dt, t, 1).unwrap()
    }

    #[test]
    fn trapezoid_is_exact_for_linear() {
        let t: Vec<f64> = (0..11).map(|k| k as f64 * 0.1).collect();
        let c = cumulative_trapezoid(&t, &t);
        assert!((c[10] - 0.5).abs() < 1e-14);
        assert_eq!(c[0], 0.0);
    }

    #[test]
    fn regret_examples() {
        let src: PayoffSource = constant_signal(vec![1.0, 0.25]).into();
        let x = SimplexPoint::new(vec![0.3, 0.7]).unwrap();
        let tr = reference_trajectory("fixed", &src, &cfg(1e-2, 4.0), |_, _| x.clone()).unwrap();
        let anchor = vertex(1, 2).unwrap();
        let r = regret(&tr, &anchor).unwrap();
        let expected = 4.0 * (1.0 * (1.0 - 0.3) + 0.25 * (0.0 - 0.7));
        assert!((r.last().unwrap() - expected).abs() < 1e-12);
        assert!(regret(&tr, &x).unwrap().iter().all(|v| v.abs() < 1e-12));

        let e2 = vertex(2, 2).unwrap();
        let s1: PayoffSource = example1_signal().into();
        let tr = reference_trajectory("e2", &s1, &cfg(1e-2, 10.0), |_, _| e2.clone()).unwrap();
        assert!(regret(&tr, &e2).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn regret_rejects_off_simplex_anchor() {
        let src: PayoffSource = constant_signal(vec![1.0, 0.0]).into();
        let x = SimplexPoint::uniform(2);
        let tr = reference_trajectory("u", &src, &cfg(1e-2, 1.0), |_, _| x.clone()).unwrap();
        let bad = SimplexPoint::from_raw(vec![0.7, 0.7]);
        assert!(regret(&tr, &bad).is_err());
    }

    #[test]
    fn storage_bound_examples() {
        let u = SimplexPoint::uniform(2);
        assert!((storage_bound(ModelKind::Rd, &u).unwrap() - 2f64.ln()).abs() < 1e-15);
        // 0.5 * ||[0.5, 0.5] - [1, 0]||^2 = 0.5 * 0.5
        assert!((storage_bound(ModelKind::Dp, &u).unwrap() - 0.25).abs() < 1e-15);
        assert!(storage_bound(ModelKind::Bnn, &u).is_none());
        let sho = storage_bound(ModelKind::ShoFtrl, &u).unwrap();
        assert!((sho - (2f64.ln() + 0.25)).abs() < 1e-15);
        assert!((storage_bound(ModelKind::ShoDp, &u).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn storage_eval_examples() {
        let prm = ModelParams::default();
        let u = SimplexPoint::uniform(2);
        let rd = init_state(ModelKind::Rd, 2, &prm, &u).unwrap();
        let e1 = vertex(1, 2).unwrap();
        let v = storage_eval(&StorageFn::Kl(e1.clone()), &rd).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
        assert_eq!(storage_eval(&StorageFn::HalfSqDist(u.clone()), &rd).unwrap(), 0.0);

        let u3 = SimplexPoint::uniform(3);
        let ftrl = ModelState::from_raw(ModelKind::FtrlEntropy, 3, vec![0.0; 3]).unwrap();
        let v = storage_eval(&StorageFn::FtrlFenchel(u3), &ftrl).unwrap();
        assert!(v.abs() < 1e-15);

        // Fenchel storage equals KL(anchor || softmax(z)) even for huge scores
        let z = vec![400.0, 399.0, -50.0];
        let big = ModelState::from_raw(ModelKind::FtrlEntropy, 3, z.clone()).unwrap();
        let a = SimplexPoint::new(vec![0.2, 0.8, 0.0]).unwrap();
        let sig = softmax_raw(&z);
        let kl: f64 = a.iter().zip(&sig).map(|(&ai, &si)| xlogx(ai) - ai * si.ln()).sum();
        let v = storage_eval(&StorageFn::FtrlFenchel(a), &big).unwrap();
        assert!((v - kl).abs() < 1e-12);

        // boundary state uses the floor
        let edge = ModelState::from_raw(ModelKind::Rd, 2, vec![0.0, 1.0]).unwrap();
        let v = storage_eval(&StorageFn::Kl(e1), &edge).unwrap();
        assert!((v + LOG_FLOOR.ln()).abs() < 1e-9 && v.is_finite());

        assert!(storage_eval(&StorageFn::FtrlFenchel(u.clone()), &rd).is_err());
        assert!(storage_eval(&StorageFn::PlusAuxSq(Box::new(StorageFn::Kl(u.clone())), u), &rd).is_err());
    }

    #[test]
    fn average_reward_of_fixed_actions() {
        let src: PayoffSource = example1_signal().into();
        let e2 = vertex(2, 2).unwrap();
        let tr = reference_trajectory("e2", &src, &cfg(1e-2, 50.0), |_, _| e2.clone()).unwrap();
        let avg = average_reward(&tr);
        assert!((avg.last().unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(avg[0], 0.5);
    }

    #[test]
    fn passivity_examples() {
        let src: PayoffSource = constant_signal(vec![1.0, 0.0, 0.5]).into();
        let x0 = SimplexPoint::new(vec![0.2, 0.3, 0.5]).unwrap();
        let tr = integrate(ModelKind::Rd, &ModelParams::default(), &x0, &src, &cfg(1e-2, 20.0)).unwrap();
        let rep = passivity_report(&tr, None).unwrap();
        assert!(rep.delta_curve.iter().all(|v| *v == 0.0));
        for (i, m) in rep.plain_min.iter().enumerate() {
            assert!(*m >= x0[i].ln() - 1e-6, "vertex {i}: {m}");
        }
        assert!(rep.ei.is_none());
    }

    #[test]
    fn qt_examples() {
        assert_eq!(quadratic_q(&[1.0, 0.0, 0.0], &[3.0, -1.0, 2.0]), 0.0);
        assert!(quadratic_q(&[0.2, 0.3, 0.5], &[1.5; 3]).abs() < 1e-15);
        assert!((quadratic_q(&[0.5, 0.5], &[1.0, 0.0]) - 0.25).abs() < 1e-15);
        let src: PayoffSource = example1_signal().into();
        let tr = integrate(ModelKind::Rd, &ModelParams::default(), &SimplexPoint::uniform(2), &src, &cfg(1e-2, 1.0))
            .unwrap();
        assert!(matches!(qt_integrand(&tr), Err(Error::MissingFilteredPayoff(_))));
    }

    #[test]
    fn trend_helpers() {
        let t: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let line: Vec<f64> = t.iter().map(|v| 0.3 * v - 2.0).collect();
        assert!((tail_slope(&t, &line, 0.5) - 0.3).abs() < 1e-12);
        let falling: Vec<f64> = t.iter().map(|v| -v).collect();
        assert!(!minimum_stabilizes(&falling, 1e-3));
        let settled: Vec<f64> = t.iter().map(|v| (-v).exp()).collect();
        assert!(minimum_stabilizes(&settled, 1e-3));
        assert!(maximum_stabilizes(&falling, 1e-3));
        assert!(!maximum_stabilizes(&line, 1e-3));
    }
}

//! Geometry of the probability simplex.
//!
//! Everything here works on short dense vectors (n is expected to be at most
//! 16), so plain `Vec<f64>` storage is used throughout.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the coordinate sum of a simplex point or tangent vector.
pub const SUM_TOL: f64 = 1e-9;

/// Coordinates at or below this value count as on the boundary when the
/// tangent cone is computed.
pub const EPS_ACTIVE: f64 = 1e-9;

/// Maximum distance from the simplex that [`safeguard`] will repair.
pub const SAFEGUARD_TOL: f64 = 1e-6;

/// A point of the probability simplex: nonnegative, summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::domain("simplex points need at least 2 coordinates"));
        }
        if coords.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::domain(format!(
                "simplex coordinates must be finite and nonnegative: {coords:?}"
            )));
        }
        let s: f64 = coords.iter().sum();
        if (s - 1.0).abs() > SUM_TOL {
            return Err(Error::domain(format!("simplex coordinates sum to {s}, not 1")));
        }
        Ok(SimplexPoint(coords))
    }

    /// The barycenter (1/n, ..., 1/n).
    pub fn uniform(n: usize) -> Self {
        SimplexPoint(vec![1.0 / n as f64; n])
    }

    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        SimplexPoint(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// True when every coordinate exceeds `eps`.
    pub fn is_interior(&self, eps: f64) -> bool {
        self.0.iter().all(|&c| c > eps)
    }
}

impl Deref for SimplexPoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for SimplexPoint {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        SimplexPoint::new(v)
    }
}

impl From<SimplexPoint> for Vec<f64> {
    fn from(p: SimplexPoint) -> Vec<f64> {
        p.0
    }
}

/// An element of the tangent space {v : sum(v) = 0}.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector(Vec<f64>);

impl TangentVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let s: f64 = coords.iter().sum();
        let scale = coords.iter().fold(1.0_f64, |m, c| m.max(c.abs()));
        if !s.is_finite() || s.abs() > SUM_TOL * scale {
            return Err(Error::domain(format!("tangent vector sums to {s}, not 0")));
        }
        Ok(TangentVector(coords))
    }

    pub fn zeros(n: usize) -> Self {
        TangentVector(vec![0.0; n])
    }

    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        TangentVector(coords)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for TangentVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Coordinates treated as pinned at the boundary by the tangent-cone projection.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ActiveSet {
    indices: Vec<usize>,
}

impl ActiveSet {
    /// Indices with `x_i <= eps`.
    pub fn of(x: &[f64], eps: f64) -> Self {
        let indices = x
            .iter()
            .enumerate()
            .filter(|(_, &v)| v <= eps)
            .map(|(i, _)| i)
            .collect();
        ActiveSet { indices }
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.contains(&i)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

fn check_finite(y: &[f64]) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::domain(format!("non-finite input {y:?}")))
    }
}

/// Euclidean projection onto the simplex (sort, then threshold).
pub fn project_simplex(y: &[f64]) -> Result<SimplexPoint> {
    if y.len() < 2 {
        return Err(Error::domain("projection needs n >= 2"));
    }
    check_finite(y)?;
    Ok(SimplexPoint(project_simplex_raw(y)))
}

pub(crate) fn project_simplex_raw(y: &[f64]) -> Vec<f64> {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumsum += uk;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|&v| (v - theta).max(0.0)).collect()
}

/// Euclidean distance from `y` to the simplex.
pub fn distance_to_simplex(y: &[f64]) -> f64 {
    if y.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let proj = project_simplex_raw(y);
    y.iter()
        .zip(&proj)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Projection of `p` onto the tangent cone of the simplex at `x`.
///
/// Active-set iteration: coordinates with `x_i <= eps_active` may only move
/// inward. Starting from nothing pinned, repeatedly pin every active
/// coordinate whose mean-removed value is negative, until the pinned set is
/// stable.
pub fn project_tangent_cone(x: &[f64], p: &[f64], eps_active: f64) -> Result<TangentVector> {
    if x.len() != p.len() {
        return Err(Error::domain("dimension mismatch in tangent-cone projection"));
    }
    if !(eps_active > 0.0) {
        return Err(Error::domain("eps_active must be positive"));
    }
    check_finite(x)?;
    check_finite(p)?;
    Ok(TangentVector(tangent_cone_raw(x, p, eps_active)))
}

pub(crate) fn tangent_cone_raw(x: &[f64], p: &[f64], eps_active: f64) -> Vec<f64> {
    let n = p.len();
    let active = ActiveSet::of(x, eps_active);
    let mut pinned = vec![false; n];
    let mut mu;
    loop {
        let (sum, count) = p
            .iter()
            .zip(&pinned)
            .filter(|(_, &s)| !s)
            .fold((0.0, 0usize), |(s, c), (v, _)| (s + v, c + 1));
        mu = sum / count as f64;
        let mut changed = false;
        for &i in active.indices() {
            if !pinned[i] && p[i] - mu < 0.0 {
                pinned[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut v: Vec<f64> = p
        .iter()
        .zip(&pinned)
        .map(|(&pi, &s)| if s { 0.0 } else { pi - mu })
        .collect();
    // mean removal leaves a rounding residue in the sum; push it onto the
    // largest free coordinate so the result is tangent to machine precision
    let residue: f64 = v.iter().sum();
    if residue != 0.0 {
        if let Some(j) = (0..n)
            .filter(|&j| !pinned[j])
            .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
        {
            v[j] -= residue;
        }
    }
    v
}

/// `p` minus its mean.
pub fn project_tangent_space(p: &[f64]) -> TangentVector {
    TangentVector(tangent_space_raw(p))
}

pub(crate) fn tangent_space_raw(p: &[f64]) -> Vec<f64> {
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    p.iter().map(|v| v - mean).collect()
}

/// Softmax with max subtraction.
pub fn softmax(z: &[f64]) -> SimplexPoint {
    SimplexPoint(softmax_raw(z))
}

pub(crate) fn softmax_raw(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = out.iter().sum();
    for v in &mut out {
        *v /= s;
    }
    out
}

/// The `i`-th vertex e_i (1-based, as in e_1, ..., e_n).
pub fn vertex(i: usize, n: usize) -> Result<SimplexPoint> {
    if i == 0 || i > n || n < 2 {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    let mut v = vec![0.0; n];
    v[i - 1] = 1.0;
    Ok(SimplexPoint(v))
}

/// All n vertices, in order.
pub fn vertices(n: usize) -> Vec<SimplexPoint> {
    (1..=n).map(|i| vertex(i, n).expect("index in range")).collect()
}

/// Clip negatives to zero and renormalize; refuses inputs farther than
/// [`SAFEGUARD_TOL`] from the simplex.
pub fn safeguard(x: &[f64]) -> Result<SimplexPoint> {
    safeguard_within(x, SAFEGUARD_TOL)
}

/// [`safeguard`] with an explicit repair radius.
pub fn safeguard_within(x: &[f64], tol: f64) -> Result<SimplexPoint> {
    let d = distance_to_simplex(x);
    if !(d <= tol) {
        return Err(Error::IntegrationDiverged {
            time: f64::NAN,
            reason: format!("state at distance {d:e} from the simplex"),
        });
    }
    if x.iter().all(|&v| v >= 0.0) && x.iter().sum::<f64>() == 1.0 {
        return Ok(SimplexPoint(x.to_vec()));
    }
    let mut out: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    let s: f64 = out.iter().sum();
    for v in &mut out {
        *v /= s;
    }
    Ok(SimplexPoint(out))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

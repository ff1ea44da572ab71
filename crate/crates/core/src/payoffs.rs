//! Payoff sources: closed-form time signals and linear population games.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{dot, vertices, SimplexPoint};

/// One term `amplitude * sin(frequency * t + phase)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sinusoid {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl Sinusoid {
    pub fn value(&self, t: f64) -> f64 {
        self.amplitude * (self.frequency * t + self.phase).sin()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.amplitude * self.frequency * (self.frequency * t + self.phase).cos()
    }
}

/// A payoff vector given as an explicit function of time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffSignal {
    Constant(Vec<f64>),
    /// `p_i(t) = offset_i + sum_k terms[i][k](t)`.
    SinusoidMix {
        terms: Vec<Vec<Sinusoid>>,
        offset: Vec<f64>,
    },
}

impl PayoffSignal {
    pub fn dim(&self) -> usize {
        match self {
            PayoffSignal::Constant(c) => c.len(),
            PayoffSignal::SinusoidMix { offset, .. } => offset.len(),
        }
    }

    pub fn value(&self, t: f64) -> Vec<f64> {
        match self {
            PayoffSignal::Constant(c) => c.clone(),
            PayoffSignal::SinusoidMix { terms, offset } => offset
                .iter()
                .zip(terms)
                .map(|(o, ts)| o + ts.iter().map(|s| s.value(t)).sum::<f64>())
                .collect(),
        }
    }

    pub fn derivative(&self, t: f64) -> Vec<f64> {
        match self {
            PayoffSignal::Constant(c) => vec![0.0; c.len()],
            PayoffSignal::SinusoidMix { terms, .. } => terms
                .iter()
                .map(|ts| ts.iter().map(|s| s.derivative(t)).sum())
                .collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            PayoffSignal::Constant(c) => c.len() >= 2 && c.iter().all(|v| v.is_finite()),
            PayoffSignal::SinusoidMix { terms, offset } => {
                offset.len() >= 2
                    && terms.len() == offset.len()
                    && offset.iter().all(|v| v.is_finite())
                    && terms.iter().flatten().all(|s| {
                        s.amplitude.is_finite() && s.frequency.is_finite() && s.phase.is_finite()
                    })
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("malformed payoff signal {self:?}")))
        }
    }
}

fn sine(amplitude: f64) -> Sinusoid {
    Sinusoid {
        amplitude,
        frequency: 1.0,
        phase: 0.0,
    }
}

/// `p(t) = [sin t, 0.5]`.
pub fn example1_signal() -> PayoffSignal {
    PayoffSignal::SinusoidMix {
        terms: vec![vec![sine(1.0)], vec![]],
        offset: vec![0.0, 0.5],
    }
}

/// `p(t) = [sin t, -sin t]`.
pub fn example2_signal() -> PayoffSignal {
    PayoffSignal::SinusoidMix {
        terms: vec![vec![sine(1.0)], vec![sine(-1.0)]],
        offset: vec![0.0, 0.0],
    }
}

pub fn constant_signal(c: Vec<f64>) -> PayoffSignal {
    PayoffSignal::Constant(c)
}

/// Each coordinate gets between 1 and `terms` sinusoids with amplitude in
/// [-1, 1], frequency in [0.1, 3] and uniform phase, plus an offset in
/// [-0.5, 0.5].
pub fn random_smooth_signal(n: usize, terms: usize, seed: u64) -> PayoffSignal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms = terms.max(1);
    let mut all = Vec::with_capacity(n);
    let mut offset = Vec::with_capacity(n);
    for _ in 0..n {
        let k = rng.gen_range(1..=terms);
        all.push(
            (0..k)
                .map(|_| Sinusoid {
                    amplitude: rng.gen_range(-1.0..=1.0),
                    frequency: rng.gen_range(0.1..=3.0),
                    phase: rng.gen_range(0.0..std::f64::consts::TAU),
                })
                .collect(),
        );
        offset.push(rng.gen_range(-0.5..=0.5));
    }
    PayoffSignal::SinusoidMix { terms: all, offset }
}

/// A linear population game `F(x) = A x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixGameRepr", into = "MatrixGameRepr")]
pub struct MatrixGame {
    n: usize,
    /// Row-major n x n.
    a: Vec<f64>,
    known_ne: Option<SimplexPoint>,
}

#[derive(Serialize, Deserialize)]
struct MatrixGameRepr {
    matrix: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    known_ne: Option<SimplexPoint>,
}

impl TryFrom<MatrixGameRepr> for MatrixGame {
    type Error = Error;
    fn try_from(r: MatrixGameRepr) -> Result<Self> {
        let g = MatrixGame::from_rows(r.matrix)?;
        match r.known_ne {
            Some(ne) => g.with_known_ne(ne),
            None => Ok(g),
        }
    }
}

impl From<MatrixGame> for MatrixGameRepr {
    fn from(g: MatrixGame) -> Self {
        MatrixGameRepr {
            matrix: g.rows(),
            known_ne: g.known_ne,
        }
    }
}

impl MatrixGame {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n < 2 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Config(format!(
                "game matrix must be square with n >= 2, got {n} rows"
            )));
        }
        let a: Vec<f64> = rows.into_iter().flatten().collect();
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("game matrix has non-finite entries".into()));
        }
        Ok(MatrixGame { n, a, known_ne: None })
    }

    /// Attach an equilibrium after checking `x*'F(x*) >= e_i'F(x*)` for all i.
    pub fn with_known_ne(mut self, ne: SimplexPoint) -> Result<Self> {
        if ne.dim() != self.n {
            return Err(Error::domain("equilibrium dimension mismatch"));
        }
        let f = self.eval(&ne);
        let value = dot(&ne, &f);
        if f.iter().any(|&fi| fi > value + 1e-9) {
            return Err(Error::domain(format!(
                "{:?} is not a Nash equilibrium (payoffs {f:?})",
                ne.as_slice()
            )));
        }
        self.known_ne = Some(ne);
        Ok(self)
    }

    /// `[[0,-1,1],[1,0,-1],[-1,1,0]]`, uniform equilibrium.
    pub fn standard_rps() -> Self {
        Self::rps(1.0, 1.0)
    }

    /// Rock-paper-scissors with win payoff `w` and loss `-l`.
    pub fn rps(win: f64, loss: f64) -> Self {
        let rows = vec![
            vec![0.0, -loss, win],
            vec![win, 0.0, -loss],
            vec![-loss, win, 0.0],
        ];
        MatrixGame::from_rows(rows)
            .and_then(|g| g.with_known_ne(SimplexPoint::uniform(3)))
            .expect("rps is well formed")
    }

    /// `w = 2, l = 1`: the strictly contractive instance.
    pub fn good_rps() -> Self {
        Self::rps(2.0, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn known_ne(&self) -> Option<&SimplexPoint> {
        self.known_ne.as_ref()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.a.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    /// `A v` for any vector v.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.a.chunks(self.n).map(|row| dot(row, v)).collect()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.apply(x)
    }
}

/// Where the payoff comes from: an exogenous time signal, or a game closed
/// in feedback with the learner's strategy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffSource {
    Signal(PayoffSignal),
    Game(MatrixGame),
}

impl PayoffSource {
    pub fn dim(&self) -> usize {
        match self {
            PayoffSource::Signal(s) => s.dim(),
            PayoffSource::Game(g) => g.dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PayoffSource::Signal(s) => s.validate(),
            PayoffSource::Game(_) => Ok(()),
        }
    }

    pub fn is_game(&self) -> bool {
        matches!(self, PayoffSource::Game(_))
    }
}

impl From<PayoffSignal> for PayoffSource {
    fn from(s: PayoffSignal) -> Self {
        PayoffSource::Signal(s)
    }
}

impl From<MatrixGame> for PayoffSource {
    fn from(g: MatrixGame) -> Self {
        PayoffSource::Game(g)
    }
}

/// Signal mode returns `p(t)`; game mode returns `A x`.
pub fn eval_payoff(src: &PayoffSource, t: f64, x: &[f64]) -> Vec<f64> {
    match src {
        PayoffSource::Signal(s) => s.value(t),
        PayoffSource::Game(g) => g.eval(x),
    }
}

/// Signal mode returns the closed-form `p'(t)`; game mode returns `A x'`.
pub fn eval_payoff_derivative(src: &PayoffSource, t: f64, _x: &[f64], xdot: &[f64]) -> Vec<f64> {
    match src {
        PayoffSource::Signal(s) => s.derivative(t),
        PayoffSource::Game(g) => g.apply(xdot),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Contractivity {
    StrictlyContractive,
    Contractive,
    NotContractive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractivityReport {
    pub class: Contractivity,
    /// Largest eigenvalue of `A + A'` restricted to the tangent space, i.e.
    /// the maximum of `d'(A + A')d` over unit tangent directions `d`.
    pub min_pairing: f64,
    /// Largest value of the same form seen over the random directions.
    pub sampled_max: f64,
}

pub const CONTRACTIVITY_TOL: f64 = 1e-9;

/// Orthonormal basis of {v : sum(v) = 0} (Helmert construction), as columns.
fn tangent_basis(n: usize) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(n, n - 1);
    for k in 1..n {
        let norm = ((k * (k + 1)) as f64).sqrt();
        for i in 0..k {
            q[(i, k - 1)] = 1.0 / norm;
        }
        q[(k, k - 1)] = -(k as f64) / norm;
    }
    q
}

pub fn contractivity_report(g: &MatrixGame, samples: usize, rng_seed: u64) -> ContractivityReport {
    let n = g.dim();
    let a = DMatrix::from_row_slice(n, n, &g.a);
    let sym = &a + a.transpose();
    let q = tangent_basis(n);
    let restricted = q.transpose() * &sym * &q;
    let eig = SymmetricEigen::new(restricted);
    let max_eig = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut sampled_max = f64::NEG_INFINITY;
    for _ in 0..samples.max(1) {
        let coeffs = DVector::from_iterator(n - 1, (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)));
        if coeffs.norm() == 0.0 {
            continue;
        }
        let d = &q * coeffs.normalize();
        sampled_max = sampled_max.max(d.dot(&(&sym * &d)));
    }

    let class = if max_eig < -CONTRACTIVITY_TOL {
        Contractivity::StrictlyContractive
    } else if max_eig <= CONTRACTIVITY_TOL {
        Contractivity::Contractive
    } else {
        Contractivity::NotContractive
    };
    ContractivityReport {
        class,
        min_pairing: max_eig,
        sampled_max,
    }
}

/// Whether `x` satisfies the Nash inequality for `g` within `tol`.
pub fn is_nash(g: &MatrixGame, x: &SimplexPoint, tol: f64) -> bool {
    let f = g.eval(x);
    let value = dot(x, &f);
    vertices(g.dim()).iter().all(|e| dot(e, &f) <= value + tol)
}

//! Continuous-time learning dynamics on the probability simplex.
//!
//! The crate simulates eleven learning models (replicator, FTRL, direct
//! projection, their strategic higher-order variants, BNN, Smith, logit,
//! target projection, exponential replicator and replicator with payoff
//! latency) against exogenous payoff signals or linear population games,
//! and measures regret, average reward and passivity supply integrals
//! along the resulting trajectories.
//!
//! ```
//! use gamedyn::{integrate, metrics, payoffs, IntegratorConfig, ModelKind, ModelParams, SimplexPoint};
//!
//! let src = payoffs::example1_signal().into();
//! let cfg = IntegratorConfig::new(1e-2, 50.0, 10).unwrap();
//! let x0 = SimplexPoint::uniform(2);
//! let traj = integrate(ModelKind::Rd, &ModelParams::default(), &x0, &src, &cfg).unwrap();
//! let report = metrics::regret_report(&traj, ModelKind::Rd, &x0).unwrap();
//! assert!(report.bounded_verdict);
//! ```

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod integrator;
pub mod metrics;
pub mod payoffs;
pub mod simplex;

pub use dynamics::{init_state, read_strategy, vector_field, ModelKind, ModelParams, ModelState};
pub use error::{Error, Result};
pub use integrator::{convergence_check, integrate, IntegratorConfig, Trajectory};
pub use payoffs::{MatrixGame, PayoffSignal, PayoffSource};
pub use simplex::{SimplexPoint, TangentVector};

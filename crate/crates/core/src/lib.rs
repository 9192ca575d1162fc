//! Correlated multivariate mixed Poisson processes by backward simulation.
//!
//! The pipeline:
//!
//! 1. [`distributions`]: marginal count laws at the horizon `T` (Poisson,
//!    negative binomial, finite Poisson mixtures), truncated to finite support.
//! 2. [`ejd`]: the `2^(d-1)` extreme joint distributions with those
//!    marginals, one per co/antimonotonicity pattern.
//! 3. [`calibration`]: convex weights over the extreme correlation matrices
//!    reproducing a target correlation matrix, found by a phase-1 simplex.
//! 4. [`simulation`]: terminal counts drawn from the weighted mixture, event
//!    times filled in backward as sorted uniforms, and forward continuation
//!    over further periods.
//! 5. [`analytics`]: closed-form correlation curves over time and empirical
//!    estimators and goodness-of-fit tests over simulated paths.
//!
//! ```
//! use backsim::calibration::calibrate;
//! use backsim::distributions::MixedPoissonDistribution;
//! use backsim::ejd::CorrelationMatrix;
//! use backsim::simulation::{simulate, SimulationConfig};
//!
//! let marginals = [
//!     MixedPoissonDistribution::negative_binomial(5.0, 30.0, 1.0)?,
//!     MixedPoissonDistribution::poisson(5.0, 1.0)?,
//! ];
//! let target = CorrelationMatrix::from_rows(&[vec![1.0, -0.7], vec![-0.7, 1.0]])?;
//! let model = calibrate(&marginals, &target, 1e-12)?;
//! let paths = simulate(&SimulationConfig::new(model, 3, 100, 42))?;
//! assert_eq!(paths.len(), 100);
//! # Ok::<(), backsim::Error>(())
//! ```

pub mod analytics;
pub mod calibration;
pub mod cli;
pub mod distributions;
pub mod ejd;
mod error;
pub mod lp;
pub mod rng;
pub mod scenario;
pub mod simulation;
pub mod validation;

pub use error::{Error, Result};

//! Correlation structure in time, empirical estimators over [`PathSet`]s and
//! goodness-of-fit tests.
//!
//! [`PathSet`]: crate::simulation::PathSet

mod correlation;
mod gof;

pub use correlation::{
    correlation_with_stderr, covariance_ratio, cross_period_covariance, empirical_curve, rho_bs, rho_fc,
    rho_theoretical, sample_correlation, theoretical_curve, z_function, CorrelationCurve,
    CurvePoint,
};
pub use gof::{chi_square_pmf, ks_test, ks_uniform, kolmogorov_survival, ChiSquareResult, KsResult};

use std::io::Write;

use crate::distributions::MixedPoissonDistribution;
use crate::error::{Error, Result};
use crate::simulation::PathSet;

/// Tolerance used to snap times onto period boundaries.
const GRID_SNAP: f64 = 1e-12;

fn count_variance(m: &MixedPoissonDistribution, t: f64) -> f64 {
    let s = m.structure();
    s.mean_intensity() * t + s.intensity_variance() * t * t
}

/// `sigma(X_t) / t` for the process underlying `marginal` (its own horizon is
/// ignored). The product over a pair gives the function `Z(t)`.
pub fn z_function(marginal: &MixedPoissonDistribution, t: f64) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Z(t) requires t > 0, got {t}"
        )));
    }
    Ok(count_variance(marginal, t).sqrt() / t)
}

/// Correlation at `0 < t <= T` of a pair filled in backward from a joint law
/// with correlation `rho_t` at `T`: `rho(T) Z(T) / Z(t)`.
pub fn rho_bs(
    t: f64,
    horizon: f64,
    rho_t: f64,
    first: &MixedPoissonDistribution,
    second: &MixedPoissonDistribution,
) -> Result<f64> {
    if t > horizon * (1.0 + GRID_SNAP) {
        return Err(Error::InvalidParameter(format!(
            "t = {t} lies beyond the backward-simulation horizon {horizon}"
        )));
    }
    let t = t.min(horizon);
    let num = z_function(first, horizon)? * z_function(second, horizon)?;
    let den = z_function(first, t)? * z_function(second, t)?;
    Ok(rho_t * num / den)
}

/// Correlation at `mT + tau` under forward continuation:
///
/// ```text
/// rho(T) (m + tau^2/T^2) sigma(X_T) sigma(Y_T)
///   / ( sqrt(m sigma^2(X_T) + sigma^2(X_tau)) sqrt(m sigma^2(Y_T) + sigma^2(Y_tau)) )
/// ```
///
/// For `m = 0` this is [`rho_bs`] at `tau`.
pub fn rho_fc(
    m: u64,
    tau: f64,
    horizon: f64,
    rho_t: f64,
    first: &MixedPoissonDistribution,
    second: &MixedPoissonDistribution,
) -> Result<f64> {
    if !(0.0..=horizon * (1.0 + GRID_SNAP)).contains(&tau) {
        return Err(Error::InvalidParameter(format!(
            "tau = {tau} must lie in [0, {horizon}]"
        )));
    }
    if m == 0 {
        if tau == 0.0 {
            return Err(Error::InvalidParameter(
                "correlation is undefined at t = 0".into(),
            ));
        }
        return rho_bs(tau, horizon, rho_t, first, second);
    }
    let tau = tau.min(horizon);
    let mf = m as f64;
    let (vx, vy) = (count_variance(first, horizon), count_variance(second, horizon));
    let (vx_tau, vy_tau) = (count_variance(first, tau), count_variance(second, tau));
    let scale = mf + (tau / horizon).powi(2);
    Ok(rho_t * scale * (vx * vy).sqrt()
        / ((mf * vx + vx_tau).sqrt() * (mf * vy + vy_tau).sqrt()))
}

/// Theoretical correlation at any `t > 0`, splitting `t = mT + tau`.
pub fn rho_theoretical(
    t: f64,
    horizon: f64,
    rho_t: f64,
    first: &MixedPoissonDistribution,
    second: &MixedPoissonDistribution,
) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "correlation is undefined at t = {t}"
        )));
    }
    let ratio = t / horizon;
    let mut m = (ratio + GRID_SNAP).floor();
    let mut tau = t - m * horizon;
    if tau < 0.0 {
        tau = 0.0;
    }
    if m >= 1.0 && tau == 0.0 && ratio < 1.0 + GRID_SNAP {
        // t == T: stay inside the backward-simulation window
        m = 0.0;
        tau = horizon;
    }
    rho_fc(m as u64, tau, horizon, rho_t, first, second)
}

/// Pearson correlation; `None` when either sample has zero variance.
pub fn sample_correlation(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

/// Empirical correlation at one time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// `None` flags a degenerate (zero-variance) sample.
    pub rho: Option<f64>,
    /// Influence-function standard error of `rho`.
    pub stderr: Option<f64>,
    pub n_paths: usize,
}

/// Theoretical and empirical correlation of one coordinate pair over time.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationCurve {
    pub pair: (usize, usize),
    pub times: Vec<f64>,
    pub theoretical: Vec<f64>,
    pub empirical: Vec<CurvePoint>,
}

impl CorrelationCurve {
    /// `time,rho_theoretical,rho_empirical,stderr,n_paths`; degenerate points
    /// leave the empirical fields empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "rho_theoretical", "rho_empirical", "stderr", "n_paths"])?;
        for ((t, th), p) in self.times.iter().zip(&self.theoretical).zip(&self.empirical) {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            w.write_record([
                t.to_string(),
                th.to_string(),
                opt(p.rho),
                opt(p.stderr),
                p.n_paths.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Indices of points whose empirical value is flagged degenerate.
    pub fn degenerate_points(&self) -> Vec<usize> {
        self.empirical
            .iter()
            .enumerate()
            .filter(|(_, p)| p.rho.is_none())
            .map(|(i, _)| i)
            .collect()
    }
}

/// Sample correlation with a nonparametric standard error.
///
/// The error is the standard deviation of the influence values
/// `u v - r (u^2 + v^2) / 2` of the standardized data over `sqrt(n)`, which
/// unlike the normal-theory `(1 - r^2)/sqrt(n)` stays honest for skewed,
/// overdispersed counts.
pub fn correlation_with_stderr(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let r = sample_correlation(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sx = (x.iter().map(|a| (a - mx).powi(2)).sum::<f64>() / n).sqrt();
    let sy = (y.iter().map(|b| (b - my).powi(2)).sum::<f64>() / n).sqrt();
    let infl: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let (u, v) = ((a - mx) / sx, (b - my) / sy);
            u * v - r * (u * u + v * v) / 2.0
        })
        .collect();
    let se = if x.len() > 1 { stderr_of_mean(&infl) } else { f64::INFINITY };
    Some((r, se))
}

/// Theoretical curve only, from exact marginal moments.
pub fn theoretical_curve(
    times: &[f64],
    horizon: f64,
    rho_t: f64,
    first: &MixedPoissonDistribution,
    second: &MixedPoissonDistribution,
) -> Result<Vec<f64>> {
    times
        .iter()
        .map(|&t| rho_theoretical(t, horizon, rho_t, first, second))
        .collect()
}

/// Pearson correlation of cumulative counts of `pair` at each time, next to
/// the theoretical value for the pair's marginals and horizon correlation.
pub fn empirical_curve(
    paths: &PathSet,
    pair: (usize, usize),
    times: &[f64],
    rho_t: f64,
    first: &MixedPoissonDistribution,
    second: &MixedPoissonDistribution,
) -> Result<CorrelationCurve> {
    if paths.len() < 2 {
        return Err(Error::InsufficientSamples {
            got: paths.len(),
            need: 2,
        });
    }
    let h = paths.horizon();
    if times.iter().any(|&t| !(t > 0.0 && t <= h * (1.0 + GRID_SNAP))) {
        return Err(Error::InvalidParameter(format!(
            "curve times must lie in (0, {h}]"
        )));
    }
    let theoretical = theoretical_curve(times, paths.period_length(), rho_t, first, second)?;
    let empirical = times
        .iter()
        .map(|&t| {
            let x = paths.counts_at(pair.0, t);
            let y = paths.counts_at(pair.1, t);
            let est = correlation_with_stderr(&x, &y);
            CurvePoint {
                rho: est.map(|e| e.0),
                stderr: est.map(|e| e.1),
                n_paths: x.len(),
            }
        })
        .collect();
    Ok(CorrelationCurve {
        pair,
        times: times.to_vec(),
        theoretical,
        empirical,
    })
}

// Sample covariance with its influence values (x_i - mx)(y_i - my) - cov.
fn covariance_influence(x: &[f64], y: &[f64]) -> (f64, Vec<f64>) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let prods: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let cov = prods.iter().sum::<f64>() / n;
    (cov, prods.into_iter().map(|p| p - cov).collect())
}

fn stderr_of_mean(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

/// `Cov(X_s, Y_s) / Cov(X_t, Y_t)` with a delta-method standard error.
pub fn covariance_ratio(
    paths: &PathSet,
    pair: (usize, usize),
    numerator_time: f64,
    denominator_time: f64,
) -> Result<(f64, f64)> {
    if paths.len() < 20 {
        return Err(Error::InsufficientSamples {
            got: paths.len(),
            need: 20,
        });
    }
    let (cn, infl_n) = covariance_influence(
        &paths.counts_at(pair.0, numerator_time),
        &paths.counts_at(pair.1, numerator_time),
    );
    let (cd, infl_d) = covariance_influence(
        &paths.counts_at(pair.0, denominator_time),
        &paths.counts_at(pair.1, denominator_time),
    );
    if cd == 0.0 {
        return Err(Error::InvalidParameter(
            "denominator covariance is zero".into(),
        ));
    }
    let ratio = cn / cd;
    let infl: Vec<f64> = infl_n
        .iter()
        .zip(&infl_d)
        .map(|(a, b)| (a - ratio * b) / cd)
        .collect();
    Ok((ratio, stderr_of_mean(&infl)))
}

/// Sample covariance (and its standard error) between the counts of
/// coordinate `k` in periods `m1` and `m2`.
pub fn cross_period_covariance(
    paths: &PathSet,
    k: usize,
    m1: usize,
    m2: usize,
) -> Result<(f64, f64)> {
    if paths.len() < 20 {
        return Err(Error::InsufficientSamples {
            got: paths.len(),
            need: 20,
        });
    }
    if m1 >= paths.periods() as usize || m2 >= paths.periods() as usize {
        return Err(Error::InvalidParameter("period index out of range".into()));
    }
    let x: Vec<f64> = paths.paths().iter().map(|p| p.period_counts(k)[m1] as f64).collect();
    let y: Vec<f64> = paths.paths().iter().map(|p| p.period_counts(k)[m2] as f64).collect();
    let (cov, infl) = covariance_influence(&x, &y);
    Ok((cov, stderr_of_mean(&infl)))
}

//! Statistical self-checks of a scenario: uniformity of arrival times,
//! marginal count laws, equivalence of the closed-form extreme measures with
//! a transportation LP, and the Fréchet forward coupling.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytics::{chi_square_pmf, correlation_with_stderr, ks_uniform};
use crate::calibration::CalibratedModel;
use crate::distributions::TruncatedPmf;
use crate::ejd::{build_extreme_measure, MonotonicityStructure};
use crate::error::Result;
use crate::lp::transportation_cross_moment;
use crate::scenario::Scenario;
use crate::simulation::{
    frechet_identity_holds, simulate, simulate_forward_comonotone, FrechetMode, PathSet,
    SimulationConfig,
};

/// Significance level of every hypothesis test.
pub const ALPHA: f64 = 0.01;
/// Agreement required between closed-form and LP cross moments.
pub const LP_TOL: f64 = 1e-9;
/// Largest support used in the LP cross-check.
const LP_MAX_ATOMS: usize = 25;
const RANDOM_LP_PAIRS: usize = 20;
const MAX_KS_SAMPLES: usize = 200_000;

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub statistic: f64,
    /// Bound the statistic (or p-value) was compared with.
    pub threshold: f64,
    pub p_value: Option<f64>,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: statistic={:.6e} threshold={:.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.statistic,
            self.threshold
        )?;
        if let Some(p) = self.p_value {
            write!(f, " p-value={p:.4}")?;
        }
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationOptions {
    pub paths: usize,
    pub seed: u64,
    pub threads: Option<usize>,
    /// Negative control: distort the extreme measures before simulating.
    pub corrupt: bool,
}

impl ValidationOptions {
    pub fn from_scenario(s: &Scenario) -> Self {
        ValidationOptions {
            paths: s.n_paths,
            seed: s.seed,
            threads: None,
            corrupt: false,
        }
    }
}

/// Pooled arrival times, each rescaled to `[0, 1)` within its period.
pub fn normalized_arrivals(paths: &PathSet, limit: usize) -> Vec<f64> {
    let h = paths.period_length();
    let mut out = Vec::new();
    'outer: for p in paths.paths() {
        for k in 0..paths.dimension() {
            for &t in p.arrivals(k) {
                if out.len() >= limit {
                    break 'outer;
                }
                out.push(t / h - (t / h).floor());
            }
        }
    }
    out
}

/// Counts of coordinate `k` in period `m` across all paths.
pub fn period_counts(paths: &PathSet, k: usize, m: usize) -> Vec<u32> {
    paths.paths().iter().map(|p| p.period_counts(k)[m]).collect()
}

fn ks_check(paths: &PathSet) -> CheckResult {
    let samples = normalized_arrivals(paths, MAX_KS_SAMPLES);
    match ks_uniform(&samples) {
        Ok(r) => CheckResult {
            name: "ks_uniform_arrivals".into(),
            passed: r.p_value > ALPHA,
            statistic: r.statistic,
            threshold: ALPHA,
            p_value: Some(r.p_value),
            detail: format!("n={}", r.n),
        },
        Err(e) => failed("ks_uniform_arrivals", e.to_string()),
    }
}

fn chi_square_check(paths: &PathSet, model: &CalibratedModel, k: usize) -> CheckResult {
    let name = format!("chi_square_marginal_{}", k + 1);
    let samples = period_counts(paths, k, 0);
    match chi_square_pmf(&samples, model.truncated_marginals()[k].probs()) {
        Ok(r) => CheckResult {
            name,
            passed: r.p_value > ALPHA,
            statistic: r.statistic,
            threshold: ALPHA,
            p_value: Some(r.p_value),
            detail: format!("dof={} n={}", r.dof, samples.len()),
        },
        Err(e) => failed(&name, e.to_string()),
    }
}

fn failed(name: &str, detail: String) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed: false,
        statistic: f64::NAN,
        threshold: f64::NAN,
        p_value: None,
        detail,
    }
}

/// Largest gap between closed-form and LP extremal `E[X1 X2]` for one pair of
/// normalized pmfs, or `None` if the LP did not solve.
pub fn lp_oracle_gap(first: &[f64], second: &[f64]) -> Result<Option<f64>> {
    let pair = [
        TruncatedPmf::from_probs(first.to_vec())?,
        TruncatedPmf::from_probs(second.to_vec())?,
    ];
    let mut gap: f64 = 0.0;
    for (bits, maximize) in [(vec![0, 0], true), (vec![0, 1], false)] {
        let m = build_extreme_measure(&pair, &MonotonicityStructure::new(bits)?)?;
        let Some(lp) = transportation_cross_moment(first, second, maximize) else {
            return Ok(None);
        };
        gap = gap.max((m.cross_moment(0, 1) - lp).abs());
    }
    Ok(Some(gap))
}

/// Random pmf with `1..=max_atoms` atoms.
pub fn random_pmf<R: Rng + ?Sized>(rng: &mut R, max_atoms: usize) -> Vec<f64> {
    let n = rng.random_range(1..=max_atoms);
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.01).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

fn coarsened(p: &TruncatedPmf) -> Vec<f64> {
    let head = &p.probs()[..p.probs().len().min(LP_MAX_ATOMS)];
    let total: f64 = head.iter().sum();
    head.iter().map(|v| v / total).collect()
}

fn lp_check(model: &CalibratedModel, seed: u64) -> CheckResult {
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    let marg = model.truncated_marginals();
    let mut inputs = Vec::new();
    for k in 0..marg.len() {
        for l in (k + 1)..marg.len() {
            inputs.push((coarsened(&marg[k]), coarsened(&marg[l])));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_LP_PAIRS {
        inputs.push((random_pmf(&mut rng, 8), random_pmf(&mut rng, 8)));
    }
    for (a, b) in &inputs {
        match lp_oracle_gap(a, b) {
            Ok(Some(g)) => {
                worst = worst.max(g);
                pairs += 1;
            }
            Ok(None) => return failed("lp_oracle_ejd", "transportation LP did not solve".into()),
            Err(e) => return failed("lp_oracle_ejd", e.to_string()),
        }
    }
    CheckResult {
        name: "lp_oracle_ejd".into(),
        passed: worst <= LP_TOL,
        statistic: worst,
        threshold: LP_TOL,
        p_value: None,
        detail: format!("pairs={pairs}"),
    }
}

/// Horizon correlation of the `Max` coupling: `1/sqrt(kappa)` for
/// `kappa = lambda1 / lambda2 >= 1`, else `sqrt(kappa)`.
pub fn frechet_max_correlation(lambda1: f64, lambda2: f64) -> f64 {
    let kappa = lambda1 / lambda2;
    if kappa >= 1.0 {
        1.0 / kappa.sqrt()
    } else {
        kappa.sqrt()
    }
}

fn frechet_check(model: &CalibratedModel, opts: &ValidationOptions) -> CheckResult {
    let name = "frechet_forward";
    let l1 = model.marginals()[0].structure().mean_intensity();
    let l2 = model.marginals()[1].structure().mean_intensity();
    let h = model.horizon();
    let paths = match simulate_forward_comonotone(l1, l2, h, opts.paths, opts.seed ^ 0x5eed, FrechetMode::Max) {
        Ok(p) => p,
        Err(e) => return failed(name, e.to_string()),
    };
    let identity = paths
        .paths()
        .iter()
        .all(|p| frechet_identity_holds(p, l1, l2, h, 50));
    let expected = frechet_max_correlation(l1, l2);
    let x = paths.counts_at(0, h);
    let y = paths.counts_at(1, h);
    let Some((rho, se)) = correlation_with_stderr(&x, &y) else {
        return failed(name, "degenerate horizon counts".into());
    };
    let bound = (4.0 * se).max(0.02);
    let err = (rho - expected).abs();
    CheckResult {
        name: name.into(),
        passed: identity && err <= bound,
        statistic: err,
        threshold: bound,
        p_value: None,
        detail: format!(
            "rho={rho:.4} expected={expected:.4} pathwise_identity={}",
            if identity { "ok" } else { "violated" }
        ),
    }
}

fn terminal_correlation_checks(paths: &PathSet, model: &CalibratedModel) -> Vec<CheckResult> {
    let h = model.horizon();
    let d = model.dimension();
    let mut out = Vec::new();
    for k in 0..d {
        for l in (k + 1)..d {
            let name = format!("terminal_correlation_{}_{}", k + 1, l + 1);
            let x = paths.counts_at(k, h);
            let y = paths.counts_at(l, h);
            let target = model.target().get(k, l);
            let Some((rho, se)) = correlation_with_stderr(&x, &y) else {
                out.push(failed(&name, "degenerate counts".into()));
                continue;
            };
            let bound = (4.0 * se).max(1e-9);
            let err = (rho - target).abs();
            out.push(CheckResult {
                name,
                passed: err <= bound,
                statistic: err,
                threshold: bound,
                p_value: None,
                detail: format!("rho={rho:.4} target={target:.4}"),
            });
        }
    }
    out
}

/// Runs every check on a scenario.
///
/// Calibration failures propagate as errors; all statistical outcomes are
/// reported in the returned report.
pub fn run_validation(scenario: &Scenario, opts: &ValidationOptions) -> Result<ValidationReport> {
    let mut model = scenario.calibrate()?;
    if opts.corrupt {
        model = model.with_corrupted_measures();
    }
    let mut config = SimulationConfig::new(model.clone(), scenario.periods, opts.paths, opts.seed);
    if let Some(t) = opts.threads {
        config = config.with_threads(t);
    }
    let paths = simulate(&config)?;
    let mut checks = vec![ks_check(&paths)];
    for k in 0..model.dimension() {
        checks.push(chi_square_check(&paths, &model, k));
    }
    checks.push(lp_check(&model, opts.seed));
    checks.push(frechet_check(&model, opts));
    checks.extend(terminal_correlation_checks(&paths, &model));
    Ok(ValidationReport { checks })
}

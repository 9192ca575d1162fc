//! Structure distributions, mixed Poisson count laws and finite truncations.
//!
//! A mixed Poisson process is a Poisson process whose intensity is drawn once
//! at time zero from a *structure distribution*. Its count at time `t` is
//! mixed Poisson: a degenerate structure gives the Poisson law, a gamma
//! structure gives the negative binomial law and a finite discrete structure
//! gives a finite mixture of Poisson laws.
//!
//! Every "infinite" sum in the crate runs over a [`TruncatedPmf`], which keeps
//! the neglected tail mass explicitly so normalization stays checkable.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Default truncation tolerance for count laws.
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-12;

/// Hard cap on the truncation index, far beyond any desk-scale count law.
const MAX_TRUNCATION_INDEX: usize = 50_000_000;

/// Mixing law of the random intensity.
#[derive(Debug, Clone, PartialEq)]
pub enum StructureDistribution {
    /// Fixed intensity; the count law is Poisson.
    Degenerate { lambda: f64 },
    /// Gamma intensity with shape `r` and rate `b`; the count law is negative
    /// binomial with generating function `(b / (b + t(1 - z)))^r`.
    Gamma { shape: f64, rate: f64 },
    /// Finitely many intensities `(lambda_i, weight_i)`.
    FiniteDiscrete { atoms: Vec<(f64, f64)> },
}

impl StructureDistribution {
    pub fn degenerate(lambda: f64) -> Result<Self> {
        let s = StructureDistribution::Degenerate { lambda };
        s.validate()?;
        Ok(s)
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        let s = StructureDistribution::Gamma { shape, rate };
        s.validate()?;
        Ok(s)
    }

    pub fn finite_discrete(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let s = StructureDistribution::FiniteDiscrete { atoms };
        s.validate()?;
        Ok(s)
    }

    /// Checks positivity of every parameter and normalization of weights.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be finite and strictly positive, got {v}"
                )))
            }
        };
        match self {
            StructureDistribution::Degenerate { lambda } => positive("lambda", *lambda),
            StructureDistribution::Gamma { shape, rate } => {
                positive("gamma shape", *shape)?;
                positive("gamma rate", *rate)
            }
            StructureDistribution::FiniteDiscrete { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::InvalidParameter(
                        "finite discrete structure needs at least one atom".into(),
                    ));
                }
                let mut total = 0.0;
                for &(lambda, w) in atoms {
                    positive("atom intensity", lambda)?;
                    if !(w.is_finite() && w >= 0.0) {
                        return Err(Error::InvalidParameter(format!(
                            "atom weight must be a finite non-negative number, got {w}"
                        )));
                    }
                    total += w;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "atom weights sum to {total}, expected 1"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Mean intensity `E[lambda]`.
    pub fn mean_intensity(&self) -> f64 {
        match self {
            StructureDistribution::Degenerate { lambda } => *lambda,
            StructureDistribution::Gamma { shape, rate } => shape / rate,
            StructureDistribution::FiniteDiscrete { atoms } => {
                atoms.iter().map(|&(l, w)| l * w).sum()
            }
        }
    }

    /// Intensity variance `Var[lambda]`.
    pub fn intensity_variance(&self) -> f64 {
        match self {
            StructureDistribution::Degenerate { .. } => 0.0,
            StructureDistribution::Gamma { shape, rate } => shape / (rate * rate),
            StructureDistribution::FiniteDiscrete { atoms } => {
                let mean = self.mean_intensity();
                atoms.iter().map(|&(l, w)| w * (l - mean) * (l - mean)).sum()
            }
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, StructureDistribution::Degenerate { .. })
    }
}

/// Gamma structure whose negative binomial count law at `horizon` has the
/// given mean and variance.
///
/// Matching `rT/b = mean` and `rT/b + rT^2/b^2 = variance` gives
/// `r = mean^2 / (variance - mean)` and `b = mean T / (variance - mean)`.
pub fn nb_from_mean_variance(
    mean: f64,
    variance: f64,
    horizon: f64,
) -> Result<StructureDistribution> {
    if !(mean.is_finite() && mean > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mean must be strictly positive, got {mean}"
        )));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "horizon must be strictly positive, got {horizon}"
        )));
    }
    if !variance.is_finite() || variance <= mean {
        return Err(Error::NotOverdispersed { mean, variance });
    }
    let excess = variance - mean;
    StructureDistribution::gamma(mean * mean / excess, mean * horizon / excess)
}

fn ln_poisson(k: u64, mean: f64) -> f64 {
    let k = k as f64;
    k * mean.ln() - mean - ln_gamma(k + 1.0)
}

fn poisson_pmf(k: u64, mean: f64) -> f64 {
    if k == 0 {
        (-mean).exp()
    } else {
        ln_poisson(k, mean).exp()
    }
}

/// Compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Law of the count `X_t` of a mixed Poisson process at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedPoissonDistribution {
    structure: StructureDistribution,
    horizon: f64,
}

impl MixedPoissonDistribution {
    pub fn new(structure: StructureDistribution, horizon: f64) -> Result<Self> {
        structure.validate()?;
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "horizon must be strictly positive, got {horizon}"
            )));
        }
        Ok(MixedPoissonDistribution { structure, horizon })
    }

    pub fn poisson(lambda: f64, horizon: f64) -> Result<Self> {
        Self::new(StructureDistribution::degenerate(lambda)?, horizon)
    }

    pub fn negative_binomial(mean: f64, variance: f64, horizon: f64) -> Result<Self> {
        Self::new(nb_from_mean_variance(mean, variance, horizon)?, horizon)
    }

    pub fn structure(&self) -> &StructureDistribution {
        &self.structure
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Same process observed at another time.
    pub fn at(&self, t: f64) -> Result<Self> {
        Self::new(self.structure.clone(), t)
    }

    pub fn mean(&self) -> f64 {
        self.structure.mean_intensity() * self.horizon
    }

    pub fn variance(&self) -> f64 {
        let t = self.horizon;
        self.structure.mean_intensity() * t + self.structure.intensity_variance() * t * t
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// `P(X_t = k)`. The negative binomial branch is evaluated in log space.
    pub fn pmf(&self, k: u64) -> f64 {
        let t = self.horizon;
        match &self.structure {
            StructureDistribution::Degenerate { lambda } => poisson_pmf(k, lambda * t),
            StructureDistribution::Gamma { shape, rate } => {
                let (r, b) = (*shape, *rate);
                let kf = k as f64;
                // success probability b / (b + t)
                let ln_p = (b / (b + t)).ln();
                let ln_q = (t / (b + t)).ln();
                let ln_coef = ln_gamma(kf + r) - ln_gamma(r) - ln_gamma(kf + 1.0);
                let ln_pmf = if k == 0 {
                    r * ln_p
                } else {
                    ln_coef + r * ln_p + kf * ln_q
                };
                ln_pmf.exp()
            }
            StructureDistribution::FiniteDiscrete { atoms } => atoms
                .iter()
                .map(|&(lambda, w)| w * poisson_pmf(k, lambda * t))
                .sum(),
        }
    }

    /// `P(X_t <= k)`.
    pub fn cdf(&self, k: u64) -> f64 {
        let mut acc = NeumaierSum::default();
        for i in 0..=k {
            acc.add(self.pmf(i));
        }
        acc.value().min(1.0)
    }

    /// Generalized inverse `min { k : cdf(k) > u }`.
    pub fn quantile(&self, u: f64) -> Result<u64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::ProbabilityOutOfRange(u));
        }
        let mean = self.mean();
        let mut acc = NeumaierSum::default();
        let mut k = 0u64;
        loop {
            let p = self.pmf(k);
            acc.add(p);
            if acc.value() > u {
                return Ok(k);
            }
            // rounding can leave cdf stuck just below u deep in the tail
            if p == 0.0 && (k as f64) > mean {
                return Ok(k);
            }
            k += 1;
        }
    }

    /// Generating function `E[z^X_t]` in closed form.
    pub fn mgf(&self, z: f64) -> f64 {
        let t = self.horizon;
        match &self.structure {
            StructureDistribution::Degenerate { lambda } => (lambda * t * (z - 1.0)).exp(),
            StructureDistribution::Gamma { shape, rate } => {
                (rate / (rate + t * (1.0 - z))).powf(*shape)
            }
            StructureDistribution::FiniteDiscrete { atoms } => atoms
                .iter()
                .map(|&(lambda, w)| w * (lambda * t * (z - 1.0)).exp())
                .sum(),
        }
    }

    /// Smallest support `0..=K` whose neglected tail `1 - cdf(K)` is at most `tol`.
    pub fn truncate(&self, tol: f64) -> TruncatedPmf {
        assert!(tol > 0.0 && tol < 1.0, "truncation tolerance must lie in (0, 1)");
        let mean = self.mean();
        let mut probs = Vec::new();
        let mut acc = NeumaierSum::default();
        let mut k = 0u64;
        loop {
            let p = self.pmf(k);
            probs.push(p);
            acc.add(p);
            if 1.0 - acc.value() <= tol {
                break;
            }
            if (p == 0.0 && (k as f64) > mean) || probs.len() >= MAX_TRUNCATION_INDEX {
                break;
            }
            k += 1;
        }
        let tail_mass = (1.0 - acc.value()).max(0.0);
        TruncatedPmf { probs, tail_mass }
    }
}

/// Count law restricted to `0..=K` with the neglected mass kept in `tail_mass`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedPmf {
    probs: Vec<f64>,
    tail_mass: f64,
}

impl TruncatedPmf {
    /// Wraps explicit probabilities; the missing mass becomes the tail.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter("empty probability vector".into()));
        }
        let mut acc = NeumaierSum::default();
        for &p in &probs {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "probabilities must be finite and non-negative, got {p}"
                )));
            }
            acc.add(p);
        }
        let total = acc.value();
        if total > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {total} > 1"
            )));
        }
        Ok(TruncatedPmf {
            probs,
            tail_mass: (1.0 - total).max(0.0),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Truncation index `K`.
    pub fn max_index(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn total_mass(&self) -> f64 {
        let mut acc = NeumaierSum::default();
        self.probs.iter().for_each(|&p| acc.add(p));
        acc.value()
    }

    /// Rescaled copy with zero tail mass.
    pub fn normalized(&self) -> TruncatedPmf {
        let total = self.total_mass();
        TruncatedPmf {
            probs: self.probs.iter().map(|p| p / total).collect(),
            tail_mass: 0.0,
        }
    }

    pub fn pmf(&self, k: usize) -> f64 {
        self.probs.get(k).copied().unwrap_or(0.0)
    }

    pub fn cdf(&self, k: usize) -> f64 {
        let mut acc = NeumaierSum::default();
        self.probs.iter().take(k + 1).for_each(|&p| acc.add(p));
        acc.value()
    }

    /// Running sums `cdf(0), cdf(1), ..., cdf(K)`.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = NeumaierSum::default();
        self.probs
            .iter()
            .map(|&p| {
                acc.add(p);
                acc.value()
            })
            .collect()
    }

    /// `min { k : cdf(k) > u }`, or `K` when `u` falls in the tail.
    pub fn quantile(&self, u: f64) -> Result<usize> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::ProbabilityOutOfRange(u));
        }
        let cum = self.cumulative();
        Ok(cum.partition_point(|&c| c <= u).min(self.max_index()))
    }

    /// Mean of the retained mass, normalized by the retained total.
    pub fn mean(&self) -> f64 {
        let total = self.total_mass();
        self.probs
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum::<f64>()
            / total
    }

    pub fn variance(&self) -> f64 {
        let total = self.total_mass();
        let mean = self.mean();
        self.probs
            .iter()
            .enumerate()
            .map(|(k, p)| (k as f64 - mean).powi(2) * p)
            .sum::<f64>()
            / total
    }

    /// Polynomial generating function `sum_k p_k z^k` over the retained atoms.
    pub fn pgf(&self, z: f64) -> f64 {
        // Horner
        self.probs.iter().rev().fold(0.0, |acc, &p| acc * z + p)
    }

    /// Binomial thinning with retention probability `x`.
    pub fn thin(&self, x: f64) -> TruncatedPmf {
        thin_pmf(self, x)
    }
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Law of the count that survives independent retention of each event with
/// probability `x`:
/// `q_k = sum_m p_{k+m} C(k+m, k) x^k (1-x)^m`.
///
/// Its generating function satisfies `q(z) = p(1 - x + x z)`. This is the
/// count law at `t = xT` of a process filled in backward from its count at `T`.
pub fn thin_pmf(p: &TruncatedPmf, x: f64) -> TruncatedPmf {
    assert!((0.0..=1.0).contains(&x), "thinning probability must lie in [0, 1]");
    let n = p.probs.len();
    if x == 1.0 {
        return p.clone();
    }
    if x == 0.0 {
        let mut probs = vec![0.0; n];
        probs[0] = p.total_mass();
        return TruncatedPmf {
            probs,
            tail_mass: p.tail_mass,
        };
    }
    let ln_x = x.ln();
    let ln_1mx = (-x).ln_1p();
    let probs = (0..n)
        .map(|k| {
            let mut acc = NeumaierSum::default();
            for m in 0..(n - k) {
                let pk = p.probs[k + m];
                if pk == 0.0 {
                    continue;
                }
                let ln_term = pk.ln()
                    + ln_binomial(k + m, k)
                    + k as f64 * ln_x
                    + m as f64 * ln_1mx;
                acc.add(ln_term.exp());
            }
            acc.value()
        })
        .collect();
    TruncatedPmf {
        probs,
        tail_mass: p.tail_mass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn nb_moment_match() {
        let s = nb_from_mean_variance(5.0, 30.0, 1.0).unwrap();
        match s {
            StructureDistribution::Gamma { shape, rate } => {
                assert!(close(shape, 1.0, 1e-14));
                assert!(close(rate, 0.2, 1e-14));
            }
            _ => panic!("expected gamma"),
        }
        let s = nb_from_mean_variance(3.0, 30.0, 1.0).unwrap();
        match s {
            StructureDistribution::Gamma { shape, rate } => {
                assert!(close(shape, 1.0 / 3.0, 1e-14));
                assert!(close(rate, 1.0 / 9.0, 1e-14));
            }
            _ => panic!("expected gamma"),
        }
    }

    #[test]
    fn nb_rejects_equidispersion() {
        let err = nb_from_mean_variance(5.0, 5.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::NotOverdispersed { .. }));
        assert!(err.to_string().contains("overdispersion"));
        assert!(nb_from_mean_variance(3.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn nb_moments_reproduce_inputs_at_other_horizons() {
        let d = MixedPoissonDistribution::negative_binomial(3.0, 30.0, 2.0).unwrap();
        assert!(close(d.mean(), 3.0, 1e-12));
        assert!(close(d.variance(), 30.0, 1e-12));
    }

    #[test]
    fn pmf_reference_values() {
        let p = MixedPoissonDistribution::poisson(1.0, 1.0).unwrap();
        assert!(close(p.pmf(0), (-1.0f64).exp(), 1e-15));
        assert!(close(p.cdf(0), (-1.0f64).exp(), 1e-15));
        let nb = MixedPoissonDistribution::new(StructureDistribution::gamma(1.0, 0.2).unwrap(), 1.0)
            .unwrap();
        assert!(close(nb.pmf(0), 0.2 / 1.2, 1e-15));
        // geometric: pmf(k) = p (1-p)^k with p = 1/6
        assert!(close(nb.pmf(4), (1.0 / 6.0) * (5.0f64 / 6.0).powi(4), 1e-14));
    }

    #[test]
    fn nb_pmf_is_finite_far_in_the_tail() {
        let nb = MixedPoissonDistribution::negative_binomial(30.0, 35.0, 1.0).unwrap();
        let v = nb.pmf(400);
        assert!(v.is_finite() && v >= 0.0);
        assert!(nb.pmf(30) > 0.0);
    }

    #[test]
    fn overdispersion_holds() {
        for d in [
            MixedPoissonDistribution::poisson(2.0, 1.5).unwrap(),
            MixedPoissonDistribution::negative_binomial(5.0, 30.0, 1.0).unwrap(),
            MixedPoissonDistribution::new(
                StructureDistribution::finite_discrete(vec![(1.0, 0.5), (4.0, 0.5)]).unwrap(),
                2.0,
            )
            .unwrap(),
        ] {
            let excess = d.variance() - d.mean();
            let expected = d.structure().intensity_variance() * d.horizon().powi(2);
            assert!(close(excess, expected, 1e-12));
            assert_eq!(excess == 0.0, d.structure().is_degenerate());
        }
    }

    #[test]
    fn quantile_edges() {
        let p = MixedPoissonDistribution::poisson(1.0, 1.0).unwrap();
        assert_eq!(p.quantile(0.0).unwrap(), 0);
        assert!(p.quantile(1.0).is_err());
        assert!(p.quantile(-0.1).is_err());
        for k in 0..8u64 {
            let c = p.cdf(k);
            assert_eq!(p.quantile(c - 1e-12).unwrap(), k);
        }
    }

    #[test]
    fn truncate_reference() {
        let p = MixedPoissonDistribution::poisson(1.0, 1.0).unwrap();
        let t = p.truncate(0.5);
        assert_eq!(t.max_index(), 1);
        let nb = MixedPoissonDistribution::new(StructureDistribution::gamma(1.0, 0.2).unwrap(), 1.0)
            .unwrap();
        let t = nb.truncate(1e-12);
        assert!(t.total_mass() >= 1.0 - 1e-12);
        assert!(t.tail_mass() <= 1e-12);
        assert!(close(t.total_mass() + t.tail_mass(), 1.0, 1e-12));
    }

    #[test]
    fn mixture_truncation_matches_component_sum() {
        let atoms = vec![(1.0, 0.3), (6.0, 0.7)];
        let d = MixedPoissonDistribution::new(
            StructureDistribution::finite_discrete(atoms.clone()).unwrap(),
            1.0,
        )
        .unwrap();
        let t = d.truncate(1e-12);
        for (k, &p) in t.probs().iter().enumerate() {
            let oracle: f64 = atoms
                .iter()
                .map(|&(l, w)| {
                    let mut f = (-l).exp();
                    for i in 1..=k {
                        f *= l / i as f64;
                    }
                    w * f
                })
                .sum();
            assert!(close(p, oracle, 1e-11 * oracle.max(1e-300)), "k={k}: {p} vs {oracle}");
        }
    }

    #[test]
    fn mgf_matches_series() {
        for d in [
            MixedPoissonDistribution::poisson(3.0, 1.0).unwrap(),
            MixedPoissonDistribution::negative_binomial(5.0, 30.0, 1.0).unwrap(),
        ] {
            let t = d.truncate(1e-13);
            for z in [-1.0, -0.5, 0.0, 0.5, 1.0] {
                assert!(close(t.pgf(z), d.mgf(z), 1e-12), "z={z}");
            }
            assert_eq!(d.mgf(1.0), 1.0);
        }
    }

    #[test]
    fn thinning_extremes() {
        let p = MixedPoissonDistribution::poisson(3.0, 1.0).unwrap().truncate(1e-12);
        assert_eq!(p.thin(1.0), p);
        let q = p.thin(0.0);
        assert!(close(q.probs()[0], p.total_mass(), 1e-15));
        assert!(q.probs()[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn poisson_thinning_gives_poisson() {
        let big = MixedPoissonDistribution::poisson(3.0, 2.0).unwrap();
        let q = big.truncate(1e-14).thin(0.25);
        let small = MixedPoissonDistribution::poisson(3.0, 0.5).unwrap();
        for (k, &v) in q.probs().iter().enumerate() {
            assert!(close(v, small.pmf(k as u64), 1e-13), "k={k}");
        }
    }

    #[test]
    fn rejects_bad_structures() {
        assert!(StructureDistribution::degenerate(0.0).is_err());
        assert!(StructureDistribution::gamma(1.0, -1.0).is_err());
        assert!(StructureDistribution::finite_discrete(vec![(1.0, 0.5)]).is_err());
        assert!(StructureDistribution::finite_discrete(vec![(1.0, 1.2), (2.0, -0.2)]).is_err());
        assert!(MixedPoissonDistribution::poisson(1.0, 0.0).is_err());
    }
}

//! Calibration of a target correlation matrix as a convex combination of
//! extreme correlation matrices.
//!
//! Flattening the strict upper triangles gives `A w = b, 1^T w = 1, w >= 0`,
//! solved with phase 1 of the simplex method. The same weights mix the extreme
//! measures into a joint law with the requested marginals and correlations.

use rand::Rng;
use rayon::prelude::*;

use crate::distributions::{MixedPoissonDistribution, TruncatedPmf};
use crate::ejd::{
    build_extreme_measure, enumerate_structures, CorrelationMatrix, ExtremeMeasure,
    MonotonicityStructure,
};
use crate::error::{Error, Result};
use crate::lp;

/// Largest phase-1 objective accepted as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Largest entry of `|A w - b|` accepted after cleaning the weights.
pub const RESIDUAL_TOL: f64 = 1e-7;
/// Weights below this are zeroed before renormalization.
pub const WEIGHT_FLOOR: f64 = 1e-12;
/// Slack on the pairwise admissible-range pre-check.
const RANGE_SLACK: f64 = 1e-10;

/// Row-major strict upper triangle, length `d(d-1)/2`.
pub fn flatten(c: &CorrelationMatrix) -> Vec<f64> {
    let d = c.dim();
    let mut out = Vec::with_capacity(d * (d - 1) / 2);
    for k in 0..d {
        for l in (k + 1)..d {
            out.push(c.get(k, l));
        }
    }
    out
}

/// Inverse of [`flatten`].
pub fn unflatten(v: &[f64], d: usize) -> Result<CorrelationMatrix> {
    if v.len() != d * (d.saturating_sub(1)) / 2 {
        return Err(Error::InvalidParameter(format!(
            "vector of length {} does not flatten a {d}x{d} matrix",
            v.len()
        )));
    }
    let mut rows = vec![vec![0.0; d]; d];
    let mut it = v.iter();
    for k in 0..d {
        rows[k][k] = 1.0;
        for l in (k + 1)..d {
            let x = *it.next().unwrap();
            rows[k][l] = x;
            rows[l][k] = x;
        }
    }
    CorrelationMatrix::from_rows(&rows)
}

/// Flattened extreme correlations `A` (`m x n`) and flattened target `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationProblem {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

impl CalibrationProblem {
    pub fn new(extreme: &[CorrelationMatrix], target: &CorrelationMatrix) -> Result<Self> {
        let d = target.dim();
        if extreme.iter().any(|c| c.dim() != d) {
            return Err(Error::InvalidParameter(
                "extreme correlation matrices and target differ in dimension".into(),
            ));
        }
        let columns: Vec<Vec<f64>> = extreme.iter().map(flatten).collect();
        let b = flatten(target);
        let a = (0..b.len())
            .map(|i| columns.iter().map(|col| col[i]).collect())
            .collect();
        Ok(CalibrationProblem { a, b })
    }

    pub fn a(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// `A` with a row of ones appended, and `b` with a 1 appended.
    pub fn augmented(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let n = self.a.first().map_or(0, Vec::len);
        let mut a_hat = self.a.clone();
        a_hat.push(vec![1.0; n]);
        let mut b_hat = self.b.clone();
        b_hat.push(1.0);
        (a_hat, b_hat)
    }

    /// Largest `|A w - b|` entry and its row.
    pub fn residual(&self, w: &[f64]) -> (usize, f64) {
        max_residual(&self.a, &self.b, w)
    }
}

fn max_residual(a: &[Vec<f64>], b: &[f64], w: &[f64]) -> (usize, f64) {
    a.iter()
        .zip(b)
        .map(|(row, &bi)| (row.iter().zip(w).map(|(x, y)| x * y).sum::<f64>() - bi).abs())
        .enumerate()
        .fold((0, 0.0), |best, (i, r)| if r > best.1 { (i, r) } else { best })
}

/// Finds `w >= 0` with `A_hat w = b_hat` through the phase-1 program, or
/// reports infeasibility with the worst constraint row.
pub fn phase1_solve(a_hat: &[Vec<f64>], b_hat: &[f64]) -> Result<Vec<f64>> {
    let sol = lp::phase_one(a_hat, b_hat);
    if sol.objective > FEASIBILITY_TOL {
        let (row, residual) = max_residual(a_hat, b_hat, &sol.x);
        return Err(Error::Infeasible {
            objective: sol.objective,
            row,
            residual,
        });
    }
    Ok(sol.x)
}

/// Minimum and maximum attainable correlation between two marginals.
pub fn admissible_range(first: &TruncatedPmf, second: &TruncatedPmf) -> Result<(f64, f64)> {
    let pair = [first.clone(), second.clone()];
    let co = build_extreme_measure(&pair, &MonotonicityStructure::new(vec![0, 0])?)?;
    let anti = build_extreme_measure(&pair, &MonotonicityStructure::new(vec![0, 1])?)?;
    let max = co.correlation_matrix()?.get(0, 1);
    let min = anti.correlation_matrix()?.get(0, 1);
    Ok((min, max))
}

/// Marginals, extreme measures and mixing weights reproducing a target
/// correlation matrix at the horizon.
#[derive(Debug, Clone)]
pub struct CalibratedModel {
    marginals: Vec<MixedPoissonDistribution>,
    truncated: Vec<TruncatedPmf>,
    measures: Vec<ExtremeMeasure>,
    extreme_correlations: Vec<CorrelationMatrix>,
    weights: Vec<f64>,
    weight_cum: Vec<f64>,
    last_active: usize,
    target: CorrelationMatrix,
    horizon: f64,
}

/// Calibrates `target` for `marginals`, all observed at the same horizon.
///
/// Each pair is first checked against its admissible range so an unattainable
/// entry is reported by name; the convex program is then solved by phase 1.
pub fn calibrate(
    marginals: &[MixedPoissonDistribution],
    target: &CorrelationMatrix,
    tol: f64,
) -> Result<CalibratedModel> {
    let d = marginals.len();
    if target.dim() != d {
        return Err(Error::InvalidParameter(format!(
            "target is {}x{} but {d} marginals were given",
            target.dim(),
            target.dim()
        )));
    }
    let structures = enumerate_structures(d)?;
    let horizon = marginals[0].horizon();
    if marginals.iter().any(|m| (m.horizon() - horizon).abs() > 1e-12 * horizon) {
        return Err(Error::InvalidParameter(
            "all marginals must share one horizon".into(),
        ));
    }
    if !(tol > 0.0 && tol < 1e-6) {
        return Err(Error::InvalidParameter(format!(
            "truncation tolerance {tol} must lie in (0, 1e-6)"
        )));
    }
    let truncated: Vec<TruncatedPmf> = marginals.iter().map(|m| m.truncate(tol)).collect();

    for k in 0..d {
        for l in (k + 1)..d {
            let (min, max) = admissible_range(&truncated[k], &truncated[l])?;
            let c = target.get(k, l);
            if c < min - RANGE_SLACK || c > max + RANGE_SLACK {
                return Err(Error::OutsideAdmissibleRange {
                    pair: (k, l),
                    target: c,
                    min,
                    max,
                });
            }
        }
    }

    let measures: Vec<ExtremeMeasure> = structures
        .par_iter()
        .map(|e| build_extreme_measure(&truncated, e))
        .collect::<Result<_>>()?;
    let extreme_correlations: Vec<CorrelationMatrix> = measures
        .par_iter()
        .map(ExtremeMeasure::correlation_matrix)
        .collect::<Result<_>>()?;

    let problem = CalibrationProblem::new(&extreme_correlations, target)?;
    let (a_hat, b_hat) = problem.augmented();
    let raw = phase1_solve(&a_hat, &b_hat)?;
    let weights = clean_weights(&raw);
    let (row, residual) = problem.residual(&weights);
    let sum: f64 = weights.iter().sum();
    if residual > RESIDUAL_TOL || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Infeasible {
            objective: 0.0,
            row,
            residual,
        });
    }
    CalibratedModel::from_parts(
        marginals.to_vec(),
        truncated,
        measures,
        extreme_correlations,
        weights,
        target.clone(),
        horizon,
    )
}

fn clean_weights(raw: &[f64]) -> Vec<f64> {
    let mut w: Vec<f64> = raw
        .iter()
        .map(|&v| if v < WEIGHT_FLOOR { 0.0 } else { v })
        .collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

impl CalibratedModel {
    fn from_parts(
        marginals: Vec<MixedPoissonDistribution>,
        truncated: Vec<TruncatedPmf>,
        measures: Vec<ExtremeMeasure>,
        extreme_correlations: Vec<CorrelationMatrix>,
        weights: Vec<f64>,
        target: CorrelationMatrix,
        horizon: f64,
    ) -> Result<Self> {
        let mut acc = 0.0;
        let weight_cum: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        let last_active = weights
            .iter()
            .rposition(|&w| w > 0.0)
            .ok_or_else(|| Error::InvalidParameter("all weights are zero".into()))?;
        Ok(CalibratedModel {
            marginals,
            truncated,
            measures,
            extreme_correlations,
            weights,
            weight_cum,
            last_active,
            target,
            horizon,
        })
    }

    /// Same model with explicitly chosen weights (normalized here).
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.measures.len() || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidParameter(
                "weights must be non-negative, one per extreme measure".into(),
            ));
        }
        let w = clean_weights(&weights);
        let target = self.mixture_correlation_for(&w)?;
        Self::from_parts(
            self.marginals.clone(),
            self.truncated.clone(),
            self.measures.clone(),
            self.extreme_correlations.clone(),
            w,
            target,
            self.horizon,
        )
    }

    /// Copy whose extreme measures have distorted atom masses, so that its
    /// draws no longer follow the marginals. Negative control for validation.
    #[doc(hidden)]
    pub fn with_corrupted_measures(&self) -> Self {
        let mut out = self.clone();
        out.measures.iter_mut().for_each(ExtremeMeasure::corrupt_masses);
        out
    }

    pub fn dimension(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[MixedPoissonDistribution] {
        &self.marginals
    }

    pub fn truncated_marginals(&self) -> &[TruncatedPmf] {
        &self.truncated
    }

    pub fn measures(&self) -> &[ExtremeMeasure] {
        &self.measures
    }

    pub fn extreme_correlations(&self) -> &[CorrelationMatrix] {
        &self.extreme_correlations
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn target(&self) -> &CorrelationMatrix {
        &self.target
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    fn mixture_correlation_for(&self, w: &[f64]) -> Result<CorrelationMatrix> {
        let d = self.dimension();
        let mut rows = vec![vec![0.0; d]; d];
        for k in 0..d {
            rows[k][k] = 1.0;
            for l in (k + 1)..d {
                let v: f64 = w
                    .iter()
                    .zip(&self.extreme_correlations)
                    .map(|(w, c)| w * c.get(k, l))
                    .sum();
                rows[k][l] = v.clamp(-1.0, 1.0);
                rows[l][k] = rows[k][l];
            }
        }
        CorrelationMatrix::from_rows(&rows)
    }

    /// `sum_j w_j C_j`, the correlation matrix of the mixture.
    pub fn mixture_correlation(&self) -> CorrelationMatrix {
        self.mixture_correlation_for(&self.weights)
            .expect("convex combination of correlation matrices")
    }

    /// Index of the extreme measure selected by a uniform `u`.
    pub fn select_measure(&self, u: f64) -> usize {
        self.weight_cum
            .partition_point(|&c| c <= u)
            .min(self.last_active)
    }

    /// Two-stage draw of the terminal count vector into `out`.
    pub fn sample_joint_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [u32]) {
        let j = self.select_measure(rng.random::<f64>());
        out.copy_from_slice(self.measures[j].sample(rng.random::<f64>()));
    }

    /// Two-stage draw of the terminal count vector.
    pub fn sample_joint<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u32> {
        let mut out = vec![0; self.dimension()];
        self.sample_joint_into(rng, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn matrix2(c: f64) -> CorrelationMatrix {
        CorrelationMatrix::from_rows(&[vec![1.0, c], vec![c, 1.0]]).unwrap()
    }

    #[test]
    fn flatten_examples() {
        assert_eq!(flatten(&matrix2(0.7)), vec![0.7]);
        assert_eq!(flatten(&CorrelationMatrix::identity(3)), vec![0.0, 0.0, 0.0]);
        let v = vec![0.1, -0.2, 0.3, 0.4, -0.5, 0.6];
        assert_eq!(flatten(&unflatten(&v, 4).unwrap()), v);
        assert!(unflatten(&[0.1, 0.2], 3).is_err());
    }

    #[test]
    fn two_point_solutions() {
        let c1 = matrix2(0.9);
        let c2 = matrix2(-0.6);
        let p = CalibrationProblem::new(&[c1.clone(), c2.clone()], &matrix2(0.0)).unwrap();
        let (a, b) = p.augmented();
        let w = phase1_solve(&a, &b).unwrap();
        assert!((w[0] - 0.4).abs() < 1e-12 && (w[1] - 0.6).abs() < 1e-12);

        let p = CalibrationProblem::new(&[c1.clone(), c2.clone()], &matrix2(0.9)).unwrap();
        let (a, b) = p.augmented();
        let w = phase1_solve(&a, &b).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-12 && w[1].abs() < 1e-12);

        let p = CalibrationProblem::new(&[c1, c2], &matrix2(0.95)).unwrap();
        let (a, b) = p.augmented();
        assert!(matches!(phase1_solve(&a, &b), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn identical_marginals_target_one() {
        let m = MixedPoissonDistribution::poisson(3.0, 1.0).unwrap();
        let model = calibrate(&[m.clone(), m], &matrix2(1.0), 1e-12).unwrap();
        assert_eq!(model.weights()[1], 0.0);
        assert!((model.weights()[0] - 1.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x = model.sample_joint(&mut rng);
            assert_eq!(x[0], x[1]);
        }
    }

    #[test]
    fn admissible_range_contains_csm_bound() {
        let a = MixedPoissonDistribution::poisson(1.0, 1.0).unwrap().truncate(1e-12);
        let b = MixedPoissonDistribution::poisson(4.0, 1.0).unwrap().truncate(1e-12);
        let (min, max) = admissible_range(&a, &b).unwrap();
        assert!(max >= (1.0f64 / 4.0).sqrt());
        assert!(min < 0.0);
        let (_, max) = admissible_range(&a, &a).unwrap();
        assert!((max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_names_pair() {
        let a = MixedPoissonDistribution::poisson(0.5, 1.0).unwrap();
        let b = MixedPoissonDistribution::negative_binomial(30.0, 300.0, 1.0).unwrap();
        let err = calibrate(&[a, b], &matrix2(0.999), 1e-12).unwrap_err();
        match &err {
            Error::OutsideAdmissibleRange { pair, max, .. } => {
                assert_eq!(*pair, (0, 1));
                assert!(*max < 0.999);
            }
            other => panic!("{other:?}"),
        }
        assert!(err.to_string().contains("(1,2)"));
        assert!(err.is_infeasible());
    }

    #[test]
    fn three_dimensional_zero_target() {
        let ms = [
            MixedPoissonDistribution::poisson(2.0, 1.0).unwrap(),
            MixedPoissonDistribution::negative_binomial(4.0, 10.0, 1.0).unwrap(),
            MixedPoissonDistribution::poisson(6.0, 1.0).unwrap(),
        ];
        let model = calibrate(&ms, &CorrelationMatrix::identity(3), 1e-12).unwrap();
        let w = model.weights();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(w.iter().all(|&x| x >= 0.0));
        let mix = model.mixture_correlation();
        for k in 0..3 {
            for l in (k + 1)..3 {
                assert!(mix.get(k, l).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn calibration_is_deterministic() {
        let ms = [
            MixedPoissonDistribution::poisson(2.0, 1.0).unwrap(),
            MixedPoissonDistribution::poisson(3.0, 1.0).unwrap(),
            MixedPoissonDistribution::poisson(6.0, 1.0).unwrap(),
        ];
        let target = unflatten(&[0.3, -0.2, 0.1], 3).unwrap();
        let a = calibrate(&ms, &target, 1e-12).unwrap();
        let b = calibrate(&ms, &target, 1e-12).unwrap();
        assert_eq!(a.weights(), b.weights());
    }

    #[test]
    fn point_mass_weight_always_picks_that_measure() {
        let ms = [
            MixedPoissonDistribution::poisson(2.0, 1.0).unwrap(),
            MixedPoissonDistribution::poisson(3.0, 1.0).unwrap(),
        ];
        let model = calibrate(&ms, &matrix2(0.2), 1e-12).unwrap();
        let pinned = model.with_weights(vec![1.0, 0.0]).unwrap();
        for s in 0..1000 {
            assert_eq!(pinned.select_measure(s as f64 / 1000.0), 0);
        }
        assert!((pinned.target().get(0, 1) - model.extreme_correlations()[0].get(0, 1)).abs() < 1e-15);
    }
}

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

const MIN_SAMPLES: usize = 20;
const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub cells: usize,
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // theta-function form converges fast for small lambda
        let y = (-std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda
            * (y + y.powi(9) + y.powi(25) + y.powi(49));
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let x = (-2.0 * lambda * lambda).exp();
        (2.0 * (x - x.powi(4) + x.powi(9) - x.powi(16))).clamp(0.0, 1.0)
    }
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF, with the
/// asymptotic p-value at `(sqrt(n) + 0.12 + 0.11/sqrt(n)) D`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    let n = samples.len();
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: n,
            need: MIN_SAMPLES,
        });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let nf = n as f64;
    let statistic = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / nf).max((i + 1) as f64 / nf - f)
        })
        .fold(0.0, f64::max);
    let sqrt_n = nf.sqrt();
    let p_value = kolmogorov_survival((sqrt_n + 0.12 + 0.11 / sqrt_n) * statistic);
    Ok(KsResult {
        statistic,
        p_value,
        n,
    })
}

/// Kolmogorov–Smirnov test against Uniform[0, 1].
pub fn ks_uniform(samples: &[f64]) -> Result<KsResult> {
    ks_test(samples, |x| x.clamp(0.0, 1.0))
}

/// Pearson chi-square test of integer samples against `pmf` on `0..pmf.len()`.
///
/// Adjacent cells are pooled left to right until each expects at least five
/// observations; the last cell is open-ended and also carries the mass
/// beyond the pmf's support.
pub fn chi_square_pmf(samples: &[u32], pmf: &[f64]) -> Result<ChiSquareResult> {
    let n = samples.len();
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: n,
            need: MIN_SAMPLES,
        });
    }
    let nf = n as f64;
    // (first value of the cell, expected count)
    let mut cells: Vec<(usize, f64)> = Vec::new();
    let mut start = 0;
    let mut acc = 0.0;
    for (k, &p) in pmf.iter().enumerate() {
        acc += nf * p;
        if acc >= MIN_EXPECTED {
            cells.push((start, acc));
            start = k + 1;
            acc = 0.0;
        }
    }
    let tail = nf * (1.0 - pmf.iter().sum::<f64>()).max(0.0);
    match cells.last_mut() {
        Some(last) => last.1 += acc + tail,
        None => {
            return Err(Error::InsufficientSamples {
                got: n,
                need: MIN_SAMPLES,
            })
        }
    }
    if cells.len() < 2 {
        return Err(Error::InvalidParameter(
            "fewer than two cells after pooling; more samples needed".into(),
        ));
    }
    let mut observed = vec![0.0; cells.len()];
    for &s in samples {
        let idx = cells.partition_point(|&(lo, _)| lo <= s as usize) - 1;
        observed[idx] += 1.0;
    }
    let statistic: f64 = observed
        .iter()
        .zip(&cells)
        .map(|(o, &(_, e))| (o - e) * (o - e) / e)
        .sum();
    let dof = cells.len() - 1;
    let p_value = 1.0 - ChiSquared::new(dof as f64).expect("positive dof").cdf(statistic);
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value,
        cells: cells.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_branches_agree_at_switch() {
        let a = kolmogorov_survival(1.18 - 1e-9);
        let b = kolmogorov_survival(1.18 + 1e-9);
        assert!((a - b).abs() < 1e-6);
        // tabulated: P(K > 1.36) ~ 0.0494, P(K > 1.63) ~ 0.0098
        assert!((kolmogorov_survival(1.36) - 0.0494).abs() < 5e-4);
        assert!((kolmogorov_survival(1.63) - 0.0098).abs() < 3e-4);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }

    #[test]
    fn ks_on_a_perfect_grid() {
        let n = 1000;
        let grid: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let r = ks_uniform(&grid).unwrap();
        assert!((r.statistic - 0.5 / n as f64).abs() < 1e-12);
        assert!(r.p_value > 0.99);
        assert!(ks_uniform(&grid[..10]).is_err());
    }

    #[test]
    fn chi_square_exact_fit() {
        let pmf = [0.25, 0.25, 0.5];
        let mut s = Vec::new();
        s.extend(std::iter::repeat_n(0, 25));
        s.extend(std::iter::repeat_n(1, 25));
        s.extend(std::iter::repeat_n(2, 50));
        let r = chi_square_pmf(&s, &pmf).unwrap();
        assert!(r.statistic.abs() < 1e-12);
        assert_eq!(r.dof, 2);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        let skew: Vec<u32> = std::iter::repeat_n(0, 100).collect();
        assert!(chi_square_pmf(&skew, &pmf).unwrap().p_value < 1e-10);
        assert!(chi_square_pmf(&s[..10], &pmf).is_err());
    }

    #[test]
    fn chi_square_pools_sparse_cells() {
        // expected counts 40, 40, 10, 6, 3, 1 -> last three pooled
        let pmf = [0.4, 0.4, 0.1, 0.06, 0.03, 0.01];
        let samples: Vec<u32> = (0..100).map(|i| (i % 6) as u32).collect();
        let r = chi_square_pmf(&samples, &pmf).unwrap();
        assert_eq!(r.cells, 4);
    }
}

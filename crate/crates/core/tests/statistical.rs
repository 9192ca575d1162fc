//! Monte Carlo checks with fixed seeds. Thresholds are several standard
//! errors wide; the seeds only make runs repeatable.

use backsim::analytics::{chi_square_pmf, cross_period_covariance, ks_test, ks_uniform, sample_correlation};
use backsim::calibration::calibrate;
use backsim::distributions::MixedPoissonDistribution;
use backsim::ejd::CorrelationMatrix;
use backsim::simulation::{fill_arrivals, simulate, simulate_forward_comonotone, FrechetMode, SimulationConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Beta, ContinuousCDF};

fn model(rho: f64) -> backsim::calibration::CalibratedModel {
    let ms = [
        MixedPoissonDistribution::negative_binomial(5.0, 30.0, 1.0).unwrap(),
        MixedPoissonDistribution::poisson(5.0, 1.0).unwrap(),
    ];
    let c = CorrelationMatrix::from_rows(&[vec![1.0, rho], vec![rho, 1.0]]).unwrap();
    calibrate(&ms, &c, 1e-12).unwrap()
}

#[test]
fn ks_rejection_rate_under_the_null_and_power() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut rejects = 0;
    for _ in 0..500 {
        let u: Vec<f64> = (0..200).map(|_| rng.random()).collect();
        if ks_uniform(&u).unwrap().p_value <= 0.01 {
            rejects += 1;
        }
    }
    assert!(rejects <= 15, "{rejects} rejections");
    // Beta(2, 1) samples: sqrt of a uniform
    let mut power = 0;
    for _ in 0..100 {
        let u: Vec<f64> = (0..200).map(|_| rng.random::<f64>().sqrt()).collect();
        if ks_uniform(&u).unwrap().p_value <= 0.01 {
            power += 1;
        }
    }
    assert!(power >= 95, "power {power}/100");
}

#[test]
fn chi_square_rejection_rate_under_the_null() {
    let m = MixedPoissonDistribution::negative_binomial(4.0, 12.0, 1.0).unwrap();
    let p = m.truncate(1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut rejects = 0;
    for _ in 0..500 {
        let s: Vec<u32> = (0..500)
            .map(|_| p.quantile(rng.random()).unwrap() as u32)
            .collect();
        if chi_square_pmf(&s, p.probs()).unwrap().p_value <= 0.01 {
            rejects += 1;
        }
    }
    assert!(rejects <= 15, "{rejects} rejections");
}

#[test]
fn arrival_order_statistics_are_beta() {
    // given n arrivals on [0, 1), the k-th is Beta(k, n - k + 1)
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 5;
    let mut kth = vec![Vec::new(); n];
    for _ in 0..20_000 {
        let mut v = Vec::new();
        fill_arrivals(n as u32, 0.0, 1.0, &mut rng, &mut v);
        for (k, t) in v.into_iter().enumerate() {
            kth[k].push(t);
        }
    }
    for (k, samples) in kth.iter().enumerate() {
        let beta = Beta::new((k + 1) as f64, (n - k) as f64).unwrap();
        let r = ks_test(samples, |x| beta.cdf(x)).unwrap();
        assert!(r.p_value > 0.001, "k={k} p={}", r.p_value);
    }
}

#[test]
fn sampling_frequencies_match_measure_masses() {
    let model = model(0.7);
    let measure = &model.measures()[0];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 200_000;
    let mut hits = vec![0usize; measure.len()];
    for _ in 0..n {
        hits[measure.sample_index(rng.random())] += 1;
    }
    let total = measure.total_mass();
    for (i, &p) in measure.probs().iter().enumerate() {
        let p = p / total;
        // normal approximation only where the expected count is large
        if p * n as f64 >= 25.0 {
            let se = (p * (1.0 - p) / n as f64).sqrt();
            let freq = hits[i] as f64 / n as f64;
            assert!((freq - p).abs() <= 4.0 * se, "atom {i}: {freq} vs {p}");
        }
    }
    let idx: Vec<u32> = hits
        .iter()
        .enumerate()
        .flat_map(|(i, &h)| std::iter::repeat_n(i as u32, h))
        .collect();
    let probs: Vec<f64> = measure.probs().iter().map(|p| p / total).collect();
    assert!(chi_square_pmf(&idx, &probs).unwrap().p_value > 0.001);
}

#[test]
fn moments_grow_linearly_over_periods() {
    let model = model(-0.7);
    let marginals = model.marginals().to_vec();
    let paths = simulate(&SimulationConfig::new(model, 4, 50_000, 5)).unwrap();
    for m in 1..=4 {
        let t = m as f64;
        for (k, marg) in marginals.iter().enumerate() {
            let x = paths.counts_at(k, t);
            let n = x.len() as f64;
            let mean = x.iter().sum::<f64>() / n;
            let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            // continuation adds independent copies: m times the one-period moments
            let (mu, sigma2) = (t * marg.mean(), t * marg.variance());
            assert!((mean - mu).abs() <= 4.0 * (sigma2 / n).sqrt(), "k={k} m={m} mean {mean} vs {mu}");
            assert!((var / sigma2 - 1.0).abs() <= 0.05, "k={k} m={m} var {var} vs {sigma2}");
        }
    }
}

#[test]
fn increments_over_periods_are_uncorrelated() {
    let paths = simulate(&SimulationConfig::new(model(0.7), 3, 50_000, 6)).unwrap();
    for k in 0..2 {
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            let (cov, se) = cross_period_covariance(&paths, k, a, b).unwrap();
            assert!(cov.abs() <= 4.0 * se, "k={k} periods {a},{b}: {cov} (se {se})");
        }
    }
}

#[test]
fn frechet_max_coupling_correlation() {
    for (l1, l2) in [(4.0, 1.0), (1.0, 4.0), (9.0, 1.0)] {
        let paths = simulate_forward_comonotone(l1, l2, 1.0, 100_000, 7, FrechetMode::Max).unwrap();
        let r = sample_correlation(&paths.counts_at(0, 1.0), &paths.counts_at(1, 1.0)).unwrap();
        let kappa: f64 = l1 / l2;
        let expect = kappa.max(1.0 / kappa).sqrt().recip();
        assert!((r - expect).abs() <= 0.02, "kappa={kappa}: {r} vs {expect}");
    }
}

#[test]
fn frechet_min_coupling_is_negative_with_poisson_marginals() {
    let (l1, l2) = (3.0, 5.0);
    let paths = simulate_forward_comonotone(l1, l2, 1.0, 50_000, 8, FrechetMode::Min).unwrap();
    let x = paths.counts_at(0, 1.0);
    let y = paths.counts_at(1, 1.0);
    assert!(sample_correlation(&x, &y).unwrap() < -0.1);
    for (counts, l) in [(&x, l1), (&y, l2)] {
        let p = MixedPoissonDistribution::poisson(l, 1.0).unwrap().truncate(1e-12);
        let s: Vec<u32> = counts.iter().map(|&v| v as u32).collect();
        assert!(chi_square_pmf(&s, p.probs()).unwrap().p_value > 0.001);
    }
}

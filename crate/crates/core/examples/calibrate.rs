//! Convex weights over the extreme measures that hit a target correlation,
//! and what an unattainable target looks like.

use backsim::calibration::{admissible_range, calibrate};
use backsim::distributions::MixedPoissonDistribution;
use backsim::ejd::{enumerate_structures, CorrelationMatrix};

fn main() -> backsim::Result<()> {
    let marginals = [
        MixedPoissonDistribution::negative_binomial(5.0, 30.0, 1.0)?,
        MixedPoissonDistribution::poisson(5.0, 1.0)?,
    ];
    let (lo, hi) = admissible_range(&marginals[0].truncate(1e-12), &marginals[1].truncate(1e-12))?;
    println!("admissible correlation range [{lo:.4}, {hi:.4}]");

    for rho in [0.7, -0.7, 0.0] {
        let target = CorrelationMatrix::from_rows(&[vec![1.0, rho], vec![rho, 1.0]])?;
        let model = calibrate(&marginals, &target, 1e-12)?;
        let labels = enumerate_structures(2)?;
        let weights: Vec<String> = labels
            .iter()
            .zip(model.weights())
            .map(|(e, w)| format!("{e}:{w:.6}"))
            .collect();
        println!(
            "rho={rho:+.1}  weights [{}]  achieved {:+.12}",
            weights.join(" "),
            model.mixture_correlation().get(0, 1)
        );
    }

    let too_much = CorrelationMatrix::from_rows(&[vec![1.0, 0.99], vec![0.99, 1.0]])?;
    match calibrate(&marginals, &too_much, 1e-12) {
        Ok(_) => println!("unexpectedly feasible"),
        Err(e) => println!("rho=+0.99: {e}"),
    }
    Ok(())
}

//! The extreme joint distributions of three marginals, one per
//! co/antimonotonicity pattern, and their correlation matrices.

use backsim::distributions::MixedPoissonDistribution;
use backsim::ejd::{build_extreme_measure, enumerate_structures};

fn main() -> backsim::Result<()> {
    let marginals = [
        MixedPoissonDistribution::negative_binomial(5.0, 30.0, 1.0)?,
        MixedPoissonDistribution::poisson(5.0, 1.0)?,
        MixedPoissonDistribution::poisson(2.0, 1.0)?,
    ];
    let truncated: Vec<_> = marginals.iter().map(|m| m.truncate(1e-12)).collect();

    for e in enumerate_structures(3)? {
        let m = build_extreme_measure(&truncated, &e)?;
        let c = m.correlation_matrix()?;
        println!(
            "{e}: {} atoms, tail {:.1e}, rho12={:+.4} rho13={:+.4} rho23={:+.4}",
            m.len(),
            m.tail_mass(),
            c.get(0, 1),
            c.get(0, 2),
            c.get(1, 2)
        );
        // the heaviest few atoms along the monotone path
        for (point, p) in m.support().zip(m.probs()).filter(|(_, &p)| p > 0.05).take(4) {
            println!("    {point:?}  {p:.6}");
        }
    }
    Ok(())
}

// $ cargo run --example extreme_measures

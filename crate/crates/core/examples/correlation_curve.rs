//! Closed-form correlation inside one period: linear for Poisson pairs,
//! concave or convex for overdispersed ones.

use backsim::analytics::{rho_bs, z_function};
use backsim::distributions::MixedPoissonDistribution;

fn main() -> backsim::Result<()> {
    let pairs = [
        ("Poisson(3) / Poisson(30)", MixedPoissonDistribution::poisson(3.0, 1.0)?, MixedPoissonDistribution::poisson(30.0, 1.0)?),
        (
            "NB(3, 30) / NB(30, 35)",
            MixedPoissonDistribution::negative_binomial(3.0, 30.0, 1.0)?,
            MixedPoissonDistribution::negative_binomial(30.0, 35.0, 1.0)?,
        ),
        (
            "NB(5, 30) / Poisson(5)",
            MixedPoissonDistribution::negative_binomial(5.0, 30.0, 1.0)?,
            MixedPoissonDistribution::poisson(5.0, 1.0)?,
        ),
    ];
    print!("   t");
    for (name, _, _) in &pairs {
        print!("  {name:>26}");
    }
    println!();
    for i in 1..=10 {
        let t = i as f64 / 10.0;
        print!("{t:4.1}");
        for (_, a, b) in &pairs {
            print!("  {:>+26.4}", rho_bs(t, 1.0, 0.7, a, b)?);
        }
        println!();
    }
    let (_, a, b) = &pairs[1];
    println!("Z(0.1) = {:.4}, Z(1) = {:.4}", z_function(a, 0.1)? * z_function(b, 0.1)?, z_function(a, 1.0)? * z_function(b, 1.0)?);
    Ok(())
}

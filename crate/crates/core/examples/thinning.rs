//! Binomial thinning of a count law and the generating-function identity
//! q(z) = p(1 - x + x z).

use backsim::distributions::{MixedPoissonDistribution, StructureDistribution};

fn main() -> backsim::Result<()> {
    let laws = [
        ("Poisson(3)", MixedPoissonDistribution::poisson(3.0, 1.0)?),
        ("NB(r=1, b=0.2)", MixedPoissonDistribution::new(StructureDistribution::gamma(1.0, 0.2)?, 1.0)?),
    ];
    for (name, law) in &laws {
        let p = law.truncate(1e-13);
        let mut worst: f64 = 0.0;
        for x in [0.1, 0.5, 0.9] {
            let q = p.thin(x);
            for z in [-1.0, -0.5, 0.0, 0.5, 1.0] {
                worst = worst.max((q.pgf(z) - p.pgf(1.0 - x + x * z)).abs());
            }
            let direct = law.at(x)?;
            println!(
                "{name} thinned by {x}: mean {:.6} (direct {:.6}), var {:.6} (direct {:.6})",
                q.mean(),
                direct.mean(),
                q.variance(),
                direct.variance()
            );
        }
        println!("{name}: largest generating-function gap {worst:.2e}\n");
    }
    Ok(())
}

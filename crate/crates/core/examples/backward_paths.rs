//! Terminal counts first, then arrival times as sorted uniforms.

use backsim::calibration::calibrate;
use backsim::distributions::MixedPoissonDistribution;
use backsim::ejd::CorrelationMatrix;
use backsim::simulation::{simulate, SimulationConfig};

fn main() -> backsim::Result<()> {
    let marginals = [
        MixedPoissonDistribution::negative_binomial(3.0, 30.0, 1.0)?,
        MixedPoissonDistribution::negative_binomial(30.0, 35.0, 1.0)?,
    ];
    let target = CorrelationMatrix::from_rows(&[vec![1.0, -0.7], vec![-0.7, 1.0]])?;
    let model = calibrate(&marginals, &target, 1e-12)?;

    let paths = simulate(&SimulationConfig::new(model, 1, 5, 42))?;
    for (i, p) in paths.paths().iter().enumerate() {
        println!("path {i}");
        for k in 0..2 {
            let times: Vec<String> = p.arrivals(k).iter().take(8).map(|t| format!("{t:.3}")).collect();
            let more = p.arrivals(k).len().saturating_sub(8);
            println!(
                "  X{} = {:>3}: {}{}",
                k + 1,
                p.period_counts(k)[0],
                times.join(" "),
                if more > 0 { format!(" ... (+{more})") } else { String::new() }
            );
        }
    }
    paths.write_events_csv(std::io::stdout().lock())?;
    Ok(())
}

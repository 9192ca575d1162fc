//! Scenario file to CSV artifacts without the command line: calibrate,
//! simulate, write events, counts and one curve per pair.

use std::fs::File;
use std::io::BufWriter;

use backsim::analytics::empirical_curve;
use backsim::scenario::Scenario;
use backsim::simulation::{simulate, SimulationConfig};

fn main() -> backsim::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/nb_poisson_pos.toml").into());
    let out = std::path::PathBuf::from(args.next().unwrap_or_else(|| "target/scenario_pipeline".into()));
    std::fs::create_dir_all(&out)?;

    let mut scenario = Scenario::from_file(&path)?;
    scenario.n_paths = scenario.n_paths.min(20_000);
    let model = scenario.calibrate()?;
    let marginals = model.marginals().to_vec();
    let target = model.target().clone();
    let paths = simulate(&SimulationConfig::new(model, scenario.periods, scenario.n_paths, scenario.seed))?;

    paths.write_events_csv(BufWriter::new(File::create(out.join("events.csv"))?))?;
    paths.write_counts_csv(BufWriter::new(File::create(out.join("counts.csv"))?))?;
    let d = marginals.len();
    for k in 0..d {
        for l in (k + 1)..d {
            let curve = empirical_curve(&paths, (k, l), &scenario.time_grid(), target.get(k, l), &marginals[k], &marginals[l])?;
            curve.write_csv(BufWriter::new(File::create(out.join(format!("curve_{}_{}.csv", k + 1, l + 1)))?))?;
        }
    }
    println!("{} paths written to {}", paths.len(), out.display());
    Ok(())
}

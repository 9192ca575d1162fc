//! The validation suite on a scenario file, and the same suite with the
//! extreme measures deliberately distorted.
//!
//! $ cargo run --release --example goodness_of_fit -- scenarios/validate_default.toml

use backsim::scenario::Scenario;
use backsim::validation::{run_validation, ValidationOptions};

fn main() -> backsim::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/validate_default.toml").into());
    let scenario = Scenario::from_file(&path)?;
    let mut opts = ValidationOptions::from_scenario(&scenario);

    let report = run_validation(&scenario, &opts)?;
    print!("{report}");
    println!("passed: {}\n", report.passed());

    opts.corrupt = true;
    let report = run_validation(&scenario, &opts)?;
    print!("{report}");
    println!("passed with corrupted measures: {}", report.passed());
    Ok(())
}

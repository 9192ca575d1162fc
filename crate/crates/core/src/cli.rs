//! Scenario-driven command line: `calibrate`, `simulate`, `curve`, `validate`.
//!
//! Exit codes: [`EXIT_OK`], [`EXIT_USAGE`] for usage and parse errors,
//! [`EXIT_INFEASIBLE`] when the target cannot be calibrated and
//! [`EXIT_VALIDATION`] when a validation check fails.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::analytics::empirical_curve;
use crate::calibration::{admissible_range, CalibratedModel};
use crate::ejd::enumerate_structures;
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::simulation::{simulate, PathSet, SimulationConfig};
use crate::validation::{run_validation, ValidationOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "backsim", version, about = "Correlated mixed Poisson processes by backward simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the extreme-measure weights matching the target correlation.
    Calibrate(CommonArgs),
    /// Generate event and count paths.
    Simulate(CommonArgs),
    /// Theoretical and empirical correlation curves for every pair.
    Curve(CommonArgs),
    /// Run the statistical validation suite.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output directory; defaults to the scenario's `output_dir` or `.`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub paths: Option<usize>,
    /// Worker threads for path generation; defaults to available parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Distort the extreme measures before simulating (negative control).
    #[arg(long, hide = true)]
    pub corrupt_weights: bool,
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_infeasible() {
                EXIT_INFEASIBLE
            } else {
                EXIT_USAGE
            }
        }
    }
}

fn execute(command: &Command) -> Result<i32> {
    match command {
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Curve(a) => cmd_curve(a),
        Command::Validate(a) => cmd_validate(a),
    }
}

struct Context {
    scenario: Scenario,
    out: PathBuf,
    threads: Option<usize>,
}

fn load(args: &CommonArgs) -> Result<Context> {
    let mut scenario = Scenario::from_file(&args.scenario)?;
    if let Some(s) = args.seed {
        scenario.seed = s;
    }
    if let Some(n) = args.paths {
        if n == 0 {
            return Err(Error::Scenario("--paths must be positive".into()));
        }
        scenario.n_paths = n;
    }
    if args.threads == Some(0) {
        return Err(Error::Scenario("--threads must be positive".into()));
    }
    let out = args
        .out
        .clone()
        .or_else(|| scenario.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out)?;
    Ok(Context {
        scenario,
        out,
        threads: args.threads,
    })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_ranges(ctx: &Context) -> Result<()> {
    let marginals = ctx.scenario.marginal_distributions()?;
    let truncated: Vec<_> = marginals
        .iter()
        .map(|m| m.truncate(ctx.scenario.truncation_tol))
        .collect();
    let target = ctx.scenario.target()?;
    let mut w = csv::Writer::from_writer(create(&ctx.out, "admissible_ranges.csv")?);
    w.write_record(["k", "l", "rho_min", "rho_max", "target"])?;
    for k in 0..truncated.len() {
        for l in (k + 1)..truncated.len() {
            let (min, max) = admissible_range(&truncated[k], &truncated[l])?;
            w.write_record([
                (k + 1).to_string(),
                (l + 1).to_string(),
                min.to_string(),
                max.to_string(),
                target.get(k, l).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `weights.csv` and `extreme_corrs.csv` for a calibrated model.
pub fn write_calibration(model: &CalibratedModel, dir: &Path) -> Result<()> {
    let d = model.dimension();
    let structures = enumerate_structures(d)?;
    let mut w = csv::Writer::from_writer(create(dir, "weights.csv")?);
    w.write_record(["structure", "weight"])?;
    for (s, wt) in structures.iter().zip(model.weights()) {
        w.write_record([s.to_string(), wt.to_string()])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_writer(create(dir, "extreme_corrs.csv")?);
    w.write_record(["structure", "k", "l", "rho"])?;
    for (s, c) in structures.iter().zip(model.extreme_correlations()) {
        for k in 0..d {
            for l in (k + 1)..d {
                w.write_record([
                    s.to_string(),
                    (k + 1).to_string(),
                    (l + 1).to_string(),
                    c.get(k, l).to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_calibrate(args: &CommonArgs) -> Result<i32> {
    let ctx = load(args)?;
    // ranges go out first so they are available when calibration fails
    write_ranges(&ctx)?;
    let model = ctx.scenario.calibrate()?;
    write_calibration(&model, &ctx.out)?;
    let achieved = model.mixture_correlation();
    let target = model.target();
    let mut residual: f64 = 0.0;
    for k in 0..model.dimension() {
        for l in 0..model.dimension() {
            residual = residual.max((achieved.get(k, l) - target.get(k, l)).abs());
        }
    }
    let active = model.weights().iter().filter(|&&w| w > 0.0).count();
    println!(
        "calibrated {} structures ({active} active), sum of weights {:.12}, max residual {residual:.3e}",
        model.weights().len(),
        model.weights().iter().sum::<f64>()
    );
    println!("wrote {}", ctx.out.display());
    Ok(EXIT_OK)
}

fn simulate_scenario(ctx: &Context, model: CalibratedModel) -> Result<(PathSet, f64)> {
    let s = &ctx.scenario;
    let mut config = SimulationConfig::new(model, s.periods, s.n_paths, s.seed);
    if let Some(t) = ctx.threads {
        config = config.with_threads(t);
    }
    let start = Instant::now();
    let paths = simulate(&config)?;
    Ok((paths, start.elapsed().as_secs_f64()))
}

fn cmd_simulate(args: &CommonArgs) -> Result<i32> {
    let ctx = load(args)?;
    let model = ctx.scenario.calibrate()?;
    let (paths, secs) = simulate_scenario(&ctx, model)?;
    paths.write_events_csv(create(&ctx.out, "events.csv")?)?;
    paths.write_counts_csv(create(&ctx.out, "counts.csv")?)?;
    println!(
        "simulated {} paths x {} periods in {secs:.3} s ({:.0} paths/sec)",
        paths.len(),
        paths.periods(),
        paths.len() as f64 / secs.max(1e-9)
    );
    println!("wrote {}", ctx.out.display());
    Ok(EXIT_OK)
}

fn cmd_curve(args: &CommonArgs) -> Result<i32> {
    let ctx = load(args)?;
    let model = ctx.scenario.calibrate()?;
    let marginals = model.marginals().to_vec();
    let target = model.target().clone();
    let (paths, _) = simulate_scenario(&ctx, model)?;
    let times = ctx.scenario.time_grid();
    let d = marginals.len();
    for k in 0..d {
        for l in (k + 1)..d {
            let curve = empirical_curve(
                &paths,
                (k, l),
                &times,
                target.get(k, l),
                &marginals[k],
                &marginals[l],
            )?;
            let name = format!("curve_{}_{}.csv", k + 1, l + 1);
            curve.write_csv(create(&ctx.out, &name)?)?;
            let skipped = curve.degenerate_points().len();
            if skipped > 0 {
                println!("{name}: {skipped} time points with zero-variance counts left empty");
            }
        }
    }
    println!("wrote {} curves to {}", d * (d - 1) / 2, ctx.out.display());
    Ok(EXIT_OK)
}

fn cmd_validate(args: &ValidateArgs) -> Result<i32> {
    let ctx = load(&args.common)?;
    let mut opts = ValidationOptions::from_scenario(&ctx.scenario);
    opts.threads = ctx.threads;
    opts.corrupt = args.corrupt_weights;
    let report = run_validation(&ctx.scenario, &opts)?;
    print!("{report}");
    let mut stdout = std::io::stdout();
    stdout.flush()?;
    if report.passed() {
        println!("all {} checks passed", report.checks.len());
        Ok(EXIT_OK)
    } else {
        println!("{} of {} checks failed", report.failures().count(), report.checks.len());
        Ok(EXIT_VALIDATION)
    }
}

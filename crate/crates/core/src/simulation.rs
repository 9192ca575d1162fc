//! Sample-path generation.
//!
//! Backward simulation draws the terminal count vector of a period from the
//! calibrated joint law and then places each coordinate's events as sorted
//! i.i.d. uniforms on the period. Forward continuation repeats this on
//! `[mT, (m+1)T)` with an independent redraw per period, so increments across
//! periods are independent and the joint law at every `mT` is the m-fold
//! convolution of the calibrated one.
//!
//! [`forward_comonotone`] is the classical alternative: exponential
//! inter-arrival times coupled through the Fréchet–Hoeffding bounds.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use crate::calibration::CalibratedModel;
use crate::error::{Error, Result};
use crate::rng::{coordinate_slot, StreamFactory, JOINT_SLOT};

/// Event times and per-period counts of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    arrivals: Vec<Vec<f64>>,
    period_counts: Vec<Vec<u32>>,
}

impl Path {
    pub fn new(arrivals: Vec<Vec<f64>>, period_counts: Vec<Vec<u32>>) -> Self {
        Path {
            arrivals,
            period_counts,
        }
    }

    pub fn dimension(&self) -> usize {
        self.arrivals.len()
    }

    /// Sorted event times of coordinate `k`.
    pub fn arrivals(&self, k: usize) -> &[f64] {
        &self.arrivals[k]
    }

    /// Events of coordinate `k` in each period.
    pub fn period_counts(&self, k: usize) -> &[u32] {
        &self.period_counts[k]
    }

    /// `X_t = #{ i : T_i <= t }` for coordinate `k`.
    pub fn count_at(&self, k: usize, t: f64) -> u32 {
        self.arrivals[k].partition_point(|&s| s <= t) as u32
    }
}

/// Simulated paths sharing a period structure.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    paths: Vec<Path>,
    dimension: usize,
    periods: u32,
    period_length: f64,
}

impl PathSet {
    pub fn new(paths: Vec<Path>, dimension: usize, periods: u32, period_length: f64) -> Self {
        PathSet {
            paths,
            dimension,
            periods,
            period_length,
        }
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn periods(&self) -> u32 {
        self.periods
    }

    pub fn period_length(&self) -> f64 {
        self.period_length
    }

    /// End of the simulated window.
    pub fn horizon(&self) -> f64 {
        self.periods as f64 * self.period_length
    }

    /// Cumulative counts of coordinate `k` at time `t`, one per path.
    pub fn counts_at(&self, k: usize, t: f64) -> Vec<f64> {
        self.paths.iter().map(|p| p.count_at(k, t) as f64).collect()
    }

    /// `path_id,coordinate,event_time`, coordinates numbered from 1.
    pub fn write_events_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["path_id", "coordinate", "event_time"])?;
        for (i, p) in self.paths.iter().enumerate() {
            for k in 0..self.dimension {
                for t in p.arrivals(k) {
                    w.write_record([i.to_string(), (k + 1).to_string(), t.to_string()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// `path_id,coordinate,period,count`, coordinates numbered from 1 and
    /// periods from 0.
    pub fn write_counts_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["path_id", "coordinate", "period", "count"])?;
        for (i, p) in self.paths.iter().enumerate() {
            for k in 0..self.dimension {
                for (m, c) in p.period_counts(k).iter().enumerate() {
                    w.write_record([
                        i.to_string(),
                        (k + 1).to_string(),
                        m.to_string(),
                        c.to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Run parameters for [`simulate`].
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub model: CalibratedModel,
    pub periods: u32,
    pub paths: usize,
    pub seed: u64,
    pub time_grid: Vec<f64>,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl SimulationConfig {
    pub fn new(model: CalibratedModel, periods: u32, paths: usize, seed: u64) -> Self {
        SimulationConfig {
            model,
            periods,
            paths,
            seed,
            time_grid: Vec::new(),
            threads: None,
        }
    }

    pub fn with_time_grid(mut self, grid: Vec<f64>) -> Self {
        self.time_grid = grid;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    pub fn horizon(&self) -> f64 {
        self.periods as f64 * self.model.horizon()
    }

    pub fn validate(&self) -> Result<()> {
        if self.periods == 0 || self.paths == 0 {
            return Err(Error::InvalidParameter(
                "periods and paths must be positive".into(),
            ));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidParameter("threads must be positive".into()));
        }
        let h = self.horizon();
        if self.time_grid.iter().any(|&t| !(0.0..=h).contains(&t))
            || self.time_grid.windows(2).any(|w| w[0] > w[1])
        {
            return Err(Error::InvalidParameter(format!(
                "time grid must be sorted and lie within [0, {h}]"
            )));
        }
        Ok(())
    }
}

/// Appends `count` sorted uniforms on `[start, start + length)` to `out`.
pub fn fill_arrivals<R: Rng + ?Sized>(
    count: u32,
    start: f64,
    length: f64,
    rng: &mut R,
    out: &mut Vec<f64>,
) {
    if count == 0 {
        return;
    }
    let end = start + length;
    let from = out.len();
    out.extend((0..count).map(|_| {
        let t = start + length * rng.random::<f64>();
        if t < end {
            t
        } else {
            end.next_down()
        }
    }));
    out[from..].sort_unstable_by(f64::total_cmp);
}

/// Fills one period `[start, start + length)` backward from its counts: each
/// coordinate receives `counts[k]` sorted i.i.d. uniforms.
pub fn backward_simulate_period<R: Rng + ?Sized>(
    counts: &[u32],
    start: f64,
    length: f64,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    counts
        .iter()
        .map(|&n| {
            let mut v = Vec::with_capacity(n as usize);
            fill_arrivals(n, start, length, rng, &mut v);
            v
        })
        .collect()
}

fn simulate_path(model: &CalibratedModel, periods: u32, streams: &StreamFactory, id: u64) -> Path {
    let d = model.dimension();
    let length = model.horizon();
    let mut counts = vec![0u32; d];
    let mut arrivals = vec![Vec::new(); d];
    let mut period_counts = vec![Vec::with_capacity(periods as usize); d];
    for m in 0..periods {
        let mut rng = streams.stream(id, m, JOINT_SLOT);
        model.sample_joint_into(&mut rng, &mut counts);
        let start = m as f64 * length;
        for k in 0..d {
            period_counts[k].push(counts[k]);
            if counts[k] > 0 {
                let mut rng = streams.stream(id, m, coordinate_slot(k));
                fill_arrivals(counts[k], start, length, &mut rng, &mut arrivals[k]);
            }
        }
    }
    Path {
        arrivals,
        period_counts,
    }
}

fn run_in_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// Backward simulation with forward continuation over `config.periods`.
pub fn simulate(config: &SimulationConfig) -> Result<PathSet> {
    config.validate()?;
    let streams = StreamFactory::new(config.seed);
    let model = &config.model;
    let periods = config.periods;
    let paths = run_in_pool(config.threads, || {
        (0..config.paths as u64)
            .into_par_iter()
            .map(|id| simulate_path(model, periods, &streams, id))
            .collect::<Vec<_>>()
    })?;
    Ok(PathSet::new(paths, model.dimension(), periods, model.horizon()))
}

/// Extremal dependence used by [`forward_comonotone`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrechetMode {
    /// `mu_1 dT_1 = mu_2 dT_2`.
    Max,
    /// `exp(-mu_1 dT_1) + exp(-mu_2 dT_2) = 1`.
    Min,
}

/// Forward simulation of a bivariate Poisson pair on `[0, horizon]` with
/// inter-arrival times coupled at a Fréchet–Hoeffding bound.
///
/// In `Max` mode both coordinates share one sequence of standard exponential
/// partial sums `S_m`, with `T_m = S_m / lambda`; hence
/// `N1(t) = N2(kappa t)` with `kappa = lambda_1 / lambda_2`.
pub fn forward_comonotone<R: Rng + ?Sized>(
    lambda1: f64,
    lambda2: f64,
    horizon: f64,
    rng: &mut R,
    mode: FrechetMode,
) -> Result<Path> {
    for l in [lambda1, lambda2, horizon] {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "intensities and horizon must be positive, got {l}"
            )));
        }
    }
    let mut first = Vec::new();
    let mut second = Vec::new();
    match mode {
        FrechetMode::Max => {
            let mut s = 0.0;
            loop {
                s += standard_exponential(rng);
                let (t1, t2) = (s / lambda1, s / lambda2);
                if t1 > horizon && t2 > horizon {
                    break;
                }
                if t1 <= horizon {
                    first.push(t1);
                }
                if t2 <= horizon {
                    second.push(t2);
                }
            }
        }
        FrechetMode::Min => {
            let (mut t1, mut t2) = (0.0, 0.0);
            loop {
                // dT1 = -ln(u)/mu1 and dT2 = -ln(1-u)/mu2 satisfy the antithetic relation
                let u = open_unit(rng);
                t1 += -u.ln() / lambda1;
                t2 += -(-u).ln_1p() / lambda2;
                if t1 > horizon && t2 > horizon {
                    break;
                }
                if t1 <= horizon {
                    first.push(t1);
                }
                if t2 <= horizon {
                    second.push(t2);
                }
            }
        }
    }
    let counts = vec![vec![first.len() as u32], vec![second.len() as u32]];
    Ok(Path::new(vec![first, second], counts))
}

/// Checks `N1(t) = N2(kappa t)` on a `Max`-mode path: the `m`-th arrivals
/// satisfy `kappa T1_m = T2_m` (to rounding) wherever both exist, and the
/// counting identity holds at `checks` interior times where both sides are
/// observed.
pub fn frechet_identity_holds(path: &Path, lambda1: f64, lambda2: f64, horizon: f64, checks: usize) -> bool {
    let kappa = lambda1 / lambda2;
    let (a, b) = (path.arrivals(0), path.arrivals(1));
    let paired = a
        .iter()
        .zip(b)
        .all(|(t1, t2)| (kappa * t1 - t2).abs() <= 1e-12 * t2.max(1.0));
    // t ranges over (0, T min(1, 1/kappa)] so both t and kappa t stay within T
    let reach = horizon * (1.0 / kappa).min(1.0);
    paired
        && (1..=checks).all(|s| {
            let t = reach * (s as f64 - 0.5) / checks as f64;
            path.count_at(0, t) == path.count_at(1, kappa * t)
        })
}

fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

fn standard_exponential<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    -open_unit(rng).ln()
}

/// Many independent [`forward_comonotone`] paths, one stream per path.
pub fn simulate_forward_comonotone(
    lambda1: f64,
    lambda2: f64,
    horizon: f64,
    paths: usize,
    seed: u64,
    mode: FrechetMode,
) -> Result<PathSet> {
    let streams = StreamFactory::new(seed);
    let out = (0..paths as u64)
        .into_par_iter()
        .map(|id| {
            let mut rng = streams.stream(id, 0, JOINT_SLOT);
            forward_comonotone(lambda1, lambda2, horizon, &mut rng, mode)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PathSet::new(out, 2, 1, horizon))
}

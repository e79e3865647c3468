//! Subcommands behind the `tomo` binary: simulate a stack, solve a stack,
//! Monte Carlo detection curves and solver benchmarks.
//!
//! Every command writes its output plus `<output>.manifest.json`. Work is
//! spread over a rayon pool of `workers` threads; each pixel or realization
//! draws from its own keyed stream, so outputs do not depend on `workers`.

pub mod bench;
pub mod manifest;
pub mod stack;

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{AcquisitionGeometry, ParameterGrid, SteeringMatrix};
use crate::rng::{self, domain};
use crate::simulate::{self, DetectionResult, MonteCarloConfig, Scenario};
use crate::slimmer::{self, Pipeline, PipelineConfig, PixelOutcome, PixelRecord};

pub use bench::{BenchConfig, BenchReport};
pub use manifest::RunManifest;
pub use stack::{Stack, StackHeader};

/// Flags shared by all subcommands.
#[derive(Debug, Clone, Default)]
pub struct GlobalOptions {
    /// Overrides the seed in the command's configuration.
    pub seed: Option<u64>,
    /// Worker threads; `None` uses all available cores.
    pub workers: Option<usize>,
    /// Command configuration file (pipeline, Monte Carlo or bench config).
    pub config: Option<PathBuf>,
}

impl GlobalOptions {
    fn worker_count(&self) -> usize {
        self.workers.unwrap_or_else(rayon::current_num_threads)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let workers = self.worker_count();
        if workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
    }
}

/// Reads a JSON file; syntax and schema errors name the file, line and column.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn config_value<T: Serialize>(config: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(config)?)
}

/// Synthesizes `scenario.realizations` pixels into a stack at `out`.
///
/// Pixel `i` uses noise stream `(seed, NOISE, i)`.
pub fn cmd_simulate(scenario_path: &Path, out: &Path, opts: &GlobalOptions) -> Result<Stack> {
    let mut scenario: Scenario = load_json(scenario_path)?;
    scenario.validate()?;
    if let Some(seed) = opts.seed {
        scenario.seed = seed;
    }
    let manifest = RunManifest::start("simulate", scenario.seed, opts.worker_count(), config_value(&scenario)?, &[scenario_path])?;
    let pixels = opts.pool()?.install(|| {
        (0..scenario.realizations as u64)
            .into_par_iter()
            .map(|i| simulate::synthesize_indexed(&scenario, i))
            .collect::<Result<Vec<_>>>()
    })?;
    let stack = Stack::new(pixels, scenario.geometry.len(), Some(scenario.geometry.clone()))?;
    stack.write(out)?;
    manifest.finish(out)?;
    Ok(stack)
}

#[derive(Debug, Clone)]
pub struct SolveArgs {
    pub stack: PathBuf,
    pub geometry: PathBuf,
    pub grid: PathBuf,
    pub out: PathBuf,
    /// Optional point-cloud CSV next to the JSON-lines output.
    pub csv: Option<PathBuf>,
}

/// Runs the pipeline on every pixel of a stack.
///
/// The pipeline configuration comes from `--config` (defaults otherwise).
/// Pixel `i` solves with stream `(seed, PIXEL_SOLVER, i)`. A pixel whose
/// solve fails is recorded with `"status": "failed"` and the run continues.
pub fn cmd_solve(args: &SolveArgs, opts: &GlobalOptions) -> Result<Vec<PixelRecord>> {
    let mut config: PipelineConfig = match &opts.config {
        Some(path) => load_json(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = opts.seed {
        config.solver.seed = seed;
    }
    config.validate()?;
    let geometry: AcquisitionGeometry = load_json(&args.geometry)?;
    let grid: ParameterGrid = load_json(&args.grid)?;
    let stack = Stack::read(&args.stack)?;
    if stack.header.n != geometry.len() {
        return Err(Error::Consistency(format!(
            "stack has {} samples per pixel but the geometry has {} acquisitions",
            stack.header.n,
            geometry.len()
        )));
    }

    let mut inputs = vec![args.stack.as_path(), args.geometry.as_path(), args.grid.as_path()];
    if let Some(c) = &opts.config {
        inputs.push(c);
    }
    let seed = config.solver.seed;
    let manifest = RunManifest::start("solve", seed, opts.worker_count(), config_value(&config)?, &inputs)?;

    let records = if stack.pixels.is_empty() {
        Vec::new()
    } else {
        let steering = SteeringMatrix::build(&geometry, &grid)?;
        let pipeline = Pipeline::new(&steering, config)?;
        opts.pool()?.install(|| {
            stack
                .pixels
                .par_iter()
                .enumerate()
                .map(|(i, g)| {
                    let pixel_id = i as u64;
                    let mut r = rng::stream(seed, domain::PIXEL_SOLVER, pixel_id);
                    let outcome = match pipeline.run(g, &mut r) {
                        Ok(est) => PixelOutcome::Ok(est),
                        Err(e) => {
                            log::warn!("pixel {pixel_id}: {e}");
                            PixelOutcome::Failed { error: e.to_string() }
                        }
                    };
                    PixelRecord { pixel_id, outcome }
                })
                .collect::<Vec<_>>()
        })
    };

    slimmer::write_jsonl(BufWriter::new(fs::File::create(&args.out)?), &records)?;
    if let Some(csv) = &args.csv {
        slimmer::write_point_csv(BufWriter::new(fs::File::create(csv)?), &records)?;
        manifest.clone().finish(csv)?;
    }
    manifest.finish(&args.out)?;
    Ok(records)
}

/// Detection-rate curves from the Monte Carlo config given by `--config`.
pub fn cmd_montecarlo(out: &Path, opts: &GlobalOptions) -> Result<Vec<DetectionResult>> {
    let path = opts.config.as_deref().ok_or_else(|| Error::Config("montecarlo needs --config".into()))?;
    let mut config: MonteCarloConfig = load_json(path)?;
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    let manifest = RunManifest::start("montecarlo", config.seed, opts.worker_count(), config_value(&config)?, &[path])?;
    let results = opts.pool()?.install(|| simulate::monte_carlo_detection(&config))?;
    simulate::write_detection_csv(BufWriter::new(fs::File::create(out)?), &results)?;
    manifest.finish(out)?;
    Ok(results)
}

/// Solver timing report from the bench config given by `--config` (defaults otherwise).
///
/// Repetitions run one after another so timings are not disturbed by each other.
pub fn cmd_bench(out: &Path, opts: &GlobalOptions) -> Result<BenchReport> {
    let mut config: BenchConfig = match &opts.config {
        Some(path) => load_json(path)?,
        None => BenchConfig::default(),
    };
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    let inputs: Vec<&Path> = opts.config.as_deref().into_iter().collect();
    let manifest = RunManifest::start("bench", config.seed, 1, config_value(&config)?, &inputs)?;
    let report = bench::run_bench(&config)?;
    fs::write(out, serde_json::to_string_pretty(&report)? + "\n")?;
    manifest.finish(out)?;
    Ok(report)
}

//! Wall-clock and iteration-count measurements of the BPDN solvers.

use std::time::Instant;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SteeringMatrix;
use crate::prox::Objective;
use crate::rng::{self, domain};
use crate::simulate::{self, Scatterer, Scenario};
use crate::slimmer::Backend;
use crate::solver::{self, SolveStatus, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    pub sizes_n: Vec<usize>,
    pub sizes_l: Vec<usize>,
    pub solvers: Vec<Backend>,
    pub repetitions: usize,
    pub snr_db: f64,
    pub seed: u64,
    pub solver: SolverConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sizes_n: vec![20, 50, 100],
            sizes_l: vec![100, 1000, 10_000],
            solvers: vec![Backend::Rbpg, Backend::Ista, Backend::Fista],
            repetitions: 5,
            snr_db: 10.0,
            seed: 0,
            solver: SolverConfig { tol: 1e-8, ..SolverConfig::default() },
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.sizes_n.iter().any(|&n| n < 2) || self.sizes_l.iter().any(|&l| l < 2) {
            return Err(Error::Config("instance sizes need N >= 2 and L >= 2".into()));
        }
        if self.solvers.contains(&Backend::SvdWiener) {
            return Err(Error::Config("svd_wiener is not an iterative solver".into()));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::Config("snr_db must be finite".into()));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchEntry {
    pub solver: Backend,
    pub n: usize,
    pub l: usize,
    pub repetitions: usize,
    pub median_wall_s: f64,
    pub median_iterations: f64,
    pub median_per_iteration_s: f64,
    pub converged: usize,
}

/// Least-squares slope of `ln y` against `ln L` for one solver and `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub solver: Backend,
    pub n: usize,
    pub wall_slope: f64,
    pub iterations_slope: f64,
    pub per_iteration_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub rng: String,
    pub entries: Vec<BenchEntry>,
    pub scaling: Vec<ScalingFit>,
}

impl BenchReport {
    pub fn entry(&self, solver: Backend, n: usize, l: usize) -> Option<&BenchEntry> {
        self.entries.iter().find(|e| e.solver == solver && e.n == n && e.l == l)
    }

    pub fn fit(&self, solver: Backend, n: usize) -> Option<&ScalingFit> {
        self.scaling.iter().find(|f| f.solver == solver && f.n == n)
    }
}

pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    let mut entries = Vec::new();
    for &n in &config.sizes_n {
        let geometry = simulate::random_geometry(config.seed, n)?;
        let rho = geometry.rayleigh_resolution();
        let truth = vec![Scatterer::at(-0.6 * rho), Scatterer { phase: 1.0, ..Scatterer::at(0.6 * rho) }];
        let scenario = Scenario::new(geometry.clone(), truth, vec![config.snr_db; 2])?;
        let clean = scenario.clean_signal()?;
        for &l in &config.sizes_l {
            let steering = SteeringMatrix::build(&geometry, &simulate::elevation_grid(&geometry, l)?)?;
            let a = steering.matrix();
            let measurements: Vec<DVector<Complex64>> = (0..config.repetitions)
                .map(|rep| {
                    let index = ((n as u64) << 40) | ((l as u64) << 8) | rep as u64;
                    let mut r = rng::stream(config.seed, domain::BENCH, index);
                    &clean + simulate::complex_noise(n, scenario.noise_power(), &mut r)
                })
                .collect();
            for &method in &config.solvers {
                let mut walls = Vec::new();
                let mut iters = Vec::new();
                let mut per_iter = Vec::new();
                let mut converged = 0;
                for (rep, g) in measurements.iter().enumerate() {
                    let cfg = SolverConfig { seed: rep as u64, ..config.solver.clone() };
                    let obj = Objective::new(a, g, cfg.resolve_lambda(a, g))?;
                    let t = Instant::now();
                    let sol = match method {
                        Backend::Rbpg => solver::rbpg_solve(&obj, &cfg)?,
                        Backend::Ista => solver::ista_solve(&obj, &cfg)?,
                        Backend::Fista => solver::fista_solve(&obj, &cfg)?,
                        Backend::SvdWiener => unreachable!("rejected by validate"),
                    };
                    let wall = t.elapsed().as_secs_f64();
                    if sol.status == SolveStatus::Converged {
                        converged += 1;
                    }
                    walls.push(wall);
                    iters.push(sol.iterations_used as f64);
                    per_iter.push(wall / sol.iterations_used.max(1) as f64);
                }
                entries.push(BenchEntry {
                    solver: method,
                    n,
                    l,
                    repetitions: config.repetitions,
                    median_wall_s: median(&mut walls),
                    median_iterations: median(&mut iters),
                    median_per_iteration_s: median(&mut per_iter),
                    converged,
                });
            }
        }
    }
    let scaling = scaling_fits(config, &entries);
    Ok(BenchReport { config: config.clone(), rng: rng::GENERATOR.to_string(), entries, scaling })
}

fn scaling_fits(config: &BenchConfig, entries: &[BenchEntry]) -> Vec<ScalingFit> {
    let mut fits = Vec::new();
    if config.sizes_l.len() < 2 {
        return fits;
    }
    for &method in &config.solvers {
        for &n in &config.sizes_n {
            let rows: Vec<&BenchEntry> = entries.iter().filter(|e| e.solver == method && e.n == n).collect();
            let x: Vec<f64> = rows.iter().map(|e| (e.l as f64).ln()).collect();
            let slope = |f: fn(&BenchEntry) -> f64| log_log_slope(&x, &rows.iter().map(|e| f(e)).collect::<Vec<_>>());
            fits.push(ScalingFit {
                solver: method,
                n,
                wall_slope: slope(|e| e.median_wall_s),
                iterations_slope: slope(|e| e.median_iterations),
                per_iteration_slope: slope(|e| e.median_per_iteration_s),
            });
        }
    }
    fits
}

/// Slope of the least-squares line through `(x_i, ln y_i)`.
pub fn log_log_slope(ln_x: &[f64], y: &[f64]) -> f64 {
    let ln_y: Vec<f64> = y.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
    let m = ln_x.len() as f64;
    let mx = ln_x.iter().sum::<f64>() / m;
    let my = ln_y.iter().sum::<f64>() / m;
    let sxy: f64 = ln_x.iter().zip(&ln_y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = ln_x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

//! Sparse spectral estimation pipeline: L1 solve, model-order selection and
//! debiased parameter estimation.
//!
//! The L1 solution only serves to nominate candidate grid points. The model
//! order is then chosen by BIC over least-squares fits on the strongest
//! candidates, and the amplitudes are re-estimated by least squares on the
//! selected support, which removes the shrinkage bias of the L1 penalty.

use std::io::Write;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, LeastSquaresError};
use crate::model::{ParameterGrid, SteeringMatrix};
use crate::prox::Objective;
use crate::solver::{self, BlockPartition, SolveStatus, SolverConfig, WienerEstimator};

/// Magnitudes below this fraction of the peak are treated as zero.
pub const DETECTION_FLOOR: f64 = 1e-8;

/// Residual floor relative to `‖g‖²`, keeps the BIC finite for exact fits.
const RSS_FLOOR: f64 = 1e-20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScattererEstimates {
    pub model_order: usize,
    pub elevations: Vec<f64>,
    pub motion_params: Vec<Vec<f64>>,
    pub amplitudes: Vec<Complex64>,
    /// BIC value for each candidate order `0..=K_max'`.
    pub selection_scores: Vec<f64>,
}

impl ScattererEstimates {
    pub fn empty(selection_scores: Vec<f64>) -> Self {
        ScattererEstimates {
            model_order: 0,
            elevations: Vec::new(),
            motion_params: Vec::new(),
            amplitudes: Vec::new(),
            selection_scores,
        }
    }
}

/// Which sparse (or linear) estimator nominates the candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Rbpg,
    Fista,
    Ista,
    SvdWiener,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Rbpg => "rbpg",
            Backend::Fista => "fista",
            Backend::Ista => "ista",
            Backend::SvdWiener => "svd_wiener",
        }
    }
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rbpg" => Ok(Backend::Rbpg),
            "fista" => Ok(Backend::Fista),
            "ista" => Ok(Backend::Ista),
            "svd_wiener" | "svd" => Ok(Backend::SvdWiener),
            other => Err(Error::Config(format!("unknown backend {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub backend: Backend,
    pub solver: SolverConfig,
    pub k_max: usize,
    /// Wiener regularization μ for the `svd_wiener` backend.
    pub noise_power: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { backend: Backend::Rbpg, solver: SolverConfig::default(), k_max: 2, noise_power: 0.1 }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_max == 0 {
            return Err(Error::Config("k_max must be at least 1".into()));
        }
        if !(self.noise_power.is_finite() && self.noise_power >= 0.0) {
            return Err(Error::Config("noise_power must be finite and nonnegative".into()));
        }
        self.solver.validate()
    }
}

/// Up to `k_max` flat indices of local maxima of `|x̂|` along elevation,
/// strongest first.
///
/// Motion axes are collapsed by taking, for every elevation sample, the
/// strongest motion combination; that combination's flat index is returned.
pub fn detect_support(x_hat: &DVector<Complex64>, grid: &ParameterGrid, k_max: usize) -> Result<Vec<usize>> {
    if k_max == 0 {
        return Err(Error::Config("k_max must be at least 1".into()));
    }
    if x_hat.len() != grid.flat_size() {
        return Err(Error::Dimension { expected: grid.flat_size(), found: x_hat.len() });
    }
    let ls = grid.elevation().count;
    let mut profile: Vec<(f64, usize)> = (0..ls).map(|s| (-1.0, s)).collect();
    for (flat, z) in x_hat.iter().enumerate() {
        let s = flat % ls;
        let m = z.norm();
        if m > profile[s].0 {
            profile[s] = (m, flat);
        }
    }
    let peak = profile.iter().map(|p| p.0).fold(0.0, f64::max);
    if peak == 0.0 || !peak.is_finite() {
        return Ok(Vec::new());
    }
    let floor = DETECTION_FLOOR * peak;
    let mut maxima: Vec<(f64, usize)> = (0..ls)
        .filter(|&s| {
            let m = profile[s].0;
            // strict on the left so a flat top yields one peak
            let left_ok = s == 0 || m > profile[s - 1].0;
            let right_ok = s + 1 == ls || m >= profile[s + 1].0;
            m > floor && left_ok && right_ok
        })
        .map(|s| profile[s])
        .collect();
    maxima.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(maxima.into_iter().take(k_max).map(|(_, flat)| flat).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSelection {
    pub order: usize,
    pub support: Vec<usize>,
    /// BIC for orders `0..=support candidates considered`.
    pub scores: Vec<f64>,
}

/// Bayesian information criterion for `k` scatterers with `extra_params`
/// real parameters each beyond the complex amplitude and elevation.
pub fn bic(rss: f64, n: usize, k: usize, extra_params: usize) -> f64 {
    let obs = 2.0 * n as f64;
    obs * (rss / obs).ln() + ((3 + extra_params) * k) as f64 * obs.ln()
}

/// Picks the model order minimizing BIC over least-squares fits on the top-K candidates.
///
/// Candidates that make the fit rank-deficient are dropped.
pub fn model_select(obj: &Objective<'_>, candidates: &[usize], k_max: usize, motion_axes: usize) -> Result<ModelSelection> {
    let a = obj.dictionary();
    let g = obj.measurement();
    let n = g.len();
    let floor = (RSS_FLOOR * g.norm_squared()).max(f64::MIN_POSITIVE);
    let mut pool: Vec<usize> = candidates.to_vec();
    let mut scores = vec![bic(g.norm_squared().max(floor), n, 0, motion_axes)];
    let mut k = 1;
    while k <= k_max.min(pool.len()) {
        match linalg::least_squares(a, &pool[..k], g) {
            Ok((_, rss)) => {
                scores.push(bic(rss.max(floor), n, k, motion_axes));
                k += 1;
            }
            Err(LeastSquaresError::RankDeficient(pos)) => {
                pool.remove(pos);
            }
        }
    }
    let order = scores
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap_or(0);
    Ok(ModelSelection { order, support: pool[..order].to_vec(), scores })
}

/// Least-squares amplitudes on the support, with parameters decoded from the grid.
/// Scatterers are reported in ascending elevation.
pub fn estimate_params(obj: &Objective<'_>, grid: &ParameterGrid, support: &[usize]) -> Result<ScattererEstimates> {
    if support.is_empty() {
        return Err(Error::Estimation("empty support".into()));
    }
    if let Some(&bad) = support.iter().find(|&&l| l >= grid.flat_size()) {
        return Err(Error::Estimation(format!("support index {bad} outside the grid")));
    }
    let (amps, _) = linalg::least_squares(obj.dictionary(), support, obj.measurement())
        .map_err(|_| Error::Estimation("support columns are linearly dependent".into()))?;
    let mut rows: Vec<(f64, Vec<f64>, Complex64)> = support
        .iter()
        .zip(amps.iter())
        .map(|(&l, &amp)| {
            let (s, p) = grid.parameters(l);
            (s, p, amp)
        })
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let model_order = rows.len();
    let (elevations, rest): (Vec<_>, Vec<_>) = rows.into_iter().map(|(s, p, a)| (s, (p, a))).unzip();
    let (motion_params, amplitudes) = rest.into_iter().unzip();
    Ok(ScattererEstimates { model_order, elevations, motion_params, amplitudes, selection_scores: Vec::new() })
}

/// Shared per-dictionary state for running the pipeline over many pixels.
#[derive(Debug, Clone)]
pub struct Pipeline<'a> {
    steering: &'a SteeringMatrix,
    config: PipelineConfig,
    partition: Option<BlockPartition>,
    wiener: Option<WienerEstimator>,
}

impl<'a> Pipeline<'a> {
    pub fn new(steering: &'a SteeringMatrix, config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let (partition, wiener) = match config.backend {
            Backend::Rbpg => (Some(BlockPartition::new(steering.matrix(), config.solver.num_blocks)?), None),
            Backend::SvdWiener => (None, Some(WienerEstimator::new(steering.matrix())?)),
            Backend::Fista | Backend::Ista => (None, None),
        };
        Ok(Pipeline { steering, config, partition, wiener })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn steering(&self) -> &SteeringMatrix {
        self.steering
    }

    /// The backend's reflectivity profile for one measurement.
    pub fn profile<R: Rng + ?Sized>(&self, measurement: &DVector<Complex64>, rng: &mut R) -> Result<DVector<Complex64>> {
        let a = self.steering.matrix();
        if measurement.len() != a.nrows() {
            return Err(Error::Dimension { expected: a.nrows(), found: measurement.len() });
        }
        let solver_cfg = &self.config.solver;
        let lambda = solver_cfg.resolve_lambda(a, measurement);
        let obj = Objective::new(a, measurement, lambda)?;
        let solution = match self.config.backend {
            Backend::SvdWiener => {
                return self.wiener.as_ref().expect("built for this backend").apply(measurement, self.config.noise_power);
            }
            Backend::Rbpg => solver::rbpg_solve_partitioned(&obj, solver_cfg, self.partition.as_ref().expect("built for this backend"), rng)?,
            Backend::Fista => solver::fista_solve(&obj, solver_cfg)?,
            Backend::Ista => solver::ista_solve(&obj, solver_cfg)?,
        };
        match solution.status {
            SolveStatus::Converged | SolveStatus::MaxIters => Ok(solution.x_hat),
            SolveStatus::LineSearchFailure => Err(Error::LineSearchFailure { shrinks: crate::prox::MAX_SHRINKS }),
            SolveStatus::NumericalFailure => Err(Error::Numerical("objective became non-finite".into())),
        }
    }

    /// Full pipeline for one measurement: profile, candidates, order, estimates.
    pub fn run<R: Rng + ?Sized>(&self, measurement: &DVector<Complex64>, rng: &mut R) -> Result<ScattererEstimates> {
        let x_hat = self.profile(measurement, rng)?;
        self.estimate_from_profile(measurement, &x_hat)
    }

    pub fn estimate_from_profile(&self, measurement: &DVector<Complex64>, x_hat: &DVector<Complex64>) -> Result<ScattererEstimates> {
        let grid = self.steering.grid();
        let obj = Objective::new(self.steering.matrix(), measurement, 0.0)?;
        let candidates = detect_support(x_hat, grid, self.config.k_max)?;
        if candidates.is_empty() {
            return Ok(ScattererEstimates::empty(vec![bic(measurement.norm_squared(), measurement.len(), 0, 0)]));
        }
        let selection = model_select(&obj, &candidates, self.config.k_max, grid.motion().len())?;
        if selection.order == 0 {
            return Ok(ScattererEstimates::empty(selection.scores));
        }
        let mut est = estimate_params(&obj, grid, &selection.support)?;
        est.selection_scores = selection.scores;
        Ok(est)
    }
}

/// One-shot pipeline; the solver stream is seeded from `config.solver.seed`.
pub fn slimmer_pipeline(steering: &SteeringMatrix, measurement: &DVector<Complex64>, config: &PipelineConfig) -> Result<ScattererEstimates> {
    let pipeline = Pipeline::new(steering, config.clone())?;
    let mut rng = crate::rng::stream(config.solver.seed, crate::rng::domain::SOLVER, 0);
    pipeline.run(measurement, &mut rng)
}

/// One line of the per-pixel JSON-lines output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelRecord {
    pub pixel_id: u64,
    #[serde(flatten)]
    pub outcome: PixelOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum PixelOutcome {
    Ok(ScattererEstimates),
    Failed { error: String },
}

pub fn write_jsonl<W: Write>(mut out: W, records: &[PixelRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub const POINT_CSV_HEADER: &str = "pixel_id,k,elevation_m,p1,p2,amp_re,amp_im";

/// Point-cloud CSV, one row per detected scatterer. Missing motion parameters are empty fields.
pub fn write_point_csv<W: Write>(mut out: W, records: &[PixelRecord]) -> Result<()> {
    writeln!(out, "{POINT_CSV_HEADER}")?;
    for r in records {
        let PixelOutcome::Ok(est) = &r.outcome else { continue };
        for k in 0..est.model_order {
            let p = &est.motion_params[k];
            let field = |i: usize| p.get(i).map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.pixel_id,
                k,
                est.elevations[k],
                field(0),
                field(1),
                est.amplitudes[k].re,
                est.amplitudes[k].im
            )?;
        }
    }
    Ok(())
}

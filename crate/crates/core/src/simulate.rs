//! Synthetic pixels and Monte Carlo detection-rate experiments.

use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, AcquisitionGeometry, BaseFunction, GridAxis, ParameterGrid, SteeringMatrix};
use crate::rng::{self, domain};
use crate::slimmer::{Backend, Pipeline, PipelineConfig, ScattererEstimates};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scatterer {
    pub elevation: f64,
    #[serde(default)]
    pub motion: Vec<f64>,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

impl Scatterer {
    pub fn at(elevation: f64) -> Self {
        Scatterer { elevation, motion: Vec::new(), amplitude: 1.0, phase: 0.0 }
    }

    pub fn complex_amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }
}

/// Ground truth for one simulated pixel type.
///
/// Noise variance `σ² = E|ε_n|²` comes from `noise_variance` when given,
/// otherwise from the first scatterer via `SNR_dB = 10 log10(a²/σ²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub geometry: AcquisitionGeometry,
    #[serde(default)]
    pub motion_bases: Vec<BaseFunction>,
    #[serde(default)]
    pub scatterers: Vec<Scatterer>,
    #[serde(default)]
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub noise_variance: Option<f64>,
    #[serde(default = "one")]
    pub realizations: usize,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}

impl Scenario {
    pub fn new(geometry: AcquisitionGeometry, scatterers: Vec<Scatterer>, snr_db: Vec<f64>) -> Result<Self> {
        let s = Scenario {
            geometry,
            motion_bases: Vec::new(),
            scatterers,
            snr_db,
            noise_variance: None,
            realizations: 1,
            seed: 0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let s: Scenario = serde_json::from_str(&text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::Config("realizations must be at least 1".into()));
        }
        for sc in &self.scatterers {
            if sc.motion.len() != self.motion_bases.len() {
                return Err(Error::Config(format!(
                    "scatterer has {} motion parameters but {} base functions are configured",
                    sc.motion.len(),
                    self.motion_bases.len()
                )));
            }
            if !(sc.amplitude.is_finite() && sc.amplitude >= 0.0) || !sc.elevation.is_finite() || !sc.phase.is_finite() {
                return Err(Error::Config("scatterer parameters must be finite with nonnegative amplitude".into()));
            }
        }
        match self.noise_variance {
            Some(v) if !(v.is_finite() && v >= 0.0) => {
                return Err(Error::Config(format!("noise_variance must be finite and nonnegative, got {v}")));
            }
            Some(_) => {
                if !self.snr_db.is_empty() && self.snr_db.len() != self.scatterers.len() {
                    return Err(Error::Config("one SNR per scatterer is required".into()));
                }
            }
            None => {
                if self.snr_db.len() != self.scatterers.len() {
                    return Err(Error::Config("one SNR per scatterer is required".into()));
                }
                if self.snr_db.iter().any(|s| !s.is_finite()) {
                    return Err(Error::Config("SNR values must be finite".into()));
                }
                let sigma2 = self.noise_power();
                for (sc, &snr) in self.scatterers.iter().zip(&self.snr_db).skip(1) {
                    let implied = 10.0 * (sc.amplitude * sc.amplitude / sigma2).log10();
                    if (implied - snr).abs() > 1e-6 {
                        return Err(Error::Config(format!(
                            "scatterer amplitude {} implies {implied:.3} dB, not the stated {snr} dB",
                            sc.amplitude
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Per-sample complex noise variance `σ²`.
    pub fn noise_power(&self) -> f64 {
        if let Some(v) = self.noise_variance {
            return v;
        }
        match (self.scatterers.first(), self.snr_db.first()) {
            (Some(sc), Some(&snr)) => sc.amplitude * sc.amplitude * 10f64.powf(-snr / 10.0),
            _ => 0.0,
        }
    }

    /// Noise-free measurement `Σ_k a_k e^{jφ_k} steering(s_k, p_k)`.
    pub fn clean_signal(&self) -> Result<DVector<Complex64>> {
        let mut g = DVector::<Complex64>::zeros(self.geometry.len());
        for sc in &self.scatterers {
            let v = model::steering_vector(&self.geometry, &self.motion_bases, sc.elevation, &sc.motion)?;
            g += v * sc.complex_amplitude();
        }
        Ok(g)
    }
}

/// Random stack of `n` acquisitions: baselines uniform in ±135 m, times
/// uniform in ±1.5 yr, X-band (λ = 3.1 cm) at 700 km slant range.
pub fn random_geometry(seed: u64, n: usize) -> Result<AcquisitionGeometry> {
    let mut r = rng::stream(seed, domain::GEOMETRY, n as u64);
    let baselines = (0..n).map(|_| r.random_range(-135.0..135.0)).collect();
    let times = (0..n).map(|_| r.random_range(-1.5..1.5)).collect();
    AcquisitionGeometry::new(baselines, times, 0.031, 7e5)
}

/// `count` elevation samples spaced `ρ_s / 20` with sample `count / 2` at zero.
pub fn elevation_grid(geometry: &AcquisitionGeometry, count: usize) -> Result<ParameterGrid> {
    let step = geometry.rayleigh_resolution() / 20.0;
    ParameterGrid::elevation_only(GridAxis::new(-step * (count / 2) as f64, step, count)?)
}

/// Circular complex Gaussian noise with `E|ε|² = variance`.
pub fn complex_noise<R: Rng + ?Sized>(len: usize, variance: f64, rng: &mut R) -> DVector<Complex64> {
    let scale = (variance / 2.0).sqrt();
    DVector::from_fn(len, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}

/// One noisy measurement of the scenario.
pub fn synthesize_pixel<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Result<DVector<Complex64>> {
    let clean = scenario.clean_signal()?;
    let sigma2 = scenario.noise_power();
    if sigma2 == 0.0 {
        return Ok(clean);
    }
    Ok(clean + complex_noise(scenario.geometry.len(), sigma2, rng))
}

/// Measurement for pixel `pixel_id` drawn from its own noise stream.
pub fn synthesize_indexed(scenario: &Scenario, pixel_id: u64) -> Result<DVector<Complex64>> {
    synthesize_pixel(scenario, &mut rng::stream(scenario.seed, domain::NOISE, pixel_id))
}

/// True when the estimated order equals the true count and every true
/// scatterer is matched to a distinct estimate within `tol` in elevation.
/// Matching is greedy on the closest remaining pair.
pub fn detection_criterion(estimates: &ScattererEstimates, truth: &[Scatterer], tol: f64) -> bool {
    if estimates.model_order != truth.len() || estimates.elevations.len() != truth.len() {
        return false;
    }
    let mut pairs: Vec<(f64, usize, usize)> = truth
        .iter()
        .enumerate()
        .flat_map(|(i, t)| estimates.elevations.iter().enumerate().map(move |(j, &e)| ((t.elevation - e).abs(), i, j)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut used_truth = vec![false; truth.len()];
    let mut used_est = vec![false; truth.len()];
    let mut matched = 0;
    for (d, i, j) in pairs {
        if used_truth[i] || used_est[j] {
            continue;
        }
        if d > tol {
            break;
        }
        used_truth[i] = true;
        used_est[j] = true;
        matched += 1;
    }
    matched == truth.len()
}

/// Wilson score interval for `successes` out of `n` at 95% confidence.
pub fn wilson_interval(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = Z95 * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub kappa: f64,
    pub snr_db: f64,
    pub method: Backend,
    pub p_d: f64,
    pub realizations: usize,
    pub wilson_ci: (f64, f64),
    /// Realizations whose pipeline errored; counted as missed detections.
    pub failures: usize,
}

/// Experiment grid for detection-rate curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub geometry: AcquisitionGeometry,
    pub grid: ParameterGrid,
    pub kappas: Vec<f64>,
    pub snrs_db: Vec<f64>,
    pub methods: Vec<Backend>,
    pub realizations: usize,
    #[serde(default)]
    pub seed: u64,
    /// Phase of the second scatterer relative to the first.
    #[serde(default)]
    pub delta_phi: f64,
    /// Elevation of the midpoint between the two scatterers.
    #[serde(default)]
    pub center: f64,
    /// Elevation match tolerance; defaults to a quarter of the Rayleigh resolution.
    #[serde(default)]
    pub match_tol: Option<f64>,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    /// Derive the Wiener regularization of each cell from its noise level
    /// (see [`wiener_regularization`]) instead of using `pipeline.noise_power`.
    #[serde(default = "yes")]
    pub wiener_from_snr: bool,
}

fn yes() -> bool {
    true
}

impl MonteCarloConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::Config("realizations must be at least 1".into()));
        }
        if self.kappas.iter().chain(&self.snrs_db).any(|v| !v.is_finite()) || self.kappas.iter().any(|&k| k < 0.0) {
            return Err(Error::Config("kappas must be finite and nonnegative, SNRs finite".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        if let Some(t) = self.match_tol {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Domain(format!("match tolerance must be positive, got {t}")));
            }
        }
        if !self.grid.motion().is_empty() {
            return Err(Error::Config("detection experiments use elevation-only grids".into()));
        }
        self.pipeline.validate()
    }

    pub fn rayleigh_resolution(&self) -> f64 {
        self.geometry.rayleigh_resolution()
    }

    /// Two unit-amplitude scatterers `κ ρ_s` apart around `center`, the second with phase `Δφ`.
    pub fn double_scenario(&self, kappa: f64, snr_db: f64) -> Result<Scenario> {
        let half = 0.5 * kappa * self.rayleigh_resolution();
        let first = Scatterer::at(self.center - half);
        let second = Scatterer { phase: self.delta_phi, ..Scatterer::at(self.center + half) };
        Scenario::new(self.geometry.clone(), vec![first, second], vec![snr_db, snr_db])
    }
}

/// Noise-to-prior power ratio `μ = σ² / σ_γ²` for the Wiener estimator, with
/// the prior reflectivity power `σ_γ² = Σ_k a_k² / L` spread evenly over the grid.
pub fn wiener_regularization(scenario: &Scenario, grid_size: usize) -> f64 {
    let power: f64 = scenario.scatterers.iter().map(|s| s.amplitude * s.amplitude).sum();
    if power == 0.0 {
        return scenario.noise_power();
    }
    scenario.noise_power() * grid_size as f64 / power
}

/// Runs every `(κ, SNR, method)` cell; rows are ordered κ-major, then SNR, then method.
///
/// Noise for realization `r` of cell `(κ_i, SNR_j)` is shared across methods
/// so method comparisons are paired. Results do not depend on the thread count.
pub fn monte_carlo_detection(config: &MonteCarloConfig) -> Result<Vec<DetectionResult>> {
    config.validate()?;
    let steering = SteeringMatrix::build(&config.geometry, &config.grid)?;
    let tol = config.match_tol.unwrap_or(0.25 * config.rayleigh_resolution());
    let mut results = Vec::new();
    for (ki, &kappa) in config.kappas.iter().enumerate() {
        for (si, &snr) in config.snrs_db.iter().enumerate() {
            let scenario = config.double_scenario(kappa, snr)?;
            let clean = scenario.clean_signal()?;
            let sigma2 = scenario.noise_power();
            let cell = ((ki as u64) << 20) | si as u64;
            for &method in &config.methods {
                let mut pcfg = PipelineConfig { backend: method, ..config.pipeline.clone() };
                if method == Backend::SvdWiener && config.wiener_from_snr {
                    pcfg.noise_power = wiener_regularization(&scenario, config.grid.flat_size());
                }
                let pipeline = Pipeline::new(&steering, pcfg)?;
                let outcomes: Vec<Option<bool>> = (0..config.realizations)
                    .into_par_iter()
                    .map(|r| {
                        let index = (cell << 24) | r as u64;
                        let mut noise_rng = rng::stream(config.seed, domain::NOISE, index);
                        let g = &clean + complex_noise(clean.len(), sigma2, &mut noise_rng);
                        let mut solver_rng = rng::stream(config.seed, domain::SOLVER, index);
                        match pipeline.run(&g, &mut solver_rng) {
                            Ok(est) => Some(detection_criterion(&est, &scenario.scatterers, tol)),
                            Err(e) => {
                                log::warn!("kappa={kappa} snr={snr} {method} realization {r}: {e}");
                                None
                            }
                        }
                    })
                    .collect();
                let failures = outcomes.iter().filter(|o| o.is_none()).count();
                let hits = outcomes.iter().filter(|o| **o == Some(true)).count();
                let n = config.realizations;
                results.push(DetectionResult {
                    kappa,
                    snr_db: snr,
                    method,
                    p_d: hits as f64 / n as f64,
                    realizations: n,
                    wilson_ci: wilson_interval(hits, n),
                    failures,
                });
            }
        }
    }
    Ok(results)
}

pub const DETECTION_CSV_HEADER: &str = "kappa,snr_db,method,p_d,ci_low,ci_high,n";

pub fn write_detection_csv<W: Write>(mut out: W, results: &[DetectionResult]) -> Result<()> {
    writeln!(out, "{DETECTION_CSV_HEADER}")?;
    for r in results {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.kappa, r.snr_db, r.method, r.p_d, r.wilson_ci.0, r.wilson_ci.1, r.realizations
        )?;
    }
    Ok(())
}

//! Solvers for the complex L1-regularized least-squares problem.
//!
//! [`rbpg_solve`] is the randomized blockwise accelerated proximal gradient
//! method with backtracking. [`ista_solve`] and [`fista_solve`] are full-vector
//! references; FISTA run to a tight tolerance doubles as the optimum oracle.
//! [`svd_wiener_solve`] is the linear (non-sparse) estimator used for
//! comparison studies.

mod partition;
mod rbpg;
mod reference;
mod wiener;

use std::time::Duration;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use partition::BlockPartition;
pub use rbpg::{rbpg_solve, rbpg_solve_partitioned};
pub use reference::{fista_solve, gradient_map_norm, ista_solve};
pub use wiener::{svd_wiener_solve, WienerEstimator};

/// Iterations over which the relative objective change is measured by the
/// stopping rule. RBPG scales it by the number of blocks so that one window
/// covers the same expected work as ten full-vector iterations.
pub const STOP_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Regularization weight. When absent, `lambda_fraction · ‖Aᴴg‖_∞` is used.
    pub lambda_reg: Option<f64>,
    pub lambda_fraction: f64,
    /// Number of coordinate blocks J for RBPG.
    pub num_blocks: usize,
    pub max_iters: usize,
    /// Run exactly this many iterations, ignoring `tol` and `max_iters`.
    pub fixed_iters: Option<usize>,
    /// Relative objective change over the stopping window that counts as converged.
    pub tol: f64,
    /// Backtracking factor C_α in (0, 1).
    pub step_shrink: f64,
    /// Initial step is `step_scale / L` for the block (or global) Lipschitz constant L.
    pub step_scale: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda_reg: None,
            lambda_fraction: 0.05,
            num_blocks: 4,
            max_iters: 20_000,
            fixed_iters: None,
            tol: 1e-10,
            step_shrink: 0.5,
            step_scale: 1.0,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.lambda_reg {
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::Config(format!("lambda_reg must be finite and nonnegative, got {l}")));
            }
        }
        if !(self.lambda_fraction.is_finite() && self.lambda_fraction >= 0.0) {
            return Err(Error::Config("lambda_fraction must be finite and nonnegative".into()));
        }
        if self.num_blocks == 0 {
            return Err(Error::Config("num_blocks must be at least 1".into()));
        }
        if self.max_iters == 0 || self.fixed_iters == Some(0) {
            return Err(Error::Config("iteration limits must be positive".into()));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        crate::prox::check_shrink(self.step_shrink)?;
        if !(self.step_scale.is_finite() && self.step_scale > 0.0) {
            return Err(Error::Config(format!("step_scale must be positive, got {}", self.step_scale)));
        }
        Ok(())
    }

    /// The configured `lambda_reg`, or the scale-free default for this measurement.
    pub fn resolve_lambda(&self, dictionary: &DMatrix<Complex64>, measurement: &DVector<Complex64>) -> f64 {
        self.lambda_reg.unwrap_or_else(|| {
            let corr = dictionary.ad_mul(measurement).iter().map(|z| z.norm()).fold(0.0, f64::max);
            self.lambda_fraction * corr
        })
    }

    pub(crate) fn iteration_budget(&self) -> usize {
        self.fixed_iters.unwrap_or(self.max_iters)
    }

    /// Machine-readable description of every field and its default.
    pub fn schema() -> serde_json::Value {
        let d = SolverConfig::default();
        serde_json::json!({
            "type": "object",
            "additionalProperties": false,
            "properties": {
                "lambda_reg": {"type": ["number", "null"], "minimum": 0, "default": d.lambda_reg,
                    "description": "L1 weight; null selects lambda_fraction * max|A^H g|"},
                "lambda_fraction": {"type": "number", "minimum": 0, "default": d.lambda_fraction},
                "num_blocks": {"type": "integer", "minimum": 1, "default": d.num_blocks,
                    "description": "coordinate blocks J for RBPG, at most the number of unknowns"},
                "max_iters": {"type": "integer", "minimum": 1, "default": d.max_iters},
                "fixed_iters": {"type": ["integer", "null"], "minimum": 1, "default": d.fixed_iters,
                    "description": "when set, run exactly this many iterations"},
                "tol": {"type": "number", "exclusiveMinimum": 0, "default": d.tol,
                    "description": "relative objective change over the stopping window"},
                "step_shrink": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1, "default": d.step_shrink},
                "step_scale": {"type": "number", "exclusiveMinimum": 0, "default": d.step_scale,
                    "description": "initial step is step_scale / Lipschitz constant"},
                "seed": {"type": "integer", "minimum": 0, "default": d.seed},
                "theta_schedule": {"const": "2/(k+1)", "description": "fixed extrapolation schedule, not configurable"}
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    MaxIters,
    LineSearchFailure,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x_hat: DVector<Complex64>,
    /// Objective value at the start and after every iteration.
    pub objective_history: Vec<f64>,
    pub iterations_used: usize,
    pub status: SolveStatus,
    pub wall_time: Duration,
}

impl Solution {
    pub fn final_objective(&self) -> f64 {
        *self.objective_history.last().expect("history holds the initial value")
    }
}

/// Stopping bookkeeping shared by all iterative solvers.
pub(crate) struct StopRule {
    tol: f64,
    window: usize,
    budget: usize,
    fixed: bool,
}

impl StopRule {
    pub(crate) fn new(config: &SolverConfig, window: usize) -> Self {
        StopRule { tol: config.tol, window, budget: config.iteration_budget(), fixed: config.fixed_iters.is_some() }
    }

    pub(crate) fn budget(&self) -> usize {
        self.budget
    }

    pub(crate) fn window_converged(&self, history: &[f64]) -> bool {
        let k = history.len() - 1;
        if k < self.window {
            return false;
        }
        let prev = history[k - self.window];
        let cur = history[k];
        prev - cur <= self.tol * prev.abs()
    }

    /// Whether to stop early after the latest history entry.
    pub(crate) fn should_stop(&self, history: &[f64]) -> bool {
        !self.fixed && self.window_converged(history)
    }

    pub(crate) fn final_status(&self, history: &[f64]) -> SolveStatus {
        if self.window_converged(history) {
            SolveStatus::Converged
        } else {
            SolveStatus::MaxIters
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid_and_round_trips() {
        let d = SolverConfig::default();
        d.validate().unwrap();
        let text = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<SolverConfig>(&text).unwrap(), d);
        let partial: SolverConfig = serde_json::from_str(r#"{"num_blocks": 8, "seed": 3}"#).unwrap();
        assert_eq!(partial.num_blocks, 8);
        assert_eq!(partial.tol, d.tol);
        assert!(serde_json::from_str::<SolverConfig>(r#"{"blocks": 8}"#).is_err());
    }

    #[test]
    fn schema_lists_every_field_with_its_default() {
        let schema = SolverConfig::schema();
        let props = schema["properties"].as_object().unwrap();
        let value = serde_json::to_value(SolverConfig::default()).unwrap();
        for (key, v) in value.as_object().unwrap() {
            assert_eq!(&props[key]["default"], v, "{key}");
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            SolverConfig { step_shrink: 1.0, ..Default::default() },
            SolverConfig { step_shrink: 0.0, ..Default::default() },
            SolverConfig { num_blocks: 0, ..Default::default() },
            SolverConfig { tol: 0.0, ..Default::default() },
            SolverConfig { lambda_reg: Some(-1.0), ..Default::default() },
            SolverConfig { step_scale: f64::INFINITY, ..Default::default() },
            SolverConfig { fixed_iters: Some(0), ..Default::default() },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::Config(_))), "{c:?}");
        }
    }

    #[test]
    fn stop_rule_window() {
        let cfg = SolverConfig { tol: 1e-3, ..Default::default() };
        let rule = StopRule::new(&cfg, 2);
        assert!(!rule.should_stop(&[1.0, 0.5]));
        assert!(!rule.should_stop(&[1.0, 0.5, 0.4]));
        assert!(rule.should_stop(&[1.0, 0.5, 0.4, 0.49999]));
        assert!(rule.should_stop(&[0.0, 0.0, 0.0]));
        let fixed = StopRule::new(&SolverConfig { fixed_iters: Some(5), ..cfg }, 2);
        assert!(!fixed.should_stop(&[0.0, 0.0, 0.0]));
        assert_eq!(fixed.final_status(&[0.0, 0.0, 0.0]), SolveStatus::Converged);
    }
}

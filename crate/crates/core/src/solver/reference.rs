//! Full-vector proximal gradient references.

use std::time::Instant;

use nalgebra::DVector;
use num_complex::Complex64;

use super::{Solution, SolveStatus, SolverConfig, StopRule, STOP_WINDOW};
use crate::error::{Error, Result};
use crate::linalg;
use crate::prox::{self, Objective};

/// Plain proximal gradient with backtracking from `step_scale / L` each iteration.
pub fn ista_solve(obj: &Objective<'_>, config: &SolverConfig) -> Result<Solution> {
    run(obj, config, false)
}

/// Nesterov-accelerated proximal gradient with `θ_k = 2/(k+1)`.
///
/// A step that would increase the objective is discarded and the momentum
/// restarted, so the history is monotone. No randomness is involved.
pub fn fista_solve(obj: &Objective<'_>, config: &SolverConfig) -> Result<Solution> {
    run(obj, config, true)
}

/// `‖x − prox_step(x, α)‖ / α`, zero exactly at a minimizer.
pub fn gradient_map_norm(obj: &Objective<'_>, x: &DVector<Complex64>, step: f64) -> Result<f64> {
    let next = prox::prox_step(obj, x, step)?;
    Ok((x - next).norm() / step)
}

fn run(obj: &Objective<'_>, config: &SolverConfig, accelerate: bool) -> Result<Solution> {
    config.validate()?;
    let start = Instant::now();
    let lipschitz = 2.0 * linalg::spectral_norm_sqr(obj.dictionary().as_view());
    let step_init = if lipschitz > 0.0 { config.step_scale / lipschitz } else { config.step_scale };

    let mut x = DVector::<Complex64>::zeros(obj.dim());
    let mut x_prev = x.clone();
    let mut objective = obj.eval_objective(&x)?;
    let mut history = vec![objective];
    let rule = StopRule::new(config, STOP_WINDOW);
    let mut status = None;
    // iteration counter driving θ; reset to 1 on restart
    let mut momentum_k = 1usize;

    for _ in 0..rule.budget() {
        let y = if accelerate && momentum_k > 2 {
            let kk = momentum_k as f64;
            &x + (&x - &x_prev) * Complex64::from((kk - 2.0) / (kk + 1.0))
        } else {
            x.clone()
        };
        let step = match prox::backtrack(obj, &y, step_init, config.step_shrink) {
            Ok(s) => s,
            Err(Error::LineSearchFailure { .. }) => {
                status = Some(SolveStatus::LineSearchFailure);
                break;
            }
            Err(e) => return Err(e),
        };
        let candidate_objective = obj.eval_objective(&step.x_new)?;
        if !candidate_objective.is_finite() {
            status = Some(SolveStatus::NumericalFailure);
            break;
        }
        if candidate_objective <= objective {
            x_prev = std::mem::replace(&mut x, step.x_new);
            objective = candidate_objective;
            momentum_k += 1;
        } else {
            x_prev = x.clone();
            momentum_k = 1;
        }
        history.push(objective);
        if rule.should_stop(&history) {
            break;
        }
    }

    let status = status.unwrap_or_else(|| rule.final_status(&history));
    Ok(Solution {
        x_hat: x,
        iterations_used: history.len() - 1,
        objective_history: history,
        status,
        wall_time: start.elapsed(),
    })
}

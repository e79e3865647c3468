//! Randomized blockwise proximal gradient with Nesterov extrapolation and
//! backtracking.
//!
//! Each iteration draws one block `i` with probability proportional to its
//! Lipschitz constant, extrapolates that block, takes a backtracked prox step
//! on it, and keeps the result only if the full objective did not increase.
//! The residual `Ax − b` is updated in place, so one iteration costs
//! `O(N · block size)`.

use std::time::Instant;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use super::{BlockPartition, Solution, SolveStatus, SolverConfig, StopRule, STOP_WINDOW};
use crate::error::{Error, Result};
use crate::prox::{self, soft_threshold, Objective};
use crate::rng::{self, domain};

/// RBPG with the block sampler seeded from `config.seed`.
pub fn rbpg_solve(obj: &Objective<'_>, config: &SolverConfig) -> Result<Solution> {
    config.validate()?;
    let partition = BlockPartition::new(obj.dictionary(), config.num_blocks)?;
    let mut rng = rng::stream(config.seed, domain::SOLVER, 0);
    rbpg_solve_partitioned(obj, config, &partition, &mut rng)
}

/// RBPG over a precomputed partition, drawing blocks from `rng`.
///
/// Many measurements against one dictionary can share the partition.
pub fn rbpg_solve_partitioned<R: Rng + ?Sized>(
    obj: &Objective<'_>,
    config: &SolverConfig,
    partition: &BlockPartition,
    rng: &mut R,
) -> Result<Solution> {
    config.validate()?;
    let start = Instant::now();
    let a = obj.dictionary();
    let lambda = obj.lambda_reg();
    let dim = obj.dim();
    if partition.blocks().last().map(|b| b.end) != Some(dim) {
        return Err(Error::Dimension { expected: dim, found: partition.blocks().last().map_or(0, |b| b.end) });
    }

    let mut x = DVector::<Complex64>::zeros(dim);
    // block values before their most recent accepted update
    let mut x_prev = x.clone();
    let mut residual = -obj.measurement().clone();
    let mut l1 = 0.0;
    let mut objective = residual.norm_squared();
    let mut history = vec![objective];

    let rule = StopRule::new(config, STOP_WINDOW * partition.len());
    let mut status = None;

    for k in 1..=rule.budget() {
        let i = partition.sample_block(rng);
        let range = partition.blocks()[i].clone();
        let a_i = a.columns_range(range.clone());
        let x_i = x.rows_range(range.clone()).clone_owned();

        // θ_k (1/θ_{k−1} − 1) with θ_k = 2/(k+1)
        let weight = (k as f64 - 2.0) / (k as f64 + 1.0);
        let momentum = &x_i - x_prev.rows_range(range.clone());
        let (y_i, residual_y) = if weight != 0.0 && momentum.iter().any(|z| *z != Complex64::new(0.0, 0.0)) {
            let shift = momentum * Complex64::from(weight);
            let r_y = &residual + &a_i * &shift;
            (&x_i + shift, r_y)
        } else {
            (x_i.clone(), residual.clone())
        };
        let f_y = residual_y.norm_squared();
        let grad_i = a_i.ad_mul(&residual_y) * Complex64::from(2.0);

        let lipschitz = partition.lipschitz()[i];
        let mut step = if lipschitz > 0.0 { config.step_scale / lipschitz } else { config.step_scale };
        let mut accepted = None;
        for _ in 0..=prox::MAX_SHRINKS {
            let threshold = step * lambda;
            let candidate = y_i.zip_map(&grad_i, |y, g| soft_threshold(y - g * step, threshold));
            let change = &candidate - &x_i;
            let r_new = &residual + &a_i * &change;
            let f_new = r_new.norm_squared();
            let delta = &candidate - &y_i;
            if prox::quadratic_bound_holds(f_new, f_y, grad_i.as_view(), delta.as_view(), step) {
                accepted = Some((candidate, r_new, f_new));
                break;
            }
            step *= config.step_shrink;
        }
        let Some((candidate, r_new, f_new)) = accepted else {
            status = Some(SolveStatus::LineSearchFailure);
            break;
        };

        let block_l1_old: f64 = x_i.iter().map(|z| z.norm()).sum();
        let block_l1_new: f64 = candidate.iter().map(|z| z.norm()).sum();
        let l1_new = l1 - block_l1_old + block_l1_new;
        let objective_new = f_new + lambda * l1_new;
        if !objective_new.is_finite() {
            status = Some(SolveStatus::NumericalFailure);
            break;
        }

        x_prev.rows_range_mut(range.clone()).copy_from(&x_i);
        if objective_new <= objective {
            x.rows_range_mut(range).copy_from(&candidate);
            residual = r_new;
            l1 = l1_new;
            objective = objective_new;
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

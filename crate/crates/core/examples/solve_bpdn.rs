//! Solve one complex L1-regularized least-squares problem with RBPG, ISTA and
//! FISTA and compare objective values, iteration counts and wall time.

use tomo_rbpg::prox::Objective;
use tomo_rbpg::rng::{self, domain};
use tomo_rbpg::simulate::{self, Scatterer, Scenario};
use tomo_rbpg::solver::{self, SolverConfig};
use tomo_rbpg::SteeringMatrix;

fn main() -> tomo_rbpg::Result<()> {
    let geometry = simulate::random_geometry(2024, 29)?;
    let rho = geometry.rayleigh_resolution();
    let grid = simulate::elevation_grid(&geometry, 200)?;
    let steering = SteeringMatrix::build(&geometry, &grid)?;
    let truth = vec![Scatterer::at(-0.5 * rho), Scatterer { phase: 1.0, ..Scatterer::at(0.6 * rho) }];
    let scenario = Scenario::new(geometry, truth, vec![10.0, 10.0])?;
    let g = simulate::synthesize_pixel(&scenario, &mut rng::stream(1, domain::NOISE, 0))?;

    let config = SolverConfig { num_blocks: 8, seed: 3, ..SolverConfig::default() };
    let lambda = config.resolve_lambda(steering.matrix(), &g);
    let obj = Objective::new(steering.matrix(), &g, lambda)?;
    println!("N = {}, L = {}, lambda = {lambda:.4} ({}% of lambda_max)", obj.measurement().len(), obj.dim(), 100.0 * lambda / obj.lambda_max());

    println!("{:<6} {:>14} {:>8} {:>10} {:>10}", "solver", "F", "iters", "status", "ms");
    for (name, sol) in [
        ("rbpg", solver::rbpg_solve(&obj, &config)?),
        ("ista", solver::ista_solve(&obj, &config)?),
        ("fista", solver::fista_solve(&obj, &config)?),
    ] {
        println!(
            "{name:<6} {:>14.8} {:>8} {:>10} {:>10.1}",
            sol.final_objective(),
            sol.iterations_used,
            format!("{:?}", sol.status),
            sol.wall_time.as_secs_f64() * 1e3
        );
        let support: Vec<String> = sol
            .x_hat
            .iter()
            .enumerate()
            .filter(|(_, x)| x.norm() > 0.1)
            .map(|(i, x)| format!("{:+.2}:{:.2}", grid.elevation().value(i) / rho, x.norm()))
            .collect();
        println!("       |x| > 0.1 at s/rho: {}", support.join(" "));
    }
    Ok(())
}

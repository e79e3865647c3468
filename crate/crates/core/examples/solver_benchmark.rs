//! Wall time and iteration counts versus grid size for RBPG and FISTA, with
//! log-log scaling slopes.
//!
//! Usage: `cargo run --release --example solver_benchmark -- [max L]`

use tomo_rbpg::cli::bench::{self, BenchConfig};
use tomo_rbpg::Backend;

fn main() -> tomo_rbpg::Result<()> {
    let max_l: usize = std::env::args().nth(1).map_or(Ok(1000), |s| s.parse()).expect("grid size");
    let sizes_l: Vec<usize> = [100, 300, 1000, 3000, 10_000].into_iter().filter(|&l| l <= max_l).collect();
    let config = BenchConfig { sizes_n: vec![29], sizes_l, solvers: vec![Backend::Rbpg, Backend::Fista], repetitions: 3, ..BenchConfig::default() };
    let report = bench::run_bench(&config)?;
    println!("{:<6} {:>6} {:>10} {:>10} {:>12} {:>5}", "solver", "L", "wall s", "iters", "s / iter", "conv");
    for e in &report.entries {
        println!(
            "{:<6} {:>6} {:>10.4} {:>10.0} {:>12.3e} {:>3}/{}",
            e.solver.name(),
            e.l,
            e.median_wall_s,
            e.median_iterations,
            e.median_per_iteration_s,
            e.converged,
            e.repetitions
        );
    }
    for f in &report.scaling {
        println!("{} slopes in L: wall {:.2}, iterations {:.2}, per iteration {:.2}", f.solver.name(), f.wall_slope, f.iterations_slope, f.per_iteration_slope);
    }
    Ok(())
}

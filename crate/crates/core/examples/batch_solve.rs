//! End to end batch run through the library side of the `tomo` binary:
//! write a scenario, simulate a stack, solve every pixel, read the outputs.

use std::fs;

use tomo_rbpg::cli::{self, GlobalOptions, SolveArgs, Stack};
use tomo_rbpg::simulate::{self, Scatterer, Scenario};
use tomo_rbpg::slimmer::PixelOutcome;

fn main() -> tomo_rbpg::Result<()> {
    let dir = std::env::temp_dir().join("tomo-batch-example");
    fs::create_dir_all(&dir)?;
    let geometry = simulate::random_geometry(2024, 29)?;
    let rho = geometry.rayleigh_resolution();
    let grid = simulate::elevation_grid(&geometry, 81)?;
    let scenario = Scenario {
        realizations: 40,
        seed: 7,
        ..Scenario::new(geometry.clone(), vec![Scatterer::at(-0.6 * rho), Scatterer::at(0.6 * rho)], vec![10.0, 10.0])?
    };

    let path = |name: &str| dir.join(name);
    fs::write(path("scenario.json"), serde_json::to_string_pretty(&scenario)?)?;
    fs::write(path("geometry.json"), serde_json::to_string_pretty(&geometry)?)?;
    fs::write(path("grid.json"), serde_json::to_string_pretty(&grid)?)?;

    let opts = GlobalOptions { workers: Some(2), ..GlobalOptions::default() };
    cli::cmd_simulate(&path("scenario.json"), &path("stack.tstk"), &opts)?;
    let stack = Stack::read(path("stack.tstk"))?;
    println!("stack: {} pixels x {} samples, {} bytes", stack.header.pixel_count, stack.header.n, fs::metadata(path("stack.tstk"))?.len());

    let args = SolveArgs {
        stack: path("stack.tstk"),
        geometry: path("geometry.json"),
        grid: path("grid.json"),
        out: path("estimates.jsonl"),
        csv: Some(path("points.csv")),
    };
    let records = cli::cmd_solve(&args, &opts)?;
    let mut orders = [0usize; 3];
    for r in &records {
        if let PixelOutcome::Ok(est) = &r.outcome {
            orders[est.model_order] += 1;
        }
    }
    println!("model orders 0/1/2: {orders:?}");
    for name in ["estimates.jsonl", "points.csv", "estimates.jsonl.manifest.json"] {
        println!("wrote {}", path(name).display());
    }
    let first = fs::read_to_string(path("estimates.jsonl"))?;
    println!("first record: {}", first.lines().next().unwrap_or(""));
    Ok(())
}

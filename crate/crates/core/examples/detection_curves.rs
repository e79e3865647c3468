//! Monte Carlo detection probability of a scatterer pair versus kappa, with
//! Wilson 95% intervals, written as CSV to stdout.
//!
//! Usage: `cargo run --release --example detection_curves -- [realizations]`

use tomo_rbpg::simulate::{self, MonteCarloConfig};
use tomo_rbpg::{Backend, PipelineConfig};

fn main() -> tomo_rbpg::Result<()> {
    let realizations = std::env::args().nth(1).map_or(Ok(50), |s| s.parse()).expect("realization count");
    let geometry = simulate::random_geometry(2024, 29)?;
    let grid = simulate::elevation_grid(&geometry, 81)?;
    let config = MonteCarloConfig {
        geometry,
        grid,
        kappas: vec![0.2, 0.4, 0.8, 1.2],
        snrs_db: vec![10.0],
        methods: vec![Backend::SvdWiener, Backend::Rbpg],
        realizations,
        seed: 1,
        delta_phi: 0.0,
        center: 0.0,
        match_tol: None,
        pipeline: PipelineConfig::default(),
        wiener_from_snr: true,
    };
    let rows = simulate::monte_carlo_detection(&config)?;
    simulate::write_detection_csv(std::io::stdout().lock(), &rows)?;
    Ok(())
}

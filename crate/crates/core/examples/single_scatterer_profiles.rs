//! Reflectivity profiles of one scatterer from the three estimators, drawn
//! as text bars. The L1 profiles are sparse; SVD-Wiener is a broad lobe.

use nalgebra::DVector;
use num_complex::Complex64;
use tomo_rbpg::rng::{self, domain};
use tomo_rbpg::simulate::{self, Scatterer, Scenario};
use tomo_rbpg::{Backend, Pipeline, PipelineConfig, SteeringMatrix};

fn bars(profile: &DVector<Complex64>, every: usize) {
    let peak = profile.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for (i, z) in profile.iter().enumerate().step_by(every) {
        let n = (40.0 * z.norm() / peak).round() as usize;
        println!("  {i:>3} {}", "#".repeat(n));
    }
}

fn main() -> tomo_rbpg::Result<()> {
    let snr_db: f64 = std::env::args().nth(1).map_or(Ok(10.0), |s| s.parse()).expect("SNR in dB");
    let geometry = simulate::random_geometry(2024, 29)?;
    let rho = geometry.rayleigh_resolution();
    let grid = simulate::elevation_grid(&geometry, 81)?;
    let steering = SteeringMatrix::build(&geometry, &grid)?;
    let scenario = Scenario::new(geometry, vec![Scatterer::at(0.0)], vec![snr_db])?;
    let g = simulate::synthesize_pixel(&scenario, &mut rng::stream(5, domain::NOISE, 0))?;

    for backend in [Backend::SvdWiener, Backend::Rbpg, Backend::Fista] {
        let config = PipelineConfig { backend, noise_power: simulate::wiener_regularization(&scenario, 81), ..PipelineConfig::default() };
        let pipeline = Pipeline::new(&steering, config)?;
        let profile = pipeline.profile(&g, &mut rng::stream(5, domain::SOLVER, 0))?;
        let est = pipeline.estimate_from_profile(&g, &profile)?;
        println!("{} at {snr_db} dB: K = {}, elevations / rho = {:?}", backend.name(), est.model_order, est.elevations.iter().map(|s| s / rho).collect::<Vec<_>>());
        bars(&profile, 2);
    }
    Ok(())
}

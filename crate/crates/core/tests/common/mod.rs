#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use tomo_rbpg::model::SteeringMatrix;
use tomo_rbpg::rng;
use tomo_rbpg::simulate::{self, Scatterer, Scenario};

pub const GEOMETRY_SEED: u64 = 2024;

pub fn complex_gaussian(rows: usize, cols: usize, seed: u64) -> DMatrix<Complex64> {
    let mut r = rng::stream(seed, 99, 0);
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = r.sample(StandardNormal);
        let im: f64 = r.sample(StandardNormal);
        Complex64::new(re, im) / (2.0 * rows as f64).sqrt()
    })
}

pub fn complex_vector(len: usize, seed: u64) -> DVector<Complex64> {
    let mut r = rng::stream(seed, 98, 0);
    DVector::from_fn(len, |_, _| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
}

/// Irregular Fourier instance: `n` acquisitions, `l` elevation samples spaced
/// `ρ/20`, two on-grid scatterers of random phase `ρ` apart, at `snr_db`.
pub struct FourierInstance {
    pub steering: SteeringMatrix,
    pub measurement: DVector<Complex64>,
    pub truth: Vec<Scatterer>,
}

pub fn fourier_instance(n: usize, l: usize, snr_db: f64, index: u64) -> FourierInstance {
    let geometry = simulate::random_geometry(GEOMETRY_SEED, n).unwrap();
    let grid = simulate::elevation_grid(&geometry, l).unwrap();
    let steering = SteeringMatrix::build(&geometry, &grid).unwrap();
    let mut r = rng::stream(index, 97, 0);
    let axis = grid.elevation();
    let first = r.random_range(0..l - 20);
    let truth = vec![
        Scatterer { phase: r.random_range(0.0..6.28), ..Scatterer::at(axis.value(first)) },
        Scatterer { phase: r.random_range(0.0..6.28), ..Scatterer::at(axis.value(first + 20)) },
    ];
    let scenario = Scenario::new(geometry, truth.clone(), vec![snr_db; 2]).unwrap();
    let measurement = simulate::synthesize_pixel(&scenario, &mut rng::stream(index, 96, 0)).unwrap();
    FourierInstance { steering, measurement, truth }
}

pub fn is_monotone(history: &[f64]) -> bool {
    history.windows(2).all(|w| w[1] <= w[0])
}

pub fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

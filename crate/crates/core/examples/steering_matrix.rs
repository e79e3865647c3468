//! Acquisition geometry, frequencies, resolution and the steering matrix,
//! including a grid with a linear deformation axis.

use tomo_rbpg::model::{self, GridAxis, MotionAxis};
use tomo_rbpg::{simulate, AcquisitionGeometry, BaseFunction, ParameterGrid, SteeringMatrix};

fn main() -> tomo_rbpg::Result<()> {
    let geometry = AcquisitionGeometry::new(vec![-100.0, -20.0, 35.0, 100.0], vec![-1.0, -0.3, 0.4, 1.1], 0.031, 6.2e5)?;
    println!("baselines  {:?}", geometry.baselines());
    println!("xi (1/m)   {:?}", geometry.spatial_frequencies()?);
    println!("eta (1/yr) {:?}", geometry.temporal_frequencies(&[BaseFunction::Linear])?[0]);
    println!("aperture {:.1} m, Rayleigh resolution {:.1} m", geometry.aperture(), geometry.rayleigh_resolution());
    println!("kappa of a 10 m separation: {:.3}", model::normalized_distance(10.0, geometry.rayleigh_resolution())?);

    let grid = ParameterGrid::new(
        GridAxis::spanning(-200.0, 200.0, 41)?,
        vec![MotionAxis { base: BaseFunction::Linear, axis: GridAxis::spanning(-0.02, 0.02, 5)? }],
    )?;
    let steering = SteeringMatrix::build(&geometry, &grid)?;
    println!("steering matrix {} x {} (elevation x motion = {:?})", steering.rows(), steering.cols(), grid.axis_lengths());
    let flat = grid.flatten(&[20, 3])?;
    println!("column {flat} is (s, p) = {:?}", grid.parameters(flat));

    // the geometry used by the other examples
    let stack = simulate::random_geometry(2024, 29)?;
    let rho = stack.rayleigh_resolution();
    let grid = simulate::elevation_grid(&stack, 81)?;
    let a = SteeringMatrix::build(&stack, &grid)?;
    let gram = a.matrix().adjoint() * a.matrix();
    println!("\n29 acquisitions, rho = {rho:.1} m, grid step {:.2} m", grid.elevation().step);
    println!("normalized column coherence vs offset (grid samples):");
    for offset in [1usize, 5, 10, 20, 40] {
        let c = gram[(40, 40 + offset)].norm() / gram[(40, 40)].norm();
        println!("  {offset:>3}  ({:.2} rho)  {c:.3}", offset as f64 / 20.0);
    }
    Ok(())
}

//! Acquisition geometry, parameter grids and the irregular Fourier steering
//! matrix that maps scatterer parameters to interferometric measurements.
//!
//! Row `n` of the steering matrix belongs to acquisition `n`; the column for
//! grid point `(s, p_1, .., p_M)` holds
//! `exp(j 2π (ξ_n s + Σ_m η_{m,n} p_m))` with spatial frequency
//! `ξ_n = 2 b_n / (λ r)` and temporal frequency `η_{m,n} = 2 τ_m(t_n) / λ`.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest dictionary (N·L complex entries) built without an explicit budget.
/// 2^26 entries is 1 GiB of `Complex64`.
pub const DEFAULT_ENTRY_BUDGET: usize = 1 << 26;

/// Sensing configuration of a multi-pass stack.
///
/// Times are in years relative to the master acquisition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeometryFile", into = "GeometryFile")]
pub struct AcquisitionGeometry {
    baselines: Vec<f64>,
    times: Vec<f64>,
    wavelength: f64,
    range: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryFile {
    baselines_m: Vec<f64>,
    times_yr: Vec<f64>,
    wavelength_m: f64,
    range_m: f64,
}

impl TryFrom<GeometryFile> for AcquisitionGeometry {
    type Error = Error;

    fn try_from(raw: GeometryFile) -> Result<Self> {
        AcquisitionGeometry::new(raw.baselines_m, raw.times_yr, raw.wavelength_m, raw.range_m)
    }
}

impl From<AcquisitionGeometry> for GeometryFile {
    fn from(g: AcquisitionGeometry) -> Self {
        GeometryFile {
            baselines_m: g.baselines,
            times_yr: g.times,
            wavelength_m: g.wavelength,
            range_m: g.range,
        }
    }
}

impl AcquisitionGeometry {
    pub fn new(baselines: Vec<f64>, times: Vec<f64>, wavelength: f64, range: f64) -> Result<Self> {
        if baselines.len() != times.len() {
            return Err(Error::InvalidGeometry(format!(
                "{} baselines but {} acquisition times",
                baselines.len(),
                times.len()
            )));
        }
        if baselines.len() < 2 {
            return Err(Error::InvalidGeometry("at least two acquisitions are required".into()));
        }
        if baselines.iter().chain(&times).any(|v| !v.is_finite()) {
            return Err(Error::InvalidGeometry("non-finite baseline or time".into()));
        }
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(Error::InvalidGeometry(format!("wavelength must be positive, got {wavelength}")));
        }
        if !(range.is_finite() && range > 0.0) {
            return Err(Error::InvalidGeometry(format!("range must be positive, got {range}")));
        }
        let geom = AcquisitionGeometry { baselines, times, wavelength, range };
        if geom.aperture() <= 0.0 {
            return Err(Error::InvalidGeometry("elevation aperture is zero".into()));
        }
        Ok(geom)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn len(&self) -> usize {
        self.baselines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.baselines.is_empty()
    }

    pub fn baselines(&self) -> &[f64] {
        &self.baselines
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    /// Elevation aperture extent `max(b) - min(b)`.
    pub fn aperture(&self) -> f64 {
        let (lo, hi) = self
            .baselines
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &b| (lo.min(b), hi.max(b)));
        hi - lo
    }

    pub fn spatial_frequencies(&self) -> Result<Vec<f64>> {
        spatial_frequencies(&self.baselines, self.wavelength, self.range)
    }

    pub fn temporal_frequencies(&self, bases: &[BaseFunction]) -> Result<Vec<Vec<f64>>> {
        temporal_frequencies(&self.times, self.wavelength, bases)
    }

    /// Elevation resolution of this stack, `1 / (max ξ − min ξ) = λ r / (2 Δb)`.
    ///
    /// The two-way path doubles the spatial frequencies, so the effective
    /// aperture in [`rayleigh_resolution`] is `2 Δb`.
    pub fn rayleigh_resolution(&self) -> f64 {
        // the constructor guarantees positive inputs
        self.wavelength * self.range / (2.0 * self.aperture())
    }
}

/// `ξ_n = 2 b_n / (λ r)` in cycles per meter.
pub fn spatial_frequencies(baselines: &[f64], wavelength: f64, range: f64) -> Result<Vec<f64>> {
    let scale = 2.0 / (wavelength * range);
    baselines
        .iter()
        .map(|&b| {
            let xi = scale * b;
            if xi.is_finite() {
                Ok(xi)
            } else {
                Err(Error::InvalidGeometry(format!("spatial frequency for baseline {b} is not finite")))
            }
        })
        .collect()
}

/// Temporal base function of the motion model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseFunction {
    /// `τ(t) = t`, motion coefficient in m/yr.
    Linear,
    /// `τ(t) = sin(2πt)`, motion coefficient is the seasonal amplitude in m.
    Seasonal,
}

impl BaseFunction {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            BaseFunction::Linear => t,
            BaseFunction::Seasonal => (2.0 * PI * t).sin(),
        }
    }
}

impl FromStr for BaseFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(BaseFunction::Linear),
            "seasonal" => Ok(BaseFunction::Seasonal),
            other => Err(Error::Config(format!("unknown base function {other:?}"))),
        }
    }
}

impl fmt::Display for BaseFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaseFunction::Linear => "linear",
            BaseFunction::Seasonal => "seasonal",
        })
    }
}

/// `η_{m,n} = 2 τ_m(t_n) / λ`, one row per base function in the given order.
pub fn temporal_frequencies(times: &[f64], wavelength: f64, bases: &[BaseFunction]) -> Result<Vec<Vec<f64>>> {
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(Error::InvalidGeometry(format!("wavelength must be positive, got {wavelength}")));
    }
    Ok(bases
        .iter()
        .map(|base| times.iter().map(|&t| 2.0 * base.eval(t) / wavelength).collect())
        .collect())
}

/// Uniformly spaced, strictly increasing samples `start + i * step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn new(start: f64, step: f64, count: usize) -> Result<Self> {
        let axis = GridAxis { start, step, count };
        axis.validate()?;
        Ok(axis)
    }

    /// `count` samples spanning `[min, max]` inclusive.
    pub fn spanning(min: f64, max: f64, count: usize) -> Result<Self> {
        if count == 1 {
            if min != max {
                return Err(Error::Config("a single-sample axis needs min == max".into()));
            }
            return Self::new(min, 1.0, 1);
        }
        if count == 0 {
            return Err(Error::Config("grid axis needs at least one sample".into()));
        }
        Self::new(min, (max - min) / (count - 1) as f64, count)
    }

    fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Config("grid axis needs at least one sample".into()));
        }
        if !self.start.is_finite() || !self.step.is_finite() {
            return Err(Error::Config("grid axis bounds must be finite".into()));
        }
        if self.count > 1 && self.step <= 0.0 {
            return Err(Error::Config("grid axis must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn value(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn samples(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }

    pub fn min(&self) -> f64 {
        self.start
    }

    pub fn max(&self) -> f64 {
        self.value(self.count - 1)
    }

    /// Index of the sample nearest to `v`, clamped to the axis.
    pub fn nearest(&self, v: f64) -> usize {
        if self.count == 1 {
            return 0;
        }
        let i = ((v - self.start) / self.step).round();
        i.clamp(0.0, (self.count - 1) as f64) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionAxis {
    pub base: BaseFunction,
    #[serde(flatten)]
    pub axis: GridAxis,
}

/// Discretized parameter space: elevation plus optional motion axes.
///
/// Flat index layout puts elevation fastest:
/// `ℓ = s + L_s (p_1 + P_1 (p_2 + ...))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridFile", into = "GridFile")]
pub struct ParameterGrid {
    elevation: GridAxis,
    motion: Vec<MotionAxis>,
    flat_size: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    elevation: GridAxis,
    #[serde(default)]
    motion: Vec<MotionAxis>,
}

impl TryFrom<GridFile> for ParameterGrid {
    type Error = Error;

    fn try_from(raw: GridFile) -> Result<Self> {
        ParameterGrid::new(raw.elevation, raw.motion)
    }
}

impl From<ParameterGrid> for GridFile {
    fn from(g: ParameterGrid) -> Self {
        GridFile { elevation: g.elevation, motion: g.motion }
    }
}

impl ParameterGrid {
    pub fn new(elevation: GridAxis, motion: Vec<MotionAxis>) -> Result<Self> {
        elevation.validate()?;
        let mut flat_size = elevation.count;
        for m in &motion {
            m.axis.validate()?;
            flat_size = flat_size
                .checked_mul(m.axis.count)
                .ok_or_else(|| Error::Capacity { requested: usize::MAX, budget: DEFAULT_ENTRY_BUDGET })?;
        }
        Ok(ParameterGrid { elevation, motion, flat_size })
    }

    pub fn elevation_only(elevation: GridAxis) -> Result<Self> {
        Self::new(elevation, Vec::new())
    }

    pub fn elevation(&self) -> &GridAxis {
        &self.elevation
    }

    pub fn motion(&self) -> &[MotionAxis] {
        &self.motion
    }

    pub fn motion_bases(&self) -> Vec<BaseFunction> {
        self.motion.iter().map(|m| m.base).collect()
    }

    /// Number of grid points L.
    pub fn flat_size(&self) -> usize {
        self.flat_size
    }

    /// Number of motion-parameter combinations per elevation sample.
    pub fn motion_size(&self) -> usize {
        self.flat_size / self.elevation.count
    }

    pub fn axis_lengths(&self) -> Vec<usize> {
        std::iter::once(self.elevation.count).chain(self.motion.iter().map(|m| m.axis.count)).collect()
    }

    /// Multi-index `[s, p_1, .., p_M]` of a flat index.
    pub fn unflatten(&self, flat: usize) -> Vec<usize> {
        debug_assert!(flat < self.flat_size);
        let mut rest = flat;
        self.axis_lengths()
            .into_iter()
            .map(|n| {
                let i = rest % n;
                rest /= n;
                i
            })
            .collect()
    }

    pub fn flatten(&self, multi: &[usize]) -> Result<usize> {
        let lengths = self.axis_lengths();
        if multi.len() != lengths.len() {
            return Err(Error::Dimension { expected: lengths.len(), found: multi.len() });
        }
        let mut flat = 0;
        for (&i, &n) in multi.iter().zip(&lengths).rev() {
            if i >= n {
                return Err(Error::Domain(format!("grid index {i} out of range for axis of length {n}")));
            }
            flat = flat * n + i;
        }
        Ok(flat)
    }

    /// Elevation and motion parameter values `(s, [p_1, .., p_M])` of a flat index.
    pub fn parameters(&self, flat: usize) -> (f64, Vec<f64>) {
        let multi = self.unflatten(flat);
        let s = self.elevation.value(multi[0]);
        let p = self.motion.iter().zip(&multi[1..]).map(|(m, &i)| m.axis.value(i)).collect();
        (s, p)
    }
}

/// The N×L dictionary of unit-modulus steering vectors.
#[derive(Debug, Clone)]
pub struct SteeringMatrix {
    entries: DMatrix<Complex64>,
    geometry: AcquisitionGeometry,
    grid: ParameterGrid,
}

impl SteeringMatrix {
    pub fn build(geometry: &AcquisitionGeometry, grid: &ParameterGrid) -> Result<Self> {
        Self::build_with_budget(geometry, grid, DEFAULT_ENTRY_BUDGET)
    }

    pub fn build_with_budget(geometry: &AcquisitionGeometry, grid: &ParameterGrid, budget: usize) -> Result<Self> {
        let n = geometry.len();
        let l = grid.flat_size();
        let requested = n.checked_mul(l).unwrap_or(usize::MAX);
        if requested > budget {
            return Err(Error::Capacity { requested, budget });
        }
        let xi = geometry.spatial_frequencies()?;
        let eta = geometry.temporal_frequencies(&grid.motion_bases())?;
        let mut entries = DMatrix::<Complex64>::zeros(n, l);
        for col in 0..l {
            let (s, p) = grid.parameters(col);
            fill_steering(entries.column_mut(col).iter_mut(), &xi, &eta, s, &p);
        }
        Ok(SteeringMatrix { entries, geometry: geometry.clone(), grid: grid.clone() })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn geometry(&self) -> &AcquisitionGeometry {
        &self.geometry
    }

    pub fn grid(&self) -> &ParameterGrid {
        &self.grid
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }
}

/// Steering vector for an arbitrary (possibly off-grid) parameter point.
pub fn steering_vector(geometry: &AcquisitionGeometry, bases: &[BaseFunction], s: f64, p: &[f64]) -> Result<DVector<Complex64>> {
    if bases.len() != p.len() {
        return Err(Error::Dimension { expected: bases.len(), found: p.len() });
    }
    let xi = geometry.spatial_frequencies()?;
    let eta = geometry.temporal_frequencies(bases)?;
    let mut v = DVector::<Complex64>::zeros(geometry.len());
    fill_steering(v.iter_mut(), &xi, &eta, s, p);
    Ok(v)
}

fn fill_steering<'a>(out: impl Iterator<Item = &'a mut Complex64>, xi: &[f64], eta: &[Vec<f64>], s: f64, p: &[f64]) {
    for (n, z) in out.enumerate() {
        let mut phase = xi[n] * s;
        for (row, &pm) in eta.iter().zip(p) {
            phase += row[n] * pm;
        }
        // reduce before scaling by 2π so large phases keep precision
        let phase = 2.0 * PI * (phase - phase.round());
        *z = Complex64::from_polar(1.0, phase);
    }
}

/// Rayleigh elevation resolution `ρ_s = λ r / Δb` for an effective aperture `Δb`.
pub fn rayleigh_resolution(wavelength: f64, range: f64, aperture: f64) -> Result<f64> {
    for (name, v) in [("wavelength", wavelength), ("range", range), ("aperture", aperture)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Domain(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(wavelength * range / aperture)
}

/// Normalized distance `κ = s / ρ_s`.
pub fn normalized_distance(separation: f64, resolution: f64) -> Result<f64> {
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(Error::Domain(format!("resolution must be positive, got {resolution}")));
    }
    Ok(separation / resolution)
}

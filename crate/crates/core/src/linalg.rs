//! Small dense complex linear-algebra helpers.

use nalgebra::{DMatrix, DMatrixView, DVector, DVectorView};
use num_complex::Complex64;
use rand::Rng;

use crate::rng;

const POWER_MAX_ITERS: usize = 1000;
const POWER_REL_TOL: f64 = 1e-12;

/// Relative threshold on `|R_ii|` below which a column counts as dependent.
pub const RANK_TOL: f64 = 1e-10;

/// Largest eigenvalue of `AᴴA` (the squared spectral norm of `A`) by power iteration.
pub fn spectral_norm_sqr(a: DMatrixView<'_, Complex64>) -> f64 {
    let cols = a.ncols();
    if cols == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let mut r = rng::stream(0x5eed, 0, cols as u64);
    let mut v = DVector::<Complex64>::from_fn(cols, |_, _| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)));
    let norm = v.norm();
    if norm == 0.0 {
        return 0.0;
    }
    v /= Complex64::from(norm);
    let mut estimate = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let w = a * &v;
        let next = a.ad_mul(&w);
        // Rayleigh quotient vᴴAᴴAv with ‖v‖ = 1
        let rq = w.norm_squared();
        let nn = next.norm();
        if nn == 0.0 {
            return 0.0;
        }
        v = next / Complex64::from(nn);
        if (rq - estimate).abs() <= POWER_REL_TOL * rq {
            return rq.max(estimate);
        }
        estimate = rq;
    }
    estimate
}

/// Hermitian inner product `⟨x, y⟩ = Σ conj(x_i) y_i`.
pub fn dot(x: DVectorView<'_, Complex64>, y: DVectorView<'_, Complex64>) -> Complex64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

pub fn l1_norm(x: DVectorView<'_, Complex64>) -> f64 {
    x.iter().map(|z| z.norm()).sum()
}

/// Columns of `a` selected by `cols`.
pub fn select_columns(a: &DMatrix<Complex64>, cols: &[usize]) -> DMatrix<Complex64> {
    DMatrix::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])])
}

#[derive(Debug, Clone, PartialEq)]
pub enum LeastSquaresError {
    /// Position (within the requested column list) of the first column that
    /// is linearly dependent on its predecessors.
    RankDeficient(usize),
}

/// Least-squares fit of `g` on the selected columns; returns the coefficients
/// and the residual sum of squares.
pub fn least_squares(
    a: &DMatrix<Complex64>,
    cols: &[usize],
    g: &DVector<Complex64>,
) -> Result<(DVector<Complex64>, f64), LeastSquaresError> {
    if cols.is_empty() {
        return Ok((DVector::zeros(0), g.norm_squared()));
    }
    let sub = select_columns(a, cols);
    let scale = sub.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    if cols.len() > a.nrows() {
        return Err(LeastSquaresError::RankDeficient(a.nrows()));
    }
    let qr = sub.clone().qr();
    let r = qr.r();
    for i in 0..cols.len() {
        if r[(i, i)].norm() <= RANK_TOL * scale {
            return Err(LeastSquaresError::RankDeficient(i));
        }
    }
    let q = qr.q();
    let qtg = q.ad_mul(g);
    let coef = r
        .solve_upper_triangular(&qtg)
        .ok_or(LeastSquaresError::RankDeficient(cols.len() - 1))?;
    let resid = g - &sub * &coef;
    Ok((coef, resid.norm_squared()))
}

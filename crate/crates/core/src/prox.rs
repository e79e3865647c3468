//! Objective evaluation and the L1 proximal machinery.
//!
//! The problem is `F(x) = f(x) + λ‖x‖₁` with `f(x) = ‖Ax − b‖²₂` over complex
//! `x`. Gradients are Wirtinger gradients scaled so that
//! `f(x + δ) ≈ f(x) + Re⟨∇f(x), δ⟩`, i.e. `∇f(x) = 2Aᴴ(Ax − b)`.

use nalgebra::{DMatrix, DVector, DVectorView};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;

/// Step reductions allowed before the line search gives up.
pub const MAX_SHRINKS: usize = 50;

/// `‖Ax − b‖² + λ‖x‖₁` over a borrowed dictionary and measurement.
#[derive(Debug, Clone, Copy)]
pub struct Objective<'a> {
    dictionary: &'a DMatrix<Complex64>,
    measurement: &'a DVector<Complex64>,
    lambda_reg: f64,
}

impl<'a> Objective<'a> {
    pub fn new(dictionary: &'a DMatrix<Complex64>, measurement: &'a DVector<Complex64>, lambda_reg: f64) -> Result<Self> {
        if dictionary.nrows() != measurement.len() {
            return Err(Error::Dimension { expected: dictionary.nrows(), found: measurement.len() });
        }
        if !(lambda_reg.is_finite() && lambda_reg >= 0.0) {
            return Err(Error::Config(format!("lambda_reg must be finite and nonnegative, got {lambda_reg}")));
        }
        Ok(Objective { dictionary, measurement, lambda_reg })
    }

    pub fn dictionary(&self) -> &'a DMatrix<Complex64> {
        self.dictionary
    }

    pub fn measurement(&self) -> &'a DVector<Complex64> {
        self.measurement
    }

    pub fn lambda_reg(&self) -> f64 {
        self.lambda_reg
    }

    pub fn with_lambda(&self, lambda_reg: f64) -> Result<Self> {
        Objective::new(self.dictionary, self.measurement, lambda_reg)
    }

    /// Number of unknowns L.
    pub fn dim(&self) -> usize {
        self.dictionary.ncols()
    }

    fn check(&self, x: &DVector<Complex64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), found: x.len() });
        }
        Ok(())
    }

    /// `Ax − b`.
    pub fn residual(&self, x: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        self.check(x)?;
        Ok(self.dictionary * x - self.measurement)
    }

    /// `f(x) = ‖Ax − b‖²`.
    pub fn eval_f(&self, x: &DVector<Complex64>) -> Result<f64> {
        Ok(self.residual(x)?.norm_squared())
    }

    /// `F(x) = f(x) + λ Σ|x_ℓ|`.
    pub fn eval_objective(&self, x: &DVector<Complex64>) -> Result<f64> {
        Ok(self.eval_f(x)? + self.lambda_reg * linalg::l1_norm(x.as_view()))
    }

    /// `2Aᴴ(Ax − b)`.
    pub fn grad_f(&self, x: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        let r = self.residual(x)?;
        Ok(self.gradient_from_residual(&r))
    }

    pub(crate) fn gradient_from_residual(&self, residual: &DVector<Complex64>) -> DVector<Complex64> {
        self.dictionary.ad_mul(residual) * Complex64::from(2.0)
    }

    /// `2‖Aᴴb‖_∞`; any `λ` at or above it makes `x = 0` optimal.
    pub fn lambda_max(&self) -> f64 {
        2.0 * self.dictionary.ad_mul(self.measurement).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Proximal operator of `α|·|` on one complex entry: shrink the modulus by `α`.
#[inline]
pub fn soft_threshold(x: Complex64, alpha: f64) -> Complex64 {
    let m = x.norm();
    if m <= alpha {
        Complex64::new(0.0, 0.0)
    } else {
        x * ((m - alpha) / m)
    }
}

/// `prox_{αλ‖·‖₁}(x − α∇f(x))`.
pub fn prox_step(obj: &Objective<'_>, x: &DVector<Complex64>, step: f64) -> Result<DVector<Complex64>> {
    check_step(step)?;
    let grad = obj.grad_f(x)?;
    Ok(prox_from_gradient(x, &grad, step, obj.lambda_reg()))
}

pub(crate) fn prox_from_gradient(
    point: &DVector<Complex64>,
    grad: &DVector<Complex64>,
    step: f64,
    lambda_reg: f64,
) -> DVector<Complex64> {
    let threshold = step * lambda_reg;
    point.zip_map(grad, |p, g| soft_threshold(p - g * step, threshold))
}

/// The sufficient-decrease test shared by every line search:
/// `f_new ≤ f_base + Re⟨grad, delta⟩ + ‖delta‖²/(2α)`.
#[inline]
pub fn quadratic_bound_holds(f_new: f64, f_base: f64, grad: DVectorView<'_, Complex64>, delta: DVectorView<'_, Complex64>, step: f64) -> bool {
    let linear = linalg::dot(grad, delta).re;
    let bound = f_base + linear + delta.norm_squared() / (2.0 * step);
    // absorb rounding in f so that an exact step is never rejected
    f_new <= bound + 1e-13 * f_base.abs().max(f_new.abs())
}

/// Whether `x_new` satisfies the quadratic upper bound of `f` around `x` with step `α`.
pub fn line_search_ok(obj: &Objective<'_>, x: &DVector<Complex64>, x_new: &DVector<Complex64>, step: f64) -> Result<bool> {
    check_step(step)?;
    let r = obj.residual(x)?;
    let f_x = r.norm_squared();
    let grad = obj.gradient_from_residual(&r);
    let f_new = obj.eval_f(x_new)?;
    let delta = x_new - x;
    Ok(quadratic_bound_holds(f_new, f_x, grad.as_view(), delta.as_view(), step))
}

#[derive(Debug, Clone)]
pub struct Backtracked {
    pub step: f64,
    pub x_new: DVector<Complex64>,
    pub shrinks: usize,
}

/// Shrinks `α = α_init · C_α^i` until the prox step from `x` satisfies the quadratic bound.
pub fn backtrack(obj: &Objective<'_>, x: &DVector<Complex64>, step_init: f64, shrink: f64) -> Result<Backtracked> {
    check_step(step_init)?;
    check_shrink(shrink)?;
    let r = obj.residual(x)?;
    let f_x = r.norm_squared();
    let grad = obj.gradient_from_residual(&r);
    let mut step = step_init;
    for shrinks in 0..=MAX_SHRINKS {
        let x_new = prox_from_gradient(x, &grad, step, obj.lambda_reg());
        let f_new = obj.eval_f(&x_new)?;
        let delta = &x_new - x;
        if quadratic_bound_holds(f_new, f_x, grad.as_view(), delta.as_view(), step) {
            return Ok(Backtracked { step, x_new, shrinks });
        }
        step *= shrink;
    }
    Err(Error::LineSearchFailure { shrinks: MAX_SHRINKS })
}

pub(crate) fn check_step(step: f64) -> Result<()> {
    if step.is_finite() && step > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("step size must be positive, got {step}")))
    }
}

pub(crate) fn check_shrink(shrink: f64) -> Result<()> {
    if shrink > 0.0 && shrink < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("step shrink factor must lie in (0, 1), got {shrink}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;
    use std::f64::consts::FRAC_PI_4;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_instance(n: usize, l: usize, seed: u64) -> (DMatrix<Complex64>, DVector<Complex64>, DVector<Complex64>) {
        let mut r = rng::stream(seed, 77, 0);
        let mut u = || r.random_range(-1.0..1.0);
        let a = DMatrix::from_fn(n, l, |_, _| c(u(), u()));
        let b = DVector::from_fn(n, |_, _| c(u(), u()));
        let x = DVector::from_fn(l, |_, _| c(u(), u()));
        (a, b, x)
    }

    // Naive double-loop reference for f and F.
    fn naive_f(a: &DMatrix<Complex64>, b: &DVector<Complex64>, x: &DVector<Complex64>) -> f64 {
        let mut total = 0.0;
        for i in 0..a.nrows() {
            let mut re = 0.0;
            let mut im = 0.0;
            for j in 0..a.ncols() {
                let (ar, ai) = (a[(i, j)].re, a[(i, j)].im);
                let (xr, xi) = (x[j].re, x[j].im);
                re += ar * xr - ai * xi;
                im += ar * xi + ai * xr;
            }
            re -= b[i].re;
            im -= b[i].im;
            total += re * re + im * im;
        }
        total
    }

    #[test]
    fn f_at_zero_is_measurement_energy() {
        let (a, b, _) = random_instance(6, 9, 1);
        let obj = Objective::new(&a, &b, 0.3).unwrap();
        let zero = DVector::zeros(9);
        assert!((obj.eval_f(&zero).unwrap() - b.norm_squared()).abs() < 1e-12);
        assert!((obj.eval_objective(&zero).unwrap() - b.norm_squared()).abs() < 1e-12);
    }

    #[test]
    fn identity_dictionary_fits_exactly() {
        let (_, b, _) = random_instance(5, 5, 2);
        let eye = DMatrix::<Complex64>::identity(5, 5);
        let obj = Objective::new(&eye, &b, 0.0).unwrap();
        assert_eq!(obj.eval_f(&b).unwrap(), 0.0);
        assert_eq!(obj.eval_objective(&b).unwrap(), obj.eval_f(&b).unwrap());
    }

    #[test]
    fn objective_matches_naive_summation() {
        for seed in 0..10 {
            let (a, b, x) = random_instance(29, 40, seed);
            let obj = Objective::new(&a, &b, 0.7).unwrap();
            let f_ref = naive_f(&a, &b, &x);
            let l1: f64 = x.iter().map(|z| (z.re * z.re + z.im * z.im).sqrt()).sum();
            assert!((obj.eval_f(&x).unwrap() - f_ref).abs() <= 1e-12 * f_ref);
            let big_ref = f_ref + 0.7 * l1;
            assert!((obj.eval_objective(&x).unwrap() - big_ref).abs() <= 1e-12 * big_ref);
        }
    }

    #[test]
    fn dimension_mismatches_are_errors() {
        let (a, b, _) = random_instance(4, 6, 3);
        let short = DVector::zeros(5);
        assert!(Objective::new(&a, &short, 1.0).is_err());
        let obj = Objective::new(&a, &b, 1.0).unwrap();
        assert!(matches!(obj.eval_f(&short), Err(Error::Dimension { expected: 6, found: 5 })));
        assert!(obj.grad_f(&short).is_err());
        assert!(Objective::new(&a, &b, -1.0).is_err());
        assert!(Objective::new(&a, &b, f64::NAN).is_err());
    }

    #[test]
    fn gradient_vanishes_at_exact_solution() {
        let (a, _, x) = random_instance(8, 8, 4);
        let b = &a * &x;
        let obj = Objective::new(&a, &b, 0.0).unwrap();
        assert!(obj.grad_f(&x).unwrap().norm() < 1e-12);
    }

    #[test]
    fn gradient_of_identity_with_zero_measurement_is_twice_x() {
        let (_, _, x) = random_instance(5, 5, 5);
        let eye = DMatrix::<Complex64>::identity(5, 5);
        let zero = DVector::zeros(5);
        let obj = Objective::new(&eye, &zero, 0.0).unwrap();
        assert!((obj.grad_f(&x).unwrap() - &x * c(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let h = 1e-6;
        for seed in 0..5 {
            let (a, b, x) = random_instance(10, 12, 10 + seed);
            let obj = Objective::new(&a, &b, 0.0).unwrap();
            let grad = obj.grad_f(&x).unwrap();
            for l in 0..12 {
                for (dir, part) in [(c(1.0, 0.0), 0), (c(0.0, 1.0), 1)] {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[l] += dir * h;
                    xm[l] -= dir * h;
                    let fd = (naive_f(&a, &b, &xp) - naive_f(&a, &b, &xm)) / (2.0 * h);
                    let analytic = if part == 0 { grad[l].re } else { grad[l].im };
                    assert!((fd - analytic).abs() <= 1e-6 * (1.0 + analytic.abs()), "{fd} vs {analytic}");
                }
            }
        }
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(c(2.0, 0.0), 0.5), c(1.5, 0.0));
        assert_eq!(soft_threshold(c(0.3, 0.0), 0.5), c(0.0, 0.0));
        assert_eq!(soft_threshold(c(-2.0, 0.0), 0.5), c(-1.5, 0.0));
        let z = soft_threshold(Complex64::from_polar(2.0, FRAC_PI_4), 0.5);
        assert!((z - Complex64::from_polar(1.5, FRAC_PI_4)).norm() < 1e-15);
    }

    #[test]
    fn soft_threshold_matches_grid_minimizer() {
        // argmin_z |z − x|²/(2α) + |z| by exhaustive search on a fine grid
        let x = Complex64::from_polar(2.0, FRAC_PI_4);
        let alpha = 0.5;
        let h = 0.002;
        let mut best = (f64::INFINITY, c(0.0, 0.0));
        for i in 0..=1500 {
            for j in 0..=1500 {
                let z = c(i as f64 * h, j as f64 * h);
                let v = (z - x).norm_sqr() / (2.0 * alpha) + z.norm();
                if v < best.0 {
                    best = (v, z);
                }
            }
        }
        let z = soft_threshold(x, alpha);
        assert!((z - best.1).norm() <= 2.0 * h, "{z} vs {}", best.1);
    }

    #[test]
    fn prox_step_without_regularization_is_gradient_step() {
        let (a, b, x) = random_instance(7, 9, 6);
        let obj = Objective::new(&a, &b, 0.0).unwrap();
        let step = 0.01;
        let expected = &x - obj.grad_f(&x).unwrap() * c(step, 0.0);
        assert!((prox_step(&obj, &x, step).unwrap() - expected).norm() < 1e-13);
        assert!(prox_step(&obj, &x, 0.0).is_err());
    }

    #[test]
    fn prox_step_of_zero_problem_is_zero() {
        let (a, _, _) = random_instance(4, 6, 7);
        let b = DVector::zeros(4);
        let obj = Objective::new(&a, &b, 0.4).unwrap();
        let x = DVector::zeros(6);
        assert_eq!(prox_step(&obj, &x, 0.1).unwrap(), x);
    }

    #[test]
    fn prox_step_minimizes_the_surrogate_per_coordinate() {
        // The surrogate Re⟨g, z − x⟩ + |z − x|²/(2α) + λ|z| separates by coordinate;
        // minimize each coordinate by grid search around the closed form.
        let (a, b, x) = random_instance(5, 4, 8);
        let obj = Objective::new(&a, &b, 2.0).unwrap();
        let step = 0.05;
        let grad = obj.grad_f(&x).unwrap();
        let z = prox_step(&obj, &x, step).unwrap();
        for l in 0..4 {
            let surrogate = |w: Complex64| (grad[l].conj() * (w - x[l])).re + (w - x[l]).norm_sqr() / (2.0 * step) + 2.0 * w.norm();
            let h = 2e-3;
            let mut best = (f64::INFINITY, c(0.0, 0.0));
            for i in -1500..=1500 {
                for j in -1500..=1500 {
                    let w = c(i as f64 * h, j as f64 * h);
                    let v = surrogate(w);
                    if v < best.0 {
                        best = (v, w);
                    }
                }
            }
            assert!((z[l] - best.1).norm() <= 2.0 * h, "coord {l}: {} vs {}", z[l], best.1);
        }
    }

    #[test]
    fn line_search_accepts_identical_point() {
        let (a, b, x) = random_instance(6, 8, 9);
        let obj = Objective::new(&a, &b, 0.2).unwrap();
        assert!(line_search_ok(&obj, &x, &x, 1e3).unwrap());
    }

    #[test]
    fn line_search_rejects_huge_step_on_steep_problem() {
        // A = 2I, b = 0, x = 1: f(x) = 4, ∇f = 8. With α = 100 the prox step
        // lands at x' = 1 − 800 = −799, f(x') = 4·799² far above the bound
        // 4 + 8·(−800) + 800²/200.
        let a = DMatrix::<Complex64>::identity(1, 1) * c(2.0, 0.0);
        let b = DVector::zeros(1);
        let obj = Objective::new(&a, &b, 0.0).unwrap();
        let x = DVector::from_element(1, c(1.0, 0.0));
        let x_new = prox_step(&obj, &x, 100.0).unwrap();
        assert!((x_new[0] - c(-799.0, 0.0)).norm() < 1e-9);
        assert!(!line_search_ok(&obj, &x, &x_new, 100.0).unwrap());
        // the bound holds exactly for α ≤ 1/L with L = 2‖AᴴA‖ = 8
        let x_ok = prox_step(&obj, &x, 1.0 / 8.0).unwrap();
        assert!(line_search_ok(&obj, &x, &x_ok, 1.0 / 8.0).unwrap());
    }

    #[test]
    fn lipschitz_step_always_passes() {
        for seed in 0..20 {
            let (a, b, x) = random_instance(12, 30, 100 + seed);
            let obj = Objective::new(&a, &b, 0.5).unwrap();
            let lip = 2.0 * linalg::spectral_norm_sqr(a.as_view());
            let step = 1.0 / lip;
            let x_new = prox_step(&obj, &x, step).unwrap();
            assert!(line_search_ok(&obj, &x, &x_new, step).unwrap());
        }
    }

    #[test]
    fn backtrack_keeps_a_valid_initial_step() {
        let (a, b, x) = random_instance(10, 20, 12);
        let obj = Objective::new(&a, &b, 0.5).unwrap();
        let lip = 2.0 * linalg::spectral_norm_sqr(a.as_view());
        let out = backtrack(&obj, &x, 1.0 / lip, 0.5).unwrap();
        assert_eq!(out.shrinks, 0);
        assert_eq!(out.step, 1.0 / lip);
    }

    #[test]
    fn backtrack_from_oversized_step_terminates_quickly() {
        for seed in 0..20 {
            let (a, b, x) = random_instance(10, 20, 200 + seed);
            let obj = Objective::new(&a, &b, 0.5).unwrap();
            let lip = 2.0 * linalg::spectral_norm_sqr(a.as_view());
            let out = backtrack(&obj, &x, 4.0 / lip, 0.5).unwrap();
            assert!(out.shrinks <= 2, "{} shrinks", out.shrinks);
            assert!(line_search_ok(&obj, &x, &out.x_new, out.step).unwrap());
        }
    }

    #[test]
    fn backtrack_rejects_bad_shrink_factor() {
        let (a, b, x) = random_instance(3, 3, 13);
        let obj = Objective::new(&a, &b, 0.5).unwrap();
        assert!(matches!(backtrack(&obj, &x, 1.0, 1.0), Err(Error::Config(_))));
        assert!(matches!(backtrack(&obj, &x, 1.0, 0.0), Err(Error::Config(_))));
        assert!(matches!(backtrack(&obj, &x, 1.0, -0.5), Err(Error::Config(_))));
    }

    #[test]
    fn backtrack_gives_up_on_non_finite_objective() {
        let a = DMatrix::from_element(1, 1, c(f64::MAX, 0.0));
        let b = DVector::zeros(1);
        let obj = Objective::new(&a, &b, 0.0).unwrap();
        let x = DVector::from_element(1, c(1.0, 0.0));
        assert!(matches!(backtrack(&obj, &x, 1.0, 0.5), Err(Error::LineSearchFailure { .. })));
    }

    proptest::proptest! {
        #[test]
        fn soft_threshold_subgradient_optimality(re in -10.0f64..10.0, im in -10.0f64..10.0, alpha in 0.0f64..5.0) {
            let x = c(re, im);
            let z = soft_threshold(x, alpha);
            if z != c(0.0, 0.0) {
                proptest::prop_assert!((z - x + z / z.norm() * alpha).norm() <= 1e-10);
            } else {
                proptest::prop_assert!(x.norm() <= alpha + 1e-12);
            }
        }

        #[test]
        fn soft_threshold_is_nonexpansive(
            a in (-10.0f64..10.0, -10.0f64..10.0),
            b in (-10.0f64..10.0, -10.0f64..10.0),
            alpha in 0.0f64..5.0,
        ) {
            let (x, y) = (c(a.0, a.1), c(b.0, b.1));
            let d = (soft_threshold(x, alpha) - soft_threshold(y, alpha)).norm();
            proptest::prop_assert!(d <= (x - y).norm() + 1e-12);
        }
    }
}

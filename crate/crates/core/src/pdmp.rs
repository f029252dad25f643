//! The MRCA-age processes `R` (slope −1, upward jumps) and `A` (slope +1,
//! downward jumps), their transition law, semigroup and generator.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numeric::{exp1, gumbel, gumbel_density};
use crate::path::PiecewisePath;
use crate::quadrature::{integrate, Tolerance, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdmpState {
    pub x: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Init {
    Level(f64),
    /// Gumbel draw `-log(-log U)`.
    Stationary,
}

impl Init {
    fn level<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Init::Level(x) => x,
            Init::Stationary => gumbel(rng),
        }
    }
}

/// Time until the next jump of `R` from level `x`: `log(1 + E e^x)`.
#[inline]
pub fn r_holding_time(x: f64, e: f64) -> f64 {
    if x > 0.0 {
        x + (e + (-x).exp()).ln()
    } else {
        (e * x.exp()).ln_1p()
    }
}

/// Landing level of an `A` jump from `x`: `-log(e^{-x} + E)`.
#[inline]
pub fn a_jump_target(x: f64, e: f64) -> f64 {
    -((-x).exp() + e).ln()
}

fn check_horizon(horizon: f64) -> Result<()> {
    if !(horizon > 0.0) {
        return domain(format!("horizon must be positive, got {horizon}"));
    }
    Ok(())
}

/// Path of `R` on `[t0, t0 + horizon]`.
pub fn simulate_r<G: Rng + ?Sized>(t0: f64, horizon: f64, init: Init, rng: &mut G) -> Result<PiecewisePath> {
    check_horizon(horizon)?;
    let end = t0 + horizon;
    let mut x = init.level(rng);
    let mut t = t0;
    let mut path = PiecewisePath::start(t, x);
    loop {
        let tau = r_holding_time(x, exp1(rng));
        if t + tau > end {
            break;
        }
        t += tau;
        let before = x - tau;
        x = before + exp1(rng);
        path.jump(t, before, x);
    }
    path.push(end, x - (end - t));
    Ok(path)
}

/// Path of `A` on `[t0, t0 + horizon]`.
pub fn simulate_a<G: Rng + ?Sized>(t0: f64, horizon: f64, init: Init, rng: &mut G) -> Result<PiecewisePath> {
    check_horizon(horizon)?;
    let end = t0 + horizon;
    let mut x = init.level(rng);
    let mut t = t0;
    let mut path = PiecewisePath::start(t, x);
    loop {
        let tau = exp1(rng);
        if t + tau > end {
            break;
        }
        t += tau;
        let before = x + tau;
        x = a_jump_target(before, exp1(rng));
        path.jump(t, before, x);
    }
    path.push(end, x + (end - t));
    Ok(path)
}

/// `R(t)` started from `x`, without recording the path.
pub fn sample_r_after<G: Rng + ?Sized>(x: f64, t: f64, rng: &mut G) -> f64 {
    let mut x = x;
    let mut left = t;
    loop {
        let tau = r_holding_time(x, exp1(rng));
        if tau >= left {
            return x - left;
        }
        left -= tau;
        x = x - tau + exp1(rng);
    }
}

/// `A(t)` started from `x`, without recording the path.
pub fn sample_a_after<G: Rng + ?Sized>(x: f64, t: f64, rng: &mut G) -> f64 {
    let mut x = x;
    let mut left = t;
    loop {
        let tau = exp1(rng);
        if tau >= left {
            return x + left;
        }
        left -= tau;
        x = a_jump_target(x + tau, exp1(rng));
    }
}

/// `P(R(t) <= y | R(0) = x)`.
pub fn transition_cdf_r(x: f64, t: f64, y: f64) -> f64 {
    if y < x - t {
        return 0.0;
    }
    (-(-y).exp() * (-(-t).exp_m1())).exp()
}

/// Mass of the atom `P(R(t) = x - t | R(0) = x)` (no jump by time `t`).
pub fn transition_atom_r(x: f64, t: f64) -> f64 {
    transition_cdf_r(x, t, x - t)
}

/// Rate density of an `R` jump from `x` to `y`: `e^{-y} 1{y >= x}`.
pub fn q_kernel(x: f64, y: f64) -> f64 {
    if y >= x {
        (-y).exp()
    } else {
        0.0
    }
}

/// Rate density of an `A` jump from `x` to `y`: `exp(e^{-x} - e^{-y} - y) 1{y <= x}`.
pub fn r_kernel(x: f64, y: f64) -> f64 {
    if y <= x {
        ((-x).exp() - (-y).exp() - y).exp()
    } else {
        0.0
    }
}

/// Stationary density `e^{-x} e^{-e^{-x}}`.
pub fn stationary_density(x: f64) -> f64 {
    gumbel_density(x)
}

/// Smooth test function with value and first derivative.
pub trait TestFunction: Sync {
    fn value(&self, y: f64) -> f64;
    fn derivative(&self, y: f64) -> f64;
}

/// `exp(-((y+1)_+)^3)`: equal to 1 left of −1, vanishing at +∞.
#[derive(Debug, Clone, Copy)]
pub struct SmoothStep;

impl TestFunction for SmoothStep {
    fn value(&self, y: f64) -> f64 {
        let u = (y + 1.0).max(0.0);
        (-u * u * u).exp()
    }
    fn derivative(&self, y: f64) -> f64 {
        let u = (y + 1.0).max(0.0);
        -3.0 * u * u * (-u * u * u).exp()
    }
}

/// `((y - 1/2)_+)^3 e^{-(y - 1/2)_+}`: zero left of 1/2, vanishing at +∞.
#[derive(Debug, Clone, Copy)]
pub struct Bump;

impl TestFunction for Bump {
    fn value(&self, y: f64) -> f64 {
        let u = (y - 0.5).max(0.0);
        u * u * u * (-u).exp()
    }
    fn derivative(&self, y: f64) -> f64 {
        let u = (y - 0.5).max(0.0);
        (3.0 * u * u - u * u * u) * (-u).exp()
    }
}

/// Constant function.
#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl TestFunction for Constant {
    fn value(&self, _: f64) -> f64 {
        self.0
    }
    fn derivative(&self, _: f64) -> f64 {
        0.0
    }
}

/// `E[f(R(t)) | R(0) = x]`: atom term plus the integral over the absolutely
/// continuous part, written in `v = e^{-y}`.
pub fn semigroup_apply<F: Fn(f64) -> f64>(f: F, x: f64, t: f64) -> Result<f64> {
    semigroup_apply_tol(f, x, t, DEFAULT_TOL)
}

pub fn semigroup_apply_tol<F: Fn(f64) -> f64>(f: F, x: f64, t: f64, tol: Tolerance) -> Result<f64> {
    if !(t > 0.0) {
        return domain(format!("semigroup needs t > 0, got {t}"));
    }
    let a = -(-t).exp_m1();
    let upper = (t - x).exp();
    let atom = (-upper * a).exp() * f(x - t);
    let g = |v: f64| if v <= 0.0 { 0.0 } else { f(-v.ln()) * a * (-v * a).exp() };
    // split near the origin, where f(-ln v) varies on a log scale
    let mid = upper.min(1e-3);
    let lower = integrate(&g, 0.0, mid, tol)?.value;
    let rest = integrate(&g, mid, upper, tol)?.value;
    Ok(atom + lower + rest)
}

/// `Af(x) = -f'(x) + ∫_x^∞ e^{-y}(f(y) - f(x)) dy`.
pub fn generator_apply<F: TestFunction + ?Sized>(f: &F, x: f64) -> Result<f64> {
    generator_apply_tol(f, x, DEFAULT_TOL)
}

pub fn generator_apply_tol<F: TestFunction + ?Sized>(f: &F, x: f64, tol: Tolerance) -> Result<f64> {
    let fx = f.value(x);
    let upper = (-x).exp();
    let g = |v: f64| if v <= 0.0 { 0.0 } else { f.value(-v.ln()) - fx };
    let mid = upper.min(1e-3);
    let jump = integrate(&g, 0.0, mid, tol)?.value + integrate(&g, mid, upper, tol)?.value;
    Ok(-f.derivative(x) + jump)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn atom_example() {
        let m = transition_atom_r(0.0, 2f64.ln());
        assert_abs_diff_eq!(m, (-1f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn cdf_large_t_is_gumbel() {
        for y in [-1.0, 0.0, 2.0] {
            assert_abs_diff_eq!(
                transition_cdf_r(3.0, 60.0, y),
                crate::numeric::gumbel_cdf(y),
                epsilon = 1e-15
            );
        }
        assert_eq!(transition_cdf_r(1.0, 0.5, 0.4), 0.0);
    }

    #[test]
    fn semigroup_of_constant() {
        for &(x, t) in &[(-2.0, 0.1), (0.0, 1.0), (3.0, 0.01), (1.0, 7.0)] {
            assert_abs_diff_eq!(semigroup_apply(|_| 1.0, x, t).unwrap(), 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn generator_of_constant() {
        assert_abs_diff_eq!(generator_apply(&Constant(2.5), 0.3).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn holding_time_forms_agree() {
        for &x in &[-30.0, -1.0, 0.0, 1e-9, 2.0, 40.0] {
            let e = 0.7;
            let direct = (1.0 + e * f64::exp(x)).ln();
            assert_abs_diff_eq!(r_holding_time(x, e), direct, epsilon = 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn kernels_vanish_on_wrong_side() {
        assert_eq!(q_kernel(1.0, 0.5), 0.0);
        assert_eq!(r_kernel(0.5, 1.0), 0.0);
    }

    #[test]
    fn slopes_are_exact() {
        let mut rng = crate::rng::seeded(12);
        let r = simulate_r(0.0, 20.0, Init::Stationary, &mut rng).unwrap();
        let a = simulate_a(0.0, 20.0, Init::Stationary, &mut rng).unwrap();
        for (p, s) in [(r, -1.0), (a, 1.0)] {
            for w in p.knots.windows(2) {
                if !w[1].is_jump && w[1].time > w[0].time {
                    let slope = (w[1].value - w[0].value) / (w[1].time - w[0].time);
                    assert_abs_diff_eq!(slope, s, epsilon = 1e-9);
                }
            }
        }
    }
}

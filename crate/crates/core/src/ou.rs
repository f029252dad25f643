//! Stationary law of Ornstein–Uhlenbeck-type processes driven by a spectrally
//! negative Lévy process with jump density proportional to `x^{-2}`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numeric::EULER_GAMMA;
use crate::quadrature::{integrate, Tolerance, DEFAULT_TOL};

/// Lévy density `scale · x^{-2}` on `(-∞, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegativeInverseSquare {
    pub scale: f64,
}

impl NegativeInverseSquare {
    pub fn density(&self, x: f64) -> f64 {
        if x < 0.0 {
            self.scale / (x * x)
        } else {
            0.0
        }
    }

    /// `ν((-∞, -w])` for `w > 0`, by quadrature of the density in `t = 1/|x|`,
    /// which keeps the integrand bounded for every `w`.
    pub fn tail(&self, w: f64, tol: Tolerance) -> Result<f64> {
        if !(w > 0.0) {
            return domain("tail needs w > 0");
        }
        if w.is_infinite() {
            return Ok(0.0);
        }
        let g = |t: f64| {
            if t <= 0.0 {
                0.0
            } else {
                self.density(-1.0 / t) / (t * t)
            }
        };
        Ok(integrate(g, 0.0, 1.0 / w, tol)?.value)
    }
}

/// Generating quadruple `(a, b, ν, c)`: drift, Gaussian coefficient, Lévy
/// measure and mean-reversion rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuTypeSpec {
    pub a: f64,
    pub b: f64,
    pub nu: NegativeInverseSquare,
    pub c: f64,
}

impl OuTypeSpec {
    /// The branch-length limit: `(2 - γ, 0, x^{-2} 1_{(-∞,0)}, 1)`.
    pub fn branch_length_limit() -> Self {
        OuTypeSpec {
            a: 2.0 - EULER_GAMMA,
            b: 0.0,
            nu: NegativeInverseSquare { scale: 1.0 },
            c: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return domain("mean-reversion rate must be positive");
        }
        if !(self.nu.scale >= 0.0) || !(self.b >= 0.0) {
            return domain("Lévy density scale and Gaussian coefficient must be non-negative");
        }
        // ∫_{|x|>2} log|x| scale x^{-2} dx = scale (1 + log 2)/2 is finite
        Ok(())
    }

    /// `ρ((-∞, -z]) = (1/c) ∫_0^∞ ν((-∞, -z e^s]) ds`, by nested quadrature
    /// after `v = e^{-s}`.
    pub fn rho_tail(&self, z: f64) -> Result<f64> {
        self.validate()?;
        if !(z > 0.0) {
            return domain("rho_tail needs z > 0");
        }
        let inner = Tolerance::absolute(1e-13).with_rel(1e-13);
        let mut failure = None;
        let outer = integrate(
            |v| {
                if v <= 0.0 {
                    return 0.0;
                }
                match self.nu.tail(z / v, inner) {
                    Ok(t) => t / v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NAN
                    }
                }
            },
            0.0,
            1.0,
            Tolerance::absolute(1e-12),
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(outer?.value / self.c)
    }

    /// Density of `ρ`. For this family `ρ = ν / c`.
    pub fn rho_density(&self, x: f64) -> f64 {
        self.nu.density(x) / self.c
    }

    /// `α = (a + ν((1, ∞)) − ν((−∞, −1)))/c`.
    pub fn alpha(&self) -> Result<f64> {
        self.validate()?;
        let left = self.nu.tail(1.0, Tolerance::absolute(1e-14))?;
        Ok((self.a - left) / self.c)
    }

    pub fn beta(&self) -> f64 {
        self.b / (2.0 * self.c)
    }
}

/// `∫_0^∞ (1 − e^{−iuw} − iuw 1{w<=1}) w^{−2} dw`.
fn jump_exponent(u: f64, tol: Tolerance) -> Result<Complex64> {
    if u == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    // near part, with series for small uw to avoid cancellation
    let re_near = |w: f64| {
        let x = u * w;
        if x.abs() < 1e-3 {
            u * u * (0.5 - x * x / 24.0)
        } else {
            (1.0 - x.cos()) / (w * w)
        }
    };
    let im_near = |w: f64| {
        let x = u * w;
        if x.abs() < 1e-3 {
            -u * u * x / 6.0 * (1.0 - x * x / 20.0)
        } else {
            (x.sin() - x) / (w * w)
        }
    };
    let near = Complex64::new(
        integrate(re_near, 0.0, 1.0, tol)?.value,
        integrate(im_near, 0.0, 1.0, tol)?.value,
    );

    // far part: 1 − ∫_1^∞ e^{−iuw} w^{−2} dw
    let period = 2.0 * PI / u.abs();
    let panels = ((2000.0 / u.abs()) / period).ceil().max(1.0) as usize;
    let mut far = Complex64::new(0.0, 0.0);
    let mut lo = 1.0;
    for _ in 0..panels {
        let hi = lo + period;
        let re = integrate(|w| (u * w).cos() / (w * w), lo, hi, tol)?.value;
        let im = integrate(|w| -(u * w).sin() / (w * w), lo, hi, tol)?.value;
        far += Complex64::new(re, im);
        lo = hi;
    }
    // ∫_W^∞ e^{−iuw} w^{−m} dw = W^{−m} e^{−iuW}/(iu) − (m/(iu)) ∫_W^∞ e^{−iuw} w^{−m−1} dw
    let w = lo;
    let iu = Complex64::new(0.0, u);
    let mut term = Complex64::new(0.0, -u * w).exp() / (iu * w * w);
    let mut tail = Complex64::new(0.0, 0.0);
    for m in 2..12 {
        tail += term;
        term *= -(m as f64) / (iu * w);
    }
    far += tail;
    Ok(near + Complex64::new(1.0, 0.0) - far)
}

/// Characteristic function of the stationary law at frequency `u`.
pub fn ou_stationary_cf(spec: &OuTypeSpec, u: f64) -> Result<Complex64> {
    ou_stationary_cf_tol(spec, u, DEFAULT_TOL)
}

pub fn ou_stationary_cf_tol(spec: &OuTypeSpec, u: f64, tol: Tolerance) -> Result<Complex64> {
    spec.validate()?;
    if u == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let k = spec.nu.scale / spec.c;
    let exponent = Complex64::new(-spec.beta() * u * u, spec.alpha()? * u) - k * jump_exponent(u, tol)?;
    Ok(exponent.exp())
}

/// `exp(−(π/2)|u| + iu log|u|)`.
pub fn stable_cf(u: f64) -> Complex64 {
    if u == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    Complex64::new(-0.5 * PI * u.abs(), u * u.abs().ln()).exp()
}

/// CSV `u,re,im`.
pub fn write_cf_csv<W: Write>(mut w: W, rows: &[(f64, Complex64)]) -> Result<()> {
    writeln!(w, "u,re,im")?;
    for (u, z) in rows {
        writeln!(w, "{u:?},{:?},{:?}", z.re, z.im)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cf_at_zero() {
        let s = OuTypeSpec::branch_length_limit();
        assert_eq!(ou_stationary_cf(&s, 0.0).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn cf_matches_closed_form() {
        let s = OuTypeSpec::branch_length_limit();
        for u in [-2.0, -0.3, 0.5, 1.0, 2.0, 5.0] {
            let got = ou_stationary_cf(&s, u).unwrap();
            let want = stable_cf(u);
            assert!((got - want).norm() < 1e-8, "u = {u}: {got} vs {want}");
        }
        let m = ou_stationary_cf(&s, 1.0).unwrap().norm();
        assert!((m - (-PI / 2.0).exp()).abs() < 1e-8);
    }

    #[test]
    fn rho_tail_identity() {
        let s = OuTypeSpec::branch_length_limit();
        for z in [0.5, 1.0, 2.0] {
            let r = s.rho_tail(z).unwrap();
            assert!((r - 1.0 / z).abs() < 1e-8, "z = {z}: {r}");
        }
    }

    #[test]
    fn alpha_of_limit() {
        let a = OuTypeSpec::branch_length_limit().alpha().unwrap();
        assert!((a - (1.0 - EULER_GAMMA)).abs() < 1e-12);
    }

    #[test]
    fn invalid_spec() {
        let mut s = OuTypeSpec::branch_length_limit();
        s.c = 0.0;
        assert!(ou_stationary_cf(&s, 1.0).is_err());
    }
}

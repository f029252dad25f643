//! Small numerical helpers shared by the rate tables and the integrands.

use rand::Rng;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

pub use statrs::function::gamma::ln_gamma;

/// `H_n = 1 + 1/2 + ... + 1/n`. Direct summation (smallest terms first) up
/// to 1000, asymptotic expansion beyond.
pub fn harmonic(n: u64) -> f64 {
    if n <= 1000 {
        return (1..=n).rev().map(|k| 1.0 / k as f64).sum();
    }
    let x = n as f64;
    let r = 1.0 / (x * x);
    x.ln() + EULER_GAMMA + 0.5 / x - r * (1.0 / 12.0 - r * (1.0 / 120.0 - r / 252.0))
}

/// `ln C(n, k)` through log-gamma.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `C(n, k)` as an exact integer when it fits in `u128`.
pub fn choose_exact(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k as u128 {
        // acc * (n - k + i) is divisible by i at every step
        acc = acc.checked_mul(n as u128 - k as u128 + i)? / i;
    }
    Some(acc)
}

/// `C(n, k)` in floating point: exact integer arithmetic while it fits,
/// then a running product, then log-gamma once the product would overflow.
pub fn choose(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    if let Some(c) = choose_exact(n, k) {
        return c as f64;
    }
    let k = k.min(n - k);
    if n <= 1000 {
        let mut acc = 1.0f64;
        for i in 1..=k {
            acc *= (n - k + i) as f64 / i as f64;
        }
        acc
    } else {
        ln_choose(n, k).exp()
    }
}

/// `e^z - 1 - z` without cancellation near zero.
pub fn exp_m1_minus_z(z: f64) -> f64 {
    if z.abs() < 0.5 {
        let mut term = z * z / 2.0;
        let mut sum = term;
        let mut m = 2.0;
        while term.abs() > 1e-18 * sum.abs() {
            m += 1.0;
            term *= z / m;
            sum += term;
        }
        sum
    } else {
        z.exp_m1() - z
    }
}

/// `ln(1 - y) + y` for `0 <= y < 1`, accurate for small `y`.
pub fn ln1m_plus_y(y: f64) -> f64 {
    if y < 0.25 {
        let mut pow = y * y;
        let mut sum = 0.0;
        let mut m = 2.0;
        loop {
            let term = pow / m;
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
            pow *= y;
            m += 1.0;
        }
        -sum
    } else {
        (-y).ln_1p() + y
    }
}

/// Uniform on `(0, 1]`; safe to invert through `ln` or `1/u`.
#[inline]
pub fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

#[inline]
pub fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(rand_distr::Exp1)
}

/// Gumbel draw `-ln(-ln U)`, CDF `exp(-e^{-y})`.
#[inline]
pub fn gumbel<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    -(exp1(rng)).ln()
}

pub fn gumbel_cdf(y: f64) -> f64 {
    (-(-y).exp()).exp()
}

pub fn gumbel_density(y: f64) -> f64 {
    (-y - (-y).exp()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn harmonic_small() {
        assert_eq!(harmonic(0), 0.0);
        assert_relative_eq!(harmonic(4), 25.0 / 12.0, max_relative = 1e-15);
    }

    #[test]
    fn harmonic_expansion_matches_sum() {
        for n in [1001u64, 1500, 5000, 100_000] {
            let direct: f64 = (1..=n).rev().map(|k| 1.0 / k as f64).sum();
            assert_relative_eq!(harmonic(n), direct, max_relative = 1e-14);
        }
    }

    #[test]
    fn choose_paths_agree() {
        assert_eq!(choose(10, 3), 120.0);
        assert_eq!(choose_exact(20, 10), Some(184_756));
        assert_eq!(choose_exact(300, 150), None);
        // running-product regime against log-gamma
        let direct = choose(500, 250);
        let via_log = ln_choose(500, 250).exp();
        assert_relative_eq!(direct, via_log, max_relative = 1e-11);
        assert_relative_eq!(choose(2000, 3), 2000.0 * 1999.0 * 1998.0 / 6.0, max_relative = 1e-11);
    }

    #[test]
    fn series_helpers_match_direct_forms() {
        for &z in &[-3.0f64, -0.4, -1e-3, 1e-6, 0.3, 2.0] {
            let direct = z.exp() - 1.0 - z;
            assert_relative_eq!(exp_m1_minus_z(z), direct, max_relative = 1e-6);
        }
        for &y in &[1e-4f64, 0.1, 0.24, 0.3, 0.9] {
            let direct = (1.0 - y).ln() + y;
            assert_relative_eq!(ln1m_plus_y(y), direct, max_relative = 1e-6);
        }
        assert_relative_eq!(exp_m1_minus_z(1e-8), 5e-17, max_relative = 1e-7);
    }
}

//! Goodness-of-fit statistics and summary helpers.

use num_complex::Complex64;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// KS critical value coefficient at significance ~0.001.
pub const KS_COEF: f64 = 1.95;

/// Chi-square cells with expected count below this are pooled.
pub const MIN_EXPECTED: f64 = 5.0;

/// One-sample Kolmogorov–Smirnov distance `sup |F_m - F|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    assert!(!samples.is_empty(), "ks_statistic needs at least one sample");
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / m - f).max(f - i as f64 / m);
    }
    d
}

pub fn ks_threshold(m: usize) -> f64 {
    KS_COEF / (m as f64).sqrt()
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (m, n) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / m - j as f64 / n).abs());
    }
    d
}

pub fn ks_two_sample_threshold(m: usize, n: usize) -> f64 {
    let (m, n) = (m as f64, n as f64);
    KS_COEF * ((m + n) / (m * n)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    /// 0.999 quantile of the reference distribution.
    pub critical: f64,
}

impl ChiSquare {
    pub fn passes(&self) -> bool {
        self.statistic <= self.critical
    }
}

/// Pools adjacent cells (in the given order) until each has expected count
/// at least [`MIN_EXPECTED`]; a short final run is folded into its predecessor.
fn pool(observed: &[f64], expected: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut o_out = Vec::new();
    let mut e_out = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &e) in observed.iter().zip(expected) {
        o_acc += o;
        e_acc += e;
        if e_acc >= MIN_EXPECTED {
            o_out.push(o_acc);
            e_out.push(e_acc);
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        if let (Some(lo), Some(le)) = (o_out.last_mut(), e_out.last_mut()) {
            *lo += o_acc;
            *le += e_acc;
        } else {
            o_out.push(o_acc);
            e_out.push(e_acc);
        }
    }
    (o_out, e_out)
}

fn critical(dof: usize) -> f64 {
    if dof == 0 {
        return 0.0;
    }
    ChiSquared::new(dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.999)
}

/// Pearson goodness of fit of `counts` against probabilities `probs`.
pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> ChiSquare {
    assert_eq!(counts.len(), probs.len());
    let total: u64 = counts.iter().sum();
    let observed: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let expected: Vec<f64> = probs.iter().map(|p| p * total as f64).collect();
    let (o, e) = pool(&observed, &expected);
    let statistic = o
        .iter()
        .zip(&e)
        .map(|(o, e)| if *e > 0.0 { (o - e).powi(2) / e } else { 0.0 })
        .sum();
    let dof = o.len().saturating_sub(1);
    ChiSquare {
        statistic,
        dof,
        critical: critical(dof),
    }
}

/// Chi-square homogeneity test for two count vectors over the same cells.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> ChiSquare {
    assert_eq!(a.len(), b.len());
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let n = (na + nb) as f64;
    // pool on the smaller expected margin
    let scale = na.min(nb) as f64 / n;
    let scaled: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x + y) as f64 * scale).collect();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut xa, mut xb, mut acc) = (0.0, 0.0, 0.0);
    for ((x, y), s) in a.iter().zip(b).zip(&scaled) {
        xa += *x as f64;
        xb += *y as f64;
        acc += s;
        if acc >= MIN_EXPECTED {
            cells.push((xa, xb));
            xa = 0.0;
            xb = 0.0;
            acc = 0.0;
        }
    }
    if xa + xb > 0.0 {
        if let Some(last) = cells.last_mut() {
            last.0 += xa;
            last.1 += xb;
        } else {
            cells.push((xa, xb));
        }
    }
    let (fa, fb) = (na as f64 / n, nb as f64 / n);
    let statistic = cells
        .iter()
        .map(|&(x, y)| {
            let m = x + y;
            let (ea, eb) = (m * fa, m * fb);
            (x - ea).powi(2) / ea + (y - eb).powi(2) / eb
        })
        .sum();
    let dof = cells.len().saturating_sub(1);
    ChiSquare {
        statistic,
        dof,
        critical: critical(dof),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    /// `|mean - target| / se`; infinite when `se == 0` and the mean is off.
    pub fn z(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.se
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let rough = xs.iter().sum::<f64>() / m;
    // one refinement pass removes the rounding of the plain sum
    rough + xs.iter().map(|x| x - rough).sum::<f64>() / m
}

pub fn mean_se(xs: &[f64]) -> MeanSe {
    let m = xs.len() as f64;
    let mean = mean(xs);
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    MeanSe {
        mean,
        se: (var / m).sqrt(),
    }
}

pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let mean = mean(xs);
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfEstimate {
    pub value: Complex64,
    pub se_re: f64,
    pub se_im: f64,
    /// Standard error of `|value|` (delta method, covariance included).
    pub se_modulus: f64,
}

/// Mean of `e^{iux}` with standard errors of both components.
pub fn empirical_cf(samples: &[f64], u: f64) -> CfEstimate {
    assert!(!samples.is_empty());
    let (re, im): (Vec<f64>, Vec<f64>) = samples
        .iter()
        .map(|x| {
            let (s, c) = (u * x).sin_cos();
            (c, s)
        })
        .unzip();
    let r = mean_se(&re);
    let i = mean_se(&im);
    let value = Complex64::new(r.mean, i.mean);
    let norm = value.norm();
    let se_modulus = if norm == 0.0 {
        r.se.hypot(i.se)
    } else {
        let (a, b) = (r.mean / norm, i.mean / norm);
        let proj: Vec<f64> = re.iter().zip(&im).map(|(c, s)| a * c + b * s).collect();
        mean_se(&proj).se
    };
    CfEstimate {
        value,
        se_re: r.se,
        se_im: i.se,
        se_modulus,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{gumbel, gumbel_cdf};
    use crate::rng::seeded;

    #[test]
    fn ks_single_point() {
        assert_eq!(ks_statistic(&[0.5], |x| x.clamp(0.0, 1.0)), 0.5);
    }

    #[test]
    fn ks_at_quantiles() {
        let m = 200;
        let xs: Vec<f64> = (1..=m).map(|i| i as f64 / (m + 1) as f64).collect();
        let d = ks_statistic(&xs, |x| x);
        assert!(d <= 1.0 / (m + 1) as f64 + 1.0 / m as f64);
    }

    #[test]
    fn ks_gumbel_draws() {
        let mut rng = seeded(3);
        let xs: Vec<f64> = (0..100_000).map(|_| gumbel(&mut rng)).collect();
        assert!(ks_statistic(&xs, gumbel_cdf) < ks_threshold(xs.len()));
    }

    #[test]
    fn two_sample_identical_is_zero() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_two_sample(&a, &a), 0.0);
        assert_eq!(ks_two_sample(&[0.0], &[1.0]), 1.0);
    }

    #[test]
    fn chi_square_perfect_fit() {
        let c = chi_square_gof(&[750, 250], &[0.75, 0.25]);
        assert_eq!(c.statistic, 0.0);
        assert_eq!(c.dof, 1);
        assert!((c.critical - 10.827_566_170_662_733).abs() < 1e-6);
    }

    #[test]
    fn chi_square_pools_sparse_cells() {
        let c = chi_square_gof(&[50, 40, 9, 1, 0], &[0.5, 0.4, 0.09, 0.009, 0.001]);
        assert_eq!(c.dof, 2);
    }

    #[test]
    fn cf_constant_and_zero() {
        let c = empirical_cf(&[2.0; 10], 0.7);
        assert!((c.value - Complex64::new(0.0, 1.4).exp()).norm() < 1e-15);
        assert_eq!(c.se_re, 0.0);
        let z = empirical_cf(&[1.0, -3.0, 8.0], 0.0);
        assert_eq!(z.value, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn median_even_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}

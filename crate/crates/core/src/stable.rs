//! Index-1 stable process with jumps below `eps` removed and compensated by
//! drift, plus the functionals built on it: the two-parameter increments, the
//! limiting block-count path `Y` and the branch-length process `L`.

use rand::{Rng, RngCore, SeedableRng};
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::numeric::{open_uniform, EULER_GAMMA};
use crate::path::PiecewisePath;
use crate::rng::SimRng;

/// Default truncation for standalone sampling.
pub const DEFAULT_EPS: f64 = 1e-6;

/// Default tail horizon for `L`.
pub const DEFAULT_TAIL: f64 = 40.0;

/// Compensating drift `1 - γ - log eps`.
pub fn drift_for(eps: f64) -> f64 {
    1.0 - EULER_GAMMA - eps.ln()
}

/// Path `S(t) = drift·t − Σ_{t_j <= t} x_j` on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StablePathTruncated {
    pub eps: f64,
    pub horizon: f64,
    pub drift: f64,
    pub times: Vec<f64>,
    pub sizes: Vec<f64>,
    /// `cum[k] = Σ_{j<k} x_j`.
    #[serde(skip)]
    cum: Vec<f64>,
    /// `disc[k] = Σ_{j<k} e^{-t_j} x_j`.
    #[serde(skip)]
    disc: Vec<f64>,
}

impl StablePathTruncated {
    /// Builds a path from an explicit jump list (sorted by time).
    pub fn from_jumps(eps: f64, horizon: f64, jumps: &[(f64, f64)]) -> Result<Self> {
        if !(eps > 0.0) || !(horizon > 0.0) {
            return domain("need eps > 0 and horizon > 0");
        }
        let mut cum = Vec::with_capacity(jumps.len() + 1);
        let mut disc = Vec::with_capacity(jumps.len() + 1);
        cum.push(0.0);
        disc.push(0.0);
        let (mut c, mut d) = (0.0, 0.0);
        let mut prev = f64::NEG_INFINITY;
        for &(t, x) in jumps {
            if t <= prev {
                return Err(Error::NonMonotoneTime { prev, next: t });
            }
            if !(0.0..=horizon).contains(&t) {
                return Err(Error::OutOfWindow {
                    t,
                    lo: 0.0,
                    hi: horizon,
                });
            }
            if !(x > eps) {
                return domain(format!("jump {x} not above eps = {eps}"));
            }
            prev = t;
            c += x;
            d += (-t).exp() * x;
            cum.push(c);
            disc.push(d);
        }
        Ok(StablePathTruncated {
            eps,
            horizon,
            drift: drift_for(eps),
            times: jumps.iter().map(|j| j.0).collect(),
            sizes: jumps.iter().map(|j| j.1).collect(),
            cum,
            disc,
        })
    }

    pub fn jump_count(&self) -> usize {
        self.times.len()
    }

    /// Number of jumps at times `<= t`.
    fn upto(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t)
    }

    /// Number of jumps at times `< t`.
    fn before(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s < t)
    }

    /// `S(t)` (right-continuous).
    pub fn value(&self, t: f64) -> f64 {
        self.drift * t - self.cum[self.upto(t)]
    }

    /// `S(t-)`.
    pub fn left_limit(&self, t: f64) -> f64 {
        self.drift * t - self.cum[self.before(t)]
    }

    /// Size of the jump exactly at `t`, or 0.
    pub fn jump_at(&self, t: f64) -> f64 {
        let i = self.before(t);
        match self.times.get(i) {
            Some(&s) if s == t => self.sizes[i],
            _ => 0.0,
        }
    }

    /// Evaluates the path at every grid point, as `value` would.
    pub fn values(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&t| self.value(t)).collect()
    }

    /// `Σ_{a <= t_j <= b} e^{-(t_j - a)} x_j`.
    fn discounted(&self, a: f64, b: f64, include_a: bool) -> f64 {
        let lo = if include_a { self.before(a) } else { self.upto(a) };
        let hi = self.upto(b);
        if hi <= lo {
            return 0.0;
        }
        // short ranges are summed directly to avoid cancellation
        if hi - lo <= 64 {
            return (lo..hi).map(|j| (a - self.times[j]).exp() * self.sizes[j]).sum();
        }
        a.exp() * (self.disc[hi] - self.disc[lo])
    }
}

/// Jump times Poisson with rate `1/eps` on `[0, horizon]`, sizes `eps/U`.
pub fn simulate_stable<R: Rng + ?Sized>(eps: f64, horizon: f64, rng: &mut R) -> Result<StablePathTruncated> {
    if !(eps > 0.0) || !(horizon > 0.0) {
        return domain("need eps > 0 and horizon > 0");
    }
    let count = Poisson::new(horizon / eps)
        .map_err(|e| Error::Domain(e.to_string()))?
        .sample(rng) as usize;
    let mut times: Vec<f64> = (0..count).map(|_| horizon * rng.random::<f64>()).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let jumps: Vec<(f64, f64)> = times.into_iter().map(|t| (t, eps / open_uniform(rng))).collect();
    StablePathTruncated::from_jumps(eps, horizon, &jumps)
}

/// `Σ_{j<count} eps/U_j` with four interleaved generators seeded from `rng`.
fn sum_of_inverse_uniforms<R: Rng + ?Sized>(count: u64, rng: &mut R) -> f64 {
    let mut lanes: [SimRng; 4] = std::array::from_fn(|_| SimRng::seed_from_u64(rng.next_u64()));
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    let inv = |x: u64| 1.0 / (((x >> 11) + 1) as f64 * SCALE);
    let mut acc = [0.0f64; 4];
    let full = count / 4;
    for _ in 0..full {
        acc[0] += inv(lanes[0].next_u64());
        acc[1] += inv(lanes[1].next_u64());
        acc[2] += inv(lanes[2].next_u64());
        acc[3] += inv(lanes[3].next_u64());
    }
    for i in 0..(count % 4) as usize {
        acc[i] += inv(lanes[i].next_u64());
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

/// `S(t)` alone, without materialising the jump list.
pub fn sample_stable_endpoint<R: Rng + ?Sized>(eps: f64, t: f64, rng: &mut R) -> Result<f64> {
    if !(eps > 0.0) || !(t > 0.0) {
        return domain("need eps > 0 and t > 0");
    }
    let count = Poisson::new(t / eps)
        .map_err(|e| Error::Domain(e.to_string()))?
        .sample(rng) as u64;
    Ok(drift_for(eps) * t - eps * sum_of_inverse_uniforms(count, rng))
}

/// `L(0)` for a fresh path, without storing it.
pub fn sample_length_at_zero<R: Rng + ?Sized>(eps: f64, tail: f64, rng: &mut R) -> Result<f64> {
    if !(eps > 0.0) || !(tail > 0.0) {
        return domain("need eps > 0 and tail > 0");
    }
    let count = Poisson::new(tail / eps)
        .map_err(|e| Error::Domain(e.to_string()))?
        .sample(rng) as u64;
    let mut acc = 0.0;
    for _ in 0..count {
        let tau = tail * rng.random::<f64>();
        acc += (-tau).exp() * eps / open_uniform(rng);
    }
    Ok(1.0 + drift_for(eps) * (-(-tail).exp_m1()) - acc)
}

/// Stable path seen from base time `present`: offset `s` looks back into the
/// past, `t` runs forward from `present - s`.
#[derive(Debug, Clone)]
pub struct TwoParameterStable {
    pub base: StablePathTruncated,
    pub present: f64,
}

impl TwoParameterStable {
    /// Base path on `[0, present + ahead]`.
    pub fn simulate<R: Rng + ?Sized>(eps: f64, present: f64, ahead: f64, rng: &mut R) -> Result<Self> {
        if !(present >= 0.0) || !(ahead > 0.0) {
            return domain("need present >= 0 and ahead > 0");
        }
        Ok(TwoParameterStable {
            base: simulate_stable(eps, present + ahead, rng)?,
            present,
        })
    }

    pub fn from_base(base: StablePathTruncated, present: f64) -> Result<Self> {
        if !(0.0..=base.horizon).contains(&present) {
            return Err(Error::OutOfWindow {
                t: present,
                lo: 0.0,
                hi: base.horizon,
            });
        }
        Ok(TwoParameterStable { base, present })
    }

    fn check(&self, s: f64, t: f64) -> Result<f64> {
        let u = self.present - s;
        if s < 0.0 || u < 0.0 || t < 0.0 || u + t > self.base.horizon {
            return Err(Error::OutOfWindow {
                t: u + t,
                lo: 0.0,
                hi: self.base.horizon,
            });
        }
        Ok(u)
    }

    /// `S(s, t) = S(T - s + t) - S(T - s)` on the base path.
    pub fn increment(&self, s: f64, t: f64) -> Result<f64> {
        let u = self.check(s, t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok(self.base.value(u + t) - self.base.value(u))
    }

    /// Jump size exactly at base time `T - s`.
    pub fn jump(&self, s: f64) -> Result<f64> {
        let u = self.check(s, 0.0)?;
        Ok(self.base.jump_at(u))
    }

    /// `L` evaluated at base time `u` (right-continuous in `s = T - u`).
    fn length_base(&self, u: f64, tail: f64, right: bool) -> f64 {
        1.0 + self.base.drift * (-(-tail).exp_m1()) - self.base.discounted(u, u + tail, right)
    }

    /// `L(s) = -J(s) + 1 + ∫_0^tail e^{-t} dS(s, t)`.
    pub fn length(&self, s: f64, tail: f64) -> Result<f64> {
        if tail < 20.0 {
            return domain(format!("tail horizon {tail} is below 20"));
        }
        let u = self.check(s, tail)?;
        Ok(self.length_base(u, tail, true))
    }

    /// `Z(t) = S(t, t) + t - J(t)`.
    pub fn z(&self, t: f64) -> Result<f64> {
        let u = self.check(t, t)?;
        Ok(self.z_base(u))
    }

    fn z_base(&self, u: f64) -> f64 {
        let t = self.present - u;
        let jumps = self.base.cum[self.base.upto(self.present)] - self.base.cum[self.base.before(u)];
        (self.base.drift + 1.0) * t - jumps
    }
}

/// `L(s)` from a two-parameter path with the default tail horizon.
pub fn limit_length(path: &TwoParameterStable, s: f64, tail: f64) -> Result<f64> {
    path.length(s, tail)
}

/// `L` on `s ∈ [0, horizon]` as a path in `s`: grid nodes of spacing `h` plus a
/// jump node at every jump of the base path inside the window. Between nodes
/// the path interpolates linearly.
pub fn length_path(path: &TwoParameterStable, horizon: f64, h: f64, tail: f64) -> Result<PiecewisePath> {
    if !(h > 0.0) || !(horizon > 0.0) {
        return domain("need h > 0 and horizon > 0");
    }
    if tail < 20.0 {
        return domain(format!("tail horizon {tail} is below 20"));
    }
    path.check(horizon, tail)?;
    let present = path.present;
    let steps = (horizon / h).round() as usize;
    let mut nodes: Vec<(f64, bool)> = (0..=steps).map(|i| ((i as f64 * h).min(horizon), false)).collect();
    let lo = path.base.before(present - horizon);
    let hi = path.base.upto(present);
    nodes.extend(path.base.times[lo..hi].iter().map(|&u| (present - u, true)));
    // a jump sorts before a grid node at the same time, which is then skipped
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    let mut out = PiecewisePath::new();
    for (s, is_jump) in nodes {
        let u = present - s;
        if is_jump {
            out.jump(s, path.length_base(u, tail, false), path.length_base(u, tail, true));
        } else if out.knots.last().is_none_or(|k| k.time < s) {
            out.push(s, path.length_base(u, tail, true));
        }
    }
    Ok(out)
}

/// `S(s, t)`.
pub fn two_parameter_stable(path: &TwoParameterStable, s: f64, t: f64) -> Result<f64> {
    path.increment(s, t)
}

/// `max |L(t) - L(0) - Z(t) + ∫_0^t L(s) ds|` over `s ∈ [0, horizon]` on a grid
/// of spacing `h`, with jump times added as nodes and the integral by the
/// trapezoid rule using left and right limits.
pub fn ou_pathwise_residual(path: &TwoParameterStable, horizon: f64, h: f64, tail: f64) -> Result<f64> {
    if !(h > 0.0) || !(horizon > 0.0) {
        return domain("need h > 0 and horizon > 0");
    }
    if tail < 20.0 {
        return domain(format!("tail horizon {tail} is below 20"));
    }
    path.check(horizon, tail)?;
    let present = path.present;
    let lowest = present - horizon;
    // nodes in base time, decreasing; each carries (u, is_jump)
    let steps = (horizon / h).round() as usize;
    let mut nodes: Vec<(f64, bool)> = (0..=steps)
        .map(|i| ((present - i as f64 * h).max(lowest), false))
        .collect();
    let lo_j = path.base.before(lowest);
    let hi_j = path.base.upto(present);
    for j in lo_j..hi_j {
        let u = path.base.times[j];
        if u < present {
            nodes.push((u, true));
        }
    }
    nodes.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    nodes.dedup_by(|a, b| a.0 == b.0 && !a.1 && !b.1);

    let l0 = path.length_base(present, tail, true);
    let z0 = path.z_base(present);
    let mut integral = 0.0;
    let mut prev_u = present;
    let mut prev_right = l0;
    // at s = 0 the residual reduces to |Z(0)|
    let mut worst = z0.abs();
    for &(u, _) in nodes.iter().skip(1) {
        let left = path.length_base(u, tail, false);
        let right = path.length_base(u, tail, true);
        integral += 0.5 * (prev_u - u) * (prev_right + left);
        let r = (right - l0 - path.z_base(u) + integral).abs();
        worst = worst.max(r);
        prev_u = u;
        prev_right = right;
    }
    Ok(worst)
}

/// `Y(t) = e^{-t}(S(t) + t^2/2)` on the grid and at every jump (left and
/// right values).
pub fn limit_block_path(path: &StablePathTruncated, grid: &[f64]) -> Result<PiecewisePath> {
    let y = |t: f64, s: f64| (-t).exp() * (s + 0.5 * t * t);
    let mut events: Vec<(f64, bool)> = grid.iter().map(|&t| (t, false)).collect();
    if let (Some(&a), Some(&b)) = (grid.first(), grid.last()) {
        if a < 0.0 || b > path.horizon {
            return Err(Error::OutOfWindow {
                t: if a < 0.0 { a } else { b },
                lo: 0.0,
                hi: path.horizon,
            });
        }
        for &t in &path.times {
            if t > a && t <= b {
                events.push((t, true));
            }
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out = PiecewisePath::new();
    for (t, is_jump) in events {
        if is_jump {
            out.jump(t, y(t, path.left_limit(t)), y(t, path.value(t)));
        } else if out.knots.last().is_none_or(|k| k.time < t) {
            out.push(t, y(t, path.value(t)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use approx::assert_abs_diff_eq;

    #[test]
    fn value_reconstruction() {
        let p = StablePathTruncated::from_jumps(0.1, 2.0, &[(0.5, 1.0), (1.5, 0.2)]).unwrap();
        let d = drift_for(0.1);
        assert_eq!(p.value(0.0), 0.0);
        assert_eq!(p.value(0.5), d * 0.5 - 1.0);
        assert_eq!(p.left_limit(0.5), d * 0.5);
        assert_eq!(p.value(2.0), d * 2.0 - 1.2);
        assert_eq!(p.jump_at(1.5), 0.2);
        assert_eq!(p.jump_at(1.4), 0.0);
    }

    #[test]
    fn bad_jumps_rejected() {
        assert!(StablePathTruncated::from_jumps(0.1, 1.0, &[(0.5, 0.05)]).is_err());
        assert!(StablePathTruncated::from_jumps(0.1, 1.0, &[(0.5, 1.0), (0.4, 1.0)]).is_err());
        assert!(StablePathTruncated::from_jumps(0.1, 1.0, &[(1.5, 1.0)]).is_err());
    }

    #[test]
    fn block_path_without_jumps() {
        let p = StablePathTruncated::from_jumps(0.01, 3.0, &[]).unwrap();
        let grid: Vec<f64> = (0..=30).map(|i| i as f64 * 0.1).collect();
        let y = limit_block_path(&p, &grid).unwrap();
        assert_eq!(y.value_at(0.0), 0.0);
        for &t in &grid {
            let want = (-t).exp() * (p.drift * t + t * t / 2.0);
            assert_abs_diff_eq!(y.value_at(t), want, epsilon = 1e-12);
        }
    }

    #[test]
    fn block_path_jump_drop() {
        let p = StablePathTruncated::from_jumps(0.01, 2.0, &[(0.75, 3.0)]).unwrap();
        let y = limit_block_path(&p, &[0.0, 0.5, 1.0]).unwrap();
        let (t, before, after) = y.jumps().next().unwrap();
        assert_eq!(t, 0.75);
        assert_abs_diff_eq!(before - after, (-0.75f64).exp() * 3.0, epsilon = 1e-12);
    }

    #[test]
    fn length_path_drops_at_jump() {
        let eps = 0.01;
        let base = StablePathTruncated::from_jumps(eps, 45.0, &[(1.5, 4.0)]).unwrap();
        let tp = TwoParameterStable::from_base(base, 2.0).unwrap();
        let l = length_path(&tp, 1.0, 0.1, 40.0).unwrap();
        let (s, before, after) = l.jumps().next().unwrap();
        assert_abs_diff_eq!(s, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(before - after, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l.value_at(0.7), tp.length(0.7, 40.0).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn length_without_jumps() {
        let eps = 0.01;
        let base = StablePathTruncated::from_jumps(eps, 45.0, &[]).unwrap();
        let tp = TwoParameterStable::from_base(base, 2.0).unwrap();
        let want = 1.0 + drift_for(eps) * (1.0 - (-40f64).exp());
        assert_abs_diff_eq!(tp.length(0.0, 40.0).unwrap(), want, epsilon = 1e-12);
        assert_abs_diff_eq!(tp.length(1.3, 40.0).unwrap(), want, epsilon = 1e-12);
    }

    #[test]
    fn length_single_jump() {
        let eps = 0.01;
        let base = StablePathTruncated::from_jumps(eps, 45.0, &[(2.5, 4.0)]).unwrap();
        let tp = TwoParameterStable::from_base(base, 2.0).unwrap();
        let flat = 1.0 + drift_for(eps) * (1.0 - (-40f64).exp());
        // jump at lag 0.5 after present
        assert_abs_diff_eq!(
            tp.length(0.0, 40.0).unwrap(),
            flat - 4.0 * (-0.5f64).exp(),
            epsilon = 1e-12
        );
        assert!(tp.length(0.0, 19.0).is_err());
    }

    #[test]
    fn increments() {
        let mut rng = seeded(2);
        let tp = TwoParameterStable::simulate(0.01, 1.0, 2.0, &mut rng).unwrap();
        assert_eq!(tp.increment(0.4, 0.0).unwrap(), 0.0);
        let a = tp.increment(0.0, 0.7).unwrap();
        assert_eq!(a, tp.base.value(1.7) - tp.base.value(1.0));
        assert!(tp.increment(1.5, 0.1).is_err());
    }

    #[test]
    fn jump_count_rate() {
        let mut rng = seeded(3);
        let counts: Vec<f64> = (0..400)
            .map(|_| simulate_stable(0.01, 1.0, &mut rng).unwrap().jump_count() as f64)
            .collect();
        let m = crate::stats::mean_se(&counts);
        assert!(m.z(100.0) < 4.0, "{m:?}");
    }

    #[test]
    fn residual_smooth_case_is_second_order() {
        // no jumps inside the observed window, so L is smooth there
        let base = StablePathTruncated::from_jumps(0.01, 42.0, &[(1.4, 2.0), (3.0, 5.0), (7.5, 0.3)]).unwrap();
        let tp = TwoParameterStable::from_base(base, 1.0).unwrap();
        let r1 = ou_pathwise_residual(&tp, 1.0, 1e-2, 40.0).unwrap();
        let r2 = ou_pathwise_residual(&tp, 1.0, 1e-3, 40.0).unwrap();
        assert!(r2 < r1 / 50.0, "{r1} {r2}");
    }

    #[test]
    fn residual_with_jumps_in_window() {
        let base =
            StablePathTruncated::from_jumps(0.01, 42.0, &[(0.2, 1.0), (0.55, 3.0), (0.9, 0.5), (1.6, 2.0)]).unwrap();
        let tp = TwoParameterStable::from_base(base, 1.0).unwrap();
        let r1 = ou_pathwise_residual(&tp, 1.0, 1e-2, 40.0).unwrap();
        let r2 = ou_pathwise_residual(&tp, 1.0, 1e-3, 40.0).unwrap();
        assert!(r2 < r1 / 50.0, "{r1} {r2}");
        assert!(r2 < 1e-5);
    }
}

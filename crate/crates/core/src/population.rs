//! Fixed-size population with heavy-tailed offspring numbers, its event log,
//! backward genealogy extraction, and the construction of the population
//! from a planar Poisson field.

use std::io::Write;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::Serialize;

use crate::coalescent::{sample_merger_size, TruncatedMergerLaw};
use crate::error::{domain, Error, Result};
use crate::numeric::{exp1, open_uniform};
use crate::path::BlockPath;

/// `P(ξ = k) = n/(n-1) · 1/(k(k+1))` for `1 <= k <= n-1`.
pub fn offspring_pmf(n: usize, k: usize) -> Result<f64> {
    if n < 2 || k < 1 || k > n - 1 {
        return domain(format!(
            "offspring_pmf needs n >= 2 and 1 <= k <= n - 1, got n = {n}, k = {k}"
        ));
    }
    let (nf, kf) = (n as f64, k as f64);
    Ok(nf / (nf - 1.0) / (kf * (kf + 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OffspringLaw {
    pub n: usize,
}

impl OffspringLaw {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return domain("offspring law needs n >= 2");
        }
        Ok(OffspringLaw { n })
    }

    pub fn pmf(&self, k: usize) -> Result<f64> {
        offspring_pmf(self.n, k)
    }

    /// `ξ` has the law of a merger size among `n` blocks minus one.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_merger_size(self.n, rng) - 1
    }
}

/// Reproduction events of a population of `n` individuals over a time
/// window. Individuals are positions `0..n`; at an event the victims die and
/// their positions are taken over by offspring of the parent.
#[derive(Debug, Clone, Default)]
pub struct EventLog {
    pub n: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub times: Vec<f64>,
    pub parents: Vec<u32>,
    offsets: Vec<usize>,
    victims: Vec<u32>,
    /// True for events realised from an explicit field point.
    pub explicit: Vec<bool>,
}

impl EventLog {
    pub fn new(n: usize, t_start: f64, t_end: f64) -> Self {
        EventLog {
            n,
            t_start,
            t_end,
            offsets: vec![0],
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn victims(&self, i: usize) -> &[u32] {
        &self.victims[self.offsets[i]..self.offsets[i + 1]]
    }

    fn push(&mut self, time: f64, parent: u32, victims: impl IntoIterator<Item = u32>, explicit: bool) -> Result<()> {
        if let Some(&prev) = self.times.last() {
            if time <= prev {
                return Err(Error::NonMonotoneTime { prev, next: time });
            }
        }
        self.times.push(time);
        self.parents.push(parent);
        self.victims.extend(victims);
        self.offsets.push(self.victims.len());
        self.explicit.push(explicit);
        Ok(())
    }

    /// Prepends `earlier`, which must end where this log starts.
    fn prepend(&mut self, earlier: EventLog) {
        let shift = earlier.victims.len();
        let mut offsets = earlier.offsets;
        offsets.extend(self.offsets.iter().skip(1).map(|o| o + shift));
        let mut victims = earlier.victims;
        victims.extend_from_slice(&self.victims);
        let mut times = earlier.times;
        times.extend_from_slice(&self.times);
        let mut parents = earlier.parents;
        parents.extend_from_slice(&self.parents);
        let mut explicit = earlier.explicit;
        explicit.extend_from_slice(&self.explicit);
        *self = EventLog {
            n: self.n,
            t_start: earlier.t_start,
            t_end: self.t_end,
            times,
            parents,
            offsets,
            victims,
            explicit,
        };
    }

    /// Checks times, parent/victim ranges and that no parent is its own victim.
    pub fn validate(&self) -> Result<()> {
        for i in 0..self.len() {
            let t = self.times[i];
            if t < self.t_start || t > self.t_end {
                return Err(Error::OutOfWindow {
                    t,
                    lo: self.t_start,
                    hi: self.t_end,
                });
            }
            if i > 0 && t <= self.times[i - 1] {
                return Err(Error::NonMonotoneTime {
                    prev: self.times[i - 1],
                    next: t,
                });
            }
            let p = self.parents[i];
            let v = self.victims(i);
            if p as usize >= self.n || v.iter().any(|&x| x == p || x as usize >= self.n) {
                return domain(format!("bad parent or victim at event {i}"));
            }
            let mut sorted = v.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != v.len() {
                return domain(format!("repeated victim at event {i}"));
            }
        }
        Ok(())
    }

    /// CSV `time,parent,offspring_count,victims` with 1-based labels.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "time,parent,offspring_count,victims")?;
        for i in 0..self.len() {
            let v = self.victims(i);
            let joined: Vec<String> = v.iter().map(|x| (x + 1).to_string()).collect();
            writeln!(
                w,
                "{:?},{},{},{}",
                self.times[i],
                self.parents[i] + 1,
                v.len(),
                joined.join(";")
            )?;
        }
        Ok(())
    }
}

/// `ξ` distinct victims among the positions other than `parent`.
fn draw_victims<R: Rng + ?Sized>(n: usize, parent: usize, xi: usize, rng: &mut R) -> Vec<u32> {
    index::sample(rng, n - 1, xi)
        .into_iter()
        .map(|i| if i >= parent { i + 1 } else { i } as u32)
        .collect()
}

fn fill_events<R: Rng + ?Sized>(log: &mut EventLog, rng: &mut R) -> Result<()> {
    let n = log.n;
    let law = OffspringLaw::new(n)?;
    let rate = (n - 1) as f64;
    let mut t = log.t_start;
    loop {
        t += exp1(rng) / rate;
        if t > log.t_end {
            break;
        }
        let parent = rng.random_range(0..n);
        let xi = law.sample(rng);
        let victims = draw_victims(n, parent, xi, rng);
        log.push(t, parent as u32, victims, false)?;
    }
    Ok(())
}

/// Events on `[t_start, t_end]` at rate `n - 1`: uniform parent, `ξ` from the
/// offspring law, `ξ` uniform victims among the other `n - 1`.
pub fn simulate_population<R: Rng + ?Sized>(n: usize, window: (f64, f64), rng: &mut R) -> Result<EventLog> {
    if n < 2 {
        return domain("simulate_population needs n >= 2");
    }
    if !(window.0 < window.1) {
        return domain("window must have positive length");
    }
    let mut log = EventLog::new(n, window.0, window.1);
    fill_events(&mut log, rng)?;
    Ok(log)
}

/// Extends the log backwards to start at `new_start`.
pub fn extend_backward<R: Rng + ?Sized>(log: &mut EventLog, new_start: f64, rng: &mut R) -> Result<()> {
    if !(new_start < log.t_start) {
        return domain("new start must precede the current start");
    }
    let mut earlier = EventLog::new(log.n, new_start, log.t_start);
    fill_events(&mut earlier, rng)?;
    // an event exactly at the old boundary would be a tie
    if let (Some(&a), Some(&b)) = (earlier.times.last(), log.times.first()) {
        if a >= b {
            return Err(Error::NonMonotoneTime { prev: a, next: b });
        }
    }
    log.prepend(earlier);
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct GenealogyFrame {
    pub s: f64,
    pub trace: BlockPath,
    pub a: f64,
    pub l: f64,
}

impl GenealogyFrame {
    pub fn write_csv_header<W: Write>(mut w: W) -> Result<()> {
        writeln!(w, "s,a,l,n")?;
        Ok(())
    }

    pub fn write_csv_row<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{:?},{:?},{:?},{}", self.s, self.a, self.l, self.trace.n)?;
        Ok(())
    }
}

/// Traces the ancestral lines of the population at time `s` backwards through
/// the log, stopping at absorption or once the lag exceeds `t_max`.
/// `N(s, t)` counts ancestors immediately before time `s - t`.
pub fn trace_lineages(log: &EventLog, s: f64, t_max: f64) -> Result<BlockPath> {
    if s > log.t_end || s < log.t_start {
        return Err(Error::OutOfWindow {
            t: s,
            lo: log.t_start,
            hi: log.t_end,
        });
    }
    let n = log.n;
    let mut has = vec![true; n];
    let mut count = n;
    let mut path = BlockPath::new(n);
    let end = log.times.partition_point(|&t| t <= s);
    for i in (0..end).rev() {
        if count == 1 {
            break;
        }
        let lag = s - log.times[i];
        if lag > t_max {
            break;
        }
        let p = log.parents[i] as usize;
        let mut m = usize::from(has[p]);
        for &v in log.victims(i) {
            if has[v as usize] {
                m += 1;
                has[v as usize] = false;
            }
        }
        if m >= 1 {
            has[p] = true;
        }
        if m >= 2 {
            count -= m - 1;
            path.record(lag, m)?;
        }
    }
    Ok(path)
}

/// Genealogy of the population at time `s`; fails if the log does not reach
/// back far enough for the ancestral lines to meet.
pub fn genealogy_at(log: &EventLog, s: f64) -> Result<GenealogyFrame> {
    let trace = trace_lineages(log, s, f64::INFINITY)?;
    if !trace.is_absorbed() {
        return Err(Error::LookbackExhausted {
            remaining: trace.current(),
            start: log.t_start,
        });
    }
    let a = trace.time_to_mrca()?;
    let l = trace.total_branch_length()?;
    Ok(GenealogyFrame { s, trace, a, l })
}

/// Initial lookback `3 log log n`, floored at 1.
pub fn initial_lookback(n: usize) -> f64 {
    (3.0 * (n as f64).ln().ln()).max(1.0)
}

/// Simulates the population around `s` and extracts its genealogy, doubling
/// the lookback window until the ancestral lines have met.
pub fn sample_genealogy<R: Rng + ?Sized>(n: usize, s: f64, rng: &mut R) -> Result<GenealogyFrame> {
    let mut lookback = initial_lookback(n);
    let mut log = simulate_population(n, (s - lookback, s), rng)?;
    loop {
        match genealogy_at(&log, s) {
            Err(Error::LookbackExhausted { .. }) => {
                lookback *= 2.0;
                extend_backward(&mut log, s - lookback, rng)?;
            }
            other => return other,
        }
    }
}

/// Realisation of a Poisson field on `[t0, t1] × (y_min, y_max]` with
/// intensity `dt × y^{-2} dy`, sorted by time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointField {
    pub t0: f64,
    pub t1: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub points: Vec<(f64, f64)>,
}

impl PointField {
    pub fn sample<R: Rng + ?Sized>(window: (f64, f64), y_min: f64, y_max: f64, rng: &mut R) -> Result<Self> {
        let (t0, t1) = window;
        if !(t0 < t1) || !(y_min > 0.0) || !(y_max > y_min) {
            return domain("point field needs t0 < t1 and 0 < y_min < y_max");
        }
        let (inv_lo, inv_hi) = (1.0 / y_max, 1.0 / y_min);
        let mean = (t1 - t0) * (inv_hi - inv_lo);
        let count = Poisson::new(mean)
            .map_err(|e| Error::Domain(e.to_string()))?
            .sample(rng) as usize;
        let mut points: Vec<(f64, f64)> = (0..count)
            .map(|_| {
                let t = t0 + (t1 - t0) * rng.random::<f64>();
                // 1/y uniform on [1/y_max, 1/y_min)
                let y = 1.0 / (inv_hi - (inv_hi - inv_lo) * open_uniform(rng));
                (t, y)
            })
            .collect();
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(PointField {
            t0,
            t1,
            y_min,
            y_max,
            points,
        })
    }

    /// Expected number of points per unit time with mark in `(a, b]`.
    pub fn intensity(a: f64, b: f64) -> f64 {
        1.0 / a - 1.0 / b
    }
}

/// Image of `psi` under `(t, y) ↦ (-t/log n, y/log n)`, keeping marks `<= 1`.
pub fn build_theta_from_psi(psi: &PointField, n: usize) -> Result<PointField> {
    if n < 2 {
        return domain("build_theta_from_psi needs n >= 2");
    }
    let ln = (n as f64).ln();
    let mut points: Vec<(f64, f64)> = psi
        .points
        .iter()
        .map(|&(t, y)| (-t / ln, y / ln))
        .filter(|&(_, y)| y <= 1.0)
        .collect();
    points.reverse();
    Ok(PointField {
        t0: -psi.t1 / ln,
        t1: -psi.t0 / ln,
        y_min: psi.y_min / ln,
        y_max: (psi.y_max / ln).min(1.0),
        points,
    })
}

#[derive(Debug, Clone)]
pub struct CoupledLog {
    pub log: EventLog,
    /// Times of all explicit field points, whether or not they changed the
    /// population.
    pub explicit_times: Vec<f64>,
}

/// Population over the window of `theta`, driven by the explicit points of
/// `theta` with mark above `cutoff` and by the truncated-rate chain for the
/// small-mark activity.
pub fn simulate_population_coupled<R: Rng + ?Sized>(
    n: usize,
    theta: &PointField,
    cutoff: f64,
    rng: &mut R,
) -> Result<CoupledLog> {
    if n < 2 {
        return domain("coupled population needs n >= 2");
    }
    let mut log = EventLog::new(n, theta.t0, theta.t1);
    let explicit: Vec<(f64, f64)> = theta.points.iter().copied().filter(|&(_, y)| y > cutoff).collect();
    let explicit_times = explicit.iter().map(|p| p.0).collect();
    let law = TruncatedMergerLaw::new(n, cutoff)?;
    let rate = law.total_rate();
    let next_chain = |from: f64, rng: &mut R| -> f64 {
        if rate > 0.0 {
            from + exp1(rng) / rate
        } else {
            f64::INFINITY
        }
    };
    let mut tc = next_chain(theta.t0, rng);
    let mut ei = 0;
    loop {
        let te = explicit.get(ei).map_or(f64::INFINITY, |p| p.0);
        let t = te.min(tc);
        if t > theta.t1 {
            break;
        }
        if te <= tc {
            let y = explicit[ei].1;
            ei += 1;
            let k = Binomial::new(n as u64, y.min(1.0))
                .map_err(|e| Error::Domain(e.to_string()))?
                .sample(rng) as usize;
            if k >= 2 {
                let members = index::sample(rng, n, k).into_vec();
                let j = rng.random_range(0..k);
                let parent = members[j] as u32;
                let victims = members
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != j)
                    .map(|(_, &m)| m as u32);
                log.push(t, parent, victims, true)?;
            }
        } else {
            let k = law.sample_size(rng);
            let parent = rng.random_range(0..n);
            let victims = draw_victims(n, parent, k - 1, rng);
            log.push(t, parent as u32, victims, false)?;
            tc = next_chain(t, rng);
        }
    }
    Ok(CoupledLog { log, explicit_times })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use approx::assert_relative_eq;

    #[test]
    fn pmf_examples() {
        assert_eq!(offspring_pmf(3, 1).unwrap(), 0.75);
        assert_relative_eq!(offspring_pmf(3, 2).unwrap(), 0.25, max_relative = 1e-15);
        assert_eq!(offspring_pmf(2, 1).unwrap(), 1.0);
        assert!(offspring_pmf(3, 3).is_err());
        assert!(offspring_pmf(3, 0).is_err());
    }

    #[test]
    fn log_is_valid_and_parent_never_victim() {
        let mut rng = seeded(1);
        let log = simulate_population(30, (0.0, 5.0), &mut rng).unwrap();
        log.validate().unwrap();
        assert!(log.len() > 50);
    }

    #[test]
    fn frame_consistency() {
        let mut rng = seeded(2);
        let f = sample_genealogy(40, 0.0, &mut rng).unwrap();
        assert_eq!(f.a, f.trace.time_to_mrca().unwrap());
        assert_eq!(f.l, f.trace.total_branch_length().unwrap());
        assert_eq!(f.trace.events[0].block_count, 40);
    }

    #[test]
    fn lookback_error_then_extension() {
        let mut rng = seeded(3);
        let mut log = simulate_population(500, (-0.01, 0.0), &mut rng).unwrap();
        assert!(matches!(genealogy_at(&log, 0.0), Err(Error::LookbackExhausted { .. })));
        extend_backward(&mut log, -60.0, &mut rng).unwrap();
        log.validate().unwrap();
        assert!(genealogy_at(&log, 0.0).is_ok());
    }

    #[test]
    fn theta_restriction() {
        let psi = PointField {
            t0: 0.0,
            t1: 2.0,
            y_min: 0.5,
            y_max: 10.0,
            points: vec![(1.0, 0.5), (1.5, 2.0)],
        };
        let n = 3; // log n ≈ 1.0986
        let th = build_theta_from_psi(&psi, n).unwrap();
        assert_eq!(th.points.len(), 1);
        let ln = 3f64.ln();
        assert_eq!(th.points[0], (-1.0 / ln, 0.5 / ln));
    }

    #[test]
    fn coupled_log_is_valid() {
        let mut rng = seeded(4);
        let n = 200usize;
        let ln = (n as f64).ln();
        let psi = PointField::sample((0.0, 2.0), 0.05, 1e6, &mut rng).unwrap();
        let theta = build_theta_from_psi(&psi, n).unwrap();
        let c = simulate_population_coupled(n, &theta, 0.05 / ln, &mut rng).unwrap();
        c.log.validate().unwrap();
        assert!(c.log.explicit.iter().any(|&e| e));
        for (t, e) in c.log.times.iter().zip(&c.log.explicit) {
            if *e {
                assert!(c.explicit_times.contains(t));
            }
        }
    }
}

//! The shared-field coupling between the finite population and the truncated
//! stable process: one Poisson field drives both, and the rescaled block count
//! `X_n` is compared with `Y_n(t) = e^{-t}(S_n(t) + t^2/2)`.

use rand::Rng;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::path::PiecewisePath;
use crate::population::{build_theta_from_psi, simulate_population_coupled, trace_lineages, PointField};
use crate::stable::{limit_block_path, StablePathTruncated};
use crate::verification::rescale;

/// Relative tolerance when matching event times across the time change.
pub const TIME_MATCH_REL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingParams {
    pub n: usize,
    /// `T_n = 2 log log n`.
    pub horizon: f64,
    /// `ε_n = e^{-√(log n)}`.
    pub eps: f64,
    /// `ε_n / log n`, the mark threshold for explicit population events.
    pub cutoff: f64,
}

impl CouplingParams {
    pub fn for_n(n: usize) -> Result<Self> {
        if n < 100 {
            return domain(format!("coupling needs n >= 100, got {n}"));
        }
        let ln = (n as f64).ln();
        let eps = (-ln.sqrt()).exp();
        Ok(CouplingParams {
            n,
            horizon: 2.0 * ln.ln(),
            eps,
            cutoff: eps / ln,
        })
    }
}

#[derive(Debug, Clone)]
pub struct CouplingRun {
    pub params: CouplingParams,
    pub x: PiecewisePath,
    pub y: PiecewisePath,
    pub sup_distance: f64,
    /// Jump times of `Y_n` from field points that also enter the population
    /// (mark at most `log n`), in rescaled time.
    pub y_jump_times: Vec<f64>,
    /// Times of the explicit population events mapped to rescaled time.
    pub explicit_times: Vec<f64>,
    /// Jump times of `X_n` caused by explicit events.
    pub x_explicit_jump_times: Vec<f64>,
    /// Jump times of `X_n` caused by the truncated-rate chain.
    pub x_chain_jump_times: Vec<f64>,
}

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIME_MATCH_REL * a.abs().max(b.abs()).max(1e-300)
}

fn contains(sorted: &[f64], t: f64) -> bool {
    let i = sorted.partition_point(|&s| s < t * (1.0 - TIME_MATCH_REL) - f64::MIN_POSITIVE);
    sorted[i..]
        .iter()
        .take_while(|&&s| s <= t * (1.0 + TIME_MATCH_REL) + f64::MIN_POSITIVE)
        .any(|&s| same_time(s, t))
}

impl CouplingRun {
    /// Explicit-event jumps of `X_n` lie in the jump set of `Y_n`, the jump
    /// set of `Y_n` (marks up to `log n`) is exactly the set of explicit
    /// events, and no chain event shares a time with `Y_n`.
    pub fn jump_sets_coincide(&self) -> bool {
        let same_len = self.y_jump_times.len() == self.explicit_times.len();
        let equal = same_len
            && self
                .y_jump_times
                .iter()
                .zip(&self.explicit_times)
                .all(|(&a, &b)| same_time(a, b));
        let x_in_y = self
            .x_explicit_jump_times
            .iter()
            .all(|&t| contains(&self.y_jump_times, t));
        let chain_apart = self
            .x_chain_jump_times
            .iter()
            .all(|&t| !contains(&self.y_jump_times, t));
        equal && x_in_y && chain_apart
    }
}

/// One coupled replicate on `[0, T_n]` with `grid_points` evaluation points
/// (jump times are always added, both sides).
pub fn run_coupling_experiment<R: Rng + ?Sized>(n: usize, grid_points: usize, rng: &mut R) -> Result<CouplingRun> {
    let params = CouplingParams::for_n(n)?;
    run_coupling_with(params, grid_points, rng)
}

pub fn run_coupling_with<R: Rng + ?Sized>(
    params: CouplingParams,
    grid_points: usize,
    rng: &mut R,
) -> Result<CouplingRun> {
    let CouplingParams {
        n,
        horizon,
        eps,
        cutoff,
    } = params;
    if grid_points < 2 {
        return domain("coupling needs at least two grid points");
    }
    let ln = (n as f64).ln();
    let psi = PointField::sample((0.0, horizon), eps, f64::INFINITY, rng)?;
    let theta = build_theta_from_psi(&psi, n)?;
    let coupled = simulate_population_coupled(n, &theta, cutoff, rng)?;
    let trace = trace_lineages(&coupled.log, 0.0, horizon / ln)?;
    let stable = StablePathTruncated::from_jumps(eps, horizon, &psi.points)?;

    let grid: Vec<f64> = (0..grid_points)
        .map(|i| horizon * i as f64 / (grid_points - 1) as f64)
        .collect();
    let y = limit_block_path(&stable, &grid)?;
    let x = rescale::blocks_path(&trace, &grid, horizon)?;

    let y_jump_times: Vec<f64> = psi.points.iter().filter(|p| p.1 <= ln).map(|p| p.0).collect();
    let mut explicit_times: Vec<f64> = coupled.explicit_times.iter().map(|&t| -t * ln).collect();
    explicit_times.sort_by(f64::total_cmp);

    let mut x_explicit = Vec::new();
    let mut x_chain = Vec::new();
    let log = &coupled.log;
    for e in trace.events.iter().skip(1) {
        // lags are exact negations of log times, since s = 0
        let i = log.times.partition_point(|&t| t < -e.time);
        let t = e.time * ln;
        if log.explicit[i] {
            x_explicit.push(t);
        } else {
            x_chain.push(t);
        }
    }

    // sup over the grid and both sides of every jump of either path
    let count_right = |t: f64| trace.count_at(t / ln);
    let x_at = |t: f64, c: usize| rescale::blocks(n, t, c as f64);
    let mut sup = 0.0f64;
    for &t in &grid {
        sup = sup.max((x_at(t, count_right(t))? - (-t).exp() * (stable.value(t) + 0.5 * t * t)).abs());
    }
    for w in trace.events.windows(2) {
        let t = w[1].time * ln;
        if t > horizon {
            break;
        }
        let (sl, sr) = (stable.left_limit(t), stable.value(t));
        let damp = (-t).exp();
        sup = sup.max((x_at(t, w[0].block_count)? - damp * (sl + 0.5 * t * t)).abs());
        sup = sup.max((x_at(t, w[1].block_count)? - damp * (sr + 0.5 * t * t)).abs());
    }
    for &t in &stable.times {
        let c = count_right(t);
        let damp = (-t).exp();
        sup = sup.max((x_at(t, c)? - damp * (stable.value(t) + 0.5 * t * t)).abs());
        let i = trace.events.partition_point(|e| e.time * ln < t);
        let before = trace.events[i.max(1) - 1].block_count;
        sup = sup.max((x_at(t, before)? - damp * (stable.left_limit(t) + 0.5 * t * t)).abs());
    }

    Ok(CouplingRun {
        params,
        x,
        y,
        sup_distance: sup,
        y_jump_times,
        explicit_times,
        x_explicit_jump_times: x_explicit,
        x_chain_jump_times: x_chain,
    })
}

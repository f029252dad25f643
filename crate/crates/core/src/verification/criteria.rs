//! The acceptance criteria and a few further standing checks. Work sizes come
//! from [`VerifyConfig`]; every pass threshold is fixed here.

use std::f64::consts::PI;

use crate::coalescent::{
    block_count_distribution, block_loss_rate, expected_blocks, merger_rate, merger_size_pmf, paintbox_partition,
    sample_block_count, simulate_coalescent, total_merger_rate, truncated_block_loss_rate, truncated_variance_rate,
    Mode,
};
use crate::error::{Error, Result};
use crate::numeric::{choose, exp1, gumbel_cdf, gumbel_density, harmonic, EULER_GAMMA};
use crate::ou::{ou_stationary_cf, stable_cf, OuTypeSpec};
use crate::pdmp::{
    a_jump_target, generator_apply_tol, q_kernel, r_kernel, semigroup_apply_tol, simulate_a, simulate_r,
    transition_atom_r, transition_cdf_r, Bump, Init, SmoothStep, TestFunction,
};
use crate::population::{extend_backward, genealogy_at, initial_lookback, sample_genealogy, simulate_population};
use crate::quadrature::{integrate, Tolerance};
use crate::recursive_tree::{build_rrt, coalescent_from_rrt, depth_sum, EvolvingTreeState};
use crate::rng::{derive_seed, replicate};
use crate::stable::{ou_pathwise_residual, sample_length_at_zero, sample_stable_endpoint, TwoParameterStable};
use crate::stats::{
    chi_square_gof, empirical_cf, ks_statistic, ks_threshold, ks_two_sample, ks_two_sample_threshold, mean_se, median,
    ChiSquare,
};
use crate::verification::config::VerifyConfig;
use crate::verification::coupling::{run_coupling_experiment, CouplingParams};
use crate::verification::report::{Check, Metric, TestReport};

/// Relative error allowed in exact rate identities.
pub const EXACT_REL: f64 = 1e-12;
/// Allowed deviation of the block-loss rate from its logarithmic centring.
pub const ETA_BOUND: f64 = 1.0;
/// Agreement required between the closed-form block-loss rate and a running
/// harmonic sum, which itself carries accumulated rounding.
pub const ETA_SUM_REL: f64 = 1e-10;
/// Detailed-balance agreement, absolute and relative.
pub const BALANCE_TOL: f64 = 1e-12;
/// Quadrature agreement for the OU tail identity and closed-form CF.
pub const OU_TOL: f64 = 1e-8;
/// Kernel-integral agreement for the `A` jump target law.
pub const KERNEL_TOL: f64 = 1e-8;
/// Quadrature tolerance for the finite-difference generator check: at
/// `h = 1e-3` the difference quotient divides quadrature error by `h`.
pub const GENERATOR_QUAD: Tolerance = Tolerance::absolute(1e-13).with_rel(1e-13);
/// Accepted deviation of the observed convergence order from 1.
pub const ORDER_SLACK: f64 = 0.1;
/// Pathwise OU identity residual.
pub const OU_RESIDUAL_MAX: f64 = 1e-4;

pub type RunFn = fn(&VerifyConfig, u64) -> Result<TestReport>;

#[derive(Clone, Copy)]
pub struct Criterion {
    pub name: &'static str,
    /// Wall-clock budget on one core, in seconds. Reported, never enforced.
    pub budget_secs: f64,
    pub run: RunFn,
}

impl std::fmt::Debug for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Criterion")
            .field("name", &self.name)
            .field("budget_secs", &self.budget_secs)
            .finish()
    }
}

pub const ACCEPTANCE: [Criterion; 14] = [
    Criterion {
        name: "c01_rate_identities",
        budget_secs: 1.0,
        run: rate_identities,
    },
    Criterion {
        name: "c02_eta_bound",
        budget_secs: 1.0,
        run: eta_bound,
    },
    Criterion {
        name: "c03_mean_depth",
        budget_secs: 30.0,
        run: mean_depth,
    },
    Criterion {
        name: "c04_block_count_mean",
        budget_secs: 120.0,
        run: block_count_mean,
    },
    Criterion {
        name: "c05_construction_equivalence",
        budget_secs: 300.0,
        run: construction_equivalence,
    },
    Criterion {
        name: "c06_gumbel_semigroup",
        budget_secs: 60.0,
        run: gumbel_semigroup,
    },
    Criterion {
        name: "c07_detailed_balance",
        budget_secs: 1.0,
        run: detailed_balance,
    },
    Criterion {
        name: "c08_a_jump_structure",
        budget_secs: 30.0,
        run: a_jump_structure,
    },
    Criterion {
        name: "c09_generator_consistency",
        budget_secs: 10.0,
        run: generator_consistency,
    },
    Criterion {
        name: "c10_stable_cf",
        budget_secs: 120.0,
        run: stable_cf_check,
    },
    Criterion {
        name: "c11_ou_stationary_law",
        budget_secs: 120.0,
        run: ou_stationary_law,
    },
    Criterion {
        name: "c12_ou_pathwise_identity",
        budget_secs: 60.0,
        run: ou_pathwise_identity,
    },
    Criterion {
        name: "c13_coupling_trend",
        budget_secs: 900.0,
        run: coupling_trend,
    },
    Criterion {
        name: "c14_mrca_scaling_trend",
        budget_secs: 600.0,
        run: mrca_scaling_trend,
    },
];

pub const EXTRA: [Criterion; 4] = [
    Criterion {
        name: "x01_truncated_rate_bounds",
        budget_secs: 5.0,
        run: truncated_rate_bounds,
    },
    Criterion {
        name: "x02_population_stationarity",
        budget_secs: 60.0,
        run: population_stationarity,
    },
    Criterion {
        name: "x03_evolving_tree_marginal",
        budget_secs: 120.0,
        run: evolving_tree_marginal,
    },
    Criterion {
        name: "x04_time_reversal",
        budget_secs: 30.0,
        run: time_reversal,
    },
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Suite {
    /// The acceptance criteria.
    Fast,
    /// Acceptance criteria plus the further standing checks.
    All,
    Named(String),
}

impl std::str::FromStr for Suite {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "fast" => Suite::Fast,
            "all" => Suite::All,
            other => Suite::Named(other.to_string()),
        })
    }
}

/// Every known test, acceptance criteria first.
pub fn all_criteria() -> impl Iterator<Item = &'static Criterion> {
    ACCEPTANCE.iter().chain(EXTRA.iter())
}

/// Looks a test up by full name or by its short id (`c05`, `x02`).
pub fn find(name: &str) -> Option<&'static Criterion> {
    all_criteria().find(|c| c.name == name || c.name.split('_').next() == Some(name))
}

pub fn select(suite: &Suite) -> Result<Vec<&'static Criterion>> {
    Ok(match suite {
        Suite::Fast => ACCEPTANCE.iter().collect(),
        Suite::All => all_criteria().collect(),
        Suite::Named(name) => {
            let mut out = Vec::new();
            for part in name.split(',') {
                out.push(find(part.trim()).ok_or_else(|| Error::UnknownTest(part.trim().to_string()))?);
            }
            out
        }
    })
}

pub fn run_suite(suite: &Suite, cfg: &VerifyConfig, seed: u64) -> Result<Vec<TestReport>> {
    select(suite)?.into_iter().map(|c| (c.run)(cfg, seed)).collect()
}

/// Stream master for part `part` of the test `name`.
fn master(seed: u64, name: &str, part: u64) -> u64 {
    let h = name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    });
    derive_seed(derive_seed(seed, h), part)
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(a.abs())
    }
}

fn collect<T>(xs: Vec<Result<T>>) -> Result<Vec<T>> {
    xs.into_iter().collect()
}

fn chi_check(label: &str, chi: ChiSquare) -> Check {
    Check::new(
        format!("{label} chi-square (dof {})", chi.dof),
        chi.statistic,
        chi.critical,
    )
}

fn histogram(values: &[usize], lo: usize, hi: usize) -> Vec<u64> {
    let mut h = vec![0u64; hi - lo + 1];
    for &v in values {
        h[v - lo] += 1;
    }
    h
}

/// `|p̂ - p| / sqrt(p(1-p)/m)` for an indicator frequency against its
/// null probability.
fn binomial_z(hits: usize, m: usize, p: f64) -> f64 {
    let phat = hits as f64 / m as f64;
    let se = (p * (1.0 - p) / m as f64).sqrt();
    let d = (phat - p).abs();
    if d == 0.0 {
        0.0
    } else {
        d / se
    }
}

/// Largest increase between consecutive entries; non-positive iff the
/// sequence is non-increasing.
fn max_increase(xs: &[f64]) -> f64 {
    xs.windows(2).map(|w| w[1] - w[0]).reduce(f64::max).unwrap_or(0.0)
}

fn rate_identities(cfg: &VerifyConfig, seed: u64) -> Result<TestReport> {
    let b_max = cfg.rates.b_max;
    let (mut pair, mut total, mut summed, mut pmf) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for b in 2..=b_max {
        let bf = b as f64;
        let (mut s, mut p) = (0.0, 0.0);
        for k in 2..=b {
            let kf = k as f64;
            let lhs = choose(b as u64, k as u64) * merger_rate(b, k)?;
            pair = pair.max(rel(lhs, bf / (kf * (kf - 1.0))));
            s += lhs;
            p += merger_size_pmf(b, k)?;
        }
        total = total.max(rel(total_merger_rate(b)?, bf - 1.0));
        summed = summed.max(rel(s, bf - 1.0));
        pmf = pmf.max((p - 1.0).abs());
    }
    Ok(TestReport::from_checks(
        ACCEPTANCE[0].name,
        1,
        seed,
        vec![
            Check::new("max rel err C(b,k) lambda_{b,k} vs b/(k(k-1))", pair, EXACT_REL),
            Check::new("max rel err lambda_b vs b-1", total, EXACT_REL),
            Check::new("max rel err of summed C(b,k) lambda_{b,k} vs b-1", summed, EXACT_REL),
            Check::new("max |sum of merger-size pmf - 1|", pmf, EXACT_REL),
        ],
    ))
}

fn eta_bound(cfg: &VerifyConfig, seed: u64) -> Result<TestReport> {
    let mut worst = 0.0f64;
    let mut sum_rel = 0.0f64;
    let mut h = 1.0;
    for b in 1..=cfg.eta.b_max {
        let bf = b as f64;
        if b > 1 {
            h += 1.0 / bf;
        }
        let eta = block_loss_rate(b);
        worst = worst.max((eta - bf * (bf.ln() + EULER_GAMMA - 1.0)).abs());
        sum_rel = sum_rel.max(rel(eta, bf * (h - 1.0)));
    }
    Ok(TestReport::from_checks(
        ACCEPTANCE[1].name,
        1,
        seed,
        vec![
            Check::new("max |eta(b) - b(log b + gamma - 1)|", worst, ETA_BOUND),
            Check::new("max rel err eta(b) vs running harmonic sum", sum_rel, ETA_SUM_REL),
        ],
    ))
}

fn mean_depth(cfg: &VerifyConfig, seed: u64) -> Result<TestReport> {
    let name = ACCEPTANCE[2].name;
    let trees = cfg.depth.trees;
    let mut checks = Vec::new();
    for (i, &n) in cfg.depth.n.iter().enumerate() {
        let xs = collect(replicate(master(seed, name, i as u64), trees, |_, rng| {
            Ok(depth_sum(&build_rrt(n, rng)?) as f64)
        }))?;
        let target = n as f64 * (harmonic(n as u64) - 1.0);
        checks.push(Check::within_3se(
            format!("n={n}: |z| of mean D_n vs {target:.6}"),
            mean_se(&xs).z(target),
        ));
    }
    Ok(TestReport::from_checks(name, trees, seed, checks))
}

fn block_count_mean(cfg: &VerifyConfig, seed: u64) -> Result<TestReport> {
    let name = ACCEPTANCE[3].name;
    let m = cfg.block_mean.replicates;
    let mut checks = Vec::new();
    for (i, &(n, t)) in cfg.block_mean.cases.iter().enumerate() {
        let xs: Vec<f64> = replicate(master(seed, name, i as u64), m, |_, rng| {
            sample_block_count(n, t, rng) as f64
        });
        let target = expected_blocks(n, t);
        checks.push(Check::within_3se(
            format!("n={n}, t={t}: |z| vs {target:.6}"),
            mean_se(&xs).z(target),
        ));
    }
    Ok(TestReport::from_checks(name, m, seed, checks))
}

/// Size of the first merger seen by `{1, 2, 3}` in a labeled run on `n`.
fn restricted_first_merger(history: &[crate::coalescent::Partition]) -> usize {
    let first = history
        .iter()
        .map(|p| p.restrict(&[1, 2, 3]).len())
        .find(|&len| len < 3)
        .expect("a completed run merges everything");
    4 - first
}

fn construction_equivalence(cfg: &VerifyConfig, seed: u64) -> Result<TestReport> {
    let name = ACCEPTANCE[4].name;
    let e = &cfg.equivalence;
    let mut checks = Vec::new();
    let first_law = [0.75, 0.25];

    let m = e.first_merger_replicates;
    let chain = collect(replicate(master(seed, name, 0), m, |_, rng| {
        Ok(simulate_coalescent(3, rng, Mode::CountsOnly)?
            .path
            .first_merger()
            .unwrap_or(0))
    }))?;
    checks.push(chi_check(
        "first merger n=3, rate chain",
        chi_square_gof(&histogram(&chain, 2, 3), &first_law),
    ));
    let tree = collect(replicate(master(seed, name, 1), m, |_, rng| {
        Ok(coalescent_from_rrt(3, rng)?.first_merger().unwrap_or(0))
    }))?;
    checks.push(chi_check(
        "first merger n=3, tree cutting",
        chi_square_gof(&histogram(&tree, 2, 3), &first_law),
    ));
    let restricted = collect(replicate(master(seed, name, 2), m, |_, rng| {
        let run = simulate_coalescent(5, rng, Mode::Labeled)?;
        Ok(restricted_first_merger(run.history.as_deref().unwrap_or(&[])))
    }))?;
    checks.push(chi_check(
        "first merger of {1,2,3} inside labeled n=5",
        chi_square_gof(&histogram(&restricted, 2, 3), &first_law),
    ));
    let g = e.genealogy_replicates;
    let pop = collect(replicate(master(seed, name, 3), g, |_, rng| {
        Ok(sample_genealogy(3, 0.0, rng)?.trace.first_merger().unwrap_or(0))
    }))?;
    checks.push(chi_check(
        "first merger n=3, population genealogy",
        chi_square_gof(&histogram(&pop, 2, 3), &first_law),
    ));

    let (n, t) = (e.marginal_n, e.marginal_t);
    let law = block_count_distribution(n, t)?;
    let probs = &law[1..=n];
    let mm = e.marginal_replicates;
    let chain = replicate(master(seed, name, 4), mm, |_, rng| sample_block_count(n, t, rng));
    checks.push(chi_check(
        &format!("N_{n}({t}) rate chain"),
        chi_square_gof(&histogram(&chain, 1, n), probs),
    ));
    let tree = collect(replicate(master(seed, name, 5), mm, |_, rng| {
        Ok(coalescent_from_rrt(n, rng)?.count_at(t))
    }))?;
    checks.push(chi_check(
        &format!("N_{n}({t}) tree cutting"),
        chi_square_gof(&histogram(&tree, 1, n), probs),
    ));
    let paint = collect(replicate(master(seed, name, 6), e.paintbox_replicates, |_, rng| {
        Ok(paintbox_partition(n, t, rng, None)?.len())
    }))?;
    checks.push(chi_check(
        &format!("N_{n}({t}) paintbox"),
        chi_square_gof(&histogram(&paint, 1, n), probs),
    ));
    let pop = collect(replicate(master(seed, name, 7), g, |_, rng| {
        Ok(sample_genealogy(n, 0.0, rng)?.trace.count_at(t))
    }))?;
    checks.push(chi_check(
        &format!("N_{n}({t}) population genealogy"),
        chi_square_gof(&histogram(&pop, 1, n), probs),
    ));

    let (n, ma) = (e.mrca_n, e.mrca_replicates);
    let chain = collect(replicate(master(seed, name, 8), ma, |_, rng| {
        simulate_coalescent(n, rng, Mode::CountsOnly)?.path.time_to_mrca()
    }))?;
    let pop = collect(replicate(master(seed, name, 9), ma, |_, rng| {
        Ok(sample_genealogy(n, 0.0, rng)?.a)
    }))?;
    let tree = collect(replicate(master(seed, name, 10), ma, |_, rng| {
        coalescent_from_rrt(n, rng)?.time_to_mrca()
    }))?;
    let thr = ks_two_sample_threshold(ma, ma);
    checks.push(Check::new(
        format!("A_{n} population vs rate chain, two-sample KS"),
        ks_two_sample(&pop, &chain),
        thr,
    ));
    checks.push(Check::new(
        format!("A_{n} tree cutting vs rate chain, two-sample KS"),
        ks_two_sample(&tree, &chain),
        thr,
    ));

    Ok(TestReport::from_checks(name, m, seed, checks))
}

fn gumbel_semigroup(cfg: &VerifyConfig, seed: u64) -> Result<TestReport> {
    let name = ACCEPTANCE[5].name;
    let c = &cfg.gumbel;
    let mut checks = Vec::new();

    let m = c.stationary_samples;
    let ends = collect(replicate(master(seed, name, 0), m, |_, rng| {
        Ok(simulate_r(0.0, c.stationary_horizon, Init::Stationary, rng)?.end_value())
    }))?;
    checks.push(Check::new(
        format!("stationary R({}) KS vs exp(-e^-y)", c.stationary_horizon),
        ks_statistic(&ends, gumbel_cdf),
        ks_threshold(m),
    ));

    let (x, t) = (c.x, c.t);
    let mt = c.transition_samples;
    let ends = collect(replicate(master(seed, name, 1), mt, |_, rng| {
        Ok(simulate_r(0.0, t, Init::Level(x), rng)?.end_value())
    }))?;
    let floor = x - t;
    for i in 1..=c.grid_points {
        let y = floor + 0.3 * i as f64;
        let hits = ends.iter().filter(|&&v| v <= y).count();
        checks.push(Check::within_3se(
            format!("P(R({t}) <= {y:.2} | R(0) = {x}) |z|"),
            binomial_z(hits, mt, transition_cdf_r(x, t, y)),
        ));
    }
    let atoms = ends.iter().filter(|&&v| v == floor).count();
    checks.push(Check::within_3se(
        format!("atom P(R({t}) = {floor}) |z|"),
        binomial_z(atoms, mt, transition_atom_r(x, t)),
    ));
    Ok(TestReport::from_checks(name, m, seed, checks))
}

fn detailed_balance(cfg: &VerifyConfig, seed: u64) -> Result<TestReport> {
    let d = &cfg.detailed_balance;
    let step = (d.hi - d.lo) / (d.grid - 1) as f64;
    let (mut abs, mut relerr) = (0.0f64, 0.0f64);
    for i in 0..d.grid {
        let x = d.lo + step * i as f64;
        for j in 0..d.grid {
            let y = d.lo + step * j as f64;
            let lhs = gumbel_density(x) * q_kernel(x, y);
            let rhs = gumbel_density(y) * r_kernel(y, x);
            abs = abs.max((lhs - rhs).abs());
            relerr = relerr.max(rel(lhs, rhs));
        }
    }
    Ok(TestReport::from_checks(
        ACCEPTANCE[6].name,
        1,
        seed,
        vec![
            Check::new("max |pi(x)q(x,y) - pi(y)r(y,x)|", abs, BALANCE_TOL),
            Check::new("max relative difference", relerr, BALANCE_TOL),
        ],
    ))
}

fn a_jump_structure(cfg: &VerifyConfig, seed: u64) -> Result<TestReport> {
    let name = ACCEPTANCE[7].name;
    let c = &cfg.a_process;
    let mut checks = Vec::new();

    let mut rng = crate::rng::stream(master(seed, name, 0), 0);
    // 2m + 100 time units give at least m jumps except with negligible probability
    let path = simulate_a(0.0, 2.0 * c.jumps as f64 + 100.0, Init::Stationary, &mut rng)?;
    let mut prev = path.t_start();
    let mut gaps = Vec::with_capacity(c.jumps);
    for (t, _, _) in path.jumps().take(c.jumps) {
        gaps.push(t - prev);
        prev = t;
    }
    checks.push(Check::within_3se(
        format!("mean of {} inter-jump times |z| vs 1", gaps.len()),
        mean_se(&gaps).z(1.0),
    ));
    if gaps.len() < c.jumps {
        return Err(Error::Domain(format!(
            "only {} of {} jumps collected",
            gaps.len(),
            c.jumps
        )));
    }

    let m = c.target_samples;
    let targets: Vec<f64> = replicate(master(seed, name, 1), m, |_, rng| a_jump_target(0.0, exp1(rng)));
    for i in 1..=c.grid_points {
        let y = -0.2 * i as f64;
        let p = (1.0 - (-y).exp()).exp();
        let hits = targets.iter().filter(|&&v| v <= y).count();
        checks.push(Check::within_3se(
            format!("P(target <= {y:.1} | x = 0) |z|"),
            binomial_z(hits, m, p),
        ));
        let from_kernel = integrate(
            |z| r_kernel(0.0, z),
            y - 10.0,
            y,
            Tolerance::absolute(1e-14).with_rel(1e-12),
        )?
        .value;
        checks.push(Check::new(
            format!("kernel integral to {y:.1} rel err"),
            rel(from_kernel, p),
            KERNEL_TOL,
        ));
    }
    Ok(TestReport::from_checks(name, c.jumps, seed, checks))
}

fn generator_consistency(cfg: &VerifyConfig, seed: u64) -> Result<TestReport> {
    let c = &cfg.generator;
    let mut hs = c.h.clone();
    hs.sort_by(|a, b| b.total_cmp(a));
    let fs: [(&str, &dyn TestFunction); 2] = [("smooth step", &SmoothStep), ("bump", &Bump)];
    let mut checks = Vec::new();
    for (label, f) in fs {
        for &x in &c.x {
            let a = generator_apply_tol(f, x, GENERATOR_QUAD)?;
            let mut errs = Vec::new();
            for &h in &hs {
                let p = semigroup_apply_tol(|y| f.value(y), x, h, GENERATOR_QUAD)?;
                errs.push(((p - f.value(x)) / h - a).abs());
            }
            // errors must shrink as h does, at order one over the finest decade
            let ratio = errs.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
            checks.push(Check::new(
                format!("{label}, x={x}: max err(h_next)/err(h)"),
                ratio,
                1.0,
            ));
            let k = errs.len();
            let order = (errs[k - 2] / errs[k - 1]).ln() / (hs[k - 2] / hs[k - 1]).ln();
            checks.push(Check::new(
                format!("{label}, x={x}: |order - 1| over h {} -> {}", hs[k - 2], hs[k - 1]),
                (order - 1.0).abs(),
                ORDER_SLACK,
            ));
        }
    }
    Ok(TestReport::from_checks(ACCEPTANCE[8].name, 1, seed, checks))
}

fn stable_cf_check(cfg: &VerifyConfig, seed: u64) -> Result<TestReport> {
    let name = ACCEPTANCE[9].name;
    let c = &cfg.stable_cf;
    let xs = collect(replicate(master(seed, name, 0), c.samples, |_, rng| {
        sample_stable_endpoint(c.eps, 1.0, rng)
    }))?;
    let mut checks = Vec::new();
    for &u in &c.u {
        let est = empirical_cf(&xs, u);
        let want = stable_cf(u);
        checks.push(Check::within_3se(
            format!("u={u}: Re |z|"),
            (est.value.re - want.re).abs() / est.se_re,
        ));
        checks.push(Check::within_3se(
            format!("u={u}: Im |z|"),
            (est.value.im - want.im).abs() / est.se_im,
        ));
    }
    Ok(TestReport::from_checks(name, c.samples, seed, checks))
}

fn ou_stationary_law(cfg: &VerifyConfig, seed: u64) -> Result<TestReport> {
    let name = ACCEPTANCE[10].name;
    let c = &cfg.ou_law;
    let spec = OuTypeSpec::branch_length_limit();
    let mut checks = Vec::new();
    for &z in &c.z {
        checks.push(Check::new(
            format!("|rho tail({z}) - 1/{z}|"),
            (spec.rho_tail(z)? - 1.0 / z).abs(),
            OU_TOL,
        ));
    }
    let modulus = (-PI / 2.0).exp();
    checks.push(Check::new(
        "| |quadrature CF(1)| - e^{-pi/2} |",
        (ou_stationary_cf(&spec, 1.0)?.norm() - modulus).abs(),
        OU_TOL,
    ));
    let xs = collect(replicate(master(seed, name, 0), c.samples, |_, rng| {
        sample_length_at_zero(c.eps, c.tail, rng)
    }))?;
    let est = empirical_cf(&xs, 1.0);
    checks.push(Check::within_3se(
        format!("|CF of L(0)| at u=1, eps={}: |z| vs e^(-pi/2)", c.eps),
        (est.value.norm() - modulus).abs() / est.se_modulus,
    ));
    Ok(TestReport::from_checks(name, c.samples, seed, checks))
}

fn ou_pathwise_identity(cfg: &VerifyConfig, seed: u64) -> Result<TestReport> {
    let name = ACCEPTANCE[11].name;
    let c = &cfg.ou_residual;
    let residuals = collect(replicate(master(seed, name, 0), c.paths, |_, rng| {
        let path = TwoParameterStable::simulate(c.eps, c.horizon, c.tail, rng)?;
        ou_pathwise_residual(&path, c.horizon, c.h, c.tail)
    }))?;
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    Ok(TestReport::from_checks(
        name,
        c.paths,
        seed,
        vec![Check::new(
            format!("max residual over {} paths at h={}", c.paths, c.h),
            worst,
            OU_RESIDUAL_MAX,
        )],
    ))
}

fn coupling_trend(cfg: &VerifyConfig, seed: u64) -> Result<TestReport> {
    let name = ACCEPTANCE[12].name;
    let c = &cfg.coupling;
    let mut medians = Vec::new();
    let mut broken = 0usize;
    let mut metrics = Vec::new();
    for (i, &n) in c.n.iter().enumerate() {
        let runs = collect(replicate(master(seed, name, i as u64), c.replicates, |_, rng| {
            let run = run_coupling_experiment(n, c.grid_points, rng)?;
            Ok((run.sup_distance, run.jump_sets_coincide()))
        }))?;
        let sups: Vec<f64> = runs.iter().map(|r| r.0).collect();
        broken += runs.iter().filter(|r| !r.1).count();
        let m = median(&sups);
        metrics.push(Metric::new(format!("n={n}: median sup |X_n - Y_n|"), m));
        medians.push(m);
    }
    let checks = vec![
        Check::new(
            "largest increase of the median across the n-grid",
            max_increase(&medians),
            0.0,
        ),
        Check::new("replicates whose explicit jump sets differ", broken as f64, 0.0),
    ];
    Ok(TestReport::from_checks(name, c.replicates, seed, checks).with_metrics(metrics))
}

fn mrca_scaling_trend(cfg: &VerifyConfig, seed: u64) -> Result<TestReport> {
    let name = ACCEPTANCE[13].name;
    let c = &cfg.mrca_trend;
    let mut ks = Vec::new();
    let mut metrics = Vec::new();
    for (i, &n) in c.n.iter().enumerate() {
        let lln = (n as f64).ln().ln();
        let xs = collect(replicate(master(seed, name, i as u64), c.replicates, |_, rng| {
            Ok(simulate_coalescent(n, rng, Mode::CountsOnly)?.path.time_to_mrca()? - lln)
        }))?;
        let d = ks_statistic(&xs, gumbel_cdf);
        metrics.push(Metric::new(format!("n={n}: KS of A_n - log log n vs Gumbel"), d));
        ks.push(d);
    }
    let checks = vec![Check::new(
        "largest increase of the KS distance across the n-grid",
        max_increase(&ks),
        0.0,
    )];
    Ok(TestReport::from_checks(name, c.replicates, seed, checks).with_metrics(metrics))
}

/// `v*(b) <= b^2 ε_n / log n` at `b ∈ {2, n/10, n/2, n}` with the cutoff
/// `ε_n / log n`.
pub fn variance_rate_bound_check(n: usize, seed: u64) -> Result<TestReport> {
    let p = CouplingParams::for_n(n)?;
    let ln = (n as f64).ln();
    let mut checks = Vec::new();
    for b in [2, n / 10, n / 2, n] {
        let bf = b as f64;
        let v = truncated_variance_rate(b, p.cutoff)?;
        checks.push(Check::new(
            format!("n={n}, b={b}: v*(b) vs b^2 eps_n/log n"),
            v,
            bf * bf * p.eps / ln,
        ));
    }
    Ok(TestReport::from_checks("variance_rate_bound", 1, seed, checks))
}

fn truncated_rate_bounds(cfg: &VerifyConfig, seed: u64) -> Result<TestReport> {
    let mut checks = Vec::new();
    for &n in &cfg.extra.variance_bound_n {
        checks.extend(variance_rate_bound_check(n, seed)?.checks);
        let p = CouplingParams::for_n(n)?;
        let (ln, lln) = ((n as f64).ln(), (n as f64).ln().ln());
        let b = n as f64;
        let centre = b * (b.ln() - lln + p.eps.ln() + EULER_GAMMA - 1.0);
        checks.push(Check::new(
            format!("n=b={n}: |eta*(b) - centre| vs log n / eps_n + 1"),
            (truncated_block_loss_rate(n, p.cutoff)? - centre).abs(),
            ln / p.eps + 1.0,
        ));
    }
    for b in [2, 10, 100] {
        checks.push(Check::new(
            format!("b={b}: |eta*(b) at cutoff 1 - eta(b)|"),
            (truncated_block_loss_rate(b, 1.0)? - block_loss_rate(b)).abs(),
            1e-9,
        ));
    }
    Ok(TestReport::from_checks(EXTRA[0].name, 1, seed, checks))
}

fn population_stationarity(cfg: &VerifyConfig, seed: u64) -> Result<TestReport> {
    let name = EXTRA[1].name;
    let (n, m) = (cfg.extra.stationarity_n, cfg.extra.stationarity_replicates);
    let (s1, s2) = (0.0, 5.0);
    let pairs = collect(replicate(master(seed, name, 0), m, |_, rng| {
        let mut lookback = initial_lookback(n);
        let mut log = simulate_population(n, (s1 - lookback, s2), rng)?;
        loop {
            match (genealogy_at(&log, s1), genealogy_at(&log, s2)) {
                (Ok(a), Ok(b)) => {
                    let monotone = b.trace.count_at(s2 - s1) <= a.trace.count_at(0.0);
                    return Ok((a.a, b.a, monotone));
                }
                (Err(Error::LookbackExhausted { .. }), _) | (_, Err(Error::LookbackExhausted { .. })) => {
                    lookback *= 2.0;
                    extend_backward(&mut log, s1 - lookback, rng)?;
                }
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
        }
    }))?;
    let a1: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let a2: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let bad = pairs.iter().filter(|p| !p.2).count();
    Ok(TestReport::from_checks(
        name,
        m,
        seed,
        vec![
            Check::new(
                format!("A_{n}({s1}) vs A_{n}({s2}) two-sample KS"),
                ks_two_sample(&a1, &a2),
                ks_two_sample_threshold(m, m),
            ),
            Check::new("pairs violating N(s+h, h) <= N(s, 0)", bad as f64, 0.0),
        ],
    ))
}

fn evolving_tree_marginal(cfg: &VerifyConfig, seed: u64) -> Result<TestReport> {
    let name = EXTRA[2].name;
    let (n, m) = (cfg.extra.evolving_n, cfg.extra.evolving_replicates);
    let lln = (n as f64).ln().ln();
    let tree = collect(replicate(master(seed, name, 0), m, |_, rng| {
        let mut state = EvolvingTreeState::new(n, rng)?;
        state.evolve(cfg.extra.evolving_burn_in, rng)?;
        state.check()?;
        Ok(state.r_value())
    }))?;
    let pop = collect(replicate(master(seed, name, 1), m, |_, rng| {
        Ok(sample_genealogy(n, 0.0, rng)?.a - lln)
    }))?;
    Ok(TestReport::from_checks(
        name,
        m,
        seed,
        vec![Check::new(
            format!(
                "R_{n}({}) vs A_{n}(0) - log log n two-sample KS",
                cfg.extra.evolving_burn_in
            ),
            ks_two_sample(&tree, &pop),
            ks_two_sample_threshold(m, m),
        )],
    ))
}

fn time_reversal(cfg: &VerifyConfig, seed: u64) -> Result<TestReport> {
    let name = EXTRA[3].name;
    let (m, h) = (cfg.extra.reversal_samples, cfg.extra.reversal_horizon);
    let r = collect(replicate(master(seed, name, 0), m, |_, rng| {
        Ok(simulate_r(0.0, h, Init::Stationary, rng)?.end_value())
    }))?;
    let a = collect(replicate(master(seed, name, 1), m, |_, rng| {
        Ok(simulate_a(0.0, h, Init::Stationary, rng)?.end_value())
    }))?;
    Ok(TestReport::from_checks(
        name,
        m,
        seed,
        vec![
            Check::new(
                format!("R({h}) vs A({h}) two-sample KS"),
                ks_two_sample(&r, &a),
                ks_two_sample_threshold(m, m),
            ),
            Check::new(
                format!("A({h}) KS vs exp(-e^-y)"),
                ks_statistic(&a, gumbel_cdf),
                ks_threshold(m),
            ),
        ],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup() {
        assert_eq!(find("c05").unwrap().name, "c05_construction_equivalence");
        assert!(find("c07_detailed_balance").is_some());
        assert!(matches!(
            select(&Suite::Named("nope".into())),
            Err(Error::UnknownTest(_))
        ));
        assert_eq!(select(&Suite::Fast).unwrap().len(), 14);
        assert_eq!(select(&"c01,c02".parse().unwrap()).unwrap().len(), 2);
    }

    #[test]
    fn increase() {
        assert!(max_increase(&[3.0, 2.0, 2.0]) <= 0.0);
        assert!(max_increase(&[1.0, 2.0]) > 0.0);
        assert!(max_increase(&[1.0]) <= 0.0);
    }

    #[test]
    fn deterministic_checks_pass() {
        let cfg = VerifyConfig::default();
        for c in [&ACCEPTANCE[0], &ACCEPTANCE[1], &ACCEPTANCE[6], &ACCEPTANCE[8]] {
            let r = (c.run)(&cfg, 1).unwrap();
            assert!(r.pass, "{r:#?}");
        }
    }
}

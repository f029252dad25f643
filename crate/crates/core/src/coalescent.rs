//! Bolthausen–Sznitman coalescent: merger rates, samplers, block-count paths
//! and the paintbox construction of its fixed-time marginals.

use log::warn;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numeric::{choose, choose_exact, exp_m1_minus_z, harmonic, ln1m_plus_y, ln_gamma, open_uniform};
use crate::path::BlockPath;
use crate::quadrature::{integrate, Tolerance};

/// Labeled blocks of `{1..n}`. Blocks are kept sorted internally and ordered
/// by their smallest element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub n: usize,
    pub blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn singletons(n: usize) -> Self {
        Partition {
            n,
            blocks: (1..=n).map(|i| vec![i]).collect(),
        }
    }

    pub fn from_blocks(n: usize, mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_by_key(|b| b.first().copied().unwrap_or(0));
        let p = Partition { n, blocks };
        p.validate()?;
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.n + 1];
        for b in &self.blocks {
            if b.is_empty() {
                return domain("empty block");
            }
            for &i in b {
                if i == 0 || i > self.n || seen[i] {
                    return domain(format!("label {i} out of range or repeated"));
                }
                seen[i] = true;
            }
        }
        if seen[1..].iter().all(|&s| s) {
            Ok(())
        } else {
            domain("blocks do not cover 1..n")
        }
    }

    /// Merges the blocks at the given positions into one.
    fn merge(&mut self, positions: &mut [usize]) {
        positions.sort_unstable_by(|a, b| b.cmp(a));
        let mut merged = Vec::new();
        for &p in positions.iter() {
            merged.extend(self.blocks.swap_remove(p));
        }
        merged.sort_unstable();
        self.blocks.push(merged);
        self.blocks.sort_by_key(|b| b[0]);
    }

    /// Partition induced on `labels` (relabelled `1..labels.len()` in the
    /// given order).
    pub fn restrict(&self, labels: &[usize]) -> Partition {
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for b in &self.blocks {
            let sub: Vec<usize> = labels
                .iter()
                .enumerate()
                .filter(|(_, l)| b.binary_search(l).is_ok())
                .map(|(i, _)| i + 1)
                .collect();
            if !sub.is_empty() {
                blocks.push(sub);
            }
        }
        blocks.sort_by_key(|b| b[0]);
        Partition {
            n: labels.len(),
            blocks,
        }
    }
}

/// `λ_{b,k} = (k-2)!(b-k)!/(b-1)! = 1/((b-1) C(b-2, k-2))`.
pub fn merger_rate(b: usize, k: usize) -> Result<f64> {
    if k < 2 || k > b {
        return domain(format!("merger_rate needs 2 <= k <= b, got b = {b}, k = {k}"));
    }
    let (b64, k64) = (b as u64, k as u64);
    if let Some(c) = choose_exact(b64 - 2, k64 - 2) {
        if let Some(d) = c.checked_mul(b as u128 - 1) {
            return Ok(1.0 / d as f64);
        }
    }
    if b <= 1000 {
        return Ok(1.0 / ((b - 1) as f64 * choose(b64 - 2, k64 - 2)));
    }
    Ok((ln_gamma((k - 1) as f64) + ln_gamma((b - k + 1) as f64) - ln_gamma(b as f64)).exp())
}

/// `λ_b = Σ_k C(b,k) λ_{b,k}`, which equals `b - 1`.
pub fn total_merger_rate(b: usize) -> Result<f64> {
    if b < 2 {
        return domain(format!("total_merger_rate needs b >= 2, got {b}"));
    }
    let mut sum = 0.0;
    for k in (2..=b).rev() {
        sum += choose(b as u64, k as u64) * merger_rate(b, k)?;
    }
    Ok(sum)
}

/// Probability that the next merger among `b` blocks involves `k` of them.
pub fn merger_size_pmf(b: usize, k: usize) -> Result<f64> {
    if k < 2 || k > b {
        return domain(format!("merger_size_pmf needs 2 <= k <= b, got b = {b}, k = {k}"));
    }
    let (b, k) = (b as f64, k as f64);
    Ok(b / ((b - 1.0) * k * (k - 1.0)))
}

/// `P(K >= k) = (b/(k-1) - 1)/(b-1)` for `2 <= k <= b + 1`.
pub fn merger_size_tail(b: usize, k: usize) -> Result<f64> {
    if k < 2 || k > b + 1 || b < 2 {
        return domain(format!("merger_size_tail needs 2 <= k <= b + 1, got b = {b}, k = {k}"));
    }
    let (b, k) = (b as f64, k as f64);
    Ok((b / (k - 1.0) - 1.0) / (b - 1.0))
}

/// Inverse transform on the closed-form tail.
#[inline]
pub fn sample_merger_size<R: Rng + ?Sized>(b: usize, rng: &mut R) -> usize {
    debug_assert!(b >= 2);
    let u: f64 = rng.random();
    let bf = b as f64;
    let k = 1.0 + (bf / (1.0 + u * (bf - 1.0))).floor();
    (k as usize).min(b)
}

/// `η(b) = b Σ_{k=2}^b 1/k`; zero for `b <= 1`.
pub fn block_loss_rate(b: usize) -> f64 {
    if b <= 1 {
        return 0.0;
    }
    b as f64 * (harmonic(b as u64) - 1.0)
}

/// Absolute tolerance for the truncated-rate integrals; a relative term keeps
/// very large rates from demanding more digits than a double holds.
pub const TRUNCATED_TOL: Tolerance = Tolerance::absolute(1e-9).with_rel(1e-13);

fn check_cutoff(b: usize, cutoff: f64) -> Result<()> {
    if b < 1 || !(cutoff > 0.0 && cutoff <= 1.0) {
        return domain(format!(
            "need b >= 1 and cutoff in (0, 1], got b = {b}, cutoff = {cutoff}"
        ));
    }
    Ok(())
}

/// Integral over `(0, cutoff]` of `g(y) y^{-2}`, with `y = e^{-s}` on the
/// lower part so that a singular-looking integrand near zero is resolved.
fn integrate_mark<F: Fn(f64) -> f64>(g: F, cutoff: f64, tol: Tolerance) -> Result<f64> {
    // g(y)/y^2 is bounded at 0; the substitution just spreads the small-y
    // region, where most of the mass sits for large b.
    let s_lo = -cutoff.ln();
    let upper = s_lo + 60.0;
    let e = integrate(
        |s: f64| {
            let y = (-s).exp();
            g(y) / y
        },
        s_lo,
        upper,
        tol,
    )?;
    Ok(e.value)
}

/// Rate at which the block count decreases when mergers driven by marks
/// above `cutoff` are suppressed: `∫_0^c (by - 1 + (1-y)^b) y^{-2} dy`.
pub fn truncated_block_loss_rate(b: usize, cutoff: f64) -> Result<f64> {
    check_cutoff(b, cutoff)?;
    let bf = b as f64;
    integrate_mark(
        |y| {
            if y >= 1.0 {
                return bf - 1.0;
            }
            let z = bf * (-y).ln_1p();
            exp_m1_minus_z(z) + bf * ln1m_plus_y(y)
        },
        cutoff,
        TRUNCATED_TOL,
    )
}

/// `v*(b) = Σ_k (k-1)^2 C(b,k) λ*_{b,k}`, the variance rate of the truncated
/// block-loss process.
pub fn truncated_variance_rate(b: usize, cutoff: f64) -> Result<f64> {
    check_cutoff(b, cutoff)?;
    let bf = b as f64;
    integrate_mark(
        |y| {
            if y >= 1.0 {
                return (bf - 1.0) * (bf - 1.0);
            }
            let z = bf * (-y).ln_1p();
            (bf * bf - bf) * y * y - exp_m1_minus_z(z) - bf * ln1m_plus_y(y)
        },
        cutoff,
        TRUNCATED_TOL,
    )
}

/// Tail probabilities `P(Bin(m, p) >= j)` for `j = 0..=m`, computed from log
/// weights so that neither end underflows prematurely.
pub fn binomial_tails(m: usize, p: f64) -> Vec<f64> {
    if p >= 1.0 {
        return vec![1.0; m + 1];
    }
    if p <= 0.0 {
        let mut v = vec![0.0; m + 1];
        v[0] = 1.0;
        return v;
    }
    let lr = p.ln() - (-p).ln_1p();
    let mut lw = Vec::with_capacity(m + 1);
    let mut cur = m as f64 * (-p).ln_1p();
    lw.push(cur);
    for i in 0..m {
        cur += ((m - i) as f64 / (i + 1) as f64).ln() + lr;
        lw.push(cur);
    }
    let top = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = lw.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = w.iter().sum();
    let mut tails = vec![0.0; m + 1];
    let mut acc = 0.0;
    for j in (0..=m).rev() {
        acc += w[j];
        tails[j] = (acc / total).min(1.0);
    }
    tails
}

/// Merger law of the chain in which only mergers driven by marks at most
/// `cutoff` occur, for a fixed number `b` of blocks:
/// `C(b,k) λ*_{b,k} = b/(k(k-1)) P(Bin(b-1, cutoff) >= k-1)`.
#[derive(Debug, Clone)]
pub struct TruncatedMergerLaw {
    pub b: usize,
    pub cutoff: f64,
    /// `rates[k - 2]` is the rate of `k`-mergers.
    rates: Vec<f64>,
    cumulative: Vec<f64>,
    total: f64,
}

impl TruncatedMergerLaw {
    pub fn new(b: usize, cutoff: f64) -> Result<Self> {
        check_cutoff(b, cutoff)?;
        if b < 2 {
            return domain("truncated merger law needs b >= 2");
        }
        let tails = binomial_tails(b - 1, cutoff);
        let bf = b as f64;
        let mut rates: Vec<f64> = (2..=b)
            .map(|k| bf / (k as f64 * (k as f64 - 1.0)) * tails[k - 1])
            .collect();
        while rates.len() > 1 && *rates.last().unwrap() < 1e-300 {
            rates.pop();
        }
        let mut cumulative = Vec::with_capacity(rates.len());
        let mut acc = 0.0;
        for r in &rates {
            acc += r;
            cumulative.push(acc);
        }
        Ok(TruncatedMergerLaw {
            b,
            cutoff,
            rates,
            cumulative,
            total: acc,
        })
    }

    pub fn total_rate(&self) -> f64 {
        self.total
    }

    /// Rate of `k`-mergers.
    pub fn rate(&self, k: usize) -> f64 {
        if k < 2 {
            return 0.0;
        }
        self.rates.get(k - 2).copied().unwrap_or(0.0)
    }

    pub fn sample_size<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * self.total;
        let i = self.cumulative.partition_point(|&c| c <= u);
        i.min(self.rates.len() - 1) + 2
    }
}

/// Precomputed rates for all `2 <= k <= b <= b_max`.
#[derive(Debug, Clone)]
pub struct RateTable {
    pub b_max: usize,
    lambda: Vec<f64>,
    total: Vec<f64>,
    eta: Vec<f64>,
}

impl RateTable {
    /// Largest supported table; the triangular layout needs `b_max^2/2`
    /// doubles.
    pub const LIMIT: usize = 2000;

    pub fn new(b_max: usize) -> Result<Self> {
        if !(2..=Self::LIMIT).contains(&b_max) {
            return domain(format!("rate table size must be in 2..={}", Self::LIMIT));
        }
        let mut lambda = Vec::with_capacity(b_max * b_max / 2);
        let mut total = vec![0.0; b_max + 1];
        let mut eta = vec![0.0; b_max + 1];
        for b in 2..=b_max {
            for k in 2..=b {
                lambda.push(merger_rate(b, k)?);
            }
            total[b] = total_merger_rate(b)?;
            eta[b] = block_loss_rate(b);
        }
        Ok(RateTable {
            b_max,
            lambda,
            total,
            eta,
        })
    }

    fn offset(b: usize) -> usize {
        // rows b = 2, 3, ... hold b - 1 entries each
        (b - 2) * (b - 1) / 2
    }

    pub fn lambda(&self, b: usize, k: usize) -> f64 {
        assert!(2 <= k && k <= b && b <= self.b_max);
        self.lambda[Self::offset(b) + k - 2]
    }

    pub fn total(&self, b: usize) -> f64 {
        self.total[b]
    }

    pub fn eta(&self, b: usize) -> f64 {
        self.eta[b]
    }

    pub fn tail(&self, b: usize, k: usize) -> f64 {
        merger_size_tail(b, k).expect("index checked by caller")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Labeled,
    CountsOnly,
}

#[derive(Debug, Clone)]
pub struct CoalescentRun {
    pub path: BlockPath,
    /// Partition after each event (including the initial singletons), labeled
    /// mode only.
    pub history: Option<Vec<Partition>>,
}

/// Runs the coalescent from `n` singletons until one block remains.
pub fn simulate_coalescent<R: Rng + ?Sized>(n: usize, rng: &mut R, mode: Mode) -> Result<CoalescentRun> {
    if n < 2 {
        return domain(format!("simulate_coalescent needs n >= 2, got {n}"));
    }
    let mut path = BlockPath::new(n);
    let mut partition = (mode == Mode::Labeled).then(|| Partition::singletons(n));
    let mut history = partition.as_ref().map(|p| vec![p.clone()]);
    let mut t = 0.0;
    let mut b = n;
    while b > 1 {
        t += crate::numeric::exp1(rng) / (b - 1) as f64;
        let k = sample_merger_size(b, rng);
        if let Some(p) = partition.as_mut() {
            let mut pos = index::sample(rng, b, k).into_vec();
            p.merge(&mut pos);
            history.as_mut().unwrap().push(p.clone());
        }
        path.record(t, k)?;
        b = b + 1 - k;
    }
    Ok(CoalescentRun { path, history })
}

/// Block count at time `t` of a coalescent started from `n` blocks, without
/// storing the path.
pub fn sample_block_count<R: Rng + ?Sized>(n: usize, t: f64, rng: &mut R) -> usize {
    let mut s = 0.0;
    let mut b = n;
    while b > 1 {
        s += crate::numeric::exp1(rng) / (b - 1) as f64;
        if s > t {
            break;
        }
        b = b + 1 - sample_merger_size(b, rng);
    }
    b
}

pub fn time_to_mrca(path: &BlockPath) -> Result<f64> {
    path.time_to_mrca()
}

pub fn total_branch_length(path: &BlockPath) -> Result<f64> {
    path.total_branch_length()
}

/// `E[N_n(t)] = Γ(n+α)/(α Γ(α) Γ(n))` with `α = e^{-t}`.
pub fn expected_blocks(n: usize, t: f64) -> f64 {
    if t == 0.0 || n <= 1 {
        return n as f64;
    }
    let a = (-t).exp();
    let nf = n as f64;
    (ln_gamma(nf + a) - ln_gamma(nf) - ln_gamma(a + 1.0)).exp()
}

/// Exact law of the block count at time `t` (uniformisation of the pure-death
/// chain). Index `b` of the result is `P(N_n(t) = b)`. Intended for small `n`.
pub fn block_count_distribution(n: usize, t: f64) -> Result<Vec<f64>> {
    if !(1..=200).contains(&n) {
        return domain("block_count_distribution supports 1 <= n <= 200");
    }
    let mut out = vec![0.0; n + 1];
    if n == 1 {
        out[1] = 1.0;
        return Ok(out);
    }
    let q = (n - 1) as f64;
    let mut v = vec![0.0; n + 1];
    v[n] = 1.0;
    let mut weight = (-q * t).exp();
    let mut m = 0usize;
    let mut mass = 0.0;
    loop {
        for b in 1..=n {
            out[b] += weight * v[b];
        }
        mass += weight;
        if 1.0 - mass < 1e-15 || m > 100_000 {
            break;
        }
        let mut next = vec![0.0; n + 1];
        for b in 1..=n {
            if v[b] == 0.0 {
                continue;
            }
            if b == 1 {
                next[1] += v[1];
                continue;
            }
            let stay = 1.0 - (b - 1) as f64 / q;
            next[b] += v[b] * stay;
            for k in 2..=b {
                next[b - k + 1] += v[b] * choose(b as u64, k as u64) * merger_rate(b, k)? / q;
            }
        }
        v = next;
        m += 1;
        weight *= q * t / m as f64;
    }
    Ok(out)
}

/// Default paintbox truncation: aims for missing mass below `1e-4` of the
/// typical total, but never more than about `2e4` expected points.
pub fn paintbox_delta(t: f64) -> f64 {
    let a = (-t).exp();
    let typical = ((statrs::function::gamma::gamma(1.0 - a) / a).ln() / a).exp();
    let target = (1e-4 * typical * (1.0 - a)).powf(1.0 / (1.0 - a));
    let cap = (a * 2.0e4).powf(-1.0 / a);
    target.max(cap)
}

/// Paintbox sample of the coalescent partition of `{1..n}` at time `t`.
/// Points above `delta` are sampled exactly; the mass below is replaced by its
/// mean and any uniform landing there becomes a singleton.
pub fn paintbox_partition<R: Rng + ?Sized>(n: usize, t: f64, rng: &mut R, delta: Option<f64>) -> Result<Partition> {
    if n < 1 || !(t > 0.0) {
        return domain(format!("paintbox needs n >= 1 and t > 0, got n = {n}, t = {t}"));
    }
    let a = (-t).exp();
    if a < 1e-12 {
        // all mass sits in one interval to double precision
        return Partition::from_blocks(n, vec![(1..=n).collect()]);
    }
    let delta = delta.unwrap_or_else(|| paintbox_delta(t));
    if !(delta > 0.0) {
        return domain("paintbox truncation must be positive");
    }
    let mean_count = delta.powf(-a) / a;
    let count = if mean_count > 0.0 {
        Poisson::new(mean_count)
            .map_err(|e| Error::Domain(e.to_string()))?
            .sample(rng) as usize
    } else {
        0
    };
    let mut prefix = Vec::with_capacity(count);
    let mut s = 0.0;
    for _ in 0..count {
        s += delta * open_uniform(rng).powf(-1.0 / a);
        prefix.push(s);
    }
    let dust = delta.powf(1.0 - a) / (1.0 - a);
    if dust > 0.01 * s {
        warn!("paintbox truncated-mass correction {dust:.3e} exceeds 1% of the sampled mass {s:.3e}");
    }
    let total = s + dust;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot_of: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    for label in 1..=n {
        let v = rng.random::<f64>() * total;
        let i = prefix.partition_point(|&c| c <= v);
        if i >= prefix.len() {
            groups.push(vec![label]);
        } else {
            let g = *slot_of.entry(i).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[g].push(label);
        }
    }
    Partition::from_blocks(n, groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use approx::assert_relative_eq;

    #[test]
    fn rate_examples() {
        assert_eq!(merger_rate(2, 2).unwrap(), 1.0);
        assert_eq!(merger_rate(3, 2).unwrap(), 0.5);
        assert_relative_eq!(merger_rate(4, 3).unwrap(), 1.0 / 6.0, max_relative = 1e-15);
        assert!(merger_rate(4, 1).is_err());
        assert!(merger_rate(4, 5).is_err());
    }

    #[test]
    fn large_b_log_branch() {
        // (k-2)!(b-k)!/(b-1)! at k = 2 is 1/(b-1)
        assert_relative_eq!(merger_rate(5000, 2).unwrap(), 1.0 / 4999.0, max_relative = 1e-10);
        assert_relative_eq!(merger_rate(5000, 5000).unwrap(), 1.0 / 4999.0, max_relative = 1e-10);
    }

    #[test]
    fn total_rate_examples() {
        assert_eq!(total_merger_rate(2).unwrap(), 1.0);
        assert_relative_eq!(total_merger_rate(10).unwrap(), 9.0, max_relative = 1e-14);
        assert_relative_eq!(total_merger_rate(500).unwrap(), 499.0, max_relative = 1e-12);
    }

    #[test]
    fn pmf_examples() {
        assert_eq!(merger_size_pmf(3, 2).unwrap(), 0.75);
        assert_eq!(merger_size_pmf(3, 3).unwrap(), 0.25);
        assert_relative_eq!(merger_size_pmf(101, 2).unwrap(), 0.505, max_relative = 1e-15);
        assert_eq!(merger_size_tail(3, 3).unwrap(), 0.25);
        assert_eq!(merger_size_tail(7, 2).unwrap(), 1.0);
    }

    #[test]
    fn sampler_at_b2_is_two() {
        let mut rng = seeded(1);
        for _ in 0..1000 {
            assert_eq!(sample_merger_size(2, &mut rng), 2);
        }
    }

    #[test]
    fn eta_examples() {
        assert_eq!(block_loss_rate(1), 0.0);
        assert_eq!(block_loss_rate(2), 1.0);
        assert_relative_eq!(block_loss_rate(3), 2.5, max_relative = 1e-15);
    }

    #[test]
    fn truncated_rate_full_support() {
        for b in [2usize, 10, 100] {
            let v = truncated_block_loss_rate(b, 1.0).unwrap();
            assert!((v - block_loss_rate(b)).abs() < 1e-9, "b = {b}: {v}");
        }
        assert!(truncated_block_loss_rate(2, 1e-12).unwrap() < 1e-11);
    }

    #[test]
    fn truncated_variance_small_cases() {
        let c = 0.01;
        assert_relative_eq!(truncated_variance_rate(2, c).unwrap(), c, max_relative = 1e-9);
        assert!(truncated_variance_rate(50, 1e-12).unwrap() < 1e-8);
    }

    #[test]
    fn truncated_law_full_support_is_standard() {
        let law = TruncatedMergerLaw::new(40, 1.0).unwrap();
        assert_relative_eq!(law.total_rate(), 39.0, max_relative = 1e-13);
        for k in 2..=40 {
            assert_relative_eq!(
                law.rate(k) / 39.0,
                merger_size_pmf(40, k).unwrap(),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn truncated_law_matches_eta_star() {
        // Σ (k-1) C(b,k) λ*_{b,k} is the truncated block-loss rate
        let (b, c) = (300usize, 0.02);
        let law = TruncatedMergerLaw::new(b, c).unwrap();
        let from_law: f64 = (2..=b).map(|k| (k - 1) as f64 * law.rate(k)).sum();
        assert_relative_eq!(from_law, truncated_block_loss_rate(b, c).unwrap(), max_relative = 1e-10);
        let var: f64 = (2..=b).map(|k| ((k - 1) as f64).powi(2) * law.rate(k)).sum();
        assert_relative_eq!(var, truncated_variance_rate(b, c).unwrap(), max_relative = 1e-10);
    }

    #[test]
    fn binomial_tails_small() {
        let t = binomial_tails(3, 0.5);
        assert_eq!(t.len(), 4);
        assert_relative_eq!(t[0], 1.0);
        assert_relative_eq!(t[1], 7.0 / 8.0, max_relative = 1e-15);
        assert_relative_eq!(t[3], 1.0 / 8.0, max_relative = 1e-14);
    }

    #[test]
    fn table_matches_direct() {
        let t = RateTable::new(60).unwrap();
        assert_eq!(t.lambda(7, 3), merger_rate(7, 3).unwrap());
        assert_relative_eq!(t.total(60), 59.0, max_relative = 1e-13);
        assert_eq!(t.eta(2), 1.0);
        assert_eq!(t.tail(10, 2), 1.0);
    }

    #[test]
    fn labeled_run_is_consistent() {
        let mut rng = seeded(5);
        let run = simulate_coalescent(30, &mut rng, Mode::Labeled).unwrap();
        run.path.validate().unwrap();
        let hist = run.history.unwrap();
        assert_eq!(hist.len(), run.path.events.len());
        for (p, e) in hist.iter().zip(&run.path.events) {
            p.validate().unwrap();
            assert_eq!(p.len(), e.block_count);
        }
        assert_eq!(hist.last().unwrap().len(), 1);
    }

    #[test]
    fn expected_blocks_examples() {
        assert_eq!(expected_blocks(17, 0.0), 17.0);
        for t in [0.1, 1.0, 3.0] {
            assert_relative_eq!(expected_blocks(2, t), 1.0 + (-t).exp(), max_relative = 1e-12);
        }
        assert_relative_eq!(expected_blocks(1, 0.7), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn exact_law_matches_mean_formula() {
        for &(n, t) in &[(2usize, 0.3), (5, 0.5), (12, 1.4)] {
            let d = block_count_distribution(n, t).unwrap();
            let total: f64 = d.iter().sum();
            let mean: f64 = d.iter().enumerate().map(|(b, p)| b as f64 * p).sum();
            assert_relative_eq!(total, 1.0, max_relative = 1e-12);
            assert_relative_eq!(mean, expected_blocks(n, t), max_relative = 1e-10);
        }
    }

    #[test]
    fn restriction() {
        let p = Partition::from_blocks(5, vec![vec![1, 4], vec![2, 3, 5]]).unwrap();
        let r = p.restrict(&[1, 2, 3]);
        assert_eq!(r.blocks, vec![vec![1], vec![2, 3]]);
    }

    #[test]
    fn paintbox_is_a_partition() {
        let mut rng = seeded(9);
        for &t in &[0.05, 0.5, 3.0] {
            let p = paintbox_partition(40, t, &mut rng, None).unwrap();
            p.validate().unwrap();
        }
        let p = paintbox_partition(10, 800.0, &mut rng, None).unwrap();
        assert_eq!(p.len(), 1);
    }
}

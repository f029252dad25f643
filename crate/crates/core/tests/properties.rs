use proptest::prelude::*;

use bs_coalescent::coalescent::{
    merger_rate, merger_size_pmf, simulate_coalescent, total_merger_rate, Mode, Partition,
};
use bs_coalescent::numeric::choose;
use bs_coalescent::path::PiecewisePath;
use bs_coalescent::pdmp::{simulate_a, simulate_r, transition_atom_r, transition_cdf_r, Init};
use bs_coalescent::population::{genealogy_at, simulate_population, trace_lineages};
use bs_coalescent::recursive_tree::{build_rrt, cutting_path, depth_sum, depth_sum_of_parents, EvolvingTreeState};
use bs_coalescent::rng::seeded;
use bs_coalescent::stable::{drift_for, StablePathTruncated};
use bs_coalescent::verification::{RescaleKind, RescaleSpec};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rate_identities(b in 2usize..=500, frac in 0.0f64..1.0) {
        let k = 2 + ((b - 2) as f64 * frac) as usize;
        let lhs = choose(b as u64, k as u64) * merger_rate(b, k).unwrap();
        prop_assert!(rel(lhs, b as f64 / (k * (k - 1)) as f64) < 1e-12);
        prop_assert!(rel(total_merger_rate(b).unwrap(), (b - 1) as f64) < 1e-12);
    }

    #[test]
    fn merger_pmf_sums_to_one(b in 2usize..=300) {
        let s: f64 = (2..=b).map(|k| merger_size_pmf(b, k).unwrap()).sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coalescent_paths_are_monotone_and_absorbed(n in 2usize..200, seed in any::<u64>()) {
        let run = simulate_coalescent(n, &mut seeded(seed), Mode::CountsOnly).unwrap();
        run.path.validate().unwrap();
        prop_assert!(run.path.is_absorbed());
        for w in run.path.events.windows(2) {
            prop_assert!(w[1].time > w[0].time);
            prop_assert!(w[1].block_count < w[0].block_count);
        }
        prop_assert!(run.path.time_to_mrca().unwrap() > 0.0);
    }

    #[test]
    fn labeled_history_coarsens(n in 2usize..40, seed in any::<u64>()) {
        let run = simulate_coalescent(n, &mut seeded(seed), Mode::Labeled).unwrap();
        let hist = run.history.unwrap();
        prop_assert_eq!(&hist[0], &Partition::singletons(n));
        for (p, e) in hist.iter().zip(&run.path.events) {
            p.validate().unwrap();
            prop_assert_eq!(p.len(), e.block_count);
        }
        for w in hist.windows(2) {
            // every block of the earlier partition sits inside one later block
            for b in &w[0].blocks {
                prop_assert!(w[1].blocks.iter().any(|c| b.iter().all(|x| c.binary_search(x).is_ok())));
            }
        }
        prop_assert_eq!(hist.last().unwrap().len(), 1);
    }

    #[test]
    fn restriction_is_a_partition(n in 3usize..30, seed in any::<u64>(), m in 1usize..3) {
        let run = simulate_coalescent(n, &mut seeded(seed), Mode::Labeled).unwrap();
        let labels: Vec<usize> = (1..=m.min(n)).collect();
        for p in run.history.unwrap() {
            p.restrict(&labels).validate().unwrap();
        }
    }

    #[test]
    fn rescale_round_trip(n in 3usize..1_000_000, raw in -1e3f64..1e6, t in 0.0f64..5.0) {
        for kind in [RescaleKind::Mrca, RescaleKind::Length, RescaleKind::Blocks] {
            let spec = RescaleSpec::new(kind, n).unwrap();
            let back = spec.invert(spec.apply(raw, t).unwrap(), t).unwrap();
            let scale = raw.abs().max(n as f64).max(1.0);
            prop_assert!((back - raw).abs() <= 1e-12 * scale, "{kind:?}: {raw} -> {back}");
        }
    }

    #[test]
    fn stable_path_reconstruction(
        eps in 1e-4f64..0.1,
        raw in prop::collection::vec((0.0f64..1.0, 1.0f64..50.0), 0..40),
        probe in 0.0f64..1.0,
    ) {
        let mut jumps: Vec<(f64, f64)> = raw.iter().map(|&(t, m)| (t * 2.0, eps * m * 1.01)).collect();
        jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
        jumps.dedup_by(|a, b| a.0 == b.0);
        let p = StablePathTruncated::from_jumps(eps, 2.0, &jumps).unwrap();
        let t = probe * 2.0;
        let want = drift_for(eps) * t - jumps.iter().filter(|j| j.0 <= t).map(|j| j.1).sum::<f64>();
        prop_assert!((p.value(t) - want).abs() < 1e-9 * (1.0 + want.abs()));
        for &(s, x) in &jumps {
            prop_assert!((p.left_limit(s) - p.value(s) - x).abs() < 1e-9 * (1.0 + x));
        }
    }

    #[test]
    fn transition_cdf_is_a_cdf(x in -5.0f64..5.0, t in 0.001f64..10.0, ys in prop::collection::vec(-10.0f64..10.0, 2..20)) {
        let mut ys = ys;
        ys.sort_by(f64::total_cmp);
        let vals: Vec<f64> = ys.iter().map(|&y| transition_cdf_r(x, t, y)).collect();
        for w in vals.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        prop_assert!(vals.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert_eq!(transition_cdf_r(x, t, x - t - 1e-9), 0.0);
        prop_assert_eq!(transition_atom_r(x, t), transition_cdf_r(x, t, x - t));
    }

    #[test]
    fn pdmp_paths_have_exact_slopes(seed in any::<u64>(), x0 in -3.0f64..3.0) {
        let mut rng = seeded(seed);
        for (p, slope) in [
            (simulate_r(0.0, 5.0, Init::Level(x0), &mut rng).unwrap(), -1.0),
            (simulate_a(0.0, 5.0, Init::Level(x0), &mut rng).unwrap(), 1.0),
        ] {
            prop_assert_eq!(p.t_end(), 5.0);
            for w in p.knots.windows(2) {
                prop_assert!(w[1].time >= w[0].time);
                if !w[1].is_jump && w[1].time > w[0].time {
                    prop_assert!(((w[1].value - w[0].value) / (w[1].time - w[0].time) - slope).abs() < 1e-9);
                }
                if w[1].is_jump {
                    // R jumps up, A jumps down
                    prop_assert!((w[1].value - w[0].value) * slope < 0.0);
                }
            }
        }
    }

    #[test]
    fn population_keeps_size_n(n in 2usize..60, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let log = simulate_population(n, (-30.0, 1.0), &mut rng).unwrap();
        log.validate().unwrap();
        for i in 0..log.len() {
            let v = log.victims(i);
            prop_assert!(v.len() < n);
            prop_assert!(v.iter().all(|&x| (x as usize) < n && x != log.parents[i]));
        }
        let trace = trace_lineages(&log, 1.0, f64::INFINITY).unwrap();
        prop_assert_eq!(trace.n, n);
        trace.validate().unwrap();
        if let Ok(frame) = genealogy_at(&log, 1.0) {
            prop_assert!(frame.l >= frame.a);
        }
    }

    #[test]
    fn cutting_an_rrt_gives_a_valid_path(n in 2usize..200, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let tree = build_rrt(n, &mut rng).unwrap();
        prop_assert_eq!(depth_sum(&tree), depth_sum_of_parents(&tree.parent));
        let path = cutting_path(tree).unwrap();
        path.validate().unwrap();
        prop_assert!(path.is_absorbed());
    }

    #[test]
    fn evolving_tree_stays_consistent(n in 3usize..80, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let mut state = EvolvingTreeState::new(n, &mut rng).unwrap();
        for _ in 0..5 {
            state.evolve(0.3, &mut rng).unwrap();
            state.check().unwrap();
        }
    }

    #[test]
    fn piecewise_path_limits(values in prop::collection::vec(-5.0f64..5.0, 3..10)) {
        let mut p = PiecewisePath::start(0.0, values[0]);
        for (i, w) in values.windows(2).enumerate() {
            p.jump(i as f64 + 1.0, w[0], w[1]);
        }
        for (i, w) in values.windows(2).enumerate() {
            let t = i as f64 + 1.0;
            prop_assert_eq!(p.left_limit(t), w[0]);
            prop_assert_eq!(p.value_at(t), w[1]);
        }
    }
}

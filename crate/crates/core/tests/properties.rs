use proptest::prelude::*;

use pdmatch::algo::ab::{ab_from_stochastic, AbState};
use pdmatch::algo::concave::{cc_prepare, cc_run_fractional, CcConfig};
use pdmatch::algo::fd::FdState;
use pdmatch::algo::{simulate, LoopConfig};
use pdmatch::audit::for_each_assignment;
use pdmatch::baselines::Greedy;
use pdmatch::harness::{gen_random, ModelParams, RandomSpec, WeightDist};
use pdmatch::model::potential::ONE_MINUS_INV_E;
use pdmatch::model::{sample_assignment, ConcaveSpec, Instance, Problem, RngStream};
use pdmatch::multilinear::{curvature, ENUMERATION_LIMIT};
use pdmatch::oracle::{
    alg_expectation_exact, opt_bruteforce, opt_matching_fd, BRANCH_CAP, BRUTE_FORCE_CAP,
};

fn instance(
    n_offline: usize,
    n_online: usize,
    density: f64,
    weights: WeightDist,
    model: ModelParams,
    seed: u64,
) -> Instance {
    let spec = RandomSpec {
        n_offline,
        n_online,
        density,
        weights,
        model,
    };
    gen_random(&spec, &mut RngStream::new(seed)).unwrap()
}

fn fd(l: usize, r: usize, density: f64, seed: u64) -> Problem {
    Problem::new(instance(
        l,
        r,
        density,
        WeightDist::default(),
        ModelParams::FreeDisposal,
        seed,
    ))
    .unwrap()
}

fn cfg() -> ProptestConfig {
    ProptestConfig {
        cases: 48,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn matching_agrees_with_enumeration(l in 1usize..=4, r in 1usize..=5, d in 0.2f64..1.0, seed: u64) {
        let p = fd(l, r, d, seed);
        let m = opt_matching_fd(&p).unwrap().value;
        let b = opt_bruteforce(&p, BRUTE_FORCE_CAP).unwrap().value;
        prop_assert!((m - b).abs() <= 1e-9 * b.max(1.0), "matching {m} vs enumeration {b}");
    }

    #[test]
    fn fd_levels_stay_valid(l in 1usize..=4, r in 1usize..=6, d in 0.2f64..1.0, seed: u64) {
        let p = fd(l, r, d, seed);
        let mut s = FdState::new(&p, LoopConfig::default()).unwrap();
        let real = simulate(&mut s, &mut RngStream::new(seed ^ 1)).unwrap();
        for y in &s.y {
            prop_assert!(y.is_valid(1e-9));
        }
        let opt = opt_matching_fd(&p).unwrap().value;
        prop_assert!(p.reward(&real).unwrap() <= opt + 1e-9);
        for row in &s.x_rows {
            let mass: f64 = row.iter().map(|&(_, x)| x).sum();
            prop_assert!(row.iter().all(|&(_, x)| x >= 0.0) && mass <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn fd_expected_ratio_meets_the_bound(l in 1usize..=3, r in 1usize..=4, d in 0.3f64..1.0, seed: u64) {
        let p = fd(l, r, d, seed);
        let opt = opt_matching_fd(&p).unwrap().value;
        let s = FdState::new(&p, LoopConfig::default()).unwrap();
        let alg = alg_expectation_exact(s, BRANCH_CAP).unwrap();
        prop_assert!(alg >= (ONE_MINUS_INV_E - 0.01) * opt, "E[ALG] {alg} vs OPT {opt}");
    }

    #[test]
    fn greedy_is_half_competitive(l in 1usize..=4, r in 1usize..=5, d in 0.2f64..1.0, seed: u64) {
        let p = fd(l, r, d, seed);
        let mut gr = Greedy::new(&p);
        let real = simulate(&mut gr, &mut RngStream::new(0)).unwrap();
        let opt = opt_matching_fd(&p).unwrap().value;
        prop_assert!(p.reward(&real).unwrap() >= 0.5 * opt - 1e-9);
    }

    #[test]
    fn rounding_stays_in_support(xs in proptest::collection::vec(0.0f64..1.0, 1..6), seed: u64) {
        let total: f64 = xs.iter().sum();
        let row: Vec<(usize, f64)> = xs.iter().enumerate().map(|(i, &x)| (i * 3, x / total.max(1.0))).collect();
        let choice = sample_assignment(&row, &mut RngStream::new(seed)).unwrap();
        if let Some(i) = choice {
            prop_assert!(row.iter().any(|&(k, x)| k == i && x > 0.0));
        }
    }

    #[test]
    fn ab_budget_fraction_bounded(l in 1usize..=3, r in 1usize..=6, budget in 0.3f64..2.0, seed: u64) {
        let inst = instance(l, r, 0.8, WeightDist::Uniform { lo: 0.0, hi: 1.0 }, ModelParams::AdditiveBudget { budget }, seed);
        let p = Problem::new(inst).unwrap();
        let mut s = AbState::new(&p, LoopConfig::default()).unwrap();
        simulate(&mut s, &mut RngStream::new(seed ^ 7)).unwrap();
        for (&y, &c) in s.y.iter().zip(&s.consumed) {
            prop_assert!((0.0..=1.0).contains(&y));
            prop_assert!(c >= 0.0);
        }
    }

    #[test]
    fn curvature_of_a_sum_is_the_worst_part(l in 1usize..=3, r in 1usize..=4, budget in 0.3f64..1.5, seed: u64) {
        let inst = instance(l, r, 0.8, WeightDist::Uniform { lo: 0.0, hi: 1.0 }, ModelParams::AdditiveBudget { budget }, seed);
        let p = Problem::new(inst).unwrap();
        prop_assume!(p.graph.n_edges() > 0);
        let all: Vec<usize> = (0..p.graph.n_edges()).collect();
        let whole = curvature(&p, &all, ENUMERATION_LIMIT).unwrap().kappa;
        let worst = (0..l)
            .filter_map(|i| {
                let own: Vec<usize> = all.iter().copied().filter(|&e| p.graph.edges[e].0 == i).collect();
                (!own.is_empty()).then(|| curvature(&p, &own, ENUMERATION_LIMIT).unwrap().kappa)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((whole - worst).abs() <= 1e-12, "{whole} vs {worst}");
    }

    #[test]
    fn stochastic_transform_preserves_reward(l in 1usize..=3, r in 1usize..=4, seed: u64) {
        let inst = instance(
            l,
            r,
            0.8,
            WeightDist::Uniform { lo: 0.0, hi: 1.0 },
            ModelParams::StochasticReward { offline_weight: WeightDist::Uniform { lo: 0.2, hi: 3.0 } },
            seed,
        );
        let st = Problem::new(inst.clone()).unwrap();
        let ab = Problem::new(ab_from_stochastic(&inst).unwrap()).unwrap();
        for_each_assignment(&st.graph, 1e6, |a| {
            let (x, y) = (st.reward_unchecked(a)?, ab.reward_unchecked(a)?);
            assert!((x - y).abs() <= 4.0 * f64::EPSILON * x.max(1.0), "{x} vs {y}");
            Ok(())
        })
        .unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn concave_beta_tracks_loads(r in 1usize..=4, seed: u64, exp in any::<bool>()) {
        let shape = if exp {
            ConcaveSpec::ExpSaturating { scale: 1.0 }
        } else {
            ConcaveSpec::SoftplusBudget { eps: 0.1, cap: 1.0 }
        };
        let inst = instance(2, r, 0.8, WeightDist::default(), ModelParams::ConcaveSeparable { shape }, seed);
        let p = Problem::new(inst).unwrap();
        let cfg = CcConfig::default();
        let sol = cc_prepare(&p, &cfg).unwrap();
        let run = cc_run_fractional(&p, &sol, &cfg).unwrap();
        prop_assert!((run.beta - run.beta_direct).abs() <= 1e-8);
        prop_assert!(run.slopes_monotone);
        prop_assert!(run.dual >= run.primal - 1e-9);
    }
}

#[test]
fn exact_expectation_matches_monte_carlo() {
    let p = fd(3, 4, 0.7, 11);
    let exact = alg_expectation_exact(FdState::new(&p, LoopConfig::default()).unwrap(), BRANCH_CAP)
        .unwrap();
    let n = 20_000;
    let xs: Vec<f64> = (0..n)
        .map(|k| {
            let mut s = FdState::new(&p, LoopConfig::default()).unwrap();
            let real = simulate(&mut s, &mut RngStream::for_trial(5, k)).unwrap();
            p.reward(&real).unwrap()
        })
        .collect();
    let s = pdmatch::stats::Summary::of(&xs);
    assert!(
        (s.mean - exact).abs() <= 4.0 * s.stderr + 1e-12,
        "exact {exact} vs {} +- {}",
        s.mean,
        s.stderr
    );
}

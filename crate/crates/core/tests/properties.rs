mod common;

use mcm::evidence::q_to_g;
use mcm::search::{best_mcm_exhaustive_with, SearchOptions};
use mcm::{
    best_mcm_exhaustive, best_mcm_greedy, icc_log_evidence, mcm_log_evidence, Basis, Block,
    BlockCounts, Dataset, FittedMcm, GaugeTransform, McmStructure, Operator,
};
use proptest::prelude::*;
use rand::SeedableRng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn op(n: usize) -> impl Strategy<Value = Operator> {
    (0..1u128 << n).prop_map(move |m| Operator::new(m, n).unwrap())
}

fn dataset(max_n: usize, max_rows: usize) -> impl Strategy<Value = Dataset> {
    (1..=max_n).prop_flat_map(move |n| {
        prop::collection::vec(0..1u128 << n, 1..=max_rows)
            .prop_map(move |rows| Dataset::from_rows(n, rows).unwrap())
    })
}

fn transform(n: usize) -> impl Strategy<Value = GaugeTransform> {
    any::<u64>().prop_map(move |s| common::random_transform(&mut common::rng(s), n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn operators_form_a_group((a, b, c) in (op(7), op(7), op(7)), x in 0..1u128 << 7) {
        let id = Operator::identity(7).unwrap();
        prop_assert_eq!(a.product(&b).unwrap().product(&c).unwrap(), a.product(&b.product(&c).unwrap()).unwrap());
        prop_assert_eq!(a.product(&id).unwrap(), a);
        prop_assert!(a.product(&a).unwrap().is_identity());
        prop_assert_eq!(a.product(&b).unwrap(), b.product(&a).unwrap());
        let ab = a.product(&b).unwrap().evaluate(x).unwrap();
        prop_assert_eq!(ab, a.evaluate(x).unwrap() * b.evaluate(x).unwrap());
    }

    #[test]
    fn transform_round_trip(t in transform(8), x in 0..1u128 << 8, o in op(8)) {
        let y = t.apply(x).unwrap();
        prop_assert_eq!(t.apply_inverse(y).unwrap(), x);
        prop_assert_eq!(t.invert().unwrap().apply(y).unwrap(), x);
        prop_assert_eq!(t.invert().unwrap().invert().unwrap(), t.clone());
        // An operator keeps its value when both it and the state are moved.
        prop_assert_eq!(t.transform_operator(&o).unwrap().evaluate(y).unwrap(), o.evaluate(x).unwrap());
    }

    #[test]
    fn biases_follow_the_transform(d in dataset(6, 40), seed in any::<u64>(), mask in any::<u128>()) {
        let n = d.n();
        let t = common::random_transform(&mut common::rng(seed), n);
        let o = Operator::new(mask & ((1 << n) - 1), n).unwrap();
        let moved = d.transform(&t).unwrap();
        prop_assert_eq!(moved.len(), d.len());
        let a = d.operator_bias(&o).unwrap();
        prop_assert_eq!(a, moved.operator_bias(&t.transform_operator(&o).unwrap()).unwrap());
        prop_assert_eq!(a, common::direct_bias(d.rows(), o.mask()));
    }

    #[test]
    fn projections_marginalize(d in dataset(6, 60), seed in any::<u64>()) {
        let n = d.n();
        let t = common::random_transform(&mut common::rng(seed), n);
        let ops = t.columns();
        let full = d.project_counts(ops).unwrap();
        prop_assert_eq!(full.total(), d.len() as u64);
        // Dropping the last operator sums pairs of cells.
        if n >= 2 {
            let part = d.project_counts(&ops[..n - 1]).unwrap();
            let half = 1 << (n - 1);
            for p in 0..half {
                prop_assert_eq!(part.counts()[p], full.counts()[p] + full.counts()[p + half]);
            }
        }
    }

    #[test]
    fn evidence_is_below_max_likelihood(d in dataset(6, 50), seed in any::<u64>()) {
        let n = d.n();
        let mut r = common::rng(seed);
        let basis = Basis::new(&d, common::random_transform(&mut r, n).columns().to_vec()).unwrap();
        let m = common::random_structure(&mut r, n, n);
        let rep = mcm_log_evidence(&d, &basis, &m).unwrap();
        prop_assert!(rep.total_log_evidence <= rep.max_log_likelihood + 1e-9);
        let block_sum: f64 = rep.per_block.iter().map(|b| b.log_evidence).sum();
        prop_assert!((rep.total_log_evidence - block_sum - rep.unmodeled_term).abs() < 1e-9);
        prop_assert_eq!(rep.per_block.len(), m.modeled_blocks());
    }

    #[test]
    fn evidence_ignores_cell_order(k in prop::collection::vec(0u64..20, 8), rot in 0usize..8) {
        prop_assume!(k.iter().sum::<u64>() > 0);
        let total = k.iter().sum();
        let mut moved = k.clone();
        moved.rotate_left(rot);
        let a = icc_log_evidence(&BlockCounts::new(3, k).unwrap(), total).unwrap();
        let b = icc_log_evidence(&BlockCounts::new(3, moved).unwrap(), total).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn greedy_never_beats_exhaustive(d in dataset(7, 80)) {
        let basis = Basis::identity(&d).unwrap();
        let (best, ex) = best_mcm_exhaustive(&d, &basis).unwrap();
        let trace = best_mcm_greedy(&d, &basis).unwrap();
        let g = trace.best().total_log_evidence;
        prop_assert!(ex.total_log_evidence >= g - 1e-9 * g.abs().max(1.0));
        // Every step's evidence is what a fresh evaluation gives.
        for step in &trace.steps {
            let fresh = mcm_log_evidence(&d, &basis, &step.structure).unwrap().total_log_evidence;
            prop_assert!((fresh - step.total_log_evidence).abs() < 1e-9);
        }
        let fresh = mcm_log_evidence(&d, &basis, &best).unwrap().total_log_evidence;
        prop_assert!((fresh - ex.total_log_evidence).abs() < 1e-9);
    }

    #[test]
    fn exhaustive_beats_every_partition(d in dataset(5, 40)) {
        let basis = Basis::identity(&d).unwrap();
        let (_, ex) = best_mcm_exhaustive_with(&d, &basis, SearchOptions::default()).unwrap();
        for rgs in mcm::enumerate_partitions(d.n()) {
            let m = McmStructure::from_rgs(d.n(), &rgs).unwrap();
            let e = mcm_log_evidence(&d, &basis, &m).unwrap().total_log_evidence;
            prop_assert!(ex.total_log_evidence >= e - 1e-9);
        }
    }

    #[test]
    fn couplings_reproduce_the_table(seed in any::<u64>(), r in 1usize..=3) {
        let mut rng = common::rng(seed);
        let q = common::random_table(&mut rng, 1 << r);
        let block: Vec<Operator> = common::random_transform(&mut rng, 4).columns()[..r].to_vec();
        let g = q_to_g(&q, &block).unwrap();
        prop_assert_eq!(g.len(), (1 << r) - 1);
        // Boltzmann weights over patterns; coupling `i` belongs to subset `i + 1`.
        let w: Vec<f64> = (0..1usize << r)
            .map(|p| {
                g.iter()
                    .enumerate()
                    .map(|(i, (_, gi))| if ((i + 1) & p).count_ones() % 2 == 1 { -gi } else { *gi })
                    .sum::<f64>()
                    .exp()
            })
            .collect();
        let z: f64 = w.iter().sum();
        for (p, wp) in w.iter().enumerate() {
            prop_assert!((wp / z - q[p]).abs() < 1e-12);
        }
        for (i, (o, _)) in g.iter().enumerate() {
            let expect = (0..r)
                .filter(|j| (i + 1) >> j & 1 == 1)
                .fold(0, |m, j| m ^ block[j].mask());
            prop_assert_eq!(o.mask(), expect);
        }
    }

    #[test]
    fn samples_are_deterministic(seed in any::<u64>(), count in 0usize..50) {
        let mut rng = common::rng(seed);
        let (model, _) = common::planted(&mut rng, 5, 10);
        prop_assert_eq!(model.sample(seed, count), model.sample(seed, count));
        prop_assert_eq!(model.sample(seed, count).len(), count);
    }
}

#[test]
fn sampled_patterns_follow_the_tables() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    for _ in 0..5 {
        let (model, d) = common::planted(&mut rng, 6, 40_000);
        let basis = Basis::new(&d, model.operators().to_vec()).unwrap();
        for (b, q) in model
            .structure()
            .blocks()
            .iter()
            .filter(|b| b.modeled)
            .zip(model.q_tables())
        {
            let ops: Vec<Operator> = b.members.iter().map(|&j| basis.operators()[j]).collect();
            let counts = d.project_counts(&ops).unwrap();
            let n = d.len() as f64;
            let stat: f64 = counts
                .counts()
                .iter()
                .zip(q)
                .map(|(&k, &p)| (k as f64 - n * p).powi(2) / (n * p))
                .sum();
            let dof = (q.len() - 1) as f64;
            if dof > 0.0 {
                let pvalue = 1.0 - ChiSquared::new(dof).unwrap().cdf(stat);
                assert!(pvalue > 1e-4, "chi-square {stat} on {dof} dof");
            }
        }
    }
}

#[test]
fn refit_reproduces_tables() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let (model, d) = common::planted(&mut rng, 5, 200_000);
    let basis = Basis::new(&d, model.operators().to_vec()).unwrap();
    let refit = FittedMcm::fit(&d, &basis, model.structure()).unwrap();
    for (a, b) in refit.q_tables().iter().zip(model.q_tables()) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 0.01, "{a:?} vs {b:?}");
        }
    }
}

#[test]
fn uniform_blocks_are_never_modeled_when_worse() {
    // All-distinct rows over 4 spins: a uniform distribution on 16 states.
    let rows: Vec<u128> = (0..16).cycle().take(64).collect();
    let d = Dataset::from_rows(4, rows).unwrap();
    let basis = Basis::identity(&d).unwrap();
    let (m, rep) = best_mcm_exhaustive(&d, &basis).unwrap();
    assert_eq!(m.modeled_blocks(), 0);
    assert!((rep.total_log_evidence + 64.0 * 4.0 * 2f64.ln()).abs() < 1e-9);
    let im = McmStructure::new(4, 4, (0..4).map(|i| Block::modeled(vec![i])).collect()).unwrap();
    assert!(
        mcm_log_evidence(&d, &basis, &im)
            .unwrap()
            .total_log_evidence
            < rep.total_log_evidence
    );
}

mod common;

use std::collections::BTreeMap;

use multicoal_core::builtin;
use multicoal_core::measures::{Atom, MergerMeasureSet};
use multicoal_core::rates::BlockCounts;
use multicoal_core::sim::{
    replicate, run_ensemble, simulate_jump_chain, simulate_labelled, Element, Engine, EnsembleSpec, Event, RngSpec,
    Statistic, Summary, TypedBlock, TypedPartition,
};
use multicoal_core::verification::{exchangeability_check, jensen_bound_check, mc_drift_check};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn counts() -> impl Strategy<Value = (MergerMeasureSet, Vec<usize>)> {
    (1usize..=3).prop_flat_map(|d| (common::measure_set(d), prop::collection::vec(0usize..=5, d))).prop_map(|(m, mut n)| {
        n[0] += 1;
        (m, n)
    })
}

/// A random partition of `n_t` elements per type, built by colouring the
/// blocks of a random set partition.
fn partition() -> impl Strategy<Value = TypedPartition> {
    (1usize..=3, prop::collection::vec(0usize..4, 12), prop::collection::vec(0usize..3, 12)).prop_map(|(d, labels, colours)| {
        let mut groups: BTreeMap<usize, Vec<Element>> = BTreeMap::new();
        for (e, &l) in labels.iter().enumerate() {
            groups.entry(l).or_default().push(Element::new(e % d, e / d));
        }
        let blocks = groups
            .into_values()
            .enumerate()
            .map(|(b, mut members)| {
                members.sort();
                TypedBlock { members, colour: colours[b] % d }
            })
            .collect();
        TypedPartition::new(d, blocks).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jump_paths_are_valid((m, n) in counts(), seed in any::<u64>()) {
        let tr = simulate_jump_chain(&m, &BlockCounts(n.clone()), 2.0, RngSpec::new(seed, 0)).unwrap();
        tr.check_invariants().unwrap();
        prop_assert!(tr.final_state().total() >= 1);
        prop_assert!(tr.final_state().total() <= n.iter().sum::<usize>());
    }

    #[test]
    fn labelled_paths_are_valid((m, n) in counts(), seed in any::<u64>()) {
        let p0 = TypedPartition::singletons(&BlockCounts(n.clone())).unwrap();
        let tr = simulate_labelled(&m, &p0, 2.0, RngSpec::new(seed, 3)).unwrap();
        tr.lumped().check_invariants().unwrap();
        prop_assert_eq!(&tr.partition_at(2.0), &tr.final_partition);
        prop_assert_eq!(tr.final_partition.ground_set(), p0.ground_set());
        prop_assert_eq!(tr.lumped().final_state().clone(), tr.final_partition.counts());
    }

    #[test]
    fn same_seed_same_path((m, n) in counts(), seed in any::<u64>()) {
        let a = simulate_jump_chain(&m, &BlockCounts(n.clone()), 1.0, RngSpec::new(seed, 7)).unwrap();
        let b = simulate_jump_chain(&m, &BlockCounts(n), 1.0, RngSpec::new(seed, 7)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn projection_tower(p in partition(), a in prop::collection::vec(any::<bool>(), 12), b in prop::collection::vec(any::<bool>(), 12)) {
        let ground = p.ground_set();
        let outer: Vec<Element> = ground.iter().zip(&a).filter(|(_, &k)| k).map(|(e, _)| *e).collect();
        let inner: Vec<Element> = outer.iter().zip(&b).filter(|(_, &k)| k).map(|(e, _)| *e).collect();
        prop_assume!(!inner.is_empty());
        let once = p.project(&inner).unwrap();
        let twice = p.project(&outer).unwrap().project(&inner).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(once.ground_set(), { let mut s = inner.clone(); s.sort(); s });
    }

    #[test]
    fn identity_permutation(p in partition()) {
        let id: BTreeMap<Element, Element> = p.ground_set().into_iter().map(|e| (e, e)).collect();
        prop_assert_eq!(p.permute(&id).unwrap(), p);
    }
}

fn first_event_times(m: &MergerMeasureSet, n0: &[usize], replicas: usize, seed: u64) -> Summary {
    let t = replicate(seed, replicas, |rng| {
        let tr = simulate_jump_chain(m, &BlockCounts(n0.to_vec()), f64::INFINITY, rng)?;
        Ok(tr.events[0].time)
    })
    .unwrap();
    Summary::from_samples(&t).unwrap()
}

#[test]
fn kingman_pair_waits_unit_mean() {
    let s = first_event_times(&MergerMeasureSet::kingman(1.0).unwrap(), &[2], 100_000, 11);
    assert!((s.mean - 1.0).abs() < 0.01, "{s:?}");
}

#[test]
fn single_colour_change_waits_unit_mean() {
    let m = common::set(2, vec![vec![0.0, 0.0], vec![1.0, 0.0]], vec![0.0; 2], vec![vec![], vec![]]);
    let s = first_event_times(&m, &[0, 1], 100_000, 12);
    assert!((s.mean - 1.0).abs() < 0.01, "{s:?}");
    let tr = simulate_jump_chain(&m, &BlockCounts(vec![0, 1]), f64::INFINITY, RngSpec::new(1, 0)).unwrap();
    assert_eq!(tr.events.len(), 1);
    assert_eq!(tr.final_state(), &BlockCounts(vec![1, 0]));
}

#[test]
fn full_atom_merges_everything_at_once() {
    let m = common::set(2, vec![vec![0.0; 2]; 2], vec![0.0; 2], vec![vec![Atom::new(1.0, vec![1.0, 1.0])], vec![]]);
    let s = first_event_times(&m, &[3, 2], 50_000, 13);
    assert!((s.mean - 1.0).abs() < 0.015, "{s:?}");
    let tr = simulate_jump_chain(&m, &BlockCounts(vec![3, 2]), f64::INFINITY, RngSpec::new(2, 0)).unwrap();
    assert_eq!(tr.events.len(), 1);
    assert_eq!(tr.final_state(), &BlockCounts(vec![1, 0]));
}

#[test]
fn dormant_blocks_never_merge() {
    let m = builtin::measure_set("seed-bank").unwrap();
    let p0 = TypedPartition::singletons(&BlockCounts(vec![4, 4])).unwrap();
    for r in 0..500 {
        let tr = simulate_labelled(&m, &p0, 5.0, RngSpec::for_replica(14, r)).unwrap();
        for ev in &tr.events {
            if let Event::Merger { k, target } = &ev.event {
                assert_eq!(*target, 0);
                assert_eq!(k.0[1], 0);
            }
        }
    }
}

/// Plain Gillespie loop for the Kingman coalescent.
fn kingman_reference(n: usize, t_max: f64, rng: &mut StdRng) -> usize {
    let (mut b, mut t) = (n, 0.0);
    while b > 1 {
        let rate = (b * (b - 1)) as f64 / 2.0;
        t += -(1.0 - rng.random::<f64>()).ln() / rate;
        if t > t_max {
            break;
        }
        b -= 1;
    }
    b
}

#[test]
fn ensemble_matches_reference_kingman() {
    let m = MergerMeasureSet::kingman(1.0).unwrap();
    let replicas = 40_000;
    for engine in [Engine::Jump, Engine::Atomic] {
        let spec = EnsembleSpec { engine, n0: BlockCounts(vec![10]), t_max: 1.0, replicas, seed: 15 };
        let ours = run_ensemble(&m, &spec, Statistic::TotalBlocks).unwrap();
        let mut rng = StdRng::seed_from_u64(99);
        let reference: Vec<f64> = (0..replicas).map(|_| kingman_reference(10, 1.0, &mut rng) as f64).collect();
        let theirs = Summary::from_samples(&reference).unwrap();
        let se = (ours.std_error.powi(2) + theirs.std_error.powi(2)).sqrt();
        assert!((ours.mean - theirs.mean).abs() < 4.0 * se, "{engine:?}: {ours:?} vs {theirs:?}");
    }
}

#[test]
fn ensemble_is_reproducible() {
    let m = builtin::measure_set("multitype-kingman").unwrap();
    let spec = EnsembleSpec { engine: Engine::Jump, n0: BlockCounts(vec![5, 5]), t_max: 0.5, replicas: 2_000, seed: 3 };
    let a = run_ensemble(&m, &spec, Statistic::TotalBlocks).unwrap();
    let b = run_ensemble(&m, &spec, Statistic::TotalBlocks).unwrap();
    assert_eq!(a, b);
}

#[test]
fn swapping_same_type_elements() {
    let m = builtin::measure_set("seed-bank").unwrap();
    let blocks = vec![
        TypedBlock { members: vec![Element::new(0, 0), Element::new(0, 1)], colour: 0 },
        TypedBlock { members: vec![Element::new(0, 2)], colour: 1 },
        TypedBlock { members: vec![Element::new(1, 0)], colour: 1 },
    ];
    let p0 = TypedPartition::new(2, blocks).unwrap();
    let mut perm: BTreeMap<Element, Element> = p0.ground_set().into_iter().map(|e| (e, e)).collect();
    perm.insert(Element::new(0, 0), Element::new(0, 2));
    perm.insert(Element::new(0, 2), Element::new(0, 0));
    let rep = exchangeability_check(&m, &p0, &perm, 0.5, 20_000, 16).unwrap();
    assert!(rep.passed, "{rep:?}");

    perm.insert(Element::new(0, 0), Element::new(1, 0));
    perm.insert(Element::new(1, 0), Element::new(0, 0));
    perm.insert(Element::new(0, 2), Element::new(0, 2));
    assert!(p0.permute(&perm).is_err());
}

#[test]
fn drift_bias_halves_with_step() {
    let m = MergerMeasureSet::kingman(1.0).unwrap();
    let n = BlockCounts(vec![4]);
    let bias = |h: f64| {
        let rep = mc_drift_check(&m, &n, Some(h), 1_000_000, 17).unwrap();
        assert!(rep.passed, "{rep:?}");
        rep.details["estimate"].as_f64().unwrap() - rep.details["target"].as_f64().unwrap()
    };
    // Leading term (h/2) L²f(4) = 9h; third order shifts the ratio to about 1.9.
    let ratio = bias(0.1) / bias(0.05);
    assert!((1.6..2.2).contains(&ratio), "ratio {ratio}");
}

#[test]
fn colour_changes_alone_keep_the_count() {
    let m = common::set(2, vec![vec![0.0, 0.7], vec![0.4, 0.0]], vec![0.0; 2], vec![vec![], vec![]]);
    let rep = jensen_bound_check(&m, &BlockCounts(vec![3, 5]), &[0.5, 2.0], 2_000, 18).unwrap();
    assert!(rep.passed);
    for row in rep.details["rows"].as_array().unwrap() {
        assert_eq!(row["mean"].as_f64().unwrap(), 8.0);
        assert_eq!(row["w"].as_f64().unwrap(), 8.0);
    }
}

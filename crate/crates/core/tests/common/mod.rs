#![allow(dead_code)]

use multicoal_core::measures::{Atom, FiniteMeasureOnCube, MergerMeasureSet};
use proptest::prelude::*;

pub fn set(d: usize, rho_change: Vec<Vec<f64>>, rho_pair: Vec<f64>, q: Vec<Vec<Atom>>) -> MergerMeasureSet {
    let q = q.into_iter().map(|a| FiniteMeasureOnCube::new(d, a).unwrap()).collect();
    MergerMeasureSet::new(d, rho_change, rho_pair, q).unwrap()
}

fn coordinate() -> impl Strategy<Value = f64> {
    prop_oneof![2 => Just(0.0), 1 => Just(1.0), 6 => 0.0..1.0f64]
}

fn atom(d: usize) -> impl Strategy<Value = Atom> {
    (0.05..2.0f64, prop::collection::vec(coordinate(), d))
        .prop_filter("atom at zero", |(_, s)| s.iter().any(|&x| x > 0.0))
        .prop_map(|(w, s)| Atom::new(w, s))
}

/// Random atomic measure sets of dimension `d`.
pub fn measure_set(d: usize) -> impl Strategy<Value = MergerMeasureSet> {
    let rates = prop::collection::vec(prop_oneof![Just(0.0), 0.0..2.0f64], d * d);
    let pairs = prop::collection::vec(prop_oneof![Just(0.0), 0.0..2.0f64], d);
    let atoms = prop::collection::vec(prop::collection::vec(atom(d), 0..3), d);
    (rates, pairs, atoms).prop_map(move |(r, p, a)| {
        let rho_change = (0..d).map(|j| (0..d).map(|i| if i == j { 0.0 } else { r[j * d + i] }).collect()).collect();
        set(d, rho_change, p, a)
    })
}

pub fn any_measure_set() -> impl Strategy<Value = MergerMeasureSet> {
    (1usize..=3).prop_flat_map(measure_set)
}

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use multicoal_core::analysis::{big_psi, classify_cdi, descent_profile, SpeedForm, Verdict};
use multicoal_core::arrays::{array_from_representation, check_recursion_array, recover_representation};
use multicoal_core::builtin;
use multicoal_core::measures::{Atom, FiniteMeasureOnCube, MergerMeasureSet};
use multicoal_core::sim::{Element, RngSpec, TypedPartition};
use multicoal_core::verification::{
    consistency_check, coupling_bound_check, engine_equivalence_check, inequality_suite, jensen_bound_check,
    mc_drift_check, random_recursion_suite,
};
use multicoal_core::BlockCounts;
use rand::Rng;

const SEED: u64 = 20_240_611;
const REPLICAS: usize = 100_000;

struct Outcome {
    passed: bool,
    summary: String,
}

fn set(d: usize, rho_change: Vec<Vec<f64>>, rho_pair: Vec<f64>, q: Vec<Vec<Atom>>) -> MergerMeasureSet {
    let q = q.into_iter().map(|a| FiniteMeasureOnCube::new(d, a).unwrap()).collect();
    MergerMeasureSet::new(d, rho_change, rho_pair, q).unwrap()
}

fn recursion_identity() -> Outcome {
    let r = random_recursion_suite(SEED, 100, 3, 10).unwrap();
    Outcome {
        passed: r.passed,
        summary: format!("max relative residual {:.2e} (tol 1e-12) over {} triples", r.statistic, r.details["triples"]),
    }
}

fn array_round_trip() -> Outcome {
    let tol_rho = 2f64.powi(-12);
    let rows: Vec<(f64, f64, f64)> = (0..100u64)
        .map(|inst| {
            let mut rng = RngSpec::new(SEED, inst).rng();
            let d = rng.random_range(1..=3);
            let ell: Vec<usize> = (0..d).map(|_| rng.random_range(0..=2)).collect();
            let rho: Vec<f64> = (0..d).map(|_| if rng.random_bool(0.8) { rng.random_range(0.0..2.0) } else { 0.0 }).collect();
            let atoms: Vec<Atom> = (0..rng.random_range(0..=3))
                .map(|_| {
                    let mut s: Vec<f64> = (0..d).map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random() }).collect();
                    let big = rng.random_range(0..d);
                    s[big] = rng.random_range(0.5..=1.0);
                    Atom::new(rng.random_range(0.05..1.0), s)
                })
                .collect();
            let j = FiniteMeasureOnCube::new(d, atoms.clone()).unwrap();
            let a = array_from_representation(ell.clone(), 16, rho.clone(), j).unwrap();
            let residual = check_recursion_array(&a).max_residual;
            let rec = recover_representation(&a, 10).unwrap();
            let rho_err = rec.rho.iter().zip(&rho).map(|(e, r)| (e.value - r).abs()).fold(0.0, f64::max);
            // Direct moments ∫ s^k J(ds) off the box and off the minimal elements.
            let mut moment_err: f64 = 0.0;
            for m in &rec.moments {
                let on_gamma = m.k.iter().filter(|&&c| c > 0).count() == 1
                    && m.k.iter().zip(&ell).any(|(&c, &l)| c == l + 1);
                if on_gamma {
                    continue;
                }
                let exact: f64 = atoms
                    .iter()
                    .map(|a| a.weight * a.point.iter().zip(&m.k).map(|(s, &k)| s.powi(k as i32)).product::<f64>())
                    .sum();
                moment_err = moment_err.max((m.value - exact).abs());
            }
            (residual, rho_err, moment_err)
        })
        .collect();
    let residual = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let rho_err = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let moment_err = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    Outcome {
        passed: residual <= 1e-12 && rho_err <= tol_rho && moment_err <= 1e-10,
        summary: format!(
            "recursion residual {residual:.2e} (tol 1e-12), rho error {rho_err:.2e} (tol {tol_rho:.2e}), moment error {moment_err:.2e} (tol 1e-10)"
        ),
    }
}

fn drift() -> Outcome {
    let kingman = MergerMeasureSet::kingman(1.0).unwrap();
    let colour = set(2, vec![vec![0.0, 1.0], vec![0.5, 0.0]], vec![0.0, 0.0], vec![vec![], vec![]]);
    let atom = set(2, vec![vec![0.0; 2]; 2], vec![0.0, 0.0], vec![vec![Atom::new(1.0, vec![1.0, 1.0])], vec![]]);
    let cases = [
        ("kingman", &kingman, BlockCounts(vec![4]), 6.0),
        ("colour change", &colour, BlockCounts(vec![2, 2]), 0.0),
        ("atom", &atom, BlockCounts(vec![2, 2]), 3.0),
    ];
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, m, n, psi) in cases {
        let x: Vec<f64> = n.0.iter().map(|&c| c as f64).collect();
        let psi_ok = (big_psi(m, &x).unwrap() - psi).abs() < 1e-12;
        let r = mc_drift_check(m, &n, None, REPLICAS, SEED).unwrap();
        passed &= psi_ok && r.passed;
        parts.push(format!("{name}: drift {:.4} vs {:.1} (gap {:.3} ≤ {:.3})", r.details["estimate"], -psi, r.statistic, r.threshold));
    }
    Outcome { passed, summary: parts.join("; ") }
}

fn cdi() -> Outcome {
    let kingman = builtin::measure_set("multitype-kingman").unwrap();
    let seed_bank = builtin::measure_set("seed-bank").unwrap();
    let finite_mass = set(
        2,
        vec![vec![0.0, 0.4], vec![0.2, 0.0]],
        vec![1.0, 0.0],
        vec![vec![], vec![Atom::new(2.0, vec![0.3, 0.8]), Atom::new(0.5, vec![0.0, 1.0])]],
    );
    let all_finite = set(
        3,
        vec![vec![0.0; 3]; 3],
        vec![0.0, 0.0, 0.0],
        vec![vec![Atom::new(1.0, vec![0.5, 0.5, 0.5])], vec![Atom::new(1.0, vec![0.0, 0.9, 0.0])], vec![]],
    );
    let k = classify_cdi(&kingman);
    let s = classify_cdi(&seed_bank);
    let f = classify_cdi(&finite_mass);
    let a = classify_cdi(&all_finite);
    let passed = k.overall == Verdict::ComesDown
        && s.overall == Verdict::StaysInfinite
        && f.per_type.iter().map(|t| t.verdict).collect::<Vec<_>>() == vec![Verdict::ComesDown, Verdict::StaysInfinite]
        && f.overall == Verdict::StaysInfinite
        && a.overall == Verdict::StaysInfinite
        && [&k, &s, &f, &a].iter().all(|r| r.per_type.iter().all(|t| t.evidence.shortcut.is_some()));
    Outcome {
        passed,
        summary: format!(
            "multitype Kingman {:?}, seed bank {:?}, finite-mass type {:?}, finite-mass only {:?}",
            k.overall, s.overall, f.overall, a.overall
        ),
    }
}

fn descent() -> Outcome {
    let m = MergerMeasureSet::kingman(1.0).unwrap();
    let times = [0.1, 0.5, 1.0, 2.0];
    let w = descent_profile(&m, &times, f64::INFINITY, SpeedForm::Asymptotic).unwrap();
    let err = times.iter().zip(&w).map(|(t, w)| (w - 2.0 / t).abs()).fold(0.0, f64::max);
    Outcome { passed: err <= 1e-6, summary: format!("max |w(t) - 2/t| = {err:.2e} (tol 1e-6) with Ω(q) = q²/2") }
}

fn inequalities() -> Outcome {
    let reports = inequality_suite(SEED, 1000, 3, 1e-10).unwrap();
    let passed = reports.iter().all(|r| r.passed);
    let parts: Vec<String> = reports.iter().map(|r| format!("{} {:.1e}", r.name, r.statistic.max(0.0))).collect();
    Outcome { passed, summary: format!("worst violations (tol 1e-10): {}", parts.join(", ")) }
}

fn engines_and_consistency() -> Outcome {
    let configs: Vec<(&str, MergerMeasureSet, BlockCounts, f64)> = vec![
        ("half-atom", set(1, vec![vec![0.0]], vec![0.0], vec![vec![Atom::new(1.0, vec![0.5])]]), BlockCounts(vec![5]), 1.0),
        ("seed-bank", builtin::measure_set("seed-bank").unwrap(), BlockCounts(vec![3, 3]), 1.0),
        (
            "mixed",
            set(
                2,
                vec![vec![0.0, 0.7], vec![0.4, 0.0]],
                vec![0.5, 1.0],
                vec![vec![Atom::new(0.8, vec![0.6, 0.3])], vec![Atom::new(0.5, vec![0.2, 0.9]), Atom::new(0.3, vec![1.0, 0.0])]],
            ),
            BlockCounts(vec![4, 4]),
            0.5,
        ),
    ];
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, m, n0, t) in &configs {
        let e = engine_equivalence_check(m, n0, *t, REPLICAS, SEED).unwrap();
        let p0 = TypedPartition::singletons(n0).unwrap();
        let ground = p0.ground_set();
        let subset: Vec<Element> = ground.iter().copied().step_by(2).collect();
        let c = consistency_check(m, &p0, &subset, *t, REPLICAS, SEED).unwrap();
        passed &= e.passed && c.passed;
        parts.push(format!("{name}: engines p={:.3}, consistency p={:.3}", e.statistic, c.statistic));
    }
    Outcome { passed, summary: parts.join("; ") }
}

fn jensen() -> Outcome {
    let one = MergerMeasureSet::kingman(1.0).unwrap();
    let two = set(2, vec![vec![0.0, 0.5], vec![0.5, 0.0]], vec![1.0, 1.0], vec![vec![], vec![]]);
    let times = [0.25, 1.0];
    let mut passed = true;
    let mut parts = Vec::new();
    for n in [10usize, 20] {
        for (label, m, n0) in [("d=1", &one, BlockCounts(vec![n])), ("d=2", &two, BlockCounts(vec![n / 2, n / 2]))] {
            let r = jensen_bound_check(m, &n0, &times, REPLICAS, SEED).unwrap();
            passed &= r.passed;
            let rows = r.details["rows"].as_array().unwrap();
            let cells: Vec<String> = rows
                .iter()
                .map(|row| format!("{:.3}≤{:.3}", row["mean"].as_f64().unwrap(), row["w"].as_f64().unwrap()))
                .collect();
            parts.push(format!("{label} n0={n}: {}", cells.join(" ")));
        }
    }
    Outcome { passed, summary: parts.join("; ") }
}

fn coupling() -> Outcome {
    let m = builtin::measure_set("seed-bank").unwrap();
    let r = coupling_bound_check(&m, 0, 10, &[0.25, 0.5, 1.0, 2.0], REPLICAS, SEED).unwrap();
    Outcome { passed: r.passed, summary: format!("largest shortfall e^(-rt)E[#κ] - E[#alive] - 3σ = {:.4} (≤ 0)", r.statistic) }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 9] = [
        ("recursion identity", recursion_identity, Duration::from_secs(60)),
        ("array representation round trip", array_round_trip, Duration::from_secs(60)),
        ("drift", drift, Duration::from_secs(120)),
        ("coming down from infinity", cdi, Duration::from_secs(1)),
        ("descent profile", descent, Duration::from_secs(1)),
        ("inequality suite", inequalities, Duration::from_secs(30)),
        ("engine equivalence and consistency", engines_and_consistency, Duration::from_secs(300)),
        ("jensen bound", jensen, Duration::from_secs(120)),
        ("coupling bound", coupling, Duration::from_secs(120)),
    ];
    let mut failures = BTreeMap::new();
    for (k, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *limit;
        let ok = outcome.passed && in_time;
        println!(
            "criterion {} [{name}]: {} {} ({:.2} s, limit {} s)",
            k + 1,
            if ok { "PASS" } else { "FAIL" },
            outcome.summary,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
        if !ok {
            failures.insert(k + 1, name);
        }
    }
    if failures.is_empty() {
        println!("acceptance: all 9 criteria passed");
    } else {
        println!("acceptance: failed criteria {:?}", failures.keys().collect::<Vec<_>>());
        std::process::exit(1);
    }
}

//! Monte Carlo and exact checks tying the simulators to the rate and speed
//! functionals.
//!
//! Every check returns a [`TestReport`] and is deterministic given its seed.
//! Replica `r` of the first sample runs on stream `r`; second samples use
//! streams offset by [`SECOND_SAMPLE`].

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::analysis::{big_psi, descent_profile, omega, phi_flow, psi, psi_tilde, SpeedForm};
use crate::measures::{Atom, FiniteMeasureOnCube, MergerMeasureSet};
use crate::rates::{for_each_sub, recursion_residual, total_outflow, transition_table, BlockCounts, DEFAULT_CAP};
use crate::sim::{
    replicate, simulate_jump_chain, simulate_labelled, simulate_projected_with_killing, simulate_single_type, Element,
    Summary, TypedPartition,
};
use crate::{Error, Result};

/// Stream offset of the second sample in two-sample comparisons.
pub const SECOND_SAMPLE: u64 = 1 << 32;
/// Significance level of the chi-square comparisons.
pub const CHI_SQUARE_LEVEL: f64 = 1e-3;
/// Bins with fewer pooled observations than this are merged.
const MIN_BIN: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub passed: bool,
    pub replicas: usize,
    pub seed: u64,
    /// Check-specific numbers, plus how to reproduce a run.
    pub details: Value,
}

impl TestReport {
    fn new(name: impl Into<String>, statistic: f64, threshold: f64, passed: bool, replicas: usize, seed: u64, details: Value) -> Self {
        Self { name: name.into(), statistic, threshold, passed, replicas, seed, details }
    }
}

/// Result of a two-sample chi-square test on two empirical laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Two-sample chi-square homogeneity test. Bins with fewer than ten pooled
/// observations are merged into one.
pub fn chi_square_two_sample<K: Ord + Clone>(a: &BTreeMap<K, usize>, b: &BTreeMap<K, usize>) -> ChiSquare {
    let keys: BTreeSet<K> = a.keys().chain(b.keys()).cloned().collect();
    let n1: usize = a.values().sum();
    let n2: usize = b.values().sum();
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for k in keys {
        let x = *a.get(&k).unwrap_or(&0) as f64;
        let y = *b.get(&k).unwrap_or(&0) as f64;
        if x + y < MIN_BIN as f64 {
            pooled.0 += x;
            pooled.1 += y;
        } else {
            bins.push((x, y));
        }
    }
    if pooled.0 + pooled.1 > 0.0 {
        bins.push(pooled);
    }
    if bins.len() < 2 || n1 == 0 || n2 == 0 {
        return ChiSquare { statistic: 0.0, dof: 0, p_value: 1.0 };
    }
    let k1 = (n2 as f64 / n1 as f64).sqrt();
    let k2 = (n1 as f64 / n2 as f64).sqrt();
    let statistic = bins.iter().map(|&(x, y)| (k1 * x - k2 * y).powi(2) / (x + y)).sum();
    let dof = bins.len() - 1;
    let p_value = ChiSquared::new(dof as f64).expect("positive dof").sf(statistic);
    ChiSquare { statistic, dof, p_value }
}

fn law<T: Ord>(items: Vec<T>) -> BTreeMap<T, usize> {
    let mut out = BTreeMap::new();
    for x in items {
        *out.entry(x).or_insert(0) += 1;
    }
    out
}

fn chi_report(name: &str, a: BTreeMap<BlockCounts, usize>, b: BTreeMap<BlockCounts, usize>, replicas: usize, seed: u64) -> TestReport {
    let chi = chi_square_two_sample(&a, &b);
    let show = |l: &BTreeMap<BlockCounts, usize>| l.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>();
    TestReport::new(
        name,
        chi.p_value,
        CHI_SQUARE_LEVEL,
        chi.p_value > CHI_SQUARE_LEVEL,
        replicas,
        seed,
        json!({
            "chi_square": chi.statistic,
            "dof": chi.dof,
            "first": show(&a),
            "second": show(&b),
            "reproduce": format!("seed {seed}, streams 0..{replicas} and {SECOND_SAMPLE}+0..{replicas}"),
        }),
    )
}

/// Compares `E[|N(h)| - |n|] / h` from the jump chain with `-Ψ(n)`.
///
/// Passes if the gap is within four standard errors plus a bias bound. The
/// bias is `(h/2) L²f(n)`, computed exactly, plus the Taylor tail of
/// `e^{hL}` bounded through the largest total rate and `Ψ` over all states
/// with at most `|n|` blocks. `h` defaults to `0.05 / R(n)`.
pub fn mc_drift_check(m: &MergerMeasureSet, n: &BlockCounts, h: Option<f64>, replicas: usize, seed: u64) -> Result<TestReport> {
    if n.dim() != m.dim() || n.total() == 0 {
        return Err(Error::InvalidArgument("drift check needs at least one block of the right dimension".into()));
    }
    let x: Vec<f64> = n.0.iter().map(|&c| c as f64).collect();
    let target = -big_psi(m, &x)?;
    let rate = total_outflow(m, &n.0);
    let h = h.unwrap_or(if rate > 0.0 { 0.05 / rate } else { 1.0 });
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("h must be positive, got {h}")));
    }

    let psi_at = |c: &[usize]| big_psi(m, &c.iter().map(|&v| v as f64).collect::<Vec<_>>()).expect("valid point");
    let table = transition_table(m, n, DEFAULT_CAP)?;
    let second: f64 = table
        .entries
        .iter()
        .map(|e| e.class_rate * (-psi_at(&n.after_merge(&e.k.0, e.target).0) - target))
        .sum();
    let total = n.total();
    let states = (total as u128 + 1).saturating_pow(m.dim() as u32);
    if states > 2_000_000 {
        return Err(Error::CapExceeded { needed: states, cap: 2_000_000 });
    }
    let (mut r_bar, mut psi_bar) = (0.0f64, 0.0f64);
    for_each_sub(&vec![total; m.dim()], |c| {
        let size: usize = c.iter().sum();
        if size == 0 || size > total {
            return;
        }
        r_bar = r_bar.max(total_outflow(m, c));
        psi_bar = psi_bar.max(psi_at(c).abs());
    });
    let z = 2.0 * r_bar * h;
    let tail = if z > 0.0 { psi_bar / (2.0 * r_bar) * ((z).exp_m1() - z - z * z / 2.0) / h } else { 0.0 };
    let bias = 0.5 * h * second.abs() + tail;

    let samples = replicate(seed, replicas, |rng| {
        let tr = simulate_jump_chain(m, n, h, rng)?;
        Ok((tr.final_state().total() as f64 - total as f64) / h)
    })?;
    let s = Summary::from_samples(&samples)?;
    let gap = (s.mean - target).abs();
    let threshold = 4.0 * s.std_error + bias;
    Ok(TestReport::new(
        "drift",
        gap,
        threshold,
        gap <= threshold,
        replicas,
        seed,
        json!({
            "n": n, "h": h, "estimate": s.mean, "target": target, "std_error": s.std_error,
            "second_order": 0.5 * h * second, "bias_bound": bias,
            "reproduce": format!("jump chain from {n} to time {h}, seed {seed}, streams 0..{replicas}"),
        }),
    ))
}

fn lumped_counts(p: &TypedPartition) -> BlockCounts {
    p.counts()
}

/// Law of the counts of the projection onto `subset` at time `t`, from the
/// full process and from a process started on the subset.
pub fn consistency_check(
    m: &MergerMeasureSet,
    p0: &TypedPartition,
    subset: &[Element],
    t: f64,
    replicas: usize,
    seed: u64,
) -> Result<TestReport> {
    let start = p0.project(subset)?;
    let full = replicate(seed, replicas, |rng| {
        Ok(lumped_counts(&simulate_labelled(m, p0, t, rng)?.final_partition.project(subset)?))
    })?;
    let direct = replicate(seed, replicas, |rng| {
        Ok(lumped_counts(&simulate_labelled(m, &start, t, rng.offset(SECOND_SAMPLE))?.final_partition))
    })?;
    Ok(chi_report("consistency", law(full), law(direct), replicas, seed))
}

/// Counts at `t` under the jump chain and under the labelled engine.
pub fn engine_equivalence_check(m: &MergerMeasureSet, n0: &BlockCounts, t: f64, replicas: usize, seed: u64) -> Result<TestReport> {
    let p0 = TypedPartition::singletons(n0)?;
    let jump = replicate(seed, replicas, |rng| Ok(simulate_jump_chain(m, n0, t, rng)?.final_state().clone()))?;
    let labelled = replicate(seed, replicas, |rng| {
        Ok(simulate_labelled(m, &p0, t, rng.offset(SECOND_SAMPLE))?.final_partition.counts())
    })?;
    Ok(chi_report("engines", law(jump), law(labelled), replicas, seed))
}

/// Counts at `t` started from `p0` and from `σ p0`.
pub fn exchangeability_check(
    m: &MergerMeasureSet,
    p0: &TypedPartition,
    perm: &BTreeMap<Element, Element>,
    t: f64,
    replicas: usize,
    seed: u64,
) -> Result<TestReport> {
    let permuted = p0.permute(perm)?;
    let a = replicate(seed, replicas, |rng| Ok(simulate_labelled(m, p0, t, rng)?.final_partition.counts()))?;
    let b = replicate(seed, replicas, |rng| {
        Ok(simulate_labelled(m, &permuted, t, rng.offset(SECOND_SAMPLE))?.final_partition.counts())
    })?;
    Ok(chi_report("exchange", law(a), law(b), replicas, seed))
}

/// Mean total block count at each time is at most `w_{|n0|}(t)` plus three
/// standard errors. The statistic is the largest `mean - w - 3σ`.
pub fn jensen_bound_check(m: &MergerMeasureSet, n0: &BlockCounts, times: &[f64], replicas: usize, seed: u64) -> Result<TestReport> {
    if times.is_empty() {
        return Err(Error::InvalidArgument("at least one time is required".into()));
    }
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let w = descent_profile(m, times, n0.total() as f64, SpeedForm::Exact)?;
    let paths = replicate(seed, replicas, |rng| {
        let tr = simulate_jump_chain(m, n0, t_max, rng)?;
        Ok(times.iter().map(|&t| tr.state_at(t).total() as f64).collect::<Vec<f64>>())
    })?;
    let mut worst = f64::NEG_INFINITY;
    let mut rows = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        let s = Summary::from_samples(&paths.iter().map(|p| p[k]).collect::<Vec<_>>())?;
        let excess = s.mean - w[k] - 3.0 * s.std_error;
        worst = worst.max(excess);
        rows.push(json!({"t": t, "mean": s.mean, "std_error": s.std_error, "w": w[k]}));
    }
    Ok(TestReport::new(
        "jensen",
        worst,
        0.0,
        worst <= 0.0,
        replicas,
        seed,
        json!({"n0": n0, "rows": rows, "reproduce": format!("jump chain from {n0}, seed {seed}, streams 0..{replicas}")}),
    ))
}

/// `E[#alive at t] ≥ e^{-r_i t} E[#κ(t)] - 3σ`, where `κ` is the unkilled
/// projected coalescent. The statistic is the largest shortfall.
pub fn coupling_bound_check(m: &MergerMeasureSet, i: usize, n_i: usize, times: &[f64], replicas: usize, seed: u64) -> Result<TestReport> {
    let kill = crate::measures::kill_measure(m, i)?;
    let proj = crate::measures::project_measure(m, i)?;
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let alive = replicate(seed, replicas, |rng| {
        let tr = simulate_projected_with_killing(m, i, n_i, t_max, rng)?;
        Ok(times.iter().map(|&t| tr.state_at(t).total() as f64).collect::<Vec<f64>>())
    })?;
    let kappa = replicate(seed, replicas, |rng| {
        let tr = simulate_single_type(&proj.measure, n_i, t_max, rng.offset(SECOND_SAMPLE))?;
        Ok(times.iter().map(|&t| tr.state_at(t).total() as f64).collect::<Vec<f64>>())
    })?;
    let mut worst = f64::NEG_INFINITY;
    let mut rows = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        let a = Summary::from_samples(&alive.iter().map(|p| p[k]).collect::<Vec<_>>())?;
        let b = Summary::from_samples(&kappa.iter().map(|p| p[k]).collect::<Vec<_>>())?;
        let factor = (-kill.r * t).exp();
        let sigma = (a.std_error.powi(2) + (factor * b.std_error).powi(2)).sqrt();
        let shortfall = factor * b.mean - a.mean - 3.0 * sigma;
        worst = worst.max(shortfall);
        rows.push(json!({"t": t, "alive": a.mean, "kappa": b.mean, "factor": factor, "sigma": sigma}));
    }
    Ok(TestReport::new(
        "coupling",
        worst,
        0.0,
        worst <= 0.0,
        replicas,
        seed,
        json!({"type": i + 1, "n": n_i, "r": kill.r, "rows": rows}),
    ))
}

/// Options for the random measure sets used by the fuzz suites.
#[derive(Debug, Clone, Copy)]
pub struct RandomMeasureOptions {
    pub max_atoms: usize,
    /// Probability that an atom coordinate is exactly 0 (resp. 1).
    pub p_zero: f64,
    pub p_one: f64,
}

impl Default for RandomMeasureOptions {
    fn default() -> Self {
        Self { max_atoms: 3, p_zero: 0.2, p_one: 0.1 }
    }
}

fn random_point<R: Rng>(rng: &mut R, d: usize, opts: &RandomMeasureOptions) -> Vec<f64> {
    loop {
        let p: Vec<f64> = (0..d)
            .map(|_| {
                let u: f64 = rng.random();
                if u < opts.p_zero {
                    0.0
                } else if u < opts.p_zero + opts.p_one {
                    1.0
                } else {
                    rng.random()
                }
            })
            .collect();
        if p.iter().any(|&s| s > 0.0) {
            return p;
        }
    }
}

/// A random atomic measure set of dimension `d`.
pub fn random_measure_set<R: Rng>(rng: &mut R, d: usize, opts: &RandomMeasureOptions) -> MergerMeasureSet {
    let mut rho_change = vec![vec![0.0; d]; d];
    for (j, row) in rho_change.iter_mut().enumerate() {
        for (i, r) in row.iter_mut().enumerate() {
            if i != j && rng.random_bool(0.5) {
                *r = rng.random_range(0.0..2.0);
            }
        }
    }
    let rho_pair = (0..d).map(|_| if rng.random_bool(0.7) { rng.random_range(0.0..2.0) } else { 0.0 }).collect();
    let q = (0..d)
        .map(|_| {
            let count = rng.random_range(0..=opts.max_atoms);
            let atoms = (0..count).map(|_| Atom::new(rng.random_range(0.05..2.0), random_point(rng, d, opts))).collect();
            FiniteMeasureOnCube::new(d, atoms).expect("valid random atoms")
        })
        .collect();
    MergerMeasureSet::new(d, rho_change, rho_pair, q).expect("valid random measure set")
}

/// Largest relative recursion residual over `(b, k, i, j)` with `|b| ≤ max_total`.
pub fn recursion_suite(m: &MergerMeasureSet, max_total: usize) -> Result<TestReport> {
    let d = m.dim();
    let mut worst = 0.0f64;
    let mut count = 0usize;
    let mut at = None;
    let mut err = None;
    for_each_sub(&vec![max_total; d], |b| {
        if b.iter().sum::<usize>() > max_total || err.is_some() {
            return;
        }
        for_each_sub(b, |k| {
            let size: usize = k.iter().sum();
            if size == 0 {
                return;
            }
            for i in 0..d {
                if size == 1 && k[i] == 1 {
                    continue;
                }
                let scale = crate::rates::merger_rate(m, &BlockCounts(b.to_vec()), &BlockCounts(k.to_vec()), i);
                for j in 0..d {
                    match (recursion_residual(m, &BlockCounts(b.to_vec()), &BlockCounts(k.to_vec()), i, j), &scale) {
                        (Ok(r), Ok(s)) => {
                            let rel = if *s > 0.0 { r.abs() / s } else { r.abs() };
                            count += 1;
                            if rel > worst {
                                worst = rel;
                                at = Some((b.to_vec(), k.to_vec(), i + 1, j + 1));
                            }
                        }
                        (Err(e), _) => {
                            err.get_or_insert(e.to_string());
                        }
                        (_, Err(e)) => {
                            err.get_or_insert(e.to_string());
                        }
                    }
                }
            }
        });
    });
    if let Some(e) = err {
        return Err(Error::InvalidArgument(e));
    }
    Ok(TestReport::new(
        "recursion",
        worst,
        1e-12,
        worst <= 1e-12,
        0,
        0,
        json!({"triples": count, "max_total": max_total, "worst_at": at}),
    ))
}

/// Recursion suite over `instances` random measure sets of dimension up to `d_max`.
pub fn random_recursion_suite(seed: u64, instances: usize, d_max: usize, max_total: usize) -> Result<TestReport> {
    let opts = RandomMeasureOptions::default();
    let reports = replicate(seed, instances, |rng| {
        let mut r = rng.rng();
        let d = r.random_range(1..=d_max);
        recursion_suite(&random_measure_set(&mut r, d, &opts), max_total)
    })?;
    let (idx, worst) = reports
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |acc, (k, r)| if r.statistic > acc.1 { (k, r.statistic) } else { acc });
    let triples: usize = reports.iter().map(|r| r.details["triples"].as_u64().unwrap_or(0) as usize).sum();
    Ok(TestReport::new(
        "recursion",
        worst,
        1e-12,
        worst <= 1e-12,
        instances,
        seed,
        json!({"instances": instances, "triples": triples, "worst_instance": idx, "max_total": max_total}),
    ))
}

/// The speed inequalities on `samples` random (measure, point) pairs:
/// `ψ̃ ≤ ψ`, `2ψ̃ ≥ ψ` for `q ≥ 2`, `Ψ ≥ Σ ψ̃_j`, midpoint convexity of `Ψ`
/// and `Ω`, and `Ψ = -Σ Φ_j`.
///
/// The lower bound `Ψ ≥ Σ ψ̃_j` is sampled at points whose coordinates are
/// 0 or at least 1; it can fail for coordinates strictly between 0 and 1.
pub fn inequality_suite(seed: u64, samples: usize, d_max: usize, tolerance: f64) -> Result<Vec<TestReport>> {
    let opts = RandomMeasureOptions::default();
    let rows = replicate(seed, samples, |rng| {
        let mut r = rng.rng();
        let d = r.random_range(1..=d_max);
        let m = random_measure_set(&mut r, d, &opts);
        let q: f64 = r.random_range(0.0..20.0);
        let q2: f64 = r.random_range(2.0..20.0);
        let mut worst = [0.0f64; 6];
        for i in 0..d {
            worst[0] = worst[0].max(psi_tilde(&m, i, q)? - psi(&m, i, q)?);
            worst[1] = worst[1].max(psi(&m, i, q2)? - 2.0 * psi_tilde(&m, i, q2)?);
        }
        let lattice: Vec<f64> = (0..d).map(|_| if r.random_bool(0.25) { 0.0 } else { r.random_range(1.0..15.0) }).collect();
        let lower: f64 = (0..d).map(|j| psi_tilde(&m, j, lattice[j])).sum::<Result<f64>>()?;
        worst[2] = worst[2].max(lower - big_psi(&m, &lattice)?);
        let x: Vec<f64> = (0..d).map(|_| r.random_range(0.0..15.0)).collect();
        let y: Vec<f64> = (0..d).map(|_| r.random_range(0.0..15.0)).collect();
        let lam: f64 = r.random();
        let mix: Vec<f64> = x.iter().zip(&y).map(|(a, b)| lam * a + (1.0 - lam) * b).collect();
        worst[3] = worst[3].max(big_psi(&m, &mix)? - lam * big_psi(&m, &x)? - (1.0 - lam) * big_psi(&m, &y)?);
        let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
        let om = omega(&m, lam * sx + (1.0 - lam) * sy)? - lam * omega(&m, sx)? - (1.0 - lam) * omega(&m, sy)?;
        worst[4] = worst[4].max(om);
        worst[5] = worst[5].max((big_psi(&m, &x)? + phi_flow(&m, &x)?.iter().sum::<f64>()).abs());
        Ok(worst)
    })?;
    let names = ["psi-tilde-below-psi", "psi-below-twice-psi-tilde", "big-psi-lower-bound", "big-psi-convex", "omega-convex", "flow-identity"];
    Ok(names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let worst = rows.iter().map(|w| w[k]).fold(f64::NEG_INFINITY, f64::max);
            TestReport::new(*name, worst, tolerance, worst <= tolerance, samples, seed, json!({"samples": samples, "d_max": d_max}))
        })
        .collect())
}

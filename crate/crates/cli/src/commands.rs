use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::{json, Value};

use multicoal_core::analysis::{classify_cdi_with, descent_profile, flow_profile, CdiOptions, SpeedForm};
use multicoal_core::arrays::{check_recursion_array, recover_representation, ArrayConfig};
use multicoal_core::builtin;
use multicoal_core::config::MeasureConfig;
use multicoal_core::rates::{merger_rate, transition_table, BlockCounts, DEFAULT_CAP};
use multicoal_core::sim::{replicate, simulate_jump_chain, simulate_labelled, write_csv, write_csv_header, Element, TypedPartition};
use multicoal_core::verification::{
    consistency_check, exchangeability_check, inequality_suite, jensen_bound_check, mc_drift_check, random_recursion_suite,
    recursion_suite, TestReport,
};
use multicoal_core::{MergerMeasureSet, SCHEMA_VERSION};

use crate::args::{
    ArraysArgs, CdiArgs, Command, EngineArg, ExamplesArgs, FlowArgs, FormArg, RatesArgs, SimulateArgs, Suite, VerifyArgs,
};

pub enum Outcome {
    Success,
    ChecksFailed,
}

pub fn dispatch(command: Command) -> Result<Outcome> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Rates(a) => rates(a),
        Command::Cdi(a) => cdi(a),
        Command::Flow(a) => flow(a),
        Command::Arrays(a) => arrays(a),
        Command::Verify(a) => verify(a),
        Command::Examples(a) => examples(a),
    }
}

fn load_measure(source: &str) -> Result<MergerMeasureSet> {
    let cfg = match source.strip_prefix("builtin:") {
        Some(name) => builtin::config(name)?,
        None => MeasureConfig::load(source)?,
    };
    cfg.build().with_context(|| format!("invalid configuration {source}"))
}

/// `MULTICOAL_SEED` takes precedence over the flag.
fn seed(flag: u64) -> Result<u64> {
    match std::env::var("MULTICOAL_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| anyhow!("MULTICOAL_SEED must be an unsigned integer, got {v:?}")),
        Err(_) => Ok(flag),
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| anyhow!("cannot parse {what} entry {s:?}")))
        .collect()
}

fn parse_counts(text: &str, d: usize, what: &str) -> Result<BlockCounts> {
    let v: Vec<usize> = parse_list(text, what)?;
    if v.len() != d {
        bail!("{what} has {} entries, expected {d}", v.len());
    }
    Ok(BlockCounts(v))
}

fn parse_time(text: &str) -> Result<f64> {
    let t: f64 = match text.trim() {
        "inf" | "infinity" => f64::INFINITY,
        s => s.parse().map_err(|_| anyhow!("cannot parse time {s:?}"))?,
    };
    if t.is_nan() || t < 0.0 {
        bail!("time must be non-negative, got {text}");
    }
    Ok(t)
}

/// `a,b,c` or `start:stop:count`.
fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, stop, count] => {
            let (a, b) = (parse_time(start)?, parse_time(stop)?);
            let n: usize = count.trim().parse().map_err(|_| anyhow!("cannot parse grid count {count:?}"))?;
            if n < 2 || !b.is_finite() {
                bail!("a range grid needs a finite stop and at least 2 points");
            }
            Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect())
        }
        [_] => text.split(',').map(parse_time).collect(),
        _ => bail!("grid must be a list or start:stop:count"),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn print_json(value: &Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn with_schema(mut value: Value) -> Value {
    if let Value::Object(map) = &mut value {
        map.insert("schema_version".into(), json!(SCHEMA_VERSION));
    }
    value
}

fn simulate(a: SimulateArgs) -> Result<Outcome> {
    let m = load_measure(&a.config.config)?;
    let n0 = parse_counts(&a.n0, m.dim(), "n0")?;
    let t_max = parse_time(&a.t_max)?;
    let seed = seed(a.seed.seed)?;
    let trajectories = match a.engine {
        EngineArg::Jump => replicate(seed, a.replicas, |rng| simulate_jump_chain(&m, &n0, t_max, rng))?,
        EngineArg::Atomic => {
            let p0 = TypedPartition::singletons(&n0)?;
            replicate(seed, a.replicas, |rng| Ok(simulate_labelled(&m, &p0, t_max, rng)?.lumped()))?
        }
    };
    let mut out = output(a.out.as_deref())?;
    write_csv_header(&mut out, m.dim())?;
    for (r, tr) in trajectories.iter().enumerate() {
        write_csv(&mut out, r, tr)?;
    }
    out.flush()?;
    Ok(Outcome::Success)
}

fn rates(a: RatesArgs) -> Result<Outcome> {
    let m = load_measure(&a.config.config)?;
    let d = m.dim();
    let mut out = io::stdout().lock();
    if let (Some(b), Some(k), Some(target)) = (&a.b, &a.k, a.target) {
        let b = parse_counts(b, d, "b")?;
        let k = parse_counts(k, d, "k")?;
        if target == 0 || target > d {
            bail!("target must be in 1..={d}");
        }
        writeln!(out, "{}", merger_rate(&m, &b, &k, target - 1)?)?;
        return Ok(Outcome::Success);
    }
    let n = parse_counts(a.n.as_deref().expect("clap requires --n without --b"), d, "n")?;
    let table = transition_table(&m, &n, DEFAULT_CAP)?;
    let ks: Vec<String> = (1..=d).map(|t| format!("k_{t}")).collect();
    writeln!(out, "{},target_type,multiplicity,rate,class_rate", ks.join(","))?;
    for e in &table.entries {
        let k: Vec<String> = e.k.0.iter().map(|c| c.to_string()).collect();
        writeln!(out, "{},{},{},{},{}", k.join(","), e.target + 1, e.multiplicity, e.rate, e.class_rate)?;
    }
    Ok(Outcome::Success)
}

fn cdi(a: CdiArgs) -> Result<Outcome> {
    let m = load_measure(&a.config.config)?;
    if !(a.q_max > 1.0) || !(a.margin > 0.0) {
        bail!("q-max must exceed 1 and margin must be positive");
    }
    let report = classify_cdi_with(&m, CdiOptions { q_max: a.q_max, margin: a.margin, ..CdiOptions::default() });
    print_json(&with_schema(serde_json::to_value(report)?))?;
    Ok(Outcome::Success)
}

fn flow(a: FlowArgs) -> Result<Outcome> {
    let m = load_measure(&a.config.config)?;
    let times = parse_grid(&a.t_grid)?;
    let mut out = io::stdout().lock();
    let scalar = !a.x0.contains(',');
    if a.descent || a.x0.trim() == "inf" || (scalar && m.dim() > 1) {
        let n0 = parse_time(&a.x0)?;
        let form = match a.form {
            FormArg::Exact => SpeedForm::Exact,
            FormArg::Asymptotic => SpeedForm::Asymptotic,
        };
        let w = descent_profile(&m, &times, n0, form)?;
        writeln!(out, "t,w")?;
        for (t, w) in times.iter().zip(&w) {
            writeln!(out, "{t},{w}")?;
        }
    } else {
        let x0: Vec<f64> = parse_list(&a.x0, "x0")?;
        let path = flow_profile(&m, &times, &x0)?;
        let cols: Vec<String> = (1..=m.dim()).map(|i| format!("v_{i}")).collect();
        writeln!(out, "t,{}", cols.join(","))?;
        for (t, x) in times.iter().zip(&path) {
            let row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{t},{}", row.join(","))?;
        }
    }
    Ok(Outcome::Success)
}

fn arrays(a: ArraysArgs) -> Result<Outcome> {
    let text = fs::read_to_string(&a.input).with_context(|| format!("cannot read {}", a.input.display()))?;
    let array = ArrayConfig::from_json(&text)?.build()?;
    match recover_representation(&array, a.max_order) {
        Ok(recovery) => {
            print_json(&serde_json::to_value(recovery)?)?;
            Ok(Outcome::Success)
        }
        Err(multicoal_core::Error::RecursionViolated { .. }) => {
            let check = check_recursion_array(&array);
            print_json(&with_schema(json!({ "recursion": check })))?;
            Ok(Outcome::ChecksFailed)
        }
        Err(e) => Err(e.into()),
    }
}

fn default_counts(d: usize) -> BlockCounts {
    BlockCounts(vec![if d == 1 { 4 } else { 2 }; d])
}

fn verify(a: VerifyArgs) -> Result<Outcome> {
    let seed = seed(a.seed.seed)?;
    let m = a.config.as_deref().map(load_measure).transpose()?;
    let needs = |m: &Option<MergerMeasureSet>| -> Result<MergerMeasureSet> {
        m.clone().ok_or_else(|| anyhow!("suite {} needs --config", format!("{:?}", a.suite).to_lowercase()))
    };
    let n0 = |m: &MergerMeasureSet| match &a.n0 {
        Some(text) => parse_counts(text, m.dim(), "n0"),
        None => Ok(default_counts(m.dim())),
    };
    let reports: Vec<TestReport> = match a.suite {
        Suite::Drift => {
            let m = needs(&m)?;
            vec![mc_drift_check(&m, &n0(&m)?, a.h, a.replicas, seed)?]
        }
        Suite::Consistency => {
            let m = needs(&m)?;
            let p0 = TypedPartition::singletons(&n0(&m)?)?;
            let subset: Vec<Element> = p0.ground_set().into_iter().step_by(2).collect();
            vec![consistency_check(&m, &p0, &subset, a.t, a.replicas, seed)?]
        }
        Suite::Exchange => {
            let m = needs(&m)?;
            let p0 = TypedPartition::singletons(&n0(&m)?)?;
            let ground = p0.ground_set();
            let mut perm: BTreeMap<Element, Element> = ground.iter().map(|&e| (e, e)).collect();
            let pair = ground
                .windows(2)
                .find(|w| w[0].ty == w[1].ty)
                .ok_or_else(|| anyhow!("exchange needs two elements of the same type"))?;
            perm.insert(pair[0], pair[1]);
            perm.insert(pair[1], pair[0]);
            vec![exchangeability_check(&m, &p0, &perm, a.t, a.replicas, seed)?]
        }
        Suite::Jensen => {
            let m = needs(&m)?;
            let times = parse_grid(&a.times)?;
            vec![jensen_bound_check(&m, &n0(&m)?, &times, a.replicas, seed)?]
        }
        Suite::Inequalities => inequality_suite(seed, a.samples, 3, 1e-10)?,
        Suite::Recursion => match &m {
            Some(m) => vec![recursion_suite(m, a.max_total)?],
            None => vec![random_recursion_suite(seed, a.instances, 3, a.max_total)?],
        },
    };
    let passed = reports.iter().all(|r| r.passed);
    let values = reports.into_iter().map(|r| serde_json::to_value(r).map(with_schema)).collect::<Result<Vec<_>, _>>()?;
    print_json(&Value::Array(values))?;
    Ok(if passed { Outcome::Success } else { Outcome::ChecksFailed })
}

fn examples(a: ExamplesArgs) -> Result<Outcome> {
    fs::create_dir_all(&a.dir).with_context(|| format!("cannot create {}", a.dir.display()))?;
    for name in builtin::NAMES {
        let path = a.dir.join(format!("{name}.json"));
        fs::write(&path, builtin::config(name)?.to_json_pretty() + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?;
        println!("{}", path.display());
    }
    Ok(Outcome::Success)
}

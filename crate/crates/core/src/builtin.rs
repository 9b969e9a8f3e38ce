//! Ready-made measure sets for the standard examples.

use crate::config::{FamilyConfig, MeasureConfig, OneOrMany};
use crate::measures::{csbp_local_rates, CsbpConvention, CsbpParams, MergerMeasureSet, QuadratureRule};
use crate::{Error, Result, SCHEMA_VERSION};

pub const NAMES: [&str; 4] = ["multitype-kingman", "seed-bank", "limic-sturm", "csbp-local"];

fn base(d: usize, rho_change: Vec<(usize, usize, f64)>, rho_pair: Vec<f64>) -> MeasureConfig {
    MeasureConfig { schema_version: Some(SCHEMA_VERSION), d, rho_change, rho_pair, q: Vec::new(), family: None }
}

/// Branching data used by `csbp-local`, evaluated at population `(2, 1)`.
pub fn csbp_example() -> (CsbpParams, Vec<f64>) {
    let params = CsbpParams {
        beta: vec![1.0, 0.5],
        kappa: vec![vec![0.0, 0.3], vec![0.2, 0.0]],
        nu: vec![vec![(0.5, vec![1.0, 0.0])], vec![(0.25, vec![0.5, 2.0])]],
    };
    (params, vec![2.0, 1.0])
}

pub fn config(name: &str) -> Result<MeasureConfig> {
    match name {
        "multitype-kingman" => Ok(base(2, vec![(1, 2, 0.5), (2, 1, 0.5)], vec![1.0, 2.0])),
        "seed-bank" => Ok(base(2, vec![(1, 2, 1.0), (2, 1, 1.0)], vec![1.0, 0.0])),
        "limic-sturm" => {
            let family = |target| FamilyConfig {
                target,
                kind: "beta".into(),
                a: Some(0.5),
                b: Some(1.5),
                mass: Some(1.0),
                c: None,
                theta: None,
                rule: QuadratureRule::GaussLegendre,
                nodes: 32,
            };
            let mut cfg = base(2, vec![(1, 2, 0.5), (2, 1, 0.5)], vec![0.0, 0.0]);
            cfg.family = Some(OneOrMany::Many(vec![family(1), family(2)]));
            Ok(cfg)
        }
        "csbp-local" => {
            let (params, x) = csbp_example();
            let m = csbp_local_rates(&params, &x, CsbpConvention::Feller)?;
            Ok(MeasureConfig::from_measure_set(&m))
        }
        other => Err(Error::InvalidArgument(format!("unknown example '{other}'; known: {}", NAMES.join(", ")))),
    }
}

pub fn measure_set(name: &str) -> Result<MergerMeasureSet> {
    config(name)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{classify_cdi, Verdict};

    #[test]
    fn all_examples_build_and_round_trip() {
        for name in NAMES {
            let cfg = config(name).unwrap();
            let again = MeasureConfig::from_json(&cfg.to_json_pretty()).unwrap();
            assert_eq!(cfg.build().unwrap(), again.build().unwrap(), "{name}");
        }
        assert!(config("nope").is_err());
    }

    #[test]
    fn verdicts() {
        assert_eq!(classify_cdi(&measure_set("multitype-kingman").unwrap()).overall, Verdict::ComesDown);
        assert_eq!(classify_cdi(&measure_set("seed-bank").unwrap()).overall, Verdict::StaysInfinite);
        assert_eq!(classify_cdi(&measure_set("limic-sturm").unwrap()).overall, Verdict::ComesDown);
        assert_eq!(classify_cdi(&measure_set("csbp-local").unwrap()).overall, Verdict::ComesDown);
    }
}

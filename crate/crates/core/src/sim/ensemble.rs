use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::jump::simulate_jump_chain;
use super::killed::simulate_projected_with_killing;
use super::labelled::simulate_labelled;
use super::partition::TypedPartition;
use super::rng::RngSpec;
use super::trajectory::Trajectory;
use crate::measures::MergerMeasureSet;
use crate::rates::BlockCounts;
use crate::{Error, Result};

/// Runs `f` once per replica on stream `r` of `seed`, in parallel.
/// Results come back in replica order.
pub fn replicate<T, F>(seed: u64, replicas: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(RngSpec) -> Result<T> + Sync,
{
    if replicas == 0 {
        return Err(Error::InvalidArgument("replica count must be at least 1".into()));
    }
    (0..replicas).into_par_iter().map(|r| f(RngSpec::for_replica(seed, r))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "engine")]
pub enum Engine {
    Jump,
    /// The labelled engine started from singletons, lumped to counts.
    Atomic,
    /// Projected coalescent of one type with killing, started from `n0[target]`.
    Killed { target: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub engine: Engine,
    pub n0: BlockCounts,
    pub t_max: f64,
    pub replicas: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn run_one(&self, m: &MergerMeasureSet, rng: RngSpec) -> Result<Trajectory> {
        match self.engine {
            Engine::Jump => simulate_jump_chain(m, &self.n0, self.t_max, rng),
            Engine::Atomic => {
                let p0 = TypedPartition::singletons(&self.n0)?;
                Ok(simulate_labelled(m, &p0, self.t_max, rng)?.lumped())
            }
            Engine::Killed { target } => {
                m.check_type(target)?;
                let n = *self.n0.0.get(target).ok_or(Error::TypeOutOfRange { index: target, d: self.n0.dim() })?;
                simulate_projected_with_killing(m, target, n, self.t_max, rng)
            }
        }
    }

    pub fn trajectories(&self, m: &MergerMeasureSet) -> Result<Vec<Trajectory>> {
        replicate(self.seed, self.replicas, |rng| self.run_one(m, rng))
    }
}

/// A scalar read off the state at `t_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    TotalBlocks,
    /// Blocks of one type (index 0 for the killed engine).
    Blocks(usize),
    EventCount,
}

impl Statistic {
    pub fn eval(&self, traj: &Trajectory) -> f64 {
        match *self {
            Statistic::TotalBlocks => traj.final_state().total() as f64,
            Statistic::Blocks(i) => traj.final_state().0.get(i).copied().unwrap_or(0) as f64,
            Statistic::EventCount => traj.events.len() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub replicas: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub ci95: (f64, f64),
    /// Distinct values with counts, when the statistic is integer-valued.
    pub distribution: Option<Vec<(i64, usize)>>,
}

impl Summary {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n == 0 {
            return Err(Error::InvalidArgument("no samples".into()));
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let variance = if n > 1 { samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        let std_error = (variance / n as f64).sqrt();
        let distribution = samples.iter().all(|x| x.fract() == 0.0 && x.abs() < 1e15).then(|| {
            let mut map = BTreeMap::new();
            for &x in samples {
                *map.entry(x as i64).or_insert(0usize) += 1;
            }
            map.into_iter().collect()
        });
        Ok(Self { replicas: n, mean, variance, std_error, ci95: (mean - 1.96 * std_error, mean + 1.96 * std_error), distribution })
    }
}

pub fn run_ensemble(m: &MergerMeasureSet, spec: &EnsembleSpec, stat: Statistic) -> Result<Summary> {
    let values = replicate(spec.seed, spec.replicas, |rng| Ok(stat.eval(&spec.run_one(m, rng)?)))?;
    Summary::from_samples(&values)
}

/// Empirical law of the block counts at `t_max`.
pub fn count_law(m: &MergerMeasureSet, spec: &EnsembleSpec) -> Result<BTreeMap<BlockCounts, usize>> {
    let finals = replicate(spec.seed, spec.replicas, |rng| Ok(spec.run_one(m, rng)?.final_state().clone()))?;
    let mut law = BTreeMap::new();
    for s in finals {
        *law.entry(s).or_insert(0) += 1;
    }
    Ok(law)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_of_constant() {
        let s = Summary::from_samples(&[3.0, 3.0, 3.0]).unwrap();
        assert_eq!(s.mean, 3.0);
        assert_eq!(s.std_error, 0.0);
        assert_eq!(s.distribution, Some(vec![(3, 3)]));
    }

    #[test]
    fn deterministic_across_runs() {
        let m = MergerMeasureSet::kingman(1.0).unwrap();
        let spec = EnsembleSpec { engine: Engine::Jump, n0: BlockCounts(vec![10]), t_max: 1.0, replicas: 200, seed: 5 };
        let a = run_ensemble(&m, &spec, Statistic::TotalBlocks).unwrap();
        let b = run_ensemble(&m, &spec, Statistic::TotalBlocks).unwrap();
        assert_eq!(a, b);
        assert!(replicate(0, 0, |_| Ok(())).is_err());
    }
}

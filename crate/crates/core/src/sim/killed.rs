use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::rng::{exponential, RngSpec};
use super::trajectory::{Event, EventRecord, Trajectory};
use crate::measures::{kill_measure, project_measure, MergerMeasureSet, SingleTypeMeasure};
use crate::rates::BlockCounts;
use crate::{Error, Result};

struct SingleTypeDynamics<'a> {
    rho: f64,
    merge: &'a [(f64, f64)],
    individual_kill: f64,
    kill: &'a [(f64, f64)],
}

fn binomial<R: Rng>(rng: &mut R, n: usize, p: f64) -> usize {
    if p >= 1.0 {
        return n;
    }
    if p <= 0.0 || n == 0 {
        return 0;
    }
    Binomial::new(n as u64, p).expect("valid binomial").sample(rng) as usize
}

impl SingleTypeDynamics<'_> {
    fn effective_rate(&self, n: usize) -> f64 {
        let nf = n as f64;
        let pairs = self.rho * nf * (nf - 1.0) / 2.0;
        let merge: f64 = self
            .merge
            .iter()
            .map(|&(w, u)| {
                let none = (1.0 - u).powi(n as i32);
                let one = if n == 0 { 0.0 } else { nf * u * (1.0 - u).powi(n as i32 - 1) };
                w * (1.0 - none - one).max(0.0)
            })
            .sum();
        let kill: f64 = self.kill.iter().map(|&(w, u)| w * (1.0 - (1.0 - u).powi(n as i32))).sum();
        pairs + merge + self.individual_kill * nf + kill
    }

    fn run(&self, n0: usize, t_max: f64, rng: RngSpec) -> Result<Trajectory> {
        if t_max.is_nan() || t_max < 0.0 {
            return Err(Error::InvalidArgument(format!("t_max must be non-negative, got {t_max}")));
        }
        let mut rng = rng.rng();
        let mut traj = Trajectory::new(BlockCounts(vec![n0]), t_max);
        let merge_mass: f64 = self.merge.iter().map(|a| a.0).sum();
        let kill_mass: f64 = self.kill.iter().map(|a| a.0).sum();
        let mut n = n0;
        let mut t = 0.0;
        while n > 0 && self.effective_rate(n) > 0.0 {
            let nf = n as f64;
            let pairs = self.rho * nf * (nf - 1.0) / 2.0;
            let individual = self.individual_kill * nf;
            let total = pairs + individual + merge_mass + kill_mass;
            t += exponential(&mut rng, total);
            if t > t_max {
                break;
            }
            let u = rng.random::<f64>() * total;
            let event = if u < pairs {
                Some(Event::Merger { k: BlockCounts(vec![2]), target: 0 })
            } else if u < pairs + individual {
                Some(Event::Killing { killed: 1 })
            } else if u < pairs + individual + merge_mass {
                let (_, p) = pick(self.merge, u - pairs - individual);
                let k = binomial(&mut rng, n, p);
                (k >= 2).then(|| Event::Merger { k: BlockCounts(vec![k]), target: 0 })
            } else {
                let (_, p) = pick(self.kill, u - pairs - individual - merge_mass);
                let k = binomial(&mut rng, n, p);
                (k >= 1).then_some(Event::Killing { killed: k })
            };
            let Some(event) = event else { continue };
            n = match &event {
                Event::Merger { k, .. } => n - k.0[0] + 1,
                Event::Killing { killed } => n - killed,
                Event::ColourChange { .. } => unreachable!(),
            };
            traj.events.push(EventRecord { time: t, event, state: BlockCounts(vec![n]) });
        }
        Ok(traj)
    }
}

fn pick(atoms: &[(f64, f64)], mut u: f64) -> (f64, f64) {
    for &a in atoms {
        if u < a.0 {
            return a;
        }
        u -= a.0;
    }
    // Only reachable through rounding; an empty list means a no-op.
    atoms.last().copied().unwrap_or((0.0, 0.0))
}

/// The type-`i` projected coalescent started from `n_i` blocks, with
/// per-block killing at rate `Σ_{j≠i} ρ_{i→j}` and large killing events
/// driven by `W_i`, each block dying independently with probability `u`.
pub fn simulate_projected_with_killing(
    m: &MergerMeasureSet,
    i: usize,
    n_i: usize,
    t_max: f64,
    rng: RngSpec,
) -> Result<Trajectory> {
    let proj = project_measure(m, i)?;
    let kill = kill_measure(m, i)?;
    let large: Vec<(f64, f64)> = kill.large.iter().copied().filter(|&(w, u)| w > 0.0 && u > 0.0).collect();
    SingleTypeDynamics {
        rho: proj.measure.rho,
        merge: &proj.measure.atoms,
        individual_kill: kill.individual_rate,
        kill: &large,
    }
    .run(n_i, t_max, rng)
}

/// The single-type `(ρ, Q)`-coalescent started from `n` blocks.
pub fn simulate_single_type(measure: &SingleTypeMeasure, n: usize, t_max: f64, rng: RngSpec) -> Result<Trajectory> {
    if measure.rho < 0.0 || measure.atoms.iter().any(|&(w, u)| w < 0.0 || !(0.0..=1.0).contains(&u)) {
        return Err(Error::InvalidArgument("invalid single-type measure".into()));
    }
    SingleTypeDynamics { rho: measure.rho, merge: &measure.atoms, individual_kill: 0.0, kill: &[] }.run(n, t_max, rng)
}

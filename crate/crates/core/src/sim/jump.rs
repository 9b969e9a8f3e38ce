use rand::Rng;

use super::rng::{exponential, RngSpec};
use super::trajectory::{Event, EventRecord, Trajectory};
use crate::measures::MergerMeasureSet;
use crate::rates::{transition_table, BlockCounts, DEFAULT_CAP};
use crate::{Error, Result};

/// Gillespie simulation of the lumped block-count chain up to `t_max`.
///
/// The transition table is rebuilt after every event. The run stops at
/// `t_max` or once the total rate is zero; a lone block keeps changing
/// colour until it reaches a colour with no outgoing changes.
pub fn simulate_jump_chain(m: &MergerMeasureSet, n0: &BlockCounts, t_max: f64, rng: RngSpec) -> Result<Trajectory> {
    if n0.dim() != m.dim() {
        return Err(Error::InvalidArgument(format!("n0 must have dimension {}", m.dim())));
    }
    if n0.total() == 0 {
        return Err(Error::InvalidArgument("at least one block is required".into()));
    }
    if t_max.is_nan() || t_max < 0.0 {
        return Err(Error::InvalidArgument(format!("t_max must be non-negative, got {t_max}")));
    }
    let mut rng = rng.rng();
    let mut traj = Trajectory::new(n0.clone(), t_max);
    let mut n = n0.clone();
    let mut t = 0.0;
    loop {
        if t_max.is_infinite() && n.total() == 1 {
            super::check_lone_block(m, n.0.iter().position(|&c| c == 1).expect("one block"))?;
        }
        let table = transition_table(m, &n, DEFAULT_CAP)?;
        if table.total_rate <= 0.0 {
            break;
        }
        t += exponential(&mut rng, table.total_rate);
        if t > t_max {
            break;
        }
        let target = rng.random::<f64>() * table.total_rate;
        let mut acc = 0.0;
        let mut chosen = table.entries.len() - 1;
        for (idx, e) in table.entries.iter().enumerate() {
            acc += e.class_rate;
            if target < acc {
                chosen = idx;
                break;
            }
        }
        let class = &table.entries[chosen];
        n = n.after_merge(&class.k.0, class.target);
        let event = if class.is_colour_change() {
            let from = class.k.0.iter().position(|&c| c == 1).expect("unit participation");
            Event::ColourChange { from, to: class.target }
        } else {
            Event::Merger { k: class.k.clone(), target: class.target }
        };
        traj.events.push(EventRecord { time: t, event, state: n.clone() });
    }
    Ok(traj)
}

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use super::partition::{Element, TypedBlock, TypedPartition};
use super::rng::{exponential, RngSpec};
use super::trajectory::{Event, EventRecord, Trajectory};
use crate::measures::MergerMeasureSet;
use crate::rates::BlockCounts;
use crate::{Error, Result};

/// Stable block identifier. Initial blocks get `0..` in canonical order;
/// every merger creates a fresh id. A colour change keeps the id.
pub type BlockId = usize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelledEvent {
    pub time: f64,
    pub event: Event,
    pub participants: Vec<BlockId>,
    pub result: BlockId,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelledTrajectory {
    pub initial: TypedPartition,
    pub events: Vec<LabelledEvent>,
    pub t_max: f64,
    pub final_partition: TypedPartition,
}

impl LabelledTrajectory {
    /// Replays the events up to and including time `t`.
    pub fn partition_at(&self, t: f64) -> TypedPartition {
        let mut live: BTreeMap<BlockId, TypedBlock> = self.initial.blocks().iter().cloned().enumerate().collect();
        for ev in self.events.iter().take_while(|e| e.time <= t) {
            match &ev.event {
                Event::ColourChange { to, .. } => {
                    live.get_mut(&ev.result).expect("live block").colour = *to;
                }
                Event::Merger { target, .. } => {
                    let members = ev
                        .participants
                        .iter()
                        .flat_map(|id| live.remove(id).expect("live block").members)
                        .collect();
                    live.insert(ev.result, TypedBlock { members, colour: *target });
                }
                Event::Killing { .. } => unreachable!("no killing in the labelled engine"),
            }
        }
        TypedPartition::new(self.initial.dim(), live.into_values().collect()).expect("replay keeps a partition")
    }

    /// The block-count path.
    pub fn lumped(&self) -> Trajectory {
        let mut traj = Trajectory::new(self.initial.counts(), self.t_max);
        let mut n = traj.initial.clone();
        for ev in &self.events {
            n = match &ev.event {
                Event::ColourChange { from, to } => {
                    let mut v = n.0.clone();
                    v[*from] -= 1;
                    v[*to] += 1;
                    BlockCounts(v)
                }
                Event::Merger { k, target } => n.after_merge(&k.0, *target),
                Event::Killing { .. } => unreachable!("no killing in the labelled engine"),
            };
            traj.events.push(EventRecord { time: ev.time, event: ev.event.clone(), state: n.clone() });
        }
        traj
    }
}

struct Live {
    id: BlockId,
    colour: usize,
    members: Vec<Element>,
}

/// Probability that a ring of an atom at `s` targeting `i` changes the state.
fn effective_probability(s: &[f64], counts: &[usize], i: usize) -> f64 {
    let none: f64 = s.iter().zip(counts).map(|(&sj, &nj)| (1.0 - sj).powi(nj as i32)).product();
    let only_i_single = if counts[i] == 0 {
        0.0
    } else {
        let others: f64 = s
            .iter()
            .zip(counts)
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, (&sj, &nj))| (1.0 - sj).powi(nj as i32))
            .product();
        counts[i] as f64 * s[i] * (1.0 - s[i]).powi(counts[i] as i32 - 1) * others
    };
    (1.0 - none - only_i_single).max(0.0)
}

/// Event-driven simulation of the labelled process started from `p0`.
///
/// Every colour-change pair, Kingman pair and merger atom carries its own
/// exponential clock; these are superposed and resolved with one uniform.
/// Rings that do not change the partition advance time but are not recorded.
pub fn simulate_labelled(m: &MergerMeasureSet, p0: &TypedPartition, t_max: f64, rng: RngSpec) -> Result<LabelledTrajectory> {
    let d = m.dim();
    if p0.dim() != d {
        return Err(Error::InvalidArgument(format!("partition must have dimension {d}")));
    }
    if t_max.is_nan() || t_max < 0.0 {
        return Err(Error::InvalidArgument(format!("t_max must be non-negative, got {t_max}")));
    }
    let mut rng = rng.rng();
    let mut live: Vec<Live> = p0
        .blocks()
        .iter()
        .enumerate()
        .map(|(id, b)| Live { id, colour: b.colour, members: b.members.clone() })
        .collect();
    let mut next_id = live.len();
    let atoms: Vec<(usize, f64, &[f64])> = (0..d)
        .flat_map(|i| m.q(i).atoms().iter().map(move |a| (i, a.weight, a.point.as_slice())))
        .filter(|a| a.1 > 0.0)
        .collect();
    let atom_mass: f64 = atoms.iter().map(|a| a.1).sum();
    let mut counts = p0.counts().0;
    let mut events = Vec::new();
    let mut t = 0.0;

    loop {
        if t_max.is_infinite() && live.len() == 1 {
            super::check_lone_block(m, live[0].colour)?;
        }
        let change_rate: f64 = counts.iter().enumerate().map(|(j, &c)| c as f64 * m.colour_out_rate(j)).sum();
        let pair_rate: f64 = (0..d).map(|i| m.rho_pair(i) * (counts[i] * counts[i].saturating_sub(1)) as f64 / 2.0).sum();
        let effective = change_rate
            + pair_rate
            + atoms.iter().map(|&(i, w, s)| w * effective_probability(s, &counts, i)).sum::<f64>();
        if effective <= 0.0 {
            break;
        }
        let total = change_rate + pair_rate + atom_mass;
        t += exponential(&mut rng, total);
        if t > t_max {
            break;
        }
        let mut u = rng.random::<f64>() * total;

        if u < change_rate {
            // Pick (j -> i) and then a uniform block of colour j.
            let (mut from, mut to) = (usize::MAX, usize::MAX);
            'outer: for j in 0..d {
                for i in (0..d).filter(|&i| i != j) {
                    let r = counts[j] as f64 * m.rho_change(j, i);
                    if u < r {
                        (from, to) = (j, i);
                        break 'outer;
                    }
                    u -= r;
                }
            }
            if from == usize::MAX {
                // Rounding at the edge of the cumulative sum.
                let (j, i) = last_positive_change(m, &counts);
                (from, to) = (j, i);
            }
            let pick = rng.random_range(0..counts[from]);
            let block = live.iter_mut().filter(|b| b.colour == from).nth(pick).expect("block of colour");
            block.colour = to;
            counts[from] -= 1;
            counts[to] += 1;
            events.push(LabelledEvent {
                time: t,
                event: Event::ColourChange { from, to },
                participants: vec![block.id],
                result: block.id,
            });
            continue;
        }
        u -= change_rate;

        let (target, chosen): (usize, Vec<usize>) = if u < pair_rate {
            let mut target = (0..d).rev().find(|&i| m.rho_pair(i) > 0.0 && counts[i] >= 2).unwrap_or(0);
            for i in 0..d {
                let r = m.rho_pair(i) * (counts[i] * counts[i].saturating_sub(1)) as f64 / 2.0;
                if u < r {
                    target = i;
                    break;
                }
                u -= r;
            }
            let of_colour: Vec<usize> = (0..live.len()).filter(|&x| live[x].colour == target).collect();
            let a = rng.random_range(0..of_colour.len());
            let mut b = rng.random_range(0..of_colour.len() - 1);
            if b >= a {
                b += 1;
            }
            (target, vec![of_colour[a], of_colour[b]])
        } else {
            u -= pair_rate;
            let mut pick = atoms.len() - 1;
            for (idx, a) in atoms.iter().enumerate() {
                if u < a.1 {
                    pick = idx;
                    break;
                }
                u -= a.1;
            }
            let (target, _, s) = atoms[pick];
            let chosen: Vec<usize> = (0..live.len()).filter(|&x| rng.random::<f64>() < s[live[x].colour]).collect();
            (target, chosen)
        };

        match chosen.len() {
            0 => continue,
            1 => {
                let block = &mut live[chosen[0]];
                if block.colour == target {
                    continue;
                }
                let from = block.colour;
                block.colour = target;
                counts[from] -= 1;
                counts[target] += 1;
                events.push(LabelledEvent {
                    time: t,
                    event: Event::ColourChange { from, to: target },
                    participants: vec![block.id],
                    result: block.id,
                });
            }
            _ => {
                let mut k = vec![0; d];
                let mut participants = Vec::with_capacity(chosen.len());
                let mut members = Vec::new();
                let mut sorted = chosen;
                sorted.sort_unstable();
                for &x in sorted.iter().rev() {
                    let b = live.swap_remove(x);
                    k[b.colour] += 1;
                    counts[b.colour] -= 1;
                    participants.push(b.id);
                    members.extend(b.members);
                }
                participants.sort_unstable();
                counts[target] += 1;
                let id = next_id;
                next_id += 1;
                live.push(Live { id, colour: target, members });
                events.push(LabelledEvent {
                    time: t,
                    event: Event::Merger { k: BlockCounts(k), target },
                    participants,
                    result: id,
                });
            }
        }
    }

    let final_partition = TypedPartition::new(
        d,
        live.into_iter().map(|b| TypedBlock { members: b.members, colour: b.colour }).collect(),
    )?;
    Ok(LabelledTrajectory { initial: p0.clone(), events, t_max, final_partition })
}

fn last_positive_change(m: &MergerMeasureSet, counts: &[usize]) -> (usize, usize) {
    let d = counts.len();
    let mut last = (0, 0);
    for j in 0..d {
        for i in (0..d).filter(|&i| i != j) {
            if counts[j] > 0 && m.rho_change(j, i) > 0.0 {
                last = (j, i);
            }
        }
    }
    last
}

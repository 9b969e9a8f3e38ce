use std::io::{self, Write};

use serde::Serialize;

use crate::rates::BlockCounts;
use crate::{Error, Result};

/// An effective transition of the coalescent.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    /// One block changes colour from `from` to `to`.
    ColourChange { from: usize, to: usize },
    /// Blocks with participation `k` merge into one block of colour `target`.
    Merger { k: BlockCounts, target: usize },
    /// `killed` blocks are removed (killed projected coalescent only).
    Killing { killed: usize },
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::ColourChange { .. } => "colour_change",
            Event::Merger { .. } => "merger",
            Event::Killing { .. } => "killing",
        }
    }

    /// Participation vector and target, in the trajectory's dimension.
    fn participation(&self, d: usize) -> (BlockCounts, Option<usize>) {
        match self {
            Event::ColourChange { from, to } => (BlockCounts::unit(d, *from), Some(*to)),
            Event::Merger { k, target } => (k.clone(), Some(*target)),
            Event::Killing { killed } => {
                let mut k = BlockCounts::zeros(d);
                if d > 0 {
                    k.0[0] = *killed;
                }
                (k, None)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRecord {
    pub time: f64,
    pub event: Event,
    /// Block counts right after the event.
    pub state: BlockCounts,
}

/// A path of block counts on `[0, t_max]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub initial: BlockCounts,
    pub events: Vec<EventRecord>,
    pub t_max: f64,
}

impl Trajectory {
    pub fn new(initial: BlockCounts, t_max: f64) -> Self {
        Self { initial, events: Vec::new(), t_max }
    }

    pub fn final_state(&self) -> &BlockCounts {
        self.events.last().map_or(&self.initial, |e| &e.state)
    }

    /// Block counts at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> &BlockCounts {
        let idx = self.events.partition_point(|e| e.time <= t);
        if idx == 0 {
            &self.initial
        } else {
            &self.events[idx - 1].state
        }
    }

    /// Checks ordering of event times and the count change of each event.
    pub fn check_invariants(&self) -> Result<()> {
        let d = self.initial.dim();
        let mut prev_time = 0.0;
        let mut prev = &self.initial;
        for (idx, rec) in self.events.iter().enumerate() {
            let fail = |msg: &str| Err(Error::InvalidArgument(format!("event {idx}: {msg}")));
            if !(rec.time > prev_time || (idx == 0 && rec.time >= 0.0)) {
                return fail("times not strictly increasing");
            }
            if rec.time > self.t_max {
                return fail("event after t_max");
            }
            if rec.state.total() > prev.total() {
                return fail("block count increased");
            }
            let expected = match &rec.event {
                Event::ColourChange { from, to } => {
                    let mut v = prev.0.clone();
                    v[*from] -= 1;
                    v[*to] += 1;
                    BlockCounts(v)
                }
                Event::Merger { k, target } => {
                    if !k.le(prev) || k.total() < 2 {
                        return fail("invalid participation");
                    }
                    prev.after_merge(&k.0, *target)
                }
                Event::Killing { killed } => {
                    if d != 1 || *killed == 0 || *killed > prev.0[0] {
                        return fail("invalid killing");
                    }
                    BlockCounts(vec![prev.0[0] - killed])
                }
            };
            if expected != rec.state {
                return fail("state does not match the event");
            }
            prev_time = rec.time;
            prev = &rec.state;
        }
        Ok(())
    }
}

/// Writes the CSV header `replica,time,event_kind,target_type,k_1..k_d,n_1..n_d`.
pub fn write_csv_header<W: Write>(out: &mut W, d: usize) -> io::Result<()> {
    write!(out, "replica,time,event_kind,target_type")?;
    for j in 1..=d {
        write!(out, ",k_{j}")?;
    }
    for j in 1..=d {
        write!(out, ",n_{j}")?;
    }
    out.write_all(b"\n")
}

/// Writes one `init` row and one row per event. Types are numbered from 1;
/// `target_type` is empty for killings.
pub fn write_csv<W: Write>(out: &mut W, replica: usize, traj: &Trajectory) -> io::Result<()> {
    let d = traj.initial.dim();
    let counts = |v: &BlockCounts| v.0.iter().map(|c| format!(",{c}")).collect::<String>();
    writeln!(out, "{replica},0,init,{}{}", counts(&BlockCounts::zeros(d)), counts(&traj.initial))?;
    for rec in &traj.events {
        let (k, target) = rec.event.participation(d);
        let target = target.map(|t| (t + 1).to_string()).unwrap_or_default();
        writeln!(out, "{replica},{},{},{target}{}{}", rec.time, rec.event.kind(), counts(&k), counts(&rec.state))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trajectory {
        let mut t = Trajectory::new(BlockCounts(vec![2, 1]), 5.0);
        t.events.push(EventRecord {
            time: 0.5,
            event: Event::ColourChange { from: 1, to: 0 },
            state: BlockCounts(vec![3, 0]),
        });
        t.events.push(EventRecord {
            time: 1.25,
            event: Event::Merger { k: BlockCounts(vec![2, 0]), target: 1 },
            state: BlockCounts(vec![1, 1]),
        });
        t
    }

    #[test]
    fn state_lookup() {
        let t = sample();
        assert_eq!(t.state_at(0.1), &BlockCounts(vec![2, 1]));
        assert_eq!(t.state_at(0.5), &BlockCounts(vec![3, 0]));
        assert_eq!(t.state_at(9.0), &BlockCounts(vec![1, 1]));
        t.check_invariants().unwrap();
    }

    #[test]
    fn broken_state_is_caught() {
        let mut t = sample();
        t.events[1].state = BlockCounts(vec![2, 1]);
        assert!(t.check_invariants().is_err());
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_csv_header(&mut buf, 2).unwrap();
        write_csv(&mut buf, 3, &sample()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "replica,time,event_kind,target_type,k_1,k_2,n_1,n_2");
        assert_eq!(lines[1], "3,0,init,,0,0,2,1");
        assert_eq!(lines[2], "3,0.5,colour_change,1,0,1,3,0");
        assert_eq!(lines[3], "3,1.25,merger,2,2,0,1,1");
        assert!(!text.contains('\r'));
    }
}

//! Exact simulation of multitype Λ-coalescents.
//!
//! Two engines are provided. [`simulate_jump_chain`] works on lumped block
//! counts and draws whole transition classes. [`simulate_labelled`] tracks a
//! [`TypedPartition`] and runs one exponential clock per colour-change
//! pair, Kingman pair and merger atom. [`simulate_projected_with_killing`]
//! runs the single-type projected coalescent with killing.

mod ensemble;
mod jump;
mod killed;
mod labelled;
mod partition;
mod rng;
mod trajectory;

pub use ensemble::{count_law, replicate, run_ensemble, Engine, EnsembleSpec, Statistic, Summary};
pub use jump::simulate_jump_chain;
pub use killed::{simulate_projected_with_killing, simulate_single_type};
pub use labelled::{simulate_labelled, BlockId, LabelledEvent, LabelledTrajectory};
pub use partition::{Element, TypedBlock, TypedPartition};
pub use rng::RngSpec;
pub use trajectory::{write_csv, write_csv_header, Event, EventRecord, Trajectory};

/// With an infinite horizon and one block left, the run ends only if the
/// colour chain can reach a colour with no outgoing changes.
pub(crate) fn check_lone_block(m: &crate::MergerMeasureSet, colour: usize) -> crate::Result<()> {
    let mut seen = vec![false; m.dim()];
    let mut stack = vec![colour];
    while let Some(j) = stack.pop() {
        if std::mem::replace(&mut seen[j], true) {
            continue;
        }
        if m.colour_out_rate(j) == 0.0 {
            return Ok(());
        }
        stack.extend((0..m.dim()).filter(|&i| m.rho_change(j, i) > 0.0));
    }
    Err(crate::Error::InvalidArgument(format!(
        "a lone block of type {} changes colour forever; use a finite t_max",
        colour + 1
    )))
}

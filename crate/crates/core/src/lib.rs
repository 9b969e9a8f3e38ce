//! Multitype Λ-coalescents.
//!
//! A multitype Λ-coalescent on `d` colours is determined by colour-change
//! rates `ρ_{j→i}`, within-colour pairwise merger rates `ρ_{ii→i}` and one
//! merger measure `Q_{→i}` on `[0,1]^d` per target colour. This crate
//! provides:
//!
//! * [`measures`]: validated construction of that datum, projections and
//!   the killing data of the projected coalescent, CSBP local rates;
//! * [`rates`]: exact merger rates, the consistency recursion and
//!   transition enumeration for finite block counts;
//! * [`sim`]: exact simulation, lumped (block counts) and labelled (typed
//!   partitions), plus the killed projected coalescent and ensembles;
//! * [`analysis`]: processing speeds `ψ_i`, `ψ̃_i`, `Ψ`, `Ω`, the flow `Φ`,
//!   the coming-down-from-infinity classification and descent profiles;
//! * [`arrays`]: truncated recursion arrays on `ℤ^d_{≥0}` minus a box and
//!   their (ρ, J) representation;
//! * [`verification`]: Monte Carlo and exact checks tying the above together.
//!
//! Types are indexed from 0 in the library API. The JSON configuration
//! format and the CLI number types from 1.

// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod arrays;
pub mod builtin;
pub mod config;
mod error;
pub mod measures;
pub mod numerics;
pub mod rates;
pub mod sim;
pub mod verification;

pub use error::{Error, Result};
pub use measures::{Atom, FamilyTag, FiniteMeasureOnCube, MergerMeasureSet};
pub use rates::BlockCounts;

/// Version tag written into every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;

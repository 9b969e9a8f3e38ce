//! Processing speeds, the coming-down-from-infinity classification and
//! descent profiles.

mod cdi;
mod omega;
mod profile;
mod speeds;

pub use cdi::{classify_cdi, classify_cdi_with, CdiOptions, CdiReport, Evidence, Shortcut, TypeVerdict, Verdict};
pub use omega::{omega, omega_argmin, omega_with};
pub use profile::{descent_profile, flow_profile};
pub use speeds::{big_psi, big_psi_with, phi_flow, psi, psi_tilde, ProcessingSpeeds, SpeedForm};

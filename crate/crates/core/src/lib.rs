//! Multi-species Fokker-Planck gas-mixture solver.
//!
//! Species relax through drift-diffusion operators toward closure Maxwellians
//! built from the interspecies moments `(u_ij, T_ij)`. The crate provides the
//! closure algebra and its admissibility checks, a positivity-preserving
//! velocity discretization, homogeneous and 1x1v drivers, and diagnostics that
//! compare discrete moments with their closed-form exchange rates.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod kinetics;
pub mod nspecies;
pub mod operator;
pub mod params;
pub mod timeloop;
pub mod tridiag;

pub use error::{Error, Result};
pub use kinetics::{entropy, maxwellian, moments, DistributionState, Moments, VelocityGrid};
pub use operator::{build_context, CollisionContext, Interaction, Role};
pub use nspecies::{MixtureSystem, PairEntry, PairSpec, SpeciesEntry};
pub use params::{PairParameters, Preset, SpeciesSpec, Tier, ValidationReport};
pub use timeloop::{run_1x1v, run_relaxation, step_homogeneous, RunOptions, StepOptions};

/// Seventeen significant digits, enough to parse back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

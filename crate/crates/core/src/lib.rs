//! Time-frequency analysis of Fourier integral operators: sampled Wigner
//! distributions, phase-space kernels of type-I/II operators with tame
//! phases, decay diagnostics against the canonical transformation, and a
//! catalog of certified phases and symbols.

pub mod catalog;
pub mod error;
pub mod fd;
pub mod fio;
pub mod grid;
pub mod kernel;
pub mod phases;
pub mod scenarios;
pub mod symbols;
pub mod tensor;
pub mod testfns;
pub mod wigner;

pub use error::{Error, Result};

use phases::{tame_certify, PhaseFn, TameReport};

/// Tameness certification with probe budgets suited to the phase dimension:
/// dense probing for d = 1, a coarser lattice for the doubled phases.
pub fn tame_certify_defaults(phase: &dyn PhaseFn) -> TameReport {
    match phase.dim() {
        1 => tame_certify(phase, 4, 6.0, 9),
        _ => tame_certify(phase, 3, 4.0, 7),
    }
}

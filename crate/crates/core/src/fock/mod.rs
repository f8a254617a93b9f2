//! Truncated Fock-space states, gates, and measurements.

mod expm;
mod gate;
mod kernel;
mod measure;
mod state;

pub use expm::expm;
pub use gate::{apply_gate, gate_matrix, unitarity_defect, Gate, GateKind, Targets};
pub use kernel::{Action, Kernels};
pub use measure::{
    fidelity, lowering_expectation, project_normalize, quadrature_expectation, subspace_weight,
    Quadrature, DEGENERATE_NORM,
};
pub use state::{FockState, HBAR};

use num_complex::Complex64 as C64;

use crate::error::Result;

/// `D(alpha)|0>` on a single mode, exact for the truncated generator.
pub fn coherent_state(alpha: C64, cutoff: usize) -> Result<FockState> {
    apply_gate(&FockState::vacuum(1, cutoff)?, &Gate::displacement(0, alpha))
}

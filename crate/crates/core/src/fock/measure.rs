use num_complex::Complex64 as C64;

use super::gate::fibre_bases;
use super::state::FockState;
use crate::error::{Error, Result};

/// In-subspace norms at or below this are treated as a state that has left
/// the working subspace.
pub const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quadrature {
    X,
    P,
}

/// `|<a|b>|^2`
pub fn fidelity(a: &FockState, b: &FockState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// `<a>` on one mode, contracted along the ladder.
pub fn lowering_expectation(state: &FockState, mode: usize) -> Result<C64> {
    state.check_mode(mode)?;
    let c = state.cutoff();
    let amps = state.amplitudes();
    let (stride, bases) = fibre_bases(state.modes(), c, mode);
    let mut acc = C64::new(0.0, 0.0);
    for base in bases {
        for n in 1..c {
            acc += amps[base + (n - 1) * stride].conj() * amps[base + n * stride] * (n as f64).sqrt();
        }
    }
    Ok(acc)
}

/// `<x>` or `<p>` with `x = a + a†`, `p = -i(a - a†)`.
pub fn quadrature_expectation(state: &FockState, mode: usize, which: Quadrature) -> Result<f64> {
    let a = lowering_expectation(state, mode)?;
    Ok(match which {
        Quadrature::X => 2.0 * a.re,
        Quadrature::P => 2.0 * a.im,
    })
}

/// First `dim` amplitudes of a single-mode state, renormalized.
pub fn project_normalize(state: &FockState, dim: usize) -> Result<Vec<C64>> {
    if state.modes() != 1 {
        return Err(Error::IncompatibleStates(format!(
            "projection needs a single-mode state, got {} modes",
            state.modes()
        )));
    }
    if dim == 0 || dim > state.cutoff() {
        return Err(Error::InvalidParameter(format!(
            "subspace dimension {dim} outside 1..={}",
            state.cutoff()
        )));
    }
    let head = &state.amplitudes()[..dim];
    let norm = head.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm <= DEGENERATE_NORM {
        return Err(Error::DegenerateProjection { norm });
    }
    Ok(head.iter().map(|a| a / norm).collect())
}

/// Probability mass inside the first `dim` levels of a single-mode state.
pub fn subspace_weight(state: &FockState, dim: usize) -> f64 {
    state.amplitudes()[..dim.min(state.cutoff())]
        .iter()
        .map(|a| a.norm_sqr())
        .sum()
}

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::expm::expm;
use super::state::{check_cutoff, FockState};
use crate::error::{Error, Result};

/// Primitive continuous-variable gates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateKind {
    /// `exp(alpha a† - alpha* a)`
    Displacement(C64),
    /// `exp((zeta* a^2 - zeta a†^2) / 2)` with `zeta = r e^{i phi}`
    Squeeze { r: f64, phi: f64 },
    /// `exp(i theta n)`
    Rotation(f64),
    /// `exp(i kappa n^2)`
    Kerr(f64),
    /// `exp(theta (e^{i phi} a† b - e^{-i phi} a b†))` with `a` the first target.
    Beamsplitter { theta: f64, phi: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Targets {
    One(usize),
    Two(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: Targets,
}

impl Gate {
    pub fn displacement(mode: usize, alpha: C64) -> Self {
        Self { kind: GateKind::Displacement(alpha), targets: Targets::One(mode) }
    }

    pub fn squeeze(mode: usize, r: f64, phi: f64) -> Self {
        Self { kind: GateKind::Squeeze { r, phi }, targets: Targets::One(mode) }
    }

    pub fn rotation(mode: usize, theta: f64) -> Self {
        Self { kind: GateKind::Rotation(theta), targets: Targets::One(mode) }
    }

    pub fn kerr(mode: usize, kappa: f64) -> Self {
        Self { kind: GateKind::Kerr(kappa), targets: Targets::One(mode) }
    }

    pub fn beamsplitter(a: usize, b: usize, theta: f64, phi: f64) -> Self {
        Self { kind: GateKind::Beamsplitter { theta, phi }, targets: Targets::Two(a, b) }
    }
}

impl GateKind {
    fn params(&self) -> Vec<f64> {
        match *self {
            GateKind::Displacement(a) => vec![a.re, a.im],
            GateKind::Squeeze { r, phi } => vec![r, phi],
            GateKind::Rotation(t) | GateKind::Kerr(t) => vec![t],
            GateKind::Beamsplitter { theta, phi } => vec![theta, phi],
        }
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if self.params().iter().all(|p| p.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("non-finite gate parameter in {self:?}")))
        }
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Truncated anti-Hermitian generator of a single-mode gate.
fn single_mode_generator(kind: &GateKind, cutoff: usize) -> DMatrix<C64> {
    let mut g = DMatrix::<C64>::zeros(cutoff, cutoff);
    match *kind {
        GateKind::Displacement(alpha) => {
            for n in 0..cutoff - 1 {
                let s = ((n + 1) as f64).sqrt();
                g[(n + 1, n)] += alpha * s;
                g[(n, n + 1)] -= alpha.conj() * s;
            }
        }
        GateKind::Squeeze { r, phi } => {
            let zeta = C64::from_polar(r, phi);
            for n in 0..cutoff.saturating_sub(2) {
                let s = (((n + 1) * (n + 2)) as f64).sqrt();
                g[(n, n + 2)] += zeta.conj() * s * 0.5;
                g[(n + 2, n)] -= zeta * s * 0.5;
            }
        }
        _ => unreachable!("diagonal and two-mode gates are built directly"),
    }
    g
}

/// Exponentiates the beamsplitter generator one photon-number block at a time.
///
/// The truncated generator conserves `n_a + n_b`, so it is block diagonal in
/// that label and its exponential is the block-diagonal matrix of block
/// exponentials.
fn beamsplitter_matrix(theta: f64, phi: f64, cutoff: usize) -> DMatrix<C64> {
    let dim = cutoff * cutoff;
    let mut out = DMatrix::<C64>::zeros(dim, dim);
    let up = C64::from_polar(theta, phi);
    for total in 0..=2 * (cutoff - 1) {
        let lo = total.saturating_sub(cutoff - 1);
        let hi = total.min(cutoff - 1);
        let size = hi - lo + 1;
        // Block basis: |n_a, total - n_a> for n_a in lo..=hi.
        let mut g = DMatrix::<C64>::zeros(size, size);
        for k in 0..size - 1 {
            let na = lo + k;
            let nb = total - na;
            // a† b |na, nb> = sqrt((na + 1) nb) |na + 1, nb - 1>
            let s = (((na + 1) * nb) as f64).sqrt();
            g[(k + 1, k)] += up * s;
            g[(k, k + 1)] -= up.conj() * s;
        }
        let e = expm(&g);
        for i in 0..size {
            for j in 0..size {
                let (ni, nj) = (lo + i, lo + j);
                out[(ni * cutoff + (total - ni), nj * cutoff + (total - nj))] = e[(i, j)];
            }
        }
    }
    out
}

/// Matrix realization of a gate on the truncated basis: `cutoff x cutoff`, or
/// `cutoff^2 x cutoff^2` for the beamsplitter with pair index `n_a * cutoff + n_b`.
pub fn gate_matrix(gate: &Gate, cutoff: usize) -> Result<DMatrix<C64>> {
    check_cutoff(cutoff)?;
    gate.kind.check_finite()?;
    let levels = || (0..cutoff).map(|n| n as f64);
    Ok(match gate.kind {
        GateKind::Rotation(theta) => DMatrix::from_diagonal(&DVector::from_iterator(
            cutoff,
            levels().map(|n| C64::from_polar(1.0, theta * n)),
        )),
        GateKind::Kerr(kappa) => DMatrix::from_diagonal(&DVector::from_iterator(
            cutoff,
            levels().map(|n| C64::from_polar(1.0, kappa * n * n)),
        )),
        GateKind::Displacement(_) | GateKind::Squeeze { .. } => {
            expm(&single_mode_generator(&gate.kind, cutoff))
        }
        GateKind::Beamsplitter { theta, phi } => beamsplitter_matrix(theta, phi, cutoff),
    })
}

/// `max |(G†G - I)_ij|`, accumulated over the nonzero entries of each row.
pub fn unitarity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.ncols();
    let mut gram = DMatrix::<C64>::zeros(n, n);
    let mut nz: Vec<(usize, C64)> = Vec::with_capacity(n);
    for row in 0..m.nrows() {
        nz.clear();
        nz.extend((0..n).map(|j| (j, m[(row, j)])).filter(|(_, z)| *z != C64::new(0.0, 0.0)));
        for &(i, gi) in &nz {
            let gi = gi.conj();
            for &(j, gj) in &nz {
                gram[(i, j)] += gi * gj;
            }
        }
    }
    let mut defect = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let expect = if i == j { c(1.0) } else { c(0.0) };
            defect = defect.max((gram[(i, j)] - expect).norm());
        }
    }
    defect
}

/// Iterates the base offsets of all fibres along `mode`; the fibre members are
/// `base + k * stride` for `k < cutoff`.
pub(crate) fn fibre_bases(modes: usize, cutoff: usize, mode: usize) -> (usize, Vec<usize>) {
    let stride = cutoff.pow((modes - 1 - mode) as u32);
    let outer = cutoff.pow(mode as u32);
    let mut bases = Vec::with_capacity(outer * stride);
    for o in 0..outer {
        for i in 0..stride {
            bases.push(o * cutoff * stride + i);
        }
    }
    (stride, bases)
}

/// Base offsets for pairs of modes `(a, b)`; pair members are
/// `base + na * stride_a + nb * stride_b`.
pub(crate) fn pair_bases(
    modes: usize,
    cutoff: usize,
    a: usize,
    b: usize,
) -> (usize, usize, Vec<usize>) {
    let stride = |m: usize| cutoff.pow((modes - 1 - m) as u32);
    let (sa, sb) = (stride(a), stride(b));
    let dim = cutoff.pow(modes as u32);
    let bases = (0..dim)
        .filter(|&idx| (idx / sa) % cutoff == 0 && (idx / sb) % cutoff == 0)
        .collect();
    (sa, sb, bases)
}

pub(crate) fn check_targets(targets: &Targets, modes: usize) -> Result<()> {
    let check = |m: usize| {
        if m >= modes {
            Err(Error::ModeOutOfRange { index: m, modes })
        } else {
            Ok(())
        }
    };
    match *targets {
        Targets::One(m) => check(m),
        Targets::Two(a, b) => {
            check(a)?;
            check(b)?;
            if a == b {
                return Err(Error::InvalidParameter(format!("beamsplitter targets must differ, got {a} twice")));
            }
            Ok(())
        }
    }
}

/// Contracts the dense gate matrix against the target axis (or axis pair).
pub fn apply_gate(state: &FockState, gate: &Gate) -> Result<FockState> {
    check_targets(&gate.targets, state.modes())?;
    let cutoff = state.cutoff();
    let g = gate_matrix(gate, cutoff)?;
    let mut out = state.clone();
    let src = state.amplitudes();
    let dst = out.amplitudes_mut();
    match gate.targets {
        Targets::One(mode) => {
            let (stride, bases) = fibre_bases(state.modes(), cutoff, mode);
            for base in bases {
                for i in 0..cutoff {
                    let mut acc = c(0.0);
                    for j in 0..cutoff {
                        acc += g[(i, j)] * src[base + j * stride];
                    }
                    dst[base + i * stride] = acc;
                }
            }
        }
        Targets::Two(a, b) => {
            let (sa, sb, bases) = pair_bases(state.modes(), cutoff, a, b);
            let idx = |base: usize, p: usize| base + (p / cutoff) * sa + (p % cutoff) * sb;
            for base in bases {
                for i in 0..cutoff * cutoff {
                    let mut acc = c(0.0);
                    for j in 0..cutoff * cutoff {
                        let gij = g[(i, j)];
                        if gij != c(0.0) {
                            acc += gij * src[idx(base, j)];
                        }
                    }
                    dst[idx(base, i)] = acc;
                }
            }
        }
    }
    Ok(out)
}

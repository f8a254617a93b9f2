//! Matrix-free gate application from cached spectral factorizations.
//!
//! Every non-diagonal generator used here is real antisymmetric, and a
//! diagonal phase conjugation turns it into `i` times a real symmetric
//! matrix `H`. With `H = W diag(h) W^T` the gate is
//!
//! ```text
//! exp(t A) = P W diag(e^{i s t h}) W^T P†
//! ```
//!
//! so a gate application costs two real matrix-vector products, and changing
//! the gate parameter only changes the diagonal phases. This is the same
//! exponential as [`gate_matrix`](super::gate_matrix), evaluated by
//! diagonalization instead of a power series.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use super::gate::{check_targets, fibre_bases, pair_bases, Gate, GateKind, Targets};
use super::state::{check_cutoff, FockState};
use crate::error::Result;

/// Eigendecomposition of a real symmetric matrix, `W` stored row-major.
#[derive(Debug)]
struct RealEigen {
    dim: usize,
    values: Vec<f64>,
    vectors: Vec<f64>,
}

impl RealEigen {
    fn new(h: DMatrix<f64>) -> Self {
        let dim = h.nrows();
        let eig = SymmetricEigen::new(h);
        let mut vectors = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                vectors.push(eig.eigenvectors[(i, j)]);
            }
        }
        Self { dim, values: eig.eigenvalues.iter().copied().collect(), vectors }
    }

    /// `out = W^T v`
    fn apply_t(&self, v: &[C64], out: &mut [C64]) {
        let n = self.dim;
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for (i, vi) in v.iter().enumerate() {
            let row = &self.vectors[i * n..(i + 1) * n];
            for (o, w) in out.iter_mut().zip(row) {
                *o += vi * *w;
            }
        }
    }

    /// `out = W v`
    fn apply(&self, v: &[C64], out: &mut [C64]) {
        let n = self.dim;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.vectors[i * n..(i + 1) * n];
            let (mut re, mut im) = (0.0, 0.0);
            for (w, z) in row.iter().zip(v) {
                re += w * z.re;
                im += w * z.im;
            }
            *o = C64::new(re, im);
        }
    }
}

/// One photon-number sector of the two-mode pair space.
#[derive(Debug)]
struct PairBlock {
    /// Pair indices `na * cutoff + nb` of the sector members.
    members: Vec<usize>,
    eig: RealEigen,
}

/// Cached factorizations for one cutoff.
#[derive(Debug)]
pub struct Kernels {
    cutoff: usize,
    /// `x = a + a†`, the displacement sector.
    position: RealEigen,
    /// `(a^2 + a†^2) / 2`, the squeezing sector.
    quadratic: RealEigen,
    pair: Vec<PairBlock>,
}

impl Kernels {
    pub fn new(cutoff: usize) -> Result<Arc<Self>> {
        check_cutoff(cutoff)?;
        let mut x = DMatrix::<f64>::zeros(cutoff, cutoff);
        let mut q = DMatrix::<f64>::zeros(cutoff, cutoff);
        for n in 0..cutoff - 1 {
            let s = ((n + 1) as f64).sqrt();
            x[(n, n + 1)] = s;
            x[(n + 1, n)] = s;
        }
        for n in 0..cutoff.saturating_sub(2) {
            let s = 0.5 * (((n + 1) * (n + 2)) as f64).sqrt();
            q[(n, n + 2)] = s;
            q[(n + 2, n)] = s;
        }
        let mut pair = Vec::new();
        for total in 0..=2 * (cutoff - 1) {
            let lo = total.saturating_sub(cutoff - 1);
            let hi = total.min(cutoff - 1);
            let size = hi - lo + 1;
            let mut h = DMatrix::<f64>::zeros(size, size);
            for k in 0..size - 1 {
                let na = lo + k;
                let s = (((na + 1) * (total - na)) as f64).sqrt();
                h[(k, k + 1)] = s;
                h[(k + 1, k)] = s;
            }
            pair.push(PairBlock {
                members: (lo..=hi).map(|na| na * cutoff + total - na).collect(),
                eig: RealEigen::new(h),
            });
        }
        Ok(Arc::new(Self {
            cutoff,
            position: RealEigen::new(x),
            quadratic: RealEigen::new(q),
            pair,
        }))
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    fn phases(&self, f: impl Fn(f64) -> f64) -> Vec<C64> {
        (0..self.cutoff).map(|n| C64::from_polar(1.0, f(n as f64))).collect()
    }

    /// Builds the matrix-free action of `gate` at this cutoff.
    pub fn action(self: &Arc<Self>, gate: &Gate) -> Result<Action> {
        gate.kind.check_finite()?;
        let op = match (gate.kind, gate.targets) {
            (GateKind::Rotation(t), Targets::One(m)) => Op::Diagonal { mode: m, d: self.phases(|n| t * n) },
            (GateKind::Kerr(k), Targets::One(m)) => Op::Diagonal { mode: m, d: self.phases(|n| k * n * n) },
            (GateKind::Displacement(alpha), Targets::One(m)) => {
                // D(|a| e^{it}) = R(t) D(|a|) R(-t), and i^{-n} (a† - a) i^n = -i x.
                let (r, t) = alpha.to_polar();
                Op::Spectral {
                    mode: m,
                    sector: Sector::Position,
                    pre: self.phases(|n| -(t + FRAC_PI_2) * n),
                    phase: self.position.values.iter().map(|h| C64::from_polar(1.0, -r * h)).collect(),
                    post: self.phases(|n| (t + FRAC_PI_2) * n),
                }
            }
            (GateKind::Squeeze { r, phi }, Targets::One(m)) => {
                // S(r, phi) = R(phi/2) S(r) R(-phi/2), and
                // e^{-i pi n/4} (a^2 - a†^2)/2 e^{i pi n/4} = i (a^2 + a†^2)/2.
                let t = 0.5 * phi + FRAC_PI_4;
                Op::Spectral {
                    mode: m,
                    sector: Sector::Quadratic,
                    pre: self.phases(|n| -t * n),
                    phase: self.quadratic.values.iter().map(|h| C64::from_polar(1.0, r * h)).collect(),
                    post: self.phases(|n| t * n),
                }
            }
            (GateKind::Beamsplitter { theta, phi }, Targets::Two(a, b)) => {
                // BS = R_a(phi) exp(theta (a†b - ab†)) R_a(-phi), and
                // i^{-n_a} (a†b - ab†) i^{n_a} = -i (a†b + ab†).
                let c = self.cutoff;
                let t = phi + FRAC_PI_2;
                let pre = (0..c * c).map(|p| C64::from_polar(1.0, -t * (p / c) as f64)).collect();
                let post = (0..c * c).map(|p| C64::from_polar(1.0, t * (p / c) as f64)).collect();
                let phase = self
                    .pair
                    .iter()
                    .map(|blk| blk.eig.values.iter().map(|h| C64::from_polar(1.0, -theta * h)).collect())
                    .collect();
                Op::Pair { a, b, pre, phase, post }
            }
            _ => unreachable!("gate constructors pair kinds with target arity"),
        };
        Ok(Action { kernels: Arc::clone(self), op })
    }
}

#[derive(Clone, Copy, Debug)]
enum Sector {
    Position,
    Quadratic,
}

#[derive(Clone, Debug)]
enum Op {
    Diagonal { mode: usize, d: Vec<C64> },
    Spectral { mode: usize, sector: Sector, pre: Vec<C64>, phase: Vec<C64>, post: Vec<C64> },
    Pair { a: usize, b: usize, pre: Vec<C64>, phase: Vec<Vec<C64>>, post: Vec<C64> },
}

/// A gate ready to be applied to raw amplitude buffers.
#[derive(Clone, Debug)]
pub struct Action {
    kernels: Arc<Kernels>,
    op: Op,
}

impl Action {
    fn targets(&self) -> Targets {
        match self.op {
            Op::Diagonal { mode, .. } | Op::Spectral { mode, .. } => Targets::One(mode),
            Op::Pair { a, b, .. } => Targets::Two(a, b),
        }
    }

    /// Applies the gate (or its adjoint) in place to an amplitude buffer of
    /// `modes` modes at the kernel cutoff.
    pub fn apply_in_place(&self, amps: &mut [C64], modes: usize, adjoint: bool) {
        let c = self.kernels.cutoff;
        let conj = |z: C64| if adjoint { z.conj() } else { z };
        match &self.op {
            Op::Diagonal { mode, d } => {
                if modes == 1 {
                    amps.iter_mut().zip(d).for_each(|(a, p)| *a *= conj(*p));
                    return;
                }
                let (stride, bases) = fibre_bases(modes, c, *mode);
                for base in bases {
                    for (k, p) in d.iter().enumerate() {
                        amps[base + k * stride] *= conj(*p);
                    }
                }
            }
            Op::Spectral { mode, sector, pre, phase, post } => {
                let eig = match sector {
                    Sector::Position => &self.kernels.position,
                    Sector::Quadratic => &self.kernels.quadratic,
                };
                let (first, last) = if adjoint { (post, pre) } else { (pre, post) };
                let mut fibre = vec![C64::new(0.0, 0.0); c];
                let mut tmp = vec![C64::new(0.0, 0.0); c];
                let mut run = |v: &mut [C64]| {
                    for ((f, x), p) in fibre.iter_mut().zip(v.iter()).zip(first) {
                        *f = x * conj(*p);
                    }
                    eig.apply_t(&fibre, &mut tmp);
                    tmp.iter_mut().zip(phase).for_each(|(t, p)| *t *= conj(*p));
                    eig.apply(&tmp, &mut fibre);
                    for ((x, f), p) in v.iter_mut().zip(&fibre).zip(last) {
                        *x = f * conj(*p);
                    }
                };
                if modes == 1 {
                    run(amps);
                    return;
                }
                let (stride, bases) = fibre_bases(modes, c, *mode);
                let mut buf = vec![C64::new(0.0, 0.0); c];
                for base in bases {
                    for k in 0..c {
                        buf[k] = amps[base + k * stride];
                    }
                    run(&mut buf);
                    for k in 0..c {
                        amps[base + k * stride] = buf[k];
                    }
                }
            }
            Op::Pair { a, b, pre, phase, post } => {
                let (first, last) = if adjoint { (post, pre) } else { (pre, post) };
                let (sa, sb, bases) = pair_bases(modes, c, *a, *b);
                let idx = |base: usize, p: usize| base + (p / c) * sa + (p % c) * sb;
                let mut x = vec![C64::new(0.0, 0.0); c];
                let mut y = vec![C64::new(0.0, 0.0); c];
                for base in bases {
                    for (blk, ph) in self.kernels.pair.iter().zip(phase) {
                        let size = blk.members.len();
                        for (k, &p) in blk.members.iter().enumerate() {
                            x[k] = amps[idx(base, p)] * conj(first[p]);
                        }
                        blk.eig.apply_t(&x[..size], &mut y[..size]);
                        y[..size].iter_mut().zip(ph).for_each(|(t, p)| *t *= conj(*p));
                        blk.eig.apply(&y[..size], &mut x[..size]);
                        for (k, &p) in blk.members.iter().enumerate() {
                            amps[idx(base, p)] = x[k] * conj(last[p]);
                        }
                    }
                }
            }
        }
    }

    pub fn apply(&self, state: &FockState) -> Result<FockState> {
        check_targets(&self.targets(), state.modes())?;
        if state.cutoff() != self.kernels.cutoff {
            return Err(crate::Error::IncompatibleStates(format!(
                "state cutoff {} vs kernel cutoff {}",
                state.cutoff(),
                self.kernels.cutoff
            )));
        }
        let mut out = state.clone();
        let modes = out.modes();
        self.apply_in_place(out.amplitudes_mut(), modes, false);
        Ok(out)
    }
}

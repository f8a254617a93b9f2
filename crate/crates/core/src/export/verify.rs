//! Action of Gaussian gate sequences on ladder operators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::fock::{Gate, GateKind, Targets};

/// `a -> A a + B a† + d`, the Heisenberg action of a Gaussian unitary.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderMap {
    pub a: DMatrix<C64>,
    pub b: DMatrix<C64>,
    pub d: DVector<C64>,
}

impl LadderMap {
    pub fn identity(modes: usize) -> Self {
        Self {
            a: DMatrix::identity(modes, modes),
            b: DMatrix::zeros(modes, modes),
            d: DVector::zeros(modes),
        }
    }

    /// The map of `next` executed after `self`.
    pub fn then(&self, next: &LadderMap) -> LadderMap {
        let conj = |m: &DMatrix<C64>| m.map(|z| z.conj());
        LadderMap {
            a: &next.a * &self.a + &next.b * conj(&self.b),
            b: &next.a * &self.b + &next.b * conj(&self.a),
            d: &next.a * &self.d + &next.b * self.d.map(|z| z.conj()) + &next.d,
        }
    }

    /// Single-gate map; `None` for the non-Gaussian Kerr gate.
    pub fn of_gate(gate: &Gate, modes: usize) -> Option<LadderMap> {
        let mut m = Self::identity(modes);
        match (gate.kind, gate.targets) {
            (GateKind::Rotation(t), Targets::One(i)) => m.a[(i, i)] = C64::from_polar(1.0, t),
            (GateKind::Squeeze { r, phi }, Targets::One(i)) => {
                m.a[(i, i)] = C64::new(r.cosh(), 0.0);
                m.b[(i, i)] = -C64::from_polar(r.sinh(), phi);
            }
            (GateKind::Displacement(alpha), Targets::One(i)) => m.d[i] = alpha,
            (GateKind::Beamsplitter { theta, phi }, Targets::Two(i, j)) => {
                let (s, c) = theta.sin_cos();
                m.a[(i, i)] = C64::new(c, 0.0);
                m.a[(i, j)] = C64::from_polar(s, phi);
                m.a[(j, i)] = -C64::from_polar(s, -phi);
                m.a[(j, j)] = C64::new(c, 0.0);
            }
            (GateKind::Kerr(_), _) => return None,
            _ => unreachable!("gate constructors pair kinds with target arity"),
        }
        Some(m)
    }

    /// Composes the Gaussian gates of a sequence; Kerr gates are skipped.
    pub fn of_gates<'a>(gates: impl IntoIterator<Item = &'a Gate>, modes: usize) -> LadderMap {
        gates
            .into_iter()
            .filter_map(|g| Self::of_gate(g, modes))
            .fold(Self::identity(modes), |acc, g| acc.then(&g))
    }

    /// Largest entry-wise difference across `A`, `B` and `d`.
    pub fn max_deviation(&self, other: &LadderMap) -> f64 {
        let a = (&self.a - &other.a).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let b = (&self.b - &other.b).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let d = (&self.d - &other.d).iter().map(|z| z.norm()).fold(0.0, f64::max);
        a.max(b).max(d)
    }
}

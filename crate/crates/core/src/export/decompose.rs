use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::program::{GateProgram, GateRecord};
use crate::error::{Error, Result};

/// Smallest singular value a squeezer can realize.
pub const SINGULAR_VALUE_FLOOR: f64 = 1e-12;
/// Largest tolerated `max |U† U - I|` for mesh decomposition.
pub const UNITARITY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshShape {
    Rectangular,
    Triangular,
}

impl std::str::FromStr for MeshShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rectangular" => Ok(Self::Rectangular),
            "triangular" => Ok(Self::Triangular),
            other => Err(Error::Config(format!("unknown mesh shape `{other}`"))),
        }
    }
}

/// `W = U2 diag(e^r) U1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdFactors {
    pub u2: DMatrix<C64>,
    pub r: Vec<f64>,
    pub u1: DMatrix<C64>,
}

fn complexify(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|v| C64::new(v, 0.0))
}

pub fn svd_decompose(w: &DMatrix<f64>) -> Result<SvdFactors> {
    if !w.is_square() || w.nrows() == 0 {
        return Err(Error::ShapeMismatch(format!("weight matrix is {}x{}", w.nrows(), w.ncols())));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite weight".into()));
    }
    let svd = w.clone().svd(true, true);
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    if let Some(&s) = sigma.iter().find(|&&s| s <= SINGULAR_VALUE_FLOOR) {
        return Err(Error::NoninvertibleWeight { sigma: s });
    }
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    Ok(SvdFactors { u2: complexify(&u), r: sigma.iter().map(|s| s.ln()).collect(), u1: complexify(&v_t) })
}

/// `max |U† U - I|`.
pub fn unitarity_error(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    let g = u.adjoint() * u;
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (g[(i, j)] - if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).norm())
        .fold(0.0, f64::max)
}

/// Mode transformation `a -> T a` of a beamsplitter on one pair.
fn bs_block(theta: f64, phi: f64) -> [[C64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    [
        [C64::new(c, 0.0), C64::from_polar(s, phi)],
        [-C64::from_polar(s, -phi), C64::new(c, 0.0)],
    ]
}

/// `M <- T M` on rows `(m, m + 1)`.
fn apply_left(u: &mut DMatrix<C64>, m: usize, t: [[C64; 2]; 2]) {
    for col in 0..u.ncols() {
        let (x, y) = (u[(m, col)], u[(m + 1, col)]);
        u[(m, col)] = t[0][0] * x + t[0][1] * y;
        u[(m + 1, col)] = t[1][0] * x + t[1][1] * y;
    }
}

/// `M <- M T^{-1}` on columns `(m, m + 1)`.
fn apply_right_inverse(u: &mut DMatrix<C64>, m: usize, t: [[C64; 2]; 2]) {
    for row in 0..u.nrows() {
        let (x, y) = (u[(row, m)], u[(row, m + 1)]);
        // T^{-1} = T†
        u[(row, m)] = x * t[0][0].conj() + y * t[0][1].conj();
        u[(row, m + 1)] = x * t[1][0].conj() + y * t[1][1].conj();
    }
}

fn wrap(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    // Values within rounding of 2 pi read as 0.
    if TAU - a < 1e-13 {
        0.0
    } else {
        a
    }
}

/// Beamsplitter on `(m, m + 1)` whose right-inverse nulls `u[row, m]`.
fn null_right(u: &mut DMatrix<C64>, row: usize, m: usize) -> (f64, f64) {
    let (x, y) = (u[(row, m)], u[(row, m + 1)]);
    let theta = x.norm().atan2(y.norm());
    let phi = if x.norm() == 0.0 { 0.0 } else { wrap(y.arg() - x.arg() - PI) };
    apply_right_inverse(u, m, bs_block(theta, phi));
    (theta, phi)
}

/// Beamsplitter on `(m, m + 1)` whose left action nulls `u[m + 1, col]`.
fn null_left(u: &mut DMatrix<C64>, m: usize, col: usize) -> (f64, f64) {
    let (x, y) = (u[(m, col)], u[(m + 1, col)]);
    let theta = y.norm().atan2(x.norm());
    let phi = if y.norm() == 0.0 { 0.0 } else { wrap(x.arg() - y.arg()) };
    apply_left(u, m, bs_block(theta, phi));
    (theta, phi)
}

/// Beamsplitters then one output phase per mode whose mode transformation,
/// multiplied out in execution order, equals `u`.
///
/// The rectangular shape alternates column nulling from the right with row
/// nulling from the left and commutes the left factors through the residual
/// diagonal; the triangular shape nulls row by row from the right only.
pub fn mesh_decompose(u: &DMatrix<C64>, shape: MeshShape) -> Result<GateProgram> {
    let n = u.nrows();
    if !u.is_square() || n == 0 {
        return Err(Error::ShapeMismatch(format!("unitary is {}x{}", u.nrows(), u.ncols())));
    }
    let defect = unitarity_error(u);
    if defect.is_nan() || defect > UNITARITY_TOL {
        return Err(Error::NonUnitary { defect });
    }
    let mut work = u.clone();
    // (mode, theta, phi) in execution order, before the output phases.
    let mut first = Vec::new();
    let mut left = Vec::new();
    match shape {
        MeshShape::Triangular => {
            for row in (1..n).rev() {
                for m in 0..row {
                    let (t, p) = null_right(&mut work, row, m);
                    first.push((m, t, p));
                }
            }
        }
        MeshShape::Rectangular => {
            for i in 0..n.saturating_sub(1) {
                if i % 2 == 0 {
                    for j in 0..=i {
                        let (t, p) = null_right(&mut work, n - 1 - j, i - j);
                        first.push((i - j, t, p));
                    }
                } else {
                    for j in 1..=i + 1 {
                        let m = n + j - i - 3;
                        let (t, p) = null_left(&mut work, m, j - 1);
                        left.push((m, t, p));
                    }
                }
            }
        }
    }
    let phases: Vec<f64> = (0..n).map(|k| work[(k, k)].arg()).collect();
    // With L_1 the first left factor, U = L_1^{-1} ... L_k^{-1} D R_m ... R_1.
    // T(theta, phi)^{-1} = T(-theta, phi) and T(theta, phi) D = D T(theta,
    // phi + arg d_{m+1} - arg d_m), so U = D L'_1 ... L'_k R_m ... R_1 and
    // L'_k executes first among the moved factors.
    let moved = left
        .iter()
        .rev()
        .map(|&(m, t, p)| (m, -t, wrap(p + phases[m + 1] - phases[m])));
    let mut records: Vec<GateRecord> = first
        .into_iter()
        .chain(moved)
        .map(|(m, theta, phi)| GateRecord::Beamsplitter { i: m, j: m + 1, theta, phi })
        .collect();
    records.extend(phases.iter().enumerate().map(|(i, &p)| GateRecord::Rotation { i, theta: wrap(p) }));
    GateProgram::new(n, records)
}

/// Mode transformation of the passive records (beamsplitters and rotations)
/// of a program, in execution order; other records are skipped.
pub fn passive_matrix(program: &GateProgram) -> DMatrix<C64> {
    let n = program.modes();
    let mut m = DMatrix::<C64>::identity(n, n);
    for r in program.records() {
        match *r {
            GateRecord::Beamsplitter { i, j, theta, phi } => {
                let t = bs_block(theta, phi);
                for col in 0..n {
                    let (x, y) = (m[(i, col)], m[(j, col)]);
                    m[(i, col)] = t[0][0] * x + t[0][1] * y;
                    m[(j, col)] = t[1][0] * x + t[1][1] * y;
                }
            }
            GateRecord::Rotation { i, theta } => {
                let e = C64::from_polar(1.0, theta);
                for col in 0..n {
                    m[(i, col)] *= e;
                }
            }
            _ => {}
        }
    }
    m
}

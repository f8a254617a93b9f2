//! Compilation of weight matrices and trained layers into gate programs.

mod decompose;
mod program;
mod verify;

pub use decompose::{
    mesh_decompose, passive_matrix, svd_decompose, unitarity_error, MeshShape, SvdFactors,
    SINGULAR_VALUE_FLOOR, UNITARITY_TOL,
};
pub use program::{GateProgram, GateRecord};
pub use verify::LadderMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::Gate;
use crate::layers::{InterferometerParams, LayerParams};

/// Tolerance of [`verify_layer`].
pub const VERIFY_TOL: f64 = 1e-8;

/// Mode transformation of an interferometer's beamsplitters and phases.
pub fn interferometer_matrix(u: &InterferometerParams) -> DMatrix<C64> {
    let records = u.gates().iter().filter_map(record_of).collect();
    let program = GateProgram::new(u.modes(), records).expect("interferometer gates index valid modes");
    passive_matrix(&program)
}

fn record_of(g: &Gate) -> Option<GateRecord> {
    use crate::fock::{GateKind, Targets};
    Some(match (g.kind, g.targets) {
        (GateKind::Beamsplitter { theta, phi }, Targets::Two(i, j)) => GateRecord::Beamsplitter { i, j, theta, phi },
        (GateKind::Rotation(theta), Targets::One(i)) => GateRecord::Rotation { i, theta },
        _ => return None,
    })
}

fn check_bias(modes: usize, bias: &[C64]) -> Result<()> {
    if bias.len() != modes {
        return Err(Error::IncompatibleParameters(format!("{} bias entries for {modes} modes", bias.len())));
    }
    Ok(())
}

/// The layer in execution order: mesh of `U1`, squeezers, mesh of `U2`,
/// displacements carrying the layer's own amplitude plus `bias`, then Kerr.
pub fn export_layer(params: &LayerParams, bias: &[C64], shape: MeshShape) -> Result<GateProgram> {
    let n = params.modes();
    check_bias(n, bias)?;
    let mut program = mesh_decompose(&interferometer_matrix(&params.u1), shape)?;
    let squeezers = params.squeeze_r.iter().enumerate().map(|(i, &r)| GateRecord::Squeeze { i, r }).collect();
    program.extend(GateProgram::new(n, squeezers)?)?;
    program.extend(mesh_decompose(&interferometer_matrix(&params.u2), shape)?)?;
    let tail = params
        .disp_alpha
        .iter()
        .zip(bias)
        .enumerate()
        .map(|(i, (&a, &b))| GateRecord::Displacement { i, alpha: a + b })
        .chain(params.kerr_kappa.iter().enumerate().map(|(i, &kappa)| GateRecord::Kerr { i, kappa }))
        .collect();
    program.extend(GateProgram::new(n, tail)?)?;
    Ok(program)
}

/// Gaussian program for `p -> W p + ...` followed by the bias displacement:
/// mesh of `U1`, squeezers `r = ln sigma`, mesh of `U2`, then `D(b)`.
pub fn compile_weights(w: &DMatrix<f64>, bias: &[C64], shape: MeshShape) -> Result<GateProgram> {
    let n = w.nrows();
    check_bias(n, bias)?;
    let f = svd_decompose(w)?;
    let mut program = mesh_decompose(&f.u1, shape)?;
    program.extend(GateProgram::new(n, f.r.iter().enumerate().map(|(i, &r)| GateRecord::Squeeze { i, r }).collect())?)?;
    program.extend(mesh_decompose(&f.u2, shape)?)?;
    program.extend(GateProgram::new(
        n,
        bias.iter().enumerate().map(|(i, &alpha)| GateRecord::Displacement { i, alpha }).collect(),
    )?)?;
    Ok(program)
}

/// Compares a program against the layer it was exported from: the Gaussian
/// ladder maps must agree and the Kerr records must carry the layer's values.
/// Returns the ladder-map deviation.
pub fn verify_layer(program: &GateProgram, params: &LayerParams, bias: &[C64]) -> Result<f64> {
    let n = params.modes();
    check_bias(n, bias)?;
    if program.modes() != n {
        return Err(Error::IncompatibleParameters(format!("{}-mode program for a {n}-mode layer", program.modes())));
    }
    let mut expected = params.clone();
    for (a, b) in expected.disp_alpha.iter_mut().zip(bias) {
        *a += b;
    }
    let gates: Vec<Gate> = program.records().iter().map(GateRecord::gate).collect();
    let deviation = LadderMap::of_gates(&gates, n).max_deviation(&LadderMap::of_gates(&expected.gates(), n));
    let kerr: Vec<(usize, f64)> = program
        .records()
        .iter()
        .filter_map(|r| match *r {
            GateRecord::Kerr { i, kappa } => Some((i, kappa)),
            _ => None,
        })
        .collect();
    let want: Vec<(usize, f64)> = params.kerr_kappa.iter().copied().enumerate().collect();
    if kerr != want {
        return Err(Error::IncompatibleParameters("Kerr records differ from the layer".into()));
    }
    if deviation.is_nan() || deviation > VERIFY_TOL {
        return Err(Error::IncompatibleParameters(format!("ladder maps differ by {deviation:e}")));
    }
    Ok(deviation)
}

/// Checks a compiled weight program: with `a -> A a + B a† + d` its
/// ladder map must have real `A`, `B`, act on momenta as `A - B = W` and
/// displace by `bias`. Returns the largest deviation.
pub fn verify_weights(program: &GateProgram, w: &DMatrix<f64>, bias: &[C64]) -> Result<f64> {
    let n = w.nrows();
    check_bias(n, bias)?;
    if program.modes() != n || !w.is_square() {
        return Err(Error::IncompatibleParameters(format!(
            "{}-mode program for a {}x{} weight matrix",
            program.modes(),
            w.nrows(),
            w.ncols()
        )));
    }
    let gates: Vec<Gate> = program.records().iter().map(GateRecord::gate).collect();
    let map = LadderMap::of_gates(&gates, n);
    let imag = map.a.iter().chain(map.b.iter()).map(|z| z.im.abs()).fold(0.0, f64::max);
    let momentum = (&map.a - &map.b).iter().zip(w.iter()).map(|(z, v)| (z.re - v).abs()).fold(0.0, f64::max);
    let shift = map.d.iter().zip(bias).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let deviation = imag.max(momentum).max(shift);
    if deviation.is_nan() || deviation > VERIFY_TOL {
        return Err(Error::IncompatibleParameters(format!("compiled weights deviate by {deviation:e}")));
    }
    Ok(deviation)
}

use std::fs::File;
use std::io::BufReader;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ExperimentConfig, Report};
use crate::error::Result;
use crate::export::{compile_weights, export_layer, verify_layer, verify_weights, GateProgram};
use crate::layers::read_checkpoint;

/// Compiles either every layer of `checkpoint` (with zero bias) or a seeded
/// random `modes x modes` weight matrix and bias into one gate program, and
/// verifies the result. Files: `program.txt`.
pub fn run_decompose(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let (program, deviation) = match &config.checkpoint {
        Some(path) => {
            let net = read_checkpoint(BufReader::new(File::open(path)?))?;
            let zero = vec![C64::new(0.0, 0.0); net.modes()];
            let mut program = GateProgram::new(net.modes(), Vec::new())?;
            let mut deviation = 0.0f64;
            for layer in net.layers() {
                let part = export_layer(layer, &zero, config.mesh)?;
                deviation = deviation.max(verify_layer(&part, layer, &zero)?);
                program.extend(part)?;
            }
            (program, deviation)
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let n = config.modes;
            let w = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let bias: Vec<C64> = (0..n).map(|_| C64::new(rng.random_range(-0.5..0.5), 0.0)).collect();
            let program = compile_weights(&w, &bias, config.mesh)?;
            let deviation = verify_weights(&program, &w, &bias)?;
            (program, deviation)
        }
    };
    let mut text = Vec::new();
    program.write_text(&mut text)?;
    let mut report = Report::default();
    report.push_metric("records", program.records().len() as f64);
    report.push_metric("max_deviation", deviation);
    report.add_file("program.txt", text);
    Ok(report)
}

use std::fmt::Write as _;

use super::{fit_columns, train_config, ColumnFits, ColumnJob, ColumnNetworks, ExperimentConfig, MnistSet, Report};
use crate::encoding::{interleaved_displacements, make_targets_columns, prepare_input, EncodingMatrix};
use crate::error::Result;
use crate::layers::{fmt_f64, write_checkpoint};
use crate::signal::{mse_percent, write_pgm, ImageTensor};
use crate::training::CostSpec;

/// `fidelity.csv` with one row per column.
fn fidelity_csv(fits: &ColumnFits) -> Vec<u8> {
    let mut out = String::from("column,fidelity\n");
    for (c, f) in fits.fidelities.iter().enumerate() {
        let _ = writeln!(out, "{c},{}", fmt_f64(*f));
    }
    out.into_bytes()
}

/// Checkpoints named `params.ckpt` for a shared network, otherwise
/// `params_colNN.ckpt` after the first column each network serves.
pub(super) fn add_checkpoints(report: &mut Report, fits: &ColumnFits, prefix: &str) -> Result<()> {
    for (k, trained) in fits.networks.iter().enumerate() {
        let mut bytes = Vec::new();
        write_checkpoint(&trained.net, &mut bytes)?;
        let name = match fits.layout {
            ColumnNetworks::Shared => format!("{prefix}params.ckpt"),
            ColumnNetworks::PerColumn => {
                let lead = fits.network_of.iter().position(|&n| n == k).expect("every network serves a column");
                format!("{prefix}params_col{lead:02}.ckpt")
            }
        };
        report.add_file(name, bytes);
    }
    Ok(())
}

/// Learns the normalized columns of one image as single-mode Fock
/// amplitudes and rebuilds the image from the learned amplitudes scaled by
/// the column norms.
///
/// Each column's input is the coherent state of its two encoded quadratures
/// (a seeded 2 x height encoder scaled over the image's columns). Files:
/// `original.pgm`, `reconstruction.pgm`, `fidelity.csv`, `trace.csv` (cost
/// summed over columns) and the network checkpoints.
pub fn run_reconstruct(config: &ExperimentConfig, data: &MnistSet) -> Result<Report> {
    config.validate()?;
    let image = data.image(config.digit_index)?;
    let (height, width) = (image.height(), image.width());
    let targets = make_targets_columns(image)?;
    let columns: Vec<Vec<f64>> = (0..width).map(|c| image.column(c)).collect();
    let norms: Vec<f64> = columns.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();

    let mut enc = EncodingMatrix::generate(2, height, config.seed)?;
    enc.fit_scale(columns.iter().map(Vec::as_slice))?;
    let jobs = columns
        .iter()
        .zip(targets)
        .map(|(col, target)| {
            let input = prepare_input(&interleaved_displacements(&enc.encode(col)?)?, config.cutoff)?;
            Ok(ColumnJob { input, target })
        })
        .collect::<Result<Vec<_>>>()?;

    let cost = |t| CostSpec::reconstruction(t, config.gamma, height);
    let fits = fit_columns(
        &jobs,
        config.network,
        config.depth,
        config.readout_displacement,
        cost,
        &train_config(config, true),
    )?;

    let pixels = (0..height * width).map(|i| norms[i % width] * fits.amplitudes[i % width][i / width].re).collect();
    let rebuilt = ImageTensor::new(height, width, 1, pixels)?;

    let mut report = Report::default();
    report.push_metric("mean_fidelity", fits.mean_fidelity());
    report.push_metric("min_fidelity", fits.min_fidelity());
    report.push_metric("mse_percent", mse_percent(&rebuilt, image)?);
    report.push_metric("networks", fits.networks.len() as f64);
    report.add_trace(&fits.summed_trace())?;
    report.add_file("fidelity.csv", fidelity_csv(&fits));
    for (name, img) in [("original.pgm", image), ("reconstruction.pgm", &rebuilt)] {
        let mut bytes = Vec::new();
        write_pgm(img, &mut bytes)?;
        report.add_file(name, bytes);
    }
    add_checkpoints(&mut report, &fits, "")?;
    Ok(report)
}

use std::cmp::Ordering;
use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::reconstruct::add_checkpoints;
use super::{fit_columns, train_config, ColumnFits, ColumnJob, ExperimentConfig, MnistSet, Report};
use crate::error::{Error, Result};
use crate::fock::FockState;
use crate::layers::fmt_f64;
use crate::signal::{
    awgn_add, denoise_chain, dft2, merge_rgb, mse_percent, spectrum_to_targets, write_pgm, write_ppm,
    write_spectrum_csv, ImageTensor, SpectrumTargets,
};
use crate::training::{CostKind, CostSpec, TrainTrace};

/// Completes columns `0..=w/2` of the spectrum of a real image using
/// `X[ky][w - kx] = conj(X[(h - ky) % h][kx])`.
fn mirror_columns(half: &[Vec<C64>], width: usize) -> Vec<Vec<C64>> {
    (0..width)
        .map(|kx| {
            if kx < half.len() {
                half[kx].clone()
            } else {
                let src = &half[width - kx];
                let h = src.len();
                (0..h).map(|ky| src[(h - ky) % h].conj()).collect()
            }
        })
        .collect()
}

/// Learns the independent columns of a spectrum from the vacuum.
fn learn_spectrum(
    targets: &SpectrumTargets,
    kind: CostKind,
    config: &ExperimentConfig,
) -> Result<(ColumnFits, Vec<Vec<C64>>)> {
    let width = targets.targets.len();
    let vacuum = FockState::vacuum(1, config.cutoff)?;
    let jobs: Vec<ColumnJob> = targets.targets[..=width / 2]
        .iter()
        .map(|t| ColumnJob { input: vacuum.clone(), target: t.clone() })
        .collect();
    let cost = |t| CostSpec::denoise(kind, t, targets.height);
    let fits =
        fit_columns(&jobs, config.network, config.depth, config.readout_displacement, cost, &train_config(config, true))?;
    let full = mirror_columns(&fits.amplitudes, width);
    Ok((fits, full))
}

struct PlaneOutcome {
    noisy: ImageTensor,
    denoised: ImageTensor,
    image_fits: ColumnFits,
    noise_fits: ColumnFits,
    noisy_spectrum: Vec<u8>,
}

/// Noise, two learners in parallel, spectral difference, inverse transform.
fn denoise_plane(plane: &ImageTensor, std: f64, seed: u64, config: &ExperimentConfig) -> Result<PlaneOutcome> {
    let noisy = awgn_add(plane, config.noise_mean, std, seed)?;
    let mean = ImageTensor::filled(plane.height(), plane.width(), 1, config.noise_mean)?;
    let noisy_spec = dft2(&noisy)?;
    let image_targets = spectrum_to_targets(&noisy_spec);
    let noise_targets = spectrum_to_targets(&dft2(&mean)?);
    let (image, noise) = rayon::join(
        || learn_spectrum(&image_targets, CostKind::DenoiseImage, config),
        || learn_spectrum(&noise_targets, CostKind::DenoiseNoise, config),
    );
    let ((image_fits, image_cols), (noise_fits, noise_cols)) = (image?, noise?);
    let denoised = denoise_chain(&image_targets, &image_cols, &noise_targets, &noise_cols)?;
    let mut noisy_spectrum = Vec::new();
    write_spectrum_csv(&noisy_spec, &mut noisy_spectrum)?;
    Ok(PlaneOutcome { noisy, denoised, image_fits, noise_fits, noisy_spectrum })
}

/// The chosen image, or with three channels an RGB image whose planes are
/// it and the next two images with the same label.
fn source_image(config: &ExperimentConfig, data: &MnistSet) -> Result<Vec<ImageTensor>> {
    let first = data.image(config.digit_index)?.clone();
    if config.channels == 1 {
        return Ok(vec![first]);
    }
    let label = data.labels[config.digit_index];
    let mut planes = vec![first];
    planes.extend(
        (config.digit_index + 1..data.len()).filter(|&i| data.labels[i] == label).take(2).map(|i| data.images[i].clone()),
    );
    if planes.len() < 3 {
        return Err(Error::Config(format!("need three images of digit {label} for a colour run")));
    }
    Ok(planes)
}

fn join_planes(planes: Vec<ImageTensor>) -> Result<ImageTensor> {
    match <[ImageTensor; 3]>::try_from(planes) {
        Ok(rgb) => merge_rgb(&rgb),
        Err(mut single) => Ok(single.remove(0)),
    }
}

fn encode_image(img: &ImageTensor) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    if img.channels() == 3 {
        write_ppm(img, &mut bytes)?;
    } else {
        write_pgm(img, &mut bytes)?;
    }
    Ok(bytes)
}

fn summed(traces: impl IntoIterator<Item = TrainTrace>) -> TrainTrace {
    traces
        .into_iter()
        .reduce(|mut acc, t| {
            for (a, b) in acc.entries.iter_mut().zip(&t.entries) {
                a.1 += b.1;
            }
            acc
        })
        .unwrap_or_default()
}

struct DenoiseOutcome {
    original: ImageTensor,
    noisy: ImageTensor,
    denoised: ImageTensor,
    planes: Vec<PlaneOutcome>,
}

impl DenoiseOutcome {
    fn mse_noisy(&self) -> Result<f64> {
        mse_percent(&self.noisy, &self.original)
    }

    fn mse_denoised(&self) -> Result<f64> {
        mse_percent(&self.denoised, &self.original)
    }
}

fn denoise(config: &ExperimentConfig, data: &MnistSet, std: f64) -> Result<DenoiseOutcome> {
    let sources = source_image(config, data)?;
    let planes = sources
        .iter()
        .enumerate()
        .map(|(c, plane)| denoise_plane(plane, std, config.seed.wrapping_add(c as u64), config))
        .collect::<Result<Vec<_>>>()?;
    Ok(DenoiseOutcome {
        original: join_planes(sources)?,
        noisy: join_planes(planes.iter().map(|p| p.noisy.clone()).collect())?,
        denoised: join_planes(planes.iter().map(|p| p.denoised.clone()).collect())?,
        planes,
    })
}

/// Adds noise of `noise_mean` and `noise_std` to one image, learns the
/// normalized spectrum columns of the noisy image and of the constant
/// noise-mean matrix with independent single-mode learners, and subtracts
/// the de-normalized learned spectra before transforming back.
///
/// Only columns `0..=w/2` are learned; the rest follow from the symmetry of
/// real-image spectra. Files: `original`, `noisy` and `denoised` images
/// (PGM, or PPM with three channels), `spectrum_noisy.csv` for the first
/// plane, `trace.csv` (both learners' costs summed) and the learner
/// checkpoints prefixed `image_` and `noise_` (plane letter first in colour).
pub fn run_denoise(config: &ExperimentConfig, data: &MnistSet) -> Result<Report> {
    config.validate()?;
    let outcome = denoise(config, data, config.noise_std)?;
    let mut report = Report::default();
    report.push_metric("mse_noisy", outcome.mse_noisy()?);
    report.push_metric("mse_denoised", outcome.mse_denoised()?);
    let mean = |f: fn(&PlaneOutcome) -> f64| outcome.planes.iter().map(f).sum::<f64>() / outcome.planes.len() as f64;
    report.push_metric("image_mean_fidelity", mean(|p| p.image_fits.mean_fidelity()));
    report.push_metric("noise_mean_fidelity", mean(|p| p.noise_fits.mean_fidelity()));
    report.add_trace(&summed(
        outcome.planes.iter().flat_map(|p| [p.image_fits.summed_trace(), p.noise_fits.summed_trace()]),
    ))?;
    let ext = if outcome.original.channels() == 3 { "ppm" } else { "pgm" };
    for (name, img) in [("original", &outcome.original), ("noisy", &outcome.noisy), ("denoised", &outcome.denoised)] {
        report.add_file(format!("{name}.{ext}"), encode_image(img)?);
    }
    report.add_file("spectrum_noisy.csv", outcome.planes[0].noisy_spectrum.clone());
    let letters = ["r_", "g_", "b_"];
    for (c, plane) in outcome.planes.iter().enumerate() {
        let tag = if outcome.planes.len() == 3 { letters[c] } else { "" };
        add_checkpoints(&mut report, &plane.image_fits, &format!("{tag}image_"))?;
        add_checkpoints(&mut report, &plane.noise_fits, &format!("{tag}noise_"))?;
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub std: f64,
    pub mse_noisy: f64,
    pub mse_denoised: f64,
}

/// Runs the denoiser once per entry of `sweep_stds`, all with the same
/// noise seed, and writes `sweep.csv` with header
/// `std,mse_noisy,mse_denoised`. The `violations` metric counts rows where
/// denoising did not lower the error.
pub fn run_sweep(config: &ExperimentConfig, data: &MnistSet) -> Result<(Report, Vec<SweepRow>)> {
    config.validate()?;
    let rows = config
        .sweep_stds
        .par_iter()
        .map(|&std| {
            let outcome = denoise(config, data, std)?;
            Ok(SweepRow { std, mse_noisy: outcome.mse_noisy()?, mse_denoised: outcome.mse_denoised()? })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut csv = String::from("std,mse_noisy,mse_denoised\n");
    for r in &rows {
        let _ = writeln!(csv, "{},{},{}", fmt_f64(r.std), fmt_f64(r.mse_noisy), fmt_f64(r.mse_denoised));
    }
    let mut report = Report::default();
    report.push_metric("violations", rows.iter().filter(|r| r.mse_denoised.partial_cmp(&r.mse_noisy) != Some(Ordering::Less)).count() as f64);
    report.add_file("sweep.csv", csv.into_bytes());
    Ok((report, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::Experiment;
    use crate::signal::read_pnm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mirrored_columns_match_the_full_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (h, w) in [(28, 28), (5, 7), (4, 6)] {
            let img = ImageTensor::new(h, w, 1, (0..h * w).map(|_| rng.random::<f64>()).collect()).unwrap();
            let targets = spectrum_to_targets(&dft2(&img).unwrap());
            let full = mirror_columns(&targets.targets[..=w / 2], w);
            for (a, b) in full.iter().flatten().zip(targets.targets.iter().flatten()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    fn config(steps: usize) -> ExperimentConfig {
        ExperimentConfig {
            steps,
            depth: 1,
            cutoff: 30,
            ..ExperimentConfig::defaults(Experiment::Denoise)
        }
    }

    fn data() -> MnistSet {
        let images = (0..4)
            .map(|i| ImageTensor::new(28, 28, 1, (0..784).map(|k| ((k + i) % 28) as f64 / 28.0).collect()).unwrap())
            .collect();
        MnistSet { images, labels: vec![3, 3, 5, 3] }
    }

    #[test]
    fn grey_run_files_and_determinism() {
        let c = ExperimentConfig { digit_index: 0, ..config(2) };
        let a = run_denoise(&c, &data()).unwrap();
        for name in ["original.pgm", "noisy.pgm", "denoised.pgm"] {
            read_pnm(a.file(name).unwrap()).unwrap();
        }
        assert!(a.file("spectrum_noisy.csv").unwrap().starts_with(b"ky,kx,re,im\n"));
        assert!(a.file("noise_params_col00.ckpt").is_some());
        let mse = a.metric("mse_noisy").unwrap();
        // 100 * (mean^2 + std^2) up to sampling error.
        assert!((mse - 26.0).abs() < 1.5, "{mse}");
        assert_eq!(a, run_denoise(&c, &data()).unwrap());
    }

    #[test]
    fn colour_run_uses_same_label_planes() {
        let c = ExperimentConfig { channels: 3, digit_index: 0, ..config(1) };
        let r = run_denoise(&c, &data()).unwrap();
        let original = read_pnm(r.file("original.ppm").unwrap()).unwrap();
        assert_eq!(original.channels(), 3);
        // Green is image 1, blue is image 3 (image 2 is another digit).
        assert_eq!(original.get(0, 0, 2), (3.0f64 / 28.0 * 255.0).round() / 255.0);
        assert!(r.file("b_image_params_col00.ckpt").is_some());
        let c = ExperimentConfig { digit_index: 1, ..c };
        assert!(run_denoise(&c, &data()).unwrap_err().is_config());
    }

    #[test]
    fn sweep_rows() {
        let c = ExperimentConfig { sweep_stds: vec![0.0, 0.2], ..config(1) };
        let (report, rows) = run_sweep(&c, &data()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].mse_noisy < rows[1].mse_noisy);
        let csv = String::from_utf8(report.file("sweep.csv").unwrap().to_vec()).unwrap();
        assert!(csv.starts_with("std,mse_noisy,mse_denoised\n0.0000000000000000e0,"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn summed_traces_add_entrywise() {
        let t = |c: f64| TrainTrace { entries: vec![(0, c), (5, 2.0 * c)] };
        assert_eq!(summed([t(1.0), t(0.5)]).entries, vec![(0, 1.5), (5, 3.0)]);
        assert!(summed([]).entries.is_empty());
    }
}

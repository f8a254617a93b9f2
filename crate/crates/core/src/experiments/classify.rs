use std::fmt::Write as _;

use super::{train_config, ExperimentConfig, MnistSet, Report};
use crate::encoding::{interleaved_displacements, make_targets_classification, prepare_input, EncodingMatrix};
use crate::error::{Error, Result};
use crate::fock::{quadrature_expectation, FockState, Quadrature};
use crate::layers::{fmt_f64, write_checkpoint};
use crate::training::{train, Circuit, CostSpec, Problem};

/// The first `train_size` images with label below `classes`, then the next
/// `test_size`, in dataset order.
fn split(data: &MnistSet, config: &ExperimentConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    let wanted = config.train_size + config.test_size;
    let picked: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] < config.classes).take(wanted).collect();
    if picked.len() < wanted {
        return Err(Error::Config(format!(
            "dataset has {} images of the first {} digits, need {wanted}",
            picked.len(),
            config.classes
        )));
    }
    let test = picked[config.train_size..].to_vec();
    let mut train = picked;
    train.truncate(config.train_size);
    Ok((train, test))
}

fn prepare(enc: &EncodingMatrix, data: &MnistSet, indices: &[usize], cutoff: usize) -> Result<Vec<FockState>> {
    indices
        .iter()
        .map(|&i| prepare_input(&interleaved_displacements(&enc.encode(data.images[i].pixels())?)?, cutoff))
        .collect()
}

fn softmax(values: &[f64]) -> Vec<f64> {
    let peak = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = values.iter().map(|v| (v - peak).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.iter().map(|e| e / total).collect()
}

/// Index of the largest value; the first one wins ties.
fn argmax(values: &[f64]) -> usize {
    values.iter().enumerate().fold(0, |best, (i, v)| if *v > values[best] { i } else { best })
}

struct Evaluation {
    confusion: Vec<Vec<usize>>,
    softmax_sums: Vec<Vec<f64>>,
}

impl Evaluation {
    fn accuracy(&self) -> f64 {
        let correct: usize = (0..self.confusion.len()).map(|c| self.confusion[c][c]).sum();
        let total: usize = self.confusion.iter().flatten().sum();
        correct as f64 / total as f64
    }
}

fn evaluate(circuit: &Circuit, theta: &[f64], inputs: &[FockState], labels: &[usize], classes: usize) -> Result<Evaluation> {
    let mut eval = Evaluation { confusion: vec![vec![0; classes]; classes], softmax_sums: vec![vec![0.0; classes]; classes] };
    for (out, &label) in circuit.forward_batch(theta, inputs)?.iter().zip(labels) {
        let x: Vec<f64> =
            (0..classes).map(|m| quadrature_expectation(out, m, Quadrature::X)).collect::<Result<_>>()?;
        eval.confusion[label][argmax(&x)] += 1;
        for (acc, p) in eval.softmax_sums[label].iter_mut().zip(softmax(&x)) {
            *acc += p;
        }
    }
    Ok(eval)
}

/// Header `first,prefix_0,...`, then one row per class.
fn matrix_csv(first: &str, prefix: &str, classes: usize, row: impl Fn(usize) -> Vec<String>) -> Vec<u8> {
    let mut out = String::from(first);
    for c in 0..classes {
        let _ = write!(out, ",{prefix}_{c}");
    }
    out.push('\n');
    for c in 0..classes {
        let _ = writeln!(out, "{c},{}", row(c).join(","));
    }
    out.into_bytes()
}

/// Trains one network to map encoded digits onto class-indexed coherent
/// targets and scores held-out images by the largest `<x>` quadrature.
///
/// Files: `trace.csv`, `confusion.csv` (rows are true labels, columns
/// predictions), `softmax.csv` (mean softmax of `<x>` per true label),
/// `params.ckpt`, `encoder.ckpt` and, with a readout displacement,
/// `readout.csv`.
pub fn run_classify(config: &ExperimentConfig, data: &MnistSet) -> Result<Report> {
    config.validate()?;
    let (train_idx, test_idx) = split(data, config)?;
    let mut enc = EncodingMatrix::generate(2 * config.modes, data.images[0].pixels().len(), config.seed)?;
    enc.fit_scale(train_idx.iter().map(|&i| data.images[i].pixels()))?;

    let train_inputs = prepare(&enc, data, &train_idx, config.cutoff)?;
    let test_inputs = prepare(&enc, data, &test_idx, config.cutoff)?;
    let train_labels: Vec<usize> = train_idx.iter().map(|&i| data.labels[i]).collect();
    let test_labels: Vec<usize> = test_idx.iter().map(|&i| data.labels[i]).collect();
    let problem = Problem {
        inputs: train_inputs,
        cost: CostSpec::classification(make_targets_classification(&train_labels, config.modes, config.cutoff)?)?,
        readout_displacement: config.readout_displacement,
    };

    let tc = train_config(config, false);
    let trained = train(tc.init_network(config.modes, config.depth)?, &problem, &tc)?;
    let circuit = Circuit::new(config.modes, config.depth, config.cutoff, config.readout_displacement)?;
    let theta = trained.circuit_params();
    let train_eval = evaluate(&circuit, &theta, &problem.inputs, &train_labels, config.classes)?;
    let test_eval = evaluate(&circuit, &theta, &test_inputs, &test_labels, config.classes)?;

    let mut report = Report::default();
    report.push_metric("final_cost", trained.final_cost);
    report.push_metric("train_accuracy", train_eval.accuracy());
    report.push_metric("test_accuracy", test_eval.accuracy());
    report.add_trace(&trained.trace)?;
    report.add_file(
        "confusion.csv",
        matrix_csv("true", "pred", config.classes, |c| test_eval.confusion[c].iter().map(|n| n.to_string()).collect()),
    );
    report.add_file(
        "softmax.csv",
        matrix_csv("label", "p", config.classes, |c| {
            let count: usize = test_eval.confusion[c].iter().sum();
            test_eval.softmax_sums[c].iter().map(|s| fmt_f64(s / count.max(1) as f64)).collect()
        }),
    );
    let mut ckpt = Vec::new();
    write_checkpoint(&trained.net, &mut ckpt)?;
    report.add_file("params.ckpt", ckpt);
    let mut enc_bytes = Vec::new();
    enc.write_checkpoint(&mut enc_bytes)?;
    report.add_file("encoder.ckpt", enc_bytes);
    if let Some(readout) = &trained.readout {
        let mut csv = String::from("mode,re,im\n");
        for (m, a) in readout.iter().enumerate() {
            let _ = writeln!(csv, "{m},{},{}", fmt_f64(a.re), fmt_f64(a.im));
        }
        report.add_file("readout.csv", csv.into_bytes());
    }
    Ok(report)
}

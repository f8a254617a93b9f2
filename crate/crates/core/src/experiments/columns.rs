//! Single-mode learners fitted to per-column amplitude targets.

use std::collections::HashMap;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::config::ColumnNetworks;
use crate::error::{Error, Result};
use crate::fock::{project_normalize, FockState};
use crate::training::{train, Circuit, CostSpec, Problem, TrainConfig, TrainTrace, Trained};

/// One column: the state fed to the learner and the amplitudes it should
/// produce in the learning subspace.
#[derive(Clone, Debug)]
pub struct ColumnJob {
    pub input: FockState,
    pub target: Vec<C64>,
}

#[derive(Clone, Debug)]
pub struct ColumnFits {
    pub networks: Vec<Trained>,
    /// Index into `networks` for each column.
    pub network_of: Vec<usize>,
    pub fidelities: Vec<f64>,
    /// Learned subspace amplitudes with the global phase chosen so the
    /// overlap with the target is real and non-negative.
    pub amplitudes: Vec<Vec<C64>>,
    pub layout: ColumnNetworks,
}

impl ColumnFits {
    pub fn mean_fidelity(&self) -> f64 {
        self.fidelities.iter().sum::<f64>() / self.fidelities.len() as f64
    }

    pub fn min_fidelity(&self) -> f64 {
        self.fidelities.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Total cost over all columns at every logged step.
    pub fn summed_trace(&self) -> TrainTrace {
        let mut entries: Vec<(usize, f64)> =
            self.networks[self.network_of[0]].trace.entries.iter().map(|&(s, _)| (s, 0.0)).collect();
        // A shared network's cost already sums over the columns.
        let columns = match self.layout {
            ColumnNetworks::Shared => vec![0],
            ColumnNetworks::PerColumn => self.network_of.clone(),
        };
        for net in columns {
            for (acc, &(_, c)) in entries.iter_mut().zip(&self.networks[net].trace.entries) {
                acc.1 += c;
            }
        }
        TrainTrace { entries }
    }
}

fn job_key(job: &ColumnJob) -> Vec<u64> {
    job.input
        .amplitudes()
        .iter()
        .chain(&job.target)
        .flat_map(|z| [z.re.to_bits(), z.im.to_bits()])
        .collect()
}

/// Phase-aligned learned amplitudes and the subspace fidelity.
fn read_out(circuit: &Circuit, trained: &Trained, job: &ColumnJob) -> Result<(f64, Vec<C64>)> {
    let out = circuit.forward(&trained.circuit_params(), &job.input)?;
    let proj = project_normalize(&out, job.target.len())?;
    let overlap: C64 = job.target.iter().zip(&proj).map(|(t, p)| t.conj() * p).sum();
    let phase = C64::from_polar(1.0, -overlap.arg());
    Ok((overlap.norm_sqr(), proj.iter().map(|p| p * phase).collect()))
}

/// Trains the column learners and reads out their amplitudes.
///
/// With [`ColumnNetworks::PerColumn`] columns whose input and target are
/// bit-identical share one training run, seeded from `config.seed` plus the
/// first such column index, and distinct runs proceed in parallel.
pub fn fit_columns(
    jobs: &[ColumnJob],
    layout: ColumnNetworks,
    depth: usize,
    readout_displacement: bool,
    cost: impl Fn(Vec<Vec<C64>>) -> Result<CostSpec> + Sync,
    config: &TrainConfig,
) -> Result<ColumnFits> {
    let cutoff = jobs
        .first()
        .map(|j| j.input.cutoff())
        .ok_or_else(|| Error::InvalidBatch("no columns to fit".into()))?;
    let (groups, network_of) = match layout {
        ColumnNetworks::Shared => (vec![(0..jobs.len()).collect::<Vec<_>>()], vec![0; jobs.len()]),
        ColumnNetworks::PerColumn => {
            let mut first: HashMap<Vec<u64>, usize> = HashMap::new();
            let mut groups: Vec<Vec<usize>> = Vec::new();
            let mut network_of = Vec::with_capacity(jobs.len());
            for (i, job) in jobs.iter().enumerate() {
                let g = *first.entry(job_key(job)).or_insert_with(|| {
                    groups.push(Vec::new());
                    groups.len() - 1
                });
                // A shared group trains on its first column only.
                if groups[g].is_empty() {
                    groups[g].push(i);
                }
                network_of.push(g);
            }
            (groups, network_of)
        }
    };

    let networks = groups
        .par_iter()
        .map(|members| {
            let lead = members[0];
            let run = TrainConfig { seed: config.seed.wrapping_add(lead as u64), ..config.clone() };
            let problem = Problem {
                inputs: members.iter().map(|&i| jobs[i].input.clone()).collect(),
                cost: cost(members.iter().map(|&i| jobs[i].target.clone()).collect())?,
                readout_displacement,
            };
            let net = run.init_network(1, depth)?;
            train(net, &problem, &run).map_err(|e| Error::Column { column: lead, source: Box::new(e.into()) })
        })
        .collect::<Result<Vec<_>>>()?;

    let circuit = Circuit::new(1, depth, cutoff, readout_displacement)?;
    let (fidelities, amplitudes) = jobs
        .iter()
        .enumerate()
        .map(|(i, job)| {
            read_out(&circuit, &networks[network_of[i]], job)
                .map_err(|e| Error::Column { column: i, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    Ok(ColumnFits { networks, network_of, fidelities, amplitudes, layout })
}

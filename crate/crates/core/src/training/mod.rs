//! Costs, gradients, optimizers and the training loop.

mod circuit;
mod cost;
mod gradient;
mod optimizer;

pub use circuit::Circuit;
pub use cost::{
    cost_classification, cost_reconstruction, subspace_fidelity, CostKind, CostSpec, Targets,
    DEFAULT_GAMMA, DEFAULT_SUBSPACE_DIM,
};
pub use gradient::finite_diff_gradient;
pub use optimizer::{optimizer_step, OptimizerKind, OptimizerState};

use std::io::Write;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fock::FockState;
use crate::layers::NetworkParams;

pub const DEFAULT_LEARNING_RATE: f64 = 0.001;
pub const DEFAULT_FD_STEP: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub steps: usize,
    pub fd_step: f64,
    /// Seeds parameter initialization through [`TrainConfig::init_network`].
    pub seed: u64,
    pub log_every: usize,
    /// Return the lowest-cost iterate seen instead of the last one.
    pub keep_best: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::Adam,
            learning_rate: DEFAULT_LEARNING_RATE,
            steps: 1000,
            fd_step: DEFAULT_FD_STEP,
            seed: 0,
            log_every: 10,
            keep_best: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        if !(self.fd_step > 0.0 && self.fd_step.is_finite()) {
            return Err(Error::Config(format!("fd_step must be > 0, got {}", self.fd_step)));
        }
        if self.steps == 0 {
            return Err(Error::Config("steps must be >= 1".into()));
        }
        if self.log_every == 0 {
            return Err(Error::Config("log_every must be >= 1".into()));
        }
        Ok(())
    }

    /// Random initial parameters drawn from this config's seed.
    pub fn init_network(&self, modes: usize, depth: usize) -> Result<NetworkParams> {
        NetworkParams::random(modes, depth, &mut ChaCha8Rng::seed_from_u64(self.seed))
    }
}

/// Network inputs, the cost they are scored by, and whether a trainable
/// displacement per mode follows the last layer.
#[derive(Clone, Debug)]
pub struct Problem {
    pub inputs: Vec<FockState>,
    pub cost: CostSpec,
    pub readout_displacement: bool,
}

/// `(step, cost)` records; `step` counts the updates applied before the cost
/// was evaluated.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainTrace {
    pub entries: Vec<(usize, f64)>,
}

impl TrainTrace {
    pub fn last_cost(&self) -> Option<f64> {
        self.entries.last().map(|e| e.1)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "step,cost")?;
        for (step, cost) in &self.entries {
            writeln!(w, "{step},{}", crate::layers::fmt_f64(*cost))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Trained {
    pub net: NetworkParams,
    /// Trailing displacements, present when the problem asked for them.
    pub readout: Option<Vec<C64>>,
    pub trace: TrainTrace,
    /// Cost of the returned parameters.
    pub final_cost: f64,
}

impl Trained {
    pub fn circuit_params(&self) -> Vec<f64> {
        let mut theta = self.net.flatten();
        for a in self.readout.iter().flatten() {
            theta.push(a.re);
            theta.push(a.im);
        }
        theta
    }
}

/// A run that stopped early, with the trace recorded up to the failure.
#[derive(Debug, thiserror::Error)]
#[error("training aborted at step {step}: {source}")]
pub struct Aborted {
    pub step: usize,
    pub trace: TrainTrace,
    #[source]
    pub source: Error,
}

impl From<Aborted> for Error {
    fn from(a: Aborted) -> Self {
        Error::Training { step: a.step, source: Box::new(a.source) }
    }
}

/// Full-batch descent: each step evaluates the cost and its central
/// differences, then applies one optimizer update. Deterministic for a given
/// network, problem and config.
pub fn train(
    net: NetworkParams,
    problem: &Problem,
    config: &TrainConfig,
) -> std::result::Result<Trained, Aborted> {
    let abort = |step, trace: &TrainTrace, source| Aborted { step, trace: trace.clone(), source };
    let mut trace = TrainTrace::default();
    let setup = || -> Result<(Circuit, Vec<f64>, OptimizerState)> {
        config.validate()?;
        let cutoff = problem
            .inputs
            .first()
            .map(FockState::cutoff)
            .ok_or_else(|| Error::InvalidBatch("no training inputs".into()))?;
        let circuit = Circuit::new(net.modes(), net.depth(), cutoff, problem.readout_displacement)?;
        let mut theta = net.flatten();
        theta.resize(circuit.param_count(), 0.0);
        let opt = OptimizerState::new(config.optimizer, config.learning_rate, theta.len())?;
        Ok((circuit, theta, opt))
    };
    let (circuit, mut theta, mut opt) = setup().map_err(|e| abort(0, &trace, e))?;
    let mut best: Option<(f64, Vec<f64>)> = None;

    for step in 0..config.steps {
        let (cost, grad) = circuit
            .cost_and_gradient(&theta, &problem.inputs, &problem.cost, config.fd_step)
            .map_err(|e| abort(step, &trace, e))?;
        if step % config.log_every == 0 {
            trace.entries.push((step, cost));
        }
        if config.keep_best && best.as_ref().is_none_or(|b| cost < b.0) {
            best = Some((cost, theta.clone()));
        }
        optimizer_step(&mut opt, &mut theta, &grad).map_err(|e| abort(step, &trace, e))?;
    }
    let last_cost = circuit
        .cost(&theta, &problem.inputs, &problem.cost)
        .and_then(|c| {
            if c.is_finite() {
                Ok(c)
            } else {
                Err(Error::InvalidParameter(format!("final cost {c} is not finite")))
            }
        })
        .map_err(|e| abort(config.steps, &trace, e))?;
    trace.entries.push((config.steps, last_cost));
    let final_cost = match best {
        Some((cost, earlier)) if cost < last_cost => {
            theta = earlier;
            cost
        }
        _ => last_cost,
    };

    let per_net = net.param_count();
    let out_net = NetworkParams::unflatten(net.modes(), net.depth(), &theta[..per_net])
        .map_err(|e| abort(config.steps, &trace, e))?;
    let readout = problem
        .readout_displacement
        .then(|| theta[per_net..].chunks(2).map(|c| C64::new(c[0], c[1])).collect());
    Ok(Trained { net: out_net, readout, trace, final_cost })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::coherent_state;
    use crate::layers::LayerParams;

    fn displacement_problem() -> (NetworkParams, Problem) {
        let cutoff = 20;
        let target = coherent_state(C64::new(0.5, 0.0), cutoff).unwrap();
        let problem = Problem {
            inputs: vec![FockState::vacuum(1, cutoff).unwrap()],
            cost: CostSpec::classification(vec![target]).unwrap(),
            readout_displacement: false,
        };
        (NetworkParams::new(vec![LayerParams::zeros(1)]).unwrap(), problem)
    }

    #[test]
    fn displacement_fit_converges() {
        let (net, problem) = displacement_problem();
        let config = TrainConfig { learning_rate: 0.01, steps: 200, log_every: 20, ..Default::default() };
        let out = train(net, &problem, &config).unwrap();
        assert!(out.final_cost < 1e-4, "final cost {}", out.final_cost);
        assert_eq!(out.trace.entries.first().unwrap().0, 0);
        assert_eq!(out.trace.entries.last().unwrap().0, 200);

        // Parameter-sweep oracle: the best real displacement on a grid lands
        // near 0.5 and the trained cost is no worse than the grid minimum.
        let circuit = Circuit::new(1, 1, 20, false).unwrap();
        // Single-mode layout: rotation, squeeze, rotation, then displacement.
        let layout_disp = 3;
        let (best_x, best_cost) = (0..=200)
            .map(|i| {
                let x = i as f64 * 0.005;
                let mut theta = vec![0.0; circuit.param_count()];
                theta[layout_disp] = x;
                (x, circuit.cost(&theta, &problem.inputs, &problem.cost).unwrap())
            })
            .fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        assert!((best_x - 0.5).abs() < 1e-9 && best_cost < 1e-20);
    }

    #[test]
    fn zero_gradient_step_leaves_parameters() {
        // The cost is quadratic in (F - 1) and F = 1 at the zero network,
        // so every gradient entry vanishes there.
        let cutoff = 6;
        let problem = Problem {
            inputs: vec![FockState::vacuum(1, cutoff).unwrap()],
            cost: CostSpec::classification(vec![FockState::vacuum(1, cutoff).unwrap()]).unwrap(),
            readout_displacement: false,
        };
        let net = NetworkParams::new(vec![LayerParams::zeros(1)]).unwrap();
        let config = TrainConfig { steps: 1, ..Default::default() };
        let out = train(net.clone(), &problem, &config).unwrap();
        assert_eq!(out.net, net);
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let (_, problem) = displacement_problem();
        let config = TrainConfig { steps: 30, seed: 11, log_every: 1, ..Default::default() };
        let run = || train(config.init_network(1, 2).unwrap(), &problem, &config).unwrap();
        let (a, b) = (run(), run());
        let bits = |t: &Trained| t.trace.entries.iter().map(|e| e.1.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a.net, b.net);
    }

    #[test]
    fn keep_best_returns_lowest_iterate() {
        // A learning rate this large overshoots the optimum repeatedly.
        let (net, problem) = displacement_problem();
        let config =
            TrainConfig { learning_rate: 0.8, steps: 40, log_every: 1, keep_best: true, ..Default::default() };
        let out = train(net, &problem, &config).unwrap();
        let lowest = out.trace.entries.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
        assert_eq!(out.final_cost, lowest);
        assert!(out.final_cost < out.trace.last_cost().unwrap());
        let circuit = Circuit::new(1, 1, 20, false).unwrap();
        let again = circuit.cost(&out.circuit_params(), &problem.inputs, &problem.cost).unwrap();
        assert_eq!(again, out.final_cost);
    }

    #[test]
    fn readout_displacement_is_trained() {
        let (net, problem) = displacement_problem();
        let problem = Problem { readout_displacement: true, ..problem };
        let config = TrainConfig { learning_rate: 0.01, steps: 5, ..Default::default() };
        let out = train(net, &problem, &config).unwrap();
        let readout = out.readout.as_ref().unwrap();
        assert_eq!(readout.len(), 1);
        assert!(readout[0].re > 0.0);
        assert_eq!(out.circuit_params().len(), LayerParams::param_count(1) + 2);
    }

    #[test]
    fn aborts_with_partial_trace() {
        // An input with no mass in a one-level subspace has a degenerate
        // projection before the first update.
        let cutoff = 8;
        let target = vec![vec![C64::new(1.0, 0.0)]];
        let problem = Problem {
            inputs: vec![FockState::number(&[5], cutoff).unwrap()],
            cost: CostSpec::reconstruction(target, 0.0, 1).unwrap(),
            readout_displacement: false,
        };
        let net = NetworkParams::new(vec![LayerParams::zeros(1)]).unwrap();
        let err = train(net, &problem, &TrainConfig::default()).unwrap_err();
        assert_eq!(err.step, 0);
        assert!(matches!(err.source, Error::DegenerateProjection { .. }));
        assert!(matches!(Error::from(err), Error::Training { step: 0, .. }));
    }

    #[test]
    fn config_validation() {
        let bad = [
            TrainConfig { learning_rate: 0.0, ..Default::default() },
            TrainConfig { fd_step: -1.0, ..Default::default() },
            TrainConfig { steps: 0, ..Default::default() },
            TrainConfig { log_every: 0, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().unwrap_err().is_config());
        }
    }

    #[test]
    fn trace_csv() {
        let trace = TrainTrace { entries: vec![(0, 1.5), (10, 0.25)] };
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "step,cost");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("10,2.5"));
    }
}

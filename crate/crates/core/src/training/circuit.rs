//! A network compiled against one cutoff, with a cost-and-gradient routine
//! that exploits the linear structure of the costs.
//!
//! Every cost depends on a network output `psi` only through its norm and a
//! few overlaps `<v_j|psi>`. Writing the circuit as `A_{G-1} ... A_0`, the
//! overlap after replacing gate `g` by `A'` is `<b_j^g| A' s_g>`, where
//! `s_g` is the state entering gate `g` and `b_j^g` is `v_j` pulled back
//! through the gates after `g`. One forward and one backward sweep therefore
//! give every central difference at the price of two gate applications per
//! parameter instead of two full forward passes.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::cost::{CostKind, CostSpec, Targets};
use crate::error::{Error, Result};
use crate::fock::{Action, FockState, Kernels, DEGENERATE_NORM};
use crate::layers::{NetworkParams, ParamGate};

#[derive(Debug, Clone)]
pub struct Circuit {
    modes: usize,
    depth: usize,
    kernels: Arc<Kernels>,
    gates: Vec<ParamGate>,
    params: usize,
    readout_displacement: bool,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

impl Circuit {
    /// `readout_displacement` appends one trainable displacement per mode
    /// after the last layer; its parameters follow the network's.
    pub fn new(modes: usize, depth: usize, cutoff: usize, readout_displacement: bool) -> Result<Self> {
        if modes == 0 || depth == 0 {
            return Err(Error::InvalidNetwork(format!("{modes} modes, depth {depth}")));
        }
        let mut gates = NetworkParams::layout(modes, depth);
        let mut params = depth * crate::layers::LayerParams::param_count(modes);
        if readout_displacement {
            for mode in 0..modes {
                gates.push(ParamGate::Displacement { mode, re: params, im: params + 1 });
                params += 2;
            }
        }
        Ok(Self { modes, depth, kernels: Kernels::new(cutoff)?, gates, params, readout_displacement })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn cutoff(&self) -> usize {
        self.kernels.cutoff()
    }

    pub fn param_count(&self) -> usize {
        self.params
    }

    pub fn has_readout_displacement(&self) -> bool {
        self.readout_displacement
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.params {
            return Err(Error::IncompatibleParameters(format!(
                "circuit has {} parameters, got {}",
                self.params,
                theta.len()
            )));
        }
        Ok(())
    }

    fn check_input(&self, input: &FockState) -> Result<()> {
        if input.modes() != self.modes || input.cutoff() != self.cutoff() {
            return Err(Error::IncompatibleStates(format!(
                "input has {} modes at cutoff {}, circuit expects {} at {}",
                input.modes(),
                input.cutoff(),
                self.modes,
                self.cutoff()
            )));
        }
        Ok(())
    }

    fn actions(&self, theta: &[f64]) -> Result<Vec<Action>> {
        self.gates.iter().map(|g| self.kernels.action(&g.gate(theta))).collect()
    }

    pub fn forward(&self, theta: &[f64], input: &FockState) -> Result<FockState> {
        self.check_theta(theta)?;
        self.check_input(input)?;
        let actions = self.actions(theta)?;
        let mut amps = input.amplitudes().to_vec();
        for a in &actions {
            a.apply_in_place(&mut amps, self.modes, false);
        }
        FockState::from_amplitudes(self.modes, self.cutoff(), amps)
    }

    pub fn forward_batch(&self, theta: &[f64], inputs: &[FockState]) -> Result<Vec<FockState>> {
        inputs.par_iter().map(|s| self.forward(theta, s)).collect()
    }

    /// Cost by full forward passes.
    pub fn cost(&self, theta: &[f64], inputs: &[FockState], spec: &CostSpec) -> Result<f64> {
        spec.evaluate(&self.forward_batch(theta, inputs)?)
    }

    /// Cost at `theta` and its central-difference gradient with step `h`.
    ///
    /// Agrees with [`finite_diff_gradient`](super::finite_diff_gradient)
    /// applied to [`cost`](Self::cost) up to rounding.
    pub fn cost_and_gradient(
        &self,
        theta: &[f64],
        inputs: &[FockState],
        spec: &CostSpec,
        h: f64,
    ) -> Result<(f64, Vec<f64>)> {
        self.check_theta(theta)?;
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!("finite-difference step must be > 0, got {h}")));
        }
        if inputs.len() != spec.targets.len() {
            return Err(Error::InvalidBatch(format!(
                "{} inputs for {} targets",
                inputs.len(),
                spec.targets.len()
            )));
        }
        for s in inputs {
            self.check_input(s)?;
        }
        let readout = Readout::new(spec, self.modes, self.cutoff())?;
        let actions = self.actions(theta)?;
        // Perturbed gates, shared by every sample: for each gate, one
        // (parameter, A(theta + h e_k), A(theta - h e_k)) triple per parameter.
        let perturbed = self
            .gates
            .iter()
            .map(|g| {
                g.params()
                    .into_iter()
                    .map(|k| {
                        let mut probe = theta.to_vec();
                        probe[k] = theta[k] + h;
                        let plus = self.kernels.action(&g.gate(&probe))?;
                        probe[k] = theta[k] - h;
                        let minus = self.kernels.action(&g.gate(&probe))?;
                        Ok((k, plus, minus))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;

        let per_sample = inputs
            .par_iter()
            .enumerate()
            .map(|(i, input)| self.sample_differences(i, input, &readout, &actions, &perturbed))
            .collect::<Result<Vec<_>>>()?;

        let mut cost = 0.0;
        let mut diff = vec![0.0; self.params];
        for (c, d) in per_sample {
            cost += c;
            for (acc, v) in diff.iter_mut().zip(d) {
                *acc += v;
            }
        }
        let grad = diff
            .into_iter()
            .enumerate()
            .map(|(k, d)| {
                let g = d / (2.0 * h);
                if g.is_finite() {
                    Ok(g)
                } else {
                    Err(Error::NonFiniteCost { coordinate: k })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if !cost.is_finite() {
            return Err(Error::InvalidParameter(format!("cost {cost} at the base point is not finite")));
        }
        Ok((cost, grad))
    }

    /// Cost of one sample and its `cost(+h) - cost(-h)` per parameter.
    fn sample_differences(
        &self,
        sample: usize,
        input: &FockState,
        readout: &Readout,
        actions: &[Action],
        perturbed: &[Vec<(usize, Action, Action)>],
    ) -> Result<(f64, Vec<f64>)> {
        let modes = self.modes;
        let mut states = Vec::with_capacity(actions.len());
        let mut amps = input.amplitudes().to_vec();
        for a in actions {
            states.push(amps.clone());
            a.apply_in_place(&mut amps, modes, false);
        }
        let mut pulled: Vec<Vec<C64>> = readout.vectors(sample).to_vec();
        let overlaps: Vec<C64> = pulled.iter().map(|v| dot(v, &amps)).collect();
        let cost = readout.cost(&overlaps, norm_sqr(&amps))?;

        let mut diff = vec![0.0; self.params];
        let mut probe = vec![C64::new(0.0, 0.0); amps.len()];
        let mut overlaps = vec![C64::new(0.0, 0.0); pulled.len()];
        for g in (0..actions.len()).rev() {
            for (k, plus, minus) in &perturbed[g] {
                let mut side = |a: &Action| -> Result<f64> {
                    probe.copy_from_slice(&states[g]);
                    a.apply_in_place(&mut probe, modes, false);
                    for (o, b) in overlaps.iter_mut().zip(&pulled) {
                        *o = dot(b, &probe);
                    }
                    readout.cost(&overlaps, norm_sqr(&probe))
                };
                diff[*k] = side(plus)? - side(minus)?;
            }
            for b in pulled.iter_mut() {
                actions[g].apply_in_place(b, modes, true);
            }
        }
        Ok((cost, diff))
    }
}

/// Overlap vectors and the per-sample cost expressed through them.
enum Readout {
    /// One overlap with the target state.
    Fidelity { vectors: Vec<Vec<Vec<C64>>> },
    /// Overlap with the padded target followed by one overlap per level at
    /// or above the subspace dimension.
    Subspace { vectors: Vec<Vec<Vec<C64>>>, gamma: f64 },
}

impl Readout {
    fn new(spec: &CostSpec, modes: usize, cutoff: usize) -> Result<Self> {
        match (&spec.targets, spec.kind) {
            (Targets::States(ts), CostKind::Classification) => {
                if let Some(t) = ts.iter().find(|t| t.modes() != modes || t.cutoff() != cutoff) {
                    return Err(Error::IncompatibleStates(format!(
                        "target has {} modes at cutoff {}",
                        t.modes(),
                        t.cutoff()
                    )));
                }
                Ok(Readout::Fidelity { vectors: ts.iter().map(|t| vec![t.amplitudes().to_vec()]).collect() })
            }
            (Targets::Amplitudes(ts), _) => {
                let dim = spec.subspace_dim;
                if modes != 1 || dim > cutoff {
                    return Err(Error::IncompatibleParameters(format!(
                        "subspace cost needs one mode and dimension {dim} <= cutoff {cutoff}"
                    )));
                }
                let vectors = ts
                    .iter()
                    .map(|t| {
                        let mut padded = t.clone();
                        padded.resize(cutoff, C64::new(0.0, 0.0));
                        std::iter::once(padded)
                            .chain((dim..cutoff).map(|n| {
                                let mut e = vec![C64::new(0.0, 0.0); cutoff];
                                e[n] = C64::new(1.0, 0.0);
                                e
                            }))
                            .collect()
                    })
                    .collect();
                Ok(Readout::Subspace { vectors, gamma: spec.gamma })
            }
            _ => Err(Error::InvalidParameter("cost kind does not match its targets".into())),
        }
    }

    fn vectors(&self, sample: usize) -> &[Vec<C64>] {
        match self {
            Readout::Fidelity { vectors } | Readout::Subspace { vectors, .. } => &vectors[sample],
        }
    }

    fn cost(&self, overlaps: &[C64], norm2: f64) -> Result<f64> {
        match self {
            Readout::Fidelity { .. } => Ok((overlaps[0].norm_sqr() - 1.0).powi(2)),
            Readout::Subspace { gamma, .. } => {
                let leak: f64 = overlaps[1..].iter().map(|z| z.norm_sqr()).sum();
                let inside = norm2 - leak;
                if inside <= DEGENERATE_NORM * DEGENERATE_NORM {
                    return Err(Error::DegenerateProjection { norm: inside.max(0.0).sqrt() });
                }
                let fid = overlaps[0].norm_sqr() / inside;
                Ok((fid - 1.0).powi(2) + gamma * (1.0 - inside).powi(2))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::coherent_state;
    use crate::layers::network_forward;
    use crate::training::finite_diff_gradient;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_theta(circuit: &Circuit, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = NetworkParams::random(circuit.modes(), circuit.depth(), &mut rng).unwrap();
        let mut theta = net.flatten();
        while theta.len() < circuit.param_count() {
            theta.push(rng.random_range(-0.2..0.2));
        }
        theta
    }

    fn assert_matches_generic(circuit: &Circuit, theta: &[f64], inputs: &[FockState], spec: &CostSpec) {
        let h = 1e-4;
        let (cost, grad) = circuit.cost_and_gradient(theta, inputs, spec, h).unwrap();
        let direct = circuit.cost(theta, inputs, spec).unwrap();
        assert!((cost - direct).abs() < 1e-12, "{cost} vs {direct}");
        let generic = finite_diff_gradient(|t| circuit.cost(t, inputs, spec), theta, h).unwrap();
        for (k, (a, b)) in grad.iter().zip(&generic).enumerate() {
            assert!((a - b).abs() < 1e-8, "coordinate {k}: {a} vs {b}");
        }
    }

    #[test]
    fn forward_matches_network_forward() {
        let circuit = Circuit::new(2, 2, 6, false).unwrap();
        let theta = random_theta(&circuit, 3);
        let net = NetworkParams::unflatten(2, 2, &theta).unwrap();
        let input = FockState::number(&[1, 0], 6).unwrap();
        assert_eq!(circuit.forward(&theta, &input).unwrap(), network_forward(&input, &net).unwrap());
    }

    #[test]
    fn classification_gradient_matches_generic() {
        let cutoff = 6;
        let circuit = Circuit::new(2, 1, cutoff, true).unwrap();
        let theta = random_theta(&circuit, 7);
        let coh = |a: f64| coherent_state(C64::new(a, 0.0), cutoff).unwrap();
        let vac = FockState::vacuum(1, cutoff).unwrap();
        let inputs = vec![
            FockState::product(&[coh(0.3), coh(-0.2)]).unwrap(),
            FockState::product(&[coh(-0.1), coh(0.4)]).unwrap(),
        ];
        let targets = vec![
            FockState::product(&[coh(0.5), vac.clone()]).unwrap(),
            FockState::product(&[vac, coh(0.5)]).unwrap(),
        ];
        let spec = CostSpec::classification(targets).unwrap();
        assert_matches_generic(&circuit, &theta, &inputs, &spec);
    }

    #[test]
    fn subspace_gradient_matches_generic() {
        let cutoff = 12;
        let dim = 8;
        let circuit = Circuit::new(1, 3, cutoff, false).unwrap();
        let theta = random_theta(&circuit, 9);
        let unit = |v: Vec<C64>| {
            let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v.into_iter().map(|z| z / n).collect::<Vec<_>>()
        };
        let targets = vec![
            unit((0..dim).map(|n| C64::new(1.0 + n as f64, 0.5)).collect()),
            unit((0..dim).map(|n| C64::new((n as f64).cos(), (n as f64).sin())).collect()),
        ];
        let inputs = vec![
            coherent_state(C64::new(0.4, 0.1), cutoff).unwrap(),
            coherent_state(C64::new(-0.3, 0.2), cutoff).unwrap(),
        ];
        let spec = CostSpec::reconstruction(targets.clone(), 10.0, dim).unwrap();
        assert_matches_generic(&circuit, &theta, &inputs, &spec);
        let noise = CostSpec::denoise(CostKind::DenoiseNoise, targets, dim).unwrap();
        assert_matches_generic(&circuit, &theta, &inputs, &noise);
    }

    #[test]
    fn rejects_mismatches() {
        let circuit = Circuit::new(1, 1, 6, false).unwrap();
        let theta = vec![0.0; circuit.param_count()];
        let input = FockState::vacuum(1, 6).unwrap();
        let spec = CostSpec::classification(vec![input.clone()]).unwrap();
        assert!(circuit.cost_and_gradient(&theta[1..], std::slice::from_ref(&input), &spec, 1e-4).is_err());
        assert!(matches!(
            circuit.cost_and_gradient(&theta, &[input.clone(), input.clone()], &spec, 1e-4),
            Err(Error::InvalidBatch(_))
        ));
        let wide = FockState::vacuum(1, 7).unwrap();
        assert!(circuit.cost_and_gradient(&theta, &[wide], &spec, 1e-4).is_err());
        assert!(circuit.cost_and_gradient(&theta, &[input], &spec, 0.0).is_err());
    }
}

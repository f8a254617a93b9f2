use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{project_normalize, subspace_weight, FockState};

/// Penalty weight used when a config does not set one.
pub const DEFAULT_GAMMA: f64 = 10.0;
/// Learning subspace of the image experiments: one level per pixel row.
pub const DEFAULT_SUBSPACE_DIM: usize = 28;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostKind {
    /// `sum_i (|<psi_i|phi_i>|^2 - 1)^2` against full target states.
    Classification,
    /// Subspace fidelity on renormalized projections plus the leakage penalty.
    Reconstruction,
    /// Subspace fidelity for the noisy-image learner.
    DenoiseImage,
    /// Subspace fidelity for the noise learner.
    DenoiseNoise,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Targets {
    States(Vec<FockState>),
    /// Unit amplitude vectors of length `subspace_dim`.
    Amplitudes(Vec<Vec<C64>>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::States(s) => s.len(),
            Targets::Amplitudes(a) => a.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CostSpec {
    pub kind: CostKind,
    pub targets: Targets,
    pub gamma: f64,
    pub subspace_dim: usize,
}

fn unit_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

impl CostSpec {
    pub fn classification(targets: Vec<FockState>) -> Result<Self> {
        Self::new(CostKind::Classification, Targets::States(targets), 0.0, DEFAULT_SUBSPACE_DIM)
    }

    pub fn reconstruction(targets: Vec<Vec<C64>>, gamma: f64, subspace_dim: usize) -> Result<Self> {
        Self::new(CostKind::Reconstruction, Targets::Amplitudes(targets), gamma, subspace_dim)
    }

    /// `kind` must be [`CostKind::DenoiseImage`] or [`CostKind::DenoiseNoise`];
    /// those costs carry no leakage penalty.
    pub fn denoise(kind: CostKind, targets: Vec<Vec<C64>>, subspace_dim: usize) -> Result<Self> {
        if !matches!(kind, CostKind::DenoiseImage | CostKind::DenoiseNoise) {
            return Err(Error::InvalidParameter(format!("{kind:?} is not a denoising cost")));
        }
        Self::new(kind, Targets::Amplitudes(targets), 0.0, subspace_dim)
    }

    pub fn new(kind: CostKind, targets: Targets, gamma: f64, subspace_dim: usize) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be finite and >= 0, got {gamma}")));
        }
        match (&kind, &targets) {
            (CostKind::Classification, Targets::States(ts)) => {
                if let Some(t) = ts.iter().find(|t| (t.norm() - 1.0).abs() > 1e-9) {
                    return Err(Error::InvalidParameter(format!("target norm {} is not 1", t.norm())));
                }
            }
            (CostKind::Classification, _) => {
                return Err(Error::InvalidParameter("classification targets must be states".into()))
            }
            (_, Targets::Amplitudes(ts)) => {
                for t in ts {
                    if t.len() != subspace_dim {
                        return Err(Error::InvalidParameter(format!(
                            "target length {} != subspace dimension {subspace_dim}",
                            t.len()
                        )));
                    }
                    if (unit_norm(t) - 1.0).abs() > 1e-9 {
                        return Err(Error::InvalidParameter(format!("target norm {} is not 1", unit_norm(t))));
                    }
                }
            }
            (_, Targets::States(_)) => {
                return Err(Error::InvalidParameter("subspace costs need amplitude targets".into()))
            }
        }
        Ok(Self { kind, targets, gamma, subspace_dim })
    }

    /// Evaluates the cost on a batch of network outputs.
    pub fn evaluate(&self, outputs: &[FockState]) -> Result<f64> {
        match &self.targets {
            Targets::States(ts) => cost_classification(outputs, ts),
            Targets::Amplitudes(_) => cost_reconstruction(outputs, self),
        }
    }
}

fn check_batch(outputs: usize, targets: usize) -> Result<()> {
    if outputs != targets {
        return Err(Error::InvalidBatch(format!("{outputs} outputs for {targets} targets")));
    }
    Ok(())
}

/// `sum_i (|<psi_i|phi_i>|^2 - 1)^2`
pub fn cost_classification(outputs: &[FockState], targets: &[FockState]) -> Result<f64> {
    check_batch(outputs.len(), targets.len())?;
    outputs.iter().zip(targets).try_fold(0.0, |acc, (o, t)| {
        let f = o.inner(t)?.norm_sqr();
        Ok(acc + (f - 1.0).powi(2))
    })
}

/// Fidelity of one projected-and-renormalized output against an amplitude target.
pub fn subspace_fidelity(output: &FockState, target: &[C64]) -> Result<f64> {
    let proj = project_normalize(output, target.len())?;
    Ok(target
        .iter()
        .zip(&proj)
        .map(|(t, p)| t.conj() * p)
        .sum::<C64>()
        .norm_sqr())
}

/// `sum_i (F_i - 1)^2 + gamma sum_i (1 - w_i)^2`, where `F_i` is the
/// fidelity of the renormalized projection onto the first `subspace_dim`
/// levels and `w_i` the probability mass inside them.
pub fn cost_reconstruction(outputs: &[FockState], spec: &CostSpec) -> Result<f64> {
    let Targets::Amplitudes(targets) = &spec.targets else {
        return Err(Error::InvalidParameter("subspace cost needs amplitude targets".into()));
    };
    check_batch(outputs.len(), targets.len())?;
    let mut fid = 0.0;
    let mut penalty = 0.0;
    for (o, t) in outputs.iter().zip(targets) {
        fid += (subspace_fidelity(o, t)? - 1.0).powi(2);
        penalty += (1.0 - subspace_weight(o, spec.subspace_dim)).powi(2);
    }
    Ok(fid + spec.gamma * penalty)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(amps: Vec<C64>) -> FockState {
        FockState::from_amplitudes(1, amps.len(), amps).unwrap()
    }

    #[test]
    fn classification_values() {
        let a: Vec<FockState> = (0..10).map(|n| FockState::number(&[n], 12).unwrap()).collect();
        let b: Vec<FockState> = (0..10).map(|n| FockState::number(&[n + 1], 12).unwrap()).collect();
        assert_eq!(cost_classification(&a, &a).unwrap(), 0.0);
        assert_eq!(cost_classification(&a, &b).unwrap(), 10.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let half = single(vec![C64::new(h, 0.0), C64::new(h, 0.0), C64::new(0.0, 0.0)]);
        let zero = FockState::number(&[0], 3).unwrap();
        assert!((cost_classification(&[half], &[zero]).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(cost_classification(&a, &b[..3]), Err(Error::InvalidBatch(_))));
    }

    #[test]
    fn reconstruction_values() {
        let dim = 4;
        let cutoff = 6;
        let t = vec![C64::new(0.5, 0.0); dim];
        let mut padded = t.clone();
        padded.resize(cutoff, C64::new(0.0, 0.0));
        let exact = single(padded.clone());
        let spec = CostSpec::reconstruction(vec![t.clone()], 10.0, dim).unwrap();
        assert!(cost_reconstruction(&[exact], &spec).unwrap() < 1e-15);

        // Half the mass outside the subspace: only the penalty remains.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut leaky: Vec<C64> = padded.iter().map(|z| z * h).collect();
        leaky[cutoff - 1] = C64::new(h, 0.0);
        let leaky = single(leaky);
        assert!((cost_reconstruction(std::slice::from_ref(&leaky), &spec).unwrap() - 2.5).abs() < 1e-12);

        // gamma = 0 is the classification form on projected states.
        let spec0 = CostSpec::reconstruction(vec![t.clone()], 0.0, dim).unwrap();
        let proj = single(project_normalize(&leaky, dim).unwrap());
        let target = single(t);
        assert!(
            (cost_reconstruction(&[leaky], &spec0).unwrap()
                - cost_classification(&[proj], &[target]).unwrap())
            .abs()
                < 1e-15
        );
    }

    #[test]
    fn degenerate_projection_propagates() {
        let spec = CostSpec::reconstruction(vec![vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]], 1.0, 2).unwrap();
        let out = FockState::number(&[3], 4).unwrap();
        assert!(matches!(
            cost_reconstruction(&[out], &spec),
            Err(Error::DegenerateProjection { .. })
        ));
    }

    #[test]
    fn spec_validation() {
        assert!(CostSpec::reconstruction(vec![vec![C64::new(2.0, 0.0)]], 1.0, 1).is_err());
        assert!(CostSpec::reconstruction(vec![vec![C64::new(1.0, 0.0)]], -1.0, 1).is_err());
        assert!(CostSpec::reconstruction(vec![vec![C64::new(1.0, 0.0)]], 1.0, 2).is_err());
        assert!(CostSpec::denoise(CostKind::Reconstruction, vec![], 2).is_err());
    }
}

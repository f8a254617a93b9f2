use crate::error::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const RMSPROP_DECAY: f64 = 0.9;
pub const EPSILON: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    Adam,
    RmsProp,
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adam" => Ok(Self::Adam),
            "rmsprop" => Ok(Self::RmsProp),
            other => Err(Error::Config(format!("unknown optimizer `{other}`"))),
        }
    }
}

/// Moment estimates carried between updates.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    /// Updates applied so far.
    pub t: u64,
    /// First moment (Adam only).
    pub m: Vec<f64>,
    /// Second moment.
    pub v: Vec<f64>,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, learning_rate: f64, params: usize) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("learning rate must be > 0, got {learning_rate}")));
        }
        Ok(Self { kind, learning_rate, t: 0, m: vec![0.0; params], v: vec![0.0; params] })
    }
}

/// One descent update of `theta` along `grad`.
pub fn optimizer_step(state: &mut OptimizerState, theta: &mut [f64], grad: &[f64]) -> Result<()> {
    if theta.len() != grad.len() || theta.len() != state.v.len() {
        return Err(Error::InvalidUpdate(format!(
            "{} parameters, {} gradient entries, state sized for {}",
            theta.len(),
            grad.len(),
            state.v.len()
        )));
    }
    state.t += 1;
    let lr = state.learning_rate;
    match state.kind {
        OptimizerKind::Adam => {
            let t = state.t as i32;
            let c1 = 1.0 - ADAM_BETA1.powi(t);
            let c2 = 1.0 - ADAM_BETA2.powi(t);
            for (((x, g), m), v) in theta.iter_mut().zip(grad).zip(&mut state.m).zip(&mut state.v) {
                *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                *x -= lr * (*m / c1) / ((*v / c2).sqrt() + EPSILON);
            }
        }
        OptimizerKind::RmsProp => {
            for ((x, g), v) in theta.iter_mut().zip(grad).zip(&mut state.v) {
                *v = RMSPROP_DECAY * *v + (1.0 - RMSPROP_DECAY) * g * g;
                *x -= lr * g / (*v + EPSILON).sqrt();
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_gradient_is_fixed_point() {
        for kind in [OptimizerKind::Adam, OptimizerKind::RmsProp] {
            let mut s = OptimizerState::new(kind, 0.001, 3).unwrap();
            let mut theta = vec![0.5, -1.0, 2.0];
            optimizer_step(&mut s, &mut theta, &[0.0; 3]).unwrap();
            assert_eq!(theta, vec![0.5, -1.0, 2.0]);
        }
    }

    #[test]
    fn first_steps() {
        let mut s = OptimizerState::new(OptimizerKind::Adam, 0.001, 1).unwrap();
        let mut theta = [0.0];
        optimizer_step(&mut s, &mut theta, &[2.0]).unwrap();
        assert!((theta[0] + 0.001).abs() < 1e-11);

        let mut s = OptimizerState::new(OptimizerKind::RmsProp, 0.001, 1).unwrap();
        let mut theta = [0.0];
        optimizer_step(&mut s, &mut theta, &[1.0]).unwrap();
        let expect = -0.001 / (0.1f64 + 1e-8).sqrt();
        assert!((theta[0] - expect).abs() < 1e-15);
        assert!((theta[0] + 0.003162).abs() < 1e-6);
    }

    #[test]
    fn shape_and_rate_errors() {
        let mut s = OptimizerState::new(OptimizerKind::Adam, 0.1, 2).unwrap();
        assert!(matches!(optimizer_step(&mut s, &mut [0.0; 2], &[0.0; 3]), Err(Error::InvalidUpdate(_))));
        assert!(OptimizerState::new(OptimizerKind::Adam, 0.0, 2).is_err());
        assert!("sgd".parse::<OptimizerKind>().is_err());
        assert_eq!("RMSProp".parse::<OptimizerKind>().unwrap(), OptimizerKind::RmsProp);
    }

    proptest! {
        #[test]
        fn adam_first_update_bounded(g in prop::collection::vec(-1e6f64..1e6, 1..8), lr in 1e-5f64..1.0) {
            let mut s = OptimizerState::new(OptimizerKind::Adam, lr, g.len()).unwrap();
            let mut theta = vec![0.0; g.len()];
            optimizer_step(&mut s, &mut theta, &g).unwrap();
            for x in theta {
                prop_assert!(x.abs() <= lr * (1.0 + 1e-12));
            }
        }
    }
}

//! Layers `L = Kerr . D . U2 . S . U1` and stacked networks.

mod checkpoint;
mod params;

pub(crate) use checkpoint::fmt_f64;
pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use params::{
    mesh_positions, InterferometerParams, LayerParams, NetworkParams, ParamGate, INIT_ACTIVE_STD,
};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fock::{FockState, Gate, Kernels};

fn apply_all(state: &FockState, gates: &[Gate], kernels: &Arc<Kernels>) -> Result<FockState> {
    let modes = state.modes();
    let mut amps = state.amplitudes().to_vec();
    for g in gates {
        kernels.action(g)?.apply_in_place(&mut amps, modes, false);
    }
    FockState::from_amplitudes(modes, state.cutoff(), amps)
}

fn check_modes(state: &FockState, modes: usize) -> Result<()> {
    if state.modes() != modes {
        return Err(Error::IncompatibleParameters(format!(
            "state has {} modes, parameters expect {modes}",
            state.modes()
        )));
    }
    Ok(())
}

/// Applies one layer: interferometer `U1`, squeezers, `U2`, displacements,
/// then Kerr gates.
pub fn layer_forward(state: &FockState, params: &LayerParams) -> Result<FockState> {
    check_modes(state, params.modes())?;
    let kernels = Kernels::new(state.cutoff())?;
    apply_all(state, &params.gates(), &kernels)
}

pub fn network_forward(state: &FockState, net: &NetworkParams) -> Result<FockState> {
    check_modes(state, net.modes())?;
    let kernels = Kernels::new(state.cutoff())?;
    let gates: Vec<Gate> = net.layers().iter().flat_map(|l| l.gates()).collect();
    apply_all(state, &gates, &kernels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{apply_gate, coherent_state, quadrature_expectation, Quadrature};
    use num_complex::Complex64 as C64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn max_diff(a: &FockState, b: &FockState) -> f64 {
        a.amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn zero_layer_is_identity() {
        let s = crate::fock::apply_gate(
            &FockState::vacuum(2, 6).unwrap(),
            &Gate::displacement(1, C64::new(0.3, 0.2)),
        )
        .unwrap();
        let out = layer_forward(&s, &LayerParams::zeros(2)).unwrap();
        assert!(max_diff(&out, &s) < 1e-14);
    }

    #[test]
    fn displacement_only_gives_coherent_state() {
        let mut p = LayerParams::zeros(1);
        p.disp_alpha[0] = C64::new(0.5, 0.0);
        let out = layer_forward(&FockState::vacuum(1, 30).unwrap(), &p).unwrap();
        assert!((quadrature_expectation(&out, 0, Quadrature::X).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn half_turn_twice_is_identity() {
        let mut p = LayerParams::zeros(1);
        p.u1.phases[0] = PI;
        let s = coherent_state(C64::new(0.4, -0.3), 12).unwrap();
        let out = layer_forward(&layer_forward(&s, &p).unwrap(), &p).unwrap();
        assert!(max_diff(&out, &s) < 1e-12);
    }

    #[test]
    fn single_mode_interferometer_is_rotation() {
        let mut p = LayerParams::zeros(1);
        p.u1.phases[0] = 1.7;
        let s = coherent_state(C64::new(0.4, 0.1), 15).unwrap();
        let a = layer_forward(&s, &p).unwrap();
        let b = apply_gate(&s, &Gate::rotation(0, 1.7)).unwrap();
        assert!(max_diff(&a, &b) < 1e-12);
    }

    #[test]
    fn displacement_layers_compose() {
        let mut p1 = LayerParams::zeros(1);
        p1.disp_alpha[0] = C64::new(0.3, 0.0);
        let mut p2 = LayerParams::zeros(1);
        p2.disp_alpha[0] = C64::new(0.2, 0.0);
        let net = NetworkParams::new(vec![p1.clone(), p2]).unwrap();
        let v = FockState::vacuum(1, 30).unwrap();
        let out = network_forward(&v, &net).unwrap();
        let expect = coherent_state(C64::new(0.5, 0.0), 30).unwrap();
        assert!(max_diff(&out, &expect) < 1e-9);

        let one = NetworkParams::new(vec![p1.clone()]).unwrap();
        assert_eq!(network_forward(&v, &one).unwrap(), layer_forward(&v, &p1).unwrap());
    }

    #[test]
    fn norm_preserved_through_depth() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = NetworkParams::random(2, 4, &mut rng).unwrap();
        let out = network_forward(&FockState::vacuum(2, 8).unwrap(), &net).unwrap();
        assert!((out.norm() - 1.0).abs() < 4e-10);
    }

    #[test]
    fn mode_mismatch() {
        let v = FockState::vacuum(1, 5).unwrap();
        assert!(matches!(
            layer_forward(&v, &LayerParams::zeros(2)),
            Err(Error::IncompatibleParameters(_))
        ));
    }
}

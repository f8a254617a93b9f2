use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::error::{Error, Result};
use crate::fock::Gate;

/// Standard deviation of the initial squeeze, displacement and Kerr values.
pub const INIT_ACTIVE_STD: f64 = 0.05;

/// Beamsplitter positions of the rectangular mesh, in execution order.
///
/// Column `c` couples `(k, k+1)` for every `k` of parity `c % 2`; `modes`
/// columns give `modes (modes - 1) / 2` beamsplitters.
pub fn mesh_positions(modes: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(modes * modes.saturating_sub(1) / 2);
    for col in 0..modes {
        let mut k = col % 2;
        while k + 1 < modes {
            out.push((k, k + 1));
            k += 2;
        }
    }
    out
}

/// A passive interferometer: the rectangular beamsplitter mesh followed by
/// one phase rotation per mode.
#[derive(Clone, Debug, PartialEq)]
pub struct InterferometerParams {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub phases: Vec<f64>,
}

impl InterferometerParams {
    pub fn zeros(modes: usize) -> Self {
        let k = modes * modes.saturating_sub(1) / 2;
        Self { theta: vec![0.0; k], phi: vec![0.0; k], phases: vec![0.0; modes] }
    }

    fn random<R: Rng + ?Sized>(modes: usize, rng: &mut R) -> Self {
        let angle = Uniform::new(0.0, TAU).expect("valid range");
        let k = modes * modes.saturating_sub(1) / 2;
        Self {
            theta: (0..k).map(|_| angle.sample(rng)).collect(),
            phi: (0..k).map(|_| angle.sample(rng)).collect(),
            phases: (0..modes).map(|_| angle.sample(rng)).collect(),
        }
    }

    pub fn modes(&self) -> usize {
        self.phases.len()
    }

    pub fn gates(&self) -> Vec<Gate> {
        let modes = self.modes();
        let mut gates: Vec<Gate> = mesh_positions(modes)
            .into_iter()
            .zip(self.theta.iter().zip(&self.phi))
            .map(|((a, b), (&t, &p))| Gate::beamsplitter(a, b, t, p))
            .collect();
        gates.extend(self.phases.iter().enumerate().map(|(m, &t)| Gate::rotation(m, t)));
        gates
    }
}

/// Trainable parameters of one layer `Kerr . D . U2 . S . U1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams {
    pub u1: InterferometerParams,
    pub squeeze_r: Vec<f64>,
    pub u2: InterferometerParams,
    pub disp_alpha: Vec<C64>,
    pub kerr_kappa: Vec<f64>,
}

/// A gate whose parameters are read from a flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamGate {
    Beamsplitter { a: usize, b: usize, theta: usize, phi: usize },
    Rotation { mode: usize, theta: usize },
    Squeeze { mode: usize, r: usize },
    Displacement { mode: usize, re: usize, im: usize },
    Kerr { mode: usize, kappa: usize },
}

impl ParamGate {
    pub fn gate(&self, theta: &[f64]) -> Gate {
        match *self {
            ParamGate::Beamsplitter { a, b, theta: t, phi } => Gate::beamsplitter(a, b, theta[t], theta[phi]),
            ParamGate::Rotation { mode, theta: t } => Gate::rotation(mode, theta[t]),
            ParamGate::Squeeze { mode, r } => Gate::squeeze(mode, theta[r], 0.0),
            ParamGate::Displacement { mode, re, im } => {
                Gate::displacement(mode, C64::new(theta[re], theta[im]))
            }
            ParamGate::Kerr { mode, kappa } => Gate::kerr(mode, theta[kappa]),
        }
    }

    /// Flat indices this gate reads.
    pub fn params(&self) -> Vec<usize> {
        match *self {
            ParamGate::Beamsplitter { theta, phi, .. } => vec![theta, phi],
            ParamGate::Rotation { theta, .. } => vec![theta],
            ParamGate::Squeeze { r, .. } => vec![r],
            ParamGate::Displacement { re, im, .. } => vec![re, im],
            ParamGate::Kerr { kappa, .. } => vec![kappa],
        }
    }
}

impl LayerParams {
    /// Trainable reals per layer: two interferometers of `N^2` each, plus
    /// squeeze, complex displacement and Kerr per mode.
    pub fn param_count(modes: usize) -> usize {
        2 * modes * modes + 4 * modes
    }

    pub fn zeros(modes: usize) -> Self {
        Self {
            u1: InterferometerParams::zeros(modes),
            squeeze_r: vec![0.0; modes],
            u2: InterferometerParams::zeros(modes),
            disp_alpha: vec![C64::new(0.0, 0.0); modes],
            kerr_kappa: vec![0.0; modes],
        }
    }

    /// Angles uniform on `[0, 2 pi)`, active gates normal with
    /// [`INIT_ACTIVE_STD`].
    pub fn random<R: Rng + ?Sized>(modes: usize, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, INIT_ACTIVE_STD).expect("positive std");
        let u1 = InterferometerParams::random(modes, rng);
        let squeeze_r = (0..modes).map(|_| normal.sample(rng)).collect();
        let u2 = InterferometerParams::random(modes, rng);
        let disp_alpha = (0..modes)
            .map(|_| C64::new(normal.sample(rng), normal.sample(rng)))
            .collect();
        let kerr_kappa = (0..modes).map(|_| normal.sample(rng)).collect();
        Self { u1, squeeze_r, u2, disp_alpha, kerr_kappa }
    }

    pub fn modes(&self) -> usize {
        self.squeeze_r.len()
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.modes();
        let k = n * n.saturating_sub(1) / 2;
        let ok = [&self.u1, &self.u2]
            .iter()
            .all(|u| u.theta.len() == k && u.phi.len() == k && u.phases.len() == n)
            && self.disp_alpha.len() == n
            && self.kerr_kappa.len() == n;
        if ok {
            Ok(())
        } else {
            Err(Error::IncompatibleParameters(format!("inconsistent vector lengths for {n} modes")))
        }
    }

    /// Gates in execution order: `U1`, `S`, `U2`, `D`, `Kerr`.
    pub fn gates(&self) -> Vec<Gate> {
        let mut out = self.u1.gates();
        out.extend(self.squeeze_r.iter().enumerate().map(|(m, &r)| Gate::squeeze(m, r, 0.0)));
        out.extend(self.u2.gates());
        out.extend(self.disp_alpha.iter().enumerate().map(|(m, &a)| Gate::displacement(m, a)));
        out.extend(self.kerr_kappa.iter().enumerate().map(|(m, &k)| Gate::kerr(m, k)));
        out
    }

    /// Appends the flat parameters, in the order [`layout`](Self::layout) reads them.
    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        let push_u = |u: &InterferometerParams, out: &mut Vec<f64>| {
            for (t, p) in u.theta.iter().zip(&u.phi) {
                out.push(*t);
                out.push(*p);
            }
            out.extend_from_slice(&u.phases);
        };
        push_u(&self.u1, out);
        out.extend_from_slice(&self.squeeze_r);
        push_u(&self.u2, out);
        for a in &self.disp_alpha {
            out.push(a.re);
            out.push(a.im);
        }
        out.extend_from_slice(&self.kerr_kappa);
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(Self::param_count(self.modes()));
        self.flatten_into(&mut v);
        v
    }

    pub fn unflatten(modes: usize, flat: &[f64]) -> Result<Self> {
        let need = Self::param_count(modes);
        if flat.len() != need {
            return Err(Error::IncompatibleParameters(format!(
                "{modes}-mode layer needs {need} parameters, got {}",
                flat.len()
            )));
        }
        let mut it = flat.iter().copied();
        let take_u = |it: &mut dyn Iterator<Item = f64>| {
            let mut u = InterferometerParams::zeros(modes);
            for k in 0..u.theta.len() {
                u.theta[k] = it.next().unwrap();
                u.phi[k] = it.next().unwrap();
            }
            for p in u.phases.iter_mut() {
                *p = it.next().unwrap();
            }
            u
        };
        let u1 = take_u(&mut it);
        let squeeze_r = it.by_ref().take(modes).collect();
        let u2 = take_u(&mut it);
        let disp_alpha = (0..modes)
            .map(|_| C64::new(it.next().unwrap(), it.next().unwrap()))
            .collect();
        let kerr_kappa = it.collect();
        Ok(Self { u1, squeeze_r, u2, disp_alpha, kerr_kappa })
    }

    /// Parameterised gates of a layer whose flat block starts at `offset`.
    pub fn layout(modes: usize, offset: usize) -> Vec<ParamGate> {
        fn take(next: &mut usize) -> usize {
            *next += 1;
            *next - 1
        }
        fn interferometer(modes: usize, next: &mut usize, out: &mut Vec<ParamGate>) {
            for (a, b) in mesh_positions(modes) {
                let theta = take(next);
                let phi = take(next);
                out.push(ParamGate::Beamsplitter { a, b, theta, phi });
            }
            for mode in 0..modes {
                out.push(ParamGate::Rotation { mode, theta: take(next) });
            }
        }
        let mut out = Vec::new();
        let mut next = offset;
        interferometer(modes, &mut next, &mut out);
        for mode in 0..modes {
            out.push(ParamGate::Squeeze { mode, r: take(&mut next) });
        }
        interferometer(modes, &mut next, &mut out);
        for mode in 0..modes {
            let re = take(&mut next);
            let im = take(&mut next);
            out.push(ParamGate::Displacement { mode, re, im });
        }
        for mode in 0..modes {
            out.push(ParamGate::Kerr { mode, kappa: take(&mut next) });
        }
        out
    }
}

/// An ordered stack of equal-width layers.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    layers: Vec<LayerParams>,
}

impl NetworkParams {
    pub fn new(layers: Vec<LayerParams>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::InvalidNetwork("network needs at least one layer".into()))?;
        let modes = first.modes();
        for (i, l) in layers.iter().enumerate() {
            l.check_shape()?;
            if l.modes() != modes {
                return Err(Error::InvalidNetwork(format!(
                    "layer {i} has {} modes, layer 0 has {modes}",
                    l.modes()
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn random<R: Rng + ?Sized>(modes: usize, depth: usize, rng: &mut R) -> Result<Self> {
        Self::new((0..depth).map(|_| LayerParams::random(modes, rng)).collect())
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn modes(&self) -> usize {
        self.layers[0].modes()
    }

    pub fn param_count(&self) -> usize {
        self.depth() * LayerParams::param_count(self.modes())
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            l.flatten_into(&mut v);
        }
        v
    }

    pub fn unflatten(modes: usize, depth: usize, flat: &[f64]) -> Result<Self> {
        let per = LayerParams::param_count(modes);
        if depth == 0 {
            return Err(Error::InvalidNetwork("network needs at least one layer".into()));
        }
        if flat.len() != per * depth {
            return Err(Error::IncompatibleParameters(format!(
                "{depth} layers of {modes} modes need {} parameters, got {}",
                per * depth,
                flat.len()
            )));
        }
        Self::new(
            flat.chunks(per)
                .map(|c| LayerParams::unflatten(modes, c))
                .collect::<Result<_>>()?,
        )
    }

    /// Parameterised gates of the whole network in execution order.
    pub fn layout(modes: usize, depth: usize) -> Vec<ParamGate> {
        let per = LayerParams::param_count(modes);
        (0..depth).flat_map(|l| LayerParams::layout(modes, l * per)).collect()
    }
}

//! Text checkpoints: one `layer <i> <name> <values...>` record per group.

use std::io::{BufRead, Write};

use num_complex::Complex64 as C64;

use super::params::{InterferometerParams, LayerParams, NetworkParams};
use crate::error::{Error, Result};

const GROUPS: [&str; 10] = [
    "u1_theta", "u1_phi", "u1_phase", "squeeze", "u2_theta", "u2_phi", "u2_phase", "disp_re",
    "disp_im", "kerr",
];

/// 17 significant digits, enough for an exact f64 round trip.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn groups(l: &LayerParams) -> [Vec<f64>; 10] {
    [
        l.u1.theta.clone(),
        l.u1.phi.clone(),
        l.u1.phases.clone(),
        l.squeeze_r.clone(),
        l.u2.theta.clone(),
        l.u2.phi.clone(),
        l.u2.phases.clone(),
        l.disp_alpha.iter().map(|a| a.re).collect(),
        l.disp_alpha.iter().map(|a| a.im).collect(),
        l.kerr_kappa.clone(),
    ]
}

pub fn write_checkpoint<W: Write>(net: &NetworkParams, mut w: W) -> Result<()> {
    for (i, layer) in net.layers().iter().enumerate() {
        for (name, values) in GROUPS.iter().zip(groups(layer)) {
            write!(w, "layer {i} {name}")?;
            for v in values {
                write!(w, " {}", fmt_f64(v))?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

pub fn read_checkpoint<R: BufRead>(r: R) -> Result<NetworkParams> {
    let mut layers: Vec<[Option<Vec<f64>>; 10]> = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: &str| Error::Format(format!("checkpoint line {}: {msg}", lineno + 1));
        let mut tok = line.split_whitespace();
        if tok.next() != Some("layer") {
            return Err(bad("expected `layer`"));
        }
        let idx: usize = tok
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad("bad layer index"))?;
        let name = tok.next().ok_or_else(|| bad("missing group name"))?;
        let g = GROUPS.iter().position(|n| *n == name).ok_or_else(|| bad("unknown group"))?;
        let values = tok
            .map(|t| t.parse::<f64>().map_err(|_| bad("bad number")))
            .collect::<Result<Vec<_>>>()?;
        if idx >= layers.len() {
            layers.resize_with(idx + 1, Default::default);
        }
        if layers[idx][g].replace(values).is_some() {
            return Err(bad("duplicate record"));
        }
    }
    let built = layers
        .into_iter()
        .enumerate()
        .map(|(i, gs)| {
            let missing = || Error::Format(format!("layer {i} is missing a parameter group"));
            let mut gs = gs.into_iter().map(|g| g.ok_or_else(missing)).collect::<Result<Vec<_>>>()?;
            let mut next = || gs.remove(0);
            let u1 = InterferometerParams { theta: next(), phi: next(), phases: next() };
            let squeeze_r = next();
            let u2 = InterferometerParams { theta: next(), phi: next(), phases: next() };
            let re = next();
            let im = next();
            if re.len() != im.len() {
                return Err(Error::Format(format!("layer {i}: displacement parts differ in length")));
            }
            let disp_alpha = re.into_iter().zip(im).map(|(a, b)| C64::new(a, b)).collect();
            Ok(LayerParams { u1, squeeze_r, u2, disp_alpha, kerr_kappa: next() })
        })
        .collect::<Result<Vec<_>>>()?;
    NetworkParams::new(built).map_err(|e| Error::Format(format!("checkpoint: {e}")))
}

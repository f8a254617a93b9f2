use std::fmt;
use std::io::{BufRead, Write};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{Action, FockState, Gate, Kernels};
use crate::layers::fmt_f64;

/// One primitive gate with its control values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateRecord {
    Beamsplitter { i: usize, j: usize, theta: f64, phi: f64 },
    Rotation { i: usize, theta: f64 },
    Squeeze { i: usize, r: f64 },
    Displacement { i: usize, alpha: C64 },
    Kerr { i: usize, kappa: f64 },
}

impl GateRecord {
    pub fn gate(&self) -> Gate {
        match *self {
            GateRecord::Beamsplitter { i, j, theta, phi } => Gate::beamsplitter(i, j, theta, phi),
            GateRecord::Rotation { i, theta } => Gate::rotation(i, theta),
            GateRecord::Squeeze { i, r } => Gate::squeeze(i, r, 0.0),
            GateRecord::Displacement { i, alpha } => Gate::displacement(i, alpha),
            GateRecord::Kerr { i, kappa } => Gate::kerr(i, kappa),
        }
    }

    fn modes_used(&self) -> Vec<usize> {
        match *self {
            GateRecord::Beamsplitter { i, j, .. } => vec![i, j],
            GateRecord::Rotation { i, .. }
            | GateRecord::Squeeze { i, .. }
            | GateRecord::Displacement { i, .. }
            | GateRecord::Kerr { i, .. } => vec![i],
        }
    }
}

impl fmt::Display for GateRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GateRecord::Beamsplitter { i, j, theta, phi } => {
                write!(f, "BS {i} {j} {} {}", fmt_f64(theta), fmt_f64(phi))
            }
            GateRecord::Rotation { i, theta } => write!(f, "R {i} {}", fmt_f64(theta)),
            GateRecord::Squeeze { i, r } => write!(f, "S {i} {}", fmt_f64(r)),
            GateRecord::Displacement { i, alpha } => {
                write!(f, "D {i} {} {}", fmt_f64(alpha.re), fmt_f64(alpha.im))
            }
            GateRecord::Kerr { i, kappa } => write!(f, "K {i} {}", fmt_f64(kappa)),
        }
    }
}

/// An executable gate sequence on a fixed number of modes.
#[derive(Clone, Debug, PartialEq)]
pub struct GateProgram {
    modes: usize,
    records: Vec<GateRecord>,
}

impl GateProgram {
    pub fn new(modes: usize, records: Vec<GateRecord>) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidParameter("program needs at least one mode".into()));
        }
        for r in &records {
            let used = r.modes_used();
            if let Some(&index) = used.iter().find(|&&m| m >= modes) {
                return Err(Error::ModeOutOfRange { index, modes });
            }
            if used.len() == 2 && used[0] == used[1] {
                return Err(Error::InvalidParameter(format!("beamsplitter on a single mode: {r}")));
            }
        }
        Ok(Self { modes, records })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn records(&self) -> &[GateRecord] {
        &self.records
    }

    pub fn extend(&mut self, other: GateProgram) -> Result<()> {
        if other.modes != self.modes {
            return Err(Error::IncompatibleParameters(format!(
                "joining {}-mode and {}-mode programs",
                self.modes, other.modes
            )));
        }
        self.records.extend(other.records);
        Ok(())
    }

    /// Runs the program on a state through the Fock simulator.
    pub fn replay(&self, state: &FockState) -> Result<FockState> {
        if state.modes() != self.modes {
            return Err(Error::IncompatibleStates(format!(
                "{}-mode state for a {}-mode program",
                state.modes(),
                self.modes
            )));
        }
        let kernels = Kernels::new(state.cutoff())?;
        let actions = self
            .records
            .iter()
            .map(|r| kernels.action(&r.gate()))
            .collect::<Result<Vec<Action>>>()?;
        let mut out = state.clone();
        for a in &actions {
            out = a.apply(&out)?;
        }
        Ok(out)
    }

    /// `MODES n`, then one record per line.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "MODES {}", self.modes)?;
        for r in &self.records {
            writeln!(w, "{r}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut modes = None;
        let mut records = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| Error::Format(format!("program line {}: {msg}", lineno + 1));
            let tok: Vec<&str> = line.split_whitespace().collect();
            let index = |k: usize| -> Result<usize> {
                tok.get(k).and_then(|t| t.parse().ok()).ok_or_else(|| bad("bad mode index"))
            };
            let real = |k: usize| -> Result<f64> {
                tok.get(k).and_then(|t| t.parse().ok()).ok_or_else(|| bad("bad number"))
            };
            let arity = |n: usize| if tok.len() == n { Ok(()) } else { Err(bad("wrong field count")) };
            if modes.is_none() {
                if tok[0] != "MODES" {
                    return Err(bad("first record must be MODES"));
                }
                arity(2)?;
                modes = Some(index(1)?);
                continue;
            }
            let record = match tok[0] {
                "BS" => {
                    arity(5)?;
                    GateRecord::Beamsplitter { i: index(1)?, j: index(2)?, theta: real(3)?, phi: real(4)? }
                }
                "R" => {
                    arity(3)?;
                    GateRecord::Rotation { i: index(1)?, theta: real(2)? }
                }
                "S" => {
                    arity(3)?;
                    GateRecord::Squeeze { i: index(1)?, r: real(2)? }
                }
                "D" => {
                    arity(4)?;
                    GateRecord::Displacement { i: index(1)?, alpha: C64::new(real(2)?, real(3)?) }
                }
                "K" => {
                    arity(3)?;
                    GateRecord::Kerr { i: index(1)?, kappa: real(2)? }
                }
                other => return Err(bad(&format!("unknown record `{other}`"))),
            };
            records.push(record);
        }
        let modes = modes.ok_or_else(|| Error::Format("program has no MODES line".into()))?;
        Self::new(modes, records)
    }
}

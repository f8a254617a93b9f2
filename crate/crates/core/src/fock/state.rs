use std::io::{Read, Write};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Quadrature convention constant; `x = a + a†`, `p = -i(a - a†)`.
pub const HBAR: f64 = 2.0;

/// A pure multi-mode state on a truncated Fock basis.
///
/// Amplitudes are stored row-major with mode 0 the slowest-varying axis, so
/// the basis state `|n_0, n_1, ..., n_{M-1}>` lives at
/// `sum_m n_m * cutoff^(M-1-m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    modes: usize,
    cutoff: usize,
    amps: Vec<C64>,
}

pub(crate) fn check_cutoff(cutoff: usize) -> Result<()> {
    if cutoff < 2 {
        return Err(Error::InvalidCutoff(cutoff));
    }
    Ok(())
}

fn dimension(modes: usize, cutoff: usize) -> Result<usize> {
    if modes == 0 {
        return Err(Error::InvalidParameter("state needs at least one mode".into()));
    }
    check_cutoff(cutoff)?;
    u32::try_from(modes)
        .ok()
        .and_then(|m| cutoff.checked_pow(m))
        .ok_or_else(|| Error::InvalidParameter(format!("{cutoff}^{modes} overflows")))
}

impl FockState {
    pub fn from_amplitudes(modes: usize, cutoff: usize, amps: Vec<C64>) -> Result<Self> {
        let dim = dimension(modes, cutoff)?;
        if amps.len() != dim {
            return Err(Error::Length(format!(
                "expected {dim} amplitudes for {modes} mode(s) at cutoff {cutoff}, got {}",
                amps.len()
            )));
        }
        Ok(Self { modes, cutoff, amps })
    }

    pub fn vacuum(modes: usize, cutoff: usize) -> Result<Self> {
        Self::number(&vec![0; modes], cutoff)
    }

    /// The number state `|n_0, ..., n_{M-1}>`.
    pub fn number(levels: &[usize], cutoff: usize) -> Result<Self> {
        let dim = dimension(levels.len(), cutoff)?;
        if let Some(&n) = levels.iter().find(|&&n| n >= cutoff) {
            return Err(Error::InvalidParameter(format!("level {n} not below cutoff {cutoff}")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        let idx = levels.iter().fold(0, |acc, &n| acc * cutoff + n);
        amps[idx] = C64::new(1.0, 0.0);
        Ok(Self { modes: levels.len(), cutoff, amps })
    }

    /// Tensor product of single-mode states, mode 0 first.
    pub fn product(factors: &[FockState]) -> Result<Self> {
        let first = factors
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty product".into()))?;
        let cutoff = first.cutoff;
        let mut amps = vec![C64::new(1.0, 0.0)];
        for f in factors {
            if f.modes != 1 || f.cutoff != cutoff {
                return Err(Error::IncompatibleStates(
                    "product factors must be single-mode with a shared cutoff".into(),
                ));
            }
            amps = amps
                .iter()
                .flat_map(|a| f.amps.iter().map(move |b| a * b))
                .collect();
        }
        Self::from_amplitudes(factors.len(), cutoff, amps)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &FockState) -> Result<C64> {
        self.check_compatible(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub(crate) fn check_compatible(&self, other: &FockState) -> Result<()> {
        if self.modes != other.modes || self.cutoff != other.cutoff {
            return Err(Error::IncompatibleStates(format!(
                "({} modes, cutoff {}) vs ({} modes, cutoff {})",
                self.modes, self.cutoff, other.modes, other.cutoff
            )));
        }
        Ok(())
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.modes {
            return Err(Error::ModeOutOfRange { index: mode, modes: self.modes });
        }
        Ok(())
    }

    /// Little-endian: u32 modes, u32 cutoff, then (re, im) f64 pairs.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.modes as u32).to_le_bytes())?;
        w.write_all(&(self.cutoff as u32).to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let modes = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b4)?;
        let cutoff = u32::from_le_bytes(b4) as usize;
        let dim = dimension(modes, cutoff)?;
        let mut amps = Vec::with_capacity(dim);
        let mut b8 = [0u8; 8];
        for _ in 0..dim {
            r.read_exact(&mut b8)?;
            let re = f64::from_le_bytes(b8);
            r.read_exact(&mut b8)?;
            let im = f64::from_le_bytes(b8);
            amps.push(C64::new(re, im));
        }
        Ok(Self { modes, cutoff, amps })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(8 + 16 * self.amps.len());
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }
}

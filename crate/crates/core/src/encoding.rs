//! Classical preprocessing: seeded linear encoders, displacement inputs,
//! training targets and orthogonal-basis projection.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::fock::{coherent_state, FockState};
use crate::signal::ImageTensor;

/// Amplitude of the coherent state on the class mode of a classification
/// target, giving `<x> = 1` on that mode.
pub const CLASS_TARGET_ALPHA: f64 = 0.5;

/// A seeded Gaussian reduction matrix followed by a global output scale.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodingMatrix {
    rows: usize,
    cols: usize,
    seed: u64,
    entries: DMatrix<f64>,
    scale: f64,
}

impl EncodingMatrix {
    /// Entries drawn i.i.d. from `N(0, 1/cols)`; the scale starts at 1.
    pub fn generate(rows: usize, cols: usize, seed: u64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(format!("encoder shape {rows}x{cols}")));
        }
        let normal = Normal::new(0.0, (1.0 / cols as f64).sqrt()).expect("positive std");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries = DMatrix::from_row_iterator(rows, cols, (0..rows * cols).map(|_| normal.sample(&mut rng)));
        Ok(Self { rows, cols, seed, entries, scale: 1.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    fn raw(&self, image: &[f64]) -> Result<DVector<f64>> {
        if image.len() != self.cols {
            return Err(Error::InvalidInput(format!(
                "encoder expects {} values, got {}",
                self.cols,
                image.len()
            )));
        }
        if image.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite input value".into()));
        }
        Ok(&self.entries * DVector::from_column_slice(image))
    }

    /// Sets the scale so every encoded component of `training` lies in
    /// `[-1, 1]`, with the largest magnitude mapped to exactly 1.
    pub fn fit_scale<'a, I>(&mut self, training: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut peak = 0.0f64;
        for image in training {
            peak = self.raw(image)?.iter().fold(peak, |m, v| m.max(v.abs()));
        }
        self.scale = if peak > 0.0 { 1.0 / peak } else { 1.0 };
        Ok(())
    }

    pub fn encode(&self, image: &[f64]) -> Result<Vec<f64>> {
        Ok(self.raw(image)?.iter().map(|v| v * self.scale).collect())
    }

    /// Little-endian `u64 seed, u32 rows, u32 cols, f64 scale`; entries are
    /// regenerated from the seed on load.
    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> Result<()> {
        let dim = |n: usize| {
            u32::try_from(n).map_err(|_| Error::InvalidParameter(format!("dimension {n} exceeds u32")))
        };
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&dim(self.rows)?.to_le_bytes())?;
        w.write_all(&dim(self.cols)?.to_le_bytes())?;
        w.write_all(&self.scale.to_le_bytes())?;
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = [0u8; 24];
        r.read_exact(&mut buf)
            .map_err(|e| Error::Length(format!("encoder checkpoint: {e}")))?;
        let seed = u64::from_le_bytes(buf[0..8].try_into().expect("8 bytes"));
        let rows = u32::from_le_bytes(buf[8..12].try_into().expect("4 bytes")) as usize;
        let cols = u32::from_le_bytes(buf[12..16].try_into().expect("4 bytes")) as usize;
        let scale = f64::from_le_bytes(buf[16..24].try_into().expect("8 bytes"));
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Format(format!("encoder checkpoint scale {scale}")));
        }
        let mut enc = Self::generate(rows, cols, seed).map_err(|e| Error::Format(e.to_string()))?;
        enc.scale = scale;
        Ok(enc)
    }
}

/// `alpha = (x + i p) / 2`, the coherent amplitude with `<x> = x`, `<p> = p`.
pub fn quadratures_to_displacement(x: f64, p: f64) -> Result<C64> {
    if !(x.is_finite() && p.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite quadratures ({x}, {p})")));
    }
    Ok(C64::new(x, p) / 2.0)
}

/// Reads an encoded vector as interleaved `(x_m, p_m)` pairs, one per mode.
pub fn interleaved_displacements(encoded: &[f64]) -> Result<Vec<C64>> {
    if !encoded.len().is_multiple_of(2) {
        return Err(Error::InvalidInput(format!("odd encoded length {}", encoded.len())));
    }
    encoded.chunks(2).map(|q| quadratures_to_displacement(q[0], q[1])).collect()
}

/// Product of coherent states `|alpha_0> ... |alpha_{N-1}>`.
pub fn prepare_input(alphas: &[C64], cutoff: usize) -> Result<FockState> {
    let factors = alphas
        .iter()
        .map(|&a| coherent_state(a, cutoff))
        .collect::<Result<Vec<_>>>()?;
    FockState::product(&factors)
}

/// Pairwise-orthogonal, nonzero basis vectors spanning a subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisSet {
    vectors: Vec<Vec<f64>>,
    dim: usize,
}

pub const ORTHOGONALITY_TOL: f64 = 1e-10;

impl BasisSet {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let dim = vectors
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidInput("empty basis".into()))?;
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::InvalidInput("basis vectors differ in length".into()));
        }
        if vectors.iter().any(|v| v.iter().all(|x| *x == 0.0)) {
            return Err(Error::SingularBasis);
        }
        for (i, a) in vectors.iter().enumerate() {
            for b in &vectors[i + 1..] {
                let ip: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                if ip.abs() > ORTHOGONALITY_TOL {
                    return Err(Error::InvalidInput(format!("basis vectors overlap by {ip:e}")));
                }
            }
        }
        Ok(Self { vectors, dim })
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.vectors.len(), |i, j| self.vectors[j][i])
    }
}

/// `B (B^T B)^{-1} B^T x`, the orthogonal projection onto `span(B)`.
pub fn basis_project(x: &[f64], basis: &BasisSet) -> Result<Vec<f64>> {
    if x.len() != basis.dim {
        return Err(Error::InvalidInput(format!("vector length {} vs basis dimension {}", x.len(), basis.dim)));
    }
    let b = basis.matrix();
    let gram = b.transpose() * &b;
    let rhs = b.transpose() * DVector::from_column_slice(x);
    let lambda = gram.cholesky().ok_or(Error::SingularBasis)?.solve(&rhs);
    Ok((b * lambda).iter().copied().collect())
}

/// Class `c` maps to `alpha = 0.5` on mode `c` and vacuum elsewhere.
pub fn make_targets_classification(labels: &[usize], modes: usize, cutoff: usize) -> Result<Vec<FockState>> {
    labels
        .iter()
        .map(|&label| {
            if label >= modes {
                return Err(Error::InvalidLabel { label, classes: modes });
            }
            let alphas: Vec<C64> = (0..modes)
                .map(|m| C64::new(if m == label { CLASS_TARGET_ALPHA } else { 0.0 }, 0.0))
                .collect();
            prepare_input(&alphas, cutoff)
        })
        .collect()
}

/// One unit target per image column, indexed by row. A zero column falls
/// back to `|0>`.
pub fn make_targets_columns(image: &ImageTensor) -> Result<Vec<Vec<C64>>> {
    if image.channels() != 1 {
        return Err(Error::ChannelCount { expected: 1, got: image.channels() });
    }
    Ok((0..image.width())
        .map(|c| {
            let column = image.column(c);
            let norm = column.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                column.iter().map(|v| C64::new(v / norm, 0.0)).collect()
            } else {
                let mut e = vec![C64::new(0.0, 0.0); column.len()];
                e[0] = C64::new(1.0, 0.0);
                e
            }
        })
        .collect())
}

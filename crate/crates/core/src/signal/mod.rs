//! Classical image path of the denoiser: 2D DFT, additive white Gaussian
//! noise, spectral differencing, error metrics and colour planes.

mod pnm;

pub use pnm::{read_pnm, write_pgm, write_ppm, write_spectrum_csv};

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Pixels stored row-major with channels interleaved per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    channels: usize,
    pixels: Vec<f64>,
}

impl ImageTensor {
    pub fn new(height: usize, width: usize, channels: usize, pixels: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::ChannelCount { expected: 1, got: channels });
        }
        if height == 0 || width == 0 {
            return Err(Error::ShapeMismatch(format!("empty image {height}x{width}")));
        }
        if pixels.len() != height * width * channels {
            return Err(Error::ShapeMismatch(format!(
                "{} pixel values for a {height}x{width}x{channels} image",
                pixels.len()
            )));
        }
        Ok(Self { height, width, channels, pixels })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.pixels[(row * self.width + col) * self.channels + channel]
    }

    /// Column `col` of channel 0, top to bottom.
    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.height).map(|r| self.get(r, col, 0)).collect()
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if (self.height, self.width, self.channels) != (other.height, other.width, other.channels) {
            return Err(Error::ShapeMismatch(format!(
                "{}x{}x{} vs {}x{}x{}",
                self.height, self.width, self.channels, other.height, other.width, other.channels
            )));
        }
        Ok(())
    }
}

/// Complex 2D coefficients, row-major, DC at `(0, 0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumTensor {
    height: usize,
    width: usize,
    coeffs: Vec<C64>,
}

impl SpectrumTensor {
    pub fn new(height: usize, width: usize, coeffs: Vec<C64>) -> Result<Self> {
        if height == 0 || width == 0 || coeffs.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "{} coefficients for a {height}x{width} spectrum",
                coeffs.len()
            )));
        }
        Ok(Self { height, width, coeffs })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn get(&self, ky: usize, kx: usize) -> C64 {
        self.coeffs[ky * self.width + kx]
    }
}

/// In-place 2D transform: rows, then columns.
fn fft2(height: usize, width: usize, data: &mut [C64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let (row_fft, col_fft) = if inverse {
        (planner.plan_fft_inverse(width), planner.plan_fft_inverse(height))
    } else {
        (planner.plan_fft_forward(width), planner.plan_fft_forward(height))
    };
    row_fft.process(data);
    let mut column = vec![C64::new(0.0, 0.0); height];
    for c in 0..width {
        for r in 0..height {
            column[r] = data[r * width + c];
        }
        col_fft.process(&mut column);
        for r in 0..height {
            data[r * width + c] = column[r];
        }
    }
}

/// Unnormalized forward DFT of a single-channel image.
pub fn dft2(img: &ImageTensor) -> Result<SpectrumTensor> {
    if img.channels != 1 {
        return Err(Error::ChannelCount { expected: 1, got: img.channels });
    }
    let mut data: Vec<C64> = img.pixels.iter().map(|&v| C64::new(v, 0.0)).collect();
    fft2(img.height, img.width, &mut data, false);
    SpectrumTensor::new(img.height, img.width, data)
}

/// Inverse DFT carrying the `1 / (h w)` factor; keeps the real part.
pub fn idft2(spec: &SpectrumTensor) -> ImageTensor {
    let mut data = spec.coeffs.clone();
    fft2(spec.height, spec.width, &mut data, true);
    let n = (spec.height * spec.width) as f64;
    ImageTensor {
        height: spec.height,
        width: spec.width,
        channels: 1,
        pixels: data.iter().map(|z| z.re / n).collect(),
    }
}

/// Adds i.i.d. `N(mean, std^2)` to every pixel without clamping.
pub fn awgn_add(img: &ImageTensor, mean: f64, std: f64, seed: u64) -> Result<ImageTensor> {
    if !(std >= 0.0 && std.is_finite() && mean.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise mean {mean}, std {std}")));
    }
    let normal = Normal::new(mean, std).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pixels = img
        .pixels
        .iter()
        .map(|&v| if std == 0.0 { v + mean } else { v + normal.sample(&mut rng) })
        .collect();
    Ok(ImageTensor { pixels, ..img.clone() })
}

/// Element-wise difference of the two learned spectra.
pub fn oracle_subtract(image: &SpectrumTensor, noise: &SpectrumTensor) -> Result<SpectrumTensor> {
    if (image.height, image.width) != (noise.height, noise.width) {
        return Err(Error::IncompatibleSpectra(format!(
            "{}x{} vs {}x{}",
            image.height, image.width, noise.height, noise.width
        )));
    }
    let coeffs = image.coeffs.iter().zip(&noise.coeffs).map(|(a, b)| a - b).collect();
    Ok(SpectrumTensor { coeffs, ..image.clone() })
}

/// `100 * mean((a - b)^2)` over every pixel and channel.
pub fn mse_percent(a: &ImageTensor, b: &ImageTensor) -> Result<f64> {
    a.same_shape(b)?;
    let sum: f64 = a.pixels.iter().zip(&b.pixels).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(100.0 * sum / a.pixels.len() as f64)
}

/// Splits an RGB image into its three planes.
pub fn split_rgb(img: &ImageTensor) -> Result<[ImageTensor; 3]> {
    if img.channels != 3 {
        return Err(Error::ChannelCount { expected: 3, got: img.channels });
    }
    let plane = |c: usize| ImageTensor {
        height: img.height,
        width: img.width,
        channels: 1,
        pixels: img.pixels.iter().skip(c).step_by(3).copied().collect(),
    };
    Ok([plane(0), plane(1), plane(2)])
}

pub fn merge_rgb(planes: &[ImageTensor; 3]) -> Result<ImageTensor> {
    for p in planes {
        if p.channels != 1 {
            return Err(Error::ChannelCount { expected: 1, got: p.channels });
        }
        planes[0].same_shape(p)?;
    }
    let pixels = (0..planes[0].pixels.len())
        .flat_map(|i| planes.iter().map(move |p| p.pixels[i]))
        .collect();
    ImageTensor::new(planes[0].height, planes[0].width, 3, pixels)
}

/// Column-normalized amplitude targets of a spectrum and the norms that
/// undo the normalization. Zero columns give `|0>` with scale 0.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumTargets {
    pub height: usize,
    pub targets: Vec<Vec<C64>>,
    pub scales: Vec<f64>,
}

pub fn spectrum_to_targets(spec: &SpectrumTensor) -> SpectrumTargets {
    let (targets, scales) = (0..spec.width)
        .map(|kx| {
            let column: Vec<C64> = (0..spec.height).map(|ky| spec.get(ky, kx)).collect();
            let norm = column.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.0 {
                (column.iter().map(|z| z / norm).collect(), norm)
            } else {
                let mut e = vec![C64::new(0.0, 0.0); spec.height];
                e[0] = C64::new(1.0, 0.0);
                (e, 0.0)
            }
        })
        .unzip();
    SpectrumTargets { height: spec.height, targets, scales }
}

impl SpectrumTargets {
    /// Reassembles `scale_k * target_k` column by column. `columns` may hold
    /// learned amplitudes in place of the exact targets.
    pub fn assemble(&self, columns: &[Vec<C64>]) -> Result<SpectrumTensor> {
        if columns.len() != self.scales.len() || columns.iter().any(|c| c.len() != self.height) {
            return Err(Error::ShapeMismatch(format!(
                "{} columns for a {}x{} spectrum",
                columns.len(),
                self.height,
                self.scales.len()
            )));
        }
        let width = self.scales.len();
        let coeffs = (0..self.height * width)
            .map(|i| columns[i % width][i / width] * self.scales[i % width])
            .collect();
        SpectrumTensor::new(self.height, width, coeffs)
    }
}

/// Difference of the de-normalized learned spectra, transformed back to
/// pixels.
pub fn denoise_chain(
    image: &SpectrumTargets,
    image_columns: &[Vec<C64>],
    noise: &SpectrumTargets,
    noise_columns: &[Vec<C64>],
) -> Result<ImageTensor> {
    let diff = oracle_subtract(&image.assemble(image_columns)?, &noise.assemble(noise_columns)?)?;
    Ok(idft2(&diff))
}

//! Binary PGM/PPM images and spectrum CSV.

use std::io::{BufRead, Write};

use super::{ImageTensor, SpectrumTensor};
use crate::error::{Error, Result};
use crate::layers::fmt_f64;

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn write_pnm<W: Write>(img: &ImageTensor, magic: &str, channels: usize, mut w: W) -> Result<()> {
    if img.channels() != channels {
        return Err(Error::ChannelCount { expected: channels, got: img.channels() });
    }
    write!(w, "{magic}\n{} {}\n255\n", img.width(), img.height())?;
    let bytes: Vec<u8> = img.pixels().iter().map(|&v| quantize(v)).collect();
    w.write_all(&bytes)?;
    Ok(())
}

/// Binary greyscale, maxval 255, pixels clamped to `[0, 1]` then rounded.
pub fn write_pgm<W: Write>(img: &ImageTensor, w: W) -> Result<()> {
    write_pnm(img, "P5", 1, w)
}

/// Binary RGB with the same quantization as [`write_pgm`].
pub fn write_ppm<W: Write>(img: &ImageTensor, w: W) -> Result<()> {
    write_pnm(img, "P6", 3, w)
}

/// Reads the next header token, skipping whitespace and `#` comments.
fn header_token<R: BufRead>(r: &mut R) -> Result<String> {
    let mut token = Vec::new();
    loop {
        let mut byte = [0u8];
        if r.read(&mut byte)? == 0 {
            return Err(Error::Length("image header ends early".into()));
        }
        match byte[0] {
            b'#' if token.is_empty() => {
                let mut skip = Vec::new();
                r.read_until(b'\n', &mut skip)?;
            }
            b if b.is_ascii_whitespace() => {
                if !token.is_empty() {
                    return String::from_utf8(token).map_err(|_| Error::Format("non-ASCII header".into()));
                }
            }
            b => token.push(b),
        }
    }
}

/// Parses a binary PGM (`P5`) or PPM (`P6`) with maxval at most 255 into
/// pixels on `[0, 1]`.
pub fn read_pnm<R: BufRead>(mut r: R) -> Result<ImageTensor> {
    let channels = match header_token(&mut r)?.as_str() {
        "P5" => 1,
        "P6" => 3,
        other => return Err(Error::Format(format!("unsupported image magic `{other}`"))),
    };
    let mut number = |what: &str| -> Result<usize> {
        header_token(&mut r)?
            .parse()
            .map_err(|_| Error::Format(format!("bad image {what}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Format(format!("unsupported maxval {maxval}")));
    }
    let mut bytes = vec![0u8; width * height * channels];
    r.read_exact(&mut bytes)
        .map_err(|_| Error::Length(format!("expected {} pixel bytes", bytes.len())))?;
    let pixels = bytes.iter().map(|&b| b as f64 / maxval as f64).collect();
    ImageTensor::new(height, width, channels, pixels)
}

/// Header `ky,kx,re,im`, then one row per coefficient in row-major order.
pub fn write_spectrum_csv<W: Write>(spec: &SpectrumTensor, mut w: W) -> Result<()> {
    writeln!(w, "ky,kx,re,im")?;
    for ky in 0..spec.height() {
        for kx in 0..spec.width() {
            let z = spec.get(ky, kx);
            writeln!(w, "{ky},{kx},{},{}", fmt_f64(z.re), fmt_f64(z.im))?;
        }
    }
    Ok(())
}

//! Grayscale PGM (P5, 8-bit) and PFM (`Pf`, 32-bit float) files.
//!
//! PGM samples map to `v / 255` on read and are quantized with
//! round-half-even on write. PFM stores `f32` little-endian, bottom row first,
//! and round-trips any `f32`-representable grid exactly.

use std::fs;
use std::path::Path;

use diffedit::{ChangeMap, Field, Image};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Pgm,
    Pfm,
}

impl Format {
    /// Picks the format from the file extension; anything but `.pfm` is PGM.
    pub fn for_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("pfm") => Format::Pfm,
            _ => Format::Pgm,
        }
    }
}

/// A decoded single-channel raster.
#[derive(Debug, Clone, PartialEq)]
pub struct Gray {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

fn malformed(msg: impl Into<String>) -> CliError {
    CliError::MalformedHeader(msg.into())
}

/// Splits `count` whitespace-separated header tokens off `bytes`, skipping
/// `#` comments, and returns them with the offset just past the single
/// whitespace byte that ends the last token.
fn header_tokens(bytes: &[u8], count: usize) -> Result<(Vec<String>, usize), CliError> {
    let mut tokens = Vec::with_capacity(count);
    let mut i = 0;
    while tokens.len() < count {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'#') {
            if bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(malformed("header ends early"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    if i >= bytes.len() {
        return Err(malformed("missing raster"));
    }
    Ok((tokens, i + 1))
}

fn dim(token: &str) -> Result<usize, CliError> {
    match token.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(malformed(format!("bad dimension {token:?}"))),
    }
}

pub fn decode(bytes: &[u8]) -> Result<Gray, CliError> {
    if bytes.len() < 2 {
        return Err(malformed("file too short"));
    }
    match &bytes[..2] {
        b"P5" => decode_pgm(bytes),
        b"Pf" => decode_pfm(bytes),
        b"P1" | b"P2" | b"P3" | b"P4" | b"P6" | b"P7" | b"PF" => {
            Err(CliError::UnsupportedFormat(format!(
                "{} (only P5 PGM and Pf PFM are read)",
                String::from_utf8_lossy(&bytes[..2])
            )))
        }
        _ => Err(malformed("unknown magic number")),
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<Gray, CliError> {
    let (t, offset) = header_tokens(&bytes[2..], 3)?;
    let (width, height) = (dim(&t[0])?, dim(&t[1])?);
    if t[2] != "255" {
        return Err(CliError::UnsupportedFormat(format!(
            "maxval {} (only 255)",
            t[2]
        )));
    }
    let raster = &bytes[2 + offset..];
    if raster.len() < width * height {
        return Err(malformed(format!(
            "expected {} samples, found {}",
            width * height,
            raster.len()
        )));
    }
    Ok(Gray {
        width,
        height,
        data: raster[..width * height]
            .iter()
            .map(|b| f64::from(*b) / 255.0)
            .collect(),
    })
}

fn decode_pfm(bytes: &[u8]) -> Result<Gray, CliError> {
    let (t, offset) = header_tokens(&bytes[2..], 3)?;
    let (width, height) = (dim(&t[0])?, dim(&t[1])?);
    let scale: f64 = t[2]
        .parse()
        .map_err(|_| malformed(format!("bad scale {:?}", t[2])))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(malformed(format!("bad scale {scale}")));
    }
    let raster = &bytes[2 + offset..];
    if raster.len() < 4 * width * height {
        return Err(malformed(format!(
            "expected {} bytes of samples, found {}",
            4 * width * height,
            raster.len()
        )));
    }
    let mut data = vec![0.0; width * height];
    for (i, chunk) in raster.chunks_exact(4).take(width * height).enumerate() {
        let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if scale < 0.0 {
            f32::from_le_bytes(b)
        } else {
            f32::from_be_bytes(b)
        };
        let (x, row) = (i % width, i / width);
        data[(height - 1 - row) * width + x] = f64::from(v);
    }
    Ok(Gray {
        width,
        height,
        data,
    })
}

/// Round-half-even 8-bit quantization of a unit-range value.
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round_ties_even() as u8
}

pub fn encode_pgm(width: usize, height: usize, data: &[f64]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(data.iter().map(|v| quantize(*v)));
    out
}

pub fn encode_pfm(width: usize, height: usize, data: &[f64]) -> Vec<u8> {
    let mut out = format!("Pf\n{width} {height}\n-1.0\n").into_bytes();
    for row in (0..height).rev() {
        for v in &data[row * width..(row + 1) * width] {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    out
}

pub fn read_gray(path: &Path) -> Result<Gray, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes)
}

pub fn write_gray(path: &Path, width: usize, height: usize, data: &[f64]) -> Result<(), CliError> {
    let bytes = match Format::for_path(path) {
        Format::Pgm => encode_pgm(width, height, data),
        Format::Pfm => encode_pfm(width, height, data),
    };
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn read_image(path: &Path) -> Result<Image, CliError> {
    let g = read_gray(path)?;
    Ok(Image::new(g.width, g.height, 1, g.data)?)
}

pub fn read_map(path: &Path) -> Result<ChangeMap, CliError> {
    let g = read_gray(path)?;
    Ok(ChangeMap::new(g.width, g.height, g.data)?)
}

pub fn write_image(path: &Path, image: &Image) -> Result<(), CliError> {
    if image.channels() != 1 {
        return Err(CliError::UnsupportedFormat(format!(
            "{}-channel image (files are grayscale)",
            image.channels()
        )));
    }
    write_gray(path, image.width(), image.height(), image.data())
}

pub fn write_map(path: &Path, map: &ChangeMap) -> Result<(), CliError> {
    write_gray(path, map.width(), map.height(), map.data())
}

pub fn write_field(path: &Path, field: &Field) -> Result<(), CliError> {
    write_gray(path, field.width(), field.height(), field.data())
}

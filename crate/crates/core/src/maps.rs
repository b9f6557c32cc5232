//! Change-map construction: soft masks, strength fans, thresholds, transforms
//! and the procedural evaluation patterns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, ChangeMap};

/// Normalized Gaussian taps for σ = radius/3, truncated at 3σ (= radius).
pub fn gaussian_kernel(radius: usize) -> Vec<f64> {
    let sigma = radius as f64 / 3.0;
    let r = radius as isize;
    let taps: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    taps.into_iter().map(|v| v / total).collect()
}

/// Separable blur with replicate borders.
pub(crate) fn blur(data: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; data.len()];
    for y in 0..height {
        let row = &data[y * width..(y + 1) * width];
        for x in 0..width {
            tmp[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(j, w)| w * row[clamp(x as isize + j as isize - r, width)])
                .sum();
        }
    }
    let mut out = vec![0.0; data.len()];
    for y in 0..height {
        for x in 0..width {
            out[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(j, w)| w * tmp[clamp(y as isize + j as isize - r, height) * width + x])
                .sum();
        }
    }
    out
}

/// Turns a binary inpainting mask into a soft change map by Gaussian blur.
pub fn soften_mask(mask: &ChangeMap, radius: usize) -> Result<ChangeMap> {
    if let Some(index) = mask.data().iter().position(|v| *v != 0.0 && *v != 1.0) {
        return Err(Error::NonBinaryInput {
            index,
            value: mask.data()[index],
        });
    }
    if radius == 0 {
        return Err(Error::InvalidParams(
            "blur radius must be at least 1".into(),
        ));
    }
    let kernel = gaussian_kernel(radius);
    let data = blur(mask.data(), mask.width(), mask.height(), &kernel)
        .into_iter()
        .map(|v| v.clamp(0.0, 1.0))
        .collect();
    ChangeMap::new(mask.width(), mask.height(), data)
}

/// Column widths of a fan: each band takes ⌈remaining / bands left⌉.
pub fn fan_widths(width: usize, bands: usize) -> Vec<usize> {
    let mut remaining = width;
    (0..bands)
        .map(|i| {
            let w = remaining.div_ceil(bands - i);
            remaining -= w;
            w
        })
        .collect()
}

/// Vertical bands, band `i` holding preservation `1 − strengths[i]`.
pub fn fan_map(width: usize, height: usize, strengths: &[f64]) -> Result<ChangeMap> {
    if strengths.is_empty() || strengths.len() > width {
        return Err(Error::TooManyBands {
            bands: strengths.len(),
            width,
        });
    }
    if let Some(s) = strengths.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::InvalidParams(format!("strength {s} outside [0, 1]")));
    }
    let mut row = Vec::with_capacity(width);
    for (w, s) in fan_widths(width, strengths.len())
        .into_iter()
        .zip(strengths)
    {
        row.extend(std::iter::repeat_n(1.0 - s, w));
    }
    ChangeMap::from_fn(width, height, |x, _| row[x])
}

/// One mask per threshold; a cell is set when its value is below the threshold.
pub fn binarize_sweep(map: &ChangeMap, thresholds: &[f64]) -> Vec<BinaryMask> {
    thresholds
        .iter()
        .map(|&tau| BinaryMask::from_fn(map.width(), map.height(), |x, y| map.get(x, y) < tau))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HistogramTransform {
    Invert,
    Gamma { g: f64 },
    Levels { lo: f64, hi: f64 },
}

pub fn histogram_transform(map: &ChangeMap, transform: HistogramTransform) -> Result<ChangeMap> {
    let f: Box<dyn Fn(f64) -> f64> = match transform {
        HistogramTransform::Invert => Box::new(|v| 1.0 - v),
        HistogramTransform::Gamma { g } => {
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::InvalidParams(format!("gamma {g} must be positive")));
            }
            Box::new(move |v: f64| v.powf(g))
        }
        HistogramTransform::Levels { lo, hi } => {
            if !(0.0 <= lo && lo < hi && hi <= 1.0) {
                return Err(Error::InvalidParams(format!(
                    "levels need 0 <= lo < hi <= 1, got ({lo}, {hi})"
                )));
            }
            Box::new(move |v: f64| ((v - lo) / (hi - lo)).clamp(0.0, 1.0))
        }
    };
    ChangeMap::new(
        map.width(),
        map.height(),
        map.data().iter().map(|v| f(*v)).collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    Gradient,
    Shapes,
    Triangles,
}

impl std::str::FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gradient" => Ok(Pattern::Gradient),
            "shapes" => Ok(Pattern::Shapes),
            "triangles" => Ok(Pattern::Triangles),
            other => Err(Error::InvalidParams(format!("unknown pattern {other:?}"))),
        }
    }
}

/// Procedural evaluation maps.
///
/// * gradient: horizontal ramp, 0 at the left column and 1 at the right.
/// * shapes: background 1 with a disc at 0 and a square at 0.5.
/// * triangles: square tiles split along the diagonal, four levels
///   `{0, 1/3, 2/3, 1}`; tiles alternate between the pairs `{0, 1/3}` and
///   `{2/3, 1}` in a checkerboard.
pub fn eval_pattern(kind: Pattern, width: usize, height: usize) -> Result<ChangeMap> {
    match kind {
        Pattern::Gradient => ChangeMap::from_fn(width, height, |x, _| {
            if width > 1 {
                x as f64 / (width - 1) as f64
            } else {
                0.0
            }
        }),
        Pattern::Shapes => {
            let (w, h) = (width as f64, height as f64);
            let side = w.min(h);
            let (dcx, dcy, dr) = (w * 0.3, h * 0.5, side * 0.22);
            let (scx, scy, half) = (w * 0.72, h * 0.5, side * 0.2);
            ChangeMap::from_fn(width, height, |x, y| {
                let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                if (px - dcx).powi(2) + (py - dcy).powi(2) <= dr * dr {
                    0.0
                } else if (px - scx).abs() <= half && (py - scy).abs() <= half {
                    0.5
                } else {
                    1.0
                }
            })
        }
        Pattern::Triangles => {
            let tile = (width.min(height) / 4).max(1);
            ChangeMap::from_fn(width, height, |x, y| {
                let (tx, ty) = (x / tile, y / tile);
                let (lx, ly) = (x % tile, y % tile);
                let upper = usize::from(lx > ly);
                let level = 2 * ((tx + ty) % 2) + upper;
                level as f64 / 3.0
            })
        }
    }
}

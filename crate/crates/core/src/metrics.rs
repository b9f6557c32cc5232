//! Spatial edit-strength measurement and map-adherence scores.
//!
//! A distance map between an input and its edit, averaged over many pairs, is
//! the *biased measurement* of a change map. Subtracting the biased
//! measurement of the all-zero (full-change) map gives `E_M`, the strength the
//! editor actually applied, up to an affine factor. `E_M` is zero where the
//! editor regenerated freely and negative where it preserved.
//!
//! CAM is the Pearson correlation between a map and `E_M`; DAM is the residual
//! norm of the best affine fit of `E_M` to the map. Reports score `E_M`
//! against the strength map `1 − μ`, so an editor that honours the map scores
//! a CAM near +1.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ChangeMap, Field, Image};
use crate::rng::SeedSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistanceMapMethod {
    /// Channel-mean squared difference per pixel.
    PixelSq,
    /// `PixelSq` box-filtered over a `window × window` neighbourhood.
    PatchSq { window: usize },
}

impl Default for DistanceMapMethod {
    fn default() -> Self {
        DistanceMapMethod::PatchSq { window: 5 }
    }
}

pub fn distance_map(a: &Image, b: &Image, method: DistanceMapMethod) -> Result<Field> {
    if a.dims() != b.dims() || a.channels() != b.channels() {
        return Err(Error::ShapeMismatch(format!(
            "{:?}x{} vs {:?}x{}",
            a.dims(),
            a.channels(),
            b.dims(),
            b.channels()
        )));
    }
    let ch = a.channels();
    let (w, h) = a.dims();
    let sq: Vec<f64> = a
        .data()
        .chunks_exact(ch)
        .zip(b.data().chunks_exact(ch))
        .map(|(pa, pb)| {
            pa.iter()
                .zip(pb)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                / ch as f64
        })
        .collect();
    match method {
        DistanceMapMethod::PixelSq => Field::new(w, h, sq),
        DistanceMapMethod::PatchSq { window } => {
            if window == 0 || window % 2 == 0 {
                return Err(Error::InvalidParams(format!(
                    "patch window {window} must be odd and positive"
                )));
            }
            let taps = vec![1.0 / window as f64; window];
            Field::new(w, h, crate::maps::blur(&sq, w, h, &taps))
        }
    }
}

/// Cell-wise mean distance map between each input and its edit.
///
/// Pair `i` is edited with `seed.child(i)`; the reduction runs in pair order,
/// so the result does not depend on how pairs are scheduled across threads.
pub fn biased_measurement<F>(
    editor: F,
    dataset: &[Image],
    map: &ChangeMap,
    n_pairs: usize,
    seed: SeedSpec,
    method: DistanceMapMethod,
) -> Result<Field>
where
    F: Fn(&Image, &ChangeMap, SeedSpec) -> Result<Image> + Sync,
{
    if n_pairs == 0 || n_pairs > dataset.len() {
        return Err(Error::InsufficientData {
            needed: n_pairs,
            available: dataset.len(),
        });
    }
    let pairs: Vec<(&Image, SeedSpec)> = dataset[..n_pairs]
        .iter()
        .enumerate()
        .map(|(i, img)| (img, seed.child(i as u64)))
        .collect();
    biased_measurement_seeded(editor, &pairs, map, method)
}

/// `biased_measurement` over explicit `(input, seed)` pairs.
pub fn biased_measurement_seeded<F>(
    editor: F,
    pairs: &[(&Image, SeedSpec)],
    map: &ChangeMap,
    method: DistanceMapMethod,
) -> Result<Field>
where
    F: Fn(&Image, &ChangeMap, SeedSpec) -> Result<Image> + Sync,
{
    let Some((first, _)) = pairs.first() else {
        return Err(Error::InsufficientData {
            needed: 1,
            available: 0,
        });
    };
    if let Some((img, _)) = pairs.iter().find(|(img, _)| img.dims() != first.dims()) {
        return Err(Error::DimensionMismatch {
            expected: first.dims(),
            found: img.dims(),
        });
    }
    let maps: Vec<Field> = pairs
        .par_iter()
        .map(|(img, s)| {
            let out = editor(img, map, *s)?;
            distance_map(img, &out, method)
        })
        .collect::<Result<_>>()?;
    let (w, h) = first.dims();
    let mut acc = Field::zeros(w, h);
    for m in &maps {
        for (a, v) in acc.data_mut().iter_mut().zip(m.data()) {
            *a += v;
        }
    }
    let n = maps.len() as f64;
    for a in acc.data_mut() {
        *a /= n;
    }
    Ok(acc)
}

/// `E_M = biased(map) − biased(map ≡ 0)` with identical per-pair seeds.
pub fn measure_edit_strength<F>(
    editor: F,
    dataset: &[Image],
    map: &ChangeMap,
    n_pairs: usize,
    seed: SeedSpec,
    method: DistanceMapMethod,
) -> Result<Field>
where
    F: Fn(&Image, &ChangeMap, SeedSpec) -> Result<Image> + Sync,
{
    let black = ChangeMap::constant(map.width(), map.height(), 0.0)?;
    let measured = biased_measurement(&editor, dataset, map, n_pairs, seed, method)?;
    let baseline = biased_measurement(&editor, dataset, &black, n_pairs, seed, method)?;
    let data = measured
        .data()
        .iter()
        .zip(baseline.data())
        .map(|(a, b)| a - b)
        .collect();
    Field::new(map.width(), map.height(), data)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementReport {
    #[serde(skip)]
    pub e_m: Option<Field>,
    pub pairs_used: usize,
    /// Pearson correlation of `E_M` with the strength map `1 − μ`.
    pub cam: f64,
    pub dam: f64,
    pub method: DistanceMapMethod,
    pub width: usize,
    pub height: usize,
}

/// Measures `E_M` and scores it. Fails on a constant map, where CAM is undefined.
pub fn edit_strength_map<F>(
    editor: F,
    dataset: &[Image],
    map: &ChangeMap,
    n_pairs: usize,
    seed: SeedSpec,
    method: DistanceMapMethod,
) -> Result<MeasurementReport>
where
    F: Fn(&Image, &ChangeMap, SeedSpec) -> Result<Image> + Sync,
{
    let e_m = measure_edit_strength(editor, dataset, map, n_pairs, seed, method)?;
    score(map, e_m, n_pairs, method)
}

/// CAM and DAM of a measured `E_M` against `map`.
pub fn score(
    map: &ChangeMap,
    e_m: Field,
    pairs_used: usize,
    method: DistanceMapMethod,
) -> Result<MeasurementReport> {
    let strengths = map.strengths();
    let cam = pearson(&strengths, e_m.data())?;
    let dam = dam_slices(&strengths, e_m.data())?;
    Ok(MeasurementReport {
        width: e_m.width(),
        height: e_m.height(),
        e_m: Some(e_m),
        pairs_used,
        cam,
        dam,
        method,
    })
}

fn check_same_len(m: &[f64], e: &[f64]) -> Result<()> {
    if m.len() != e.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} cells vs {} cells",
            m.len(),
            e.len()
        )));
    }
    if m.is_empty() {
        return Err(Error::ShapeMismatch("empty grids".into()));
    }
    Ok(())
}

fn centered(xs: &[f64]) -> Vec<f64> {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| x - mean).collect()
}

fn is_constant(xs: &[f64]) -> bool {
    xs.iter().all(|x| *x == xs[0])
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pearson correlation of two equally long sequences.
pub fn pearson(m: &[f64], e: &[f64]) -> Result<f64> {
    check_same_len(m, e)?;
    if is_constant(m) || is_constant(e) {
        return Err(Error::DegenerateVariance);
    }
    let (mc, ec) = (centered(m), centered(e));
    let (smm, see) = (dot(&mc, &mc), dot(&ec, &ec));
    if smm <= 0.0 || see <= 0.0 {
        return Err(Error::DegenerateVariance);
    }
    Ok((dot(&mc, &ec) / (smm.sqrt() * see.sqrt())).clamp(-1.0, 1.0))
}

/// `min over (a, b) of ‖M − aE + b·𝟙‖_F`, in closed form.
pub fn dam_slices(m: &[f64], e: &[f64]) -> Result<f64> {
    check_same_len(m, e)?;
    let (mc, ec) = (centered(m), centered(e));
    let see = dot(&ec, &ec);
    let a = if see > 0.0 && !is_constant(e) {
        dot(&mc, &ec) / see
    } else {
        0.0
    };
    Ok(mc
        .iter()
        .zip(&ec)
        .map(|(x, y)| (x - a * y).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Correlation adherence: Pearson correlation of `map` and `e`.
pub fn cam(map: &ChangeMap, e: &Field) -> Result<f64> {
    if map.dims() != e.dims() {
        return Err(Error::DimensionMismatch {
            expected: map.dims(),
            found: e.dims(),
        });
    }
    pearson(map.data(), e.data())
}

/// Distance adherence: residual of the best affine fit of `e` to `map`.
pub fn dam(map: &ChangeMap, e: &Field) -> Result<f64> {
    if map.dims() != e.dims() {
        return Err(Error::DimensionMismatch {
            expected: map.dims(),
            found: e.dims(),
        });
    }
    dam_slices(map.data(), e.data())
}

//! Pixel and latent grids shared by every stage of the editor.
//!
//! All grids are row-major. Multi-channel grids interleave channels per cell,
//! so cell `(x, y)` channel `c` lives at `(y * width + x) * channels + c`.

use crate::error::{Error, Result};

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::InvalidLength { expected, found });
    }
    Ok(())
}

fn check_unit_range(data: &[f64]) -> Result<()> {
    match data
        .iter()
        .position(|v| !v.is_finite() || *v < 0.0 || *v > 1.0)
    {
        Some(index) => Err(Error::ValueOutOfRange {
            index,
            value: data[index],
        }),
        None => Ok(()),
    }
}

fn check_finite(data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Pixel-space image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidChannels(channels));
        }
        check_len(width * height * channels, data.len())?;
        check_unit_range(&data)?;
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
        )
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }
}

/// Per-pixel preservation level: 0 regenerates a pixel completely, 1 keeps it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ChangeMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_len(width * height, data.len())?;
        check_unit_range(&data)?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_all(&self, value: f64) -> bool {
        self.data.iter().all(|v| *v == value)
    }

    /// Effective edit strength per pixel, `1 - μ`.
    pub fn strengths(&self) -> Vec<f64> {
        self.data.iter().map(|v| 1.0 - v).collect()
    }
}

/// Unbounded latent tensor that the sampler operates on.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentGrid {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl LatentGrid {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        check_len(width * height * channels, data.len())?;
        check_finite(&data)?;
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    /// Builds a grid without the finiteness scan; callers guarantee it.
    pub(crate) fn from_raw(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> Shape {
        Shape::new(self.width, self.height, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn same_shape(&self, other: &LatentGrid) -> bool {
        self.shape() == other.shape()
    }

    pub fn squared_distance(&self, other: &LatentGrid) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

impl From<&Image> for LatentGrid {
    fn from(image: &Image) -> Self {
        LatentGrid::from_raw(
            image.width,
            image.height,
            image.channels,
            image.data.clone(),
        )
    }
}

/// Width, height and channel count of a latent grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
}

impl Shape {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
        }
    }

    pub fn len(&self) -> usize {
        self.width * self.height * self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cells(&self) -> usize {
        self.width * self.height
    }
}

/// Two-valued mask over latent cells. Set cells carry the running chain
/// forward; clear cells are refreshed from the noised original.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        check_len(width * height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|b| **b).count()
    }

    pub fn complement(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|b| !b).collect(),
        }
    }

    /// Pointwise `self ⊇ other`.
    pub fn contains(&self, other: &BinaryMask) -> bool {
        self.data.len() == other.data.len()
            && self.data.iter().zip(&other.data).all(|(a, b)| *a || !*b)
    }

    /// Converts to a change map: set cells get `on`, clear cells get `off`.
    pub fn to_change_map(&self, on: f64, off: f64) -> Result<ChangeMap> {
        ChangeMap::new(
            self.width,
            self.height,
            self.data
                .iter()
                .map(|b| if *b { on } else { off })
                .collect(),
        )
    }
}

/// Unbounded single-channel real grid, e.g. a distance map or E_M.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Field {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_len(width * height, data.len())?;
        check_finite(&data)?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

/// Checks that `map` can drive an edit of `image`.
pub fn validate_pair(image: &Image, map: &ChangeMap) -> Result<()> {
    if image.dims() != map.dims() {
        return Err(Error::DimensionMismatch {
            expected: image.dims(),
            found: map.dims(),
        });
    }
    check_unit_range(&image.data)?;
    check_unit_range(&map.data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_pair_in_range_is_accepted() {
        let image = Image::filled(16, 16, 1, 0.5).unwrap();
        let map = ChangeMap::constant(16, 16, 0.5).unwrap();
        assert_eq!(validate_pair(&image, &map), Ok(()));
    }

    #[test]
    fn mismatched_dims_are_rejected() {
        let image = Image::filled(16, 16, 1, 0.5).unwrap();
        let map = ChangeMap::constant(8, 8, 0.5).unwrap();
        assert!(matches!(
            validate_pair(&image, &map),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn out_of_range_map_reports_first_index() {
        let mut data = vec![0.5; 16];
        data[5] = 1.2;
        data[9] = -0.1;
        assert_eq!(
            ChangeMap::new(4, 4, data),
            Err(Error::ValueOutOfRange {
                index: 5,
                value: 1.2
            })
        );
    }

    #[test]
    fn non_finite_values_are_rejected() {
        assert!(Image::new(2, 1, 1, vec![0.0, f64::NAN]).is_err());
        assert_eq!(
            LatentGrid::new(2, 1, 1, vec![3.0, f64::INFINITY]),
            Err(Error::NonFinite { index: 1 })
        );
        assert!(LatentGrid::new(2, 1, 1, vec![3.0, -7.5]).is_ok());
    }

    #[test]
    fn image_rejects_bad_channel_count() {
        assert_eq!(
            Image::new(1, 1, 2, vec![0.0, 0.0]),
            Err(Error::InvalidChannels(2))
        );
    }

    #[test]
    fn mask_containment() {
        let big = BinaryMask::new(2, 1, vec![true, true]).unwrap();
        let small = BinaryMask::new(2, 1, vec![false, true]).unwrap();
        assert!(big.contains(&small));
        assert!(!small.contains(&big));
        assert_eq!(small.complement().data(), &[true, false]);
    }
}

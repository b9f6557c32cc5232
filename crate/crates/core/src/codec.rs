//! Pixel ↔ latent translation and change-map downsampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ChangeMap, Image, LatentGrid};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Codec {
    /// Latent equals the image.
    #[default]
    Identity,
    /// f×f block means on encode, nearest-neighbour upsampling on decode.
    Pool { factor: usize },
    /// Per-pixel `scale · v`, so that unit-variance noise is on the scale of
    /// the image content. Round trips are exact for power-of-two scales.
    Scaled { scale: f64 },
}

impl Codec {
    pub fn factor(self) -> usize {
        match self {
            Codec::Identity | Codec::Scaled { .. } => 1,
            Codec::Pool { factor } => factor,
        }
    }

    /// Latent dimensions for an image of `width × height`.
    pub fn latent_dims(self, width: usize, height: usize) -> Result<(usize, usize)> {
        if let Codec::Scaled { scale } = self {
            if !(scale.is_finite() && scale > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "latent scale {scale} must be positive"
                )));
            }
        }
        let f = self.factor();
        if f == 0 || !width.is_multiple_of(f) || !height.is_multiple_of(f) {
            return Err(Error::IndivisibleDimensions {
                factor: f,
                width,
                height,
            });
        }
        Ok((width / f, height / f))
    }
}

/// Block means over `f × f` tiles of a `width × height × channels` buffer.
fn pool(data: &[f64], width: usize, height: usize, channels: usize, f: usize) -> Vec<f64> {
    let (lw, lh) = (width / f, height / f);
    let norm = (f * f) as f64;
    let mut out = vec![0.0; lw * lh * channels];
    for ly in 0..lh {
        for lx in 0..lw {
            for c in 0..channels {
                let mut acc = 0.0;
                for dy in 0..f {
                    let row = (ly * f + dy) * width;
                    for dx in 0..f {
                        acc += data[(row + lx * f + dx) * channels + c];
                    }
                }
                out[(ly * lw + lx) * channels + c] = acc / norm;
            }
        }
    }
    out
}

pub fn encode(image: &Image, codec: Codec) -> Result<LatentGrid> {
    let (lw, lh) = codec.latent_dims(image.width(), image.height())?;
    match codec {
        Codec::Identity => Ok(LatentGrid::from(image)),
        Codec::Pool { factor } => LatentGrid::new(
            lw,
            lh,
            image.channels(),
            pool(
                image.data(),
                image.width(),
                image.height(),
                image.channels(),
                factor,
            ),
        ),
        Codec::Scaled { scale } => LatentGrid::new(
            lw,
            lh,
            image.channels(),
            image.data().iter().map(|v| scale * v).collect(),
        ),
    }
}

pub fn decode(latent: &LatentGrid, codec: Codec) -> Result<Image> {
    codec.latent_dims(latent.width(), latent.height())?;
    let f = codec.factor();
    let unscale = |v: f64| match codec {
        Codec::Scaled { scale } => v / scale,
        _ => v,
    };
    let (w, h, ch) = (latent.width() * f, latent.height() * f, latent.channels());
    let src = latent.data();
    let mut data = Vec::with_capacity(w * h * ch);
    for y in 0..h {
        for x in 0..w {
            let cell = (y / f) * latent.width() + x / f;
            for c in 0..ch {
                data.push(unscale(src[cell * ch + c]).clamp(0.0, 1.0));
            }
        }
    }
    Image::new(w, h, ch, data)
}

/// Area-averages the map down to latent resolution.
pub fn downsample_map(map: &ChangeMap, codec: Codec) -> Result<ChangeMap> {
    let (lw, lh) = codec.latent_dims(map.width(), map.height())?;
    match codec {
        Codec::Identity | Codec::Scaled { .. } => Ok(map.clone()),
        Codec::Pool { factor } => {
            let data = pool(map.data(), map.width(), map.height(), 1, factor)
                .into_iter()
                .map(|v| v.clamp(0.0, 1.0))
                .collect();
            ChangeMap::new(lw, lh, data)
        }
    }
}

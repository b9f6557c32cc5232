//! Ready-made mixtures and datasets for experiments and tests.

use rand::Rng;

use crate::codec::{encode, Codec};
use crate::denoiser::{Prompt, TemplateMixture};
use crate::diffusion::EditOptions;
use crate::error::Result;
use crate::grid::Image;
use crate::rng::{Purpose, SeedSpec};
use crate::schedule::{build_schedule, NoiseSchedule};

/// Class labels of [`class_mixture`], in template order.
pub const CLASSES: [&str; 4] = ["flat", "stripes", "checker", "ring"];

/// Pixel-space template for `label`.
pub fn template(label: &str, width: usize, height: usize, channels: usize) -> Image {
    let mut data = Vec::with_capacity(width * height * channels);
    let (cx, cy) = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);
    let r0 = width.min(height) as f64 / 4.0;
    for y in 0..height {
        for x in 0..width {
            let v = match label {
                "flat" => 0.5,
                "stripes" => {
                    if (x / 2) % 2 == 0 {
                        0.85
                    } else {
                        0.15
                    }
                }
                "checker" => {
                    if ((x / 4) + (y / 4)) % 2 == 0 {
                        0.8
                    } else {
                        0.2
                    }
                }
                _ => {
                    let r = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
                    0.5 + 0.35 * (r / r0 * std::f64::consts::PI).cos()
                }
            };
            data.extend(std::iter::repeat_n(v, channels));
        }
    }
    Image::new(width, height, channels, data).expect("template values lie in the unit range")
}

/// One template per entry of [`CLASSES`], encoded with `codec`, equal priors.
/// `spread` is in latent units.
///
/// A class prompt selects a single template, which makes the denoiser act on
/// every cell independently.
pub fn class_mixture(
    width: usize,
    height: usize,
    channels: usize,
    spread: f64,
    codec: Codec,
) -> Result<TemplateMixture> {
    let templates = CLASSES
        .iter()
        .map(|l| encode(&template(l, width, height, channels), codec))
        .collect::<Result<_>>()?;
    let n = CLASSES.len();
    TemplateMixture::new(
        templates,
        vec![1.0 / n as f64; n],
        CLASSES.iter().map(|l| l.to_string()).collect(),
    )?
    .with_spread(spread)
}

/// Latent scale of [`Setup`]: pixel range maps to `[0, 4]`.
pub const LATENT_SCALE: f64 = 4.0;

/// Template spread of [`Setup`], in latent units.
pub const SPREAD: f64 = 1.0;

/// Linear-β schedule with endpoints `(1.5/k, 10/k)`, capped below one.
pub fn schedule(k: usize) -> Result<NoiseSchedule> {
    let kf = k.max(1) as f64;
    build_schedule(k, (1.5 / kf).min(0.999), (10.0 / kf).min(0.999))
}

/// A complete, consistently scaled experiment configuration.
#[derive(Debug, Clone)]
pub struct Setup {
    pub mixture: TemplateMixture,
    pub schedule: NoiseSchedule,
    pub codec: Codec,
    pub prompt: Prompt,
}

impl Setup {
    /// `flat`-class prompt, [`LATENT_SCALE`] codec, [`SPREAD`], [`schedule`].
    pub fn new(width: usize, height: usize, channels: usize, k: usize) -> Result<Self> {
        let codec = Codec::Scaled {
            scale: LATENT_SCALE,
        };
        Ok(Self {
            mixture: class_mixture(width, height, channels, SPREAD, codec)?,
            schedule: schedule(k)?,
            codec,
            prompt: Prompt::class(CLASSES[0]),
        })
    }

    pub fn options(&self, seed: SeedSpec) -> EditOptions {
        EditOptions::new(self.schedule.k(), seed).with_codec(self.codec)
    }
}

/// Smooth random images: a mean level plus a few low-frequency waves.
pub fn smooth_dataset(
    n: usize,
    width: usize,
    height: usize,
    channels: usize,
    seed: SeedSpec,
) -> Vec<Image> {
    (0..n)
        .map(|i| {
            let mut rng = seed.stream(i as u64, Purpose::Data);
            let base: f64 = rng.random_range(0.4..0.6);
            let waves: Vec<[f64; 4]> = (0..3)
                .map(|_| {
                    [
                        rng.random_range(0.3..0.7),
                        rng.random_range(0.0..std::f64::consts::TAU),
                        rng.random_range(-0.5..0.5),
                        rng.random_range(-0.5..0.5),
                    ]
                })
                .collect();
            Image::from_fn(width, height, channels, |x, y, c| {
                let v: f64 = waves
                    .iter()
                    .map(|[a, p, fx, fy]| a * (fx * x as f64 + fy * y as f64 + p + c as f64).sin())
                    .sum();
                (base + v).clamp(0.0, 1.0)
            })
            .expect("values are clamped to the unit range")
        })
        .collect()
}

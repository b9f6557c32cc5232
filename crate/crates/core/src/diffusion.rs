//! Differential image-to-image inference.
//!
//! The change map is turned into a family of nested binary masks, one per
//! timestep. At level `t` a cell whose preservation value is below
//! `(k − t)/k` keeps evolving along the chain; every other cell is refreshed
//! from the original noised to level `t`. A cell with value `μ` is therefore
//! pinned to the original until its last `≈(1 − μ)·k` steps, which is exactly
//! a standard edit of strength `1 − μ` restricted to that cell.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::codec::{decode, downsample_map, encode, Codec};
use crate::denoiser::{denoise_step, Denoiser, Prompt, Sampler};
use crate::error::{Error, Result};
use crate::grid::{validate_pair, BinaryMask, ChangeMap, Image, LatentGrid};
use crate::rng::SeedSpec;
use crate::schedule::{add_noise, strength_to_start, NoiseSchedule};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nesting {
    /// Threshold masks `μ < (k − t)/k`; a cell is refreshed from the original
    /// at every level down to its entry level.
    #[default]
    Nested,
    /// Ablation: a cell is refreshed from the original only at the single
    /// level whose band contains its value.
    Band,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EditOptions {
    pub k: usize,
    pub seed: SeedSpec,
    pub sampler: Sampler,
    pub nesting: Nesting,
    pub skipping: bool,
    pub codec: Codec,
}

impl EditOptions {
    pub fn new(k: usize, seed: SeedSpec) -> Self {
        Self {
            k,
            seed,
            sampler: Sampler::Deterministic,
            nesting: Nesting::Nested,
            skipping: false,
            codec: Codec::Identity,
        }
    }

    pub fn with_seed(mut self, seed: SeedSpec) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_sampler(mut self, sampler: Sampler) -> Self {
        self.sampler = sampler;
        self
    }

    pub fn with_nesting(mut self, nesting: Nesting) -> Self {
        self.nesting = nesting;
        self
    }

    pub fn with_skipping(mut self, skipping: bool) -> Self {
        self.skipping = skipping;
        self
    }

    pub fn with_codec(mut self, codec: Codec) -> Self {
        self.codec = codec;
        self
    }

    fn check(&self, schedule: &NoiseSchedule) -> Result<()> {
        if self.k != schedule.k() {
            return Err(Error::InvalidOptions(format!(
                "options ask for {} steps but the schedule has {}",
                self.k,
                schedule.k()
            )));
        }
        if self.skipping && self.nesting == Nesting::Band {
            return Err(Error::InvalidOptions(
                "skipping requires nested masks".into(),
            ));
        }
        Ok(())
    }
}

/// Machine-readable account of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Loop iterations executed after the entry denoise.
    pub steps_executed: usize,
    /// Level the chain was entered at.
    #[serde(rename = "L")]
    pub start_level: usize,
    pub k: usize,
    /// Cells carried forward from the running chain, indexed by timestep `0..k`.
    pub mask_counts: Vec<usize>,
    pub wall_ms: f64,
    pub seed: u64,
    pub options: EditOptions,
    /// Number of edit passes, for the iterative baselines.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub passes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edit {
    pub image: Image,
    pub report: RunReport,
}

fn threshold(t: usize, k: usize) -> f64 {
    (k - t) as f64 / k as f64
}

/// Cells whose preservation value is strictly below `(k − t)/k`.
pub fn threshold_mask(mu_s: &ChangeMap, t: usize, k: usize) -> BinaryMask {
    debug_assert!(t < k);
    let level = threshold(t, k);
    BinaryMask::from_fn(mu_s.width(), mu_s.height(), |x, y| mu_s.get(x, y) < level)
}

/// Cells with `(k − t − 1)/k < μ ≤ (k − t)/k`.
pub fn band_mask(mu_s: &ChangeMap, t: usize, k: usize) -> BinaryMask {
    debug_assert!(t < k);
    let hi = threshold(t, k);
    let lo = (k - t - 1) as f64 / k as f64;
    BinaryMask::from_fn(mu_s.width(), mu_s.height(), |x, y| {
        let v = mu_s.get(x, y);
        lo < v && v <= hi
    })
}

/// Per-cell select: set mask cells take `z_prev`, clear cells take `z_noised`.
pub fn inject(z_prev: &LatentGrid, z_noised: &LatentGrid, mask: &BinaryMask) -> Result<LatentGrid> {
    if !z_prev.same_shape(z_noised) {
        return Err(Error::ShapeMismatch(format!(
            "{:?} vs {:?}",
            z_prev.shape(),
            z_noised.shape()
        )));
    }
    if mask.dims() != (z_prev.width(), z_prev.height()) {
        return Err(Error::ShapeMismatch(format!(
            "mask {:?} vs latent {}x{}",
            mask.dims(),
            z_prev.width(),
            z_prev.height()
        )));
    }
    let ch = z_prev.channels();
    let data = z_prev
        .data()
        .iter()
        .zip(z_noised.data())
        .enumerate()
        .map(|(i, (p, n))| if mask.data()[i / ch] { *p } else { *n })
        .collect();
    LatentGrid::new(z_prev.width(), z_prev.height(), ch, data)
}

/// Lowest level from which every remaining threshold mask is empty.
///
/// All iterations above this level copy the noised original wholesale, so a
/// chain entered here reproduces the full chain exactly. For a map minimum
/// `m` this is `⌊(1 − m)·k⌋` when `(1 − m)·k` is an integer and one level
/// higher otherwise.
pub fn skip_start(mu_s: &ChangeMap, k: usize) -> usize {
    let min = mu_s.min();
    (0..k).find(|&t| min >= threshold(t, k)).unwrap_or(k)
}

/// The mask handed to `inject` at level `t`.
fn carry_mask(mu_s: &ChangeMap, t: usize, k: usize, nesting: Nesting) -> BinaryMask {
    match nesting {
        Nesting::Nested => threshold_mask(mu_s, t, k),
        Nesting::Band => band_mask(mu_s, t, k).complement(),
    }
}

/// Edits `image` with per-pixel strength `1 − map`.
pub fn differential_edit<D: Denoiser + ?Sized>(
    image: &Image,
    map: &ChangeMap,
    prompt: &Prompt,
    denoiser: &D,
    schedule: &NoiseSchedule,
    opts: &EditOptions,
) -> Result<Edit> {
    let clock = Instant::now();
    validate_pair(image, map)?;
    opts.check(schedule)?;
    let k = opts.k;
    let mu_s = downsample_map(map, opts.codec)?;
    let mask_counts: Vec<usize> = (0..k)
        .map(|t| carry_mask(&mu_s, t, k, opts.nesting).count())
        .collect();
    let report = |start_level, steps_executed, clock: Instant| RunReport {
        steps_executed,
        start_level,
        k,
        mask_counts: mask_counts.clone(),
        wall_ms: clock.elapsed().as_secs_f64() * 1e3,
        seed: opts.seed.master_seed,
        options: *opts,
        passes: None,
    };

    if opts.nesting == Nesting::Nested && map.is_all(1.0) {
        return Ok(Edit {
            image: image.clone(),
            report: report(0, 0, clock),
        });
    }

    let z_init = encode(image, opts.codec)?;
    let start = if opts.skipping {
        skip_start(&mu_s, k)
    } else {
        k
    };
    let step = |z: &LatentGrid, t: usize| {
        denoise_step(z, t, prompt, denoiser, schedule, opts.sampler, opts.seed)
    };

    let mut z = step(&add_noise(&z_init, start, schedule, opts.seed)?, start)?;
    for t in (0..start).rev() {
        let noised = add_noise(&z_init, t, schedule, opts.seed)?;
        let mask = carry_mask(&mu_s, t, k, opts.nesting);
        let mixed = inject(&z, &noised, &mask)?;
        z = step(&mixed, t)?;
    }
    Ok(Edit {
        image: decode(&z, opts.codec)?,
        report: report(start, start, clock),
    })
}

/// `differential_edit` entering the chain at the first level any cell moves.
pub fn differential_edit_skipping<D: Denoiser + ?Sized>(
    image: &Image,
    map: &ChangeMap,
    prompt: &Prompt,
    denoiser: &D,
    schedule: &NoiseSchedule,
    opts: &EditOptions,
) -> Result<Edit> {
    differential_edit(
        image,
        map,
        prompt,
        denoiser,
        schedule,
        &opts.with_skipping(true),
    )
}

/// Uniform-strength edit: noise the whole image to `⌊strength·k⌋` and denoise.
pub fn standard_img2img<D: Denoiser + ?Sized>(
    image: &Image,
    strength: f64,
    prompt: &Prompt,
    denoiser: &D,
    schedule: &NoiseSchedule,
    opts: &EditOptions,
) -> Result<Edit> {
    if !(0.0..=1.0).contains(&strength) {
        return Err(Error::InvalidParams(format!(
            "strength {strength} outside [0, 1]"
        )));
    }
    img2img_from_level(
        image,
        strength_to_start(strength, opts.k),
        prompt,
        denoiser,
        schedule,
        opts,
    )
}

/// Uniform edit entered at an explicit level.
pub fn img2img_from_level<D: Denoiser + ?Sized>(
    image: &Image,
    level: usize,
    prompt: &Prompt,
    denoiser: &D,
    schedule: &NoiseSchedule,
    opts: &EditOptions,
) -> Result<Edit> {
    let clock = Instant::now();
    opts.check(schedule)?;
    schedule.check_level(level)?;
    let z_init = encode(image, opts.codec)?;
    let mut z = add_noise(&z_init, level, schedule, opts.seed)?;
    for t in (1..=level).rev() {
        z = denoise_step(&z, t, prompt, denoiser, schedule, opts.sampler, opts.seed)?;
    }
    let (lw, lh) = (z_init.width(), z_init.height());
    Ok(Edit {
        image: decode(&z, opts.codec)?,
        report: RunReport {
            steps_executed: level,
            start_level: level,
            k: opts.k,
            mask_counts: (0..opts.k)
                .map(|t| if t < level { lw * lh } else { 0 })
                .collect(),
            wall_ms: clock.elapsed().as_secs_f64() * 1e3,
            seed: opts.seed.master_seed,
            options: *opts,
            passes: None,
        },
    })
}

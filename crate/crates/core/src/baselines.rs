//! Alternative ways of honouring a change map, kept for comparison.
//!
//! The iterative baselines quantize the map into `K` equal-width bins and run
//! one single-strength masked edit per non-empty bin, strongest first. Each
//! masked edit is a differential edit whose map holds `1 − strength` on the
//! bin's pixels and `1` elsewhere.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::codec::{decode, downsample_map, encode};
use crate::denoiser::{denoise_step_scaled, Denoiser, Prompt};
use crate::diffusion::{differential_edit, Edit, EditOptions, RunReport};
use crate::error::{Error, Result};
use crate::grid::{validate_pair, ChangeMap, Image, LatentGrid};
use crate::rng::SeedSpec;
use crate::schedule::{add_noise_scaled, NoiseSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaselineKind {
    Composition { levels: usize },
    Tiling { levels: usize },
    FiveTiles,
    MaskedNoise,
}

/// Bin index of `v` among `levels` equal-width bins on `[0, 1]`.
pub fn quantize(v: f64, levels: usize) -> usize {
    ((v * levels as f64).floor() as usize).min(levels - 1)
}

/// Strength applied to bin `i`: one minus the bin midpoint.
pub fn level_strength(i: usize, levels: usize) -> f64 {
    1.0 - (i as f64 + 0.5) / levels as f64
}

/// Outcome of an iterative baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct IterativeRun {
    pub image: Image,
    pub report: RunReport,
    /// Bin index handled by each pass, in execution order.
    pub pass_levels: Vec<usize>,
    pub pass_outputs: Vec<Image>,
    /// Per pixel: how many passes wrote their output into it.
    pub provenance: Vec<u32>,
}

#[derive(Clone, Copy)]
enum Iteration {
    Composition,
    Tiling,
}

#[allow(clippy::too_many_arguments)]
fn iterate<D: Denoiser + ?Sized>(
    image: &Image,
    map: &ChangeMap,
    prompt: &Prompt,
    denoiser: &D,
    schedule: &NoiseSchedule,
    levels: usize,
    opts: &EditOptions,
    mode: Iteration,
) -> Result<IterativeRun> {
    if levels == 0 {
        return Err(Error::InvalidParams("K must be at least 1".into()));
    }
    validate_pair(image, map)?;
    let clock = Instant::now();
    let opts = opts.with_skipping(false);
    let bins: Vec<usize> = map.data().iter().map(|v| quantize(*v, levels)).collect();
    let mut present = vec![false; levels];
    for b in &bins {
        present[*b] = true;
    }

    let (w, h) = image.dims();
    let ch = image.channels();
    let mut current = image.clone();
    let mut provenance = vec![0u32; w * h];
    let mut pass_levels = Vec::new();
    let mut pass_outputs = Vec::new();
    let mut steps = 0;
    let mut start = 0;
    let mut mask_counts = vec![0usize; opts.k];

    for level in (0..levels).filter(|&i| present[i]) {
        let strength = level_strength(level, levels);
        let pass_map = ChangeMap::new(
            w,
            h,
            bins.iter()
                .map(|b| if *b == level { 1.0 - strength } else { 1.0 })
                .collect(),
        )?;
        let Edit { image: out, report } =
            differential_edit(&current, &pass_map, prompt, denoiser, schedule, &opts)?;
        steps += report.steps_executed;
        start = start.max(report.start_level);
        for (acc, c) in mask_counts.iter_mut().zip(&report.mask_counts) {
            *acc += c;
        }
        current = match mode {
            Iteration::Composition => {
                for (p, b) in provenance.iter_mut().zip(&bins) {
                    *p += u32::from(*b == level);
                }
                out
            }
            Iteration::Tiling => {
                let mut data = current.data().to_vec();
                for (px, b) in bins.iter().enumerate() {
                    if *b == level {
                        provenance[px] += 1;
                        data[px * ch..(px + 1) * ch]
                            .copy_from_slice(&out.data()[px * ch..(px + 1) * ch]);
                    }
                }
                Image::new(w, h, ch, data)?
            }
        };
        pass_levels.push(level);
        pass_outputs.push(current.clone());
    }

    Ok(IterativeRun {
        report: RunReport {
            steps_executed: steps,
            start_level: start,
            k: opts.k,
            mask_counts,
            wall_ms: clock.elapsed().as_secs_f64() * 1e3,
            seed: opts.seed.master_seed,
            options: opts,
            passes: Some(pass_levels.len()),
        },
        image: current,
        pass_levels,
        pass_outputs,
        provenance,
    })
}

/// Applies one masked edit per level to the full previous output.
pub fn composition_edit<D: Denoiser + ?Sized>(
    image: &Image,
    map: &ChangeMap,
    prompt: &Prompt,
    denoiser: &D,
    schedule: &NoiseSchedule,
    levels: usize,
    opts: &EditOptions,
) -> Result<IterativeRun> {
    iterate(
        image,
        map,
        prompt,
        denoiser,
        schedule,
        levels,
        opts,
        Iteration::Composition,
    )
}

/// Like composition, but after each pass only the pass's own pixels are kept.
pub fn tiling_edit<D: Denoiser + ?Sized>(
    image: &Image,
    map: &ChangeMap,
    prompt: &Prompt,
    denoiser: &D,
    schedule: &NoiseSchedule,
    levels: usize,
    opts: &EditOptions,
) -> Result<IterativeRun> {
    iterate(
        image,
        map,
        prompt,
        denoiser,
        schedule,
        levels,
        opts,
        Iteration::Tiling,
    )
}

pub fn five_tiles_edit<D: Denoiser + ?Sized>(
    image: &Image,
    map: &ChangeMap,
    prompt: &Prompt,
    denoiser: &D,
    schedule: &NoiseSchedule,
    opts: &EditOptions,
) -> Result<IterativeRun> {
    tiling_edit(image, map, prompt, denoiser, schedule, 5, opts)
}

/// Forward step of the masked-noise baseline:
/// `√ᾱ_t·z0 + (1 − μ_s)·√(1 − ᾱ_t)·ε` with ε from the usual forward stream.
pub fn masked_add_noise(
    z0: &LatentGrid,
    mu_s: &ChangeMap,
    t: usize,
    schedule: &NoiseSchedule,
    seed: SeedSpec,
) -> Result<LatentGrid> {
    if mu_s.dims() != (z0.width(), z0.height()) {
        return Err(Error::DimensionMismatch {
            expected: (z0.width(), z0.height()),
            found: mu_s.dims(),
        });
    }
    add_noise_scaled(z0, t, schedule, seed, Some(&mu_s.strengths()))
}

/// Full-strength chain with every noise draw scaled per cell by `1 − μ_s`.
pub fn masked_noise_edit<D: Denoiser + ?Sized>(
    image: &Image,
    map: &ChangeMap,
    prompt: &Prompt,
    denoiser: &D,
    schedule: &NoiseSchedule,
    opts: &EditOptions,
) -> Result<Edit> {
    let clock = Instant::now();
    validate_pair(image, map)?;
    let opts = opts.with_skipping(false);
    if opts.k != schedule.k() {
        return Err(Error::InvalidOptions(format!(
            "options ask for {} steps but the schedule has {}",
            opts.k,
            schedule.k()
        )));
    }
    let k = opts.k;
    let mu_s = downsample_map(map, opts.codec)?;
    let scale = mu_s.strengths();
    let z_init = encode(image, opts.codec)?;
    let mut z = masked_add_noise(&z_init, &mu_s, k, schedule, opts.seed)?;
    for t in (1..=k).rev() {
        z = denoise_step_scaled(
            &z,
            t,
            prompt,
            denoiser,
            schedule,
            opts.sampler,
            opts.seed,
            Some(&scale),
        )?;
    }
    let cells = mu_s.width() * mu_s.height();
    Ok(Edit {
        image: decode(&z, opts.codec)?,
        report: RunReport {
            steps_executed: k,
            start_level: k,
            k,
            mask_counts: vec![cells; k],
            wall_ms: clock.elapsed().as_secs_f64() * 1e3,
            seed: opts.seed.master_seed,
            options: opts,
            passes: None,
        },
    })
}

/// Two-strength competitor: pixels below `threshold` are fully regenerated,
/// the rest kept.
pub fn binarized_edit<D: Denoiser + ?Sized>(
    image: &Image,
    map: &ChangeMap,
    threshold: f64,
    prompt: &Prompt,
    denoiser: &D,
    schedule: &NoiseSchedule,
    opts: &EditOptions,
) -> Result<Edit> {
    let binary = ChangeMap::new(
        map.width(),
        map.height(),
        map.data()
            .iter()
            .map(|v| if *v < threshold { 0.0 } else { 1.0 })
            .collect(),
    )?;
    differential_edit(image, &binary, prompt, denoiser, schedule, opts)
}

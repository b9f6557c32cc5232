//! Linear-β noise schedules, the forward process, and strength ↔ level mapping.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::LatentGrid;
use crate::rng::{derive_noise, Purpose, SeedSpec};

/// Cumulative signal fractions `alpha_bar[t]` for `t = 0..=k`.
///
/// Level 0 is clean (`alpha_bar[0] == 1`), level `k` is close to pure noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    k: usize,
    betas: Vec<f64>,
    alpha_bar: Vec<f64>,
}

/// Terminal signal fraction must fall below this.
pub const TERMINAL_ALPHA_BAR: f64 = 0.01;

impl NoiseSchedule {
    /// Linear β between `beta_min` and `beta_max` over `k` steps.
    pub fn linear(k: usize, beta_min: f64, beta_max: f64) -> Result<Self> {
        build_schedule(k, beta_min, beta_max)
    }

    /// The β range a 1000-step DDPM schedule (1e-4..0.02) would use when
    /// compressed into `k` steps, with β capped at 0.999.
    pub fn default_betas(k: usize) -> (f64, f64) {
        let scale = 1000.0 / k.max(1) as f64;
        ((1e-4 * scale).min(0.999), (0.02 * scale).min(0.999))
    }

    pub fn default_for(k: usize) -> Result<Self> {
        let (lo, hi) = Self::default_betas(k);
        build_schedule(k, lo, hi)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bar[t]
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bar
    }

    /// β_t for `t` in `1..=k`.
    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    pub fn check_level(&self, t: usize) -> Result<()> {
        if t > self.k {
            return Err(Error::TimestepOutOfRange { t, k: self.k });
        }
        Ok(())
    }
}

pub fn build_schedule(k: usize, beta_min: f64, beta_max: f64) -> Result<NoiseSchedule> {
    if k == 0 {
        return Err(Error::InvalidSchedule("k must be at least 1".into()));
    }
    if !(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0) {
        return Err(Error::InvalidSchedule(format!(
            "need 0 < beta_min <= beta_max < 1, got [{beta_min}, {beta_max}]"
        )));
    }
    let betas: Vec<f64> = if k == 1 {
        vec![beta_max]
    } else {
        (0..k)
            .map(|i| beta_min + (beta_max - beta_min) * i as f64 / (k - 1) as f64)
            .collect()
    };
    let mut alpha_bar = Vec::with_capacity(k + 1);
    alpha_bar.push(1.0);
    let mut acc = 1.0;
    for beta in &betas {
        acc *= 1.0 - beta;
        alpha_bar.push(acc);
    }
    if alpha_bar
        .windows(2)
        .any(|w| w[1].partial_cmp(&w[0]) != Some(Ordering::Less))
    {
        return Err(Error::InvalidSchedule(
            "alpha_bar is not strictly decreasing".into(),
        ));
    }
    if alpha_bar[k].partial_cmp(&0.0) != Some(Ordering::Greater) {
        return Err(Error::InvalidSchedule("alpha_bar underflowed to 0".into()));
    }
    if alpha_bar[k] >= TERMINAL_ALPHA_BAR {
        return Err(Error::InvalidSchedule(format!(
            "terminal alpha_bar {} is not below {TERMINAL_ALPHA_BAR}",
            alpha_bar[k]
        )));
    }
    Ok(NoiseSchedule {
        k,
        betas,
        alpha_bar,
    })
}

/// `sqrt(ᾱ_t)·z0 + sqrt(1 − ᾱ_t)·ε` with ε from the `(seed, t, forward)` stream.
pub fn add_noise(
    z0: &LatentGrid,
    t: usize,
    schedule: &NoiseSchedule,
    seed: SeedSpec,
) -> Result<LatentGrid> {
    add_noise_scaled(z0, t, schedule, seed, None)
}

/// `add_noise` with ε multiplied per latent cell by `cell_scale` (shared
/// across channels).
pub(crate) fn add_noise_scaled(
    z0: &LatentGrid,
    t: usize,
    schedule: &NoiseSchedule,
    seed: SeedSpec,
    cell_scale: Option<&[f64]>,
) -> Result<LatentGrid> {
    schedule.check_level(t)?;
    if t == 0 {
        return Ok(z0.clone());
    }
    let ab = schedule.alpha_bar(t);
    let (signal, noise_std) = (ab.sqrt(), (1.0 - ab).sqrt());
    let shape = z0.shape();
    let eps = derive_noise(seed, t, Purpose::Forward, shape);
    let channels = shape.channels;
    let data = z0
        .data()
        .iter()
        .zip(eps.data())
        .enumerate()
        .map(|(i, (z, e))| {
            let e = match cell_scale {
                Some(s) => e * s[i / channels],
                None => *e,
            };
            signal * z + noise_std * e
        })
        .collect();
    Ok(LatentGrid::from_raw(
        shape.width,
        shape.height,
        channels,
        data,
    ))
}

/// Entry level of a standard edit at `strength`: `⌊strength·k⌋`.
///
/// Products within 1e-9 of an integer snap to it, so `(1 − 0.9)·50` enters at 5
/// rather than 4.
pub fn strength_to_start(strength: f64, k: usize) -> usize {
    let x = strength.clamp(0.0, 1.0) * k as f64;
    let nearest = x.round();
    let level = if (x - nearest).abs() < 1e-9 {
        nearest
    } else {
        x.floor()
    };
    (level as usize).min(k)
}

//! Denoiser interface and an exactly solvable Gaussian-mixture denoiser.
//!
//! The data model is a mixture of isotropic Gaussians centred on template
//! grids, `x₀ ~ Σᵢ πᵢ N(Tᵢ, s²I)`. With `s = 0` the components are point
//! masses. Under the forward process `x_t = √ᾱ x₀ + √(1−ᾱ) ε` each component
//! stays Gaussian, so `E[x₀ | x_t]` has a closed form:
//!
//! ```text
//! vᵢ = ᾱ s² + (1 − ᾱ)                      marginal variance per cell
//! wᵢ ∝ πᵢ exp(−‖x_t − √ᾱ Tᵢ‖² / 2v)        responsibilities
//! E[x₀ | x_t, i] = Tᵢ + (√ᾱ s² / v)(x_t − √ᾱ Tᵢ)
//! ```
//!
//! A prompt restricts the admissible components to a set of class labels.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::LatentGrid;
use crate::rng::{derive_noise, Purpose, SeedSpec};
use crate::schedule::NoiseSchedule;

/// Predicts clean content from a noisy latent at a given level.
pub trait Denoiser: Sync {
    fn predict_x0(
        &self,
        z_t: &LatentGrid,
        t: usize,
        prompt: &Prompt,
        schedule: &NoiseSchedule,
    ) -> Result<LatentGrid>;
}

/// Class filter standing in for a text prompt. Empty means unconditional.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    classes: BTreeSet<String>,
}

impl Prompt {
    pub fn unconditional() -> Self {
        Self::default()
    }

    pub fn class(label: impl Into<String>) -> Self {
        Self {
            classes: std::iter::once(label.into()).collect(),
        }
    }

    pub fn classes<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            classes: labels.into_iter().map(Into::into).collect(),
        }
    }

    pub fn is_unconditional(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn admits(&self, label: &str) -> bool {
        self.classes.is_empty() || self.classes.contains(label)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.classes.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateMixture {
    templates: Vec<LatentGrid>,
    priors: Vec<f64>,
    labels: Vec<String>,
    spread: f64,
}

impl TemplateMixture {
    /// Point-mass mixture. Priors must be positive and sum to 1 within 1e-12.
    pub fn new(templates: Vec<LatentGrid>, priors: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if templates.is_empty() {
            return Err(Error::InvalidMixture("no templates".into()));
        }
        if priors.len() != templates.len() || labels.len() != templates.len() {
            return Err(Error::InvalidMixture(format!(
                "{} templates, {} priors, {} labels",
                templates.len(),
                priors.len(),
                labels.len()
            )));
        }
        let shape = templates[0].shape();
        if templates.iter().any(|t| t.shape() != shape) {
            return Err(Error::InvalidMixture("templates differ in shape".into()));
        }
        if priors.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidMixture("priors must be positive".into()));
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMixture(format!(
                "priors sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            templates,
            priors,
            labels,
            spread: 0.0,
        })
    }

    /// Same mixture with isotropic per-component standard deviation `spread`.
    pub fn with_spread(mut self, spread: f64) -> Result<Self> {
        if !(spread.is_finite() && spread >= 0.0) {
            return Err(Error::InvalidMixture(format!("spread {spread} < 0")));
        }
        self.spread = spread;
        Ok(self)
    }

    pub fn templates(&self) -> &[LatentGrid] {
        &self.templates
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn spread(&self) -> f64 {
        self.spread
    }

    fn admissible(&self, prompt: &Prompt) -> Result<Vec<usize>> {
        if let Some(unknown) = prompt
            .labels()
            .find(|l| !self.labels.iter().any(|m| m == l))
        {
            return Err(Error::UnknownLabel(unknown.to_string()));
        }
        let idx: Vec<usize> = (0..self.templates.len())
            .filter(|&i| prompt.admits(&self.labels[i]))
            .collect();
        if idx.is_empty() {
            return Err(Error::EmptyPrompt);
        }
        Ok(idx)
    }

    /// Posterior weight of every template (0 for templates the prompt excludes).
    pub fn posterior_weights(
        &self,
        z_t: &LatentGrid,
        t: usize,
        prompt: &Prompt,
        schedule: &NoiseSchedule,
    ) -> Result<Vec<f64>> {
        schedule.check_level(t)?;
        let shape = self.templates[0].shape();
        if z_t.shape() != shape {
            return Err(Error::ShapeMismatch(format!(
                "latent {:?} vs templates {:?}",
                z_t.shape(),
                shape
            )));
        }
        let admissible = self.admissible(prompt)?;
        let ab = schedule.alpha_bar(t);
        let scale = ab.sqrt();
        let var = ab * self.spread * self.spread + (1.0 - ab);
        let dists: Vec<f64> = admissible
            .iter()
            .map(|&i| {
                z_t.data()
                    .iter()
                    .zip(self.templates[i].data())
                    .map(|(z, x)| {
                        let d = z - scale * x;
                        d * d
                    })
                    .sum()
            })
            .collect();

        let mut weights = vec![0.0; self.templates.len()];
        if var <= 0.0 {
            // Zero variance: all mass on the nearest admissible templates.
            let best = dists.iter().copied().fold(f64::INFINITY, f64::min);
            let winners: Vec<usize> = (0..admissible.len())
                .filter(|&j| dists[j] == best)
                .collect();
            let mass: f64 = winners.iter().map(|&j| self.priors[admissible[j]]).sum();
            for j in winners {
                weights[admissible[j]] = self.priors[admissible[j]] / mass;
            }
            return Ok(weights);
        }
        let logits: Vec<f64> = admissible
            .iter()
            .zip(&dists)
            .map(|(&i, d)| self.priors[i].ln() - d / (2.0 * var))
            .collect();
        let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let unnorm: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = unnorm.iter().sum();
        for (j, &i) in admissible.iter().enumerate() {
            weights[i] = unnorm[j] / total;
        }
        Ok(weights)
    }

    /// Exact `E[x₀ | z_t]` under the prompt-restricted mixture.
    pub fn posterior_x0(
        &self,
        z_t: &LatentGrid,
        t: usize,
        prompt: &Prompt,
        schedule: &NoiseSchedule,
    ) -> Result<LatentGrid> {
        let weights = self.posterior_weights(z_t, t, prompt, schedule)?;
        let ab = schedule.alpha_bar(t);
        let scale = ab.sqrt();
        let s2 = self.spread * self.spread;
        let var = ab * s2 + (1.0 - ab);
        // gain on the observation; 0 for point masses
        let gain = if var > 0.0 { scale * s2 / var } else { 0.0 };
        let shape = z_t.shape();
        let mut out = vec![0.0; shape.len()];
        for (w, template) in weights.iter().zip(&self.templates) {
            if *w == 0.0 {
                continue;
            }
            let keep = w * (1.0 - gain * scale);
            for (o, x) in out.iter_mut().zip(template.data()) {
                *o += keep * x;
            }
        }
        if gain != 0.0 {
            for (o, z) in out.iter_mut().zip(z_t.data()) {
                *o += gain * z;
            }
        }
        Ok(LatentGrid::from_raw(
            shape.width,
            shape.height,
            shape.channels,
            out,
        ))
    }
}

impl Denoiser for TemplateMixture {
    fn predict_x0(
        &self,
        z_t: &LatentGrid,
        t: usize,
        prompt: &Prompt,
        schedule: &NoiseSchedule,
    ) -> Result<LatentGrid> {
        self.posterior_x0(z_t, t, prompt, schedule)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    /// DDIM with η = 0.
    #[default]
    Deterministic,
    /// DDPM posterior sampling with fresh noise per step.
    Ancestral,
}

/// One reverse step from level `t` to `t − 1`. Level 0 is returned unchanged.
pub fn denoise_step<D: Denoiser + ?Sized>(
    z_t: &LatentGrid,
    t: usize,
    prompt: &Prompt,
    denoiser: &D,
    schedule: &NoiseSchedule,
    sampler: Sampler,
    seed: SeedSpec,
) -> Result<LatentGrid> {
    denoise_step_scaled(z_t, t, prompt, denoiser, schedule, sampler, seed, None)
}

/// `denoise_step` with the injected ancestral noise multiplied per latent cell.
#[allow(clippy::too_many_arguments)]
pub(crate) fn denoise_step_scaled<D: Denoiser + ?Sized>(
    z_t: &LatentGrid,
    t: usize,
    prompt: &Prompt,
    denoiser: &D,
    schedule: &NoiseSchedule,
    sampler: Sampler,
    seed: SeedSpec,
    cell_scale: Option<&[f64]>,
) -> Result<LatentGrid> {
    schedule.check_level(t)?;
    if t == 0 {
        return Ok(z_t.clone());
    }
    let x0 = denoiser.predict_x0(z_t, t, prompt, schedule)?;
    let ab_t = schedule.alpha_bar(t);
    let ab_prev = schedule.alpha_bar(t - 1);
    let shape = z_t.shape();
    let data: Vec<f64> = match sampler {
        Sampler::Deterministic => {
            let (s_t, n_t) = (ab_t.sqrt(), (1.0 - ab_t).sqrt());
            let (s_prev, n_prev) = (ab_prev.sqrt(), (1.0 - ab_prev).sqrt());
            z_t.data()
                .iter()
                .zip(x0.data())
                .map(|(z, x)| {
                    let eps = (z - s_t * x) / n_t;
                    s_prev * x + n_prev * eps
                })
                .collect()
        }
        Sampler::Ancestral => {
            let beta = schedule.beta(t);
            let alpha = 1.0 - beta;
            let coef_x0 = ab_prev.sqrt() * beta / (1.0 - ab_t);
            let coef_z = alpha.sqrt() * (1.0 - ab_prev) / (1.0 - ab_t);
            let sigma = ((1.0 - ab_prev) / (1.0 - ab_t) * beta).sqrt();
            let noise = derive_noise(seed, t, Purpose::Reverse, shape);
            let channels = shape.channels;
            z_t.data()
                .iter()
                .zip(x0.data())
                .zip(noise.data())
                .enumerate()
                .map(|(i, ((z, x), e))| {
                    let e = match cell_scale {
                        Some(s) => e * s[i / channels],
                        None => *e,
                    };
                    coef_x0 * x + coef_z * z + sigma * e
                })
                .collect()
        }
    };
    LatentGrid::new(shape.width, shape.height, shape.channels, data)
}

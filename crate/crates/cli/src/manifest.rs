//! Mixture manifests: template files, priors, labels, schedule and codec.
//!
//! ```json
//! {
//!   "templates": [{"path": "flat.pgm", "prior": 1.0, "label": "flat"}],
//!   "schedule": {"k": 50, "beta_min": 0.03, "beta_max": 0.2},
//!   "codec": {"kind": "scaled", "scale": 4.0},
//!   "spread": 1.0
//! }
//! ```
//!
//! Template paths are relative to the manifest. Priors are normalized on load.

use std::fs;
use std::path::{Path, PathBuf};

use diffedit::codec::encode;
use diffedit::{build_schedule, Codec, NoiseSchedule, TemplateMixture};
use serde::{Deserialize, Serialize};

use crate::io::read_image;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateEntry {
    pub path: PathBuf,
    pub prior: f64,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub k: usize,
    pub beta_min: f64,
    pub beta_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub templates: Vec<TemplateEntry>,
    pub schedule: ScheduleParams,
    #[serde(default)]
    pub codec: Codec,
    /// Template spread in latent units; 0 makes every template a point mass.
    #[serde(default)]
    pub spread: f64,
}

/// Everything an edit needs from a manifest.
#[derive(Debug, Clone)]
pub struct Model {
    pub mixture: TemplateMixture,
    pub schedule: NoiseSchedule,
    pub codec: Codec,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Manifest, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::InvalidManifest(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Manifest, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Manifest::parse(&text)
    }

    /// Normalized priors.
    pub fn priors(&self) -> Result<Vec<f64>, CliError> {
        if self.templates.is_empty() {
            return Err(CliError::InvalidManifest("no templates".into()));
        }
        if let Some(t) = self
            .templates
            .iter()
            .find(|t| !(t.prior.is_finite() && t.prior > 0.0))
        {
            return Err(CliError::InvalidManifest(format!(
                "prior {} of {:?} must be positive",
                t.prior, t.label
            )));
        }
        let total: f64 = self.templates.iter().map(|t| t.prior).sum();
        Ok(self.templates.iter().map(|t| t.prior / total).collect())
    }

    /// Loads templates relative to `base` and builds the schedule, with `k`
    /// overridden by `steps` when given.
    pub fn build(&self, base: &Path, steps: Option<usize>) -> Result<Model, CliError> {
        let priors = self.priors()?;
        let templates = self
            .templates
            .iter()
            .map(|t| Ok(encode(&read_image(&base.join(&t.path))?, self.codec)?))
            .collect::<Result<Vec<_>, CliError>>()?;
        let labels = self.templates.iter().map(|t| t.label.clone()).collect();
        let mixture = TemplateMixture::new(templates, priors, labels)?.with_spread(self.spread)?;
        let k = steps.unwrap_or(self.schedule.k);
        let schedule = build_schedule(k, self.schedule.beta_min, self.schedule.beta_max)?;
        Ok(Model {
            mixture,
            schedule,
            codec: self.codec,
        })
    }
}

/// Reads the manifest at `path` and builds its model.
pub fn load_model(path: &Path, steps: Option<usize>) -> Result<Model, CliError> {
    let manifest = Manifest::load(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    manifest.build(base, steps)
}

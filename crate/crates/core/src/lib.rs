//! Differential diffusion editing: per-pixel edit strength driven by a change
//! map, on top of a small diffusion sampler whose denoiser is an exact
//! Gaussian-mixture posterior.
//!
//! The pieces, bottom up:
//!
//! * [`grid`] – images, change maps, latents, masks.
//! * [`rng`] – counter-style noise streams keyed by seed, timestep and purpose.
//! * [`schedule`] – linear-β schedules and the forward process.
//! * [`denoiser`] – the denoiser trait, the template mixture and reverse steps.
//! * [`codec`] – pixel ↔ latent translation.
//! * [`diffusion`] – the differential edit, its skipping variant and the
//!   uniform-strength reference edit.
//! * [`baselines`] – composition, tiling, five tiles, masked noise, binarized.
//! * [`maps`] – soft masks, strength fans, transforms, evaluation patterns.
//! * [`metrics`] – edit-strength measurement, CAM and DAM.
//! * [`toy`] – ready-made mixtures and datasets for experiments.

pub mod baselines;
pub mod codec;
pub mod denoiser;
pub mod diffusion;
pub mod error;
pub mod grid;
pub mod maps;
pub mod metrics;
pub mod rng;
pub mod schedule;
pub mod toy;

pub use codec::Codec;
pub use denoiser::{Denoiser, Prompt, Sampler, TemplateMixture};
pub use diffusion::{
    differential_edit, differential_edit_skipping, standard_img2img, Edit, EditOptions, Nesting,
    RunReport,
};
pub use error::{Error, Result};
pub use grid::{validate_pair, BinaryMask, ChangeMap, Field, Image, LatentGrid, Shape};
pub use rng::{derive_noise, Purpose, SeedSpec};
pub use schedule::{add_noise, build_schedule, strength_to_start, NoiseSchedule};

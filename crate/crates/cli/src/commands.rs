use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use diffedit::baselines::{
    binarized_edit, composition_edit, five_tiles_edit, masked_noise_edit, tiling_edit,
};
use diffedit::maps::{eval_pattern, fan_map, histogram_transform, soften_mask, HistogramTransform};
use diffedit::metrics::{edit_strength_map, DistanceMapMethod, MeasurementReport};
use diffedit::{
    differential_edit, toy, ChangeMap, EditOptions, Image, Nesting, Prompt, RunReport, Sampler,
    SeedSpec,
};
use serde::Serialize;
use serde_json::json;

use crate::io::{read_image, read_map, write_field, write_gray, write_image, write_map};
use crate::manifest::{load_model, Manifest, Model, ScheduleParams, TemplateEntry};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "diffedit", version, about = "Per-pixel strength image editing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Edit an image with a change map (0 = regenerate, 1 = keep).
    Edit(EditArgs),
    /// Write a map of vertical constant-strength bands.
    Fan(FanArgs),
    /// Gaussian-blur a binary mask into a soft change map.
    Soften(SoftenArgs),
    /// Write an evaluation pattern or transform an existing map.
    Map(MapArgs),
    /// Measure the edit-strength map of an editor over a dataset.
    Measure(MeasureArgs),
    /// Write a ready-to-use toy manifest, templates and dataset.
    Toy(ToyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    Composition,
    Tiling,
    FiveTiles,
    MaskedNoise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerArg {
    Deterministic,
    Ancestral,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Comma-separated class labels; all templates when omitted.
    #[arg(long)]
    pub prompt: Option<String>,
    /// Step count; defaults to the manifest's `k`.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SamplerArg::Deterministic)]
    pub sampler: SamplerArg,
    /// Quantization levels for composition and tiling.
    #[arg(long, default_value_t = 100)]
    pub levels: usize,
}

#[derive(Debug, Args)]
pub struct EditArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub map: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Enter the chain at the first level any cell moves.
    #[arg(long)]
    pub skip: bool,
    /// Refresh each cell from the original only at its own level.
    #[arg(long)]
    pub no_nesting: bool,
    #[arg(long, value_enum)]
    pub baseline: Option<Baseline>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write `wall_ms` as 0 so reports are byte-reproducible.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct FanArgs {
    /// Comma-separated strengths in [0, 1], left to right.
    #[arg(long, value_delimiter = ',', required = true)]
    pub strengths: Vec<f64>,
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SoftenArgs {
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long)]
    pub radius: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PatternArg {
    Gradient,
    Shapes,
    Triangles,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformArg {
    Invert,
    Gamma,
    Levels,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    #[arg(
        long,
        value_enum,
        conflicts_with = "transform",
        required_unless_present = "transform"
    )]
    pub pattern: Option<PatternArg>,
    #[arg(long, value_enum, requires = "input")]
    pub transform: Option<TransformArg>,
    /// Map to transform.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lo: f64,
    #[arg(long, default_value_t = 1.0)]
    pub hi: f64,
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Ours,
    Composition,
    Tiling,
    FiveTiles,
    MaskedNoise,
    Binarized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistanceArg {
    Pixel,
    Patch,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// Directory of same-sized PGM inputs, used in file-name order.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long)]
    pub pairs: usize,
    #[arg(long, value_enum, default_value_t = Method::Ours)]
    pub method: Method,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Binarization thresholds; the best-scoring one is reported.
    #[arg(long, value_delimiter = ',')]
    pub sweep: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = DistanceArg::Patch)]
    pub distance: DistanceArg,
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    /// E_M destination (PFM).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ToyArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 32)]
    pub width: usize,
    #[arg(long, default_value_t = 32)]
    pub height: usize,
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
    /// Dataset size.
    #[arg(long, default_value_t = 64)]
    pub images: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Edit(a) => cmd_edit(&a),
        Command::Fan(a) => cmd_fan(&a),
        Command::Soften(a) => cmd_soften(&a),
        Command::Map(a) => cmd_map(&a),
        Command::Measure(a) => cmd_measure(&a),
        Command::Toy(a) => cmd_toy(&a),
    }
}

fn emit(value: &impl Serialize, path: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Usage(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn prompt(arg: &Option<String>) -> Prompt {
    match arg {
        Some(labels) => Prompt::classes(labels.split(',').map(str::trim).filter(|l| !l.is_empty())),
        None => Prompt::unconditional(),
    }
}

struct Loaded {
    model: Model,
    prompt: Prompt,
    opts: EditOptions,
}

fn load(args: &ModelArgs) -> Result<Loaded, CliError> {
    let model = load_model(&args.manifest, args.steps)?;
    let sampler = match args.sampler {
        SamplerArg::Deterministic => Sampler::Deterministic,
        SamplerArg::Ancestral => Sampler::Ancestral,
    };
    let opts = EditOptions::new(model.schedule.k(), SeedSpec::new(args.seed))
        .with_sampler(sampler)
        .with_codec(model.codec);
    Ok(Loaded {
        prompt: prompt(&args.prompt),
        model,
        opts,
    })
}

fn run_baseline(
    kind: Baseline,
    image: &Image,
    map: &ChangeMap,
    l: &Loaded,
    levels: usize,
    opts: &EditOptions,
) -> Result<(Image, RunReport), CliError> {
    let (mix, sched) = (&l.model.mixture, &l.model.schedule);
    let run = match kind {
        Baseline::Composition => composition_edit(image, map, &l.prompt, mix, sched, levels, opts)?,
        Baseline::Tiling => tiling_edit(image, map, &l.prompt, mix, sched, levels, opts)?,
        Baseline::FiveTiles => five_tiles_edit(image, map, &l.prompt, mix, sched, opts)?,
        Baseline::MaskedNoise => {
            let e = masked_noise_edit(image, map, &l.prompt, mix, sched, opts)?;
            return Ok((e.image, e.report));
        }
    };
    Ok((run.image, run.report))
}

fn cmd_edit(a: &EditArgs) -> Result<(), CliError> {
    let image = read_image(&a.image)?;
    let map = read_map(&a.map)?;
    let l = load(&a.model)?;
    let mut opts = l.opts.with_skipping(a.skip);
    if a.no_nesting {
        opts = opts.with_nesting(Nesting::Band);
    }
    let (out, mut report) = match a.baseline {
        Some(kind) => run_baseline(kind, &image, &map, &l, a.model.levels, &opts)?,
        None => {
            let e = differential_edit(
                &image,
                &map,
                &l.prompt,
                &l.model.mixture,
                &l.model.schedule,
                &opts,
            )?;
            (e.image, e.report)
        }
    };
    if a.no_timing {
        report.wall_ms = 0.0;
    }
    if let Some(path) = &a.out {
        write_image(path, &out)?;
    }
    emit(&report, a.report.as_deref())
}

fn cmd_fan(a: &FanArgs) -> Result<(), CliError> {
    write_map(&a.out, &fan_map(a.width, a.height, &a.strengths)?)
}

fn cmd_soften(a: &SoftenArgs) -> Result<(), CliError> {
    let mask = read_map(&a.mask)?;
    write_map(&a.out, &soften_mask(&mask, a.radius)?)
}

fn cmd_map(a: &MapArgs) -> Result<(), CliError> {
    let map = match (a.pattern, a.transform, &a.input) {
        (Some(p), _, _) => {
            let kind = match p {
                PatternArg::Gradient => diffedit::maps::Pattern::Gradient,
                PatternArg::Shapes => diffedit::maps::Pattern::Shapes,
                PatternArg::Triangles => diffedit::maps::Pattern::Triangles,
            };
            eval_pattern(kind, a.width, a.height)?
        }
        (None, Some(t), Some(input)) => {
            let transform = match t {
                TransformArg::Invert => HistogramTransform::Invert,
                TransformArg::Gamma => HistogramTransform::Gamma { g: a.gamma },
                TransformArg::Levels => HistogramTransform::Levels { lo: a.lo, hi: a.hi },
            };
            histogram_transform(&read_map(input)?, transform)?
        }
        _ => {
            return Err(CliError::Usage(
                "map needs --pattern, or --transform with --input".into(),
            ))
        }
    };
    write_map(&a.out, &map)
}

fn read_dataset(dir: &Path) -> Result<Vec<Image>, CliError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
        })
        .collect();
    paths.sort();
    paths.iter().map(|p| read_image(p)).collect()
}

#[derive(Debug, Serialize)]
struct SweepEntry {
    threshold: f64,
    cam: Option<f64>,
    dam: Option<f64>,
    error: Option<&'static str>,
}

#[derive(Debug, Serialize)]
struct MeasureOutput {
    method: Method,
    #[serde(flatten)]
    report: MeasurementReport,
    seed: u64,
    k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    best_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<Vec<SweepEntry>>,
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(
            self.to_possible_value()
                .expect("no skipped variants")
                .get_name(),
        )
    }
}

fn cmd_measure(a: &MeasureArgs) -> Result<(), CliError> {
    let dataset = read_dataset(&a.dataset)?;
    let map = read_map(&a.map)?;
    let l = load(&a.model)?;
    let method = match a.distance {
        DistanceArg::Pixel => DistanceMapMethod::PixelSq,
        DistanceArg::Patch => DistanceMapMethod::PatchSq { window: a.window },
    };
    let seed = SeedSpec::new(a.model.seed);
    let (mix, sched) = (&l.model.mixture, &l.model.schedule);
    let measure_binarized = |tau: f64| {
        edit_strength_map(
            |img: &Image, m: &ChangeMap, s| {
                Ok(binarized_edit(img, m, tau, &l.prompt, mix, sched, &l.opts.with_seed(s))?.image)
            },
            &dataset,
            &map,
            a.pairs,
            seed,
            method,
        )
    };

    let sweep = match (&a.sweep, a.method) {
        (Some(t), _) => Some(t.clone()),
        (None, Method::Binarized) => Some((1..10).map(|i| i as f64 / 10.0).collect()),
        (None, _) => None,
    };
    let mut entries = Vec::new();
    let mut best: Option<(f64, MeasurementReport)> = None;
    for tau in sweep.iter().flatten() {
        if !(*tau > 0.0 && *tau < 1.0) {
            return Err(CliError::Usage(format!("threshold {tau} outside (0, 1)")));
        }
        match measure_binarized(*tau) {
            Ok(r) => {
                entries.push(SweepEntry {
                    threshold: *tau,
                    cam: Some(r.cam),
                    dam: Some(r.dam),
                    error: None,
                });
                if best.as_ref().is_none_or(|(_, b)| r.cam > b.cam) {
                    best = Some((*tau, r));
                }
            }
            Err(diffedit::Error::DegenerateVariance) => entries.push(SweepEntry {
                threshold: *tau,
                cam: None,
                dam: None,
                error: Some("DegenerateVariance"),
            }),
            Err(e) => return Err(e.into()),
        }
    }

    let (report, best_threshold) = if a.method == Method::Binarized {
        let (tau, r) = best.ok_or(diffedit::Error::DegenerateVariance)?;
        (r, Some(tau))
    } else {
        let editor = |img: &Image, m: &ChangeMap, s: SeedSpec| -> diffedit::Result<Image> {
            let opts = l.opts.with_seed(s);
            let (p, lv) = (&l.prompt, a.model.levels);
            Ok(match a.method {
                Method::Ours => differential_edit(img, m, p, mix, sched, &opts)?.image,
                Method::Composition => composition_edit(img, m, p, mix, sched, lv, &opts)?.image,
                Method::Tiling => tiling_edit(img, m, p, mix, sched, lv, &opts)?.image,
                Method::FiveTiles => five_tiles_edit(img, m, p, mix, sched, &opts)?.image,
                Method::MaskedNoise => masked_noise_edit(img, m, p, mix, sched, &opts)?.image,
                Method::Binarized => unreachable!("handled by the sweep"),
            })
        };
        let r = edit_strength_map(editor, &dataset, &map, a.pairs, seed, method)?;
        (r, best.map(|(t, _)| t))
    };

    if let (Some(path), Some(e_m)) = (&a.out, &report.e_m) {
        write_field(path, e_m)?;
    }
    emit(
        &MeasureOutput {
            method: a.method,
            report,
            seed: a.model.seed,
            k: l.opts.k,
            best_threshold,
            sweep: sweep.map(|_| entries),
        },
        a.report.as_deref(),
    )
}

fn cmd_toy(a: &ToyArgs) -> Result<(), CliError> {
    let dir = &a.out;
    let data_dir = dir.join("dataset");
    fs::create_dir_all(&data_dir).map_err(|e| CliError::io(&data_dir, e))?;
    let mut templates = Vec::new();
    for label in toy::CLASSES {
        let img = toy::template(label, a.width, a.height, 1);
        let name = format!("{label}.pgm");
        write_image(&dir.join(&name), &img)?;
        templates.push(TemplateEntry {
            path: name.into(),
            prior: 1.0,
            label: label.to_string(),
        });
    }
    let schedule = toy::schedule(a.steps)?;
    let manifest = Manifest {
        templates,
        schedule: ScheduleParams {
            k: a.steps,
            beta_min: schedule.beta(1),
            beta_max: schedule.beta(a.steps),
        },
        codec: toy::Setup::new(1, 1, 1, a.steps)?.codec,
        spread: toy::SPREAD,
    };
    emit(&manifest, Some(&dir.join("manifest.json")))?;
    let images = toy::smooth_dataset(a.images, a.width, a.height, 1, SeedSpec::new(a.seed));
    for (i, img) in images.iter().enumerate() {
        let p = data_dir.join(format!("{i:04}.pgm"));
        write_gray(&p, img.width(), img.height(), img.data())?;
    }
    emit(
        &json!({
            "manifest": dir.join("manifest.json"),
            "dataset": data_dir,
            "images": a.images,
            "prompt": toy::CLASSES[0],
        }),
        None,
    )
}

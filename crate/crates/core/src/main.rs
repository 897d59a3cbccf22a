use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pvskit::automask::{auto_masklets, GridSpec, VideoFrames, DEFAULT_DEDUP_THRESHOLD};
use pvskit::dataset::{
    alignment_pairs, load_manifest, load_report, manifest_stats, save_manifest, save_report, synth_dataset, Manifest,
    Motion, ObjectRecord, SynthSpec, VideoRecord,
};
use pvskit::metrics::{alignment_score, BoundaryTolerance, GAveraging, MetricMode};
use pvskit::protocols::{annotation_time, run_dataset, EvalConfig, InteractionMode, ObjectTask, Protocol, RunSpec, TimeModel};
use pvskit::segmenter::{NaiveTracker, OracleConfig, OracleSegmenter, Segmenter, SegmenterKind, TrackerConfig};
use pvskit::{Error, Result};

#[derive(Parser)]
#[command(name = "pvskit", version, about = "Evaluation tooling for promptable video segmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a segmenter on a dataset under one protocol.
    Eval(EvalArgs),
    /// Annotation time for one object under the interactive protocols.
    TimeModel(TimeArgs),
    /// Generate masklets for one video from a grid of first-frame clicks.
    Automask(AutomaskArgs),
    /// Disappearance rate and mask-area statistics of a manifest.
    Stats(StatsArgs),
    /// Share of masks whose IoU with a reference annotation exceeds a threshold.
    Align(AlignArgs),
    /// Check a manifest or report file.
    Validate(ValidateArgs),
    /// Write a synthetic rigid-motion dataset.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Semi,
    Offline,
    Online,
    Image,
}

impl From<ProtocolArg> for Protocol {
    fn from(p: ProtocolArg) -> Self {
        match p {
            ProtocolArg::Semi => Protocol::Semi,
            ProtocolArg::Offline => Protocol::Offline,
            ProtocolArg::Online => Protocol::Online,
            ProtocolArg::Image => Protocol::Image,
        }
    }
}

#[derive(Args)]
struct SegmenterArgs {
    /// oracle or naive
    #[arg(long, default_value = "oracle")]
    segmenter: SegmenterKind,
    /// JSON file with the segmenter's settings; flags below override it.
    #[arg(long)]
    segmenter_config: Option<PathBuf>,
    #[arg(long)]
    dilation: Option<i64>,
    #[arg(long)]
    translation: Option<i64>,
    #[arg(long)]
    drop_prob: Option<f64>,
    #[arg(long)]
    drop_every: Option<usize>,
    #[arg(long)]
    decay: Option<f64>,
    #[arg(long)]
    multi_candidate: bool,
    /// Naive tracker search radius in pixels.
    #[arg(long)]
    search_radius: Option<usize>,
}

enum SegmenterSetup {
    Oracle(OracleConfig),
    Naive(TrackerConfig),
}

impl SegmenterArgs {
    fn setup(&self) -> Result<SegmenterSetup> {
        let text = match &self.segmenter_config {
            Some(p) => Some(std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?),
            None => None,
        };
        Ok(match self.segmenter {
            SegmenterKind::Oracle => {
                let mut c: OracleConfig = match &text {
                    Some(t) => serde_json::from_str(t)?,
                    None => OracleConfig::default(),
                };
                if let Some(v) = self.dilation {
                    c.dilation_px = v;
                }
                if let Some(v) = self.translation {
                    c.translation_px = v;
                }
                if let Some(v) = self.drop_prob {
                    c.drop_prob = v;
                }
                if self.drop_every.is_some() {
                    c.drop_every = self.drop_every;
                }
                if let Some(v) = self.decay {
                    c.decay = v;
                }
                c.multi_candidate |= self.multi_candidate;
                c.validate()?;
                SegmenterSetup::Oracle(c)
            }
            SegmenterKind::Naive => {
                let mut c: TrackerConfig = match &text {
                    Some(t) => serde_json::from_str(t)?,
                    None => TrackerConfig::default(),
                };
                if let Some(v) = self.search_radius {
                    c.search_radius_px = v;
                }
                c.validate()?;
                SegmenterSetup::Naive(c)
            }
        })
    }
}

impl SegmenterSetup {
    fn config_json(&self) -> Result<serde_json::Value> {
        Ok(match self {
            SegmenterSetup::Oracle(c) => serde_json::to_value(c)?,
            SegmenterSetup::Naive(c) => serde_json::to_value(c)?,
        })
    }

    fn name(&self) -> &'static str {
        match self {
            SegmenterSetup::Oracle(_) => "oracle",
            SegmenterSetup::Naive(_) => "naive",
        }
    }
}

/// FNV-1a, so every object gets its own reproducible oracle noise.
fn object_seed(seed: u64, video: &str, object: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in video.bytes().chain(*b"/").chain(object.bytes()) {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^ seed
}

#[derive(Args)]
struct EvalArgs {
    protocol: ProtocolArg,
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    seg: SegmenterArgs,
    /// JSON file with evaluation settings; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// First-frame prompt: click1, click3, click5, box or mask.
    #[arg(long)]
    prompt: Option<pvskit::prompt::PromptKind>,
    #[arg(long)]
    n_click: Option<usize>,
    #[arg(long)]
    n_frame: Option<usize>,
    /// Online pause threshold.
    #[arg(long)]
    threshold: Option<f64>,
    /// Clicks per instance for the image protocol.
    #[arg(long)]
    clicks: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report J only.
    #[arg(long)]
    j_only: bool,
    /// Boundary tolerance in pixels (default: 0.8% of the diagonal).
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    exclude_prompted: bool,
    /// Pool G by category before averaging.
    #[arg(long)]
    g_per_category: bool,
    /// Skip the per-round score curve.
    #[arg(long)]
    no_rounds: bool,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit zero even if some objects failed.
    #[arg(long)]
    lenient: bool,
}

impl EvalArgs {
    fn config(&self) -> Result<EvalConfig> {
        let mut c: EvalConfig = match &self.config {
            Some(p) => serde_json::from_str(&read_text(p)?)?,
            None => EvalConfig::default(),
        };
        if let Some(v) = self.prompt {
            c.prompt_kind = v;
        }
        if let Some(v) = self.n_click {
            c.n_click = v;
        }
        if let Some(v) = self.n_frame {
            c.n_frame_max = v;
        }
        if let Some(v) = self.threshold {
            c.online_threshold = v;
        }
        if let Some(v) = self.clicks {
            c.image_clicks = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if self.j_only {
            c.score.mode = MetricMode::JOnly;
        }
        if let Some(v) = self.tolerance {
            c.score.tolerance = BoundaryTolerance::Pixels(v);
        }
        c.exclude_prompted |= self.exclude_prompted;
        if self.g_per_category {
            c.g_averaging = GAveraging::PerCategory;
        }
        if self.no_rounds {
            c.per_round = false;
        }
        c.validate()?;
        Ok(c)
    }
}

fn read_text(p: &Path) -> Result<String> {
    std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Config(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn eval(args: &EvalArgs) -> Result<ExitCode> {
    let config = args.config()?;
    let setup = args.seg.setup()?;
    let dataset = load_manifest(&args.manifest)?;
    let seed = config.seed;
    let factory = |task: &ObjectTask<'_>| -> Result<Box<dyn Segmenter>> {
        Ok(match &setup {
            SegmenterSetup::Oracle(c) => {
                let cfg = OracleConfig {
                    seed: object_seed(seed ^ c.seed, &task.video.id, task.object),
                    ..c.clone()
                };
                Box::new(OracleSegmenter::new(task.masklet.to_vec(), cfg)?)
            }
            SegmenterSetup::Naive(c) => Box::new(NaiveTracker::new(c.clone())?),
        })
    };
    let spec = RunSpec {
        protocol: args.protocol.into(),
        config,
        segmenter: setup.name().to_string(),
        segmenter_config: setup.config_json()?,
        load_pixels: matches!(setup, SegmenterSetup::Naive(_)),
    };
    let report = run_dataset(&dataset, &spec, &factory)?;
    match &args.out {
        Some(p) => save_report(&report, p)?,
        None => print!("{}", report.to_json()?),
    }
    for f in &report.failures {
        eprintln!("failed: video `{}` object `{}`: {}", f.video, f.object, f.error);
    }
    if !report.failures.is_empty() && !args.lenient {
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Offline,
    Online,
}

#[derive(Args)]
struct TimeArgs {
    #[arg(long)]
    mode: ModeArg,
    /// Video length in frames.
    #[arg(long, default_value_t = 300)]
    frames: usize,
    #[arg(long, default_value_t = 3)]
    n_click: usize,
    #[arg(long, default_value_t = 8)]
    n_frame: usize,
    #[arg(long)]
    t_loc: Option<f64>,
    #[arg(long)]
    t_click: Option<f64>,
    /// Seconds to examine a 300-frame video.
    #[arg(long)]
    t_exam: Option<f64>,
}

#[derive(Serialize)]
struct TimeOutput {
    mode: InteractionMode,
    frames: usize,
    n_click: usize,
    n_frame: usize,
    time_model: TimeModel,
    seconds: f64,
}

fn time_model(args: &TimeArgs) -> Result<ExitCode> {
    let d = TimeModel::default();
    let tm = TimeModel {
        t_loc: args.t_loc.unwrap_or(d.t_loc),
        t_click: args.t_click.unwrap_or(d.t_click),
        t_exam: args.t_exam.unwrap_or(d.t_exam),
    };
    tm.validate()?;
    if args.frames == 0 || args.n_click == 0 || args.n_frame == 0 {
        return Err(Error::Config("frames, n_click and n_frame must be >= 1".into()));
    }
    let mode = match args.mode {
        ModeArg::Offline => InteractionMode::Offline,
        ModeArg::Online => InteractionMode::Online,
    };
    let out = TimeOutput {
        mode,
        frames: args.frames,
        n_click: args.n_click,
        n_frame: args.n_frame,
        time_model: tm,
        seconds: annotation_time(mode, args.frames, args.n_click, args.n_frame, &tm),
    };
    emit(&out, None)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
struct AutomaskArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Video id within the manifest.
    #[arg(long)]
    video: String,
    #[command(flatten)]
    seg: SegmenterArgs,
    /// JSON grid layout.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_DEDUP_THRESHOLD)]
    dedup: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn automask(args: &AutomaskArgs) -> Result<ExitCode> {
    let dataset = load_manifest(&args.manifest)?;
    let record = dataset
        .manifest
        .video(&args.video)
        .ok_or_else(|| Error::Config(format!("no video `{}` in {}", args.video, args.manifest.display())))?;
    let grid: GridSpec = match &args.grid {
        Some(p) => serde_json::from_str(&read_text(p)?)?,
        None => GridSpec::default(),
    };
    let setup = args.seg.setup()?;
    let objects: Vec<_> = record
        .objects
        .keys()
        .map(|o| record.masklet(o))
        .collect::<Result<_>>()?;
    let pixels = match setup {
        SegmenterSetup::Naive(_) => record.load_frames(&dataset.root)?,
        SegmenterSetup::Oracle(_) => None,
    };
    let make = || -> Result<Box<dyn Segmenter>> {
        Ok(match &setup {
            SegmenterSetup::Oracle(c) => Box::new(OracleSegmenter::with_objects(objects.clone(), c.clone())?),
            SegmenterSetup::Naive(c) => Box::new(NaiveTracker::new(c.clone())?),
        })
    };
    let video = VideoFrames {
        length: record.length,
        height: record.height,
        width: record.width,
        pixels: pixels.as_deref(),
    };
    let out = auto_masklets(&make, video, &grid, &EvalConfig::default(), args.dedup)?;
    eprintln!(
        "{} prompts, {} empty, {} failed, {} emptied by clean-up, {} masklets kept",
        out.prompts,
        out.empty,
        out.failed,
        out.vanished,
        out.masklets.len()
    );
    let mut manifest = Manifest::new(format!("{}-auto", dataset.manifest.name));
    manifest.videos.push(VideoRecord {
        id: record.id.clone(),
        length: record.length,
        height: record.height,
        width: record.width,
        frames: None,
        objects: out
            .masklets
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let masks = m.masks.iter().enumerate().filter(|(_, r)| !r.is_empty()).map(|(t, r)| (t, r.clone()));
                (
                    (i + 1).to_string(),
                    ObjectRecord {
                        category: None,
                        split: None,
                        masks: masks.collect(),
                    },
                )
            })
            .collect(),
    });
    match &args.out {
        Some(p) => save_manifest(&manifest, p)?,
        None => print!("{}", manifest.to_json()?),
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn stats(args: &StatsArgs) -> Result<ExitCode> {
    let d = load_manifest(&args.manifest)?;
    emit(&manifest_stats(&d.manifest), args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
struct AlignArgs {
    /// Masks to check.
    #[arg(long)]
    manifest: PathBuf,
    /// Reference masks.
    #[arg(long)]
    reference: PathBuf,
    #[arg(long, default_value_t = 0.75)]
    threshold: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn align(args: &AlignArgs) -> Result<ExitCode> {
    let a = load_manifest(&args.manifest)?;
    let b = load_manifest(&args.reference)?;
    let (masks, refs) = alignment_pairs(&a.manifest, &b.manifest)?;
    emit(&alignment_score(&masks, &refs, args.threshold)?, args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
struct ValidateArgs {
    path: PathBuf,
    /// The file is a report rather than a manifest.
    #[arg(long)]
    report: bool,
}

fn validate(args: &ValidateArgs) -> Result<ExitCode> {
    if args.report {
        let r = load_report(&args.path)?;
        println!(
            "ok: report for `{}` ({} protocol, {} objects, {} failures)",
            r.dataset,
            r.protocol,
            r.objects.len(),
            r.failures.len()
        );
    } else {
        let d = load_manifest(&args.path)?;
        let objects: usize = d.manifest.videos.iter().map(|v| v.objects.len()).sum();
        println!(
            "ok: manifest `{}` ({} videos, {} objects)",
            d.manifest.name,
            d.manifest.videos.len(),
            objects
        );
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for manifest.json and frames/.
    #[arg(long)]
    out: PathBuf,
    /// JSON spec; flags below override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    videos: Option<usize>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    objects: Option<usize>,
    /// Vertical motion in pixels per frame.
    #[arg(long)]
    dy: Option<i64>,
    /// Horizontal motion in pixels per frame.
    #[arg(long)]
    dx: Option<i64>,
    #[arg(long)]
    splits: bool,
    /// Skip writing frame pixels.
    #[arg(long)]
    no_render: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn synth(args: &SynthArgs) -> Result<ExitCode> {
    let mut spec: SynthSpec = match &args.spec {
        Some(p) => serde_json::from_str(&read_text(p)?)?,
        None => SynthSpec::default(),
    };
    let set = |dst: &mut usize, v: Option<usize>| {
        if let Some(v) = v {
            *dst = v;
        }
    };
    set(&mut spec.videos, args.videos);
    set(&mut spec.frames, args.frames);
    set(&mut spec.height, args.height);
    set(&mut spec.width, args.width);
    set(&mut spec.objects_per_video, args.objects);
    if args.dy.is_some() || args.dx.is_some() {
        let (dy0, dx0) = match spec.motion {
            Motion::Static => (0, 0),
            Motion::Linear { dy, dx } => (dy, dx),
        };
        spec.motion = Motion::Linear {
            dy: args.dy.unwrap_or(dy0),
            dx: args.dx.unwrap_or(dx0),
        };
    }
    spec.splits |= args.splits;
    spec.render &= !args.no_render;
    let data = synth_dataset(&spec, args.seed)?;
    let path = data.write(&args.out)?;
    eprintln!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Eval(a) => eval(a),
        Command::TimeModel(a) => time_model(a),
        Command::Automask(a) => automask(a),
        Command::Stats(a) => stats(a),
        Command::Align(a) => align(a),
        Command::Validate(a) => validate(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

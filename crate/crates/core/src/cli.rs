//! `gfgroup` command-line front end.
//!
//! Machine-readable output (CSV/JSON) goes to stdout or `--output`; the
//! human summary goes to stderr. Exit codes: 0 success, 1 usage, 2 I/O or
//! parse failure, 3 internal plan validation failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::first_pass::{SearchConfig, SearchKind};
use crate::gop_planner::{
    analyze_groups, plan_sequence, validate_plan, PlannerConfig, DEFAULT_BUFFER_SLOTS,
    MAX_INTERVAL, MIN_INTERVAL,
};
use crate::quality::{bd_rate, sequence_quality, RdCurve};
use crate::stillness::{dump_group_metrics, dump_histograms, StillnessThresholds, Verdict};
use crate::synth::{generate, SynthKind, SynthSpec};
use crate::video_io::{load_raw_yuv, load_y4m, write_y4m, ChromaFormat, FrameRate, VideoSequence};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Validation(_) => EXIT_VALIDATION,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Validation(m) => m,
        }
    }
}

fn io_err(context: impl std::fmt::Display) -> impl FnOnce(String) -> CliError {
    move |e| CliError::Io(format!("{context}: {e}"))
}

#[derive(Debug, Parser)]
#[command(
    name = "gfgroup",
    version,
    about = "Stillness-adaptive GF group analysis and planning"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute per-group stillness metrics and verdicts as CSV.
    Analyze(AnalyzeArgs),
    /// Emit the adaptive GF group coding plan as JSON.
    Plan(PlanArgs),
    /// Per-frame PSNR/SSIM of a distorted sequence against a reference.
    Quality(QualityArgs),
    /// BD-rate of a test RD curve against a base curve.
    Bdrate(BdrateArgs),
    /// Write a deterministic synthetic Y4M sequence.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ChromaArg {
    #[value(name = "420")]
    Yuv420,
    #[value(name = "444")]
    Yuv444,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SearchArg {
    Exhaustive,
    Diamond,
}

/// Geometry for headerless `.yuv` input.
#[derive(Debug, Args)]
pub struct RawArgs {
    /// Frame width (required for .yuv input)
    #[arg(long)]
    pub width: Option<usize>,
    /// Frame height (required for .yuv input)
    #[arg(long)]
    pub height: Option<usize>,
    /// Chroma layout of .yuv input
    #[arg(long, value_enum, default_value = "420")]
    pub chroma: ChromaArg,
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    #[arg(long, default_value_t = 16)]
    pub block_size: usize,
    #[arg(long, default_value_t = 8)]
    pub search_range: i32,
    #[arg(long, value_enum, default_value = "exhaustive")]
    pub search: SearchArg,
    #[arg(long, default_value_t = MAX_INTERVAL)]
    pub target_interval: usize,
    /// Force a keyframe every N frames
    #[arg(long)]
    pub key_interval: Option<usize>,
    /// Stillness needs zero_motion_accumulator above this
    #[arg(long, default_value_t = 0.9)]
    pub zm_min: f64,
    /// Stillness needs avg_pixel_error below this
    #[arg(long, default_value_t = 40.0)]
    pub ape_max: f64,
    /// Stillness needs avg_error_stdev below this
    #[arg(long, default_value_t = 2000.0)]
    pub aes_max: f64,
}

impl AnalysisArgs {
    fn planner_config(&self) -> Result<PlannerConfig, CliError> {
        let cfg = PlannerConfig {
            search: SearchConfig {
                block_size: self.block_size,
                search_range: self.search_range,
                search_kind: match self.search {
                    SearchArg::Exhaustive => SearchKind::Exhaustive,
                    SearchArg::Diamond => SearchKind::Diamond,
                },
            },
            thresholds: StillnessThresholds {
                zero_motion_min: self.zm_min,
                pixel_error_max: self.ape_max,
                error_stdev_max: self.aes_max,
            },
            target_interval: self.target_interval,
            key_interval: self.key_interval,
        };
        cfg.search
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        cfg.thresholds
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        if !(MIN_INTERVAL..=MAX_INTERVAL).contains(&cfg.target_interval) {
            return Err(CliError::Usage(format!(
                "--target-interval must be in [{MIN_INTERVAL}, {MAX_INTERVAL}]"
            )));
        }
        if cfg.key_interval.is_some_and(|k| k < 2) {
            return Err(CliError::Usage("--key-interval must be at least 2".into()));
        }
        if cfg.search.block_size != 16 && cfg.thresholds.is_default() {
            eprintln!(
                "warning: default thresholds are calibrated for 16x16 blocks; \
                 block size {} may need recalibration",
                cfg.search.block_size
            );
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Input .y4m (or .yuv with --width/--height)
    pub input: PathBuf,
    #[command(flatten)]
    pub raw: RawArgs,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    /// Metrics CSV destination (stdout when omitted)
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Also write per-metric histograms to this CSV
    #[arg(long)]
    pub histogram: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub raw: RawArgs,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QualityArgs {
    pub reference: PathBuf,
    pub distorted: PathBuf,
    #[command(flatten)]
    pub raw: RawArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BdrateArgs {
    /// Base RD curve CSV (bitrate_kbps,quality)
    pub base: PathBuf,
    /// Test RD curve CSV
    pub test: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Static,
    StaticNoise,
    Pan,
    Zoom,
    Cut,
}

impl From<KindArg> for SynthKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Static => SynthKind::Static,
            KindArg::StaticNoise => SynthKind::StaticNoise,
            KindArg::Pan => SynthKind::Pan,
            KindArg::Zoom => SynthKind::Zoom,
            KindArg::Cut => SynthKind::Cut,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 176)]
    pub width: usize,
    #[arg(long, default_value_t = 144)]
    pub height: usize,
    #[arg(long, default_value_t = 17)]
    pub frames: usize,
    /// Noise sigma, pan px/frame or zoom %/frame depending on --kind
    #[arg(long, default_value_t = 0.0)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
}

fn load_video(path: &Path, raw: &RawArgs) -> Result<VideoSequence, CliError> {
    let is_raw = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("yuv"));
    let file = File::open(path).map_err(|e| io_err(path.display())(e.to_string()))?;
    let mut seq = if is_raw {
        let (Some(w), Some(h)) = (raw.width, raw.height) else {
            return Err(CliError::Usage(
                ".yuv input needs --width and --height".into(),
            ));
        };
        let chroma = match raw.chroma {
            ChromaArg::Yuv420 => ChromaFormat::Yuv420,
            ChromaArg::Yuv444 => ChromaFormat::Yuv444,
        };
        load_raw_yuv(file, w, h, chroma, FrameRate::default())
    } else {
        load_y4m(file)
    }
    .map_err(|e| io_err(path.display())(e.to_string()))?;
    seq.source_name = path.display().to_string();
    Ok(seq)
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match output {
        Some(path) => {
            std::fs::write(path, bytes).map_err(|e| io_err(path.display())(e.to_string()))
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| io_err("stdout")(e.to_string()))
        }
    }
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let cfg = args.analysis.planner_config()?;
    if args.bins == 0 {
        return Err(CliError::Usage("--bins must be at least 1".into()));
    }
    let seq = load_video(&args.input, &args.raw)?;
    let groups = analyze_groups(&seq, &cfg).map_err(|e| CliError::Io(e.to_string()))?;

    let mut csv = Vec::new();
    dump_group_metrics(&groups, &mut csv).map_err(|e| CliError::Io(e.to_string()))?;
    if let Some(path) = &args.histogram {
        let mut hist = Vec::new();
        dump_histograms(&groups, args.bins, &mut hist).map_err(|e| CliError::Io(e.to_string()))?;
        emit(Some(path), &hist)?;
    }
    emit(args.output.as_deref(), &csv)?;

    let still = groups
        .iter()
        .filter(|g| g.verdict == Verdict::Still)
        .count();
    eprintln!(
        "{}: {} frames, {} groups ({} still, {} non-still)",
        seq.source_name,
        seq.len(),
        groups.len(),
        still,
        groups.len() - still
    );
    Ok(())
}

fn cmd_plan(args: &PlanArgs) -> Result<(), CliError> {
    let cfg = args.analysis.planner_config()?;
    let seq = load_video(&args.input, &args.raw)?;
    let plans = plan_sequence(&seq, &cfg).map_err(|e| CliError::Io(e.to_string()))?;
    for g in &plans {
        let report = validate_plan(&g.plan, DEFAULT_BUFFER_SLOTS);
        if !report.passed() {
            return Err(CliError::Validation(format!(
                "internal error: plan for group {} failed validation\n{report}",
                g.group_id
            )));
        }
    }
    let mut json = serde_json::to_vec_pretty(&plans).map_err(|e| CliError::Io(e.to_string()))?;
    json.push(b'\n');
    emit(args.output.as_deref(), &json)?;
    for g in &plans {
        eprintln!(
            "group {} @{} L={} {} -> {}",
            g.group_id, g.first_display_index, g.plan.interval, g.verdict, g.plan.structure
        );
    }
    Ok(())
}

fn cmd_quality(args: &QualityArgs) -> Result<(), CliError> {
    let reference = load_video(&args.reference, &args.raw)?;
    let distorted = load_video(&args.distorted, &args.raw)?;
    let report =
        sequence_quality(&reference, &distorted).map_err(|e| CliError::Io(e.to_string()))?;
    let mut out = String::from("frame,psnr_db,ssim\n");
    for (i, (p, s)) in report.psnr.iter().zip(&report.ssim).enumerate() {
        out.push_str(&format!("{i},{p},{s}\n"));
    }
    out.push_str(&format!("mean,{},{}\n", report.mean_psnr, report.mean_ssim));
    emit(args.output.as_deref(), out.as_bytes())?;
    eprintln!(
        "{} frames: mean PSNR {:.4} dB, mean SSIM {:.6}",
        report.psnr.len(),
        report.mean_psnr,
        report.mean_ssim
    );
    Ok(())
}

fn read_curve(path: &Path) -> Result<RdCurve, CliError> {
    let file = File::open(path).map_err(|e| io_err(path.display())(e.to_string()))?;
    RdCurve::from_csv(file).map_err(|e| io_err(path.display())(e.to_string()))
}

/// Three-decimal rendering without a negative zero.
pub fn format_percent(value: f64) -> String {
    let rounded = (value * 1000.0).round() / 1000.0;
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{rounded:.3}")
}

fn cmd_bdrate(args: &BdrateArgs) -> Result<(), CliError> {
    let base = read_curve(&args.base)?;
    let test = read_curve(&args.test)?;
    let pct = bd_rate(&base, &test).map_err(|e| CliError::Io(e.to_string()))?;
    emit(None, format!("{}\n", format_percent(pct)).as_bytes())
}

fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let spec = SynthSpec {
        kind: args.kind.into(),
        width: args.width,
        height: args.height,
        frame_count: args.frames,
        amplitude: args.amplitude,
        seed: args.seed,
    };
    let seq = generate(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut bytes = Vec::new();
    write_y4m(&seq, &mut bytes).map_err(|e| CliError::Io(e.to_string()))?;
    emit(Some(&args.output), &bytes)?;
    eprintln!(
        "wrote {} frames of {} ({}x{}) to {}",
        seq.len(),
        spec.kind,
        spec.width,
        spec.height,
        args.output.display()
    );
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Quality(a) => cmd_quality(a),
        Command::Bdrate(a) => cmd_bdrate(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

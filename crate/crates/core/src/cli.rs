//! Command-line front end: `segment`, `eval` and `synth`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;

use crate::basis::BasisSet;
use crate::cascade::{segment_image_with, Parallelism};
use crate::error::{Result, SegError};
use crate::io::{self, DecisionReport, EvalReport, ImageScore};
use crate::metrics::{aggregate, AverageMode, MetricsReport};
use crate::params::SegParams;
use crate::reconstruct::fill_background;
use crate::synth::{generate_image, SynthKind, SynthSpec, Tiling};

#[derive(Debug, Parser)]
#[command(name = "scseg", version, about = "Smooth-background / foreground segmentation of screen-content images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Segment an image into background and foreground.
    Segment(SegmentArgs),
    /// Score predicted masks against ground truth.
    Eval(EvalArgs),
    /// Generate a synthetic image with its ground-truth mask.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct ParamArgs {
    #[arg(long, default_value_t = 64)]
    block_size: usize,
    #[arg(long, default_value_t = 10)]
    bases: usize,
    #[arg(long, default_value_t = 10.0)]
    inlier_tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    #[arg(long, default_value_t = 3.0)]
    const_std: f64,
    #[arg(long, default_value_t = 10)]
    max_colors: usize,
    #[arg(long, default_value_t = 50.0)]
    min_range: f64,
    #[arg(long, default_value_t = 0.95)]
    consensus: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ParamArgs {
    fn to_params(&self) -> SegParams {
        SegParams {
            block_size: self.block_size,
            num_bases: self.bases,
            inlier_tol: self.inlier_tol,
            max_iters: self.max_iters,
            const_std_tol: self.const_std,
            max_colors: self.max_colors,
            min_range: self.min_range,
            consensus_frac: self.consensus,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
struct SegmentArgs {
    input: PathBuf,
    #[arg(long)]
    mask_out: PathBuf,
    /// Background layer with foreground holes filled by the smooth model.
    #[arg(long)]
    fill_out: Option<PathBuf>,
    /// JSON report of the cascade stage chosen for each block.
    #[arg(long)]
    decisions_out: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
    /// Worker threads; omit for automatic, 1 for serial.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Predicted mask file, or a directory of them.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth mask file, or a directory paired by file stem.
    #[arg(long)]
    truth: PathBuf,
    /// Pool pixel counts instead of averaging per-image scores.
    #[arg(long)]
    micro: bool,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Constant,
    Smooth,
    Palette,
    Outliers,
    /// Cycle all four kinds across blocks.
    Mixed,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    truth_out: PathBuf,
    #[arg(long, default_value_t = 64)]
    block_size: usize,
    #[arg(long, default_value_t = 10)]
    bases: usize,
    /// Image width; defaults to one block.
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    fraction: f64,
    #[arg(long, default_value_t = 100.0)]
    offset: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Intensity of constant blocks.
    #[arg(long, default_value_t = 128.0)]
    value: f64,
    #[arg(long, default_value_t = 30)]
    background: u8,
    #[arg(long, default_value_t = 220)]
    stroke: u8,
}

/// Parses `argv` (including the program name) and runs the command.
///
/// Returns the process exit code: 0 on success, 1 on runtime errors, 2 on
/// usage errors.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("scseg: error: {e}");
            1
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Segment(a) => segment(a),
        Command::Eval(a) => eval(a),
        Command::Synth(a) => synth(a),
    }
}

fn segment(args: SegmentArgs) -> Result<()> {
    let params = args.params.to_params();
    params.validate()?;
    let image = io::load_image(&args.input)?;
    let parallelism = match args.threads {
        None => Parallelism::Auto,
        Some(0) => return Err(SegError::InvalidParams("--threads must be >= 1".into())),
        Some(1) => Parallelism::Serial,
        Some(n) => Parallelism::Threads(n),
    };
    let result = segment_image_with(&image, &params, parallelism)?;
    io::save_mask(&result.mask, &args.mask_out)?;
    if let Some(path) = &args.fill_out {
        let basis = BasisSet::new(params.block_size, params.num_bases)?;
        io::save_image(&fill_background(&image, &result, &basis)?, path)?;
    }
    if let Some(path) = &args.decisions_out {
        io::write_json(&DecisionReport::new(&result), path)?;
    }
    Ok(())
}

fn is_image_file(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("pgm" | "ppm" | "pnm" | "png")
    )
}

fn list_by_stem(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| SegError::io(dir, e))? {
        let path = entry.map_err(|e| SegError::io(dir, e))?.path();
        if path.is_file() && is_image_file(&path) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.insert(stem.to_string(), path);
            }
        }
    }
    Ok(out)
}

fn eval(args: EvalArgs) -> Result<()> {
    let pairs: Vec<(String, PathBuf, PathBuf)> = if args.pred.is_dir() {
        if !args.truth.is_dir() {
            return Err(SegError::InvalidParams(
                "--pred is a directory but --truth is not".into(),
            ));
        }
        let truths = list_by_stem(&args.truth)?;
        let mut pairs = Vec::new();
        for (stem, pred) in list_by_stem(&args.pred)? {
            match truths.get(&stem) {
                Some(t) => pairs.push((stem, pred, t.clone())),
                None => warn!("no ground truth for {}", pred.display()),
            }
        }
        pairs
    } else {
        let name = args
            .pred
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        vec![(name, args.pred.clone(), args.truth.clone())]
    };
    if pairs.is_empty() {
        return Err(SegError::Empty("no prediction/truth pairs found".into()));
    }

    let mut per_image = Vec::with_capacity(pairs.len());
    for (name, pred, truth) in pairs {
        let report = MetricsReport::evaluate(&io::load_mask(&pred)?, &io::load_mask(&truth)?)?;
        per_image.push(ImageScore { name, report });
    }
    let mode = if args.micro { AverageMode::Micro } else { AverageMode::Macro };
    let reports: Vec<MetricsReport> = per_image.iter().map(|s| s.report.clone()).collect();
    let report = EvalReport {
        aggregate: aggregate(&reports, mode)?,
        per_image,
        mode,
    };
    println!("Precision\tRecall\tF1\n{}", report.aggregate.percent_row());
    io::write_json(&report, &args.report)
}

fn synth(args: SynthArgs) -> Result<()> {
    let basis = BasisSet::new(args.block_size, args.bases)?;
    let (kind, tiling) = match args.kind {
        KindArg::Constant => (SynthKind::Constant { value: args.value }, Tiling::Repeat),
        KindArg::Smooth => (SynthKind::Smooth, Tiling::Repeat),
        KindArg::Palette => (
            SynthKind::PaletteText {
                background: args.background,
                stroke: args.stroke,
            },
            Tiling::Repeat,
        ),
        KindArg::Outliers => (SynthKind::SmoothPlusOutliers, Tiling::Repeat),
        KindArg::Mixed => (SynthKind::Smooth, Tiling::Mixed),
    };
    let spec = SynthSpec::new(args.block_size, kind, args.seed).with_outliers(args.fraction, args.offset);
    let width = args.width.unwrap_or(args.block_size);
    let height = args.height.unwrap_or(args.block_size);
    let (image, truth) = generate_image(&spec, &basis, width, height, tiling)?;
    io::save_image(&image, &args.out)?;
    io::save_mask(&truth, &args.truth_out)
}

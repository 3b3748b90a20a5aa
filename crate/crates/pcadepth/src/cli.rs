//! The `pcadepth` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pcadepth_core::{
    evaluate_protocol, learn_bases, subsample_grid, BasisSet, ColourImage, DepthMap, EvalMode, MetricReport,
    SparseSamples, TrainingCorpus,
};
use serde::Serialize;

use crate::config::{ConfigOverrides, Guidance, ReductionKind, RunConfig};
use crate::error::{Error, Result};
use crate::io;
use crate::pipeline::{self, Method, Report};
use crate::synth;

#[derive(Debug, Parser)]
#[command(name = "pcadepth", version, args_override_self = true, about = "Depth completion from sparse samples with learned depth bases")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic corpus of depth maps with matching colour images.
    Synth(SynthArgs),
    /// Learn a basis from a directory of depth maps.
    Train(TrainArgs),
    /// Complete one depth map from sparse samples.
    Complete(CompleteArgs),
    /// Score a prediction against ground truth as one CSV row.
    Eval(EvalArgs),
    /// Run several methods on the same input and tabulate the metrics.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Numeric settings shared by the commands; each overrides `--config`.
#[derive(Debug, Args, Default)]
pub struct Tuning {
    /// TOML file with any of the settings below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma_i: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma_floor: Option<f64>,
    #[arg(long)]
    pub window_radius: Option<usize>,
    #[arg(long)]
    pub patch_radius: Option<usize>,
    #[arg(long, value_enum)]
    pub guidance: Option<Guidance>,
    #[arg(long, allow_negative_numbers = true)]
    pub cg_tol: Option<f64>,
    #[arg(long)]
    pub cg_max_iters: Option<usize>,
    #[arg(long, value_enum)]
    pub reduction: Option<ReductionKind>,
    /// Keep every `stride`-th row and column of the input depth as samples.
    #[arg(long)]
    pub stride: Option<usize>,
    /// Bad-pixel threshold; defaults to 3 (kitti) or 1 (middlebury).
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: Option<f64>,
    /// Keep only this bottom fraction of every image.
    #[arg(long, allow_negative_numbers = true)]
    pub crop_bottom_fraction: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub fill_tol: Option<f64>,
    #[arg(long)]
    pub fill_max_iters: Option<usize>,
}

impl Tuning {
    fn resolve(&self, k: Option<usize>) -> Result<RunConfig> {
        let flags = ConfigOverrides {
            lambda: self.lambda,
            gamma: self.gamma,
            sigma_i: self.sigma_i,
            sigma_floor: self.sigma_floor,
            window_radius: self.window_radius,
            patch_radius: self.patch_radius,
            guidance: self.guidance,
            cg_tol: self.cg_tol,
            cg_max_iters: self.cg_max_iters,
            reduction: self.reduction,
            k,
            stride: self.stride,
            threshold: self.threshold,
            crop_bottom_fraction: self.crop_bottom_fraction,
            fill_tol: self.fill_tol,
            fill_max_iters: self.fill_max_iters,
        };
        RunConfig::resolve(self.config.as_deref(), &flags)
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory of `.png` (16-bit) or `.pfm` depth maps of one size.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Number of basis columns (may also come from the config file).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub tuning: Tuning,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["samples", "depth"]))]
pub struct CompleteArgs {
    #[arg(long)]
    pub basis: PathBuf,
    /// Samples as `row,col,depth` CSV.
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// Depth map to subsample with `--stride`.
    #[arg(long)]
    pub depth: Option<PathBuf>,
    #[arg(long)]
    pub colour: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Guided)]
    pub method: Method,
    /// `.png` for 16-bit depth or `.pfm`; a JSON report goes next to it.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub tuning: Tuning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Protocol {
    /// Metric depth against sparse ground truth.
    Kitti,
    /// Disparity against dense ground truth with holes.
    Middlebury,
}

impl Protocol {
    fn mode(self) -> EvalMode {
        match self {
            Protocol::Kitti => EvalMode::KittiSparse,
            Protocol::Middlebury => EvalMode::MiddleburyHoles,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long, value_enum, default_value_t = Protocol::Kitti)]
    pub mode: Protocol,
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: Option<f64>,
    #[arg(long, default_value = "-")]
    pub dataset: String,
    /// Defaults to the ground-truth file stem.
    #[arg(long)]
    pub frame: Option<String>,
    /// Defaults to the prediction file stem.
    #[arg(long)]
    pub method: Option<String>,
    /// Print the CSV header line first.
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("frames").required(true).args(["gt", "frames_dir"]))]
pub struct CompareArgs {
    #[arg(long)]
    pub basis: PathBuf,
    /// Ground-truth depth of a single frame.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(long, requires = "gt")]
    pub colour: Option<PathBuf>,
    /// Directory of `depth_*.png|pfm` frames with matching `colour_*.ppm|png`.
    #[arg(long)]
    pub frames_dir: Option<PathBuf>,
    /// With `--frames-dir`, use every N-th frame.
    #[arg(long, default_value_t = 1, requires = "frames_dir")]
    pub every: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Method::Pca, Method::Guided])]
    pub methods: Vec<Method>,
    #[arg(long, value_enum, default_value_t = Protocol::Kitti)]
    pub mode: Protocol,
    #[arg(long, default_value = "-")]
    pub dataset: String,
    /// Emit CSV rows instead of a table.
    #[arg(long)]
    pub csv: bool,
    #[command(flatten)]
    pub tuning: Tuning,
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(cli.command, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Synth(a) => cmd_synth(&a, out),
        Command::Train(a) => cmd_train(&a, out),
        Command::Complete(a) => cmd_complete(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Compare(a) => cmd_compare(&a, out),
    }
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::io(Path::new("<stdout>"), e)
}

fn cmd_synth(a: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    let scenes = synth::corpus(a.count, a.height, a.width, a.seed)?;
    synth::write_corpus(&a.out, &scenes)?;
    writeln!(out, "wrote {} scenes of {}x{} to {}", scenes.len(), a.height, a.width, a.out.display()).map_err(stdout_err)
}

fn crop_depth(d: DepthMap, cfg: &RunConfig) -> Result<DepthMap> {
    let rows = cfg.cropped_rows(d.height());
    Ok(if rows == d.height() { d } else { d.crop_bottom(rows)? })
}

fn crop_colour(c: ColourImage, cfg: &RunConfig) -> Result<ColourImage> {
    let rows = cfg.cropped_rows(c.height());
    Ok(if rows == c.height() { c } else { c.crop_bottom(rows)? })
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<_>>()?;
    paths.sort();
    Ok(paths)
}

fn has_extension(path: &Path, exts: &[&str]) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| exts.iter().any(|x| e.eq_ignore_ascii_case(x)))
}

fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = a.tuning.resolve(a.k)?;
    let k = cfg
        .k
        .ok_or_else(|| Error::Usage("train needs k (--k or `k` in the config file)".into()))?;
    let files: Vec<PathBuf> = sorted_entries(&a.corpus)?
        .into_iter()
        .filter(|p| has_extension(p, &["png", "pfm"]))
        .collect();
    if files.is_empty() {
        return Err(Error::format(&a.corpus, "no .png or .pfm depth maps found"));
    }
    let maps = files
        .iter()
        .map(|p| io::read_depth(p).and_then(|d| crop_depth(d, &cfg)))
        .collect::<Result<Vec<_>>>()?;
    let corpus = TrainingCorpus::new(maps)?
        .with_tag(a.corpus.display().to_string())
        .filled(cfg.fill_tol, cfg.fill_max_iters)?;
    let basis = learn_bases(&corpus, k)?;
    io::write_basis(&a.out, &basis)?;

    let sv = basis.singular_values();
    let energy: f64 = sv.iter().map(|s| s * s).sum();
    let mut running = 0.0;
    writeln!(out, "trained k={} on {} maps of {}x{} -> {}", k, corpus.len(), basis.height(), basis.width(), a.out.display())
        .map_err(stdout_err)?;
    writeln!(out, "component,singular_value,cumulative_energy").map_err(stdout_err)?;
    for (j, s) in sv.iter().enumerate() {
        running += s * s;
        let frac = if energy > 0.0 { running / energy } else { 1.0 };
        writeln!(out, "{j},{s:.6e},{frac:.6}").map_err(stdout_err)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Sidecar<'a> {
    #[serde(flatten)]
    report: &'a Report,
    config: &'a RunConfig,
}

/// Report path next to an output file: `out.png` gets `out.png.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn load_colour(path: Option<&Path>, cfg: &RunConfig) -> Result<Option<ColourImage>> {
    path.map(|p| io::read_colour(p).and_then(|c| crop_colour(c, cfg)))
        .transpose()
}

fn cmd_complete(a: &CompleteArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = a.tuning.resolve(None)?;
    if a.method.needs_colour() && a.colour.is_none() {
        return Err(Error::Usage(format!("--method {} requires --colour", a.method.name())));
    }
    let basis = io::read_basis(&a.basis)?;
    let samples = match (&a.samples, &a.depth) {
        (Some(csv), _) => io::read_samples_csv(csv, basis.height(), basis.width())?,
        (None, Some(depth)) => subsample_grid(&crop_depth(io::read_depth(depth)?, &cfg)?, cfg.stride)?,
        (None, None) => return Err(Error::Usage("one of --samples or --depth is required".into())),
    };
    let colour = load_colour(a.colour.as_deref(), &cfg)?;
    if let Some(c) = &colour {
        ensure_same_grid(&basis, c.height(), c.width())?;
    }
    let done = pipeline::complete(a.method, &basis, &samples, colour.as_ref(), &cfg)?;
    io::write_depth(&a.out, &done.depth)?;
    let json = serde_json::to_string_pretty(&Sidecar {
        report: &done.report,
        config: &cfg,
    })
    .expect("report serializes");
    let side = sidecar_path(&a.out);
    fs::write(&side, json + "\n").map_err(|e| Error::io(&side, e))?;
    writeln!(
        out,
        "{}: {} samples, residual {:.3e}, objective {:.6e}, {} iterations -> {}",
        a.method.name(),
        samples.len(),
        done.report.residual_norm,
        done.report.objective,
        done.report.iterations,
        a.out.display()
    )
    .map_err(stdout_err)?;
    if !done.report.converged {
        return Err(Error::NotConverged(format!(
            "{} solve stopped at relative residual {:.3e} after {} iterations; best iterate written to {}",
            a.method.name(),
            done.report.normal_residual.unwrap_or(f64::NAN),
            done.report.iterations,
            a.out.display()
        )));
    }
    Ok(())
}

fn ensure_same_grid(basis: &BasisSet, height: usize, width: usize) -> Result<()> {
    if (basis.height(), basis.width()) != (height, width) {
        return Err(pcadepth_core::Error::ResolutionMismatch {
            expected_height: basis.height(),
            expected_width: basis.width(),
            height,
            width,
        }
        .into());
    }
    Ok(())
}

const CSV_HEADER: [&str; 8] = ["dataset", "frame", "method", "mre", "bpr", "threshold", "evaluated", "excluded"];

fn csv_row(w: &mut csv::Writer<&mut dyn Write>, dataset: &str, frame: &str, method: &str, r: &MetricReport) -> Result<()> {
    w.write_record([
        dataset.to_string(),
        frame.to_string(),
        method.to_string(),
        format!("{}", r.mre),
        format!("{}", r.bpr),
        format!("{}", r.threshold),
        r.evaluated_pixels.to_string(),
        r.excluded_pixels.to_string(),
    ])
    .map_err(|e| Error::Usage(format!("writing CSV: {e}")))
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let gt = io::read_depth(&a.gt)?;
    let pred = io::read_depth(&a.pred)?;
    let mode = a.mode.mode();
    let threshold = a.threshold.unwrap_or(mode.default_threshold());
    let report = evaluate_protocol(&gt, &pred, mode, threshold)?;
    let mut w = csv::WriterBuilder::new().from_writer(out);
    if a.header {
        w.write_record(CSV_HEADER).map_err(|e| Error::Usage(e.to_string()))?;
    }
    let frame = a.frame.clone().unwrap_or_else(|| stem(&a.gt));
    let method = a.method.clone().unwrap_or_else(|| stem(&a.pred));
    csv_row(&mut w, &a.dataset, &frame, &method, &report)?;
    w.flush().map_err(stdout_err)
}

struct Frame {
    name: String,
    depth: PathBuf,
    colour: Option<PathBuf>,
}

/// Pairs `depth_<id>.{png,pfm}` with `colour_<id>.{ppm,png}`.
fn list_frames(dir: &Path, every: usize) -> Result<Vec<Frame>> {
    if every == 0 {
        return Err(Error::Usage("--every must be at least 1".into()));
    }
    let entries = sorted_entries(dir)?;
    let mut frames = Vec::new();
    for path in &entries {
        let name = stem(path);
        let Some(id) = name.strip_prefix("depth_") else { continue };
        if !has_extension(path, &["png", "pfm"]) {
            continue;
        }
        let colour = ["ppm", "png"]
            .iter()
            .map(|ext| dir.join(format!("colour_{id}.{ext}")))
            .find(|p| p.is_file());
        frames.push(Frame {
            name: id.to_string(),
            depth: path.clone(),
            colour,
        });
    }
    if frames.is_empty() {
        return Err(Error::format(dir, "no depth_* frames found"));
    }
    Ok(frames.into_iter().step_by(every).collect())
}

struct Row {
    frame: String,
    method: Method,
    metrics: MetricReport,
    converged: bool,
}

fn cmd_compare(a: &CompareArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = a.tuning.resolve(None)?;
    let basis = io::read_basis(&a.basis)?;
    let frames = match (&a.gt, &a.frames_dir) {
        (Some(gt), _) => vec![Frame {
            name: stem(gt),
            depth: gt.clone(),
            colour: a.colour.clone(),
        }],
        (None, Some(dir)) => list_frames(dir, a.every)?,
        (None, None) => return Err(Error::Usage("one of --gt or --frames-dir is required".into())),
    };
    if a.methods.iter().any(|m| m.needs_colour()) {
        if let Some(f) = frames.iter().find(|f| f.colour.is_none()) {
            return Err(Error::Usage(format!("frame {} has no colour image for the guided methods", f.name)));
        }
    }
    let mode = a.mode.mode();
    let threshold = cfg.threshold.unwrap_or(mode.default_threshold());

    let mut rows = Vec::new();
    for frame in &frames {
        let gt = crop_depth(io::read_depth(&frame.depth)?, &cfg)?;
        let colour = load_colour(frame.colour.as_deref(), &cfg)?;
        let samples: SparseSamples = subsample_grid(&gt, cfg.stride)?;
        for &method in &a.methods {
            let done = pipeline::complete(method, &basis, &samples, colour.as_ref(), &cfg)?;
            rows.push(Row {
                frame: frame.name.clone(),
                method,
                metrics: evaluate_protocol(&gt, &done.depth, mode, threshold)?,
                converged: done.report.converged,
            });
        }
    }

    if a.csv {
        let mut w = csv::WriterBuilder::new().from_writer(&mut *out);
        w.write_record(CSV_HEADER).map_err(|e| Error::Usage(e.to_string()))?;
        for r in &rows {
            csv_row(&mut w, &a.dataset, &r.frame, r.method.name(), &r.metrics)?;
        }
        w.flush().map_err(stdout_err)?;
    } else {
        print_table(out, &rows, &a.methods, threshold).map_err(stdout_err)?;
    }
    if let Some(r) = rows.iter().find(|r| !r.converged) {
        return Err(Error::NotConverged(format!("frame {} method {}", r.frame, r.method.name())));
    }
    Ok(())
}

fn print_table(out: &mut dyn Write, rows: &[Row], methods: &[Method], threshold: f64) -> std::io::Result<()> {
    writeln!(out, "{:<16} {:<8} {:>10} {:>10} {:>10}", "frame", "method", "MRE(%)", format!("BPR>{threshold}(%)"), "pixels")?;
    for r in rows {
        let flag = if r.converged { "" } else { " (not converged)" };
        writeln!(
            out,
            "{:<16} {:<8} {:>10.3} {:>10.3} {:>10}{flag}",
            r.frame,
            r.method.name(),
            100.0 * r.metrics.mre,
            100.0 * r.metrics.bpr,
            r.metrics.evaluated_pixels
        )?;
    }
    let frames = rows.iter().filter(|r| r.method == methods[0]).count();
    if frames > 1 {
        for &m in methods {
            let sel: Vec<&Row> = rows.iter().filter(|r| r.method == m).collect();
            let n = sel.len() as f64;
            writeln!(
                out,
                "{:<16} {:<8} {:>10.3} {:>10.3} {:>10}",
                "mean",
                m.name(),
                100.0 * sel.iter().map(|r| r.metrics.mre).sum::<f64>() / n,
                100.0 * sel.iter().map(|r| r.metrics.bpr).sum::<f64>() / n,
                sel.iter().map(|r| r.metrics.evaluated_pixels).sum::<usize>()
            )?;
        }
    }
    Ok(())
}

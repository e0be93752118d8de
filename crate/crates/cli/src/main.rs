use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fgai::analyze::{fisher_j, prune_zero_features, rank_report, vstack, FeatureMatrix, DEFAULT_TOP_N};
use fgai::classify::{evaluate, train_ovr_svm, CvConfig, EvalReport, FoldSpec, Metric, SvmConfig};
use fgai::mesh::{load_textured_mesh, write_obj};
use fgai::pipeline::{fuse_directory, pixel_features, run_pipeline, Manifest, PipelineConfig, ScanStatus};
use fgai::resample::{self, ResampleConfig};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("FGAI_BUILD_REV"), ")");

#[derive(Parser)]
#[command(name = "fgai", version = VERSION, about = "Fused geometry-augmented images from textured meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn every manifest scan into GAI and FGAI images.
    Process(ProcessArgs),
    /// Fuse existing GAI PNGs into FGAIs.
    Fuse(FuseArgs),
    /// Build an FMX1 feature matrix from downsampled image pixels.
    Pixels(PixelsArgs),
    /// Rank features by the discrimination criterion.
    Analyze(AnalyzeArgs),
    /// Train a one-vs-rest SVM and save it as JSON.
    Train(TrainArgs),
    /// Subject-disjoint cross-validation, one decision per sample.
    Eval(EvalArgs),
    /// Cross-validation with sliding-window voting over frame sequences.
    DynamicEval(DynamicEvalArgs),
}

#[derive(Args)]
struct ProcessArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    step: Option<String>,
    /// vertex-density or edge-length
    #[arg(long)]
    spacing: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    resample: Option<String>,
    #[arg(long = "radius_multiplier", alias = "radius-multiplier")]
    radius_multiplier: Option<String>,
    /// Comma-separated, e.g. K,H,GL,LD,SI
    #[arg(long)]
    kinds: Option<String>,
    /// WxH or a single side
    #[arg(long)]
    size: Option<String>,
    /// all, none, or a comma-separated list such as H-LD-SI
    #[arg(long)]
    combos: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    permutations: Option<String>,
    /// per-image or fixed
    #[arg(long)]
    normalization: Option<String>,
    #[arg(long = "range_K", value_name = "LO,HI")]
    range_k: Option<String>,
    #[arg(long = "range_H", value_name = "LO,HI")]
    range_h: Option<String>,
    #[arg(long = "range_LD", value_name = "LO,HI")]
    range_ld: Option<String>,
    #[arg(long = "range_SI", value_name = "LO,HI")]
    range_si: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    augment: Option<String>,
    #[arg(long = "augment_flip", alias = "augment-flip", num_args = 0..=1, default_missing_value = "true")]
    augment_flip: Option<String>,
    #[arg(long = "augment_rotation", alias = "augment-rotation")]
    augment_rotation: Option<String>,
    #[arg(long = "augment_noise", alias = "augment-noise")]
    augment_noise: Option<String>,
    #[arg(long = "augment_seed", alias = "augment-seed")]
    augment_seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// Worker threads; 0 picks one per core.
    #[arg(long)]
    workers: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    force: Option<String>,
    /// Also write each resampled mesh as `<scan>.resampled.obj`.
    #[arg(long = "dump_resampled", alias = "dump-resampled")]
    dump_resampled: bool,
}

impl ProcessArgs {
    fn overrides(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("step", &self.step),
            ("spacing", &self.spacing),
            ("resample", &self.resample),
            ("radius_multiplier", &self.radius_multiplier),
            ("kinds", &self.kinds),
            ("size", &self.size),
            ("combos", &self.combos),
            ("permutations", &self.permutations),
            ("normalization", &self.normalization),
            ("range_K", &self.range_k),
            ("range_H", &self.range_h),
            ("range_LD", &self.range_ld),
            ("range_SI", &self.range_si),
            ("augment", &self.augment),
            ("augment_flip", &self.augment_flip),
            ("augment_rotation", &self.augment_rotation),
            ("augment_noise", &self.augment_noise),
            ("augment_seed", &self.augment_seed),
            ("out", &self.out),
            ("workers", &self.workers),
            ("force", &self.force),
        ]
    }

    fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::from_file(p)?,
            None => PipelineConfig::default(),
        };
        for (key, value) in self.overrides() {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct FuseArgs {
    /// Directory holding `<scan>.<kind>.png` files; FGAIs are written there.
    #[arg(long)]
    dir: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "all")]
    combos: String,
}

#[derive(Args)]
struct PixelsArgs {
    #[arg(long)]
    dir: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    /// Image names to concatenate per scan, e.g. H-LD-SI or K
    #[arg(long, value_delimiter = ',', required = true)]
    images: Vec<String>,
    /// Box-average block size in pixels.
    #[arg(long, default_value_t = 8)]
    block: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// One or more FMX1 files; several are pooled sample-wise.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TOP_N)]
    top: usize,
}

#[derive(Args, Clone)]
struct SvmArgs {
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long = "max-iter", default_value_t = 100)]
    max_iter: usize,
    #[arg(long = "no-standardize")]
    no_standardize: bool,
}

impl SvmArgs {
    fn config(&self) -> SvmConfig {
        SvmConfig { c: self.c, max_iter: self.max_iter, standardize: !self.no_standardize, ..SvmConfig::default() }
    }
}

#[derive(Args)]
struct TrainArgs {
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    svm: SvmArgs,
}

#[derive(Args)]
struct EvalArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// accuracy or auc
    #[arg(long, default_value = "accuracy")]
    metric: String,
    #[command(flatten)]
    svm: SvmArgs,
    /// Writes PREFIX.json, PREFIX.txt and PREFIX.auc.csv
    #[arg(long)]
    report: Option<PathBuf>,
}

impl EvalArgs {
    fn config(&self) -> Result<CvConfig> {
        Ok(CvConfig { folds: self.folds, seed: self.seed, metric: self.metric.parse::<Metric>()?, svm: self.svm.config() })
    }
}

#[derive(Args)]
struct DynamicEvalArgs {
    #[command(flatten)]
    eval: EvalArgs,
    #[arg(long, default_value_t = 6)]
    window: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Process(a) => process(&a),
        Command::Fuse(a) => {
            let manifest = Manifest::read(&a.manifest)?;
            let mut cfg = PipelineConfig::default();
            cfg.set("combos", &a.combos)?;
            let written = fuse_directory(&a.dir, &manifest, &cfg.combo_list()?)?;
            println!("{} images written", written.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::Pixels(a) => {
            let manifest = Manifest::read(&a.manifest)?;
            let fm = pixel_features(&a.dir, &manifest, &a.images, a.block)?;
            fm.write(&a.out)?;
            println!("{} x {} written to {}", fm.rows(), fm.cols(), a.out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Analyze(a) => analyze(&a),
        Command::Train(a) => {
            let fm = FeatureMatrix::read(&a.input)?;
            let model = train_ovr_svm(&fm, &a.svm.config())?;
            let unconverged = model.models.iter().filter(|m| !m.converged).count();
            if unconverged > 0 {
                log::warn!("{unconverged} of {} models hit max-iter", model.models.len());
            }
            fs::write(&a.out, serde_json::to_string_pretty(&model)?)
                .with_context(|| format!("writing {}", a.out.display()))?;
            println!("{} classes, {} features, model written to {}", model.classes.len(), model.dim(), a.out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval(a) => eval(&a, None),
        Command::DynamicEval(a) => eval(&a.eval, Some(a.window)),
    }
}

fn process(a: &ProcessArgs) -> Result<ExitCode> {
    let cfg = a.config()?;
    let manifest = Manifest::read(&a.manifest)?;
    let summary = run_pipeline(&cfg, &manifest)?;
    if a.dump_resampled {
        for e in &manifest.entries {
            if matches!(summary.scans.iter().find(|(id, _)| *id == e.scan_id), Some((_, ScanStatus::Failed(_)))) {
                continue;
            }
            let (mesh, _) = load_textured_mesh(&e.mesh, &e.texture)?;
            let frame = resample::principal_frame(mesh.geometry())?;
            let r = resample::resample(&mesh, &frame, &ResampleConfig { step: cfg.step, spacing: cfg.spacing })?;
            let uv = resample::resampled_vertex_uv(&r, &mesh);
            let path = cfg.out.join(format!("{}.resampled.obj", e.scan_id));
            fs::write(&path, write_obj(&r.mesh, Some(&uv))).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    print!("{}", summary.log_text());
    for id in summary.failed() {
        eprintln!("failed: {id}");
    }
    Ok(if summary.success() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn analyze(a: &AnalyzeArgs) -> Result<ExitCode> {
    let parts = a.inputs.iter().map(|p| FeatureMatrix::read(p)).collect::<Result<Vec<_>, _>>()?;
    let pooled = vstack(&parts)?;
    let (pruned, kept) = prune_zero_features(&pooled)?;
    let report = fisher_j(&pruned)?;
    let csv = rank_report(&report, a.top, Some(&kept))?;
    log::info!("{} of {} features kept after pruning", kept.len(), pooled.cols());
    match &a.out {
        Some(p) => fs::write(p, csv).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn eval(a: &EvalArgs, window: Option<usize>) -> Result<ExitCode> {
    let fm = FeatureMatrix::read(&a.input)?;
    let cfg = a.config()?;
    if window.is_some() && fm.samples().iter().any(|s| s.sequence_id.is_none() || s.frame_index.is_none()) {
        bail!("dynamic-eval needs sequence_id and frame_index for every sample");
    }
    let spec = FoldSpec::new(&fm.subjects(), cfg.folds, cfg.seed)?;
    let report = evaluate(&fm, &spec, &cfg, window)?;
    print!("{}", report.to_table());
    if let Some(prefix) = &a.report {
        write_report(prefix, &report)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_report(prefix: &Path, report: &EvalReport) -> Result<()> {
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    for (suffix, body) in [
        (".json", report.to_json()),
        (".txt", report.to_table()),
        (".auc.csv", report.per_class_auc_csv()),
    ] {
        let path = with_suffix(prefix, suffix);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

//! `synthforge` command-line front end.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 I/O error,
//! 4 data-contract violation (bad manifest, mixed config hashes, bad
//! prediction log).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use synthforge::config::{ConfigError, RunConfig};
use synthforge::dataset::{self, DatasetError, Manifest};
use synthforge::evalkit::{self, EvalError, GroupKey};
use synthforge::mesh::{normalize_mesh, MeshError};
use synthforge::par::available_workers;
use synthforge::scene::ScaleMode;
use synthforge::{bench, shapes};

#[derive(Parser)]
#[command(name = "synthforge", version, about = "Deterministic synthetic image datasets from CAD meshes")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a labeled dataset.
    Gen(GenArgs),
    /// Chroma-key a rendered dataset into normalized RGBA cutouts.
    Cutout(CutoutArgs),
    /// Write augmented copies of a dataset.
    Augment(AugmentArgs),
    /// Split a manifest into per-class train and validation manifests.
    Split(SplitArgs),
    /// Take a nested per-class subsample of a manifest.
    Subsample(SubsampleArgs),
    /// Evaluate classifier prediction logs.
    Eval(EvalArgs),
    /// Measure render throughput.
    Bench(BenchArgs),
    /// Summarize one or more manifests.
    Report(ReportArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Run configuration (JSON). Defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, env = "SYNTHFORGE_SEED")]
    seed: Option<u64>,
    /// Render worker threads; outputs do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Output directory (overrides `output_dir`).
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n_per_class: Option<u32>,
    /// `fixed_scale` or `variable_scale`.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<ScaleMode>,
    #[arg(long)]
    width: Option<u32>,
    #[arg(long)]
    height: Option<u32>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    dump_config: bool,
}

#[derive(Args)]
struct CutoutArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Source manifest (`manifest.jsonl`) or its directory.
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long)]
    out_size: Option<u32>,
}

#[derive(Args)]
struct AugmentArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    /// Augmented variants per source image.
    #[arg(long, default_value_t = 1)]
    copies: u32,
}

#[derive(Args)]
struct SplitArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(short, long)]
    manifest: PathBuf,
    /// Output directory; defaults to the manifest's directory.
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long)]
    train_fraction: Option<f64>,
}

#[derive(Args)]
struct SubsampleArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(short, long)]
    manifest: PathBuf,
    /// Images kept per class.
    #[arg(short, long, value_parser = clap::value_parser!(u32).range(1..))]
    n: u32,
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Output manifest stem; defaults to `subsample_<n>`.
    #[arg(long)]
    stem: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    /// Prediction logs (JSON Lines). Several logs print one gated row each.
    #[arg(required = true)]
    logs: Vec<PathBuf>,
    /// Confidence gate threshold in [0, 1].
    #[arg(long)]
    threshold: Option<f64>,
    /// Keep only records tagged with this zoom factor.
    #[arg(long)]
    zoom: Option<f64>,
    /// Break results down by `class`, `zoom` or `dataset`.
    #[arg(long)]
    group_by: Option<GroupKey>,
    /// Class names for table rows, comma separated.
    #[arg(long, value_delimiter = ',')]
    classes: Vec<String>,
    /// Emit JSON instead of tables.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Mesh file or `builtin:<name>`.
    #[arg(long, default_value = "builtin:cylinder_cluster")]
    mesh: String,
    /// Images per measurement.
    #[arg(short, long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 512)]
    width: u32,
    #[arg(long, default_value_t = 512)]
    height: u32,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Manifests to summarize; all must share one config hash unless `--allow-mixed`.
    #[arg(required = true)]
    manifests: Vec<PathBuf>,
    #[arg(long)]
    allow_mixed: bool,
}

fn parse_mode(s: &str) -> Result<ScaleMode, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown mode {s:?}; expected fixed_scale or variable_scale"))
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
    Data(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
            Failure::Data(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Io(m) | Failure::Data(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let msg = e.to_string();
        match e {
            ConfigError::Unreadable { .. } => Failure::Io(msg),
            ConfigError::Mesh { source: MeshError::UnreadableFile { .. }, .. } => Failure::Io(msg),
            ConfigError::Mesh { .. } => Failure::Data(msg),
            ConfigError::Parse { .. } | ConfigError::Invalid { .. } => Failure::Usage(msg),
        }
    }
}

impl From<DatasetError> for Failure {
    fn from(e: DatasetError) -> Self {
        let msg = e.to_string();
        match e {
            DatasetError::Io { .. } | DatasetError::Image { .. } => Failure::Io(msg),
            DatasetError::InvalidArgument(_)
            | DatasetError::Scene(_)
            | DatasetError::Render(synthforge::render::RenderError::InvalidConfig(_))
            | DatasetError::Chroma(_)
            | DatasetError::Augment(synthforge::augment::AugmentError::InvalidSpec(_)) => Failure::Usage(msg),
            _ => Failure::Data(msg),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Io { .. } => Failure::Io(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl From<MeshError> for Failure {
    fn from(e: MeshError) -> Self {
        match e {
            MeshError::UnreadableFile { .. } => Failure::Io(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn load_config(args: &ConfigArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(w) = args.workers {
        cfg.workers = Some(w);
    }
    Ok(cfg)
}

fn workers(cfg: &RunConfig) -> usize {
    cfg.workers.unwrap_or_else(available_workers)
}

/// Accepts a manifest path or a directory holding `manifest.jsonl`.
fn manifest_file(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join("manifest.jsonl")
    } else {
        p.to_path_buf()
    }
}

fn parent_dir(p: &Path) -> PathBuf {
    match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn print_json<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

/// Effective configuration without host-specific fields, for provenance.
fn write_run_config(cfg: &RunConfig, dir: &Path) -> Outcome {
    let mut portable = cfg.clone();
    portable.output_dir = None;
    portable.workers = None;
    let path = dir.join("run_config.json");
    std::fs::write(&path, portable.to_json_pretty() + "\n")
        .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn cmd_gen(a: GenArgs) -> Outcome {
    let mut cfg = load_config(&a.cfg)?;
    if let Some(n) = a.n_per_class {
        cfg.n_per_class = n;
    }
    if let Some(m) = a.mode {
        cfg.spec.mode = m;
    }
    if let Some(w) = a.width {
        cfg.render.width = w;
    }
    if let Some(h) = a.height {
        cfg.render.height = h;
    }
    if let Some(o) = a.out {
        cfg.output_dir = Some(o);
    }
    cfg.validate()?;
    if a.dump_config {
        println!("{}", cfg.to_json_pretty());
        return Ok(());
    }
    let out = cfg.output_dir.clone().ok_or_else(|| Failure::Usage("no output directory: pass --out or set output_dir".into()))?;
    let meshes = cfg.load_meshes()?;
    let start = std::time::Instant::now();
    let m = dataset::generate_dataset(&cfg, &meshes, &out, workers(&cfg))?;
    write_run_config(&cfg, &out)?;
    log::info!("rendered {} images in {:.2}s", m.records.len(), start.elapsed().as_secs_f64());
    println!("wrote {} records to {} (config_hash {})", m.records.len(), out.display(), m.header.config_hash);
    Ok(())
}

fn cmd_cutout(a: CutoutArgs) -> Outcome {
    let mut cfg = load_config(&a.cfg)?;
    if let Some(s) = a.out_size {
        cfg.cutout.out_size = s;
    }
    cfg.validate()?;
    let src = manifest_file(&a.input);
    let source = Manifest::read(&src)?;
    let m = dataset::cutout_dataset(&source, &parent_dir(&src), &cfg, &a.out, workers(&cfg))?;
    println!("wrote {} cutouts to {} (config_hash {})", m.records.len(), a.out.display(), m.header.config_hash);
    Ok(())
}

fn cmd_augment(a: AugmentArgs) -> Outcome {
    let cfg = load_config(&a.cfg)?;
    cfg.validate()?;
    let src = manifest_file(&a.input);
    let source = Manifest::read(&src)?;
    let m = dataset::augment_dataset(&source, &parent_dir(&src), &cfg.augment, cfg.seed, a.copies, &a.out, workers(&cfg))?;
    println!("wrote {} augmented images to {} (config_hash {})", m.records.len(), a.out.display(), m.header.config_hash);
    Ok(())
}

/// Points a derived manifest written to `out` at the source's images.
fn rebase(m: &mut Manifest, source_dir: &Path, out: &Path) -> Outcome {
    let same = std::fs::canonicalize(source_dir).ok() == std::fs::canonicalize(out).ok();
    if !same {
        let abs = std::fs::canonicalize(source_dir.join(&m.header.image_root))
            .map_err(|e| Failure::Io(format!("cannot resolve {}: {e}", source_dir.display())))?;
        m.header.image_root = abs.display().to_string();
    }
    Ok(())
}

fn cmd_split(a: SplitArgs) -> Outcome {
    let mut cfg = load_config(&a.cfg)?;
    if let Some(f) = a.train_fraction {
        cfg.split.train_fraction = f;
    }
    cfg.split.validate().map_err(|e| Failure::Usage(format!("invalid config field `split`: {e}")))?;
    let src = manifest_file(&a.manifest);
    let source = Manifest::read(&src)?;
    let src_dir = parent_dir(&src);
    let out = a.out.unwrap_or_else(|| src_dir.clone());
    std::fs::create_dir_all(&out).map_err(|e| Failure::Io(format!("cannot create {}: {e}", out.display())))?;
    let (mut train, mut val) = dataset::split(&source, &cfg.split, cfg.seed)?;
    rebase(&mut train, &src_dir, &out)?;
    rebase(&mut val, &src_dir, &out)?;
    train.write(&out, "train")?;
    val.write(&out, "val")?;
    println!("train {:?} val {:?} written to {}", train.counts(), val.counts(), out.display());
    Ok(())
}

fn cmd_subsample(a: SubsampleArgs) -> Outcome {
    let cfg = load_config(&a.cfg)?;
    let src = manifest_file(&a.manifest);
    let source = Manifest::read(&src)?;
    let src_dir = parent_dir(&src);
    let out = a.out.unwrap_or_else(|| src_dir.clone());
    std::fs::create_dir_all(&out).map_err(|e| Failure::Io(format!("cannot create {}: {e}", out.display())))?;
    let (mut m, batch) = dataset::subsample(&source, a.n as usize, cfg.seed)?;
    rebase(&mut m, &src_dir, &out)?;
    let stem = a.stem.unwrap_or_else(|| format!("subsample_{}", a.n));
    let path = m.write(&out, &stem)?;
    println!("{} per class -> {} (recommended batch size {batch})", a.n, path.display());
    Ok(())
}

#[derive(Serialize)]
struct EvalOutput {
    log: String,
    report: evalkit::EvalReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    gated: Option<evalkit::GatedReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grouped: Option<evalkit::GroupedReport>,
}

fn cmd_eval(a: EvalArgs) -> Outcome {
    if let Some(t) = a.threshold {
        if !(0.0..=1.0).contains(&t) {
            return Err(Failure::Usage(format!("--threshold {t} must lie in [0, 1]")));
        }
    }
    let mut outputs = Vec::new();
    for path in &a.logs {
        let mut records = evalkit::read_prediction_log(path)?;
        if let Some(z) = a.zoom {
            records.retain(|r| r.zoom.is_some_and(|rz| (rz - z).abs() < 1e-9));
        }
        let report = evalkit::evaluate(&records)?;
        let gated = a.threshold.map(|t| evalkit::confidence_gate(&records, t));
        let grouped = a.group_by.map(|k| evalkit::grouped_report(&records, k)).transpose()?;
        outputs.push(EvalOutput { log: path.display().to_string(), report, gated, grouped });
    }
    if a.json {
        print_json(&outputs);
        return Ok(());
    }
    for o in &outputs {
        println!("== {}", o.log);
        print!("{}", evalkit::format_report(&o.report, &a.classes));
        if let Some(g) = &o.grouped {
            println!();
            print!("{}", evalkit::format_grouped(g));
        }
        if let Some(g) = &o.gated {
            println!(
                "Confident (>= {:.2}): {}  accuracy of confident: {}",
                g.threshold,
                g.confident_summary(),
                g.accuracy_of_confident.percent()
            );
        }
        println!();
    }
    if outputs.len() > 1 && outputs.iter().all(|o| o.gated.is_some()) {
        let rows: Vec<(String, evalkit::GatedReport)> = outputs
            .iter()
            .map(|o| {
                let name = Path::new(&o.log).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                (name, o.gated.clone().expect("checked"))
            })
            .collect();
        print!("{}", evalkit::format_gated_table(&rows));
    }
    Ok(())
}

#[derive(Serialize)]
struct BenchOutput {
    single: bench::BenchReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    parallel: Option<bench::BenchReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    speedup: Option<f64>,
}

fn cmd_bench(a: BenchArgs) -> Outcome {
    if a.n == 0 {
        return Err(Failure::Usage("--n must be at least 1".into()));
    }
    let mut cfg = load_config(&a.cfg)?;
    cfg.render.width = a.width;
    cfg.render.height = a.height;
    cfg.validate()?;
    let mesh = normalize_mesh(&shapes::resolve(&a.mesh)?)?;
    let w = workers(&cfg);
    let single = bench::measure(&mesh, &cfg.spec, &cfg.render, cfg.seed, a.n, 1)?;
    let parallel = if w > 1 { Some(bench::measure(&mesh, &cfg.spec, &cfg.render, cfg.seed, a.n, w)?) } else { None };
    let speedup = parallel.as_ref().map(|p| bench::speedup(p, &single));
    let out = BenchOutput { single, parallel, speedup };
    if a.json {
        print_json(&out);
        return Ok(());
    }
    let line = |r: &bench::BenchReport| {
        println!(
            "workers {:>2}: {} images {}x{} ({} triangles) in {:.3}s, {:.2} ms/image, {:.1} images/s",
            r.workers, r.images, r.width, r.height, r.triangles, r.total_seconds, r.ms_per_image, r.images_per_second
        )
    };
    line(&out.single);
    if let (Some(p), Some(s)) = (&out.parallel, out.speedup) {
        line(p);
        println!("speedup {s:.2}x with {} workers ({} hardware threads)", p.workers, available_workers());
    }
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Outcome {
    let mut manifests = Vec::new();
    for p in &a.manifests {
        let path = manifest_file(p);
        manifests.push((path.clone(), Manifest::read(&path)?));
    }
    if !a.allow_mixed {
        dataset::ensure_same_hash(manifests.iter().map(|(_, m)| m))?;
    }
    for (path, m) in &manifests {
        let h = &m.header;
        println!("{} [{}] config_hash {}", path.display(), h.kind, h.config_hash);
        println!("  created {}  mode {:?}  frame {}x{}", h.created, h.spec.mode, h.render.width, h.render.height);
        for (class, splits) in dataset::summarize(m) {
            let parts: Vec<String> = splits.iter().map(|(s, n)| format!("{s} {n}")).collect();
            println!("  {class:<20} {}", parts.join(", "));
        }
        println!("  total {}", m.records.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Cutout(a) => cmd_cutout(a),
        Command::Augment(a) => cmd_augment(a),
        Command::Split(a) => cmd_split(a),
        Command::Subsample(a) => cmd_subsample(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

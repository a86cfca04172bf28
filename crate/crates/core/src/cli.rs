//! The `mosaic` command line: generate, evaluate, memorization, mine, report.
//!
//! Exit codes: 0 ok, 1 runtime failure, 2 usage or config error.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::dataset_io::{
    image_path, read_manifest, read_predictions, unresolved_images, validate_config, write_manifest, Head,
    ManifestRecord, PredictionRecord,
};
use crate::error::MosaicError;
use crate::metrics::{
    accuracy, distance_histograms, joint_accuracy, memorization_rate, nn_search, MemorizationConfig, PixelMatrix,
    DEFAULT_MEMORIZATION_K,
};
use crate::miner::{
    collect_candidates, llm_verify, mine_corpus, open_corpus, LlmEndpoint, MineMode, MineOptions, RelationGroups,
};
use crate::render::{decode_png, encode_png, render_scene, RenderSettings};
use crate::sampler::{build_dataset, DatasetConfig};

#[derive(Debug, Parser)]
#[command(
    name = "mosaic",
    version,
    about = "Synthetic multi-object scene datasets and evaluation tools"
)]
pub struct Cli {
    /// Worker threads (default: all cores). Never changes output bytes.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Replaces the seed of the config or command.
    #[arg(long, global = true)]
    pub seed_override: Option<u64>,
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Resolve relative paths against this directory.
    #[arg(long, global = true)]
    pub root: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a dataset from a JSON config.
    Generate(GenerateArgs),
    /// Score classifier predictions against a manifest.
    Evaluate(EvaluateArgs),
    /// Nearest-neighbour memorization analysis of generated images.
    Memorization(MemorizationArgs),
    /// Count- or relation-phrase frequencies in a caption corpus.
    Mine(MineArgs),
    /// Charts and a merged CSV over several report directories.
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    pub config: PathBuf,
    /// Output directory; defaults to `output_dir` from the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub predictions: PathBuf,
    /// Heads to score, comma separated; defaults to every head in the predictions.
    #[arg(long, value_delimiter = ',')]
    pub heads: Vec<Head>,
    #[arg(long, default_value = "report")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct MemorizationArgs {
    /// Directory of generated PNGs; the parent directory name is the label.
    #[arg(long)]
    pub generated: PathBuf,
    /// Training manifest; image paths resolve against its directory.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MEMORIZATION_K)]
    pub k: f64,
    /// Area-average every image to this side length before comparing.
    #[arg(long)]
    pub downsample: Option<u32>,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    #[arg(long, default_value = "report")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Count,
    Relation,
}

#[derive(Debug, Args, Serialize)]
pub struct MineArgs {
    /// Caption corpus, one caption per line, plain or gzip.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 0.05)]
    pub sample_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON file replacing the bundled relation phrase groups.
    #[arg(long)]
    pub groups: Option<PathBuf>,
    #[arg(long)]
    pub llm_endpoint: Option<String>,
    #[arg(long)]
    pub llm_model: Option<String>,
    /// Environment variable holding the endpoint's API key.
    #[arg(long)]
    pub llm_key_env: Option<String>,
    #[arg(long, default_value_t = 4)]
    pub llm_max_in_flight: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[arg(required = true)]
    pub dirs: Vec<PathBuf>,
    #[arg(long, default_value = "charts")]
    pub out: PathBuf,
}

/// Contents of `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// sha256 over every behavior-affecting option.
    pub config_hash: String,
    pub seed: Option<u64>,
    pub wall_time_s: f64,
    pub workers: usize,
    pub warnings: Vec<String>,
    #[serde(default)]
    pub extra: BTreeMap<String, Value>,
}

/// Config and argument errors, reported with exit code 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> i32 {
    let is_usage = err.chain().any(|e| {
        e.is::<UsageError>()
            || matches!(
                e.downcast_ref::<MosaicError>(),
                Some(MosaicError::Config(_) | MosaicError::Argument(_))
            )
    });
    if is_usage {
        2
    } else {
        1
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

pub fn execute(cli: &Cli) -> anyhow::Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be positive"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;
    let ctx = RunContext {
        root: cli.root.clone(),
        quiet: cli.quiet,
        seed_override: cli.seed_override,
    };
    pool.install(|| match &cli.command {
        Command::Generate(a) => cmd_generate(&ctx, a),
        Command::Evaluate(a) => cmd_evaluate(&ctx, a),
        Command::Memorization(a) => cmd_memorization(&ctx, a),
        Command::Mine(a) => cmd_mine(&ctx, a),
        Command::Report(a) => cmd_report(&ctx, a),
    })
}

struct RunContext {
    root: Option<PathBuf>,
    quiet: bool,
    seed_override: Option<u64>,
}

impl RunContext {
    fn path(&self, p: &Path) -> PathBuf {
        match &self.root {
            Some(root) => root.join(p),
            None => p.to_path_buf(),
        }
    }

    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn hash_options(value: &impl Serialize) -> String {
    let bytes = serde_json::to_vec(value).expect("options serialize");
    Sha256::digest(&bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

struct RunLog {
    start: Instant,
    meta: RunMetadata,
}

impl RunLog {
    fn start(command: &str, options: &impl Serialize, seed: Option<u64>) -> Self {
        Self {
            start: Instant::now(),
            meta: RunMetadata {
                tool: "mosaic".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                config_hash: hash_options(options),
                seed,
                wall_time_s: 0.0,
                workers: rayon::current_num_threads(),
                warnings: Vec::new(),
                extra: BTreeMap::new(),
            },
        }
    }

    fn warn(&mut self, ctx: &RunContext, msg: String) {
        ctx.say(format!("warning: {msg}"));
        self.meta.warnings.push(msg);
    }

    fn extra(&mut self, key: &str, value: impl Serialize) {
        self.meta
            .extra
            .insert(key.into(), serde_json::to_value(value).expect("metadata serializes"));
    }

    fn write(mut self, dir: &Path) -> anyhow::Result<()> {
        self.meta.wall_time_s = self.start.elapsed().as_secs_f64();
        fs::create_dir_all(dir)?;
        fs::write(dir.join("run.json"), serde_json::to_string_pretty(&self.meta)? + "\n")?;
        Ok(())
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn cmd_generate(ctx: &RunContext, args: &GenerateArgs) -> anyhow::Result<()> {
    let config_path = ctx.path(&args.config);
    let text = fs::read_to_string(&config_path).with_context(|| format!("reading {}", config_path.display()))?;
    let mut config = validate_config(&text)?;
    if let Some(seed) = ctx.seed_override {
        config.seed = seed;
    }
    let out = match (&args.out, &config.output_dir) {
        (Some(out), _) => ctx.path(out),
        (None, Some(dir)) => ctx.path(Path::new(dir)),
        (None, None) => return Err(usage("no output directory: pass --out or set output_dir")),
    };
    let settings = RenderSettings::with_resolution(config.resolution);
    settings.validate()?;

    // output_dir does not change any output byte, so it stays out of the hash
    let hashed = DatasetConfig {
        output_dir: None,
        ..config.clone()
    };
    let mut log = RunLog::start("generate", &hashed, Some(config.seed));
    let dataset = build_dataset(&config)?;
    ctx.say(format!("sampled {} scenes", dataset.samples.len()));

    let records = dataset
        .samples
        .par_iter()
        .map(|s| -> anyhow::Result<ManifestRecord> {
            let rel = image_path(config.task, "train", s.index);
            let png = encode_png(&render_scene(&s.scene, &settings)?)?;
            write_file(&out.join(&rel), png)?;
            Ok(ManifestRecord {
                id: format!("{:08}", s.index),
                image: Some(rel),
                task: config.task,
                variant: config.variant,
                labels: s.scene.labels,
                seen: true,
                scene: Some(s.scene.clone()),
                seed: config.seed,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    write_manifest(&out.join("manifest.jsonl"), &records)?;

    if !dataset.unseen.is_empty() {
        let unseen: Vec<ManifestRecord> = dataset
            .unseen
            .iter()
            .enumerate()
            .map(|(i, label)| ManifestRecord {
                id: format!("unseen-{i:03}"),
                image: None,
                task: config.task,
                variant: config.variant,
                labels: *label,
                seen: false,
                scene: None,
                seed: config.seed,
            })
            .collect();
        write_manifest(&out.join("unseen.jsonl"), &unseen)?;
    }
    write_file(&out.join("config.json"), serde_json::to_string_pretty(&config)? + "\n")?;

    log.extra("samples", records.len());
    log.extra("unseen_conditions", dataset.unseen.len());
    if let Some(plan) = &dataset.holdout {
        log.extra("per_cell", plan.per_cell);
        if plan.realized_total != config.size {
            log.warn(
                ctx,
                format!(
                    "hold-out realizes {} samples of the {} budget",
                    plan.realized_total, config.size
                ),
            );
        }
    }
    log.write(&out)?;
    ctx.say(format!("wrote {} images to {}", records.len(), out.display()));
    Ok(())
}

/// Reads `unseen.jsonl` next to `manifest` when present.
fn manifest_with_unseen(manifest: &Path) -> anyhow::Result<Vec<ManifestRecord>> {
    let mut records = read_manifest(manifest).with_context(|| format!("reading {}", manifest.display()))?;
    let unseen = manifest.with_file_name("unseen.jsonl");
    if unseen.is_file() {
        records.extend(read_manifest(&unseen)?);
    }
    Ok(records)
}

fn dataset_config_near(manifest: &Path) -> Option<Value> {
    let text = fs::read_to_string(manifest.with_file_name("config.json")).ok()?;
    serde_json::from_str(&text).ok()
}

fn cmd_evaluate(ctx: &RunContext, args: &EvaluateArgs) -> anyhow::Result<()> {
    let manifest_path = ctx.path(&args.manifest);
    let out = ctx.path(&args.out);
    let conditions = manifest_with_unseen(&manifest_path)?;
    let mut seen_by_key: BTreeMap<String, bool> = BTreeMap::new();
    for r in &conditions {
        *seen_by_key.entry(r.labels.key()).or_insert(false) |= r.seen;
    }
    let set = read_predictions(&ctx.path(&args.predictions))?;
    let mut log = RunLog::start("evaluate", &(&args.heads, &seen_by_key), None);
    for w in &set.warnings {
        log.warn(ctx, w.clone());
    }

    let mut failures = Vec::new();
    let mut seen = Vec::new();
    let mut unseen = Vec::new();
    for rec in &set.records {
        match seen_by_key.get(&rec.true_labels.key()) {
            Some(true) => seen.push(rec.clone()),
            Some(false) => unseen.push(rec.clone()),
            None => failures.push(format!(
                "{}: condition {} not in manifest",
                rec.id,
                rec.true_labels.key()
            )),
        }
    }
    if !failures.is_empty() {
        for f in &failures {
            eprintln!("join failure: {f}");
        }
        bail!("{} prediction(s) did not join to a manifest condition", failures.len());
    }

    let heads: Vec<Head> = if args.heads.is_empty() {
        let present: BTreeSet<Head> = set.records.iter().flat_map(|r| r.predicted.keys().copied()).collect();
        present.into_iter().collect()
    } else {
        args.heads.clone()
    };
    if heads.is_empty() {
        bail!("no heads to evaluate");
    }

    let mut acc_csv = String::from("split,head,n,correct,accuracy,unreadable\n");
    let mut class_csv = String::from("split,head,class,n,correct,accuracy\n");
    let mut conf_csv = String::from("split,head,true,predicted,count\n");
    let mut joint_csv = String::from("split,heads,n,accuracy\n");
    let all: Vec<PredictionRecord> = set.records.clone();
    for (split, records) in [("all", &all), ("seen", &seen), ("unseen", &unseen)] {
        if records.is_empty() {
            continue;
        }
        for &head in &heads {
            let rep = accuracy(records, head)?;
            let unreadable: u64 = rep.unreadable.values().sum();
            writeln!(
                acc_csv,
                "{split},{head},{},{},{},{unreadable}",
                rep.n, rep.correct, rep.overall
            )?;
            for (class, (c, n)) in &rep.per_class {
                writeln!(class_csv, "{split},{head},{class},{n},{c},{}", *c as f64 / *n as f64)?;
            }
            for (t, row) in rep.confusion.iter().enumerate() {
                for (p, &count) in row.iter().enumerate() {
                    if count > 0 {
                        writeln!(conf_csv, "{split},{head},{t},{p},{count}")?;
                    }
                }
            }
        }
        if heads.len() >= 2 {
            let joint = joint_accuracy(records, &heads)?;
            let names: Vec<&str> = heads.iter().map(|h| h.name()).collect();
            writeln!(joint_csv, "{split},{},{},{joint}", names.join("+"), records.len())?;
        }
    }
    write_file(&out.join("accuracy.csv"), acc_csv)?;
    write_file(&out.join("per_class.csv"), class_csv)?;
    write_file(&out.join("confusion.csv"), conf_csv)?;
    let joint_path = out.join("joint.csv");
    if heads.len() >= 2 {
        write_file(&joint_path, joint_csv)?;
    } else if joint_path.is_file() {
        fs::remove_file(&joint_path)?;
    }
    log.extra("records", set.records.len());
    log.extra("seen_records", seen.len());
    log.extra("unseen_records", unseen.len());
    log.extra("heads", &heads);
    if let Some(cfg) = dataset_config_near(&manifest_path) {
        log.extra("dataset", cfg);
    }
    log.write(&out)?;
    ctx.say(format!(
        "scored {} predictions into {}",
        set.records.len(),
        out.display()
    ));
    Ok(())
}

fn collect_pngs(dir: &Path, out: &mut Vec<PathBuf>) -> anyhow::Result<()> {
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.is_dir() {
            collect_pngs(&path, out)?;
        } else if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            out.push(path);
        }
    }
    Ok(())
}

fn load_pixels(path: &Path, downsample: Option<u32>) -> anyhow::Result<(u32, u32, Vec<u8>)> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let mut image = decode_png(&bytes).with_context(|| format!("decoding {}", path.display()))?;
    if let Some(size) = downsample {
        image = image.downsample(size)?;
    }
    Ok((image.width, image.height, image.data))
}

fn pixel_matrix(items: &[(String, PathBuf)], downsample: Option<u32>) -> anyhow::Result<(PixelMatrix, (u32, u32))> {
    let loaded = items
        .par_iter()
        .map(|(_, p)| load_pixels(p, downsample))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let dims = loaded.first().map_or((0, 0), |(w, h, _)| (*w, *h));
    let mut m = PixelMatrix::new(loaded.first().map_or(0, |l| l.2.len()));
    for ((id, path), (w, h, data)) in items.iter().zip(loaded) {
        if (w, h) != dims {
            bail!("{} is {w}x{h}, expected {}x{}", path.display(), dims.0, dims.1);
        }
        m.push(id.clone(), &data)?;
    }
    Ok((m, dims))
}

fn cmd_memorization(ctx: &RunContext, args: &MemorizationArgs) -> anyhow::Result<()> {
    let config = MemorizationConfig::new(args.k)?;
    if args.downsample == Some(0) {
        return Err(usage("--downsample must be positive"));
    }
    let generated_dir = ctx.path(&args.generated);
    let manifest_path = ctx.path(&args.manifest);
    let out = ctx.path(&args.out);

    let mut gen_paths = Vec::new();
    collect_pngs(&generated_dir, &mut gen_paths)?;
    gen_paths.sort();
    if gen_paths.is_empty() {
        bail!("no PNG files under {}", generated_dir.display());
    }
    let mut labels = BTreeMap::new();
    let mut generated = Vec::new();
    for p in gen_paths {
        let rel = p.strip_prefix(&generated_dir).unwrap_or(&p);
        let id = rel.to_string_lossy().replace('\\', "/");
        let label = match rel.parent().and_then(|d| d.file_name()) {
            Some(name) => name.to_string_lossy().into_owned(),
            None => "all".to_string(),
        };
        labels.insert(id.clone(), label);
        generated.push((id, p));
    }

    let records = read_manifest(&manifest_path).with_context(|| format!("reading {}", manifest_path.display()))?;
    let train_root = manifest_path.parent().unwrap_or(Path::new("."));
    let missing = unresolved_images(train_root, &records);
    if !missing.is_empty() {
        for m in &missing {
            eprintln!("missing training image: {m}");
        }
        bail!("{} training image(s) missing", missing.len());
    }
    let training: Vec<(String, PathBuf)> = records
        .iter()
        .filter_map(|r| r.image.as_ref().map(|img| (r.id.clone(), train_root.join(img))))
        .collect();

    let options = json!({ "k": args.k, "downsample": args.downsample, "bins": args.bins });
    let mut log = RunLog::start("memorization", &options, None);
    let (gen_m, gen_dims) = pixel_matrix(&generated, args.downsample)?;
    let (train_m, train_dims) = pixel_matrix(&training, args.downsample)?;
    if gen_dims != train_dims {
        bail!(
            "generated images are {}x{} but training images are {}x{}; pass --downsample to compare at a common size",
            gen_dims.0,
            gen_dims.1,
            train_dims.0,
            train_dims.1
        );
    }
    let results = nn_search(&gen_m, &train_m)?;
    let report = memorization_rate(&results, &config)?;
    let hist = distance_histograms(&results, &labels, args.bins)?;

    let mut csv = String::from("id,d1,d2,ratio,memorized\n");
    for (r, flag) in results.iter().zip(&report.flags) {
        writeln!(csv, "{},{},{},{},{}", r.generated_id, r.d1, r.d2, r.ratio, flag)?;
    }
    write_file(&out.join("memorization.csv"), csv)?;
    for (label, counts) in &hist.per_label {
        let mut h = String::from("bin_lo,bin_hi,count\n");
        for (i, c) in counts.iter().enumerate() {
            writeln!(h, "{},{},{c}", hist.edges[i], hist.edges[i + 1])?;
        }
        write_file(&out.join(format!("hist_{label}.csv")), h)?;
    }
    let summary = json!({
        "rate": report.rate,
        "memorized": report.flags.iter().filter(|&&f| f).count(),
        "generated": results.len(),
        "training": train_m.len(),
        "mean_d1": hist.mean,
        "label_mean_d1": hist.label_mean,
    });
    write_file(
        &out.join("memorization_summary.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;

    log.extra("k", round6(args.k));
    let space = match args.downsample {
        Some(s) => format!("downsample-{s}"),
        None => "full".to_string(),
    };
    log.extra("distance_space", space);
    log.extra("image_size", [gen_dims.0, gen_dims.1]);
    log.extra("rate", report.rate);
    if let Some(cfg) = dataset_config_near(&manifest_path) {
        log.extra("dataset", cfg);
    }
    log.write(&out)?;
    ctx.say(format!(
        "memorization rate {:.4} over {} samples",
        report.rate,
        results.len()
    ));
    Ok(())
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn cmd_mine(ctx: &RunContext, args: &MineArgs) -> anyhow::Result<()> {
    let seed = ctx.seed_override.unwrap_or(args.seed);
    let mode = match args.mode {
        ModeArg::Count => MineMode::Count,
        ModeArg::Relation => MineMode::Relation,
    };
    let opts = MineOptions::new(mode, args.sample_rate, seed)?;
    let groups = match &args.groups {
        Some(p) => RelationGroups::load(&ctx.path(p)).with_context(|| format!("loading {}", p.display()))?,
        None => RelationGroups::default(),
    };
    let endpoint = match (&args.llm_endpoint, &args.llm_model) {
        (Some(url), Some(model)) => {
            let mut e = LlmEndpoint::new(url.clone(), model.clone());
            e.key_env = args.llm_key_env.clone();
            e.max_in_flight = args.llm_max_in_flight.max(1);
            Some(e)
        }
        (None, None) => None,
        _ => return Err(usage("--llm-endpoint and --llm-model go together")),
    };
    let input = ctx.path(&args.input);
    let out = ctx.path(&args.out);
    let options = json!({
        "mode": args.mode,
        "sample_rate": args.sample_rate,
        "seed": seed,
        "groups": groups.classes(),
        "llm_endpoint": args.llm_endpoint,
        "llm_model": args.llm_model,
    });
    let mut log = RunLog::start("mine", &options, Some(seed));

    let table = mine_corpus(open_corpus(&input)?, &opts, &groups)?;
    write_file(&out, table.to_csv())?;
    if table.unreadable > 0 {
        log.warn(
            ctx,
            format!(
                "{} sampled line(s) were not valid UTF-8 and were skipped",
                table.unreadable
            ),
        );
    }
    log.extra("lines", table.lines);
    log.extra("sampled", table.sampled);
    log.extra("matched", table.matched);
    log.extra("unreadable", table.unreadable);

    if let Some(endpoint) = endpoint {
        let candidates = collect_candidates(open_corpus(&input)?, &opts, &groups)?;
        let report = llm_verify(&candidates, mode, &table.classes, &endpoint);
        let mut csv = String::from("class,count\n");
        for (c, n) in table.classes.iter().zip(&report.verified_counts) {
            writeln!(csv, "{c},{n}")?;
        }
        let stem = out
            .file_stem()
            .map_or("freq".into(), |s| s.to_string_lossy().into_owned());
        write_file(&out.with_file_name(format!("{stem}.verified.csv")), csv)?;
        log.extra("candidates", candidates.len());
        log.extra("verified", report.verified);
        log.extra("unverified", report.unverified);
        if report.unverified > 0 {
            log.warn(ctx, format!("{} candidate(s) left unverified", report.unverified));
        }
    }
    let dir = out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    log.write(dir)?;
    ctx.say(format!(
        "{} lines, {} sampled, {} matched",
        table.lines, table.sampled, table.matched
    ));
    Ok(())
}

/// One row of the merged long-format CSV.
#[derive(Debug, Clone)]
struct MergedRow {
    dir: String,
    distribution: String,
    variant: String,
    task: String,
    size: Option<u64>,
    split: String,
    metric: String,
    head: String,
    value: f64,
}

fn read_csv_rows(path: &Path) -> anyhow::Result<Vec<BTreeMap<String, String>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| anyhow!("{} is empty", path.display()))?
        .split(',')
        .collect();
    Ok(lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            header
                .iter()
                .map(|h| h.to_string())
                .zip(l.split(',').map(str::to_owned))
                .collect()
        })
        .collect())
}

fn field_f64(row: &BTreeMap<String, String>, key: &str, path: &Path) -> anyhow::Result<f64> {
    row.get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| anyhow!("{}: missing or non-numeric {key}", path.display()))
}

fn cmd_report(ctx: &RunContext, args: &ReportArgs) -> anyhow::Result<()> {
    let out = ctx.path(&args.out);
    let dirs: Vec<PathBuf> = args.dirs.iter().map(|d| ctx.path(d)).collect();
    let log = RunLog::start("report", &args.dirs, None);
    let mut rows = Vec::new();
    let mut head_sets: Vec<(String, BTreeSet<String>)> = Vec::new();
    let mut datasets = BTreeMap::new();

    for dir in &dirs {
        let name = dir.to_string_lossy().into_owned();
        let run: Option<RunMetadata> = fs::read_to_string(dir.join("run.json"))
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok());
        let dataset = run
            .as_ref()
            .and_then(|r| r.extra.get("dataset").cloned())
            .unwrap_or(Value::Null);
        datasets.insert(name.clone(), dataset.clone());
        let text = |key: &str| {
            dataset
                .get(key)
                .and_then(Value::as_str)
                .unwrap_or("unknown")
                .to_string()
        };
        let base = MergedRow {
            dir: name.clone(),
            distribution: text("distribution"),
            variant: text("variant"),
            task: text("task"),
            size: dataset.get("size").and_then(Value::as_u64),
            split: String::new(),
            metric: String::new(),
            head: String::new(),
            value: 0.0,
        };
        let mut found = false;
        let acc = dir.join("accuracy.csv");
        if acc.is_file() {
            found = true;
            let mut heads = BTreeSet::new();
            for r in read_csv_rows(&acc)? {
                let head = r.get("head").cloned().unwrap_or_default();
                heads.insert(head.clone());
                rows.push(MergedRow {
                    split: r.get("split").cloned().unwrap_or_default(),
                    metric: "accuracy".into(),
                    head,
                    value: field_f64(&r, "accuracy", &acc)?,
                    ..base.clone()
                });
            }
            head_sets.push((name.clone(), heads));
        }
        let joint = dir.join("joint.csv");
        if joint.is_file() {
            for r in read_csv_rows(&joint)? {
                rows.push(MergedRow {
                    split: r.get("split").cloned().unwrap_or_default(),
                    metric: "joint_accuracy".into(),
                    head: r.get("heads").cloned().unwrap_or_default(),
                    value: field_f64(&r, "accuracy", &joint)?,
                    ..base.clone()
                });
            }
        }
        let mem = dir.join("memorization_summary.json");
        if mem.is_file() {
            found = true;
            let v: Value = serde_json::from_str(&fs::read_to_string(&mem)?)?;
            let rate = v
                .get("rate")
                .and_then(Value::as_f64)
                .ok_or_else(|| anyhow!("{}: no rate", mem.display()))?;
            rows.push(MergedRow {
                split: "all".into(),
                metric: "memorization_rate".into(),
                head: String::new(),
                value: rate,
                ..base.clone()
            });
        }
        if !found {
            bail!(
                "{} has neither accuracy.csv nor memorization_summary.json",
                dir.display()
            );
        }
    }

    if let Some((first_dir, first)) = head_sets.first() {
        let offenders: Vec<String> = head_sets
            .iter()
            .filter(|(_, h)| h != first)
            .map(|(d, h)| format!("{d} [{}]", h.iter().cloned().collect::<Vec<_>>().join(",")))
            .collect();
        if !offenders.is_empty() {
            bail!(
                "heads differ from {first_dir} [{}]: {}",
                first.iter().cloned().collect::<Vec<_>>().join(","),
                offenders.join("; ")
            );
        }
    }

    let mut csv = String::from("dir,task,variant,distribution,size,split,metric,head,value\n");
    for r in &rows {
        let size = r.size.map(|s| s.to_string()).unwrap_or_default();
        writeln!(
            csv,
            "{},{},{},{},{size},{},{},{},{}",
            r.dir, r.task, r.variant, r.distribution, r.split, r.metric, r.head, r.value
        )?;
    }
    write_file(&out.join("merged.csv"), csv)?;

    // joint accuracy when present, else the single head, on the full split
    let mut acc_series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let mut mem_series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for dir in &dirs {
        let name = dir.to_string_lossy();
        let mine: Vec<&MergedRow> = rows.iter().filter(|r| r.dir == name && r.split == "all").collect();
        let Some(first) = mine.first() else { continue };
        let Some(size) = first.size else { continue };
        let series = format!("{} / {}", first.distribution, first.variant);
        let acc = mine
            .iter()
            .find(|r| r.metric == "joint_accuracy")
            .or_else(|| mine.iter().find(|r| r.metric == "accuracy"));
        if let Some(r) = acc {
            acc_series
                .entry(series.clone())
                .or_default()
                .push((size as f64, r.value));
        }
        if let Some(r) = mine.iter().find(|r| r.metric == "memorization_rate") {
            mem_series.entry(series).or_default().push((size as f64, r.value));
        }
    }
    write_file(
        &out.join("accuracy_vs_size.svg"),
        line_chart("Accuracy vs. dataset size", "accuracy", &acc_series),
    )?;
    write_file(
        &out.join("memorization_vs_size.svg"),
        line_chart("Memorization vs. dataset size", "memorization rate", &mem_series),
    )?;
    let mut log = log;
    log.extra("rows", rows.len());
    log.extra("datasets", datasets);
    log.write(&out)?;
    ctx.say(format!(
        "merged {} rows from {} directories into {}",
        rows.len(),
        dirs.len(),
        out.display()
    ));
    Ok(())
}

const SERIES_COLORS: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Polyline chart with a log10 x axis and a [0, 1] y axis.
pub fn line_chart(title: &str, y_label: &str, series: &BTreeMap<String, Vec<(f64, f64)>>) -> String {
    const W: f64 = 720.0;
    const H: f64 = 440.0;
    const LEFT: f64 = 70.0;
    const RIGHT: f64 = 200.0;
    const TOP: f64 = 40.0;
    const BOTTOM: f64 = 60.0;
    let xs: Vec<f64> = series.values().flatten().map(|p| p.0.max(1.0).log10()).collect();
    let (mut lo, mut hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if xs.is_empty() {
        (lo, hi) = (3.0, 5.0);
    }
    lo = lo.floor();
    hi = hi.ceil().max(lo + 1.0);
    let plot_w = W - LEFT - RIGHT;
    let plot_h = H - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x.max(1.0).log10() - lo) / (hi - lo) * plot_w;
    let py = |y: f64| TOP + (1.0 - y.clamp(0.0, 1.0)) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        xml_escape(title)
    );
    for i in 0..=5 {
        let y = i as f64 / 5.0;
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" x2="{}" y1="{yy:.1}" y2="{yy:.1}" stroke="#ddd"/>"##,
            LEFT + plot_w,
            yy = py(y)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{y:.1}</text>"#,
            LEFT - 6.0,
            py(y) + 4.0
        );
    }
    let mut e = lo as i32;
    while e <= hi as i32 {
        let x = px(10f64.powi(e));
        let _ = writeln!(
            s,
            r##"<line x1="{x:.1}" x2="{x:.1}" y1="{TOP}" y2="{}" stroke="#ddd"/>"##,
            TOP + plot_h
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{}" text-anchor="middle">1e{e}</text>"#,
            TOP + plot_h + 18.0
        );
        e += 1;
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">dataset size (log scale)</text>"#,
        LEFT + plot_w / 2.0,
        H - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        TOP + plot_h / 2.0,
        xml_escape(y_label)
    );
    if series.is_empty() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" fill="gray">no data</text>"#,
            LEFT + plot_w / 2.0,
            TOP + plot_h / 2.0
        );
    }
    for (i, (name, points)) in series.iter().enumerate() {
        let color = SERIES_COLORS[i % SERIES_COLORS.len()];
        let mut pts = points.clone();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            coords.join(" ")
        );
        for &(x, y) in &pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.1}" cy="{:.1}" r="3.5" fill="{color}"/>"#,
                px(x),
                py(y)
            );
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 16.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" x2="{}" y1="{ly}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            xml_escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

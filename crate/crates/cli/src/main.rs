use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use metric_index::datasets::{self, DatasetSpec, DEFAULT_QUERY_SAMPLE};
use metric_index::harness::{
    self, ConstructionMode, Experiment, ExperimentConfig, IndexKind, ResultRow, RunManifest, RwRatio, Workload,
    DEFAULT_AUDIT_CAP, DEFAULT_INSERT_CAP,
};
use metric_index::MetricKind;

#[derive(Parser)]
#[command(name = "metric-index", version, about = "Exact k-NN metric index experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Distance computations needed to build each index.
    BuildBench(BenchArgs),
    /// Query cost relative to brute force, one row per k.
    QueryBench(BenchArgs),
    /// Interleaved inserts and queries after a half-data batch build.
    InterleaveBench(BenchArgs),
    /// Answer one query and print its neighbors.
    Knn(KnnArgs),
    /// Oracle equivalence and structural audits on synthetic data.
    SelfCheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct DataArgs {
    /// Metric to evaluate.
    #[arg(long, default_value = "euclidean")]
    metric: MetricKind,
    /// Dataset: a vector file (euclidean), a strings file, or a directory of binary files.
    #[arg(long, conflicts_with = "synthetic")]
    data: Option<PathBuf>,
    /// Synthetic data, e.g. `n=4000,d=10,k=4` for a Gaussian mixture or
    /// `n=1000,len=20` for random strings and blobs.
    #[arg(long)]
    synthetic: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated index kinds.
    #[arg(long, value_delimiter = ',', default_value = "vp-mv")]
    index: Vec<IndexKind>,
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated construction modes.
    #[arg(long, value_delimiter = ',', default_value = "batch")]
    mode: Vec<ConstructionMode>,
    #[arg(long, value_delimiter = ',', default_value = "1,5,25,100")]
    k: Vec<usize>,
    /// Writes per reads, `W:R`.
    #[arg(long, default_value = "100:1")]
    rw: RwRatio,
    #[arg(long, default_value_t = DEFAULT_QUERY_SAMPLE)]
    queries: usize,
    #[arg(long, default_value_t = DEFAULT_INSERT_CAP)]
    insert_cap: usize,
    /// VP-tree bucket size.
    #[arg(long, default_value_t = metric_index::vptree::DEFAULT_BUCKET)]
    bucket: usize,
    /// Comma-separated seeds; one run per seed.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seed: Vec<u64>,
    #[arg(long)]
    audit_cap: Option<usize>,
    /// Use the uncorrected cover-tree search (testing only).
    #[arg(long)]
    legacy_cover_bug: bool,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// JSON run manifest destination.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct KnnArgs {
    #[arg(long, default_value = "vp-mv")]
    index: IndexKind,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "batch")]
    mode: ConstructionMode,
    /// The query: coordinates for euclidean, text otherwise.
    #[arg(long)]
    query: String,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = metric_index::vptree::DEFAULT_BUCKET)]
    bucket: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    legacy_cover_bug: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let chain: Vec<String> = err.chain().map(|e| e.to_string()).collect();
            eprintln!("error: {}", chain.join(": "));
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::BuildBench(args) => bench(Experiment::Construction, args),
        Command::QueryBench(args) => bench(Experiment::Query, args),
        Command::InterleaveBench(args) => bench(Experiment::Interleaved, args),
        Command::Knn(args) => knn(args),
        Command::SelfCheck { seed } => {
            for line in harness::self_check(seed)? {
                println!("{line}");
            }
            Ok(())
        }
    }
}

fn dataset_spec(data: &DataArgs, seed: u64) -> Result<DatasetSpec> {
    match (&data.data, &data.synthetic) {
        (Some(path), None) => Ok(if path.is_dir() {
            DatasetSpec::BinaryDir { path: path.clone() }
        } else if data.metric == MetricKind::Euclidean {
            DatasetSpec::VectorFile { path: path.clone() }
        } else {
            DatasetSpec::StringsFile { path: path.clone() }
        }),
        (None, Some(desc)) => synthetic_spec(data.metric, desc, seed),
        (None, None) => bail!("one of --data or --synthetic is required"),
        (Some(_), Some(_)) => unreachable!("clap rejects both"),
    }
}

fn synthetic_spec(metric: MetricKind, desc: &str, seed: u64) -> Result<DatasetSpec> {
    let mut n = 1000usize;
    let mut dim = 10usize;
    let mut clusters = 4usize;
    let mut spread = 0.02f64;
    let mut len = if metric == MetricKind::Levenshtein { 20 } else { 512 };
    let mut alphabet = 26usize;
    for part in desc.split(',').filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .with_context(|| format!("synthetic field `{part}` is not key=value"))?;
        let bad = || format!("bad value for synthetic field `{key}`");
        match key.trim() {
            "n" => n = value.parse().with_context(bad)?,
            "d" => dim = value.parse().with_context(bad)?,
            "k" => clusters = value.parse().with_context(bad)?,
            "spread" => spread = value.parse().with_context(bad)?,
            "len" => len = value.parse().with_context(bad)?,
            "alphabet" => alphabet = value.parse().with_context(bad)?,
            other => bail!("unknown synthetic field `{other}`"),
        }
    }
    Ok(match metric {
        MetricKind::Euclidean => DatasetSpec::GaussianMixture { n, dim, clusters, spread, seed },
        MetricKind::Levenshtein => DatasetSpec::RandomStrings { n, max_len: len, alphabet, seed },
        MetricKind::LzJaccard => DatasetSpec::RandomBlobs { n, max_len: len, seed },
    })
}

fn load_workload(data: &DataArgs, seed: u64) -> Result<(DatasetSpec, Workload)> {
    let spec = dataset_spec(data, seed)?;
    let dataset = datasets::load(&spec)?;
    Ok((spec, Workload::new(data.metric, dataset)?))
}

fn bench(experiment: Experiment, args: BenchArgs) -> Result<()> {
    let mut rows: Vec<ResultRow> = Vec::new();
    let mut all_configs = Vec::new();
    let mut first_spec = None;
    for &seed in &args.seed {
        let (spec, workload) = load_workload(&args.data, seed)?;
        first_spec.get_or_insert(spec);
        let mut configs = Vec::new();
        for &index in &args.index {
            for (i, &mode) in args.mode.iter().enumerate() {
                // Cover trees have a single construction path.
                if experiment == Experiment::Construction && index.is_cover() && i > 0 {
                    continue;
                }
                let mut config = ExperimentConfig::new(index, args.data.metric);
                config.mode = if experiment == Experiment::Construction && index.is_cover() {
                    ConstructionMode::Incremental
                } else {
                    mode
                };
                config.ks = args.k.clone();
                config.rw = args.rw;
                config.queries = args.queries;
                config.insert_cap = args.insert_cap;
                config.seed = seed;
                config.bucket = args.bucket;
                config.audit_cap = args.audit_cap.unwrap_or(DEFAULT_AUDIT_CAP);
                config.legacy_cover_bug = args.legacy_cover_bug;
                config.validate()?;
                configs.push(config);
            }
        }
        rows.extend(workload.run_all(experiment, &configs, args.jobs)?);
        all_configs.extend(configs);
    }

    match &args.output {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            harness::write_csv(&rows, BufWriter::new(file))?;
        }
        None => {
            let stdout = io::stdout();
            harness::write_csv(&rows, stdout.lock())?;
        }
    }
    if let (Some(path), Some(spec)) = (&args.manifest, first_spec) {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut out = BufWriter::new(file);
        RunManifest::new(experiment, spec, all_configs, rows.len()).write_json(&mut out)?;
        out.flush()?;
    }
    Ok(())
}

fn knn(args: KnnArgs) -> Result<()> {
    let (_, workload) = load_workload(&args.data, args.seed)?;
    let mut config = ExperimentConfig::new(args.index, args.data.metric);
    config.mode = args.mode;
    config.seed = args.seed;
    config.bucket = args.bucket;
    config.legacy_cover_bug = args.legacy_cover_bug;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for (id, distance) in workload.knn_text(&config, &args.query, args.k)? {
        writeln!(out, "{id}\t{distance}")?;
    }
    Ok(())
}

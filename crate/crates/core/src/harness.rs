//! Experiment runner: construction cost, query efficiency against brute
//! force, and interleaved insert/query workloads.
//!
//! Every cost is a count of metric evaluations taken from one
//! [`CountingMetric`](crate::metrics::CountingMetric) shared by the index under test. Each query result is
//! cross-checked against the brute-force oracle (evaluated through the
//! uncounted inner metric) and a mismatch aborts the run.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::{seeded_rng, split_shuffle, stream, Dataset, DatasetSpec, Split, DEFAULT_QUERY_SAMPLE};
use crate::error::{Error, Result};
use crate::index::KnnIndex;
use crate::item::{Item, ItemId};
use crate::metrics::{counted, lz_set, Euclidean, Levenshtein, LzJaccard, Metric, MetricKind};
use crate::neighbors::NeighborList;
use crate::oracle::{brute_knn, BruteForce};
use crate::covertree::{CoverTree, QueryBound};
use crate::rbc::{RbcIndex, RbcSearch};
use crate::vptree::{SplitStrategy, VpConfig, VpTree, DEFAULT_BUCKET};

pub const DEFAULT_KS: [usize; 4] = [1, 5, 25, 100];
pub const DEFAULT_INSERT_CAP: usize = 1000;
pub const DEFAULT_AUDIT_CAP: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexKind {
    Brute,
    VpMedian,
    VpMv,
    RbcOrig,
    RbcImp,
    Cover,
    CoverB,
}

impl IndexKind {
    pub const ALL: [IndexKind; 7] = [
        IndexKind::Brute,
        IndexKind::VpMedian,
        IndexKind::VpMv,
        IndexKind::RbcOrig,
        IndexKind::RbcImp,
        IndexKind::Cover,
        IndexKind::CoverB,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IndexKind::Brute => "brute",
            IndexKind::VpMedian => "vp-median",
            IndexKind::VpMv => "vp-mv",
            IndexKind::RbcOrig => "rbc-orig",
            IndexKind::RbcImp => "rbc-imp",
            IndexKind::Cover => "cover",
            IndexKind::CoverB => "cover-b",
        }
    }

    pub fn is_cover(self) -> bool {
        matches!(self, IndexKind::Cover | IndexKind::CoverB)
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IndexKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IndexKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown index `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstructionMode {
    Batch,
    HalfBatch,
    Incremental,
}

impl ConstructionMode {
    pub const ALL: [ConstructionMode; 3] = [
        ConstructionMode::Batch,
        ConstructionMode::HalfBatch,
        ConstructionMode::Incremental,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConstructionMode::Batch => "batch",
            ConstructionMode::HalfBatch => "half-batch",
            ConstructionMode::Incremental => "incremental",
        }
    }
}

impl fmt::Display for ConstructionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConstructionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ConstructionMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown construction mode `{s}`")))
    }
}

/// Writes per reads in an interleaved schedule, written `W:R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RwRatio {
    pub writes: usize,
    pub reads: usize,
}

impl RwRatio {
    pub fn new(writes: usize, reads: usize) -> Self {
        Self { writes, reads }
    }
}

impl Default for RwRatio {
    fn default() -> Self {
        Self::new(100, 1)
    }
}

impl fmt::Display for RwRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.writes, self.reads)
    }
}

impl FromStr for RwRatio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("read/write ratio must look like W:R, got `{s}`"));
        let (w, r) = s.split_once(':').ok_or_else(bad)?;
        let ratio = RwRatio::new(
            w.trim().parse().map_err(|_| bad())?,
            r.trim().parse().map_err(|_| bad())?,
        );
        if ratio.reads == 0 {
            return Err(Error::InvalidInput("read/write ratio needs at least one read".into()));
        }
        Ok(ratio)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub index: IndexKind,
    pub metric: MetricKind,
    pub mode: ConstructionMode,
    pub ks: Vec<usize>,
    /// Size of the query sample, capped at the collection size.
    pub queries: usize,
    pub rw: RwRatio,
    pub insert_cap: usize,
    pub seed: u64,
    pub bucket: usize,
    /// Collections up to this size have every query checked against the
    /// oracle; larger ones a random 1%.
    pub audit_cap: usize,
    /// Runs cover trees with the pre-correction search. Test-only.
    pub legacy_cover_bug: bool,
}

impl ExperimentConfig {
    pub fn new(index: IndexKind, metric: MetricKind) -> Self {
        Self {
            index,
            metric,
            mode: ConstructionMode::Batch,
            ks: DEFAULT_KS.to_vec(),
            queries: DEFAULT_QUERY_SAMPLE,
            rw: RwRatio::default(),
            insert_cap: DEFAULT_INSERT_CAP,
            seed: 0,
            bucket: DEFAULT_BUCKET,
            audit_cap: DEFAULT_AUDIT_CAP,
            legacy_cover_bug: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(Error::InvalidConfig("k list must be nonempty and positive".into()));
        }
        if self.bucket < 2 {
            return Err(Error::InvalidConfig("bucket size must be at least 2".into()));
        }
        if self.queries == 0 {
            return Err(Error::InvalidConfig("query sample must be positive".into()));
        }
        Ok(())
    }

    fn index_seed(&self) -> u64 {
        seeded_rng(self.seed, stream::INDEX).gen()
    }
}

/// One CSV row. Construction-only rows leave the query columns empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub index: IndexKind,
    pub metric: MetricKind,
    pub mode: ConstructionMode,
    pub k: Option<usize>,
    pub rw_ratio: String,
    pub seed: u64,
    pub n: usize,
    pub construction_dists: u64,
    pub query_dists_mean: Option<f64>,
    pub baseline_dists: Option<u64>,
    pub ratio_incl_construction: Option<f64>,
    pub ratio_excl_construction: Option<f64>,
}

impl ResultRow {
    fn echo(config: &ExperimentConfig, n: usize) -> Self {
        Self {
            index: config.index,
            metric: config.metric,
            mode: config.mode,
            k: None,
            rw_ratio: config.rw.to_string(),
            seed: config.seed,
            n,
            construction_dists: 0,
            query_dists_mean: None,
            baseline_dists: None,
            ratio_incl_construction: None,
            ratio_excl_construction: None,
        }
    }

    fn with_query_costs(mut self, k: usize, queries: usize, query_dists: u64, extra_dists: u64, baseline: u64) -> Self {
        self.k = Some(k);
        self.query_dists_mean = Some(query_dists as f64 / queries.max(1) as f64);
        self.baseline_dists = Some(baseline);
        let excl = (query_dists + extra_dists) as f64;
        self.ratio_excl_construction = Some(excl / baseline as f64);
        self.ratio_incl_construction = Some((excl + self.construction_dists as f64) / baseline as f64);
        self
    }
}

pub const CSV_HEADER: [&str; 12] = [
    "index",
    "metric",
    "mode",
    "k",
    "rw_ratio",
    "seed",
    "n",
    "construction_dists",
    "query_dists_mean",
    "baseline_dists",
    "ratio_incl_construction",
    "ratio_excl_construction",
];

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    writer
        .write_record(CSV_HEADER)
        .map_err(|e| Error::Output(e.to_string()))?;
    for row in rows {
        writer.serialize(row).map_err(|e| Error::Output(e.to_string()))?;
    }
    writer.flush().map_err(|e| Error::Output(e.to_string()))
}

/// Companion record of everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: Experiment,
    pub dataset: DatasetSpec,
    pub rng: String,
    pub configs: Vec<ExperimentConfig>,
    pub rows: usize,
}

impl RunManifest {
    pub fn new(experiment: Experiment, dataset: DatasetSpec, configs: Vec<ExperimentConfig>, rows: usize) -> Self {
        Self {
            experiment,
            dataset,
            rng: "ChaCha8 seeded from u64, one stream per purpose".into(),
            configs,
            rows,
        }
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self).map_err(|e| Error::Output(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Construction,
    Query,
    Interleaved,
}

type BoxedIndex<'a, P, D> = Box<dyn KnnIndex<P, Distance = D> + 'a>;

/// Builds the configured index over `items`, in the given order.
///
/// Cover trees are always built by insertion, whatever the mode.
pub fn build_index<'a, P, M>(
    config: &ExperimentConfig,
    mode: ConstructionMode,
    items: Vec<Item<P>>,
    metric: M,
) -> Result<BoxedIndex<'a, P, M::Distance>>
where
    P: 'a,
    M: Metric<P> + 'a,
{
    let seed = config.index_seed();
    let n_batch = match mode {
        ConstructionMode::Batch => items.len(),
        ConstructionMode::HalfBatch => items.len().div_ceil(2),
        ConstructionMode::Incremental => 0,
    };
    let mut items = items;
    let rest = items.split_off(n_batch.min(items.len()));
    let batch = items;

    let vp_config = |strategy| VpConfig::new(strategy).bucket(config.bucket).seed(seed);
    let cover_mode = |bound| {
        if config.legacy_cover_bug {
            QueryBound::BrokenLegacy
        } else {
            bound
        }
    };
    let mut index: BoxedIndex<'a, P, M::Distance> = match config.index {
        IndexKind::Brute => Box::new(BruteForce::new(batch, metric)),
        IndexKind::VpMedian | IndexKind::VpMv => {
            let strategy = if config.index == IndexKind::VpMedian {
                SplitStrategy::Median
            } else {
                SplitStrategy::MinVariance
            };
            if batch.is_empty() {
                Box::new(VpTree::new(metric, vp_config(strategy))?)
            } else {
                Box::new(VpTree::build(batch, metric, vp_config(strategy))?)
            }
        }
        IndexKind::RbcOrig | IndexKind::RbcImp => {
            let search = if config.index == IndexKind::RbcOrig {
                RbcSearch::Original
            } else {
                RbcSearch::Improved
            };
            if batch.is_empty() {
                Box::new(RbcIndex::new(metric, search, seed))
            } else {
                Box::new(RbcIndex::build(batch, metric, search, seed)?)
            }
        }
        IndexKind::Cover | IndexKind::CoverB => {
            let bound = cover_mode(if config.index == IndexKind::Cover {
                QueryBound::MaxDist
            } else {
                QueryBound::Level
            });
            Box::new(CoverTree::build(batch, metric, bound))
        }
    };
    for item in rest {
        index.insert(item)?;
    }
    Ok(index)
}

/// Number of queries to audit and which ones, for a collection of size `n`.
fn audit_plan(config: &ExperimentConfig, n: usize, queries: usize) -> Vec<bool> {
    if n <= config.audit_cap {
        return vec![true; queries];
    }
    let mut rng = seeded_rng(config.seed, stream::AUDIT);
    let mut plan: Vec<bool> = (0..queries).map(|_| rng.gen_bool(0.01)).collect();
    if !plan.iter().any(|&a| a) {
        if let Some(first) = plan.first_mut() {
            *first = true;
        }
    }
    plan
}

fn check_against_oracle<D: crate::scalar::Distance>(
    query_id: usize,
    got: &NeighborList<D>,
    expected: &NeighborList<D>,
) -> Result<()> {
    if got.distances() != expected.distances() {
        return Err(Error::Correctness {
            query_id,
            message: format!(
                "index returned distances {:?}, oracle {:?}",
                got.distances(),
                expected.distances()
            ),
        });
    }
    Ok(())
}

fn construction_order<P: Clone>(items: &[Item<P>], seed: u64) -> Result<Vec<Item<P>>> {
    let split = split_shuffle(items.len(), seed, 1.0, 0.0, 0)?;
    Ok(Split::take(items, &split.build))
}

/// Construction cost of the configured index over all `items`.
pub fn run_construction<P, M>(config: &ExperimentConfig, items: &[Item<P>], metric: M) -> Result<ResultRow>
where
    P: Clone,
    M: Metric<P>,
{
    config.validate()?;
    let metric = counted(&metric);
    let ordered = construction_order(items, config.seed)?;
    let before = metric.count();
    build_index(config, config.mode, ordered, metric.clone())?;
    let mut row = ResultRow::echo(config, items.len());
    row.construction_dists = metric.count() - before;
    Ok(row)
}

/// Query efficiency per k over a seeded query sample.
///
/// The index is rebuilt for every k so that lazily cached state (cover-tree
/// maxdist) is paid for inside each row.
pub fn run_query_eval<P, M>(config: &ExperimentConfig, items: &[Item<P>], metric: M) -> Result<Vec<ResultRow>>
where
    P: Clone,
    M: Metric<P>,
{
    config.validate()?;
    if items.is_empty() {
        return Err(Error::InvalidInput("empty dataset".into()));
    }
    let n = items.len();
    let ordered = construction_order(items, config.seed)?;
    let split = split_shuffle(n, config.seed, 1.0, 0.0, config.queries)?;
    let queries = Split::take(items, &split.queries);
    let plan = audit_plan(config, n, queries.len());
    let k_max = *config.ks.iter().max().expect("validated");
    let expected: Vec<Option<NeighborList<M::Distance>>> = queries
        .iter()
        .zip(&plan)
        .map(|(q, &audit)| {
            audit
                .then(|| brute_knn(items, &metric, &q.payload, k_max))
                .transpose()
        })
        .collect::<Result<_>>()?;

    let metric = counted(&metric);
    let mut rows = Vec::with_capacity(config.ks.len());
    for &k in &config.ks {
        let start = metric.count();
        let index = build_index(config, config.mode, ordered.clone(), metric.clone())?;
        let construction = metric.count() - start;
        let mut query_dists = 0u64;
        for (q, oracle) in queries.iter().zip(&expected) {
            let before = metric.count();
            let got = index.knn(&q.payload, k)?;
            query_dists += metric.count() - before;
            if let Some(oracle) = oracle {
                check_against_oracle(q.id, &got, &truncated(oracle, k))?;
            }
        }
        let mut row = ResultRow::echo(config, n);
        row.construction_dists = construction;
        let baseline = (queries.len() * n) as u64;
        rows.push(row.with_query_costs(k, queries.len(), query_dists, 0, baseline));
    }
    Ok(rows)
}

fn truncated<D: crate::scalar::Distance>(list: &NeighborList<D>, k: usize) -> NeighborList<D> {
    let mut out = NeighborList::with_capacity(k);
    for n in list.iter().take(k) {
        out.push(n.id, n.distance);
    }
    out
}

/// Per-run totals of an interleaved workload, for callers that need more
/// than the CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct InterleavedCounts {
    pub construction: u64,
    pub inserts: u64,
    pub queries: u64,
    pub query_count: usize,
    pub insert_count: usize,
    pub baseline: u64,
    /// Everything the counting wrapper saw during the run.
    pub wrapper_total: u64,
}

/// Interleaved inserts and queries after a batch build on half the data.
///
/// The schedule repeats `W` inserts followed by `R` queries until the
/// insertion cap (or the insert stream) is exhausted; a `0:R` schedule runs
/// the whole query sample once. Queries cycle through the seeded sample and
/// every audited query is checked against brute force over the items
/// indexed at that moment. The brute-force baseline charges each query the
/// current collection size and inserts nothing.
pub fn run_interleaved<P, M>(config: &ExperimentConfig, items: &[Item<P>], metric: M) -> Result<Vec<ResultRow>>
where
    P: Clone,
    M: Metric<P>,
{
    config.ks.iter().map(|&k| run_interleaved_k(config, items, &metric, k).map(|(row, _)| row)).collect()
}

pub fn run_interleaved_k<P, M>(
    config: &ExperimentConfig,
    items: &[Item<P>],
    metric: M,
    k: usize,
) -> Result<(ResultRow, InterleavedCounts)>
where
    P: Clone,
    M: Metric<P>,
{
    config.validate()?;
    if items.is_empty() {
        return Err(Error::InvalidInput("empty dataset".into()));
    }
    let n = items.len();
    let split = split_shuffle(n, config.seed, 0.5, 0.5, config.queries)?;
    let mut current = Split::take(items, &split.build);
    let mut stream: Vec<Item<P>> = Split::take(items, &split.insert);
    stream.truncate(config.insert_cap);
    let queries = Split::take(items, &split.queries);

    let oracle_metric = metric;
    let metric = counted(&oracle_metric);
    let mut counts = InterleavedCounts::default();
    let mut index = build_index(config, ConstructionMode::Batch, current.clone(), metric.clone())?;
    counts.construction = metric.count();

    let total_queries = if config.rw.writes == 0 {
        queries.len()
    } else {
        stream.len().div_ceil(config.rw.writes) * config.rw.reads
    };
    let plan = audit_plan(config, n, total_queries);
    let mut stream = stream.into_iter();
    let mut next_query = 0usize;
    loop {
        if config.rw.writes > 0 {
            let mut wrote = 0;
            for item in stream.by_ref().take(config.rw.writes) {
                let before = metric.count();
                index.insert(item.clone())?;
                counts.inserts += metric.count() - before;
                current.push(item);
                wrote += 1;
            }
            counts.insert_count += wrote;
            if wrote == 0 {
                break;
            }
        }
        let reads = if config.rw.writes == 0 { total_queries } else { config.rw.reads };
        for _ in 0..reads {
            let q = &queries[next_query % queries.len()];
            let before = metric.count();
            let got = index.knn(&q.payload, k)?;
            counts.queries += metric.count() - before;
            counts.baseline += current.len() as u64;
            if plan.get(counts.query_count).copied().unwrap_or(false) {
                let expected = brute_knn(&current, &oracle_metric, &q.payload, k)?;
                check_against_oracle(q.id, &got, &expected)?;
            }
            counts.query_count += 1;
            next_query += 1;
        }
        if config.rw.writes == 0 {
            break;
        }
    }
    counts.wrapper_total = metric.count();

    let mut row = ResultRow::echo(config, n);
    row.construction_dists = counts.construction;
    let row = row.with_query_costs(k, counts.query_count, counts.queries, counts.inserts, counts.baseline);
    Ok((row, counts))
}

/// A loaded dataset paired with the metric it is evaluated under.
pub enum Workload {
    Euclidean(Vec<Item<Vec<f64>>>),
    Levenshtein(Vec<Item<Vec<u8>>>),
    LzJaccard(Vec<Item<crate::metrics::TokenSet>>),
}

impl Workload {
    pub fn new(metric: MetricKind, dataset: Dataset) -> Result<Self> {
        match (metric, dataset) {
            (MetricKind::Euclidean, Dataset::Vectors(v)) => Ok(Workload::Euclidean(v)),
            (MetricKind::Levenshtein, Dataset::Bytes(b)) => Ok(Workload::Levenshtein(b)),
            (MetricKind::LzJaccard, Dataset::Bytes(b)) => Ok(Workload::LzJaccard(
                b.into_iter()
                    .map(|it| Item::new(it.id, lz_set(&it.payload)))
                    .collect(),
            )),
            (metric, _) => Err(Error::InvalidConfig(format!(
                "metric {metric} does not apply to this dataset"
            ))),
        }
    }

    pub fn metric(&self) -> MetricKind {
        match self {
            Workload::Euclidean(_) => MetricKind::Euclidean,
            Workload::Levenshtein(_) => MetricKind::Levenshtein,
            Workload::LzJaccard(_) => MetricKind::LzJaccard,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Workload::Euclidean(v) => v.len(),
            Workload::Levenshtein(v) => v.len(),
            Workload::LzJaccard(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Runs one experiment for one config.
    pub fn run(&self, experiment: Experiment, config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
        if config.metric != self.metric() {
            return Err(Error::InvalidConfig(format!(
                "config metric {} but workload metric {}",
                config.metric,
                self.metric()
            )));
        }
        match self {
            Workload::Euclidean(items) => run_one(experiment, config, items, Euclidean::<f64>::new()),
            Workload::Levenshtein(items) => run_one(experiment, config, items, Levenshtein),
            Workload::LzJaccard(items) => run_one(experiment, config, items, LzJaccard),
        }
    }

    /// Runs every config, spreading them over up to `jobs` threads. Rows
    /// come back in config order regardless of scheduling.
    pub fn run_all(&self, experiment: Experiment, configs: &[ExperimentConfig], jobs: usize) -> Result<Vec<ResultRow>> {
        let jobs = jobs.clamp(1, configs.len().max(1));
        let mut results: Vec<Option<Result<Vec<ResultRow>>>> = (0..configs.len()).map(|_| None).collect();
        std::thread::scope(|scope| {
            let chunks: Vec<_> = results
                .chunks_mut(configs.len().div_ceil(jobs).max(1))
                .zip(configs.chunks(configs.len().div_ceil(jobs).max(1)))
                .collect();
            for (out, cfgs) in chunks {
                scope.spawn(move || {
                    for (slot, cfg) in out.iter_mut().zip(cfgs) {
                        *slot = Some(self.run(experiment, cfg));
                    }
                });
            }
        });
        let mut rows = Vec::new();
        for r in results {
            rows.extend(r.expect("every config ran")?);
        }
        Ok(rows)
    }
}

/// Builds the configured index over all items and answers one query,
/// checked against brute force. Distances come back rendered as text.
pub fn knn_checked<P, M>(
    config: &ExperimentConfig,
    items: &[Item<P>],
    metric: M,
    query: &P,
    k: usize,
) -> Result<Vec<(ItemId, String)>>
where
    P: Clone,
    M: Metric<P>,
{
    config.validate()?;
    if items.is_empty() {
        return Err(Error::InvalidInput("empty dataset".into()));
    }
    let ordered = construction_order(items, config.seed)?;
    let index = build_index(config, config.mode, ordered, &metric)?;
    let got = index.knn(query, k)?;
    check_against_oracle(usize::MAX, &got, &brute_knn(items, &metric, query, k)?)?;
    Ok(got.iter().map(|n| (n.id, n.distance.to_string())).collect())
}

impl Workload {
    /// Parses `text` as a query for this workload's metric: comma or
    /// whitespace separated coordinates for vectors, raw bytes otherwise.
    pub fn knn_text(&self, config: &ExperimentConfig, text: &str, k: usize) -> Result<Vec<(ItemId, String)>> {
        match self {
            Workload::Euclidean(items) => {
                let query = crate::datasets::parse_vectors(text, "query")?
                    .pop()
                    .ok_or_else(|| Error::InvalidInput("empty query vector".into()))?
                    .payload;
                if let Some(first) = items.first() {
                    if first.payload.len() != query.len() {
                        return Err(Error::InvalidInput(format!(
                            "query has {} coordinates, dataset has {}",
                            query.len(),
                            first.payload.len()
                        )));
                    }
                }
                knn_checked(config, items, Euclidean::<f64>::new(), &query, k)
            }
            Workload::Levenshtein(items) => knn_checked(config, items, Levenshtein, &text.as_bytes().to_vec(), k),
            Workload::LzJaccard(items) => knn_checked(config, items, LzJaccard, &lz_set(text.as_bytes()), k),
        }
    }
}

/// Oracle equivalence and structural audits for every index kind and metric
/// on small synthetic collections. Returns one line per passed check.
pub fn self_check(seed: u64) -> Result<Vec<String>> {
    let workloads = [
        (
            MetricKind::Euclidean,
            DatasetSpec::GaussianMixture { n: 600, dim: 4, clusters: 3, spread: 0.05, seed },
        ),
        (
            MetricKind::Levenshtein,
            DatasetSpec::RandomStrings { n: 300, max_len: 12, alphabet: 4, seed },
        ),
        (
            MetricKind::LzJaccard,
            DatasetSpec::RandomBlobs { n: 200, max_len: 128, seed },
        ),
    ];
    let mut report = Vec::new();
    for (metric, spec) in workloads {
        let workload = Workload::new(metric, crate::datasets::load(&spec)?)?;
        for index in IndexKind::ALL {
            for mode in ConstructionMode::ALL {
                let mut config = ExperimentConfig::new(index, metric);
                config.mode = mode;
                config.seed = seed;
                config.queries = 50;
                config.ks = vec![1, 5, 25];
                workload.run(Experiment::Query, &config)?;
            }
            report.push(format!("oracle {metric} {index}: ok"));
        }
        workload.audit_all(seed)?;
        report.push(format!("audit {metric}: ok"));
    }
    Ok(report)
}

impl Workload {
    fn audit_all(&self, seed: u64) -> Result<()> {
        match self {
            Workload::Euclidean(items) => audit_structures(items, Euclidean::<f64>::new(), seed),
            Workload::Levenshtein(items) => audit_structures(items, Levenshtein, seed),
            Workload::LzJaccard(items) => audit_structures(items, LzJaccard, seed),
        }
    }
}

/// Batch-builds on half the items, inserts the rest, and audits each
/// structure after every phase.
pub fn audit_structures<P, M>(items: &[Item<P>], metric: M, seed: u64) -> Result<()>
where
    P: Clone,
    M: Metric<P>,
{
    let split = split_shuffle(items.len(), seed, 0.5, 0.5, 0)?;
    let build = Split::take(items, &split.build);
    let rest = Split::take(items, &split.insert);

    for strategy in [SplitStrategy::Median, SplitStrategy::MinVariance] {
        let mut vp = VpTree::build(build.clone(), &metric, VpConfig::new(strategy).seed(seed))?;
        vp.audit()?;
        for item in rest.iter().cloned() {
            vp.insert(item);
        }
        vp.audit()?;
    }

    let mut rbc = RbcIndex::build(build.clone(), &metric, RbcSearch::Improved, seed)?;
    rbc.audit()?;
    for item in rest.iter().cloned() {
        rbc.insert(item);
    }
    rbc.audit()?;

    let mut cover = CoverTree::build(build, &metric, QueryBound::MaxDist);
    cover.audit()?;
    for item in rest {
        cover.insert(item);
    }
    cover.audit()
}

fn run_one<P, M>(experiment: Experiment, config: &ExperimentConfig, items: &[Item<P>], metric: M) -> Result<Vec<ResultRow>>
where
    P: Clone,
    M: Metric<P>,
{
    match experiment {
        Experiment::Construction => run_construction(config, items, metric).map(|r| vec![r]),
        Experiment::Query => run_query_eval(config, items, metric),
        Experiment::Interleaved => run_interleaved(config, items, metric),
    }
}

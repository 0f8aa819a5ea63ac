//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any fails.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use metric_index::datasets::{random_blobs, random_strings, synthetic_gaussian_mixture, Dataset};
use metric_index::harness::{
    run_interleaved_k, ConstructionMode, Experiment, ExperimentConfig, IndexKind, ResultRow, RwRatio, Workload,
};
use metric_index::vptree::min_variance_split;
use metric_index::{
    brute_knn, counted, CoverTree, Euclidean, Item, Metric, MetricKind, QueryBound, RbcIndex, RbcSearch,
    SplitStrategy, VpConfig, VpTree,
};
use rand::Rng;

const SEEDS: [u64; 5] = [11, 22, 33, 44, 55];
const KS: [usize; 4] = [1, 5, 25, 100];

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn mixture(seed: u64) -> Vec<Item<Vec<f64>>> {
    synthetic_gaussian_mixture(10_000, 10, 4, 0.02, seed).unwrap()
}

fn config(index: IndexKind, metric: MetricKind, mode: ConstructionMode, seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(index, metric);
    c.mode = mode;
    c.seed = seed;
    c
}

fn exactness() -> Outcome {
    let mut workloads = vec![];
    for dim in [2, 10] {
        workloads.push(Workload::new(
            MetricKind::Euclidean,
            Dataset::Vectors(synthetic_gaussian_mixture(2_000, dim, 4, 0.1, 1).unwrap()),
        ));
    }
    workloads.push(Workload::new(MetricKind::Levenshtein, Dataset::Bytes(random_strings(1_000, 20, 4, 2))));
    workloads.push(Workload::new(MetricKind::LzJaccard, Dataset::Bytes(random_blobs(500, 512, 3))));

    let mut runs = 0;
    for workload in workloads {
        let workload = workload.map_err(|e| e.to_string())?;
        for index in IndexKind::ALL {
            for mode in ConstructionMode::ALL {
                let c = config(index, workload.metric(), mode, 5);
                let rows = workload.run(Experiment::Query, &c).map_err(|e| format!("{index} {mode}: {e}"))?;
                check(rows.len() == KS.len(), "missing rows")?;
                runs += rows.len();
            }
        }
    }
    Ok(format!("{runs} (index, metric, mode, k) runs matched brute force on every query"))
}

fn appendix_counterexample() -> Outcome {
    let mut tree = CoverTree::new(Euclidean::<f64>::new(), QueryBound::MaxDist);
    tree.insert(Item::new(0, vec![-2.0]));
    tree.insert(Item::new(1, vec![5.0]));
    check(tree.root().map(|r| r.0) == Some(1), "root should hold 5")?;
    check(tree.root_children() == vec![0], "-2 should be the root's only child")?;
    let q = vec![0.0];
    for mode in [QueryBound::MaxDist, QueryBound::Level] {
        let got = tree.knn_with(&q, 1, mode).map_err(|e| e.to_string())?;
        check(got.distances() == vec![2.0], format!("{mode:?} returned {:?}", got.distances()))?;
    }
    let broken = tree.knn_with(&q, 1, QueryBound::BrokenLegacy).map_err(|e| e.to_string())?;
    check(broken.distances() == vec![5.0], format!("legacy returned {:?}", broken.distances()))?;
    Ok("corrected search returns 2, legacy search returns 5".into())
}

fn termination() -> Outcome {
    let mut rng = common::rng(7);
    let items = common::random_vectors(&mut rng, 1_000, 3);
    let metric = Euclidean::<f64>::new();
    let build = |extra: &[f64]| {
        let mut tree = CoverTree::build(items.clone(), metric, QueryBound::MaxDist);
        let report = tree.insert(Item::new(1_000, extra.to_vec()));
        (tree, report)
    };

    let tree = CoverTree::build(items.clone(), metric, QueryBound::MaxDist);
    let (root_id, root_level) = tree.root().unwrap();
    let root = &items[root_id].payload;
    let covdist = 2f64.powi(root_level);
    let max_pair = (2.0f64 * 2.0 * 3.0).sqrt();

    // Just past every pairwise distance but still inside the shortcut threshold.
    let mut near = root.clone();
    near[0] += (max_pair + 0.5).max(covdist + 1e-6).min(4.0 * covdist);
    let (t1, r1) = build(&near);
    t1.audit().map_err(|e| e.to_string())?;
    check(metric.distance(root, &near) > max_pair, "outlier is not beyond the max pairwise distance")?;
    check(r1.rerooted, "outlier within 4·covdist did not re-root")?;

    let mut far = root.clone();
    far[0] += 4.0 * covdist + 1.0;
    let (t2, r2) = build(&far);
    t2.audit().map_err(|e| e.to_string())?;
    check(r2.shortcut && r2.raise_iterations == 0, format!("expected shortcut, got {r2:?}"))?;
    check(r2.rerooted, "far outlier did not re-root")?;
    Ok(format!(
        "near outlier: {} raise iterations, re-rooted; far outlier: shortcut, 0 iterations",
        r1.raise_iterations
    ))
}

fn split_oracle() -> Outcome {
    let mut rng = common::rng(4);
    for i in 0..1_000 {
        let n = rng.gen_range(2..=256);
        if i % 2 == 0 {
            let ints = common::random_sorted_ints(&mut rng, n);
            let floats: Vec<f64> = ints.iter().map(|&v| v as f64).collect();
            let (got, want) = (min_variance_split(&floats), common::split_oracle_exact(&ints));
            check(got == want, format!("list {i} (n={n}, integer): {got} vs {want}"))?;
        } else {
            let floats = common::random_sorted_floats(&mut rng, n);
            let (got, want) = (min_variance_split(&floats), common::split_oracle_f64(&floats));
            check(got == want, format!("list {i} (n={n}, real): {got} vs {want}"))?;
        }
    }
    Ok("1000 lists equal the exhaustive scan".into())
}

/// Query-eval rows for the Gaussian mixture, keyed by (index, mode, seed).
struct MixtureRuns {
    rows: Vec<(IndexKind, ConstructionMode, u64, Vec<ResultRow>)>,
}

impl MixtureRuns {
    fn collect() -> Result<Self, String> {
        let mut rows = Vec::new();
        for seed in SEEDS {
            let workload =
                Workload::new(MetricKind::Euclidean, Dataset::Vectors(mixture(seed))).map_err(|e| e.to_string())?;
            for (index, mode) in [
                (IndexKind::VpMv, ConstructionMode::Batch),
                (IndexKind::VpMedian, ConstructionMode::Batch),
                (IndexKind::RbcOrig, ConstructionMode::Batch),
                (IndexKind::RbcImp, ConstructionMode::Batch),
                (IndexKind::RbcImp, ConstructionMode::Incremental),
            ] {
                let c = config(index, MetricKind::Euclidean, mode, seed);
                let r = workload.run(Experiment::Query, &c).map_err(|e| e.to_string())?;
                rows.push((index, mode, seed, r));
            }
        }
        Ok(Self { rows })
    }

    fn median(&self, index: IndexKind, mode: ConstructionMode, k: usize, field: fn(&ResultRow) -> f64) -> f64 {
        common::median(
            self.rows
                .iter()
                .filter(|(i, m, _, _)| *i == index && *m == mode)
                .flat_map(|(_, _, _, rows)| rows.iter().filter(|r| r.k == Some(k)).map(field))
                .collect(),
        )
    }
}

fn ratio_excl(r: &ResultRow) -> f64 {
    r.ratio_excl_construction.unwrap()
}

fn query_mean(r: &ResultRow) -> f64 {
    r.query_dists_mean.unwrap()
}

fn pruning(runs: &MixtureRuns) -> Outcome {
    let mv = runs.median(IndexKind::VpMv, ConstructionMode::Batch, 1, ratio_excl);
    let med = runs.median(IndexKind::VpMedian, ConstructionMode::Batch, 1, ratio_excl);
    let msg = format!("k=1 median ratio: vp-mv {mv:.4}, vp-median {med:.4}");
    check(mv < 1.0 && mv <= med, msg.clone())?;
    Ok(msg)
}

fn rbc_improvement(runs: &MixtureRuns) -> Outcome {
    let mut parts = Vec::new();
    for k in KS {
        let imp = runs.median(IndexKind::RbcImp, ConstructionMode::Batch, k, query_mean);
        let orig = runs.median(IndexKind::RbcOrig, ConstructionMode::Batch, k, query_mean);
        parts.push(format!("k={k}: {imp:.1} vs {orig:.1}"));
        check(imp <= orig, format!("rbc-imp above rbc-orig; {}", parts.join(", ")))?;
    }
    Ok(format!("median per-query counts, imp vs orig: {}", parts.join(", ")))
}

fn incremental_stability(runs: &MixtureRuns) -> Outcome {
    let mut parts = Vec::new();
    for k in KS {
        let batch = runs.median(IndexKind::RbcImp, ConstructionMode::Batch, k, ratio_excl);
        let incr = runs.median(IndexKind::RbcImp, ConstructionMode::Incremental, k, ratio_excl);
        let gap = (incr - batch) * 100.0;
        parts.push(format!("k={k}: {gap:+.2}pp"));
        check(gap.abs() <= 3.0, format!("gap too large; {}", parts.join(", ")))?;
    }
    Ok(format!("incremental minus batch: {}", parts.join(", ")))
}

fn counting() -> Outcome {
    let items = synthetic_gaussian_mixture(1_500, 5, 3, 0.05, 9).unwrap();
    let metric = counted(Euclidean::<f64>::new());
    for (i, q) in items.iter().step_by(100).enumerate() {
        let before = metric.count();
        brute_knn(&items, &metric, &q.payload, 1 + i).map_err(|e| e.to_string())?;
        check(metric.count() - before == items.len() as u64, "brute force call count")?;
    }
    for index in IndexKind::ALL {
        let mut c = config(index, MetricKind::Euclidean, ConstructionMode::Batch, 9);
        c.rw = RwRatio::new(10, 3);
        c.insert_cap = 300;
        c.queries = 50;
        let (_, counts) = run_interleaved_k(&c, &items, Euclidean::<f64>::new(), 5).map_err(|e| e.to_string())?;
        let phases = counts.construction + counts.inserts + counts.queries;
        check(phases == counts.wrapper_total, format!("{index}: {phases} != {}", counts.wrapper_total))?;
    }
    Ok("brute force makes n calls per query; phase counts sum to the wrapper total for every index".into())
}

fn structural_audits() -> Outcome {
    let mut rng = common::rng(99);
    let metric = Euclidean::<f64>::new();
    for round in 0..50 {
        let n = rng.gen_range(20..400);
        let dim = rng.gen_range(1..6);
        let items = if round % 2 == 0 {
            common::random_vectors(&mut rng, n, dim)
        } else {
            common::grid_vectors(&mut rng, n, dim)
        };
        let cut = rng.gen_range(1..n);
        let seed: u64 = rng.gen();
        let bucket = rng.gen_range(2..8);
        let fail = |what: &str, e: metric_index::Error| format!("round {round} {what}: {e}");

        for strategy in [SplitStrategy::Median, SplitStrategy::MinVariance] {
            let cfg = VpConfig::new(strategy).bucket(bucket).seed(seed);
            let mut vp = VpTree::build(items[..cut].to_vec(), metric, cfg).map_err(|e| fail("vp build", e))?;
            for item in items[cut..].iter().cloned() {
                vp.insert(item);
            }
            vp.audit().map_err(|e| fail("vp", e))?;
        }

        let mut rbc = RbcIndex::build(items[..cut].to_vec(), metric, RbcSearch::Improved, seed)
            .map_err(|e| fail("rbc build", e))?;
        for item in items[cut..].iter().cloned() {
            rbc.insert(item);
        }
        rbc.audit().map_err(|e| fail("rbc", e))?;

        let mut cover = CoverTree::build(items[..cut].to_vec(), metric, QueryBound::MaxDist);
        for item in items[cut..].iter().cloned() {
            cover.insert(item);
        }
        // Touch maxdist caches before auditing them.
        cover.knn(&items[0].payload, 3).map_err(|e| fail("cover query", e))?;
        cover.audit().map_err(|e| fail("cover", e))?;
    }
    Ok("50 build-then-insert sequences audited for vp (both splits), rbc and cover".into())
}

fn interleaved() -> Outcome {
    let mut totals: Vec<(IndexKind, Vec<f64>)> = IndexKind::ALL.iter().map(|&i| (i, Vec::new())).collect();
    for seed in SEEDS {
        let items = mixture(seed);
        for (index, t) in totals.iter_mut() {
            let mut c = config(*index, MetricKind::Euclidean, ConstructionMode::Batch, seed);
            c.rw = RwRatio::new(100, 1);
            c.insert_cap = 1_000;
            let (_, counts) = run_interleaved_k(&c, &items, Euclidean::<f64>::new(), 1)
                .map_err(|e| format!("{index} seed {seed}: {e}"))?;
            t.push(counts.wrapper_total as f64);
        }
    }
    let med = |kind: IndexKind| common::median(totals.iter().find(|(i, _)| *i == kind).unwrap().1.clone());
    let (vp, rbc, cover_b) = (med(IndexKind::VpMv), med(IndexKind::RbcImp), med(IndexKind::CoverB));
    let msg = format!("median total counts: vp-mv {vp}, rbc-imp {rbc}, cover-b {cover_b}");
    check(vp <= rbc && vp <= cover_b, msg.clone())?;
    Ok(format!("all answers oracle-correct; {msg}"))
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(outcome) => outcome,
        Err(payload) => Err(payload
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    }
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mixture_runs = std::cell::OnceCell::new();
    let runs = || mixture_runs.get_or_init(MixtureRuns::collect).as_ref().map_err(|e| e.clone());

    let criteria: Vec<Criterion> = vec![
        ("exactness suite", Box::new(exactness)),
        ("cover-tree search counterexample", Box::new(appendix_counterexample)),
        ("cover-tree insertion termination", Box::new(termination)),
        ("min-variance split oracle", Box::new(split_oracle)),
        ("vp-tree pruning efficacy", Box::new(|| pruning(runs()?))),
        ("rbc improved search", Box::new(|| rbc_improvement(runs()?))),
        ("rbc incremental stability", Box::new(|| incremental_stability(runs()?))),
        ("counting soundness", Box::new(counting)),
        ("structural audits", Box::new(structural_audits)),
        ("interleaved scenario", Box::new(interleaved)),
    ];

    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = guarded(run);
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name} ({secs:.1}s): {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name} ({secs:.1}s): {detail}", n + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

use std::process::{Command, Output};

use metric_index::datasets::parse_strings;
use metric_index::{brute_knn, Levenshtein};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metric-index"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn self_check_passes() {
    let out = run(&["self-check", "--seed", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).lines().all(|l| l.ends_with(": ok")));
}

#[test]
fn interleave_bench_emits_one_row_per_k() {
    let out = run(&[
        "interleave-bench",
        "--index",
        "vp-mv",
        "--metric",
        "euclidean",
        "--rw",
        "100:1",
        "--synthetic",
        "n=4000,d=10,k=4",
        "--seed",
        "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("index,metric,mode,k,"));
    for (line, k) in lines[1..].iter().zip([1, 5, 25, 100]) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], "vp-mv");
        assert_eq!(fields[3], k.to_string());
        assert_eq!(fields[4], "100:1");
        assert_eq!(fields[5], "3");
    }
}

#[test]
fn benches_are_deterministic() {
    let args = [
        "query-bench",
        "--index",
        "rbc-imp,cover",
        "--mode",
        "half-batch",
        "--synthetic",
        "n=800,d=5,k=3",
        "--queries",
        "50",
        "--seed",
        "9",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn knn_matches_brute_force() {
    let dir = std::env::temp_dir().join(format!("metric-index-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("titles.txt");
    let titles = "casablanca\ncasa blanca\nthe godfather\nvertigo\ncasino\nblade runner\nchinatown\nalien\naliens\ncasablanka\n";
    std::fs::write(&path, titles).unwrap();

    let out = run(&[
        "knn",
        "--index",
        "cover",
        "--metric",
        "levenshtein",
        "--data",
        path.to_str().unwrap(),
        "--query",
        "casablanca",
        "--k",
        "5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let got: Vec<(usize, u32)> = stdout(&out)
        .lines()
        .map(|l| {
            let (id, d) = l.split_once('\t').unwrap();
            (id.parse().unwrap(), d.parse().unwrap())
        })
        .collect();

    let items = parse_strings(titles);
    let expected = brute_knn(&items, &Levenshtein, &b"casablanca".to_vec(), 5).unwrap();
    assert_eq!(got.len(), 5);
    assert_eq!(
        got.iter().map(|p| p.1).collect::<Vec<_>>(),
        expected.distances()
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn unknown_flag_fails() {
    let out = run(&["query-bench", "--synthetic", "n=100", "--frobnicate"]);
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
}

#[test]
fn unreadable_dataset_is_one_line_error() {
    let out = run(&["query-bench", "--data", "/nonexistent/vectors.txt"]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.starts_with("error:"));
}

#[test]
fn legacy_cover_bug_is_caught_by_the_correctness_gate() {
    let out = run(&[
        "query-bench",
        "--index",
        "cover",
        "--synthetic",
        "n=500,d=4,k=3,spread=0.05",
        "--k",
        "1",
        "--queries",
        "500",
        "--legacy-cover-bug",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("query"));
}

#[test]
fn manifest_records_configs() {
    let dir = std::env::temp_dir().join(format!("metric-index-manifest-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let manifest = dir.join("run.json");
    let out = run(&[
        "build-bench",
        "--index",
        "vp-median,cover",
        "--mode",
        "batch,incremental",
        "--synthetic",
        "n=300,d=3",
        "--seed",
        "1,2",
        "--jobs",
        "2",
        "--manifest",
        manifest.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // Two vp modes plus one cover row, per seed.
    assert_eq!(stdout(&out).lines().count(), 1 + 2 * 3);
    let json = std::fs::read_to_string(&manifest).unwrap();
    assert!(json.contains("\"experiment\": \"construction\""));
    assert!(json.contains("gaussian-mixture"));
    std::fs::remove_dir_all(&dir).ok();
}

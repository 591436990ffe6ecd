use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fdbscan::{Algorithm, Clustering, DbscanParams};
use fdbscan_cli::args::DatasetKind;
use fdbscan_cli::commands::{make_dataset, verify_clusterings, BENCH_HEADER};
use fdbscan_cli::io::read_points;
use tempfile::TempDir;

fn fdbscan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdbscan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &TempDir, name: &str, extra: &[&str]) -> PathBuf {
    let path = dir.path().join(name);
    let mut args = vec!["generate", "--out", path_str(&path)];
    args.extend_from_slice(extra);
    let o = fdbscan(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    path
}

fn stat(report: &str, key: &str) -> String {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no {key} in\n{report}"))
        .to_string()
}

#[test]
fn cluster_writes_one_label_per_point() {
    let dir = TempDir::new().unwrap();
    let input = generate(&dir, "blobs.csv", &["--kind", "blobs", "--n", "3000", "--seed", "4"]);
    let out = dir.path().join("labels.txt");
    let o = fdbscan(&[
        "cluster", "--algo", "fdbscan", "--eps", "1", "--minpts", "5",
        "--input", path_str(&input), "--out", path_str(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let labels: Vec<i64> = text.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(labels.len(), 3000);
    assert!(labels.iter().all(|&l| l == -1 || (0..3000).contains(&l)));
    let report = stdout(&o);
    for key in ["build", "preprocess", "main", "finalize", "clusters", "cores", "noise"] {
        stat(&report, key);
    }
    assert_eq!(stat(&report, "clusters"), "10");
}

#[test]
fn labels_go_to_stdout_without_out() {
    let dir = TempDir::new().unwrap();
    let input = generate(&dir, "noise.csv", &["--kind", "noise", "--n", "300"]);
    let o = fdbscan(&["cluster", "--eps", "5", "--minpts", "3", "-i", path_str(&input)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 300);
    stat(&stderr(&o), "clusters");
}

#[test]
fn minpts_two_skips_preprocessing() {
    let dir = TempDir::new().unwrap();
    let input = generate(&dir, "blobs.csv", &["--n", "1000"]);
    let out = dir.path().join("l.txt");
    for algo in ["fdbscan", "densebox"] {
        let o = fdbscan(&[
            "cluster", "--algo", algo, "--eps", "0.3", "--minpts", "2",
            "-i", path_str(&input), "-o", path_str(&out),
        ]);
        assert!(o.status.success());
        assert!(stat(&stdout(&o), "preprocess").starts_with("skipped"));
    }
    let o = fdbscan(&["cluster", "--eps", "0.3", "--minpts", "3", "-i", path_str(&input), "-o", path_str(&out)]);
    assert!(stat(&stdout(&o), "preprocess").ends_with("ms"));
}

#[test]
fn densebox_on_lattice_is_mostly_dense() {
    let dir = TempDir::new().unwrap();
    for (dim, n, eps, minpts) in [("2", "10000", "6", "10"), ("3", "27000", "6", "20")] {
        let input = generate(&dir, "lattice.bin", &["--kind", "lattice", "--dim", dim, "--n", n]);
        let out = dir.path().join("l.txt");
        let o = fdbscan(&[
            "cluster", "--algo", "densebox", "--eps", eps, "--minpts", minpts,
            "-i", path_str(&input), "-o", path_str(&out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let frac: f64 = stat(&stdout(&o), "dense-cell point fraction").parse().unwrap();
        assert!(frac >= 0.95, "dim {dim}: dense fraction {frac}");
    }
}

#[test]
fn verify_passes_on_small_instance() {
    let dir = TempDir::new().unwrap();
    let input = generate(&dir, "b.csv", &["--n", "1500", "--sigma", "2", "--seed", "9"]);
    let o = fdbscan(&["verify", "-i", path_str(&input), "--eps", "0.7", "--minpts", "6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("fdbscan vs oracle: PASS"));
    assert!(text.contains("densebox vs oracle: PASS"));
    assert!(text.contains("fdbscan vs densebox: PASS"));
}

#[test]
fn verify_above_cap_cross_checks_only() {
    let dir = TempDir::new().unwrap();
    let input = generate(&dir, "b.csv", &["--n", "1500"]);
    let o = fdbscan(&["verify", "-i", path_str(&input), "--eps", "0.5", "--minpts", "5", "--verify-cap", "1000"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("notice:"));
    assert!(text.contains("cross-algorithm check only"));
    assert!(!text.contains("vs oracle"));
    assert!(text.contains("fdbscan vs densebox: PASS"));
}

#[test]
fn injected_fault_reports_first_divergent_index() {
    let dir = TempDir::new().unwrap();
    let input = generate(&dir, "b.csv", &["--n", "800", "--seed", "2"]);
    let points = read_points(&input, fdbscan_cli::io::Format::Auto).unwrap();
    let params = DbscanParams::new(0.5, 5).unwrap();
    let fd = fdbscan::run(&points, &params, Algorithm::Fdbscan).unwrap();
    let db = fdbscan::run(&points, &params, Algorithm::DenseBox).unwrap();
    let reference = fdbscan::oracle::dbscan_bruteforce(&points, &params).unwrap();

    let target = (0..points.len()).find(|&i| fd.is_core(i)).unwrap();
    let mut flags = fd.core_flags().to_vec();
    flags[target] = false;
    let faulty = Clustering::new(fd.labels().to_vec(), flags);

    let reports = verify_clusterings(&points, &params, &faulty, &db, Some(&reference));
    let (name, report) = &reports[0];
    assert_eq!(name, "fdbscan vs oracle");
    assert!(!report.is_pass());
    assert_eq!(report.first_index(), Some(target));
    let line = report.to_string();
    assert!(line.starts_with("FAIL"), "{line}");
    assert!(line.contains(&target.to_string()), "{line}");
    assert!(reports[1].1.is_pass());
    assert!(!reports[2].1.is_pass());
}

fn parse_bench(text: &str) -> Vec<Vec<String>> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(BENCH_HEADER));
    let width = BENCH_HEADER.split(',').count();
    lines
        .map(|l| {
            let row: Vec<String> = l.split(',').map(str::to_string).collect();
            assert_eq!(row.len(), width, "{l}");
            row
        })
        .collect()
}

fn column(name: &str) -> usize {
    BENCH_HEADER.split(',').position(|c| c == name).unwrap()
}

#[test]
fn bench_minpts_sweep_shape() {
    let o = fdbscan(&["bench", "--n", "3000", "--eps", "0.5", "--minpts", "2,5,10,50", "--threads", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = parse_bench(&stdout(&o));
    assert_eq!(rows.len(), 8);
    let mut seen: Vec<(String, String)> = rows
        .iter()
        .map(|r| (r[column("algorithm")].clone(), r[column("minpts")].clone()))
        .collect();
    seen.sort();
    seen.dedup();
    assert_eq!(seen.len(), 8);
    for r in &rows {
        assert_eq!(r[column("n")], "3000");
        let skipped = r[column("preprocess_ms")].is_empty();
        assert_eq!(skipped, r[column("minpts")] == "2");
        assert_eq!(r[column("dense_fraction")].is_empty(), r[column("algorithm")] == "fdbscan");
    }
}

#[test]
fn bench_eps_sweep_dense_fraction_nondecreasing() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("bench.csv");
    let o = fdbscan(&[
        "bench", "--kind", "lattice", "--n", "10000", "--eps", "0.5,1,2,3,4,6,8,12",
        "--minpts", "5", "--algo", "densebox", "--out", path_str(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = parse_bench(&std::fs::read_to_string(&out).unwrap());
    let fracs: Vec<f64> = rows.iter().map(|r| r[column("dense_fraction")].parse().unwrap()).collect();
    assert_eq!(fracs.len(), 8);
    assert!(fracs.windows(2).all(|w| w[0] <= w[1]), "{fracs:?}");
    assert_eq!(fracs[0], 0.0);
    assert!(*fracs.last().unwrap() > 0.95);
}

#[test]
fn bench_runtime_grows_with_n() {
    let o = fdbscan(&[
        "bench", "--n", "10000,40000,160000", "--eps", "0.3", "--minpts", "10", "--algo", "fdbscan",
    ]);
    assert!(o.status.success());
    let rows = parse_bench(&stdout(&o));
    let totals: Vec<f64> = rows.iter().map(|r| r[column("total_ms")].parse().unwrap()).collect();
    assert!(totals.windows(2).all(|w| w[0] <= w[1]), "{totals:?}");
}

#[test]
fn single_thread_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let a = generate(&dir, "a.bin", &["--n", "5000", "--seed", "17", "--kind", "blobs"]);
    let b = generate(&dir, "b.bin", &["--n", "5000", "--seed", "17", "--kind", "blobs"]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let mut outputs = Vec::new();
    for (i, algo) in ["fdbscan", "fdbscan", "densebox", "densebox"].iter().enumerate() {
        let out = dir.path().join(format!("l{i}.txt"));
        let o = fdbscan(&[
            "cluster", "--algo", algo, "--eps", "0.4", "--minpts", "4", "--threads", "1",
            "-i", path_str(&a), "-o", path_str(&out),
        ]);
        assert!(o.status.success());
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[2], outputs[3]);
}

#[test]
fn csv_and_binary_inputs_agree() {
    let dir = TempDir::new().unwrap();
    let csv = generate(&dir, "p.csv", &["--n", "2000", "--dim", "3", "--seed", "5"]);
    let bin = generate(&dir, "p.bin", &["--n", "2000", "--dim", "3", "--seed", "5"]);
    let a = read_points(&csv, fdbscan_cli::io::Format::Auto).unwrap();
    let b = read_points(&bin, fdbscan_cli::io::Format::Auto).unwrap();
    assert_eq!(a, b);
    let forced = dir.path().join("p.dat");
    std::fs::copy(&bin, &forced).unwrap();
    let o = fdbscan(&["cluster", "--format", "bin", "--eps", "1", "--minpts", "4", "-i", path_str(&forced)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 2000);
}

#[test]
fn renumber_uses_first_occurrence_order() {
    let dir = TempDir::new().unwrap();
    let input = generate(&dir, "b.csv", &["--n", "3000", "--seed", "8"]);
    let o = fdbscan(&["cluster", "--eps", "1", "--minpts", "5", "--renumber", "-i", path_str(&input)]);
    assert!(o.status.success());
    let labels: Vec<i64> = stdout(&o).lines().map(|l| l.parse().unwrap()).collect();
    let mut next = 0;
    for l in labels {
        if l >= 0 {
            assert!(l <= next);
            if l == next {
                next += 1;
            }
        }
    }
    assert_eq!(next, 10);
}

#[test]
fn oracle_algo_matches_and_respects_cap() {
    let dir = TempDir::new().unwrap();
    let input = generate(&dir, "b.csv", &["--n", "600", "--seed", "3"]);
    let run = |algo: &str| {
        fdbscan(&["cluster", "--algo", algo, "--eps", "0.5", "--minpts", "5", "--renumber", "-i", path_str(&input)])
    };
    let oracle = run("oracle");
    assert!(oracle.status.success());
    let points = read_points(&input, fdbscan_cli::io::Format::Auto).unwrap();
    let params = DbscanParams::new(0.5, 5).unwrap();
    let fd = fdbscan::run(&points, &params, Algorithm::Fdbscan).unwrap();
    let oracle_labels: Vec<i64> = stdout(&oracle).lines().map(|l| l.parse().unwrap()).collect();
    for i in 0..points.len() {
        assert_eq!(oracle_labels[i] == -1, fd.is_noise(i));
    }
    let capped = fdbscan(&["cluster", "--algo", "oracle", "--eps", "0.5", "--minpts", "5", "--verify-cap", "100", "-i", path_str(&input)]);
    assert_eq!(capped.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.csv");
    let o = fdbscan(&["cluster", "--eps", "1", "--minpts", "2", "-i", path_str(&missing)]);
    assert_eq!(o.status.code(), Some(3));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "x,y\n0,1\n1,1\n2,zz\n").unwrap();
    let o = fdbscan(&["cluster", "--eps", "1", "--minpts", "2", "-i", path_str(&bad)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("bad.csv:4:"), "{}", stderr(&o));

    let truncated = dir.path().join("t.bin");
    std::fs::write(&truncated, [3u8, 0, 0, 0, 2, 0, 0, 0, 0, 0]).unwrap();
    let o = fdbscan(&["cluster", "--eps", "1", "--minpts", "2", "-i", path_str(&truncated)]);
    assert_eq!(o.status.code(), Some(3));

    let good = generate(&dir, "g.csv", &["--n", "50"]);
    for args in [
        vec!["cluster", "--eps", "-1", "--minpts", "2", "-i", path_str(&good)],
        vec!["cluster", "--eps", "1", "--minpts", "1", "-i", path_str(&good)],
        vec!["cluster", "--eps", "1", "-i", path_str(&good)],
        vec!["cluster", "--eps", "1", "--minpts", "2", "--algo", "kmeans", "-i", path_str(&good)],
        vec!["frobnicate"],
    ] {
        let o = fdbscan(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }

    let unwritable = dir.path().join("no/such/dir/l.txt");
    let o = fdbscan(&["cluster", "--eps", "1", "--minpts", "2", "-i", path_str(&good), "-o", path_str(&unwritable)]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn generated_datasets_have_requested_size() {
    let base = fdbscan_cli::args::DatasetArgs {
        kind: DatasetKind::Blobs,
        dim: 2,
        seed: 1,
        k: 7,
        separation: 10.0,
        sigma: 1.0,
        extent: 50.0,
        spacing: 1.0,
    };
    for kind in [DatasetKind::Blobs, DatasetKind::Noise, DatasetKind::Lattice] {
        for dim in [2, 3] {
            for n in [1, 5, 1000, 1001] {
                let args = fdbscan_cli::args::DatasetArgs { kind, dim, ..base.clone() };
                if kind == DatasetKind::Lattice && n == 1 {
                    continue;
                }
                let ps = make_dataset(&args, n).unwrap();
                assert_eq!(ps.len(), n, "{kind:?} d={dim} n={n}");
                assert_eq!(ps.dim(), dim);
            }
        }
    }
}

use std::fs::File;
use std::io::{self, Write};
use std::time::{Duration, Instant};

use fdbscan::datagen;
use fdbscan::oracle::{self, EquivalenceReport};
use fdbscan::{Aabb, Algorithm, Clustering, DbscanParams, PointSet, RunStats};

use crate::args::*;
use crate::error::CliError;
use crate::io::{read_points, write_labels, write_points};

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Cluster(a) => cluster(&a),
        Command::Verify(a) => verify(&a),
        Command::Generate(a) => generate(&a),
        Command::Bench(a) => bench(&a),
    }
}

fn params_of(p: &ParamArgs) -> Result<DbscanParams, CliError> {
    Ok(DbscanParams::new(p.eps, p.minpts)?)
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn cluster(a: &ClusterArgs) -> Result<(), CliError> {
    let params = params_of(&a.params)?;
    let points = read_points(&a.input.input, a.input.format)?;
    let threads = a.params.threads;
    let (clustering, stats) = match a.algo {
        AlgoChoice::Fdbscan => fdbscan::with_threads(threads, || {
            fdbscan::run_with_stats(&points, &params, Algorithm::Fdbscan)
        })??,
        AlgoChoice::Densebox => fdbscan::with_threads(threads, || {
            fdbscan::run_with_stats(&points, &params, Algorithm::DenseBox)
        })??,
        AlgoChoice::Oracle => {
            let start = Instant::now();
            let c = oracle::dbscan_bruteforce_with_cap(&points, &params, a.verify_cap)?;
            let stats = RunStats {
                main: start.elapsed(),
                ..RunStats::default()
            };
            (c, stats)
        }
    };

    let labels = if a.renumber {
        clustering.renumbered()
    } else {
        clustering.to_signed()
    };
    let report = cluster_summary(a.algo, &points, &params, threads, &clustering, &stats);
    match &a.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::io(path, e))?;
            write_labels(file, &labels).map_err(|e| CliError::io(path, e))?;
            print!("{report}");
        }
        None => {
            write_labels(io::stdout().lock(), &labels).map_err(|e| CliError::io("<stdout>".as_ref(), e))?;
            eprint!("{report}");
        }
    }
    Ok(())
}

/// Human-readable phase timings and counts for one run.
pub fn cluster_summary(
    algo: AlgoChoice,
    points: &PointSet,
    params: &DbscanParams,
    threads: usize,
    c: &Clustering,
    stats: &RunStats,
) -> String {
    let name = match algo {
        AlgoChoice::Fdbscan => "fdbscan",
        AlgoChoice::Densebox => "densebox",
        AlgoChoice::Oracle => "oracle",
    };
    let mut s = String::new();
    let mut line = |text: String| {
        s.push_str(&text);
        s.push('\n');
    };
    line(format!("algorithm: {name}"));
    line(format!("points: {} (d={})", points.len(), points.dim()));
    line(format!("eps: {}  minpts: {}  threads: {threads}", params.eps(), params.minpts()));
    if algo == AlgoChoice::Oracle {
        line(format!("total: {:.3} ms", ms(stats.main)));
    } else {
        line(format!("build: {:.3} ms", ms(stats.build)));
        match stats.preprocess {
            Some(d) => line(format!("preprocess: {:.3} ms", ms(d))),
            None => line("preprocess: skipped (minpts = 2)".into()),
        }
        line(format!("main: {:.3} ms", ms(stats.main)));
        line(format!("finalize: {:.3} ms", ms(stats.finalize)));
        line(format!("total: {:.3} ms", ms(stats.total())));
        line(format!("distance evaluations: {}", stats.distance_evals()));
    }
    line(format!("clusters: {}", c.num_clusters()));
    line(format!("cores: {}", c.num_cores()));
    line(format!("noise: {}", c.num_noise()));
    if let (Some(cells), Some(frac)) = (stats.dense_cells, stats.dense_point_fraction) {
        line(format!("dense cells: {cells}"));
        line(format!("dense-cell point fraction: {frac:.4}"));
    }
    s
}

/// Pairwise equivalence reports for the available clusterings.
pub fn verify_clusterings(
    points: &PointSet,
    params: &DbscanParams,
    fdbscan: &Clustering,
    densebox: &Clustering,
    reference: Option<&Clustering>,
) -> Vec<(String, EquivalenceReport)> {
    let mut out = Vec::new();
    if let Some(r) = reference {
        out.push(("fdbscan vs oracle".to_string(), oracle::check_equivalence(fdbscan, r, points, params)));
        out.push(("densebox vs oracle".to_string(), oracle::check_equivalence(densebox, r, points, params)));
    }
    out.push(("fdbscan vs densebox".to_string(), oracle::check_equivalence(fdbscan, densebox, points, params)));
    out
}

fn verify(a: &VerifyArgs) -> Result<(), CliError> {
    let params = params_of(&a.params)?;
    let points = read_points(&a.input.input, a.input.format)?;
    let (fd, db) = fdbscan::with_threads(a.params.threads, || {
        let fd = fdbscan::run(&points, &params, Algorithm::Fdbscan)?;
        let db = fdbscan::run(&points, &params, Algorithm::DenseBox)?;
        Ok::<_, fdbscan::Error>((fd, db))
    })??;
    let reference = if points.len() <= a.verify_cap {
        Some(oracle::dbscan_bruteforce_with_cap(&points, &params, a.verify_cap)?)
    } else {
        println!(
            "notice: {} points exceed the verify cap of {}; oracle skipped, cross-algorithm check only",
            points.len(),
            a.verify_cap
        );
        None
    };
    let reports = verify_clusterings(&points, &params, &fd, &db, reference.as_ref());
    for (name, r) in &reports {
        println!("{name}: {r}");
    }
    if reports.iter().all(|(_, r)| r.is_pass()) {
        Ok(())
    } else {
        Err(CliError::VerifyFailed)
    }
}

/// Builds `n` points of the requested kind.
pub fn make_dataset(d: &DatasetArgs, n: usize) -> Result<PointSet, CliError> {
    if n == 0 {
        return Err(CliError::Usage("n must be positive".into()));
    }
    let ps = match d.kind {
        DatasetKind::Blobs => {
            let k = d.k.clamp(1, n);
            let per_blob = n.div_ceil(k);
            datagen::gaussian_blobs(k, per_blob, d.dim, d.separation, d.sigma, d.seed)?
        }
        DatasetKind::Noise => {
            let bounds = Aabb {
                min: [0.0; 3],
                max: if d.dim == 2 {
                    [d.extent as f32, d.extent as f32, 0.0]
                } else {
                    [d.extent as f32; 3]
                },
            };
            datagen::uniform_noise(n, d.dim, &bounds, d.seed)?
        }
        DatasetKind::Lattice => {
            let mut side = (n as f64).powf(1.0 / d.dim as f64).round().max(2.0) as usize;
            while side.pow(d.dim as u32) < n {
                side += 1;
            }
            datagen::dense_lattice(side, d.dim, d.spacing)?
        }
    };
    if ps.len() == n {
        Ok(ps)
    } else {
        Ok(PointSet::new(ps.dim(), ps.points()[..n.min(ps.len())].to_vec())?)
    }
}

fn generate(a: &GenerateArgs) -> Result<(), CliError> {
    let points = make_dataset(&a.dataset, a.n)?;
    write_points(&a.out, &points, a.format)
}

pub const BENCH_HEADER: &str = "algorithm,dataset,n,dim,eps,minpts,threads,build_ms,preprocess_ms,main_ms,finalize_ms,total_ms,clusters,cores,noise,distance_evals,dense_fraction";

/// Formats one bench row. Skipped preprocessing and missing dense fractions
/// are left empty.
pub fn bench_row(
    algo: BenchAlgo,
    dataset: DatasetKind,
    points: &PointSet,
    params: &DbscanParams,
    threads: usize,
    c: &Clustering,
    stats: &RunStats,
) -> String {
    let algo = match algo {
        BenchAlgo::Fdbscan => "fdbscan",
        BenchAlgo::Densebox => "densebox",
    };
    let dataset = match dataset {
        DatasetKind::Blobs => "blobs",
        DatasetKind::Noise => "noise",
        DatasetKind::Lattice => "lattice",
    };
    let pre = stats.preprocess.map(|d| format!("{:.3}", ms(d))).unwrap_or_default();
    let frac = stats.dense_point_fraction.map(|f| format!("{f:.6}")).unwrap_or_default();
    format!(
        "{algo},{dataset},{},{},{},{},{threads},{:.3},{pre},{:.3},{:.3},{:.3},{},{},{},{},{frac}",
        points.len(),
        points.dim(),
        params.eps(),
        params.minpts(),
        ms(stats.build),
        ms(stats.main),
        ms(stats.finalize),
        ms(stats.total()),
        c.num_clusters(),
        c.num_cores(),
        c.num_noise(),
        stats.distance_evals(),
    )
}

fn bench(a: &BenchArgs) -> Result<(), CliError> {
    let mut out: Box<dyn Write> = match &a.out {
        Some(path) => Box::new(io::BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?)),
        None => Box::new(io::stdout().lock()),
    };
    let dest = a.out.clone().unwrap_or_else(|| "<stdout>".into());
    let mut emit = |line: &str| writeln!(out, "{line}").map_err(|e| CliError::io(&dest, e));
    let params: Vec<DbscanParams> = a
        .eps
        .iter()
        .flat_map(|&eps| a.minpts.iter().map(move |&m| DbscanParams::new(eps, m)))
        .collect::<Result<_, _>>()?;
    emit(BENCH_HEADER)?;
    for &n in &a.n {
        let points = make_dataset(&a.dataset, n)?;
        for p in &params {
            for &algo in &a.algo {
                let algorithm = match algo {
                    BenchAlgo::Fdbscan => Algorithm::Fdbscan,
                    BenchAlgo::Densebox => Algorithm::DenseBox,
                };
                let (c, stats) =
                    fdbscan::with_threads(a.threads, || fdbscan::run_with_stats(&points, p, algorithm))??;
                emit(&bench_row(algo, a.dataset.kind, &points, p, a.threads, &c, &stats))?;
            }
        }
    }
    Ok(())
}

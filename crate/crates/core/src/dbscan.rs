//! The two-phase disjoint-set DBSCAN framework shared by both algorithms.
//!
//! 1. build the search index;
//! 2. preprocessing: determine core points (skipped when `minpts == 2`);
//! 3. main phase: resolve every within-eps pair through the union-find;
//! 4. flatten the label forest and assign noise.

use std::ops::AddAssign;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::densebox;
use crate::error::{Error, Result};
use crate::fdbscan;
use crate::geometry::PointSet;
use crate::unionfind::Labels;

/// Label value for noise points.
pub const NOISE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbscanParams {
    eps: f64,
    minpts: usize,
}

impl DbscanParams {
    pub fn new(eps: f64, minpts: usize) -> Result<Self> {
        if !eps.is_finite() || eps <= 0.0 {
            return Err(Error::InvalidEps(eps));
        }
        if minpts < 2 {
            return Err(Error::InvalidMinPts(minpts));
        }
        Ok(Self { eps, minpts })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// The comparison threshold: a pair is within range iff `dist² <= eps²`.
    #[inline]
    pub fn eps_sq(&self) -> f64 {
        self.eps * self.eps
    }

    pub fn minpts(&self) -> usize {
        self.minpts
    }

    /// `minpts == 2` is friends-of-friends: every within-eps pair is a
    /// core pair and the preprocessing phase is skipped.
    pub fn skips_preprocessing(&self) -> bool {
        self.minpts == 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Fdbscan,
    DenseBox,
}

/// Per-point core flags, writable from concurrent workers.
#[derive(Debug)]
pub struct CoreFlags {
    flags: Vec<AtomicBool>,
}

impl CoreFlags {
    pub fn new(n: usize) -> Self {
        Self {
            flags: (0..n).map(|_| AtomicBool::new(false)).collect(),
        }
    }

    pub fn from_vec(flags: Vec<bool>) -> Self {
        Self {
            flags: flags.into_iter().map(AtomicBool::new).collect(),
        }
    }

    #[inline]
    pub fn is_core(&self, i: usize) -> bool {
        self.flags[i].load(Ordering::Relaxed)
    }

    #[inline]
    pub fn set(&self, i: usize, value: bool) {
        self.flags[i].store(value, Ordering::Relaxed);
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn to_vec(&self) -> Vec<bool> {
        self.flags.iter().map(|f| f.load(Ordering::Relaxed)).collect()
    }
}

/// Final per-point output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    labels: Vec<usize>,
    is_core: Vec<bool>,
}

impl Clustering {
    /// `labels[i]` is a cluster id or [`NOISE`].
    pub fn new(labels: Vec<usize>, is_core: Vec<bool>) -> Self {
        assert_eq!(labels.len(), is_core.len());
        Self { labels, is_core }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> Option<usize> {
        match self.labels[i] {
            NOISE => None,
            l => Some(l),
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn is_core(&self, i: usize) -> bool {
        self.is_core[i]
    }

    pub fn core_flags(&self) -> &[bool] {
        &self.is_core
    }

    pub fn is_noise(&self, i: usize) -> bool {
        self.labels[i] == NOISE
    }

    pub fn is_border(&self, i: usize) -> bool {
        !self.is_core[i] && !self.is_noise(i)
    }

    pub fn num_cores(&self) -> usize {
        self.is_core.iter().filter(|&&c| c).count()
    }

    pub fn num_noise(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }

    pub fn num_clusters(&self) -> usize {
        let mut ids: Vec<usize> = self.labels.iter().copied().filter(|&l| l != NOISE).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    /// Labels with noise as `-1`.
    pub fn to_signed(&self) -> Vec<i64> {
        self.labels
            .iter()
            .map(|&l| if l == NOISE { -1 } else { l as i64 })
            .collect()
    }

    /// Labels renumbered `0..k` by first occurrence, noise as `-1`.
    pub fn renumbered(&self) -> Vec<i64> {
        let mut map = std::collections::HashMap::new();
        self.labels
            .iter()
            .map(|&l| {
                if l == NOISE {
                    -1
                } else {
                    let next = map.len() as i64;
                    *map.entry(l).or_insert(next)
                }
            })
            .collect()
    }
}

/// Instrumentation counters accumulated per phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    /// Point-to-point distance evaluations.
    pub distance_evals: u64,
    /// Calls to the pair resolution routine.
    pub resolve_calls: u64,
}

impl AddAssign for Counters {
    fn add_assign(&mut self, rhs: Self) {
        self.distance_evals += rhs.distance_evals;
        self.resolve_calls += rhs.resolve_calls;
    }
}

impl std::ops::Add for Counters {
    type Output = Counters;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl std::iter::Sum for Counters {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Counters::default(), |a, b| a + b)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunStats {
    pub build: Duration,
    /// `None` when the preprocessing phase was skipped.
    pub preprocess: Option<Duration>,
    pub main: Duration,
    pub finalize: Duration,
    pub preprocess_counters: Counters,
    pub main_counters: Counters,
    pub dense_cells: Option<usize>,
    pub dense_point_fraction: Option<f64>,
}

impl RunStats {
    pub fn total(&self) -> Duration {
        self.build + self.preprocess.unwrap_or_default() + self.main + self.finalize
    }

    pub fn distance_evals(&self) -> u64 {
        self.preprocess_counters.distance_evals + self.main_counters.distance_evals
    }
}

/// Resolves a within-eps pair. Both core: union. Exactly one core: the
/// other point is attached to the core's tree if no cluster has claimed it
/// yet, in one compare-exchange. Neither core: nothing.
#[inline]
pub fn resolve_pair(i: usize, j: usize, flags: &CoreFlags, labels: &Labels) {
    match (flags.is_core(i), flags.is_core(j)) {
        (true, true) => labels.union(i, j),
        (true, false) => claim_border(j, i, labels),
        (false, true) => claim_border(i, j, labels),
        (false, false) => {}
    }
}

#[inline]
fn claim_border(border: usize, core: usize, labels: &Labels) {
    if labels.is_root(border) {
        labels.claim(border, labels.find(core));
    }
}

/// Pair resolution for the main phase, aware of the `minpts == 2` shortcut.
#[derive(Clone, Copy)]
pub(crate) struct Resolver<'a> {
    pub flags: &'a CoreFlags,
    pub labels: &'a Labels,
    pub friends_of_friends: bool,
}

impl Resolver<'_> {
    #[inline]
    pub fn resolve(&self, i: usize, j: usize) {
        if self.friends_of_friends {
            self.flags.set(i, true);
            self.flags.set(j, true);
            self.labels.union(i, j);
        } else {
            resolve_pair(i, j, self.flags, self.labels);
        }
    }
}

/// Flattens the forest and converts it to cluster labels. Core points and
/// claimed border points get their root; everything else is noise.
pub fn finalize(labels: &Labels, flags: &CoreFlags) -> Clustering {
    labels.flatten();
    let is_core = flags.to_vec();
    let out = (0..labels.len())
        .into_par_iter()
        .map(|i| {
            let root = labels.parent(i);
            if is_core[i] || root != i {
                root
            } else {
                NOISE
            }
        })
        .collect();
    Clustering::new(out, is_core)
}

/// Clusters `points` with the chosen algorithm on the current thread pool.
pub fn run(points: &PointSet, params: &DbscanParams, algorithm: Algorithm) -> Result<Clustering> {
    run_with_stats(points, params, algorithm).map(|(c, _)| c)
}

/// Same as [`run`], also returning phase timings and counters.
pub fn run_with_stats(
    points: &PointSet,
    params: &DbscanParams,
    algorithm: Algorithm,
) -> Result<(Clustering, RunStats)> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    match algorithm {
        Algorithm::Fdbscan => Ok(fdbscan::run(points, params)),
        Algorithm::DenseBox => Ok(densebox::run(points, params)),
    }
}

/// Runs `f` inside a dedicated pool of `threads` workers (0 = default).
pub fn with_threads<R, F>(threads: usize, f: F) -> Result<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))?;
    Ok(pool.install(f))
}

pub(crate) fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

//! Brute-force reference DBSCAN and clustering comparison.
//!
//! Everything here is single-threaded and independent of the BVH: the
//! reference uses full O(n²) scans and the checkers use a hash grid.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use crate::dbscan::{Clustering, DbscanParams, NOISE};
use crate::error::{Error, Result};
use crate::geometry::{distance_sq, PointSet};

pub const DEFAULT_ORACLE_CAP: usize = 10_000;

/// Sequential breadth-first DBSCAN on explicit neighbor lists, refusing
/// inputs above [`DEFAULT_ORACLE_CAP`] points.
pub fn dbscan_bruteforce(points: &PointSet, params: &DbscanParams) -> Result<Clustering> {
    dbscan_bruteforce_with_cap(points, params, DEFAULT_ORACLE_CAP)
}

pub fn dbscan_bruteforce_with_cap(points: &PointSet, params: &DbscanParams, cap: usize) -> Result<Clustering> {
    let n = points.len();
    if n > cap {
        return Err(Error::OracleCapExceeded { n, cap });
    }
    let eps_sq = params.eps_sq();
    let neighbors = |x: usize| -> Vec<usize> {
        (0..n)
            .filter(|&y| distance_sq(points.point(x), points.point(y)) <= eps_sq)
            .collect()
    };

    let mut visited = vec![false; n];
    let mut is_core = vec![false; n];
    let mut label = vec![NOISE; n];
    for x in 0..n {
        if visited[x] {
            continue;
        }
        visited[x] = true;
        let hood = neighbors(x);
        if hood.len() < params.minpts() {
            continue;
        }
        is_core[x] = true;
        label[x] = x;
        let mut queue: VecDeque<usize> = hood.into();
        while let Some(y) = queue.pop_front() {
            if !visited[y] {
                visited[y] = true;
                let inner = neighbors(y);
                if inner.len() >= params.minpts() {
                    is_core[y] = true;
                    queue.extend(inner);
                }
            }
            if label[y] == NOISE {
                label[y] = x;
            }
        }
    }
    Ok(Clustering::new(label, is_core))
}

/// Which of the two compared clusterings a divergence was found in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Divergence {
    Length { left: usize, right: usize },
    CoreFlag { index: usize },
    Noise { index: usize },
    /// Core point `index` maps to a different cluster than an earlier core
    /// point `witness` it was grouped with on the other side.
    CorePartition { index: usize, witness: usize },
    /// A border point whose cluster has no core point within eps of it.
    InvalidBorder { side: Side, index: usize },
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Divergence::Length { left, right } => write!(f, "length mismatch: {left} vs {right}"),
            Divergence::CoreFlag { index } => write!(f, "core flag differs at point {index}"),
            Divergence::Noise { index } => write!(f, "noise status differs at point {index}"),
            Divergence::CorePartition { index, witness } => {
                write!(f, "core partition differs at point {index} (grouped with {witness} on one side only)")
            }
            Divergence::InvalidBorder { side, index } => {
                write!(f, "border point {index} has an invalid label on the {side:?} side")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub divergence: Option<Divergence>,
}

impl EquivalenceReport {
    pub fn is_pass(&self) -> bool {
        self.divergence.is_none()
    }

    /// Index of the first divergent point, if any.
    pub fn first_index(&self) -> Option<usize> {
        match self.divergence.as_ref()? {
            Divergence::Length { .. } => None,
            Divergence::CoreFlag { index }
            | Divergence::Noise { index }
            | Divergence::CorePartition { index, .. }
            | Divergence::InvalidBorder { index, .. } => Some(*index),
        }
    }
}

impl fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.divergence {
            None => write!(f, "PASS"),
            Some(d) => write!(f, "FAIL: {d}"),
        }
    }
}

/// Compares two clusterings of the same points: identical core flags,
/// identical noise, equal core partitions up to renaming, and every border
/// point (on each side) labeled with a cluster that has a core point within
/// eps of it.
pub fn check_equivalence(a: &Clustering, b: &Clustering, points: &PointSet, params: &DbscanParams) -> EquivalenceReport {
    let fail = |d| EquivalenceReport { divergence: Some(d) };
    if a.len() != b.len() || a.len() != points.len() {
        return fail(Divergence::Length {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    if let Some(index) = (0..n).find(|&i| a.is_core(i) != b.is_core(i)) {
        return fail(Divergence::CoreFlag { index });
    }
    if let Some(index) = (0..n).find(|&i| a.is_noise(i) != b.is_noise(i)) {
        return fail(Divergence::Noise { index });
    }

    let mut a_to_b: HashMap<usize, (usize, usize)> = HashMap::new();
    let mut b_to_a: HashMap<usize, (usize, usize)> = HashMap::new();
    for i in (0..n).filter(|&i| a.is_core(i)) {
        let (la, lb) = (a.labels()[i], b.labels()[i]);
        if la == NOISE || lb == NOISE {
            return fail(Divergence::Noise { index: i });
        }
        let (mapped, witness) = *a_to_b.entry(la).or_insert((lb, i));
        if mapped != lb {
            return fail(Divergence::CorePartition { index: i, witness });
        }
        let (mapped, witness) = *b_to_a.entry(lb).or_insert((la, i));
        if mapped != la {
            return fail(Divergence::CorePartition { index: i, witness });
        }
    }

    let grid = HashGrid::new(points, params.eps(), |i| a.is_core(i));
    for (side, c) in [(Side::Left, a), (Side::Right, b)] {
        for i in (0..n).filter(|&i| c.is_border(i)) {
            let label = c.labels()[i];
            let valid = grid
                .within(points, i, params.eps_sq())
                .any(|j| c.labels()[j] == label);
            if !valid {
                return fail(Divergence::InvalidBorder { side, index: i });
            }
        }
    }
    EquivalenceReport { divergence: None }
}

/// Checks a clustering directly against the definitions.
pub fn check_invariants(c: &Clustering, points: &PointSet, params: &DbscanParams) -> Result<(), String> {
    let n = points.len();
    if c.len() != n {
        return Err(format!("{} labels for {n} points", c.len()));
    }
    let eps_sq = params.eps_sq();
    let all = HashGrid::new(points, params.eps(), |_| true);
    for i in 0..n {
        let count = all.within(points, i, eps_sq).count();
        if (count >= params.minpts()) != c.is_core(i) {
            return Err(format!("point {i}: {count} neighbors but core flag {}", c.is_core(i)));
        }
    }
    let cores = HashGrid::new(points, params.eps(), |i| c.is_core(i));
    for i in 0..n {
        let label = c.labels()[i];
        if c.is_core(i) {
            if label == NOISE {
                return Err(format!("core point {i} is noise"));
            }
            if let Some(j) = cores.within(points, i, eps_sq).find(|&j| c.labels()[j] != label) {
                return Err(format!("core points {i} and {j} are within eps but labeled apart"));
            }
        } else if label == NOISE {
            if let Some(j) = cores.within(points, i, eps_sq).next() {
                return Err(format!("noise point {i} has core {j} within eps"));
            }
        } else if !cores.within(points, i, eps_sq).any(|j| c.labels()[j] == label) {
            return Err(format!("border point {i} has no core of cluster {label} within eps"));
        }
    }
    Ok(())
}

/// Uniform hash grid with cell length eps over a filtered subset of points.
struct HashGrid {
    cell: f64,
    dim: usize,
    buckets: HashMap<[i64; 3], Vec<usize>>,
}

impl HashGrid {
    fn new(points: &PointSet, eps: f64, keep: impl Fn(usize) -> bool) -> Self {
        let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        let mut g = Self {
            cell: eps,
            dim: points.dim(),
            buckets: HashMap::new(),
        };
        for i in (0..points.len()).filter(|&i| keep(i)) {
            buckets.entry(g.key(points, i)).or_default().push(i);
        }
        g.buckets = buckets;
        g
    }

    fn key(&self, points: &PointSet, i: usize) -> [i64; 3] {
        let p = points.point(i);
        let mut k = [0i64; 3];
        for axis in 0..self.dim {
            k[axis] = (p[axis] as f64 / self.cell).floor() as i64;
        }
        k
    }

    /// Indexed points within eps of point `i`, including `i` if indexed.
    fn within<'a>(&'a self, points: &'a PointSet, i: usize, eps_sq: f64) -> impl Iterator<Item = usize> + 'a {
        let base = self.key(points, i);
        let span = |axis: usize| if axis < self.dim { -1i64..=1 } else { 0..=0 };
        let mut keys = Vec::with_capacity(27);
        for dx in span(0) {
            for dy in span(1) {
                for dz in span(2) {
                    keys.push([base[0] + dx, base[1] + dy, base[2] + dz]);
                }
            }
        }
        keys.into_iter()
            .filter_map(move |k| self.buckets.get(&k))
            .flatten()
            .copied()
            .filter(move |&j| distance_sq(points.point(i), points.point(j)) <= eps_sq)
    }
}

//! FDBSCAN-DenseBox: dense grid cells folded into the BVH as boxes.
//!
//! A Cartesian grid with cell length `eps / sqrt(d)` is laid over the data.
//! Every cell holding at least `minpts` points is dense: its members are
//! mutually within eps, hence all core and all in one cluster, and the BVH
//! stores the whole cell as a single box primitive.

use std::ops::ControlFlow;

use rayon::prelude::*;

use crate::bvh::{Bvh, Primitive, PrimitiveKind};
use crate::dbscan::{finalize, timed, Clustering, CoreFlags, Counters, DbscanParams, Resolver, RunStats};
use crate::geometry::{compute_bounds, distance_sq, Aabb, Point, PointSet};
use crate::unionfind::Labels;

/// Integer cell coordinates; lexicographic order equals row-major order.
pub type CellKey = [u64; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub key: CellKey,
    /// Range into [`DenseGrid::order`].
    pub start: usize,
    pub end: usize,
    /// Tight box of the member points.
    pub bounds: Aabb,
    pub dense: bool,
}

impl Cell {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Sparse grid: only non-empty cells are stored, sorted by key.
#[derive(Debug, Clone)]
pub struct DenseGrid {
    origin: Point,
    cell_len: f64,
    extents: CellKey,
    dim: usize,
    cells: Vec<Cell>,
    order: Vec<usize>,
    cell_of_point: Vec<usize>,
}

impl DenseGrid {
    pub fn origin(&self) -> &Point {
        &self.origin
    }

    /// `eps / sqrt(d)`.
    pub fn cell_len(&self) -> f64 {
        self.cell_len
    }

    /// Number of cells along each axis of the domain.
    pub fn extents(&self) -> &CellKey {
        &self.extents
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Point indices grouped by cell; cell `c` owns `order[c.start..c.end]`.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn members(&self, cell: usize) -> &[usize] {
        let c = &self.cells[cell];
        &self.order[c.start..c.end]
    }

    /// Index into [`DenseGrid::cells`] of the cell holding point `i`.
    pub fn cell_of(&self, i: usize) -> usize {
        self.cell_of_point[i]
    }

    pub fn find_cell(&self, key: &CellKey) -> Option<usize> {
        self.cells.binary_search_by(|c| c.key.cmp(key)).ok()
    }

    /// Cell coordinates of `p`, with the top boundary clamped into the last cell.
    pub fn key_of(&self, p: &Point) -> CellKey {
        cell_key(p, &self.origin, self.cell_len, &self.extents, self.dim)
    }

    pub fn num_dense_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.dense).count()
    }

    pub fn dense_point_count(&self) -> usize {
        self.cells.iter().filter(|c| c.dense).map(Cell::len).sum()
    }

    pub fn is_dense_member(&self, i: usize) -> bool {
        self.cells[self.cell_of_point[i]].dense
    }
}

fn cell_key(p: &Point, origin: &Point, h: f64, extents: &CellKey, dim: usize) -> CellKey {
    let mut key = [0u64; 3];
    for k in 0..dim {
        let t = (p[k] as f64 - origin[k] as f64) / h;
        key[k] = (t.max(0.0).floor() as u64).min(extents[k] - 1);
    }
    key
}

/// Bins the points into the grid and flags dense cells.
///
/// A cell is dense when it has at least `minpts` members and the diagonal
/// of its members' tight box is within eps under the same `dist² <= eps²`
/// arithmetic used everywhere else. The second condition holds by
/// construction; checking it keeps the shortcut exact under rounding.
pub fn build_grid(points: &PointSet, params: &DbscanParams) -> DenseGrid {
    let dim = points.dim();
    let bounds = compute_bounds(points);
    let h = params.eps() / (dim as f64).sqrt();
    let mut extents = [1u64; 3];
    for k in 0..dim {
        let span = bounds.max[k] as f64 - bounds.min[k] as f64;
        extents[k] = ((span / h).ceil() as u64).max(1);
    }
    let origin = bounds.min;

    let mut keyed: Vec<(CellKey, usize)> = (0..points.len())
        .into_par_iter()
        .map(|i| (cell_key(points.point(i), &origin, h, &extents, dim), i))
        .collect();
    keyed.par_sort_unstable();

    let order: Vec<usize> = keyed.iter().map(|&(_, i)| i).collect();
    let mut starts = vec![0usize];
    starts.extend((1..keyed.len()).filter(|&s| keyed[s].0 != keyed[s - 1].0));

    let eps_sq = params.eps_sq();
    let minpts = params.minpts();
    let cells: Vec<Cell> = starts
        .par_iter()
        .enumerate()
        .map(|(c, &start)| {
            let end = starts.get(c + 1).copied().unwrap_or(keyed.len());
            let mut bounds = Aabb::from_point(points.point(order[start]));
            for &i in &order[start..end] {
                bounds.expand_point(points.point(i));
            }
            let dense = end - start >= minpts && bounds.diagonal_sq() <= eps_sq;
            Cell {
                key: keyed[start].0,
                start,
                end,
                bounds,
                dense,
            }
        })
        .collect();

    let mut cell_of_point = vec![0usize; points.len()];
    for (c, cell) in cells.iter().enumerate() {
        for &i in &order[cell.start..cell.end] {
            cell_of_point[i] = c;
        }
    }

    DenseGrid {
        origin,
        cell_len: h,
        extents,
        dim,
        cells,
        order,
        cell_of_point,
    }
}

/// One box per dense cell plus one point per non-dense member, in cell order.
pub fn make_mixed_primitives(grid: &DenseGrid, points: &PointSet) -> Vec<Primitive> {
    let mut prims = Vec::new();
    for (c, cell) in grid.cells.iter().enumerate() {
        if cell.dense {
            prims.push(Primitive::dense_box(c, cell.bounds));
        } else {
            prims.extend(grid.members(c).iter().map(|&i| Primitive::point(i, points.point(i))));
        }
    }
    prims
}

/// Unions all members of each dense cell and marks them core.
pub fn union_dense_cells(grid: &DenseGrid, labels: &Labels, flags: &CoreFlags) {
    grid.cells.par_iter().enumerate().filter(|(_, c)| c.dense).for_each(|(c, _)| {
        let members = grid.members(c);
        let first = members[0];
        for &i in members {
            flags.set(i, true);
            labels.union(first, i);
        }
    });
}

/// Core detection for points outside dense cells. Dense members must already
/// be flagged by [`union_dense_cells`].
pub fn mark_cores_densebox(
    bvh: &Bvh,
    grid: &DenseGrid,
    points: &PointSet,
    params: &DbscanParams,
    flags: &CoreFlags,
) -> Counters {
    let eps_sq = params.eps_sq();
    let minpts = params.minpts();
    (0..bvh.len())
        .into_par_iter()
        .filter(|&r| bvh.leaf(r).kind == PrimitiveKind::SinglePoint)
        .map(|rank| {
            let i = bvh.leaf(rank).id;
            let p = points.point(i);
            let mut count = 0usize;
            let mut evals = 0u64;
            bvh.query_sphere(p, params.eps(), |_, leaf| {
                let candidates = match leaf.kind {
                    PrimitiveKind::SinglePoint => std::slice::from_ref(&leaf.id),
                    PrimitiveKind::DenseBox => grid.members(leaf.id),
                };
                for &j in candidates {
                    evals += 1;
                    if distance_sq(p, points.point(j)) <= eps_sq {
                        count += 1;
                        if count >= minpts {
                            return ControlFlow::Break(());
                        }
                    }
                }
                ControlFlow::Continue(())
            });
            if count >= minpts {
                flags.set(i, true);
            }
            Counters {
                distance_evals: evals,
                resolve_calls: 0,
            }
        })
        .sum()
}

/// For every point, queries the mixed BVH and resolves against found
/// points and against the first in-range member of each found box.
///
/// Queries are rank-masked by the rank of the point's own primitive, so a
/// pair of primitives is examined from the lower-ranked side only. A box
/// scan is skipped when its outcome is already decided: the querying point
/// is in the box's set, or it is a non-core point that has been claimed.
pub fn main_phase_densebox(
    bvh: &Bvh,
    grid: &DenseGrid,
    points: &PointSet,
    params: &DbscanParams,
    flags: &CoreFlags,
    labels: &Labels,
) -> Counters {
    let resolver = Resolver {
        flags,
        labels,
        friends_of_friends: params.skips_preprocessing(),
    };
    let eps_sq = params.eps_sq();
    let fof = params.skips_preprocessing();

    let mut rank_of_point = vec![0usize; points.len()];
    for (r, leaf) in bvh.leaves().iter().enumerate() {
        match leaf.kind {
            PrimitiveKind::SinglePoint => rank_of_point[leaf.id] = r,
            PrimitiveKind::DenseBox => {
                for &i in grid.members(leaf.id) {
                    rank_of_point[i] = r;
                }
            }
        }
    }

    grid.order
        .par_iter()
        .map(|&i| {
            let own = rank_of_point[i];
            let p = points.point(i);
            let mut c = Counters::default();
            bvh.query_sphere_masked(p, params.eps(), own, |r, leaf| {
                if r == own {
                    return ControlFlow::Continue(());
                }
                let i_core = flags.is_core(i);
                match leaf.kind {
                    PrimitiveKind::SinglePoint => {
                        let j = leaf.id;
                        if !fof && !i_core && !flags.is_core(j) {
                            return ControlFlow::Continue(());
                        }
                        c.distance_evals += 1;
                        if distance_sq(p, points.point(j)) <= eps_sq {
                            c.resolve_calls += 1;
                            resolver.resolve(i, j);
                        }
                    }
                    PrimitiveKind::DenseBox => {
                        let members = grid.members(leaf.id);
                        let settled = if !fof && !i_core {
                            !labels.is_root(i)
                        } else {
                            labels.find(i) == labels.find(members[0])
                        };
                        if settled {
                            return ControlFlow::Continue(());
                        }
                        for &j in members {
                            c.distance_evals += 1;
                            if distance_sq(p, points.point(j)) <= eps_sq {
                                c.resolve_calls += 1;
                                resolver.resolve(i, j);
                                break;
                            }
                        }
                    }
                }
                ControlFlow::Continue(())
            });
            c
        })
        .sum()
}

pub(crate) fn run(points: &PointSet, params: &DbscanParams) -> (Clustering, RunStats) {
    let mut stats = RunStats::default();
    let ((grid, bvh), build) = timed(|| {
        let grid = build_grid(points, params);
        let bvh = Bvh::build(make_mixed_primitives(&grid, points), points.dim());
        (grid, bvh)
    });
    stats.build = build;
    stats.dense_cells = Some(grid.num_dense_cells());
    stats.dense_point_fraction = Some(grid.dense_point_count() as f64 / points.len() as f64);

    let labels = Labels::make_sets(points.len());
    let flags = CoreFlags::new(points.len());
    let (_, t_union) = timed(|| union_dense_cells(&grid, &labels, &flags));
    if !params.skips_preprocessing() {
        let (counters, t) = timed(|| mark_cores_densebox(&bvh, &grid, points, params, &flags));
        stats.preprocess = Some(t);
        stats.preprocess_counters = counters;
    }

    let (counters, t) = timed(|| main_phase_densebox(&bvh, &grid, points, params, &flags, &labels));
    stats.main = t + t_union;
    stats.main_counters = counters;

    let (clustering, t) = timed(|| finalize(&labels, &flags));
    stats.finalize = t;
    (clustering, stats)
}

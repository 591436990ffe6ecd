//! Linear bounding volume hierarchy over points and dense-cell boxes.
//!
//! Leaves are sorted by the Morton code of their centroid (ties broken by
//! the input index) and the internal topology follows the Karras radix-tree
//! construction, so internal node `i` spans a contiguous run of leaf ranks.
//! The rank of a leaf is its position in that order and is the identity used
//! by [`Bvh::query_sphere_masked`].

use std::ops::ControlFlow;

use rayon::prelude::*;
use smallvec::SmallVec;

use crate::geometry::{morton_encode, Aabb, MortonCode, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrimitiveKind {
    SinglePoint,
    DenseBox,
}

/// A BVH leaf object. `id` is a point index for [`PrimitiveKind::SinglePoint`]
/// and a dense-cell index for [`PrimitiveKind::DenseBox`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub kind: PrimitiveKind,
    pub id: usize,
    pub bounds: Aabb,
}

impl Primitive {
    pub fn point(id: usize, p: &Point) -> Self {
        Self {
            kind: PrimitiveKind::SinglePoint,
            id,
            bounds: Aabb::from_point(p),
        }
    }

    pub fn dense_box(id: usize, bounds: Aabb) -> Self {
        Self {
            kind: PrimitiveKind::DenseBox,
            id,
            bounds,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Child {
    Internal(u32),
    Leaf(u32),
}

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    left: Child,
    right: Child,
    last_rank: u32,
}

#[derive(Debug, Clone)]
pub struct Bvh {
    leaves: Vec<Primitive>,
    codes: Vec<MortonCode>,
    nodes: Vec<Node>,
}

impl Bvh {
    /// Builds the hierarchy. `dim` selects the Morton quantization.
    ///
    /// # Panics
    /// If `primitives` is empty or holds more than `u32::MAX` entries.
    pub fn build(primitives: Vec<Primitive>, dim: usize) -> Self {
        assert!(!primitives.is_empty(), "cannot build a BVH without primitives");
        assert!(primitives.len() < u32::MAX as usize);

        let centroids: Vec<Point> = primitives.par_iter().map(|p| p.bounds.centroid()).collect();
        let mut scene = Aabb::from_point(&centroids[0]);
        for c in &centroids {
            scene.expand_point(c);
        }
        let mut keyed: Vec<(MortonCode, usize)> = centroids
            .par_iter()
            .enumerate()
            .map(|(i, c)| (morton_encode(c, &scene, dim), i))
            .collect();
        keyed.par_sort_unstable();

        let codes: Vec<MortonCode> = keyed.iter().map(|(c, _)| *c).collect();
        let leaves: Vec<Primitive> = keyed.iter().map(|&(_, i)| primitives[i]).collect();
        let m = leaves.len();
        if m == 1 {
            return Self {
                leaves,
                codes,
                nodes: Vec::new(),
            };
        }

        let placeholder = Aabb::from_point(&[0.0; 3]);
        let mut nodes: Vec<Node> = (0..m - 1)
            .into_par_iter()
            .map(|i| {
                let (first, last, split) = karras_split(&codes, i);
                let left = if split == first {
                    Child::Leaf(split as u32)
                } else {
                    Child::Internal(split as u32)
                };
                let right = if split + 1 == last {
                    Child::Leaf(split as u32 + 1)
                } else {
                    Child::Internal(split as u32 + 1)
                };
                Node {
                    bounds: placeholder,
                    left,
                    right,
                    last_rank: last as u32,
                }
            })
            .collect();

        // Post-order bounds refit from the root (node 0).
        let mut stack: Vec<(u32, bool)> = vec![(0, false)];
        while let Some((idx, children_done)) = stack.pop() {
            let node = &nodes[idx as usize];
            let (left, right) = (node.left, node.right);
            if children_done {
                let lb = child_bounds(&nodes, &leaves, left);
                let rb = child_bounds(&nodes, &leaves, right);
                nodes[idx as usize].bounds = lb.union(&rb);
                continue;
            }
            stack.push((idx, true));
            for child in [left, right] {
                if let Child::Internal(c) = child {
                    stack.push((c, false));
                }
            }
        }

        Self {
            leaves,
            codes,
            nodes,
        }
    }

    /// Builds a point-only hierarchy with leaf ids equal to point indices.
    pub fn from_points(points: &[Point], dim: usize) -> Self {
        let prims = points
            .iter()
            .enumerate()
            .map(|(i, p)| Primitive::point(i, p))
            .collect();
        Self::build(prims, dim)
    }

    /// Number of leaves.
    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn leaf(&self, rank: usize) -> &Primitive {
        &self.leaves[rank]
    }

    pub fn leaves(&self) -> &[Primitive] {
        &self.leaves
    }

    /// Morton codes of the leaves, in rank order.
    pub fn codes(&self) -> &[MortonCode] {
        &self.codes
    }

    pub fn bounds(&self) -> Aabb {
        match self.nodes.first() {
            Some(root) => root.bounds,
            None => self.leaves[0].bounds,
        }
    }

    /// Visits every leaf whose box meets the closed ball. The visitor gets
    /// the leaf rank and primitive; returning `Break` ends this query.
    pub fn query_sphere<F>(&self, center: &Point, radius: f64, visitor: F)
    where
        F: FnMut(usize, &Primitive) -> ControlFlow<()>,
    {
        self.traverse(center, radius * radius, 0, visitor);
    }

    /// Like [`Bvh::query_sphere`], but subtrees whose largest leaf rank is
    /// below `min_rank` are never entered and only leaves of rank
    /// `>= min_rank` are reported.
    pub fn query_sphere_masked<F>(&self, center: &Point, radius: f64, min_rank: usize, visitor: F)
    where
        F: FnMut(usize, &Primitive) -> ControlFlow<()>,
    {
        self.traverse(center, radius * radius, min_rank, visitor);
    }

    fn traverse<F>(&self, center: &Point, radius_sq: f64, min_rank: usize, mut visitor: F)
    where
        F: FnMut(usize, &Primitive) -> ControlFlow<()>,
    {
        if self.nodes.is_empty() {
            let leaf = &self.leaves[0];
            if min_rank == 0 && leaf.bounds.intersects_ball(center, radius_sq) {
                let _ = visitor(0, leaf);
            }
            return;
        }
        let root = &self.nodes[0];
        if (root.last_rank as usize) < min_rank || !root.bounds.intersects_ball(center, radius_sq) {
            return;
        }
        let mut stack: SmallVec<[u32; 64]> = SmallVec::new();
        stack.push(0);
        while let Some(idx) = stack.pop() {
            let node = &self.nodes[idx as usize];
            for child in [node.left, node.right] {
                match child {
                    Child::Leaf(r) => {
                        let r = r as usize;
                        if r < min_rank {
                            continue;
                        }
                        let leaf = &self.leaves[r];
                        if leaf.bounds.intersects_ball(center, radius_sq)
                            && visitor(r, leaf).is_break()
                        {
                            return;
                        }
                    }
                    Child::Internal(c) => {
                        let n = &self.nodes[c as usize];
                        if (n.last_rank as usize) >= min_rank
                            && n.bounds.intersects_ball(center, radius_sq)
                        {
                            stack.push(c);
                        }
                    }
                }
            }
        }
    }
}

fn child_bounds(nodes: &[Node], leaves: &[Primitive], child: Child) -> Aabb {
    match child {
        Child::Leaf(r) => leaves[r as usize].bounds,
        Child::Internal(c) => nodes[c as usize].bounds,
    }
}

/// Length of the common prefix of leaf keys `i` and `j`, where the key is
/// the Morton code extended by the rank to make every key distinct.
/// Returns -1 when `j` is out of range.
#[inline]
fn common_prefix(codes: &[MortonCode], i: i64, j: i64) -> i64 {
    if j < 0 || j >= codes.len() as i64 {
        return -1;
    }
    let (a, b) = (codes[i as usize].0, codes[j as usize].0);
    if a == b {
        64 + ((i as u64) ^ (j as u64)).leading_zeros() as i64
    } else {
        (a ^ b).leading_zeros() as i64
    }
}

/// Returns `(first, last, split)` for internal node `i`.
fn karras_split(codes: &[MortonCode], i: usize) -> (usize, usize, usize) {
    let i = i as i64;
    let delta = |j: i64| common_prefix(codes, i, j);
    let dir: i64 = if delta(i + 1) - delta(i - 1) >= 0 { 1 } else { -1 };
    let delta_min = delta(i - dir);

    let mut l_max: i64 = 2;
    while delta(i + l_max * dir) > delta_min {
        l_max *= 2;
    }
    let mut len: i64 = 0;
    let mut t = l_max / 2;
    while t >= 1 {
        if delta(i + (len + t) * dir) > delta_min {
            len += t;
        }
        t /= 2;
    }
    let j = i + len * dir;
    let delta_node = delta(j);

    let mut s: i64 = 0;
    let mut divisor: i64 = 2;
    loop {
        let t = (len + divisor - 1) / divisor;
        if delta(i + (s + t) * dir) > delta_node {
            s += t;
        }
        divisor *= 2;
        if t <= 1 {
            break;
        }
    }
    let split = i + s * dir + dir.min(0);
    (i.min(j) as usize, i.max(j) as usize, split as usize)
}

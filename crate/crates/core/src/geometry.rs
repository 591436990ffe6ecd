//! Points, axis-aligned boxes, distances and Morton encoding.
//!
//! Coordinates are stored as `f32` and always padded to three components;
//! two-dimensional data carries `0.0` on the third axis, which contributes
//! nothing to distances or boxes. All distance arithmetic is done in `f64`.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// A point padded to three components.
pub type Point = [f32; 3];

/// The input dataset: `n >= 1` finite points of dimension 2 or 3.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<Point>,
}

impl PointSet {
    /// Builds a point set from padded points. For `dim == 2` the third
    /// component of every point must be zero.
    pub fn new(dim: usize, coords: Vec<Point>) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if coords.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        for (index, p) in coords.iter().enumerate() {
            for (axis, c) in p.iter().enumerate() {
                if !c.is_finite() || (axis >= dim && *c != 0.0) {
                    return Err(Error::NonFiniteCoordinate { index, axis });
                }
            }
        }
        Ok(Self { dim, coords })
    }

    /// Builds a point set from a row-major `n x dim` coordinate array.
    pub fn from_flat(dim: usize, flat: &[f32]) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if flat.len() % dim != 0 {
            return Err(Error::RaggedCoordinates {
                len: flat.len(),
                dim,
            });
        }
        let coords = flat
            .chunks_exact(dim)
            .map(|c| {
                let mut p = [0.0; 3];
                p[..dim].copy_from_slice(c);
                p
            })
            .collect();
        Self::new(dim, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    /// Always false for a constructed set; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &Point {
        &self.coords[i]
    }

    /// The first `dim` coordinates of point `i`.
    pub fn coords(&self, i: usize) -> &[f32] {
        &self.coords[i][..self.dim]
    }

    pub fn points(&self) -> &[Point] {
        &self.coords
    }
}

/// Squared Euclidean distance, accumulated in `f64`.
#[inline]
pub fn distance_sq(a: &Point, b: &Point) -> f64 {
    let dx = a[0] as f64 - b[0] as f64;
    let dy = a[1] as f64 - b[1] as f64;
    let dz = a[2] as f64 - b[2] as f64;
    dx * dx + dy * dy + dz * dz
}

/// Axis-aligned bounding box with `min[k] <= max[k]` on every axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn from_point(p: &Point) -> Self {
        Self { min: *p, max: *p }
    }

    /// Smallest box containing both `self` and `other`.
    pub fn union(&self, other: &Aabb) -> Aabb {
        let mut out = *self;
        out.expand(other);
        out
    }

    pub fn expand(&mut self, other: &Aabb) {
        for k in 0..3 {
            self.min[k] = self.min[k].min(other.min[k]);
            self.max[k] = self.max[k].max(other.max[k]);
        }
    }

    pub fn expand_point(&mut self, p: &Point) {
        for k in 0..3 {
            self.min[k] = self.min[k].min(p[k]);
            self.max[k] = self.max[k].max(p[k]);
        }
    }

    pub fn contains(&self, other: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= other.min[k] && other.max[k] <= self.max[k])
    }

    pub fn contains_point(&self, p: &Point) -> bool {
        (0..3).all(|k| self.min[k] <= p[k] && p[k] <= self.max[k])
    }

    pub fn centroid(&self) -> Point {
        let mut c = [0.0; 3];
        for (k, v) in c.iter_mut().enumerate() {
            *v = ((self.min[k] as f64 + self.max[k] as f64) * 0.5) as f32;
        }
        c
    }

    /// Squared distance from `p` to the nearest point of the box.
    ///
    /// For a degenerate box this is bit-identical to [`distance_sq`], so a
    /// ball test against a point leaf agrees exactly with a point test.
    #[inline]
    pub fn distance_sq_to(&self, p: &Point) -> f64 {
        let mut acc = 0.0;
        for k in 0..3 {
            let c = p[k] as f64;
            let lo = self.min[k] as f64 - c;
            let hi = c - self.max[k] as f64;
            let d = lo.max(hi).max(0.0);
            acc += d * d;
        }
        acc
    }

    /// Whether the box meets the closed ball of squared radius `radius_sq`.
    #[inline]
    pub fn intersects_ball(&self, center: &Point, radius_sq: f64) -> bool {
        self.distance_sq_to(center) <= radius_sq
    }

    /// Squared length of the box diagonal.
    pub fn diagonal_sq(&self) -> f64 {
        distance_sq(&self.min, &self.max)
    }
}

/// Tight componentwise bounds of a point set.
pub fn compute_bounds(points: &PointSet) -> Aabb {
    let first = Aabb::from_point(points.point(0));
    points
        .points()
        .par_iter()
        .fold(
            || first,
            |mut acc, p| {
                acc.expand_point(p);
                acc
            },
        )
        .reduce(|| first, |a, b| a.union(&b))
}

/// A 64-bit Morton code of interleaved quantized coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MortonCode(pub u64);

/// Quantization bits per axis for a given dimension.
pub const fn morton_bits(dim: usize) -> u32 {
    if dim == 2 {
        31
    } else {
        21
    }
}

/// Normalizes `p` to `[0, 1]` over `bounds`, quantizes each axis to
/// [`morton_bits`] bits and interleaves them. Axis 0 takes the most
/// significant position within each bit group.
pub fn morton_encode(p: &Point, bounds: &Aabb, dim: usize) -> MortonCode {
    let bits = morton_bits(dim);
    let mut q = [0u64; 3];
    for (k, qk) in q.iter_mut().enumerate().take(dim) {
        *qk = quantize(p[k], bounds.min[k], bounds.max[k], bits);
    }
    let code = if dim == 2 {
        (spread_by_2(q[0]) << 1) | spread_by_2(q[1])
    } else {
        (spread_by_3(q[0]) << 2) | (spread_by_3(q[1]) << 1) | spread_by_3(q[2])
    };
    MortonCode(code)
}

/// Quantizes `x` into `[0, 2^bits)` over `[lo, hi]`; zero-width ranges map to 0.
pub fn quantize(x: f32, lo: f32, hi: f32, bits: u32) -> u64 {
    let width = hi as f64 - lo as f64;
    if width <= 0.0 {
        return 0;
    }
    let t = ((x as f64 - lo as f64) / width).clamp(0.0, 1.0);
    let cells = (1u64 << bits) as f64;
    ((t * cells) as u64).min((1u64 << bits) - 1)
}

#[inline]
fn spread_by_3(a: u64) -> u64 {
    let mut x = a & 0x1f_ffff;
    x = (x | x << 32) & 0x1f_0000_0000_ffff;
    x = (x | x << 16) & 0x1f_0000_ff00_00ff;
    x = (x | x << 8) & 0x100f_00f0_0f00_f00f;
    x = (x | x << 4) & 0x10c3_0c30_c30c_30c3;
    x = (x | x << 2) & 0x1249_2492_4924_9249;
    x
}

#[inline]
fn spread_by_2(a: u64) -> u64 {
    let mut x = a & 0xffff_ffff;
    x = (x | x << 16) & 0x0000_ffff_0000_ffff;
    x = (x | x << 8) & 0x00ff_00ff_00ff_00ff;
    x = (x | x << 4) & 0x0f0f_0f0f_0f0f_0f0f;
    x = (x | x << 2) & 0x3333_3333_3333_3333;
    x = (x | x << 1) & 0x5555_5555_5555_5555;
    x
}

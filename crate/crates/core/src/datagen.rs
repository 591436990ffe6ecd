//! Seeded synthetic datasets.
//!
//! The random stream is xoshiro256++ seeded through SplitMix64
//! (`Xoshiro256PlusPlus::seed_from_u64`). Uniform variates take the top 53
//! bits of each output scaled by 2^-53; normal variates use the Box-Muller
//! transform on two such uniforms, emitting the cosine branch first and
//! the sine branch second. Coordinates are computed in `f64` and rounded
//! to `f32` last.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::geometry::{distance_sq, Aabb, Point, PointSet};

const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

struct Stream {
    rng: Xoshiro256PlusPlus,
    spare: Option<f64>,
}

impl Stream {
    fn new(seed: u64) -> Self {
        Self {
            rng: Xoshiro256PlusPlus::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform in `[0, 1)`.
    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

/// `k` isotropic Gaussian blobs of `per_blob` points, centers at least
/// `separation` apart inside a cube sized so placement is easy.
pub fn gaussian_blobs(
    k: usize,
    per_blob: usize,
    dim: usize,
    separation: f64,
    sigma: f64,
    seed: u64,
) -> Result<PointSet> {
    let per_axis = (k as f64).powf(1.0 / dim as f64).ceil().max(1.0);
    let side = separation * (per_axis + 1.0) * 2.0;
    gaussian_blobs_in(side, k, per_blob, dim, separation, sigma, seed)
}

/// Like [`gaussian_blobs`], with centers drawn uniformly in `[0, side]^dim`.
/// Fails when a center cannot be placed after a bounded number of tries.
pub fn gaussian_blobs_in(
    side: f64,
    k: usize,
    per_blob: usize,
    dim: usize,
    separation: f64,
    sigma: f64,
    seed: u64,
) -> Result<PointSet> {
    check_dim(dim)?;
    if k == 0 || per_blob == 0 {
        return Err(Error::InvalidGenerator("k and per_blob must be at least 1"));
    }
    if !(sigma.is_finite() && sigma >= 0.0 && separation.is_finite() && separation >= 0.0 && side.is_finite()) {
        return Err(Error::InvalidGenerator("sigma, separation and side must be finite and non-negative"));
    }
    let mut rng = Stream::new(seed);
    let mut centers: Vec<[f64; 3]> = Vec::with_capacity(k);
    let sep_sq = separation * separation;
    for _ in 0..k {
        let mut placed = false;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let mut c = [0.0; 3];
            for v in c.iter_mut().take(dim) {
                *v = rng.uniform() * side;
            }
            let ok = centers.iter().all(|o| {
                let d: f64 = (0..3).map(|a| (o[a] - c[a]) * (o[a] - c[a])).sum();
                d >= sep_sq
            });
            if ok {
                centers.push(c);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::CenterPlacement {
                k,
                separation,
                attempts: MAX_PLACEMENT_ATTEMPTS,
            });
        }
    }
    let mut coords = Vec::with_capacity(k * per_blob);
    for c in &centers {
        for _ in 0..per_blob {
            let mut p: Point = [0.0; 3];
            for a in 0..dim {
                p[a] = (c[a] + sigma * rng.normal()) as f32;
            }
            coords.push(p);
        }
    }
    PointSet::new(dim, coords)
}

/// `n` points uniform in `bounds` (the first `dim` axes).
pub fn uniform_noise(n: usize, dim: usize, bounds: &Aabb, seed: u64) -> Result<PointSet> {
    check_dim(dim)?;
    if n == 0 {
        return Err(Error::EmptyPointSet);
    }
    let mut rng = Stream::new(seed);
    let coords = (0..n)
        .map(|_| {
            let mut p: Point = [0.0; 3];
            for a in 0..dim {
                let (lo, hi) = (bounds.min[a] as f64, bounds.max[a] as f64);
                p[a] = ((lo + rng.uniform() * (hi - lo)) as f32).clamp(bounds.min[a], bounds.max[a]);
            }
            p
        })
        .collect();
    PointSet::new(dim, coords)
}

/// A regular grid of `side^dim` points with the given spacing, starting at
/// the origin, last axis varying fastest.
pub fn dense_lattice(side: usize, dim: usize, spacing: f64) -> Result<PointSet> {
    check_dim(dim)?;
    if side < 2 {
        return Err(Error::InvalidGenerator("lattice side must be at least 2"));
    }
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::InvalidGenerator("lattice spacing must be positive"));
    }
    let total = side.pow(dim as u32);
    let coords = (0..total)
        .map(|mut idx| {
            let mut p: Point = [0.0; 3];
            for a in (0..dim).rev() {
                p[a] = ((idx % side) as f64 * spacing) as f32;
                idx /= side;
            }
            p
        })
        .collect();
    PointSet::new(dim, coords)
}

/// Sample mean of each blob of a blob-major point set.
pub fn blob_means(points: &PointSet, k: usize, per_blob: usize) -> Vec<Point> {
    (0..k)
        .map(|b| {
            let mut acc = [0.0f64; 3];
            for i in b * per_blob..(b + 1) * per_blob {
                for (a, v) in acc.iter_mut().enumerate() {
                    *v += points.point(i)[a] as f64;
                }
            }
            acc.map(|v| (v / per_blob as f64) as f32)
        })
        .collect()
}

/// Smallest pairwise distance between the given centers.
pub fn min_center_gap(means: &[Point]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..means.len() {
        for j in i + 1..means.len() {
            best = best.min(distance_sq(&means[i], &means[j]).sqrt());
        }
    }
    best
}

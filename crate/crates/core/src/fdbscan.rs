//! FDBSCAN: a point BVH with tree traversal fused into the union-find.
//!
//! Each worker owns one leaf rank. Core detection stops its traversal as
//! soon as `minpts` neighbors are seen; the main phase hides every leaf of
//! lower rank, so each within-eps pair is resolved exactly once.

use std::ops::ControlFlow;

use rayon::prelude::*;

use crate::bvh::Bvh;
use crate::dbscan::{finalize, timed, Clustering, CoreFlags, Counters, DbscanParams, Resolver, RunStats};
use crate::geometry::{distance_sq, PointSet};
use crate::unionfind::Labels;

/// Marks core points, terminating each query once the count reaches `minpts`.
/// The BVH must hold every point as a leaf with `id` equal to its index.
pub fn mark_cores(bvh: &Bvh, points: &PointSet, params: &DbscanParams) -> (CoreFlags, Counters) {
    let flags = CoreFlags::new(points.len());
    let eps_sq = params.eps_sq();
    let minpts = params.minpts();
    let counters = (0..bvh.len())
        .into_par_iter()
        .map(|rank| {
            let i = bvh.leaf(rank).id;
            let p = points.point(i);
            let mut count = 0usize;
            let mut evals = 0u64;
            bvh.query_sphere(p, params.eps(), |_, leaf| {
                evals += 1;
                if distance_sq(p, points.point(leaf.id)) <= eps_sq {
                    count += 1;
                    if count >= minpts {
                        return ControlFlow::Break(());
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
        .sum();
    (flags, counters)
}

/// Exact neighborhood sizes (self included), without early termination.
pub fn neighbor_counts(bvh: &Bvh, points: &PointSet, params: &DbscanParams) -> Vec<usize> {
    let eps_sq = params.eps_sq();
    let mut counts = vec![0usize; points.len()];
    counts.par_iter_mut().enumerate().for_each(|(i, slot)| {
        let p = points.point(i);
        bvh.query_sphere(p, params.eps(), |_, leaf| {
            if distance_sq(p, points.point(leaf.id)) <= eps_sq {
                *slot += 1;
            }
            ControlFlow::Continue(())
        });
    });
    counts
}

/// Core flags from exhaustive counting.
pub fn mark_cores_exhaustive(bvh: &Bvh, points: &PointSet, params: &DbscanParams) -> CoreFlags {
    CoreFlags::from_vec(
        neighbor_counts(bvh, points, params)
            .into_iter()
            .map(|c| c >= params.minpts())
            .collect(),
    )
}

/// Resolves every unordered within-eps pair once via masked traversal.
///
/// With `minpts == 2` the flags are filled in here: both ends of every
/// found pair are core.
pub fn main_phase(
    bvh: &Bvh,
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
    (0..bvh.len())
        .into_par_iter()
        .map(|rank| {
            let i = bvh.leaf(rank).id;
            let p = points.point(i);
            let mut c = Counters::default();
            bvh.query_sphere_masked(p, params.eps(), rank, |r, leaf| {
                if r == rank {
                    return ControlFlow::Continue(());
                }
                c.distance_evals += 1;
                if distance_sq(p, points.point(leaf.id)) <= eps_sq {
                    c.resolve_calls += 1;
                    resolver.resolve(i, leaf.id);
                }
                ControlFlow::Continue(())
            });
            c
        })
        .sum()
}

pub(crate) fn run(points: &PointSet, params: &DbscanParams) -> (Clustering, RunStats) {
    let mut stats = RunStats::default();
    let (bvh, build) = timed(|| Bvh::from_points(points.points(), points.dim()));
    stats.build = build;

    let labels = Labels::make_sets(points.len());
    let flags = if params.skips_preprocessing() {
        CoreFlags::new(points.len())
    } else {
        let ((flags, counters), t) = timed(|| mark_cores(&bvh, points, params));
        stats.preprocess = Some(t);
        stats.preprocess_counters = counters;
        flags
    };

    let (counters, t) = timed(|| main_phase(&bvh, points, params, &flags, &labels));
    stats.main = t;
    stats.main_counters = counters;

    let (clustering, t) = timed(|| finalize(&labels, &flags));
    stats.finalize = t;
    (clustering, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use rand_core::{RngCore, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn set(dim: usize, pts: &[[f32; 2]]) -> PointSet {
        let flat: Vec<f32> = pts.iter().flatten().copied().collect();
        PointSet::from_flat(dim, &flat).unwrap()
    }

    fn random_set(n: usize, dim: usize, seed: u64) -> PointSet {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let flat: Vec<f32> = (0..n * dim)
            .map(|_| (rng.next_u64() >> 40) as f32 / (1u64 << 24) as f32)
            .collect();
        PointSet::from_flat(dim, &flat).unwrap()
    }

    fn brute_counts(points: &PointSet, eps_sq: f64) -> Vec<usize> {
        (0..points.len())
            .map(|i| {
                (0..points.len())
                    .filter(|&j| distance_sq(points.point(i), points.point(j)) <= eps_sq)
                    .count()
            })
            .collect()
    }

    fn brute_pairs(points: &PointSet, eps_sq: f64) -> u64 {
        let mut n = 0;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if distance_sq(points.point(i), points.point(j)) <= eps_sq {
                    n += 1;
                }
            }
        }
        n
    }

    /// Unfused reference: materialize every neighbor list, then resolve.
    fn unfused(points: &PointSet, params: &DbscanParams) -> Clustering {
        let bvh = Bvh::from_points(points.points(), points.dim());
        let eps_sq = params.eps_sq();
        let lists: Vec<Vec<usize>> = (0..points.len())
            .map(|i| {
                let mut out = Vec::new();
                bvh.query_sphere(points.point(i), params.eps(), |_, leaf| {
                    if distance_sq(points.point(i), points.point(leaf.id)) <= eps_sq {
                        out.push(leaf.id);
                    }
                    ControlFlow::Continue(())
                });
                out
            })
            .collect();
        let flags = CoreFlags::from_vec(lists.iter().map(|l| l.len() >= params.minpts()).collect());
        let labels = Labels::make_sets(points.len());
        for (i, list) in lists.iter().enumerate() {
            for &j in list {
                if i != j {
                    crate::dbscan::resolve_pair(i, j, &flags, &labels);
                }
            }
        }
        finalize(&labels, &flags)
    }

    #[test]
    fn isolated_point_is_not_core() {
        let ps = set(2, &[[0.0, 0.0], [10.0, 0.0], [10.1, 0.0]]);
        let bvh = Bvh::from_points(ps.points(), 2);
        let params = DbscanParams::new(0.5, 3).unwrap();
        let (flags, _) = mark_cores(&bvh, &ps, &params);
        assert_eq!(flags.to_vec(), vec![false, false, false]);
    }

    #[test]
    fn duplicates_make_a_core() {
        let ps = set(2, &[[1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [5.0, 5.0]]);
        let bvh = Bvh::from_points(ps.points(), 2);
        let params = DbscanParams::new(0.01, 3).unwrap();
        let (flags, _) = mark_cores(&bvh, &ps, &params);
        assert_eq!(flags.to_vec(), vec![true, true, true, false]);
    }

    #[test]
    fn cores_match_brute_force_and_exhaustive() {
        for (seed, dim) in [(1u64, 2usize), (2, 3), (3, 2)] {
            let ps = random_set(1500, dim, seed);
            let bvh = Bvh::from_points(ps.points(), dim);
            for minpts in [3, 5, 10] {
                let params = DbscanParams::new(0.04, minpts).unwrap();
                let brute: Vec<bool> = brute_counts(&ps, params.eps_sq())
                    .into_iter()
                    .map(|c| c >= minpts)
                    .collect();
                let (flags, counters) = mark_cores(&bvh, &ps, &params);
                assert_eq!(flags.to_vec(), brute);
                assert_eq!(mark_cores_exhaustive(&bvh, &ps, &params).to_vec(), brute);
                let exhaustive_evals: u64 = brute_counts(&ps, params.eps_sq()).iter().sum::<usize>() as u64;
                assert!(counters.distance_evals <= exhaustive_evals);
            }
        }
    }

    #[test]
    fn separated_clusters_stay_apart() {
        let ps = set(2, &[[0.0, 0.0], [0.1, 0.0], [0.2, 0.0], [5.0, 0.0], [5.1, 0.0], [5.2, 0.0]]);
        let params = DbscanParams::new(0.15, 3).unwrap();
        let (c, stats) = run(&ps, &params);
        assert_eq!(c.num_clusters(), 2);
        assert_ne!(c.label(1), c.label(4));
        assert!(stats.preprocess.is_some());
    }

    #[test]
    fn chain_is_one_cluster() {
        let pts: Vec<[f32; 2]> = (0..40).map(|i| [i as f32 * 0.9, 0.0]).collect();
        let ps = set(2, &pts);
        let params = DbscanParams::new(1.0, 2).unwrap();
        let (c, stats) = run(&ps, &params);
        assert_eq!(c.num_clusters(), 1);
        assert_eq!(c.num_cores(), 40);
        assert!(c.labels().iter().all(|&l| l == 0));
        assert!(stats.preprocess.is_none());
    }

    #[test]
    fn each_pair_resolved_once() {
        for seed in 0..5 {
            let ps = random_set(1200, 2 + (seed as usize % 2), seed);
            for minpts in [2, 4] {
                let params = DbscanParams::new(0.05, minpts).unwrap();
                let (_, stats) = run(&ps, &params);
                assert_eq!(stats.main_counters.resolve_calls, brute_pairs(&ps, params.eps_sq()));
            }
        }
    }

    #[test]
    fn fused_equals_unfused() {
        for seed in 10..16 {
            let ps = random_set(1000, 2, seed);
            for minpts in [2, 3, 6] {
                let params = DbscanParams::new(0.035, minpts).unwrap();
                let (fused, _) = run(&ps, &params);
                let reference = unfused(&ps, &params);
                assert_eq!(fused.core_flags(), reference.core_flags());
                let report = crate::oracle::check_equivalence(&fused, &reference, &ps, &params);
                assert!(report.is_pass(), "{report}");
            }
        }
    }

    #[test]
    fn single_point_is_noise() {
        let p: Point = [0.3, 0.3, 0.0];
        let ps = PointSet::new(2, vec![p]).unwrap();
        let (c, _) = run(&ps, &DbscanParams::new(1.0, 2).unwrap());
        assert!(c.is_noise(0));
        assert!(!c.is_core(0));
    }

    #[test]
    fn close_pair_with_minpts_two() {
        let ps = set(2, &[[0.0, 0.0], [0.5, 0.0]]);
        let (c, _) = run(&ps, &DbscanParams::new(0.5, 2).unwrap());
        assert!(c.is_core(0) && c.is_core(1));
        assert_eq!(c.label(0), c.label(1));
    }
}

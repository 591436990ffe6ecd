//! Data-parallel DBSCAN on a linear bounding volume hierarchy.
//!
//! Two algorithms share one framework ([`dbscan`]): a preprocessing phase
//! that finds core points and a main phase that merges neighboring points
//! in a lock-free union-find while the tree is being traversed.
//!
//! * [`Algorithm::Fdbscan`] indexes every point in the BVH and visits each
//!   within-eps pair exactly once.
//! * [`Algorithm::DenseBox`] first bins points into cells of side
//!   `eps / sqrt(d)`; cells with at least `minpts` points are merged
//!   without any distance computation and enter the BVH as single boxes.
//!
//! ```
//! use fdbscan::{run, Algorithm, DbscanParams, PointSet};
//!
//! let points = PointSet::from_flat(2, &[0.0, 0.0, 0.1, 0.0, 0.2, 0.0, 5.0, 5.0]).unwrap();
//! let params = DbscanParams::new(0.15, 2).unwrap();
//! let clustering = run(&points, &params, Algorithm::Fdbscan).unwrap();
//! assert_eq!(clustering.num_clusters(), 1);
//! assert!(clustering.is_noise(3));
//! ```

pub mod bvh;
pub mod datagen;
pub mod dbscan;
pub mod densebox;
mod error;
pub mod fdbscan;
pub mod geometry;
pub mod oracle;
pub mod unionfind;

pub use dbscan::{
    run, run_with_stats, with_threads, Algorithm, Clustering, CoreFlags, Counters, DbscanParams, RunStats, NOISE,
};
pub use error::{Error, Result};
pub use geometry::{Aabb, Point, PointSet};

//! Decentralized multi-robot coverage control over raw point clouds.
//!
//! Each robot builds a buffered Voronoi cell from its neighbours' positions
//! and the obstacle points it can see, then moves towards the weighted
//! centroid of that cell under a navigation-function density that steers it
//! around non-convex obstacles.
//!
//! Data-parallel work (robots within a step, trials within a batch) runs on
//! rayon when the `parallel` feature is enabled; [`Execution`] selects the
//! mode at run time and degrades to sequential iteration without the feature.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coverage_control;
pub mod envgen;
pub mod environment;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod guided_map;
pub mod minqp;
pub mod plot;
pub mod report;
pub mod safe_region;
pub mod scenario;
pub mod sim_runtime;

pub use error::{CoverError, Result};
pub use exec::{limit_threads, Execution};
pub use geometry::{ConvexRegion, HalfSpace, Point3};

//! Clustering by synchronization: points repeatedly move to the mean of
//! their δ-neighborhood until each group collapses onto a single location.
//!
//! The crate offers an exhaustive engine ([`esync_run`]), a grid-indexed
//! variant ([`iesync_run`]), a shrinking engine that merges coincident points
//! into weighted cores ([`ssync_run`]) and a two-level version of it
//! ([`msync_run`]), plus a data generator and two reference clusterers.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod csvio;
pub mod datagen;
pub mod error;
pub mod esync;
pub mod grid;
pub mod metrics;
pub mod model;
pub mod msync;
pub mod report;
pub mod ssync;

pub use error::{Error, Result};
pub use esync::{delta_sweep, esync_run, RunOptions, RunReport};
pub use grid::{build_grid, grid_delta_neighbors, iesync_run, Grid, GridSpec};
pub use metrics::{extract_clusters, match_labels, ClusterLabels};
pub use model::{Model, ModelParams, StateVector};
pub use msync::msync_run;
pub use ssync::{ssync_run, ssync_run_with, Core, SSyncReport, ShrinkOptions};

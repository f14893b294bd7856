//! Reference clusterers to compare the synchronization engines against.

mod dbscan;
mod kmeans;

pub use dbscan::{dbscan, DbscanLabels, DbscanParams};
pub use kmeans::{kmeans, KMeansResult};

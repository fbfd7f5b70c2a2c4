//! Consensus clustering built on evidence accumulation.
//!
//! The ensemble is encoded as a sparse binary incidence matrix `H`; cluster
//! densities over the co-association matrix are then computed from per-column
//! counts in linear time, and k-means on `H` is used as the consensus
//! optimiser. The reference consensus algorithms (SEC, ECC, MCLA, CSPA and
//! agglomerative linkage on co-association matrices) live alongside for
//! comparison.

pub mod consensus;
pub mod density;
pub mod error;
pub mod graph;
pub mod io;
pub mod kmeans;
pub mod metrics;
pub mod model;
pub mod numeric;

pub use error::{Error, Result};
pub use model::{ClusterEnsemble, Dataset, DenseMatrix, IncidenceMatrix, Partitioning};

//! Learn a vectorial representation whose similarity graph makes
//! graph-based label propagation accurate.
//!
//! The pipeline embeds points with a learned map ([`embed`]), connects them
//! with a Gaussian-weighted union kNN graph ([`graph`]), spreads seed labels
//! over the normalized graph ([`propagation`]), and trains the map by
//! gradient descent on the loss at held-out labeled points ([`training`]).
//! [`data`] provides synthetic tasks and CSV ingestion; [`experiment`] runs
//! seeded comparisons against the untrained euclidean baseline.

pub mod data;
pub mod embed;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod propagation;
pub mod training;

pub use error::{Error, Result};

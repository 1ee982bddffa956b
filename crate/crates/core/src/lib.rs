//! Bayesian spatio-temporal conditional autoregressive models with
//! adaptive, edge-wise estimated spatial smoothing for areal count data.

pub mod diagnostics;
pub mod error;
pub mod field;
pub mod graph;
pub mod io;
pub mod model;
pub mod precision;
pub mod sampler;
pub mod sim;

pub use error::{Error, ErrorKind, Result};
pub use field::SpaceTimeField;
pub use graph::{AreaGraph, EdgeGraph, EdgeSet};

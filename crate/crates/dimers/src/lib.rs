//! Planar bipartite dimer models: exact counting and sampling, torus
//! spectral data, limit shapes and height fluctuations.

pub mod amoeba;
pub mod error;
pub mod fluctuations;
pub mod gauss;
pub mod graph;
pub mod height;
pub mod kasteleyn;
pub mod laurent;
pub mod limit_shape;
pub mod linalg;
pub mod oracle;
pub mod phase;
pub mod phasing;
pub mod quad;
pub mod region;
pub mod ronkin;
pub mod sampler;
pub mod torus;

pub use error::{Error, ErrorKind, Result};

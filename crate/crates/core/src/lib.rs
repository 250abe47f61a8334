//! Certificates for freeness and quasi-isometric embedding of `<a^n, b^m>`
//! for hyperbolic isometries of hyperbolic graphs, with a brute-force word
//! oracle as an independent check.

pub mod acyl;
pub mod certifier;
pub mod cli;
pub mod error;
pub mod hyperbolicity;
pub mod isometry;
pub mod model;
pub mod oracle;
pub mod rational;
pub mod word;

pub use error::{Error, Result};
pub use model::{build_model, ActionModel, GeodesicPath, ModelKind, ModelSpec, Point};
pub use rational::Rational;
pub use word::Word;

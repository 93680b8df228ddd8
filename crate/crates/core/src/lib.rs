pub mod analysis;
pub mod error;
pub mod geometry;
pub mod obstacle;
pub mod operator;
pub mod quadrature;
pub mod regdist;
pub mod spectral;

pub use error::{Error, Result};
pub use geometry::{EdgeCurve, Params, Point, SlitGeometry};

//! 3D vector graphics: scenes of cubic Bezier paths in 3D, their perspective
//! projection to 2D vector graphics, a differentiable rasterizer, view-dependent
//! curve visibility, and a multi-view fitting loop.

pub mod camera;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod guidance;
pub mod optimize;
pub mod project;
pub mod raster;
pub mod visibility;

pub use error::{Error, Result};

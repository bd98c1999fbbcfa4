//! Step-wise evaluation and decoding tools for spatio-temporal human-object
//! interaction detection.
//!
//! Geometry, assignment, heatmaps and decoders are generic over [`Scalar`]
//! (`f32` or `f64`); file-level evaluation runs in `f64`.

pub mod assignment;
pub mod decoders;
pub mod error;
pub mod geometry;
pub mod heatmap;
pub mod interaction;
pub mod io;
pub mod objects;
pub mod pipeline;
pub mod scalar;
pub mod split;
pub mod synthetic;
pub mod taxonomy;
pub mod tracking;
pub mod tracklet;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Box32 = geometry::BBox<f32>;
pub type Box64 = geometry::BBox<f64>;
pub type Tube32 = geometry::Tube<f32>;
pub type Tube64 = geometry::Tube<f64>;
pub type Heatmap32 = heatmap::Heatmap<f32>;
pub type Heatmap64 = heatmap::Heatmap<f64>;
pub type Tracklet64 = tracklet::StHoiTracklet<f64>;

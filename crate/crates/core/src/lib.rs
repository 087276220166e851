//! Offshore-platform detection pipeline on SAR backscatter imagery.
//!
//! The crate is organised along the pipeline stages:
//!
//! - [`preprocess`]: median compositing of dB stacks, 8-bit quantization,
//!   planar grid tiling and overlapping chip extraction.
//! - [`synthgen`]: procedural synthetic scenes (entity maps, anchor grids,
//!   cluster geometries, Gaussian radar kernels) with automatic labels.
//! - [`postprocess`]: confidence and dark-pixel filtering, cross-chip
//!   deduplication and GeoJSON export.
//! - [`evaluate`]: IoU matching against ground truth, per-class metrics,
//!   confusion matrices and an oracle detector for closed-loop tests.
//!
//! The neural detector itself is external; anything that writes the JSON
//! Lines detection format in [`detection`] plugs into the pipeline.

pub mod class;
pub mod config;
pub mod detection;
pub mod error;
pub mod evaluate;
pub mod geometry;
pub mod io;
pub mod label;
pub mod postprocess;
pub mod preprocess;
pub mod raster;
pub mod synthgen;
mod union_find;

pub use class::{merge_class, EvalClass, ObjectClass};
pub use config::PipelineConfig;
pub use detection::{Detection, RawDetection};
pub use error::{Error, Result};
pub use geometry::{geolocate, iou, GeoBBox, GeoTransform, PixelBBox};
pub use label::Label;
pub use raster::{Raster8, RasterF};

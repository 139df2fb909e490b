//! Voxel-grid kernels for interactive neuroimage segmentation.
//!
//! Everything here is pure computation over in-memory grids: slicing and
//! linked cursors, reorientation, display filters, label-map editing tools,
//! measurements, resampling, surface extraction and a classical brain
//! extraction pipeline. File formats, persistence and the HTTP service live
//! in the `neuroseg` companion crate.
#![no_std]

extern crate alloc;

pub mod affine;
pub mod color;
pub mod distance;
pub mod enhance;
mod error;
pub mod extract;
pub mod fft;
pub mod histogram;
pub mod history;
pub mod math;
pub mod measure;
pub mod orient;
pub mod plane;
pub mod segment;
pub mod surface;
pub mod transform;
pub mod volume;

pub use affine::Affine;
pub use color::{ColorEntry, ColorScheme};
pub use error::{Error, Result};
pub use histogram::Histogram;
pub use plane::{PlaneId, Slice2D};
pub use segment::{Label, LabelMap};
pub use volume::{DataType, Volume3D};

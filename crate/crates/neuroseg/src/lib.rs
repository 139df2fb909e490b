//! File formats, sessions, project archives, the HTTP service and the CLI
//! for the neuroseg workbench. Kernels live in [`neuroseg_core`].

pub use neuroseg_core as core;

pub mod cli;
pub mod color;
pub mod error;
pub mod export;
pub mod nifti;
pub mod nrrd;
pub mod project;
pub mod render;
pub mod service;
pub mod session;
pub mod volume_io;

pub use error::{Error, Result};

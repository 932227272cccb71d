//! Numerical verification of the structure of submanifolds with
//! nonparallel first normal bundle.

pub mod bilinear;
pub mod catalog;
pub mod chart;
pub mod cli;
pub mod error;
pub mod frames;
pub mod geometry;
pub mod jets;
pub mod linalg;
pub mod nonparallel;
pub mod pipeline;
pub mod report;
pub mod ruled;
pub mod subspaces;

pub use error::{GeomError, Result};

//! Contourlet-domain additive spread-spectrum watermarking with a
//! two-dimensional GARCH host model and a likelihood-ratio detector.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the experiment
//! harness and the command line live in the `ctmark` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod attacks;
pub mod detector;
pub mod embedder;
pub mod error;
pub mod filters;
pub mod garch2d;
pub mod grid;
pub mod rng;
pub mod special;
pub mod xforms;

pub use error::{Error, Result};
pub use grid::{Grid2D, ImageU8};

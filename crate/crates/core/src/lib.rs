//! Measuring (dis)similarity between corpus frequency snapshots and tracing
//! lexical change over time.
//!
//! The crate is `no_std` with `alloc`. It covers:
//!
//! * [`corpus`]: word keys, frequency snapshots and their union table.
//! * [`filter`] and [`pos`]: token cleaning and function/content classes.
//! * [`timeline`]: per-year counts and year-span aggregation.
//! * [`sampling`]: binomial downsampling and synthetic split pairs.
//! * [`divergence`]: expected counts, chi-square, Cramér's V, KL and JSD.
//! * [`diachrony`]: rate curves, pair matrices, top changers, differencing
//!   and change correlation.
//! * [`clustering`]: WPGMA dendrograms.
//! * [`render`]: SVG figures and their layouts.
//! * [`analysis`]: the two-span pipeline producing an analysis bundle.
//!
//! Parsers, file formats, the CLI and the HTTP service live in the
//! `lexshift` crate.

#![no_std]

extern crate alloc;

pub mod analysis;
pub mod clustering;
pub mod corpus;
pub mod diachrony;
pub mod divergence;
mod error;
pub mod filter;
pub mod pos;
pub mod render;
pub mod sampling;
pub mod timeline;

pub use error::{Error, Result};

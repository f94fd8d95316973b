//! File formats, the corpus index, and the HTTP service around
//! `lexshift-core`.

pub mod index;
pub mod ingest;
pub mod service;

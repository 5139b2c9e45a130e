//! IO, file formats, configuration, synthetic corpora, and pipeline
//! orchestration for the `tdsv-core` algorithms. The `tdsv` binary wraps
//! this library in a command-line interface.

pub mod cli;
pub mod config;
pub mod format;
pub mod pipeline;
pub mod synth;
pub mod wav;

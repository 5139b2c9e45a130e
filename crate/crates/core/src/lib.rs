//! Core algorithms for text-dependent speaker verification.
//!
//! Everything in this crate is pure computation over in-memory data: acoustic
//! front-end, diagonal-covariance GMMs with MAP adaptation, total-variability
//! i-vectors, two-covariance PLDA with spherical normalization, feed-forward
//! and embedding networks, time-contrastive labeling, and detection metrics.
//! File formats, audio decoding, and orchestration live in the companion
//! `tdsv` crate.
//!
//! The crate is `no_std` (with `alloc`): it performs no IO and all float math
//! goes through `libm`.

#![no_std]
// Matrix kernels index rows and columns directly; iterator rewrites of those
// loops obscure the arithmetic.
#![allow(clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod eval;
pub mod frontend;
pub mod gmm;
pub mod ivector;
pub mod linalg;
pub mod math;
pub mod nnet;
pub mod plda;
pub mod tcl;
pub mod types;

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod annotate;
pub mod augment;
pub mod calibrate;
pub mod config;
pub mod error;
pub mod evalbench;
pub mod geometry;
pub mod gridcodec;
pub mod imgcore;
pub mod landmarks;
pub mod losses;
pub mod manifest;
pub mod predictions;
pub mod sampler;
pub mod seeding;
pub mod synth;

pub use error::{Error, Result};

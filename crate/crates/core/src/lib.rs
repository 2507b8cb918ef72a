//! Microphone-array target-speaker extraction lab.

pub mod beamformer;
pub mod dsp;
pub mod dump;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod rir;
pub mod rtf;
pub mod scene;

pub use error::{Error, Result};

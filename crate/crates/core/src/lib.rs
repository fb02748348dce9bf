//! Simulation and analysis of JPEG quantization noise over repeated
//! compression cycles.

pub mod bench;
pub mod codec;
pub mod detect;
pub mod dist;
pub mod error;
pub mod io;
pub mod qstep;
pub mod scalar;
pub mod synth;
pub mod transform;
pub mod validate;

pub use error::{Error, ErrorKind, Result};
pub use scalar::Scalar;

/// Real-valued image plane in double precision.
pub type ImagePlane = transform::Plane<f64>;
/// Integer image plane (pixels, quantization levels).
pub type IntPlane = transform::Plane<i32>;
pub type Trace = codec::CompressionTrace<f64>;
pub type Cycle = codec::CycleRecord<f64>;

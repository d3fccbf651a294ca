//! Numerical core of napaudit.
//!
//! Everything here works on in-memory data and needs only `alloc`: tensors and
//! feature-map downsampling, intersectional group bookkeeping, Neuron
//! Activation Profiles, linear classifier probes, the particle layout used for
//! topographic activation maps, and the rasterization/colouring of those maps.
//! File formats, rendering to PNG and the command-line pipeline live in the
//! `napaudit` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod color;
mod error;
pub mod groups;
pub mod layout;
pub mod nap;
pub mod probe;
pub mod raster;
pub mod scalar;
pub mod seed;
pub mod tensor;

pub use error::{Error, Result};
pub use groups::{GroupAssignment, GroupKey, Manifest, Schema, Variable};
pub use scalar::Scalar;
pub use tensor::{DownsampleMethod, Tensor};

//! Floating-point element types for activation tensors.

use core::fmt::Debug;

/// Element type of a [`Tensor`](crate::Tensor). Activations are stored as
/// `f32` in the pipeline; `f64` is supported end to end for precision checks.
/// All accumulation goes through `f64` regardless.
pub trait Scalar: Copy + Debug + PartialEq + PartialOrd + Default + Send + Sync + 'static {
    const ZERO: Self;
    const BYTES: usize;

    fn to_f64(self) -> f64;
    fn from_f64(v: f64) -> Self;

    fn is_finite(self) -> bool {
        self.to_f64().is_finite()
    }
}

impl Scalar for f32 {
    const ZERO: Self = 0.0;
    const BYTES: usize = 4;

    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }

    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn is_finite(self) -> bool {
        f32::is_finite(self)
    }
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const BYTES: usize = 8;

    #[inline]
    fn to_f64(self) -> f64 {
        self
    }

    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }

    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

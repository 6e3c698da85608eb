//! Floating-point abstraction shared by the transform kernels and the
//! network layers. Training runs in `f32`, gradient checks and the
//! transform oracles in `f64`.

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, NumAssign};

pub trait Real:
    Float
    + NumAssign
    + LinalgScalar
    + ScalarOperand
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

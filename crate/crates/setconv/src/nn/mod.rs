//! Layers, models, losses and the optimizer.
//!
//! Layers process whole mini-batches. Every parallel loop writes disjoint
//! output regions and performs its reductions in a fixed order, so training
//! is deterministic for a given seed regardless of thread count. Training
//! normally runs in `f32`; the gradient-check suite instantiates the same
//! code at `f64`.

mod checkpoint;
mod conv;
mod dense;
mod graph;
mod loss;
mod model;
mod optim;
mod pool;
mod tensor;

pub use conv::{ConvCache, ConvLayer};
pub use dense::{par_gemm, DenseLayer};
pub use graph::{adjacency_apply, GraphCache, GraphConvLayer, GraphVariant};
pub use loss::softmax_cross_entropy;
pub use model::{build_model, Forward, LatticeOp, Model, ModelConfig, ModelTag};
pub use optim::{lr_schedule, Adam};
pub use pool::{accumulate_backward, accumulate_forward, PoolLayer};
pub use tensor::SignalTensor;

/// Point-wise non-linearity applied by a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply<F: crate::Real>(self, v: F) -> F {
        match self {
            Activation::Relu => {
                if v > F::zero() {
                    v
                } else {
                    F::zero()
                }
            }
            Activation::Identity => v,
        }
    }

    /// Derivative expressed as a function of the layer output.
    #[inline]
    pub fn grad_mask<F: crate::Real>(self, out: F) -> F {
        match self {
            Activation::Relu => {
                if out > F::zero() {
                    F::one()
                } else {
                    F::zero()
                }
            }
            Activation::Identity => F::one(),
        }
    }
}

/// `max(0, x)` applied element-wise in place.
pub fn relu_inplace<F: crate::Real>(xs: &mut [F]) {
    for v in xs.iter_mut() {
        if *v < F::zero() {
            *v = F::zero();
        }
    }
}

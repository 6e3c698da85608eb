//! Signal processing and convolutional neural networks for set functions.
//!
//! A set function assigns a real value to every subset of a finite ground
//! set. This crate implements the shift operators, fast Fourier-style
//! transforms and convolutions for three shift semantics on that domain,
//! plus pooling, a small training stack (layers, reverse-mode gradients,
//! Adam), synthetic and hypergraph-derived classification datasets, and an
//! experiment harness with a CLI front end.
//!
//! Data-parallel loops run on rayon when the default `parallel` feature is
//! enabled; the sequential fallback produces bit-identical results (see
//! [`exec`]).

pub mod error;
pub mod exec;
pub mod filter;
pub mod ground;
pub mod rng;
pub mod signal;
pub mod transform;

mod real;

pub use error::{Error, Result};
pub use filter::{
    convolve_direct, convolve_spectral, matched_pattern, pool_combine, pool_max_element,
    restrict_filter, FilterSpec, PoolSpec,
};
pub use ground::{GroundSet, SubsetIndex};
pub use real::Real;
pub use signal::{compose_shift_check, SetFunction, ShiftModel};
pub use transform::{
    fourier_forward, fourier_inverse, frequency_response, kron_apply_inplace, TransformKind,
};

//! Multi-channel set-function signals with attached gradient buffers.

use crate::error::{Error, Result};
use crate::ground::GroundSet;
use crate::real::Real;
use crate::signal::SetFunction;

/// A stack of `channels` set functions on a ground set of size `n`, plus a
/// same-shape gradient buffer. Storage is channel-major: channel `c` owns
/// the contiguous slice `values[c * 2^n .. (c+1) * 2^n]`.
#[derive(Debug, Clone)]
pub struct SignalTensor<F> {
    n: usize,
    channels: usize,
    values: Vec<F>,
    grad: Vec<F>,
}

impl<F: Real> SignalTensor<F> {
    pub fn zeros(n: usize, channels: usize) -> Self {
        let len = (1usize << n) * channels;
        Self { n, channels, values: vec![F::zero(); len], grad: vec![F::zero(); len] }
    }

    pub fn from_values(n: usize, channels: usize, values: Vec<F>) -> Result<Self> {
        let expected = (1usize << n) * channels;
        if values.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "tensor needs {expected} values for n={n}, channels={channels}, got {}",
                values.len()
            )));
        }
        let grad = vec![F::zero(); values.len()];
        Ok(Self { n, channels, values, grad })
    }

    /// Single-channel tensor from a set function (values cast to `F`).
    pub fn from_set_function(s: &SetFunction) -> Self {
        let values = s.values().iter().map(|&v| F::from_f64(v)).collect::<Vec<_>>();
        let grad = vec![F::zero(); values.len()];
        Self { n: s.n(), channels: 1, values, grad }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Entries per channel, `2^n`.
    pub fn len(&self) -> usize {
        1usize << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [F] {
        &mut self.values
    }

    pub fn grad(&self) -> &[F] {
        &self.grad
    }

    pub fn grad_mut(&mut self) -> &mut [F] {
        &mut self.grad
    }

    pub fn channel(&self, c: usize) -> &[F] {
        let len = self.len();
        &self.values[c * len..(c + 1) * len]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [F] {
        let len = self.len();
        &mut self.values[c * len..(c + 1) * len]
    }

    pub fn grad_channel(&self, c: usize) -> &[F] {
        let len = self.len();
        &self.grad[c * len..(c + 1) * len]
    }

    pub fn grad_channel_mut(&mut self, c: usize) -> &mut [F] {
        let len = self.len();
        &mut self.grad[c * len..(c + 1) * len]
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(F::zero());
    }

    /// One channel as an `f64` set function (test and inspection helper).
    pub fn channel_as_set_function(&self, c: usize) -> SetFunction {
        let ground = GroundSet::new(self.n).expect("tensor n validated at construction");
        let values = self.channel(c).iter().map(|v| v.to_f64()).collect();
        SetFunction::new(ground, values).expect("finite by construction")
    }
}

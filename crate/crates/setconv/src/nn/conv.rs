//! Powerset convolutional layer.
//!
//! `t^(j) = σ(Σ_i h^(i,j) * s^(i) + b_j)`, with the convolutions evaluated
//! in the frequency domain: the filter responses `F̄ h` are computed once
//! per batch, every input channel is transformed once, the channel mixing
//! is a cheap element-wise multiply-accumulate per frequency, and one
//! inverse transform produces each output channel.
//!
//! Filters are stored on an explicit support (the subsets with learnable
//! coefficients); the model zoo uses the one-hop support `{∅, {x_1}, ...,
//! {x_n}}`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec;
use crate::real::Real;
use crate::signal::ShiftModel;
use crate::transform::{transform_inplace, TransformKind};

use super::{Activation, SignalTensor};

#[derive(Debug, Clone)]
pub struct ConvLayer<F> {
    model: ShiftModel,
    n: usize,
    in_ch: usize,
    out_ch: usize,
    support: Vec<u32>,
    /// Filter coefficients, `(in_ch * out_ch) x support.len()`, pair-major
    /// with pair index `i * out_ch + j`.
    w: Vec<F>,
    b: Vec<F>,
    gw: Vec<F>,
    gb: Vec<F>,
    activation: Activation,
}

/// Per-batch buffers the backward pass reuses: filter responses and the
/// frequency-domain inputs from the forward pass.
#[derive(Debug)]
pub struct ConvCache<F> {
    /// `(in_ch * out_ch) x len` frequency responses.
    resp: Vec<F>,
    /// `samples x in_ch x len` transformed inputs.
    x_hat: Vec<F>,
}

impl<F: Real> ConvLayer<F> {
    /// One-hop layer: support `{∅} ∪ {{x_i}}`, `n + 1` coefficients per
    /// channel pair.
    pub fn one_hop(model: ShiftModel, n: usize, in_ch: usize, out_ch: usize) -> Self {
        let mut support = Vec::with_capacity(n + 1);
        support.push(0u32);
        support.extend((0..n).map(|i| 1u32 << i));
        Self::with_support(model, n, in_ch, out_ch, support)
    }

    pub fn with_support(
        model: ShiftModel,
        n: usize,
        in_ch: usize,
        out_ch: usize,
        support: Vec<u32>,
    ) -> Self {
        let pairs = in_ch * out_ch;
        Self {
            model,
            n,
            in_ch,
            out_ch,
            w: vec![F::zero(); pairs * support.len()],
            b: vec![F::zero(); out_ch],
            gw: vec![F::zero(); pairs * support.len()],
            gb: vec![F::zero(); out_ch],
            support,
            activation: Activation::Relu,
        }
    }

    pub fn set_activation(&mut self, activation: Activation) {
        self.activation = activation;
    }

    /// Glorot-uniform initialization with fan-in `in_ch * |support|` and
    /// fan-out `out_ch * |support|`; biases zero.
    pub fn init_glorot(&mut self, rng: &mut ChaCha8Rng) {
        let s = self.support.len() as f64;
        let limit = (6.0 / ((self.in_ch + self.out_ch) as f64 * s)).sqrt();
        for w in self.w.iter_mut() {
            *w = F::from_f64(rng.random_range(-limit..limit));
        }
        self.b.fill(F::zero());
    }

    pub fn shift_model(&self) -> ShiftModel {
        self.model
    }

    pub fn in_channels(&self) -> usize {
        self.in_ch
    }

    pub fn out_channels(&self) -> usize {
        self.out_ch
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> &[u32] {
        &self.support
    }

    /// Bias terms plus one coefficient per (pair, support slot).
    pub fn param_count(&self) -> usize {
        self.out_ch + self.in_ch * self.out_ch * self.support.len()
    }

    /// Mutable access to a single filter's coefficients (tests and manual
    /// construction).
    pub fn filter_mut(&mut self, i: usize, j: usize) -> &mut [F] {
        let s = self.support.len();
        let pair = i * self.out_ch + j;
        &mut self.w[pair * s..(pair + 1) * s]
    }

    pub fn bias_mut(&mut self) -> &mut [F] {
        &mut self.b
    }

    pub(super) fn visit_params(&mut self, f: &mut impl FnMut(&mut [F], &mut [F])) {
        f(&mut self.w, &mut self.gw);
        f(&mut self.b, &mut self.gb);
    }

    pub(super) fn named_params(&self) -> Vec<(String, Vec<usize>, Vec<f64>)> {
        vec![
            (
                "w".into(),
                vec![self.in_ch, self.out_ch, self.support.len()],
                self.w.iter().map(|v| v.to_f64()).collect(),
            ),
            ("b".into(), vec![self.out_ch], self.b.iter().map(|v| v.to_f64()).collect()),
        ]
    }

    pub(super) fn load_params(&mut self, name: &str, values: &[f64]) -> Result<()> {
        let slot: &mut [F] = match name {
            "w" => &mut self.w,
            "b" => &mut self.b,
            other => return Err(Error::Checkpoint(format!("unknown parameter `{other}`"))),
        };
        if slot.len() != values.len() {
            return Err(Error::Checkpoint(format!(
                "parameter `{name}` has {} values, expected {}",
                values.len(),
                slot.len()
            )));
        }
        for (dst, &src) in slot.iter_mut().zip(values) {
            *dst = F::from_f64(src);
        }
        Ok(())
    }

    fn check_input(&self, xs: &[SignalTensor<F>]) -> Result<()> {
        for x in xs {
            if x.channels() != self.in_ch {
                return Err(Error::ChannelMismatch { expected: self.in_ch, got: x.channels() });
            }
            if x.n() != self.n {
                return Err(Error::ShapeMismatch(format!(
                    "layer built for n={}, tensor has n={}",
                    self.n,
                    x.n()
                )));
            }
        }
        Ok(())
    }

    /// Frequency responses of every filter in the bank, one per channel
    /// pair, recomputed at the start of each batch.
    fn responses(&self) -> Vec<F> {
        let len = 1usize << self.n;
        let mut resp = vec![F::zero(); self.in_ch * self.out_ch * len];
        let s = self.support.len();
        exec::for_each_chunk_mut(&mut resp, len, |pair, buf| {
            for (t, &q) in self.support.iter().enumerate() {
                buf[q as usize] = self.w[pair * s + t];
            }
            transform_inplace(buf, self.n, TransformKind::FilterResponse, self.model, false)
                .expect("buffer sized 2^n");
        });
        resp
    }

    pub fn forward_batch(
        &self,
        xs: &[SignalTensor<F>],
    ) -> Result<(Vec<SignalTensor<F>>, ConvCache<F>)> {
        self.check_input(xs)?;
        let len = 1usize << self.n;
        let samples = xs.len();
        let resp = self.responses();

        // Transform every input channel once.
        let mut x_hat = vec![F::zero(); samples * self.in_ch * len];
        exec::for_each_chunk_mut(&mut x_hat, self.in_ch * len, |si, chunk| {
            for c in 0..self.in_ch {
                chunk[c * len..(c + 1) * len].copy_from_slice(xs[si].channel(c));
            }
            for c in 0..self.in_ch {
                transform_inplace(
                    &mut chunk[c * len..(c + 1) * len],
                    self.n,
                    TransformKind::SignalForward,
                    self.model,
                    false,
                )
                .expect("buffer sized 2^n");
            }
        });

        let mut outs: Vec<SignalTensor<F>> =
            (0..samples).map(|_| SignalTensor::zeros(self.n, self.out_ch)).collect();
        exec::for_each_mut(&mut outs, |si, out| {
            let xh = &x_hat[si * self.in_ch * len..(si + 1) * self.in_ch * len];
            let mut acc = vec![F::zero(); len];
            for j in 0..self.out_ch {
                acc.fill(F::zero());
                for i in 0..self.in_ch {
                    let r = &resp[(i * self.out_ch + j) * len..(i * self.out_ch + j + 1) * len];
                    let xi = &xh[i * len..(i + 1) * len];
                    for ((a, &rv), &xv) in acc.iter_mut().zip(r).zip(xi) {
                        *a += rv * xv;
                    }
                }
                transform_inplace(
                    &mut acc,
                    self.n,
                    TransformKind::SignalInverse,
                    self.model,
                    false,
                )
                .expect("buffer sized 2^n");
                let bias = self.b[j];
                let dst = out.channel_mut(j);
                for (d, &a) in dst.iter_mut().zip(acc.iter()) {
                    *d = self.activation.apply(a + bias);
                }
            }
        });
        Ok((outs, ConvCache { resp, x_hat }))
    }

    /// Single-sample forward (spec-level operation; used by tests).
    pub fn forward_sample(&self, x: &SignalTensor<F>) -> Result<SignalTensor<F>> {
        let (mut outs, _) = self.forward_batch(std::slice::from_ref(x))?;
        Ok(outs.pop().expect("one sample in, one out"))
    }

    /// Backward pass: reads upstream gradients from `outs[..].grad`, writes
    /// input gradients into `gin[..].grad` and accumulates parameter
    /// gradients. `gin` must be the batch the forward pass consumed.
    pub fn backward_batch(
        &mut self,
        outs: &[SignalTensor<F>],
        cache: &ConvCache<F>,
        gin: &mut [SignalTensor<F>],
    ) -> Result<()> {
        self.check_input(gin)?;
        let len = 1usize << self.n;
        let samples = outs.len();
        if gin.len() != samples {
            return Err(Error::ShapeMismatch(format!(
                "forward saw {samples} samples, backward got {}",
                gin.len()
            )));
        }

        // Phase A1: per sample, mask through the activation, collect bias
        // partials and transform upstream gradients into the frequency
        // domain (transpose of the inverse transform).
        let mut g_hat = vec![F::zero(); samples * self.out_ch * len];
        let mut bias_part = vec![F::zero(); samples * self.out_ch];
        exec::for_each_chunk2_mut(
            &mut g_hat,
            self.out_ch * len,
            &mut bias_part,
            self.out_ch,
            |si, gh, bp| {
                let out = &outs[si];
                for j in 0..self.out_ch {
                    let ov = out.channel(j);
                    let og = out.grad_channel(j);
                    let dst = &mut gh[j * len..(j + 1) * len];
                    let mut sum = F::zero();
                    for ((d, &o), &g) in dst.iter_mut().zip(ov).zip(og) {
                        let gp = g * self.activation.grad_mask(o);
                        *d = gp;
                        sum += gp;
                    }
                    bp[j] = sum;
                    transform_inplace(
                        dst,
                        self.n,
                        TransformKind::SignalInverse,
                        self.model,
                        true,
                    )
                    .expect("buffer sized 2^n");
                }
            },
        );

        // Phase A2: input gradients (transpose of the forward transform
        // applied to the response-weighted sum of upstream spectra).
        let resp = &cache.resp;
        exec::for_each_mut(gin, |si, t| {
            let gh = &g_hat[si * self.out_ch * len..(si + 1) * self.out_ch * len];
            let mut acc = vec![F::zero(); len];
            for i in 0..self.in_ch {
                acc.fill(F::zero());
                for j in 0..self.out_ch {
                    let r = &resp[(i * self.out_ch + j) * len..(i * self.out_ch + j + 1) * len];
                    let gj = &gh[j * len..(j + 1) * len];
                    for ((a, &rv), &gv) in acc.iter_mut().zip(r).zip(gj) {
                        *a += rv * gv;
                    }
                }
                transform_inplace(
                    &mut acc,
                    self.n,
                    TransformKind::SignalForward,
                    self.model,
                    true,
                )
                .expect("buffer sized 2^n");
                t.grad_channel_mut(i).copy_from_slice(&acc);
            }
        });

        // Phase B: filter gradients. Per channel pair, accumulate the
        // response-domain gradient over samples in index order, then map it
        // back to the support coefficients via the transposed response
        // transform. Disjoint gw slices make this safe to parallelize.
        let s = self.support.len();
        let x_hat = &cache.x_hat;
        let in_ch = self.in_ch;
        let out_ch = self.out_ch;
        let n = self.n;
        let model = self.model;
        let support = &self.support;
        let g_hat_ref = &g_hat;
        exec::for_each_chunk_mut(&mut self.gw, s, |pair, gw_slice| {
            let (i, j) = (pair / out_ch, pair % out_ch);
            let mut acc = vec![F::zero(); len];
            for si in 0..samples {
                let xh = &x_hat[(si * in_ch + i) * len..(si * in_ch + i + 1) * len];
                let gj = &g_hat_ref[(si * out_ch + j) * len..(si * out_ch + j + 1) * len];
                for ((a, &xv), &gv) in acc.iter_mut().zip(xh).zip(gj) {
                    *a += xv * gv;
                }
            }
            transform_inplace(&mut acc, n, TransformKind::FilterResponse, model, true)
                .expect("buffer sized 2^n");
            for (t, &q) in support.iter().enumerate() {
                gw_slice[t] += acc[q as usize];
            }
        });

        // Phase C: bias gradients, reduced in sample order.
        for j in 0..self.out_ch {
            let mut sum = F::zero();
            for si in 0..samples {
                sum += bias_part[si * self.out_ch + j];
            }
            self.gb[j] += sum;
        }
        Ok(())
    }
}

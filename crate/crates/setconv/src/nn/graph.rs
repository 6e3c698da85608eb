//! Graph convolutional layers on the hypercube graph.
//!
//! Vertices are subsets; two subsets are adjacent when they differ in one
//! element, so the adjacency operator is `(A s)_B = Σ_x s_{B Δ {x}}`. The
//! Laplacian variant uses the one-parameter form `θ (2I - L) s` with the
//! normalized Laplacian `L = I - A/n` (the n-cube is n-regular), i.e.
//! `θ (I + A/n) s`; the adjacency variant uses `(θ0 I + θ1 A) s`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec;
use crate::real::Real;

use super::{Activation, SignalTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphVariant {
    Laplacian,
    Adjacency,
}

impl GraphVariant {
    fn coeffs_per_pair(self) -> usize {
        match self {
            GraphVariant::Laplacian => 1,
            GraphVariant::Adjacency => 2,
        }
    }
}

/// Applies the hypercube adjacency operator: `dst[B] = Σ_x src[B ^ {x}]`.
pub fn adjacency_apply<F: Real>(src: &[F], dst: &mut [F], n: usize) {
    dst.fill(F::zero());
    let mut half = 1usize;
    for _ in 0..n {
        for (sblock, dblock) in src.chunks_exact(half * 2).zip(dst.chunks_exact_mut(half * 2)) {
            let (slo, shi) = sblock.split_at(half);
            let (dlo, dhi) = dblock.split_at_mut(half);
            for (d, &s) in dlo.iter_mut().zip(shi) {
                *d += s;
            }
            for (d, &s) in dhi.iter_mut().zip(slo) {
                *d += s;
            }
        }
        half <<= 1;
    }
}

#[derive(Debug, Clone)]
pub struct GraphConvLayer<F> {
    variant: GraphVariant,
    n: usize,
    in_ch: usize,
    out_ch: usize,
    /// `(in_ch * out_ch) x coeffs_per_pair`, pair-major (`i * out_ch + j`).
    w: Vec<F>,
    b: Vec<F>,
    gw: Vec<F>,
    gb: Vec<F>,
    activation: Activation,
}

/// Propagated inputs cached by the forward pass: `(I + A/n) s_i` for the
/// Laplacian variant, `A s_i` for the adjacency variant.
#[derive(Debug)]
pub struct GraphCache<F> {
    prop: Vec<F>, // samples x in_ch x len
}

impl<F: Real> GraphConvLayer<F> {
    pub fn new(variant: GraphVariant, n: usize, in_ch: usize, out_ch: usize) -> Self {
        let pairs = in_ch * out_ch;
        let cpp = variant.coeffs_per_pair();
        Self {
            variant,
            n,
            in_ch,
            out_ch,
            w: vec![F::zero(); pairs * cpp],
            b: vec![F::zero(); out_ch],
            gw: vec![F::zero(); pairs * cpp],
            gb: vec![F::zero(); out_ch],
            activation: Activation::Relu,
        }
    }

    pub fn set_activation(&mut self, activation: Activation) {
        self.activation = activation;
    }

    pub fn init_glorot(&mut self, rng: &mut ChaCha8Rng) {
        let s = self.variant.coeffs_per_pair() as f64;
        let limit = (6.0 / ((self.in_ch + self.out_ch) as f64 * s)).sqrt();
        for w in self.w.iter_mut() {
            *w = F::from_f64(rng.random_range(-limit..limit));
        }
        self.b.fill(F::zero());
    }

    pub fn variant(&self) -> GraphVariant {
        self.variant
    }

    pub fn param_count(&self) -> usize {
        self.out_ch + self.in_ch * self.out_ch * self.variant.coeffs_per_pair()
    }

    pub fn coeffs_mut(&mut self, i: usize, j: usize) -> &mut [F] {
        let cpp = self.variant.coeffs_per_pair();
        let pair = i * self.out_ch + j;
        &mut self.w[pair * cpp..(pair + 1) * cpp]
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
                vec![self.in_ch, self.out_ch, self.variant.coeffs_per_pair()],
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

    /// Fills `prop` with the propagated version of one input channel.
    fn propagate(&self, src: &[F], dst: &mut [F]) {
        adjacency_apply(src, dst, self.n);
        if self.variant == GraphVariant::Laplacian {
            let inv_n = F::from_f64(1.0 / self.n as f64);
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = s + *d * inv_n;
            }
        }
    }

    pub fn forward_batch(
        &self,
        xs: &[SignalTensor<F>],
    ) -> Result<(Vec<SignalTensor<F>>, GraphCache<F>)> {
        self.check_input(xs)?;
        let len = 1usize << self.n;
        let samples = xs.len();

        let mut prop = vec![F::zero(); samples * self.in_ch * len];
        exec::for_each_chunk_mut(&mut prop, self.in_ch * len, |si, chunk| {
            for c in 0..self.in_ch {
                self.propagate(xs[si].channel(c), &mut chunk[c * len..(c + 1) * len]);
            }
        });

        let mut outs: Vec<SignalTensor<F>> =
            (0..samples).map(|_| SignalTensor::zeros(self.n, self.out_ch)).collect();
        let prop_ref = &prop;
        exec::for_each_mut(&mut outs, |si, out| {
            let pr = &prop_ref[si * self.in_ch * len..(si + 1) * self.in_ch * len];
            let mut acc = vec![F::zero(); len];
            for j in 0..self.out_ch {
                acc.fill(self.b[j]);
                for i in 0..self.in_ch {
                    let pi = &pr[i * len..(i + 1) * len];
                    match self.variant {
                        GraphVariant::Laplacian => {
                            let theta = self.w[i * self.out_ch + j];
                            for (a, &p) in acc.iter_mut().zip(pi) {
                                *a += theta * p;
                            }
                        }
                        GraphVariant::Adjacency => {
                            let pair = (i * self.out_ch + j) * 2;
                            let (t0, t1) = (self.w[pair], self.w[pair + 1]);
                            let si_vals = xs[si].channel(i);
                            for ((a, &s), &p) in acc.iter_mut().zip(si_vals).zip(pi) {
                                *a += t0 * s + t1 * p;
                            }
                        }
                    }
                }
                let dst = out.channel_mut(j);
                for (d, &a) in dst.iter_mut().zip(acc.iter()) {
                    *d = self.activation.apply(a);
                }
            }
        });
        Ok((outs, GraphCache { prop }))
    }

    pub fn forward_sample(&self, x: &SignalTensor<F>) -> Result<SignalTensor<F>> {
        let (mut outs, _) = self.forward_batch(std::slice::from_ref(x))?;
        Ok(outs.pop().expect("one sample in, one out"))
    }

    pub fn backward_batch(
        &mut self,
        outs: &[SignalTensor<F>],
        cache: &GraphCache<F>,
        gin: &mut [SignalTensor<F>],
    ) -> Result<()> {
        self.check_input(gin)?;
        let len = 1usize << self.n;
        let samples = outs.len();

        // Masked upstream gradients and bias partials.
        let mut g_pre = vec![F::zero(); samples * self.out_ch * len];
        let mut bias_part = vec![F::zero(); samples * self.out_ch];
        exec::for_each_chunk2_mut(
            &mut g_pre,
            self.out_ch * len,
            &mut bias_part,
            self.out_ch,
            |si, gp, bp| {
                let out = &outs[si];
                for j in 0..self.out_ch {
                    let ov = out.channel(j);
                    let og = out.grad_channel(j);
                    let dst = &mut gp[j * len..(j + 1) * len];
                    let mut sum = F::zero();
                    for ((d, &o), &g) in dst.iter_mut().zip(ov).zip(og) {
                        let gv = g * self.activation.grad_mask(o);
                        *d = gv;
                        sum += gv;
                    }
                    bp[j] = sum;
                }
            },
        );

        // Input gradients. Both propagation operators are symmetric, so the
        // adjoint is the same operator applied to the theta-mixed upstream.
        let g_pre_ref = &g_pre;
        let variant = self.variant;
        let (in_ch, out_ch, n) = (self.in_ch, self.out_ch, self.n);
        let w = &self.w;
        exec::for_each_mut(gin, |si, t| {
            let gp = &g_pre_ref[si * out_ch * len..(si + 1) * out_ch * len];
            let mut mixed = vec![F::zero(); len];
            let mut tmp = vec![F::zero(); len];
            for i in 0..in_ch {
                match variant {
                    GraphVariant::Laplacian => {
                        mixed.fill(F::zero());
                        for j in 0..out_ch {
                            let theta = w[i * out_ch + j];
                            let gj = &gp[j * len..(j + 1) * len];
                            for (m, &g) in mixed.iter_mut().zip(gj) {
                                *m += theta * g;
                            }
                        }
                        adjacency_apply(&mixed, &mut tmp, n);
                        let inv_n = F::from_f64(1.0 / n as f64);
                        let dst = t.grad_channel_mut(i);
                        for ((d, &m), &a) in dst.iter_mut().zip(&mixed).zip(&tmp) {
                            *d = m + a * inv_n;
                        }
                    }
                    GraphVariant::Adjacency => {
                        let mut direct = vec![F::zero(); len];
                        mixed.fill(F::zero());
                        for j in 0..out_ch {
                            let pair = (i * out_ch + j) * 2;
                            let (t0, t1) = (w[pair], w[pair + 1]);
                            let gj = &gp[j * len..(j + 1) * len];
                            for ((d, m), &g) in direct.iter_mut().zip(mixed.iter_mut()).zip(gj) {
                                *d += t0 * g;
                                *m += t1 * g;
                            }
                        }
                        adjacency_apply(&mixed, &mut tmp, n);
                        let dst = t.grad_channel_mut(i);
                        for ((d, &dv), &a) in dst.iter_mut().zip(&direct).zip(&tmp) {
                            *d = dv + a;
                        }
                    }
                }
            }
        });

        // Coefficient gradients: dots between upstream gradients and the
        // cached propagated (and raw) inputs, reduced in sample order.
        let cpp = self.variant.coeffs_per_pair();
        let prop = &cache.prop;
        let gin_ref: &[SignalTensor<F>] = gin;
        exec::for_each_chunk_mut(&mut self.gw, cpp, |pair, gw_slice| {
            let (i, j) = (pair / out_ch, pair % out_ch);
            match variant {
                GraphVariant::Laplacian => {
                    let mut acc = F::zero();
                    for si in 0..samples {
                        let u = &prop[(si * in_ch + i) * len..(si * in_ch + i + 1) * len];
                        let gj =
                            &g_pre_ref[(si * out_ch + j) * len..(si * out_ch + j + 1) * len];
                        let mut dot = F::zero();
                        for (&a, &b) in u.iter().zip(gj) {
                            dot += a * b;
                        }
                        acc += dot;
                    }
                    gw_slice[0] += acc;
                }
                GraphVariant::Adjacency => {
                    let mut acc0 = F::zero();
                    let mut acc1 = F::zero();
                    for si in 0..samples {
                        let sraw = gin_ref[si].channel(i);
                        let v = &prop[(si * in_ch + i) * len..(si * in_ch + i + 1) * len];
                        let gj =
                            &g_pre_ref[(si * out_ch + j) * len..(si * out_ch + j + 1) * len];
                        let mut d0 = F::zero();
                        let mut d1 = F::zero();
                        for ((&s, &p), &g) in sraw.iter().zip(v).zip(gj) {
                            d0 += s * g;
                            d1 += p * g;
                        }
                        acc0 += d0;
                        acc1 += d1;
                    }
                    gw_slice[0] += acc0;
                    gw_slice[1] += acc1;
                }
            }
        });

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

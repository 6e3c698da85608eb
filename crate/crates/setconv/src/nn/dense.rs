//! Fully connected layers over batched feature matrices.
//!
//! Forward, input-gradient and weight-gradient products are all GEMMs;
//! [`par_gemm`] splits the output along its longer axis at fixed midpoints,
//! so the arithmetic is identical whether the halves run in parallel or
//! sequentially.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2, ArrayViewMut2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec;
use crate::real::Real;

use super::Activation;

/// `c = alpha * a.dot(b) + beta * c`, recursively split over the larger
/// output axis. The split tree depends only on the shapes, never on the
/// thread count.
pub fn par_gemm<F: Real>(
    alpha: F,
    a: ArrayView2<'_, F>,
    b: ArrayView2<'_, F>,
    beta: F,
    mut c: ArrayViewMut2<'_, F>,
) {
    const TILE: usize = 128;
    let (m, n) = c.dim();
    if m.max(n) <= TILE {
        general_mat_mul(alpha, &a, &b, beta, &mut c);
        return;
    }
    if m >= n {
        let mid = m / 2;
        let (a0, a1) = a.split_at(Axis(0), mid);
        let (c0, c1) = c.split_at(Axis(0), mid);
        exec::join(|| par_gemm(alpha, a0, b, beta, c0), || par_gemm(alpha, a1, b, beta, c1));
    } else {
        let mid = n / 2;
        let (b0, b1) = b.split_at(Axis(1), mid);
        let (c0, c1) = c.split_at(Axis(1), mid);
        exec::join(|| par_gemm(alpha, a, b0, beta, c0), || par_gemm(alpha, a, b1, beta, c1));
    }
}

#[derive(Debug, Clone)]
pub struct DenseLayer<F> {
    w: Array2<F>, // in_dim x out_dim
    b: Vec<F>,
    gw: Array2<F>,
    gb: Vec<F>,
    activation: Activation,
}

impl<F: Real> DenseLayer<F> {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            w: Array2::zeros((in_dim, out_dim)),
            b: vec![F::zero(); out_dim],
            gw: Array2::zeros((in_dim, out_dim)),
            gb: vec![F::zero(); out_dim],
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }

    pub fn init_glorot(&mut self, rng: &mut ChaCha8Rng) {
        let limit = (6.0 / (self.in_dim() + self.out_dim()) as f64).sqrt();
        for w in self.w.iter_mut() {
            *w = F::from_f64(rng.random_range(-limit..limit));
        }
        self.b.fill(F::zero());
    }

    pub fn weights_mut(&mut self) -> &mut Array2<F> {
        &mut self.w
    }

    pub fn bias_mut(&mut self) -> &mut [F] {
        &mut self.b
    }

    pub(super) fn visit_params(&mut self, f: &mut impl FnMut(&mut [F], &mut [F])) {
        f(
            self.w.as_slice_mut().expect("standard layout"),
            self.gw.as_slice_mut().expect("standard layout"),
        );
        f(&mut self.b, &mut self.gb);
    }

    pub(super) fn named_params(&self) -> Vec<(String, Vec<usize>, Vec<f64>)> {
        vec![
            (
                "w".into(),
                vec![self.w.nrows(), self.w.ncols()],
                self.w.iter().map(|v| v.to_f64()).collect(),
            ),
            ("b".into(), vec![self.b.len()], self.b.iter().map(|v| v.to_f64()).collect()),
        ]
    }

    pub(super) fn load_params(&mut self, name: &str, values: &[f64]) -> Result<()> {
        match name {
            "w" => {
                if values.len() != self.w.len() {
                    return Err(Error::Checkpoint(format!(
                        "parameter `w` has {} values, expected {}",
                        values.len(),
                        self.w.len()
                    )));
                }
                for (dst, &src) in
                    self.w.as_slice_mut().expect("standard layout").iter_mut().zip(values)
                {
                    *dst = F::from_f64(src);
                }
            }
            "b" => {
                if values.len() != self.b.len() {
                    return Err(Error::Checkpoint(format!(
                        "parameter `b` has {} values, expected {}",
                        values.len(),
                        self.b.len()
                    )));
                }
                for (dst, &src) in self.b.iter_mut().zip(values) {
                    *dst = F::from_f64(src);
                }
            }
            other => return Err(Error::Checkpoint(format!("unknown parameter `{other}`"))),
        }
        Ok(())
    }

    /// `y = σ(x · W + b)`, rows are samples.
    pub fn forward_batch(&self, x: &Array2<F>) -> Result<Array2<F>> {
        if x.ncols() != self.in_dim() {
            return Err(Error::ShapeMismatch(format!(
                "dense layer expects {} features, got {}",
                self.in_dim(),
                x.ncols()
            )));
        }
        let mut y = Array2::zeros((x.nrows(), self.out_dim()));
        for mut row in y.rows_mut() {
            for (v, &b) in row.iter_mut().zip(&self.b) {
                *v = b;
            }
        }
        par_gemm(F::one(), x.view(), self.w.view(), F::one(), y.view_mut());
        if self.activation == Activation::Relu {
            for v in y.iter_mut() {
                if *v < F::zero() {
                    *v = F::zero();
                }
            }
        }
        Ok(y)
    }

    /// Accumulates parameter gradients and optionally returns the input
    /// gradient (skipped for the first layer of an input-level MLP).
    pub fn backward_batch(
        &mut self,
        x: &Array2<F>,
        y: &Array2<F>,
        gy: &Array2<F>,
        want_gx: bool,
    ) -> Result<Option<Array2<F>>> {
        let mut gpre = gy.clone();
        if self.activation == Activation::Relu {
            for (g, &o) in gpre.iter_mut().zip(y.iter()) {
                *g *= self.activation.grad_mask(o);
            }
        }
        for (j, gb) in self.gb.iter_mut().enumerate() {
            let mut sum = F::zero();
            for r in 0..gpre.nrows() {
                sum += gpre[(r, j)];
            }
            *gb += sum;
        }
        par_gemm(F::one(), x.t(), gpre.view(), F::one(), self.gw.view_mut());
        if want_gx {
            let mut gx = Array2::zeros((x.nrows(), self.in_dim()));
            par_gemm(F::one(), gpre.view(), self.w.t(), F::zero(), gx.view_mut());
            Ok(Some(gx))
        } else {
            Ok(None)
        }
    }
}

//! Mean-batch softmax cross entropy with a stable log-sum-exp.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::real::Real;

/// Returns `(loss, d loss / d logits)`. Rows of `logits` are samples; the
/// loss is averaged over the batch, so the gradient carries the `1/batch`
/// factor.
pub fn softmax_cross_entropy<F: Real>(
    logits: &Array2<F>,
    labels: &[u16],
) -> Result<(f64, Array2<F>)> {
    let (batch, classes) = logits.dim();
    if labels.len() != batch {
        return Err(Error::ShapeMismatch(format!(
            "{batch} logit rows but {} labels",
            labels.len()
        )));
    }
    let mut grad = Array2::zeros((batch, classes));
    let mut loss = 0.0f64;
    let inv_batch = F::from_f64(1.0 / batch as f64);
    for (r, row) in logits.rows().into_iter().enumerate() {
        let label = labels[r] as usize;
        if label >= classes {
            return Err(Error::LabelOutOfRange { label, classes });
        }
        let max = row.iter().fold(F::neg_infinity(), |m, &v| m.max(v));
        let mut sum = F::zero();
        for &v in row.iter() {
            sum += (v - max).exp();
        }
        let log_z = max.to_f64() + sum.to_f64().ln();
        loss += log_z - row[label].to_f64();
        for (c, &v) in row.iter().enumerate() {
            let p = (v - max).exp() / sum;
            let delta = if c == label { F::one() } else { F::zero() };
            grad[(r, c)] = (p - delta) * inv_batch;
        }
    }
    Ok((loss / batch as f64, grad))
}

//! Pooling and accumulation layers.
//!
//! The pooling layer merges the first two elements of the current ground
//! set (`P^{{x1,x2}}` applied to every channel), shrinking it by one
//! element per application. It is a pure index selection, so the backward
//! pass scatters gradients to the retained positions.

use crate::error::{Error, Result};
use crate::exec;
use crate::filter::combine_index_map;
use crate::real::Real;

use super::SignalTensor;

#[derive(Debug, Clone)]
pub struct PoolLayer {
    n_in: usize,
    map: Vec<u32>,
}

impl PoolLayer {
    /// Pools `{x1, x2}` of a ground set with `n_in >= 2` elements.
    pub fn new(n_in: usize) -> Result<Self> {
        if n_in < 2 {
            return Err(Error::Config(format!("cannot pool a ground set of size {n_in}")));
        }
        Ok(Self { n_in, map: combine_index_map(n_in, 0b11) })
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_in - 1
    }

    pub fn forward_batch<F: Real>(&self, xs: &[SignalTensor<F>]) -> Result<Vec<SignalTensor<F>>> {
        for x in xs {
            if x.n() != self.n_in {
                return Err(Error::ShapeMismatch(format!(
                    "pool built for n={}, tensor has n={}",
                    self.n_in,
                    x.n()
                )));
            }
        }
        let mut outs: Vec<SignalTensor<F>> =
            xs.iter().map(|x| SignalTensor::zeros(self.n_out(), x.channels())).collect();
        let map = &self.map;
        exec::for_each_mut(&mut outs, |si, out| {
            let x = &xs[si];
            for c in 0..x.channels() {
                let src = x.channel(c);
                let dst = out.channel_mut(c);
                for (d, &b) in dst.iter_mut().zip(map.iter()) {
                    *d = src[b as usize];
                }
            }
        });
        Ok(outs)
    }

    pub fn backward_batch<F: Real>(
        &self,
        outs: &[SignalTensor<F>],
        gin: &mut [SignalTensor<F>],
    ) -> Result<()> {
        let map = &self.map;
        exec::for_each_mut(gin, |si, t| {
            let out = &outs[si];
            for c in 0..t.channels() {
                let dst = t.grad_channel_mut(c);
                dst.fill(F::zero());
                let src = out.grad_channel(c);
                for (&g, &b) in src.iter().zip(map.iter()) {
                    dst[b as usize] = g;
                }
            }
        });
        Ok(())
    }
}

/// Channel means over all subsets: the shift-invariant accumulation step.
pub fn accumulate_forward<F: Real>(x: &SignalTensor<F>) -> Vec<F> {
    let len = F::from_f64(x.len() as f64);
    (0..x.channels())
        .map(|c| {
            let mut sum = F::zero();
            for &v in x.channel(c) {
                sum += v;
            }
            sum / len
        })
        .collect()
}

/// Distributes the means' gradient back: `1/2^n` per entry.
pub fn accumulate_backward<F: Real>(g_means: &[F], t: &mut SignalTensor<F>) {
    let inv = F::one() / F::from_f64(t.len() as f64);
    for (c, &g) in g_means.iter().enumerate() {
        let gv = g * inv;
        for d in t.grad_channel_mut(c) {
            *d = gv;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn random_tensor(n: usize, channels: usize, seed: u64) -> SignalTensor<f64> {
        let mut rng = stream_rng(seed, 0);
        let len = (1usize << n) * channels;
        let values: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        SignalTensor::from_values(n, channels, values).unwrap()
    }

    #[test]
    fn pool_shapes() {
        let pool = PoolLayer::new(10).unwrap();
        let xs = vec![random_tensor(10, 32, 1)];
        let outs = pool.forward_batch(&xs).unwrap();
        assert_eq!(outs[0].len(), 512);
        assert_eq!(outs[0].channels(), 32);
        assert!(PoolLayer::new(1).is_err());
    }

    #[test]
    fn pool_is_channelwise_selection() {
        let pool = PoolLayer::new(4).unwrap();
        let xs = vec![random_tensor(4, 3, 2)];
        let outs = pool.forward_batch(&xs).unwrap();
        // Values are a selection of input values, channel by channel.
        for c in 0..3 {
            for &v in outs[0].channel(c) {
                assert!(xs[0].channel(c).contains(&v));
            }
        }
        // Permuting channels commutes with pooling.
        let mut permuted = SignalTensor::<f64>::zeros(4, 3);
        for c in 0..3 {
            permuted.channel_mut(c).copy_from_slice(xs[0].channel((c + 1) % 3));
        }
        let pouts = pool.forward_batch(std::slice::from_ref(&permuted)).unwrap();
        for c in 0..3 {
            assert_eq!(pouts[0].channel(c), outs[0].channel((c + 1) % 3));
        }
    }

    #[test]
    fn pool_matches_set_function_pooling() {
        let pool = PoolLayer::new(5).unwrap();
        let xs = vec![random_tensor(5, 2, 3)];
        let outs = pool.forward_batch(&xs).unwrap();
        for c in 0..2 {
            let direct = crate::pool_combine(
                &xs[0].channel_as_set_function(c),
                crate::SubsetIndex::new_unchecked(0b11),
            )
            .unwrap();
            assert_eq!(outs[0].channel(c), direct.values());
        }
    }

    #[test]
    fn accumulate_examples() {
        let mut t = SignalTensor::<f64>::zeros(1, 2);
        t.channel_mut(0).copy_from_slice(&[1.0, 3.0]);
        t.channel_mut(1).copy_from_slice(&[5.0, 5.0]);
        let means = accumulate_forward(&t);
        assert_eq!(means, vec![2.0, 5.0]);
    }

    #[test]
    fn accumulate_is_shift_invariant_under_symdiff() {
        let x = random_tensor(5, 2, 9);
        let base = accumulate_forward(&x);
        let q = crate::SubsetIndex::new_unchecked(0b10110);
        let mut shifted = SignalTensor::<f64>::zeros(5, 2);
        for c in 0..2 {
            let s = x.channel_as_set_function(c).shift(q, crate::ShiftModel::SymDiff).unwrap();
            for (d, &v) in shifted.channel_mut(c).iter_mut().zip(s.values()) {
                *d = v;
            }
        }
        let after = accumulate_forward(&shifted);
        for (a, b) in base.iter().zip(&after) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

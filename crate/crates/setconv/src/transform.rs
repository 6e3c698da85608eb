//! Fast Kronecker-factored transforms for all three shift models.
//!
//! Each transform is an n-fold Kronecker power of a 2x2 base matrix, with
//! the factor for element `x_i` acting on bit `i-1`. A single in-place
//! butterfly engine ([`kron_apply_inplace`]) serves every (kind, model)
//! pair; stages run from bit 0 upward so floating-point rounding is
//! reproducible.
//!
//! Base matrices, rows/columns indexed (bit clear, bit set):
//!
//! | model   | signal forward    | signal inverse     | filter response  |
//! |---------|-------------------|--------------------|------------------|
//! | absorb  | `[[1,0],[1,-1]]`  | itself (involution)| `[[1,1],[1,0]]`  |
//! | union   | `[[1,-1],[0,1]]`  | `[[1,1],[0,1]]`    | `[[1,0],[1,1]]`  |
//! | symdiff | `[[1,1],[1,-1]]`  | same, scaled 2^-n  | `[[1,1],[1,-1]]` |
//!
//! The symdiff normalization lives entirely in the inverse so the forward
//! transform stays integer-exact on integer inputs. Unit tests check every
//! matrix against dense oracles and against the brute-force diagonalization
//! of the convolution operator.

use crate::error::{Error, Result};
use crate::exec;
use crate::real::Real;
use crate::signal::{SetFunction, ShiftModel};

/// Which linear map to apply: the signal analysis transform, its inverse,
/// or the filter-to-frequency-response transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    SignalForward,
    SignalInverse,
    FilterResponse,
}

/// 2x2 base matrix of the Kronecker power for a (kind, model) pair,
/// together with a flag for the global `2^-n` normalization.
pub fn butterfly_spec(kind: TransformKind, model: ShiftModel) -> ([[f64; 2]; 2], bool) {
    use ShiftModel::*;
    use TransformKind::*;
    match (kind, model) {
        (SignalForward, Absorb) => ([[1.0, 0.0], [1.0, -1.0]], false),
        (SignalInverse, Absorb) => ([[1.0, 0.0], [1.0, -1.0]], false),
        (FilterResponse, Absorb) => ([[1.0, 1.0], [1.0, 0.0]], false),
        (SignalForward, Union) => ([[1.0, -1.0], [0.0, 1.0]], false),
        (SignalInverse, Union) => ([[1.0, 1.0], [0.0, 1.0]], false),
        (FilterResponse, Union) => ([[1.0, 0.0], [1.0, 1.0]], false),
        (SignalForward, SymDiff) => ([[1.0, 1.0], [1.0, -1.0]], false),
        (SignalInverse, SymDiff) => ([[1.0, 1.0], [1.0, -1.0]], true),
        (FilterResponse, SymDiff) => ([[1.0, 1.0], [1.0, -1.0]], false),
    }
}

/// Applies `base^{⊗n}` to `buffer` in place: n stages of 2^{n-1} butterflies,
/// O(n·2^n) operations, O(1) auxiliary memory.
pub fn kron_apply_inplace<T: Real>(buffer: &mut [T], base: [[T; 2]; 2], n: usize) -> Result<()> {
    if !buffer.len().is_power_of_two() {
        return Err(Error::LengthNotPowerOfTwo(buffer.len()));
    }
    if buffer.len() != 1usize << n {
        return Err(Error::LengthMismatch { len: buffer.len(), n });
    }
    let [[m00, m01], [m10, m11]] = base;
    let mut half = 1usize;
    for _ in 0..n {
        for block in buffer.chunks_exact_mut(half * 2) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a, *b);
                *a = m00 * x0 + m01 * x1;
                *b = m10 * x0 + m11 * x1;
            }
        }
        half <<= 1;
    }
    Ok(())
}

/// In-place transform on a raw buffer of length `2^n`. `transposed` applies
/// the transpose of the map (the Kronecker power of the transposed base),
/// which the backward passes of the network layers need.
pub fn transform_inplace<T: Real>(
    buffer: &mut [T],
    n: usize,
    kind: TransformKind,
    model: ShiftModel,
    transposed: bool,
) -> Result<()> {
    let (mut m, normalize) = butterfly_spec(kind, model);
    if transposed {
        let t = m[0][1];
        m[0][1] = m[1][0];
        m[1][0] = t;
    }
    let base = [
        [T::from_f64(m[0][0]), T::from_f64(m[0][1])],
        [T::from_f64(m[1][0]), T::from_f64(m[1][1])],
    ];
    kron_apply_inplace(buffer, base, n)?;
    if normalize {
        let scale = T::from_f64(1.0 / (1u64 << n) as f64);
        for v in buffer.iter_mut() {
            *v *= scale;
        }
    }
    Ok(())
}

fn transformed(s: &SetFunction, kind: TransformKind, model: ShiftModel) -> SetFunction {
    let mut values = s.values().to_vec();
    transform_inplace(&mut values, s.n(), kind, model, false)
        .expect("set function length is 2^n by construction");
    SetFunction::new(s.ground().clone(), values).expect("transform preserves finiteness")
}

/// Fourier transform of a signal; the spectrum is indexed by subsets too.
pub fn fourier_forward(s: &SetFunction, model: ShiftModel) -> SetFunction {
    transformed(s, TransformKind::SignalForward, model)
}

/// Exact inverse of [`fourier_forward`].
pub fn fourier_inverse(spectrum: &SetFunction, model: ShiftModel) -> SetFunction {
    transformed(spectrum, TransformKind::SignalInverse, model)
}

/// Frequency response of a filter: the diagonal of the convolution operator
/// after conjugation by the model's Fourier transform.
pub fn frequency_response(h: &SetFunction, model: ShiftModel) -> SetFunction {
    transformed(h, TransformKind::FilterResponse, model)
}

/// Applies the forward transform to many independent buffers, in parallel
/// when enabled. Each buffer must have length `2^n`.
pub fn batch_transform_inplace<T: Real>(
    buffers: &mut [T],
    n: usize,
    kind: TransformKind,
    model: ShiftModel,
    transposed: bool,
) -> Result<()> {
    let len = 1usize << n;
    if buffers.len() % len != 0 {
        return Err(Error::LengthMismatch { len: buffers.len(), n });
    }
    exec::for_each_chunk_mut(buffers, len, |_, chunk| {
        transform_inplace(chunk, n, kind, model, transposed).expect("chunk length checked");
    });
    Ok(())
}

#[cfg(test)]
pub(crate) mod dense {
    //! Dense matrix oracles used by the test suite only.

    use super::*;

    /// Entry `[a][b]` is the product over bit positions of `base[a_i][b_i]`.
    pub fn kron_matrix(base: [[f64; 2]; 2], n: usize) -> Vec<Vec<f64>> {
        let len = 1usize << n;
        let mut m = vec![vec![0.0; len]; len];
        for (a, row) in m.iter_mut().enumerate() {
            for (b, entry) in row.iter_mut().enumerate() {
                let mut prod = 1.0;
                for bit in 0..n {
                    prod *= base[(a >> bit) & 1][(b >> bit) & 1];
                }
                *entry = prod;
            }
        }
        m
    }

    pub fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
        m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = a.len();
        let mut c = vec![vec![0.0; n]; n];
        for i in 0..n {
            for k in 0..n {
                let aik = a[i][k];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    c[i][j] += aik * b[k][j];
                }
            }
        }
        c
    }

    /// Dense convolution operator `Φ_h = (h * ·)` for the given model.
    pub fn conv_operator(h: &SetFunction, model: ShiftModel) -> Vec<Vec<f64>> {
        let len = h.len();
        let mut m = vec![vec![0.0; len]; len];
        for a in 0..len as u32 {
            for q in 0..len as u32 {
                let src = model.apply(a, q) as usize;
                m[a as usize][src] += h.values()[q as usize];
            }
        }
        m
    }

    /// Full transform matrix including the symdiff inverse normalization.
    pub fn transform_matrix(kind: TransformKind, model: ShiftModel, n: usize) -> Vec<Vec<f64>> {
        let (base, normalize) = butterfly_spec(kind, model);
        let mut m = kron_matrix(base, n);
        if normalize {
            let scale = 1.0 / (1u64 << n) as f64;
            for row in &mut m {
                for v in row.iter_mut() {
                    *v *= scale;
                }
            }
        }
        m
    }
}

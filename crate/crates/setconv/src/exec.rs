//! Data-parallel execution helpers.
//!
//! All parallel loops in this crate go through these functions. Work is
//! always split at fixed, thread-count-independent boundaries and every
//! reduction happens inside a single task in a fixed order, so results are
//! bit-identical whether a loop runs on one thread or many. The `parallel`
//! feature selects the rayon-backed implementation; [`set_parallel`] lets
//! benchmarks and the CLI force the sequential path at runtime.

use std::sync::atomic::{AtomicBool, Ordering};

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Runtime override: when `false`, all helpers run sequentially even if the
/// `parallel` feature is compiled in.
pub fn set_parallel(enabled: bool) {
    FORCE_SEQUENTIAL.store(!enabled, Ordering::Relaxed);
}

pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.load(Ordering::Relaxed)
}

#[cfg(feature = "parallel")]
mod imp {
    use rayon::prelude::*;

    pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
    where
        A: FnOnce() -> RA + Send,
        B: FnOnce() -> RB + Send,
        RA: Send,
        RB: Send,
    {
        if super::parallel_enabled() {
            rayon::join(a, b)
        } else {
            (a(), b())
        }
    }

    pub fn for_each_mut<T, F>(items: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync,
    {
        if super::parallel_enabled() {
            items.par_iter_mut().enumerate().for_each(|(i, t)| f(i, t));
        } else {
            items.iter_mut().enumerate().for_each(|(i, t)| f(i, t));
        }
    }

    pub fn for_each_chunk_mut<T, F>(buf: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync,
    {
        if super::parallel_enabled() {
            buf.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
        } else {
            buf.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
        }
    }

    pub fn for_each_chunk2_mut<T, U, F>(a: &mut [T], ca: usize, b: &mut [U], cb: usize, f: F)
    where
        T: Send,
        U: Send,
        F: Fn(usize, &mut [T], &mut [U]) + Sync,
    {
        if super::parallel_enabled() {
            a.par_chunks_mut(ca)
                .zip(b.par_chunks_mut(cb))
                .enumerate()
                .for_each(|(i, (x, y))| f(i, x, y));
        } else {
            a.chunks_mut(ca)
                .zip(b.chunks_mut(cb))
                .enumerate()
                .for_each(|(i, (x, y))| f(i, x, y));
        }
    }

    pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        if super::parallel_enabled() {
            (0..len).into_par_iter().map(f).collect()
        } else {
            (0..len).map(f).collect()
        }
    }
}

#[cfg(not(feature = "parallel"))]
mod imp {
    pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
    where
        A: FnOnce() -> RA + Send,
        B: FnOnce() -> RB + Send,
        RA: Send,
        RB: Send,
    {
        (a(), b())
    }

    pub fn for_each_mut<T, F>(items: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync,
    {
        items.iter_mut().enumerate().for_each(|(i, t)| f(i, t));
    }

    pub fn for_each_chunk_mut<T, F>(buf: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync,
    {
        buf.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }

    pub fn for_each_chunk2_mut<T, U, F>(a: &mut [T], ca: usize, b: &mut [U], cb: usize, f: F)
    where
        T: Send,
        U: Send,
        F: Fn(usize, &mut [T], &mut [U]) + Sync,
    {
        a.chunks_mut(ca)
            .zip(b.chunks_mut(cb))
            .enumerate()
            .for_each(|(i, (x, y))| f(i, x, y));
    }

    pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..len).map(f).collect()
    }
}

pub use imp::{for_each_chunk2_mut, for_each_chunk_mut, for_each_mut, join, map_indexed};

//! Data-parallel helpers with a sequential fallback.
//!
//! With the `rayon` feature (default) the helpers fan work out over the rayon
//! thread pool; without it they run plain loops. Both paths perform the same
//! per-element arithmetic in the same order, so results are bitwise identical.

#[cfg(feature = "rayon")]
use rayon::prelude::*;

/// Below this many elements the parallel dispatch overhead outweighs the work.
#[cfg(feature = "rayon")]
const MIN_PAR_LEN: usize = 64;

/// Maps `f` over `0..n`, collecting results in index order.
#[cfg(feature = "rayon")]
pub(crate) fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    if n < MIN_PAR_LEN {
        (0..n).map(f).collect()
    } else {
        (0..n).into_par_iter().map(f).collect()
    }
}

#[cfg(not(feature = "rayon"))]
pub(crate) fn map_indexed<T>(n: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Applies `f` to each chunk of `chunk_len` consecutive elements of `data`.
/// The chunk index is passed alongside the chunk.
#[cfg(feature = "rayon")]
pub(crate) fn for_each_chunk_mut<T: Send>(
    data: &mut [T],
    chunk_len: usize,
    f: impl Fn(usize, &mut [T]) + Sync + Send,
) {
    if data.len() / chunk_len.max(1) < MIN_PAR_LEN {
        for (i, chunk) in data.chunks_mut(chunk_len).enumerate() {
            f(i, chunk);
        }
    } else {
        data.par_chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, chunk)| f(i, chunk));
    }
}

#[cfg(not(feature = "rayon"))]
pub(crate) fn for_each_chunk_mut<T>(
    data: &mut [T],
    chunk_len: usize,
    f: impl Fn(usize, &mut [T]),
) {
    for (i, chunk) in data.chunks_mut(chunk_len).enumerate() {
        f(i, chunk);
    }
}

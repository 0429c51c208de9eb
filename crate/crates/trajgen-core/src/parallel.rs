//! Deterministic batch parallelism.
//!
//! Work is split into fixed-size chunks and partial results are folded in
//! chunk order, so outputs are bit-identical no matter how many worker
//! threads are available. `TRAJGEN_NUM_THREADS` caps the rayon pool.

use std::ops::Range;
use std::sync::Once;

/// Fixed chunk width for batch-parallel loops. Changing this changes how
/// floating-point partial sums are grouped, so it is a constant, not a knob.
pub const BATCH_CHUNK: usize = 8;

static INIT: Once = Once::new();

/// Honor `TRAJGEN_NUM_THREADS` if set. Safe to call repeatedly; only the
/// first call can take effect, and an already-built global pool is left alone.
pub fn init_thread_cap() {
    INIT.call_once(|| {
        if let Ok(v) = std::env::var("TRAJGEN_NUM_THREADS") {
            if let Ok(n) = v.trim().parse::<usize>() {
                if n >= 1 {
                    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
                }
            }
        }
    });
}

/// `0..n` split into ranges of width `chunk` (last one may be shorter).
pub fn chunk_ranges(n: usize, chunk: usize) -> Vec<Range<usize>> {
    assert!(chunk > 0);
    (0..n.div_ceil(chunk))
        .map(|i| i * chunk..((i + 1) * chunk).min(n))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_cover_range_in_order() {
        let ranges = chunk_ranges(21, 8);
        assert_eq!(ranges, vec![0..8, 8..16, 16..21]);
        assert_eq!(chunk_ranges(0, 8), Vec::<Range<usize>>::new());
        assert_eq!(chunk_ranges(8, 8), vec![0..8]);
    }
}

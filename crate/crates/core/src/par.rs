//! Seeded map-reduce over fixed-size sample blocks.
//!
//! Work is cut into blocks of [`BLOCK_SIZE`] samples. Block `b` draws from its own
//! ChaCha stream, so the sample set depends only on the seed, never on how many
//! threads run. Partial results come back in block order and are folded
//! sequentially by the caller.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;

pub const BLOCK_SIZE: u64 = 1024;

/// Random stream for block `block` of the experiment keyed by `(seed, salt)`.
pub fn block_rng(seed: u64, salt: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(block);
    rng
}

/// Run `f(block, samples_in_block)` over `ceil(n / block_size)` blocks in parallel.
pub fn map_blocks<T, F>(n: u64, block_size: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, u64) -> Result<T> + Sync,
{
    let block_size = block_size.max(1);
    let blocks = n.div_ceil(block_size);
    (0..blocks)
        .into_par_iter()
        .map(|b| f(b, block_size.min(n - b * block_size)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn blocks_cover_exactly_n() {
        let sizes = map_blocks(2500, 1024, |_, k| Ok(k)).unwrap();
        assert_eq!(sizes, vec![1024, 1024, 452]);
        assert!(map_blocks(0, 1024, |_, k| Ok(k)).unwrap().is_empty());
    }

    #[test]
    fn result_is_independent_of_thread_count() {
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                map_blocks(10_000, 64, |b, k| {
                    let mut rng = block_rng(7, 1, b);
                    Ok((0..k).map(|_| rng.next_u64() >> 40).sum::<u64>())
                })
                .unwrap()
            })
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn streams_differ_across_blocks_and_salts() {
        let a = block_rng(1, 0, 0).next_u64();
        assert_ne!(a, block_rng(1, 0, 1).next_u64());
        assert_ne!(a, block_rng(1, 1, 0).next_u64());
    }
}

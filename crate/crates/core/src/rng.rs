//! Deterministic per-block random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for the block at `(block_row, block_col)`.
///
/// Depends only on the three inputs, never on scheduling order.
pub fn block_rng(seed: u64, block_row: usize, block_col: usize) -> ChaCha8Rng {
    let h = splitmix64(seed);
    let h = splitmix64(h ^ block_row as u64);
    let h = splitmix64(h ^ (block_col as u64).rotate_left(32));
    ChaCha8Rng::seed_from_u64(h)
}

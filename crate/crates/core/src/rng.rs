//! Seed derivation and the chunked sampling contract.
//!
//! Every Monte Carlo estimate splits its budget into fixed-size chunks. Chunk
//! `i` draws from its own stream seeded by `derive_seed(seed, &[i])`, and the
//! chunk results are merged in chunk order. The result therefore does not
//! depend on how many threads evaluate the chunks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type Rng = ChaCha8Rng;

/// Samples per independently seeded chunk.
pub const CHUNK: usize = 1 << 14;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `parts` into `seed`. Different part lists give unrelated streams.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut h = splitmix(seed);
    for &p in parts {
        h = splitmix(h ^ splitmix(p.wrapping_add(0x632b_e59b_d9b4_e019)));
    }
    h
}

pub fn rng_from(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Runs `body(rng, n)` over `samples` split into chunks and returns the
/// per-chunk results in chunk order.
pub fn chunked<T, F>(samples: usize, seed: u64, body: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut Rng, usize) -> T + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|i| {
            let n = if i + 1 == chunks { samples - i * CHUNK } else { CHUNK };
            let mut rng = rng_from(derive_seed(seed, &[i as u64]));
            body(&mut rng, n)
        })
        .collect()
}

//! Seeded, splittable random streams.
//!
//! Every stream is a ChaCha8 generator keyed by the root seed and selected by
//! a stream index, so work split into fixed-size blocks draws the same numbers
//! regardless of how blocks are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Number of draws generated from one stream by [`draws`].
pub const BLOCK: usize = 4096;

/// Stream `index` of the root `seed`.
pub fn stream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `n` independent draws. Draw `i` comes from stream `i / BLOCK`, so the
/// result does not depend on the number of threads.
pub fn draws<T, F>(seed: u64, n: usize, draw: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut Stream) -> T + Sync,
{
    let blocks = n.div_ceil(BLOCK);
    let block = |b: usize| {
        let mut rng = stream(seed, b as u64);
        let len = BLOCK.min(n - b * BLOCK);
        (0..len).map(|_| draw(&mut rng)).collect::<Vec<T>>()
    };
    #[cfg(feature = "parallel")]
    let chunks: Vec<Vec<T>> = {
        use rayon::prelude::*;
        (0..blocks).into_par_iter().map(block).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let chunks: Vec<Vec<T>> = (0..blocks).map(block).collect();
    chunks.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| stream(7, 0).random()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        let x: u64 = stream(7, 0).random();
        let y: u64 = stream(7, 1).random();
        assert_ne!(x, y);
    }

    #[test]
    fn draws_are_blocked() {
        let v = draws(3, BLOCK + 5, |r| r.random::<f64>());
        assert_eq!(v.len(), BLOCK + 5);
        let first: f64 = stream(3, 1).random();
        assert_eq!(v[BLOCK], first);
    }
}

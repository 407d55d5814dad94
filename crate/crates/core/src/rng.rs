//! Per-trial random streams.
//!
//! Trial `t` of an experiment seeded with `seed` draws from a ChaCha8
//! generator keyed by `seed` (expanded through `SeedableRng::seed_from_u64`,
//! i.e. PCG32) on stream number `t`. Streams are disjoint 2^64-block
//! sequences of the same keyed cipher, so every trial sees the same numbers
//! no matter which worker runs it or in what order.
//!
//! Experiments that share a seed also share per-trial streams; this gives
//! common random numbers across SNR points and strategies.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

pub fn trial_rng(seed: u64, trial: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4)
            .map(|_| 0)
            .scan(trial_rng(7, 3), |r, _: u64| Some(r.gen()))
            .collect();
        let b: Vec<u64> = (0..4)
            .map(|_| 0)
            .scan(trial_rng(7, 3), |r, _: u64| Some(r.gen()))
            .collect();
        let c: Vec<u64> = (0..4)
            .map(|_| 0)
            .scan(trial_rng(7, 4), |r, _: u64| Some(r.gen()))
            .collect();
        let d: Vec<u64> = (0..4)
            .map(|_| 0)
            .scan(trial_rng(8, 3), |r, _: u64| Some(r.gen()))
            .collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}

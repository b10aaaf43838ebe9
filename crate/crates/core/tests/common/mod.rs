//! Shared helpers for the integration suites.
#![allow(dead_code)] // not every suite uses every helper

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rnnt_lattice::{LogProbTensor, TargetSeq};

/// Deterministic random instance with `T in [1, max_t]`, `U in [0, max_u]`,
/// `V in [2, max_v]`.
pub fn sample_instance(
    rng: &mut ChaCha8Rng,
    max_t: usize,
    max_u: usize,
    max_v: usize,
) -> (LogProbTensor, TargetSeq) {
    let t = rng.random_range(1..=max_t);
    let u = rng.random_range(0..=max_u);
    let v = rng.random_range(2..=max_v);
    let seed: u64 = rng.random();
    let x = LogProbTensor::random_normalized(t, u, v, seed).unwrap();
    let units = (0..u)
        .map(|_| rng.random_range(1..v as u32))
        .collect::<Vec<_>>();
    (x, TargetSeq::new(units).unwrap())
}

/// C(n, k) as f64-safe exact usize for the small sizes used in tests.
pub fn binomial(n: usize, k: usize) -> u64 {
    let mut r: u64 = 1;
    for i in 0..k {
        r = r * (n - i) as u64 / (i + 1) as u64;
    }
    r
}

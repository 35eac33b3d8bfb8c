//! Seeded random states for property sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hardy::{HardyCoefficients, C64};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn unit_square(rng: &mut impl Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// A truncated state with `1..=max_trunc` modes, a random overall scale and
/// a random geometric envelope, so both flat and fast-decaying spectra show
/// up.
pub fn random_state(rng: &mut impl Rng, max_trunc: usize) -> HardyCoefficients {
    let trunc = rng.random_range(1..=max_trunc.max(1));
    let scale: f64 = rng.random_range(0.05..2.0);
    let decay: f64 = rng.random_range(0.05..1.0);
    let mut env = scale;
    HardyCoefficients::from_fn(trunc, |_| {
        let c = unit_square(rng) * env;
        env *= decay;
        c
    })
}

/// `λ/(1 - pz)` with `|λ| ∈ [0.1, 2)` and `|p| ≤ max_p`.
pub fn random_geometric(rng: &mut impl Rng, max_p: f64, trunc: usize) -> (C64, C64, HardyCoefficients) {
    let lambda = C64::from_polar(rng.random_range(0.1..2.0), rng.random_range(0.0..std::f64::consts::TAU));
    let p = C64::from_polar(rng.random_range(0.0..=max_p), rng.random_range(0.0..std::f64::consts::TAU));
    (lambda, p, HardyCoefficients::geometric(lambda, p, trunc))
}

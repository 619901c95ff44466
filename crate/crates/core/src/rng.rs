//! Seeded, independent random streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::scalar::Real;

/// Named stream ids. Each consumer of randomness owns one stream so that
/// swapping a gradient source never shifts the draws seen by another.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Momentum = 1,
    Metropolis = 2,
    Minibatch = 3,
    Friction = 4,
    Init = 5,
    Shuffle = 6,
    Data = 7,
    Perturbation = 8,
    Probe = 64,
}

pub fn stream(seed: u64, id: Stream) -> ChaCha8Rng {
    stream_raw(seed, id as u64)
}

/// Stream with an arbitrary id; probes use `Stream::Probe + k`.
pub fn stream_raw(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[inline]
pub fn standard_normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    let z: f64 = StandardNormal.sample(rng);
    T::lit(z)
}

#[inline]
pub fn uniform01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

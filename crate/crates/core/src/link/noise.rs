//! Sources of standard-normal noise draws.
//!
//! Link blocks ask for unit-variance samples and scale them themselves, so
//! a recorded draw can be replayed exactly even when the noise level
//! depends on the parameters being perturbed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub trait NoiseSource {
    /// `n` independent N(0, 1) samples.
    fn standard_normal(&mut self, n: usize) -> Vec<f64>;
}

/// Seeded Gaussian draws.
#[derive(Clone, Debug)]
pub struct GaussianNoise {
    rng: ChaCha8Rng,
}

impl GaussianNoise {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl NoiseSource for GaussianNoise {
    fn standard_normal(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| StandardNormal.sample(&mut self.rng)).collect()
    }
}

/// All-zero draws: the noise-free channel.
#[derive(Clone, Copy, Debug, Default)]
pub struct Silent;

impl NoiseSource for Silent {
    fn standard_normal(&mut self, n: usize) -> Vec<f64> {
        vec![0.0; n]
    }
}

/// Passes draws through from an inner source and keeps a copy.
#[derive(Clone, Debug)]
pub struct NoiseRecorder<S> {
    inner: S,
    draws: Vec<Vec<f64>>,
}

impl<S: NoiseSource> NoiseRecorder<S> {
    pub fn new(inner: S) -> Self {
        Self { inner, draws: Vec::new() }
    }

    pub fn into_replay(self) -> NoiseReplay {
        NoiseReplay { draws: self.draws, next: 0 }
    }
}

impl<S: NoiseSource> NoiseSource for NoiseRecorder<S> {
    fn standard_normal(&mut self, n: usize) -> Vec<f64> {
        let d = self.inner.standard_normal(n);
        self.draws.push(d.clone());
        d
    }
}

/// Replays recorded draws in order, restarting from the first draw after
/// [`NoiseReplay::rewind`].
#[derive(Clone, Debug)]
pub struct NoiseReplay {
    draws: Vec<Vec<f64>>,
    next: usize,
}

impl NoiseReplay {
    pub fn rewind(&mut self) {
        self.next = 0;
    }
}

impl NoiseSource for NoiseReplay {
    /// # Panics
    /// If more draws are requested than were recorded, or a draw's length
    /// differs from the recording; both indicate a changed call sequence.
    fn standard_normal(&mut self, n: usize) -> Vec<f64> {
        let d = self.draws.get(self.next).unwrap_or_else(|| {
            panic!("noise replay exhausted after {} draws", self.draws.len())
        });
        assert_eq!(d.len(), n, "replayed draw {} has a different length", self.next);
        self.next += 1;
        d.clone()
    }
}

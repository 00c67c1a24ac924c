//! Deterministic derivation of random-stream seeds.

use sha2::{Digest, Sha256};

/// Independent random streams of one run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stream {
    TrainSymbols,
    TrainNoise,
    EvalSymbols,
    EvalNoise,
    Init,
}

impl Stream {
    fn tag(self) -> &'static str {
        match self {
            Stream::TrainSymbols => "train-symbols",
            Stream::TrainNoise => "train-noise",
            Stream::EvalSymbols => "eval-symbols",
            Stream::EvalNoise => "eval-noise",
            Stream::Init => "init",
        }
    }
}

fn hash_u64(parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has at least 8 bytes"))
}

/// Seed of one run from the master seed and its position in the sweep.
pub fn seed_derive(master_seed: u64, variant: &str, sweep_index: usize, repeat_index: usize) -> u64 {
    hash_u64(&[
        b"run",
        &master_seed.to_le_bytes(),
        variant.as_bytes(),
        &(sweep_index as u64).to_le_bytes(),
        &(repeat_index as u64).to_le_bytes(),
    ])
}

/// Seed of one random stream of a run.
pub fn stream_seed(run_seed: u64, stream: Stream) -> u64 {
    hash_u64(&[b"stream", &run_seed.to_le_bytes(), stream.tag().as_bytes()])
}

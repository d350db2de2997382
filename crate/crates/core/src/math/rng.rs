use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Named stream families. Each maps to a disjoint range of ChaCha stream ids
/// so that draws for different purposes never overlap under one seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Raw(u64),
    /// Perturbation noise for optimizer step `n`.
    Step(u64),
    /// Minibatch order for epoch `n`.
    Shuffle(u64),
    /// Parameter initialisation.
    Init,
    /// Dataset generation.
    Data,
    /// Monte-Carlo sample `n` of a smoothing or trace estimate.
    Sample(u64),
}

const INDEX_BITS: u32 = 56;
const INDEX_MASK: u64 = (1 << INDEX_BITS) - 1;

impl Stream {
    pub fn id(self) -> u64 {
        let (tag, index) = match self {
            Stream::Raw(i) => return i,
            Stream::Step(i) => (1u64, i),
            Stream::Shuffle(i) => (2, i),
            Stream::Init => (3, 0),
            Stream::Data => (4, 0),
            Stream::Sample(i) => (5, i),
        };
        (tag << INDEX_BITS) | (index & INDEX_MASK)
    }
}

/// Deterministic generator keyed by `(seed, stream)`; the draw index is the
/// generator's own word position.
pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}

/// A standard-normal draw together with the key that reproduces it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianSample {
    pub eta: Vec<f64>,
    pub seed: u64,
    pub stream: u64,
}

pub fn sample_eta(p: usize, seed: u64, stream: Stream) -> GaussianSample {
    assert!(p > 0, "sample_eta needs p > 0");
    let mut rng = stream_rng(seed, stream);
    let eta = (0..p).map(|_| rng.sample(StandardNormal)).collect();
    GaussianSample {
        eta,
        seed,
        stream: stream.id(),
    }
}

/// ±1 entries with equal probability.
pub fn sample_rademacher(p: usize, seed: u64, stream: Stream) -> Vec<f64> {
    let mut rng = stream_rng(seed, stream);
    (0..p)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

//! Seeded randomness. Every random consumer draws from its own ChaCha8 stream
//! derived from one `u64` seed, so runs are reproducible and independent
//! consumers do not perturb each other.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matcore::{norm, DenseVector};

pub type StreamRng = ChaCha8Rng;

/// Independent stream `stream` of the generator seeded by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Exact position of a stream, enough to resume it bit for bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngPosition {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngPosition {
    pub fn capture(rng: &StreamRng) -> Self {
        Self { seed: rng.get_seed(), stream: rng.get_stream(), word_pos: rng.get_word_pos() }
    }

    pub fn restore(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

pub fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DenseVector {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Uniform direction on the unit sphere.
pub fn unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DenseVector {
    loop {
        let mut g = gaussian_vector(n, rng);
        let r = norm(&g);
        if r > 0.0 {
            g.iter_mut().for_each(|v| *v /= r);
            return g;
        }
    }
}

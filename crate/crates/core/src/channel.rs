//! AWGN channel and reproducible randomness.
//!
//! Every frame draws from its own ChaCha stream keyed by
//! `(seed, purpose, frame)`, so a frame's samples do not depend on which
//! worker thread simulates it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// What a stream's samples are used for. Distinct purposes never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamPurpose {
    Information,
    Noise,
}

impl StreamPurpose {
    fn tag(self) -> u64 {
        match self {
            StreamPurpose::Information => 0x494e_464f,
            StreamPurpose::Noise => 0x4e4f_4953,
        }
    }
}

/// Identifies one independent random sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub frame: u64,
    pub purpose: StreamPurpose,
}

impl RngStream {
    pub fn new(seed: u64, frame: u64, purpose: StreamPurpose) -> Self {
        RngStream {
            seed,
            frame,
            purpose,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.purpose.tag().to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.frame);
        rng
    }
}

/// Signal power per dimension of a codeword spread uniformly over `[-M/2, M/2)`.
pub fn signal_power(m: u32) -> f64 {
    let m = m as f64;
    m * m / 12.0
}

/// Noise standard deviation for `snr_db`, with signal power `M^2/12`.
pub fn snr_to_sigma(snr_db: f64, m: u32) -> f64 {
    (signal_power(m) / 10f64.powf(snr_db / 10.0)).sqrt()
}

/// Inverse of [`snr_to_sigma`].
pub fn sigma_to_snr_db(sigma: f64, m: u32) -> f64 {
    10.0 * (signal_power(m) / (sigma * sigma)).log10()
}

/// `y = x + n` with `n` i.i.d. `N(0, sigma^2)` drawn from `stream`.
pub fn awgn_transmit(x: &[f64], sigma: f64, stream: &RngStream) -> Vec<f64> {
    assert!(
        sigma >= 0.0,
        "noise standard deviation must be non-negative"
    );
    if sigma == 0.0 {
        return x.to_vec();
    }
    let mut rng = stream.rng();
    x.iter()
        .map(|&xk| {
            let n: f64 = StandardNormal.sample(&mut rng);
            xk + sigma * n
        })
        .collect()
}

//! Seeded random streams.
//!
//! A stream is identified by `(seed, label)`. The label is hashed (FNV-1a) to
//! a ChaCha20 stream id, so distinct purposes such as `"codebook-init"` and
//! `"data"` draw from independent sequences under the same seed. ChaCha20 is
//! counter based and endian independent; normals come from the `rand_distr`
//! ziggurat, which only touches `ln` on the rare tail path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, VqError};
use crate::numerics::Matrix;

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    label: String,
    rng: ChaCha20Rng,
}

fn fnv1a(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl RngStream {
    pub fn new(seed: u64, label: &str) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(fnv1a(label));
        Self {
            seed,
            label: label.to_owned(),
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// A child stream keyed by `label/child`, independent of this one's position.
    pub fn substream(&self, child: &str) -> Self {
        Self::new(self.seed, &format!("{}/{child}", self.label))
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.random::<f64>()
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    pub fn uniform_matrix(&mut self, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
        let data = (0..rows * cols).map(|_| self.uniform(lo, hi)).collect();
        Matrix::new(rows, cols, data).expect("length matches by construction")
    }
}

/// Draws a `rows x cols` matrix with i.i.d. `N(mean, std^2)` entries.
pub fn gaussian_sample(
    rng: &mut RngStream,
    rows: usize,
    cols: usize,
    mean: f64,
    std: f64,
) -> Result<Matrix> {
    if !(std >= 0.0) || !std.is_finite() {
        return Err(VqError::InvalidArgument(format!(
            "standard deviation must be finite and >= 0, got {std}"
        )));
    }
    let data = (0..rows * cols)
        .map(|_| mean + std * rng.standard_normal())
        .collect();
    Matrix::new(rows, cols, data)
}

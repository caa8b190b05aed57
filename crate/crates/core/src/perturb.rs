//! Seeded perturbation matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, spectral_norm, CMatrix, C64};

/// Dimension at which a [`CompactPerturbation`] has exactly the requested
/// spectral norm.
pub const REFERENCE_DIM: usize = 64;

/// Entry (i, j) is ξ_ij / ((i+1)(j+1)) with ξ_ij uniform in the unit square
/// [−1, 1]², drawn from a counter-based stream so that every truncation sees
/// the same entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompactPerturbation {
    pub seed: u64,
    pub norm: f64,
}

impl CompactPerturbation {
    pub fn new(seed: u64, norm: f64) -> Result<Self> {
        if !(norm >= 0.0) || !norm.is_finite() {
            return Err(Error::InvalidParameter(format!("perturbation norm {norm} must be >= 0")));
        }
        Ok(Self { seed, norm })
    }

    fn raw(&self, dim: usize) -> CMatrix {
        CMatrix::from_fn(dim, dim, |i, j| {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(i as u64);
            rng.set_word_pos(4 * j as u128);
            let re: f64 = rng.random_range(-1.0..1.0);
            let im: f64 = rng.random_range(-1.0..1.0);
            c(re, im) / ((i + 1) * (j + 1)) as f64
        })
    }

    pub fn matrix(&self, dim: usize) -> CMatrix {
        if self.norm == 0.0 || dim == 0 {
            return CMatrix::zeros(dim, dim);
        }
        let scale = self.norm / spectral_norm(&self.raw(REFERENCE_DIM));
        self.raw(dim) * c(scale, 0.0)
    }
}

/// Dense matrix with i.i.d. complex entries scaled to the given spectral norm.
pub fn dense_random(seed: u64, dim: usize, norm: f64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = CMatrix::from_fn(dim, dim, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let n = spectral_norm(&m);
    if n == 0.0 { m } else { m * C64::new(norm / n, 0.0) }
}

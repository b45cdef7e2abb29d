//! Memory caps for ball enumeration, compressions and exact convolutions.

/// Environment variable holding the memory cap in megabytes.
pub const BUDGET_ENV: &str = "LACUNAE_BUDGET_MB";

const DEFAULT_MB: u64 = 1024;

// rough per-item costs, in bytes
const WORD_BYTES: u64 = 160;
const ENTRY_BYTES: u64 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub bytes: u64,
}

impl Budget {
    pub fn megabytes(mb: u64) -> Self {
        Budget {
            bytes: mb.saturating_mul(1 << 20),
        }
    }

    /// Reads [`BUDGET_ENV`], falling back to 1 GiB.
    pub fn from_env() -> Self {
        std::env::var(BUDGET_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<u64>().ok())
            .map(Budget::megabytes)
            .unwrap_or_else(|| Budget::megabytes(DEFAULT_MB))
    }

    pub fn max_ball_words(&self) -> u128 {
        (self.bytes / WORD_BYTES) as u128
    }

    /// Cap on stored nonzero matrix entries (compressions, Krylov bases).
    pub fn max_entries(&self) -> u128 {
        (self.bytes / ENTRY_BYTES) as u128
    }

    /// Cap on the support size of intermediate convolution products.
    pub fn max_support(&self, coeff_dim: usize) -> u128 {
        let per = WORD_BYTES + (coeff_dim * coeff_dim) as u64 * 16;
        (self.bytes / per) as u128
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::from_env()
    }
}

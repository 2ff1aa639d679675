use serde::{Deserialize, Serialize};

/// Enumeration and search limits shared by every counting routine.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Maximum number of points evaluated exactly.
    pub exact: u128,
    /// Sample size once exact enumeration is out of reach.
    pub samples: u64,
    /// Largest axis length for exact slice rank.
    pub sr_max_dim: usize,
    /// Largest field order for exact slice rank.
    pub sr_max_q: u32,
    /// Deepest tower level tried when a stratum has not stabilised.
    pub k_limit: u32,
    /// Rejection-sampling attempts when looking for a matrix of given rank.
    pub sample_attempts: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            exact: 100_000_000,
            samples: 1_000_000,
            sr_max_dim: 4,
            sr_max_q: 3,
            k_limit: 6,
            sample_attempts: 20_000,
        }
    }
}

impl Budget {
    pub fn with_exact(exact: u128) -> Self {
        Budget {
            exact,
            ..Budget::default()
        }
    }
}

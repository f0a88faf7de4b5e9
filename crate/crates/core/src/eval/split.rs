use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::seeding::derive_seed;

use super::EvalError;

const SPLIT_STREAM: u64 = 0x5350;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self { train: 0.75, validation: 0.15, test: 0.10 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

impl SplitAssignment {
    /// Whether the three groups are pairwise disjoint.
    pub fn is_disjoint(&self) -> bool {
        let mut all: Vec<&String> = self.train.iter().chain(&self.validation).chain(&self.test).collect();
        let n = all.len();
        all.sort();
        all.dedup();
        all.len() == n
    }
}

/// Shuffles feeders by `seed`; train and validation take `⌊ratio·F⌋` feeders
/// and test takes the rest.
pub fn split_by_feeder(feeder_ids: &[String], ratios: SplitRatios, seed: u64) -> Result<SplitAssignment, EvalError> {
    let r = [ratios.train, ratios.validation, ratios.test];
    if r.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || r.iter().sum::<f64>() > 1.0 + 1e-9 {
        return Err(EvalError::InvalidConfig(format!("bad split ratios {ratios:?}")));
    }
    let f = feeder_ids.len();
    // tolerance keeps products like 0.15 * 20 from flooring to 2
    let take = |ratio: f64| (ratio * f as f64 + 1e-9).floor() as usize;
    let n_train = take(ratios.train);
    let n_val = take(ratios.validation);
    if n_train == 0 || n_val == 0 || n_train + n_val >= f {
        return Err(EvalError::InsufficientFeeders(f));
    }
    let mut ids = feeder_ids.to_vec();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, SPLIT_STREAM, 0)));
    let test = ids.split_off(n_train + n_val);
    let validation = ids.split_off(n_train);
    Ok(SplitAssignment { train: ids, validation, test })
}

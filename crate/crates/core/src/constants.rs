//! Tunable constants, grouped by profile.
//!
//! `Paper` keeps the published constants and is what the budget-formula tests evaluate. `Desk`
//! rescales the ones that make laptop-sized runs impossible. CONSTANTS.md lists every difference.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Paper,
    #[default]
    Desk,
}

impl std::str::FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "paper" => Ok(Profile::Paper),
            "desk" => Ok(Profile::Desk),
            other => Err(format!("unknown profile '{other}' (expected paper or desk)")),
        }
    }
}

/// How many grid levels the atlas learner budgets classes for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridLevels {
    /// `k = log n * log(1/eps) / log^2(1 + eps)`.
    Formula,
    /// Only levels that can hold a mass in `[eps/n, 1]`: `ceil(log(n/eps) / log(1 + eps)) + 1`.
    Occupied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub profile: Profile,

    /// Collision tester: `s = c * sqrt(m) / eps^2` samples inside the interval.
    pub collision_c: f64,
    /// Collision tester: unconditional draws per round are `hit_factor * s / gamma`.
    pub collision_hit_factor: f64,
    /// Single-round error assumed when sizing majority votes.
    pub majority_base_error: f64,
    /// Multiplier on the folklore ℓ1 learner's sample count `(n + ln(2/delta)) / (2 eps^2)`.
    pub learn_dist_factor: f64,

    /// Pair tester: `K = rounds * ln(2/delta) / eps^2` rounds.
    pub adaptive_rounds: f64,
    /// Pair tester: `Q = pair * ln(2K/delta) / eps^2` queries per pair.
    pub adaptive_pair: f64,
    /// Pair tester: a round rejects when the estimated ratio leaves `[1/(1+t*eps), 1+t*eps]`.
    pub adaptive_ratio: f64,

    /// Exponents replacing `(10, 8, 3, 16)` in the non-adaptive tester.
    pub alg5_exponents: [f64; 4],
    /// The constant `C` in `m_k = C log^16 n log(3 log n) / (eps^2 gamma)`.
    pub alg5_c: f64,
    /// Hits below `gamma * m_k / divisor` reject.
    pub alg5_hit_divisor: f64,

    /// Assessment rounds `s = rounds * ln(1/delta) / eps`.
    pub assess_rounds: f64,
    /// Assessment rejects when more than `threshold * eps * s` rounds reject.
    pub assess_threshold: f64,

    /// Learner pull is `(eps/(d L), eps/d, 1/9)` with this `d`.
    pub learn_pull_divisor: f64,
    /// `Some(f)`: length bound `r = f L ln(1/eps) / eps`. `None`: the structural bound `2m + 1`.
    pub learn_length_factor: Option<f64>,
    /// Learner assesses at `eps / d`.
    pub learn_assess_divisor: f64,
    /// Learner learns the flattening at `eps / d`.
    pub learn_flat_divisor: f64,

    /// Trimming sampler accuracy inside the atlas learner is `eps / d`.
    pub atlas_sampler_divisor: f64,
    /// Count estimation accuracy inside the atlas learner is `eps / d`.
    pub atlas_count_divisor: f64,
    pub atlas_grid_levels: GridLevels,
    /// Atlas tester pulls at `eps / (d k)` and learns at `eps / d`.
    pub atlas_divisor: f64,
    /// Atlas tester length bound `f k ln n ln(1/eps) / eps`.
    pub atlas_length_factor: f64,
}

impl Constants {
    pub fn paper() -> Self {
        Self {
            profile: Profile::Paper,
            collision_c: 24.0,
            collision_hit_factor: 2.0,
            majority_base_error: 1.0 / 3.0,
            learn_dist_factor: 1.0,
            adaptive_rounds: 1.0,
            adaptive_pair: 105.0,
            adaptive_ratio: 1.0 / 3.0,
            alg5_exponents: [10.0, 8.0, 3.0, 16.0],
            alg5_c: 1.0,
            alg5_hit_divisor: 40.0,
            assess_rounds: 20.0,
            assess_threshold: 4.0,
            learn_pull_divisor: 2000.0,
            learn_length_factor: Some(1e5),
            learn_assess_divisor: 20.0,
            learn_flat_divisor: 10.0,
            atlas_sampler_divisor: 8.0,
            atlas_count_divisor: 40.0,
            atlas_grid_levels: GridLevels::Formula,
            atlas_divisor: 5.0,
            atlas_length_factor: 20.0,
        }
    }

    pub fn desk() -> Self {
        Self {
            profile: Profile::Desk,
            learn_dist_factor: 4.0,
            alg5_exponents: [3.0, 2.0, 0.5, 4.0],
            alg5_c: 100.0,
            learn_pull_divisor: 4.0,
            learn_length_factor: None,
            learn_assess_divisor: 4.0,
            atlas_grid_levels: GridLevels::Occupied,
            ..Self::paper()
        }
    }

    pub fn for_profile(p: Profile) -> Self {
        match p {
            Profile::Paper => Self::paper(),
            Profile::Desk => Self::desk(),
        }
    }
}

impl Default for Constants {
    fn default() -> Self {
        Self::desk()
    }
}

/// `ceil(x)` as an integer count, saturating on overflow.
pub(crate) fn ceil_count(x: f64) -> u64 {
    if x.is_nan() || x <= 0.0 {
        0
    } else if x >= u64::MAX as f64 {
        u64::MAX
    } else {
        x.ceil() as u64
    }
}

/// Smallest odd number of rounds whose majority errs with probability at most `delta`, given a
/// per-round error of `base` (Hoeffding).
pub fn majority_rounds(delta: f64, base: f64) -> u64 {
    if delta >= base {
        return 1;
    }
    let gap = 0.5 - base;
    let r = ceil_count((1.0 / delta).ln() / (2.0 * gap * gap)).max(1);
    if r % 2 == 0 {
        r + 1
    } else {
        r
    }
}

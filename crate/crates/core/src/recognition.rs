//! Familiarity judgement from the root's maximum activity against a running
//! average of that neuron's past winning activities.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::inference::encode_ml;
use crate::pattern::Pattern;
use crate::state::ModelState;

/// Running mean update where `count` already includes the new value.
pub fn update_mu(mu: f64, count: u64, value: f64) -> f64 {
    if count == 0 {
        return mu;
    }
    let c = count as f64;
    (c - 1.0) / c * mu + value / c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Judgment {
    pub old: bool,
    /// `v - mu_j`; positive means familiar.
    pub score: f64,
    pub neuron: usize,
    pub activity: f64,
}

/// Classify `pattern` as previously seen (`old`) or novel.
pub fn judge(state: &ModelState, pattern: &Pattern) -> Result<Judgment> {
    let h_star = encode_ml(state, pattern, None)?;
    Ok(judge_from_activity(
        state,
        h_star.max_val[state.root()],
        h_star.h_star[state.root()],
    ))
}

pub(crate) fn judge_from_activity(state: &ModelState, activity: f64, neuron: usize) -> Judgment {
    let mu = state.mu()[neuron];
    Judgment {
        old: activity > mu,
        score: activity - mu,
        neuron,
        activity,
    }
}

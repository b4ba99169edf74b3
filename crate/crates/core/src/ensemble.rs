//! Three-member ensembles: probability averaging and majority voting.

use alloc::format;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::CLASSES;
use crate::model::Architecture;

pub type Probs = [f64; CLASSES];

/// One probability vector from each architecture for a single sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    members: [(Architecture, Probs); 3],
}

impl PredictionSet {
    pub fn new(members: [(Architecture, Probs); 3]) -> Result<Self> {
        for (i, (arch, p)) in members.iter().enumerate() {
            if members[..i].iter().any(|(a, _)| a == arch) {
                return Err(Error::invalid("prediction set", format!("`{arch}` appears twice")));
            }
            if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::invalid("prediction set", format!("`{arch}` has invalid probabilities {p:?}")));
            }
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::invalid("prediction set", format!("`{arch}` probabilities sum to {sum}")));
            }
        }
        Ok(PredictionSet { members })
    }

    pub fn members(&self) -> &[(Architecture, Probs); 3] {
        &self.members
    }

    pub fn get(&self, arch: Architecture) -> Option<&Probs> {
        self.members.iter().find(|(a, _)| *a == arch).map(|(_, p)| p)
    }
}

/// Index of the largest entry, lowest index on ties, plus whether a tie occurred.
fn argmax_flagged(p: &Probs) -> (usize, bool) {
    let mut best = 0;
    for c in 1..CLASSES {
        if p[c] > p[best] {
            best = c;
        }
    }
    let tie = (0..CLASSES).any(|c| c != best && p[c] == p[best]);
    (best, tie)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageOutcome {
    pub class: usize,
    pub probs: Probs,
    /// Set when the argmax had to be broken by class order.
    pub tie: bool,
}

pub fn ensemble_average(p: &PredictionSet) -> AverageOutcome {
    let mut probs = [0.0; CLASSES];
    for (c, out) in probs.iter_mut().enumerate() {
        // Sorting makes the sum independent of member order.
        let mut v = p.members.map(|(_, q)| q[c]);
        v.sort_by(f64::total_cmp);
        *out = (v[0] + v[1] + v[2]) / 3.0;
    }
    let (class, tie) = argmax_flagged(&probs);
    AverageOutcome { class, probs, tie }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VoteRule {
    Unanimous,
    Majority,
    /// All votes differ; the class holding the largest single probability wins.
    HighestProbability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteOutcome {
    pub class: usize,
    pub rule: VoteRule,
    /// Set when some argmax along the way was broken by class order.
    pub tie: bool,
}

pub fn ensemble_vote(p: &PredictionSet) -> VoteOutcome {
    let mut tally = [0usize; CLASSES];
    let mut tie = false;
    for (_, q) in &p.members {
        let (c, t) = argmax_flagged(q);
        tally[c] += 1;
        tie |= t;
    }
    if let Some(c) = tally.iter().position(|&n| n == 3) {
        return VoteOutcome { class: c, rule: VoteRule::Unanimous, tie };
    }
    if let Some(c) = tally.iter().position(|&n| n == 2) {
        return VoteOutcome { class: c, rule: VoteRule::Majority, tie };
    }
    let top = p
        .members
        .iter()
        .flat_map(|(_, q)| q.iter().copied())
        .fold(f64::NEG_INFINITY, f64::max);
    let holds_top = |c: usize| p.members.iter().any(|(_, q)| q[c] == top);
    let class = (0..CLASSES).find(|&c| holds_top(c)).unwrap_or(0);
    let top_tie = (class + 1..CLASSES).any(holds_top);
    VoteOutcome {
        class,
        rule: VoteRule::HighestProbability,
        tie: tie || top_tie,
    }
}

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derive_seed;

/// Train, validation and test fractions.
pub const SPLIT_RATIOS: [f64; 3] = [0.70, 0.15, 0.15];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitPlan {
    /// Validation and test ids together, sorted.
    pub fn held_out(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.validation.iter().chain(&self.test).copied().collect();
        ids.sort_unstable();
        ids
    }
}

fn check_unique(ids: &[usize]) -> Result<()> {
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::invalid("sample ids", format!("duplicate id {}", w[0])));
    }
    Ok(())
}

fn part(n: usize, ratio: f64) -> usize {
    libm::floor(ratio * n as f64 + 1e-9) as usize
}

/// Seeded shuffle, then `⌊r·n⌋` validation and test ids; training gets the rest.
pub fn split_dataset(ids: &[usize], ratios: [f64; 3], seed: u64) -> Result<SplitPlan> {
    if ratios.iter().any(|r| !(0.0..=1.0).contains(r)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("split ratios", format!("{ratios:?} must be fractions summing to 1")));
    }
    if ids.len() < 3 {
        return Err(Error::invalid("split", format!("need at least 3 samples, got {}", ids.len())));
    }
    check_unique(ids)?;
    let n = ids.len();
    let n_val = part(n, ratios[1]);
    let n_test = part(n, ratios[2]);
    let mut shuffled = ids.to_vec();
    shuffled.sort_unstable();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, "split")));
    let sorted = |s: &[usize]| {
        let mut v = s.to_vec();
        v.sort_unstable();
        v
    };
    Ok(SplitPlan {
        validation: sorted(&shuffled[..n_val]),
        test: sorted(&shuffled[n_val..n_val + n_test]),
        train: sorted(&shuffled[n_val + n_test..]),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// Ids held out when training fold `fold`'s model.
    pub fn eval_ids(&self, fold: usize) -> &[usize] {
        &self.folds[fold]
    }

    /// Every id outside fold `fold`, sorted.
    pub fn train_ids(&self, fold: usize) -> Vec<usize> {
        let mut ids: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != fold)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        ids.sort_unstable();
        ids
    }

    pub fn fold_of(&self, id: usize) -> Option<usize> {
        self.folds.iter().position(|f| f.binary_search(&id).is_ok())
    }
}

/// Stratified k-fold partition: each class is shuffled and dealt round-robin,
/// continuing the deal across classes so overall fold sizes stay balanced.
pub fn make_kfold(ids: &[usize], labels: &[usize], k: usize, seed: u64) -> Result<FoldPlan> {
    if ids.len() != labels.len() {
        return Err(Error::invalid("k-fold", format!("{} ids for {} labels", ids.len(), labels.len())));
    }
    if k < 2 || k > ids.len() {
        return Err(Error::invalid("k-fold", format!("k = {k} with {} samples", ids.len())));
    }
    check_unique(ids)?;
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&id, &label) in ids.iter().zip(labels) {
        by_class.entry(label).or_default().push(id);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "kfold"));
    let mut folds = alloc::vec![Vec::new(); k];
    let mut next = 0;
    for (label, mut members) in by_class {
        if members.len() < k {
            return Err(Error::invalid(
                "k-fold",
                format!("class {label} has {} samples, fewer than k = {k}", members.len()),
            ));
        }
        members.sort_unstable();
        members.shuffle(&mut rng);
        for id in members {
            folds[next].push(id);
            next = (next + 1) % k;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(FoldPlan { folds })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes() {
        let ids: Vec<usize> = (0..1502).collect();
        let p = split_dataset(&ids, SPLIT_RATIOS, 1).unwrap();
        assert_eq!((p.train.len(), p.validation.len(), p.test.len()), (1052, 225, 225));
        let ids: Vec<usize> = (0..10).collect();
        let p = split_dataset(&ids, SPLIT_RATIOS, 1).unwrap();
        assert_eq!((p.train.len(), p.validation.len(), p.test.len()), (8, 1, 1));
    }

    #[test]
    fn split_rejects_bad_input() {
        let ids: Vec<usize> = (0..10).collect();
        assert!(split_dataset(&ids, [0.5, 0.3, 0.3], 0).is_err());
        assert!(split_dataset(&[0, 1], SPLIT_RATIOS, 0).is_err());
        assert!(split_dataset(&[0, 1, 1], SPLIT_RATIOS, 0).is_err());
    }

    #[test]
    fn split_depends_only_on_seed() {
        let ids: Vec<usize> = (0..50).collect();
        let mut rev = ids.clone();
        rev.reverse();
        assert_eq!(split_dataset(&ids, SPLIT_RATIOS, 9).unwrap(), split_dataset(&rev, SPLIT_RATIOS, 9).unwrap());
        assert_ne!(split_dataset(&ids, SPLIT_RATIOS, 9).unwrap(), split_dataset(&ids, SPLIT_RATIOS, 10).unwrap());
    }

    #[test]
    fn kfold_sizes() {
        let ids: Vec<usize> = (0..1502).collect();
        let labels: Vec<usize> = ids.iter().map(|i| i % 3).collect();
        let plan = make_kfold(&ids, &labels, 5, 3).unwrap();
        let mut sizes: Vec<usize> = plan.folds.iter().map(Vec::len).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(sizes, [301, 301, 300, 300, 300]);
        assert_eq!(plan.train_ids(0).len() + plan.eval_ids(0).len(), 1502);
    }

    #[test]
    fn kfold_rejects_small_class() {
        let ids: Vec<usize> = (0..12).collect();
        let mut labels = alloc::vec![0; 12];
        labels[0] = 1;
        assert!(make_kfold(&ids, &labels, 5, 0).is_err());
        assert!(make_kfold(&ids, &[0; 12], 13, 0).is_err());
    }
}

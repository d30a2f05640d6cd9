use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{self, stream, Rng};

/// A seeded, stratified partition of `0..n` into `k` folds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// Each fold's indices, ascending.
    pub folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    /// Indices outside fold `i`, ascending.
    pub fn train_indices(&self, i: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        v.sort_unstable();
        v
    }
}

fn by_class(labels: &[usize]) -> BTreeMap<usize, Vec<usize>> {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    groups
}

/// Within each class (ascending label order) the member indices are
/// shuffled and dealt round-robin starting at fold 0, so per-class fold
/// counts differ by at most one. Classes smaller than `k` land in the first
/// folds.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Config("folds must be ≥ 2".into()));
    }
    if k > labels.len() {
        return Err(Error::Config(format!("{k} folds requested for {} samples", labels.len())));
    }
    let mut rng = rng::seeded(seed, stream::FOLDS, 0);
    let mut folds = vec![Vec::new(); k];
    for (_, mut members) in by_class(labels) {
        members.shuffle(&mut rng);
        for (j, idx) in members.into_iter().enumerate() {
            folds[j % k].push(idx);
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(FoldPlan { k, seed, folds })
}

/// Number of held-out samples for a fraction: `floor(fraction · n)`. The
/// remaining `n - floor(fraction · n)` samples form the training side, so a
/// 30% test split of 926 samples leaves 649 for training and one of 341
/// leaves 239.
pub fn holdout_size(n: usize, fraction: f64) -> usize {
    (fraction * n as f64 + 1e-9).floor() as usize
}

/// Sample count for a resampling fraction, rounded half away from zero.
pub fn resample_size(fraction: f64, train_size: usize) -> usize {
    (fraction * train_size as f64).round() as usize
}

/// Largest-remainder allocation of `total` across groups proportional to
/// `sizes`; ties on the remainder go to the earlier group.
fn allocate(total: usize, sizes: &[usize]) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    let mut alloc: Vec<usize> = sizes.iter().map(|&s| total * s / n).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    // Remainders as exact integers: (total * s) mod n.
    order.sort_by(|&a, &b| ((total * sizes[b]) % n).cmp(&((total * sizes[a]) % n)).then(a.cmp(&b)));
    let mut left = total - alloc.iter().sum::<usize>();
    for &g in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if alloc[g] < sizes[g] {
            alloc[g] += 1;
            left -= 1;
        }
    }
    alloc
}

/// Stratified split into `(train, holdout)`, both ascending. The holdout has
/// `max(1, floor(fraction · n))` samples allocated to classes in proportion
/// to their size.
pub fn stratified_holdout(labels: &[usize], fraction: f64, rng: &mut Rng) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("holdout fraction must be in (0, 1), got {fraction}")));
    }
    let n = labels.len();
    let n_hold = holdout_size(n, fraction).max(1);
    if n_hold >= n {
        return Err(Error::Config(format!("cannot hold out {n_hold} of {n} samples")));
    }
    let groups = by_class(labels);
    let sizes: Vec<usize> = groups.values().map(Vec::len).collect();
    let alloc = allocate(n_hold, &sizes);
    let mut train = Vec::with_capacity(n - n_hold);
    let mut hold = Vec::with_capacity(n_hold);
    for ((_, mut members), take) in groups.into_iter().zip(alloc) {
        members.shuffle(rng);
        hold.extend_from_slice(&members[..take]);
        train.extend_from_slice(&members[take..]);
    }
    train.sort_unstable();
    hold.sort_unstable();
    Ok((train, hold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn class_counts(fold: &[usize], labels: &[usize], c: usize) -> usize {
        fold.iter().filter(|&&i| labels[i] == c).count()
    }

    #[test]
    fn exact_divisibility() {
        let labels = [0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
        let plan = stratified_kfold(&labels, 5, 1).unwrap();
        for f in &plan.folds {
            assert_eq!(class_counts(f, &labels, 0), 1);
            assert_eq!(class_counts(f, &labels, 1), 1);
        }
    }

    #[test]
    fn jira_sized_folds() {
        // 926 samples with 68.7% negative: 636 negative, 290 positive.
        let neg = (0.687f64 * 926.0).round() as usize;
        assert_eq!(neg, 636);
        let labels: Vec<usize> = (0..926).map(|i| usize::from(i >= neg)).collect();
        let plan = stratified_kfold(&labels, 10, 42).unwrap();
        for f in &plan.folds {
            assert!(f.len() == 92 || f.len() == 93, "{}", f.len());
            let n = class_counts(f, &labels, 0);
            assert!(n == 63 || n == 64, "{n}");
        }
    }

    #[test]
    fn seeds() {
        let labels: Vec<usize> = (0..40).map(|i| i % 3).collect();
        let a = stratified_kfold(&labels, 4, 7).unwrap();
        assert_eq!(a, stratified_kfold(&labels, 4, 7).unwrap());
        let b = stratified_kfold(&labels, 4, 8).unwrap();
        assert_ne!(a.folds, b.folds);
        for (fa, fb) in a.folds.iter().zip(&b.folds) {
            for c in 0..3 {
                assert_eq!(class_counts(fa, &labels, c), class_counts(fb, &labels, c));
            }
        }
    }

    #[test]
    fn invalid_k() {
        assert!(matches!(stratified_kfold(&[0, 1], 1, 0), Err(Error::Config(m)) if m.contains("folds must be ≥ 2")));
        assert!(matches!(stratified_kfold(&[0, 1], 3, 0), Err(Error::Config(_))));
    }

    #[test]
    fn split_sizes_reproduce_quoted_counts() {
        assert_eq!(341 - holdout_size(341, 0.3), 239);
        assert_eq!(resample_size(0.2, 239), 48);
        assert_eq!(926 - holdout_size(926, 0.3), 649);
        assert_eq!(resample_size(0.2, 649), 130);
        assert_eq!(resample_size(1.0, 649), 649);
        assert_eq!(resample_size(0.5, 5), 3);
        assert_eq!(holdout_size(30, 0.3), 9);
        assert_eq!(holdout_size(10, 0.1), 1);
    }

    #[test]
    fn holdout_is_stratified() {
        let labels: Vec<usize> = (0..926).map(|i| usize::from(i >= 636)).collect();
        let mut r = rng::seeded(1, 0, 0);
        let (train, test) = stratified_holdout(&labels, 0.3, &mut r).unwrap();
        assert_eq!(train.len(), 649);
        assert_eq!(test.len(), 277);
        // 277 * 636 / 926 = 190.25 → 190, and 277 * 290 / 926 = 86.75 → 87
        assert_eq!(class_counts(&test, &labels, 0), 190);
        assert_eq!(class_counts(&test, &labels, 1), 87);
    }

    proptest! {
        #[test]
        fn folds_partition_and_balance(
            labels in proptest::collection::vec(0usize..5, 2..120),
            k in 2usize..12,
            seed in any::<u64>(),
        ) {
            prop_assume!(k <= labels.len());
            let plan = stratified_kfold(&labels, k, seed).unwrap();
            let mut all: Vec<usize> = plan.folds.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
            for c in 0..5 {
                let counts: Vec<usize> = plan.folds.iter().map(|f| class_counts(f, &labels, c)).collect();
                let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
                prop_assert!(hi - lo <= 1);
            }
        }

        #[test]
        fn holdout_partitions(
            labels in proptest::collection::vec(0usize..4, 3..80),
            frac in 0.05f64..0.6,
            seed in any::<u64>(),
        ) {
            let mut r = rng::seeded(seed, 0, 0);
            if let Ok((train, hold)) = stratified_holdout(&labels, frac, &mut r) {
                prop_assert_eq!(hold.len(), holdout_size(labels.len(), frac).max(1));
                let mut all: Vec<usize> = train.iter().chain(&hold).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
            }
        }
    }
}

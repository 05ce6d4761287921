use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

/// Replicated stratified twofold partitions of a dataset's rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub seed: u64,
    /// `assignments[r]` holds the two folds of replication `r`, each sorted.
    pub assignments: Vec<[Vec<usize>; 2]>,
}

impl FoldPlan {
    pub fn replication_count(&self) -> usize {
        self.assignments.len()
    }

    /// Iterates `(replication, train_fold, train rows, test rows)` over all
    /// ten (for five replications) train/test evaluations.
    pub fn evaluations(&self) -> impl Iterator<Item = (usize, usize, &[usize], &[usize])> {
        self.assignments
            .iter()
            .enumerate()
            .flat_map(|(r, folds)| (0..2).map(move |k| (r, k, folds[k].as_slice(), folds[1 - k].as_slice())))
    }
}

/// Builds `replications` stratified twofold partitions.
///
/// Within each replication churners and non-churners are shuffled
/// separately and dealt alternately to the two folds, so each fold receives
/// half of each class up to one observation. Which fold receives the odd
/// observation is decided by a fair coin per class.
pub fn stratified_split(data: &Dataset, replications: usize, seed: u64) -> Result<FoldPlan> {
    if data.n_rows() < 2 {
        return Err(Error::InvalidArgument("need at least two rows to split".into()));
    }
    if replications == 0 {
        return Err(Error::InvalidArgument("replications must be positive".into()));
    }
    let churners: Vec<usize> = (0..data.n_rows()).filter(|&i| data.labels()[i] == 1).collect();
    let stayers: Vec<usize> = (0..data.n_rows()).filter(|&i| data.labels()[i] == 0).collect();
    if churners.is_empty() || stayers.is_empty() {
        return Err(Error::SingleClass);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = Vec::with_capacity(replications);
    for _ in 0..replications {
        let mut folds = [Vec::new(), Vec::new()];
        // Odd class counts: the first class's extra row goes to `start`, the
        // second class's to the other fold, keeping fold sizes within one.
        let start: usize = rng.gen_range(0..2);
        let mut next = start;
        for class in [&churners, &stayers] {
            let mut shuffled = class.clone();
            shuffled.shuffle(&mut rng);
            for i in shuffled {
                folds[next].push(i);
                next = 1 - next;
            }
        }
        folds[0].sort_unstable();
        folds[1].sort_unstable();
        assignments.push(folds);
    }
    Ok(FoldPlan { seed, assignments })
}

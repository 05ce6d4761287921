//! Synthetic churn data with a planted depth-2 structure.
//!
//! Columns are `num1..numP` (uniform on [0, 1], three decimals) followed by
//! `cat1..catQ` (uniform over the levels `a`..`d`). The churn probability
//! depends only on the first two columns through a depth-2 tree: the root
//! splits column 0, both children split column 1. A numeric planted column
//! splits at 0.5, a categorical one sends levels `a` and `b` left. The four
//! cells have churn probabilities `r + s·(-1, -1/3, 1/3, 1)` in preorder
//! with `s = 0.8·min(r, 1 - r)`, so every cell is equally likely and the
//! expected churn rate is `r`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ColumnKind, ColumnSchema, Dataset};
use crate::error::{Error, Result};
use crate::tree::{Leaf, Node, SplitRule, Tree};

const LEVELS: [&str; 4] = ["a", "b", "c", "d"];

/// A generated dataset with the tree that generated it.
#[derive(Debug, Clone)]
pub struct SynthData {
    pub dataset: Dataset,
    /// The planted tree. Leaf scores are the true churn probabilities; leaf
    /// counts are those of `dataset`.
    pub oracle: Tree,
    /// True churn probability of every row.
    pub bayes: Vec<f64>,
}

pub fn synth_churn(n: usize, churn_rate: f64, p_numeric: usize, p_categorical: usize, seed: u64) -> Result<SynthData> {
    if n < 20 {
        return Err(Error::InvalidArgument(format!("need at least 20 rows, got {n}")));
    }
    if !(churn_rate > 0.0 && churn_rate < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "churn rate must lie in (0, 1), got {churn_rate}"
        )));
    }
    if p_numeric + p_categorical < 2 {
        return Err(Error::InvalidArgument(
            "need at least two feature columns for the planted tree".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut schema = Vec::with_capacity(p_numeric + p_categorical);
    let mut columns = Vec::with_capacity(p_numeric + p_categorical);
    for j in 0..p_numeric {
        schema.push(ColumnSchema::numeric(format!("num{}", j + 1)));
        columns.push(
            (0..n)
                .map(|_| (rng.gen::<f64>() * 1000.0).round() / 1000.0)
                .collect::<Vec<_>>(),
        );
    }
    for j in 0..p_categorical {
        schema.push(ColumnSchema::categorical(
            format!("cat{}", j + 1),
            LEVELS.iter().map(|s| s.to_string()).collect(),
        ));
        columns.push((0..n).map(|_| rng.gen_range(0..LEVELS.len()) as f64).collect());
    }

    let rules = [planted_rule(&schema, &columns, 0)?, planted_rule(&schema, &columns, 1)?];
    let s = 0.8 * churn_rate.min(1.0 - churn_rate);
    let cell_rates = [
        churn_rate - s,
        churn_rate - s / 3.0,
        churn_rate + s / 3.0,
        churn_rate + s,
    ];
    let cell = |row: usize| {
        let a = usize::from(!rules[0].goes_left(columns[0][row]));
        let b = usize::from(!rules[1].goes_left(columns[1][row]));
        2 * a + b
    };
    let bayes: Vec<f64> = (0..n).map(|row| cell_rates[cell(row)]).collect();
    let labels: Vec<u8> = bayes.iter().map(|&q| u8::from(rng.gen::<f64>() < q)).collect();

    let mut counts = [(0usize, 0usize); 4];
    for (row, &y) in labels.iter().enumerate() {
        let c = &mut counts[cell(row)];
        c.0 += 1;
        c.1 += usize::from(y);
    }
    let leaf = |k: usize| {
        Node::Leaf(Leaf {
            score: cell_rates[k],
            n: counts[k].0,
            churners: counts[k].1,
        })
    };
    let mut root = Node::split(
        rules[0].clone(),
        Node::split(rules[1].clone(), leaf(0), leaf(1)),
        Node::split(rules[1].clone(), leaf(2), leaf(3)),
    );
    if let Node::Split(top) = &mut root {
        top.n = n;
        for (child, k) in [(&mut top.left, 0), (&mut top.right, 2)] {
            if let Node::Split(s) = child {
                s.n = counts[k].0 + counts[k + 1].0;
            }
        }
    }

    let dataset = Dataset::new(schema, columns, labels, "churn")?;
    let oracle = Tree::from_root(Arc::new(dataset.schema().to_vec()), root)?;
    Ok(SynthData { dataset, oracle, bayes })
}

/// Rule of planted column `c`: a numeric column at the observed midpoint
/// around 0.5, a categorical column with the first half of its levels left.
fn planted_rule(schema: &[ColumnSchema], columns: &[Vec<f64>], c: usize) -> Result<SplitRule> {
    match schema[c].kind {
        ColumnKind::Categorical => {
            let half = (schema[c].levels.len() / 2) as u32;
            Ok(SplitRule::levels(c, (0..half).collect()))
        }
        _ => {
            let below = columns[c]
                .iter()
                .copied()
                .filter(|&v| v <= 0.5)
                .fold(f64::NAN, f64::max);
            let above = columns[c].iter().copied().filter(|&v| v > 0.5).fold(f64::NAN, f64::min);
            if below.is_nan() || above.is_nan() {
                return Err(Error::InvalidArgument(format!(
                    "column `{}` has no values on one side of 0.5",
                    schema[c].name
                )));
            }
            Ok(SplitRule::cutoff(c, crate::tree::midpoint(below, above)))
        }
    }
}

//! Greedy Gini-impurity tree and penalty-based pruning, the accuracy-driven
//! comparator for the profit-driven search.

use std::sync::Arc;

use crate::data::Dataset;
use crate::error::Result;
use crate::evaluate::ProfitParams;
use crate::evolve::FitnessCache;
use crate::tree::{ColumnSplits, Node, SplitRule, SplitSpace, Tree, TreeConstraints};

/// Level subsets are enumerated exhaustively up to this many levels.
pub const EXHAUSTIVE_LEVELS: usize = 12;

/// Best split of a node and its impurity decrease.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedySplit {
    pub rule: SplitRule,
    /// Parent Gini minus the size-weighted Gini of the children.
    pub gain: f64,
}

fn gini(churners: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = churners as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

/// Impurity decrease of splitting `(c, n)` into `(cl, nl)` and the rest.
pub fn gini_gain(churners: usize, n: usize, left_churners: usize, left_n: usize) -> f64 {
    let (cr, nr) = (churners - left_churners, n - left_n);
    gini(churners, n) - (left_n as f64 * gini(left_churners, left_n) + nr as f64 * gini(cr, nr)) / n as f64
}

/// Tie tolerance when comparing gains.
const TIE: f64 = 1e-12;

/// Best Gini split of `rows` with at least `min_leaf` rows per side. Ties
/// go to the lowest column, then the lowest cutoff (or the first subset in
/// enumeration order). `None` when no split is admissible.
pub fn best_split(data: &Dataset, space: &SplitSpace, rows: &[usize], min_leaf: usize) -> Option<GreedySplit> {
    let labels = data.labels();
    let n = rows.len();
    let churners = rows.iter().filter(|&&r| labels[r] == 1).count();
    let min_leaf = min_leaf.max(1);
    let mut best: Option<GreedySplit> = None;
    let mut consider = |rule: SplitRule, gain: f64| {
        if best.as_ref().is_none_or(|b| gain > b.gain + TIE) {
            best = Some(GreedySplit { rule, gain });
        }
    };

    for c in 0..space.n_columns() {
        let values = data.column(c);
        match space.column(c) {
            ColumnSplits::Cutoffs(_) => {
                let mut sorted: Vec<(f64, u8)> = rows.iter().map(|&r| (values[r], labels[r])).collect();
                sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut left_c = 0;
                for i in 0..sorted.len().saturating_sub(1) {
                    left_c += usize::from(sorted[i].1 == 1);
                    let (a, b) = (sorted[i].0, sorted[i + 1].0);
                    let left_n = i + 1;
                    if a == b || b.is_nan() || left_n < min_leaf || n - left_n < min_leaf {
                        continue;
                    }
                    let cut = space.cutoffs_between(c, a, b)[0];
                    consider(SplitRule::cutoff(c, cut), gini_gain(churners, n, left_c, left_n));
                }
            }
            ColumnSplits::Levels(k) => {
                let mut stats = vec![(0usize, 0usize); *k];
                let mut unseen = (0usize, 0usize);
                for &r in rows {
                    let v = values[r];
                    let slot = if v.is_nan() {
                        &mut unseen
                    } else {
                        &mut stats[v as usize]
                    };
                    slot.0 += usize::from(labels[r] == 1);
                    slot.1 += 1;
                }
                let present: Vec<u32> = (0..*k as u32).filter(|&l| stats[l as usize].1 > 0).collect();
                if present.len() < 2 {
                    continue;
                }
                let mut try_subset = |left: Vec<u32>| {
                    let (lc, ln) = left
                        .iter()
                        .fold((0, 0), |(c, n), &l| (c + stats[l as usize].0, n + stats[l as usize].1));
                    if ln >= min_leaf && n - ln >= min_leaf {
                        consider(SplitRule::levels(c, left.clone()), gini_gain(churners, n, lc, ln));
                    }
                };
                if present.len() <= EXHAUSTIVE_LEVELS {
                    // The first present level always goes left, so each
                    // unordered partition is visited once.
                    let rest = present.len() - 1;
                    for mask in 0..(1u32 << rest) - 1 {
                        let left = std::iter::once(present[0])
                            .chain((0..rest).filter(|&j| mask >> j & 1 == 1).map(|j| present[j + 1]))
                            .collect();
                        try_subset(left);
                    }
                } else {
                    let mut order = present.clone();
                    order.sort_by(|&a, &b| {
                        let rate = |l: u32| stats[l as usize].0 as f64 / stats[l as usize].1 as f64;
                        rate(a).total_cmp(&rate(b)).then(a.cmp(&b))
                    });
                    for cut in 1..order.len() {
                        try_subset(order[..cut].to_vec());
                    }
                }
            }
        }
    }
    best
}

/// Greedy recursive partitioning: every node takes its best Gini split
/// while the constraints allow it and the gain exceeds `min_gain`.
pub fn fit_greedy(data: &Dataset, c: &TreeConstraints, min_gain: f64) -> Result<Tree> {
    c.validate()?;
    let space = SplitSpace::new(data);
    let rows: Vec<usize> = (0..data.n_rows()).collect();
    let mut leaves = 1;
    let root = grow(data, &space, c, min_gain, &rows, 0, &mut leaves);
    Tree::from_root(Arc::new(data.schema().to_vec()), root)?.fit_leaves(data)
}

fn grow(
    data: &Dataset,
    space: &SplitSpace,
    c: &TreeConstraints,
    min_gain: f64,
    rows: &[usize],
    depth: usize,
    leaves: &mut usize,
) -> Node {
    if depth >= c.max_depth || rows.len() < c.min_internal || *leaves >= c.max_leaves() {
        return Node::leaf();
    }
    let Some(split) = best_split(data, space, rows, c.min_leaf) else {
        return Node::leaf();
    };
    if split.gain <= min_gain {
        return Node::leaf();
    }
    *leaves += 1;
    let v = split.rule.variable;
    let (left, right): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| split.rule.goes_left(data.value(r, v)));
    let l = grow(data, space, c, min_gain, &left, depth + 1, leaves);
    let r = grow(data, space, c, min_gain, &right, depth + 1, leaves);
    Node::split(split.rule, l, r)
}

/// Collapses, deepest first, every internal node with two leaf children
/// whose removal does not lower `EMPC - λ·M` on `data`, until no such node
/// is left.
pub fn prune_greedy(tree: &Tree, data: &Dataset, lambda: f64, p: &ProfitParams) -> Result<Tree> {
    let cache = FitnessCache::default();
    let mut current = tree.fit_leaves(data)?;
    let mut current_fit = cache.fitness(&current, p, lambda)?;
    'outer: loop {
        let mut candidates: Vec<_> = current.nodes().into_iter().filter(|i| i.has_leaf_children).collect();
        candidates.sort_by(|a, b| b.depth.cmp(&a.depth).then(a.id.cmp(&b.id)));
        for info in candidates {
            let mut collapsed = current.clone();
            *collapsed.node_mut(info.id).expect("node id") = Node::leaf();
            collapsed.refit(data)?;
            let f = cache.fitness(&collapsed, p, lambda)?;
            if f >= current_fit {
                current = collapsed;
                current_fit = f;
                continue 'outer;
            }
        }
        return Ok(current);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_churn, ColumnSchema};
    use crate::evolve::fitness;
    use crate::tree::SplitTest;

    fn one_column(values: Vec<f64>, labels: Vec<u8>) -> Dataset {
        Dataset::new(vec![ColumnSchema::numeric("x")], vec![values], labels, "y").unwrap()
    }

    #[test]
    fn gini_gain_values() {
        assert_eq!(gini_gain(5, 10, 5, 5), 0.5);
        assert_eq!(gini_gain(5, 10, 0, 5), 0.5);
        assert_eq!(gini_gain(4, 8, 2, 4), 0.0);
    }

    #[test]
    fn pure_data_gives_single_leaf() {
        let d = one_column((0..50).map(f64::from).collect(), vec![1; 50]);
        let t = fit_greedy(&d, &TreeConstraints::default(), 0.0).unwrap();
        assert_eq!(t.leaf_count(), 1);
    }

    #[test]
    fn separable_data_gives_one_split() {
        let d = one_column(
            (0..60).map(f64::from).collect(),
            (0..60).map(|i| u8::from(i >= 25)).collect(),
        );
        let t = fit_greedy(&d, &TreeConstraints::default(), 0.0).unwrap();
        assert_eq!(t.leaf_count(), 2);
        let Node::Split(s) = t.root() else { panic!() };
        assert_eq!(s.rule, SplitRule::cutoff(0, 24.5));
        assert_eq!(t.leaf_counts(), vec![(0, 25), (35, 0)]);
    }

    #[test]
    fn ties_go_to_lowest_column() {
        let x: Vec<f64> = (0..40).map(f64::from).collect();
        let labels: Vec<u8> = (0..40).map(|i| u8::from(i >= 20)).collect();
        let d = Dataset::new(
            vec![ColumnSchema::numeric("a"), ColumnSchema::numeric("b")],
            vec![x.clone(), x],
            labels,
            "y",
        )
        .unwrap();
        let space = SplitSpace::new(&d);
        let rows: Vec<usize> = (0..40).collect();
        assert_eq!(best_split(&d, &space, &rows, 1).unwrap().rule.variable, 0);
    }

    #[test]
    fn categorical_subset_split() {
        let levels: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let values: Vec<f64> = (0..80).map(|i| f64::from(i % 4)).collect();
        // Levels a and c churn.
        let labels = values.iter().map(|&v| u8::from(v == 0.0 || v == 2.0)).collect();
        let d = Dataset::new(vec![ColumnSchema::categorical("g", levels)], vec![values], labels, "y").unwrap();
        let t = fit_greedy(&d, &TreeConstraints::default(), 0.0).unwrap();
        let Node::Split(s) = t.root() else { panic!() };
        assert_eq!(s.rule.test, SplitTest::Levels(vec![0, 2]));
        assert_eq!(t.leaf_count(), 2);
    }

    #[test]
    fn greedy_tree_meets_constraints() {
        let d = synth_churn(1000, 0.3, 3, 2, 1).unwrap().dataset;
        for c in [
            TreeConstraints::default(),
            TreeConstraints {
                max_depth: 3,
                ..TreeConstraints::default()
            },
            TreeConstraints {
                max_leaves: Some(5),
                ..TreeConstraints::default()
            },
        ] {
            let t = fit_greedy(&d, &c, 0.0).unwrap();
            assert!(t.check_constraints(&d, &c).is_empty());
            assert!(t.leaf_count() > 1);
        }
    }

    #[test]
    fn prune_cases() {
        let d = synth_churn(1000, 0.3, 3, 2, 2).unwrap().dataset;
        let p = ProfitParams::default();
        let t = fit_greedy(&d, &TreeConstraints::default(), 0.0).unwrap();

        let huge = prune_greedy(&t, &d, 1000.0, &p).unwrap();
        assert_eq!(huge.leaf_count(), 1);

        let stump = Tree::stump(Arc::new(d.schema().to_vec())).fit_leaves(&d).unwrap();
        assert_eq!(prune_greedy(&stump, &d, 0.1, &p).unwrap(), stump);

        for lambda in [0.0, 0.05, 0.2] {
            let pruned = prune_greedy(&t, &d, lambda, &p).unwrap();
            assert!(fitness(&pruned, &d, &p, lambda).unwrap() >= fitness(&t, &d, &p, lambda).unwrap());
            assert_eq!(prune_greedy(&pruned, &d, lambda, &p).unwrap(), pruned);
        }
    }

    #[test]
    fn prune_keeps_profitable_split() {
        let d = one_column(
            (0..60).map(f64::from).collect(),
            (0..60).map(|i| u8::from(i >= 40)).collect(),
        );
        let t = fit_greedy(&d, &TreeConstraints::default(), 0.0).unwrap();
        assert_eq!(prune_greedy(&t, &d, 0.0, &ProfitParams::default()).unwrap(), t);
    }
}

//! Variation operators. Each one maps a constraint-satisfying tree to a
//! constraint-satisfying tree: an attempt that breaks a constraint (or
//! leaves a region empty) is retried, and after [`MAX_ATTEMPTS`] failures
//! the input comes back unchanged.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::data::Dataset;
use crate::tree::{partition, ColumnSplits, Node, SplitRule, SplitSpace, SplitTest, Tree, TreeConstraints};

pub const MAX_ATTEMPTS: usize = 10;

/// Training data, its split space and the constraints every tree must meet.
#[derive(Debug, Clone)]
pub struct Variation<'a> {
    pub data: &'a Dataset,
    pub space: SplitSpace,
    pub constraints: TreeConstraints,
}

impl<'a> Variation<'a> {
    pub fn new(data: &'a Dataset, constraints: TreeConstraints) -> Self {
        Variation {
            data,
            space: SplitSpace::new(data),
            constraints,
        }
    }

    /// Refits `tree` and keeps it only if it meets the constraints.
    fn accept(&self, mut tree: Tree) -> Option<Tree> {
        tree.refit(self.data).ok()?;
        tree.satisfies(&self.constraints).then_some(tree)
    }

    /// A random rule that sends at least one of `rows` each way, or `None`
    /// if no column can separate them. The variable is uniform over usable
    /// columns; a cutoff is uniform over the midpoints inside the rows'
    /// range; a level subset puts each level left with probability 1/2.
    pub fn random_rule<R: Rng + ?Sized>(&self, rows: &[u32], rng: &mut R) -> Option<SplitRule> {
        enum Usable<'s> {
            Cuts(&'s [f64]),
            Levels(Vec<bool>),
        }
        let mut usable = Vec::new();
        for c in 0..self.space.n_columns() {
            let values = self.data.column(c);
            match self.space.column(c) {
                ColumnSplits::Cutoffs(_) => {
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    for &r in rows {
                        let v = values[r as usize];
                        if !v.is_nan() {
                            lo = lo.min(v);
                            hi = hi.max(v);
                        }
                    }
                    let cuts = self.space.cutoffs_between(c, lo, hi);
                    if !cuts.is_empty() {
                        usable.push((c, Usable::Cuts(cuts)));
                    }
                }
                ColumnSplits::Levels(k) => {
                    let mut present = vec![false; *k];
                    for &r in rows {
                        let v = values[r as usize];
                        if !v.is_nan() {
                            present[v as usize] = true;
                        }
                    }
                    if present.iter().filter(|&&p| p).count() >= 2 {
                        usable.push((c, Usable::Levels(present)));
                    }
                }
            }
        }
        let (c, domain) = usable.choose(rng)?;
        Some(match domain {
            Usable::Cuts(cuts) => SplitRule::cutoff(*c, *cuts.choose(rng)?),
            Usable::Levels(present) => loop {
                let left: Vec<bool> = present.iter().map(|_| rng.gen::<bool>()).collect();
                let mut sides = present.iter().zip(&left).filter(|(&p, _)| p).map(|(_, &l)| l);
                let first = sides.next().expect("two present levels");
                if sides.any(|l| l != first) {
                    let set = (0..left.len() as u32).filter(|&l| left[l as usize]).collect();
                    break SplitRule::levels(*c, set);
                }
            },
        })
    }

    /// Rows of the training data reaching node `id`, and its depth.
    pub fn rows_at(&self, tree: &Tree, id: usize) -> (Vec<u32>, usize) {
        let mut rows: Vec<u32> = (0..self.data.n_rows() as u32).collect();
        let mut node = tree.root();
        let (mut cur, mut depth) = (0, 0);
        while cur != id {
            let Node::Split(s) = node else {
                panic!("node {id} not in tree");
            };
            let mid = partition(&mut rows, |r| {
                s.rule.goes_left(self.data.value(r as usize, s.rule.variable))
            });
            let left_end = cur + s.left.node_count();
            if id <= left_end {
                rows.truncate(mid);
                node = &s.left;
                cur += 1;
            } else {
                rows.drain(..mid);
                node = &s.right;
                cur = left_end + 1;
            }
            depth += 1;
        }
        (rows, depth)
    }

    /// Attaches a random split to a random leaf that can still be split.
    pub fn split<R: Rng + ?Sized>(&self, tree: &Tree, rng: &mut R) -> Tree {
        let c = &self.constraints;
        if tree.leaf_count() >= c.max_leaves() {
            return tree.clone();
        }
        let min_rows = c.min_internal.max(2 * c.min_leaf);
        let candidates: Vec<usize> = tree
            .nodes()
            .into_iter()
            .filter(|info| {
                info.is_leaf && info.depth < c.max_depth && tree.node(info.id).is_some_and(|n| n.n() >= min_rows)
            })
            .map(|info| info.id)
            .collect();
        for _ in 0..MAX_ATTEMPTS {
            let Some(&id) = candidates.choose(rng) else {
                break;
            };
            let (rows, _) = self.rows_at(tree, id);
            let Some(rule) = self.random_rule(&rows, rng) else {
                continue;
            };
            let mut child = tree.clone();
            *child.node_mut(id).expect("leaf id") = Node::split(rule, Node::leaf(), Node::leaf());
            if let Some(t) = self.accept(child) {
                return t;
            }
        }
        tree.clone()
    }

    /// Collapses a random internal node whose children are both leaves.
    pub fn prune<R: Rng + ?Sized>(&self, tree: &Tree, rng: &mut R) -> Tree {
        let candidates: Vec<usize> = tree
            .nodes()
            .into_iter()
            .filter(|info| info.has_leaf_children)
            .map(|info| info.id)
            .collect();
        for _ in 0..MAX_ATTEMPTS {
            let Some(&id) = candidates.choose(rng) else {
                break;
            };
            let mut child = tree.clone();
            *child.node_mut(id).expect("node id") = Node::leaf();
            if let Some(t) = self.accept(child) {
                return t;
            }
        }
        tree.clone()
    }

    fn internal_ids(tree: &Tree) -> Vec<usize> {
        tree.nodes()
            .into_iter()
            .filter(|info| !info.is_leaf)
            .map(|info| info.id)
            .collect()
    }

    /// Replaces the variable and rule of a random internal node.
    pub fn major<R: Rng + ?Sized>(&self, tree: &Tree, rng: &mut R) -> Tree {
        let candidates = Self::internal_ids(tree);
        for _ in 0..MAX_ATTEMPTS {
            let Some(&id) = candidates.choose(rng) else {
                break;
            };
            let (rows, _) = self.rows_at(tree, id);
            let Some(rule) = self.random_rule(&rows, rng) else {
                continue;
            };
            let mut child = tree.clone();
            if let Some(Node::Split(s)) = child.node_mut(id) {
                s.rule = rule;
            }
            if let Some(t) = self.accept(child) {
                return t;
            }
        }
        tree.clone()
    }

    /// Nudges the rule of a random internal node: a cutoff moves to the
    /// neighbouring midpoint, a level subset flips one level.
    pub fn minor<R: Rng + ?Sized>(&self, tree: &Tree, rng: &mut R) -> Tree {
        let candidates = Self::internal_ids(tree);
        for _ in 0..MAX_ATTEMPTS {
            let Some(&id) = candidates.choose(rng) else {
                break;
            };
            let Some(Node::Split(s)) = tree.node(id) else {
                unreachable!("internal id");
            };
            let Some(rule) = self.nudge(&s.rule, rng) else {
                continue;
            };
            let mut child = tree.clone();
            if let Some(Node::Split(s)) = child.node_mut(id) {
                s.rule = rule;
            }
            if let Some(t) = self.accept(child) {
                return t;
            }
        }
        tree.clone()
    }

    /// One minor step of `rule`, or `None` when the drawn step is impossible.
    pub fn nudge<R: Rng + ?Sized>(&self, rule: &SplitRule, rng: &mut R) -> Option<SplitRule> {
        match &rule.test {
            SplitTest::Cutoff(cut) => {
                let up = rng.gen::<bool>();
                let next = self.space.step_cutoff(rule.variable, *cut, up)?;
                Some(SplitRule::cutoff(rule.variable, next))
            }
            SplitTest::Levels(set) => {
                let ColumnSplits::Levels(k) = self.space.column(rule.variable) else {
                    return None;
                };
                let level = rng.gen_range(0..*k as u32);
                let toggled: Vec<u32> = if set.contains(&level) {
                    set.iter().copied().filter(|&l| l != level).collect()
                } else {
                    set.iter().copied().chain(std::iter::once(level)).collect()
                };
                if toggled.is_empty() || toggled.len() >= *k {
                    return None;
                }
                Some(SplitRule::levels(rule.variable, toggled))
            }
        }
    }

    /// Exchanges random subtrees of `a` and `b`. A child that cannot be made
    /// feasible within the attempt budget is replaced by its parent.
    pub fn crossover<R: Rng + ?Sized>(&self, a: &Tree, b: &Tree, rng: &mut R) -> (Tree, Tree) {
        let (mut child_a, mut child_b) = (None, None);
        for _ in 0..MAX_ATTEMPTS {
            let ia = rng.gen_range(0..a.node_count());
            let ib = rng.gen_range(0..b.node_count());
            let (x, y) = swap_subtrees(a, ia, b, ib);
            if child_a.is_none() {
                child_a = self.accept(x);
            }
            if child_b.is_none() {
                child_b = self.accept(y);
            }
            if child_a.is_some() && child_b.is_some() {
                break;
            }
        }
        (
            child_a.unwrap_or_else(|| a.clone()),
            child_b.unwrap_or_else(|| b.clone()),
        )
    }
}

/// `a` with node `ia` replaced by `b`'s subtree at `ib`, and vice versa.
/// Leaf statistics are carried over unchanged.
pub fn swap_subtrees(a: &Tree, ia: usize, b: &Tree, ib: usize) -> (Tree, Tree) {
    let mut x = a.clone();
    let mut y = b.clone();
    let sub_a = a.node(ia).expect("node in a").clone();
    let sub_b = b.node(ib).expect("node in b").clone();
    *x.node_mut(ia).expect("node in a") = sub_b;
    *y.node_mut(ib).expect("node in b") = sub_a;
    (x, y)
}

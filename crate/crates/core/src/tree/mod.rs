//! Binary classification trees with leaf churn-rate scores.
//!
//! A tree with `M` leaves has `M - 1` internal nodes. Nodes are addressed by
//! their preorder index (root = 0). Routing conventions:
//!
//! - numeric and ordered columns: `value <= cutoff` goes left;
//! - categorical columns: a level in the rule's subset goes left;
//! - a level unknown to the tree's schema (`NaN`) goes right.

mod export;
mod space;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{ColumnKind, ColumnSchema, Dataset};
use crate::error::{Error, Result};

pub use export::{ExportFormat, TreeFile, TREE_FORMAT, TREE_FORMAT_VERSION};
pub(crate) use space::midpoint;
pub use space::{ColumnSplits, SplitSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTest {
    /// Left iff `value <= cutoff`.
    Cutoff(f64),
    /// Left iff the level index is in this sorted, non-empty proper subset.
    Levels(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRule {
    pub variable: usize,
    #[serde(flatten)]
    pub test: SplitTest,
}

impl SplitRule {
    pub fn cutoff(variable: usize, cutoff: f64) -> Self {
        SplitRule {
            variable,
            test: SplitTest::Cutoff(cutoff),
        }
    }

    pub fn levels(variable: usize, mut levels: Vec<u32>) -> Self {
        levels.sort_unstable();
        levels.dedup();
        SplitRule {
            variable,
            test: SplitTest::Levels(levels),
        }
    }

    #[inline]
    pub fn goes_left(&self, value: f64) -> bool {
        match &self.test {
            SplitTest::Cutoff(c) => value <= *c,
            SplitTest::Levels(set) => !value.is_nan() && set.binary_search(&(value as u32)).is_ok(),
        }
    }

    fn is_unseen(&self, value: f64) -> bool {
        value.is_nan()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    /// Churn fraction of the training rows in this leaf.
    pub score: f64,
    pub n: usize,
    pub churners: usize,
}

impl Leaf {
    pub fn unfitted() -> Self {
        Leaf {
            score: 0.0,
            n: 0,
            churners: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub rule: SplitRule,
    /// Training rows reaching this node.
    pub n: usize,
    pub left: Node,
    pub right: Node,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Node {
    Leaf(Leaf),
    Split(Box<Split>),
}

impl Node {
    pub fn leaf() -> Self {
        Node::Leaf(Leaf::unfitted())
    }

    pub fn split(rule: SplitRule, left: Node, right: Node) -> Self {
        Node::Split(Box::new(Split {
            rule,
            n: 0,
            left,
            right,
        }))
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf(_))
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Split(s) => s.left.leaf_count() + s.right.leaf_count(),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Split(s) => 1 + s.left.node_count() + s.right.node_count(),
        }
    }

    /// Number of splits on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Split(s) => 1 + s.left.depth().max(s.right.depth()),
        }
    }

    /// Training rows reaching this node.
    pub fn n(&self) -> usize {
        match self {
            Node::Leaf(l) => l.n,
            Node::Split(s) => s.n,
        }
    }

    fn collect_info(&self, depth: usize, out: &mut Vec<NodeInfo>) {
        let id = out.len();
        match self {
            Node::Leaf(_) => out.push(NodeInfo {
                id,
                depth,
                is_leaf: true,
                has_leaf_children: false,
            }),
            Node::Split(s) => {
                out.push(NodeInfo {
                    id,
                    depth,
                    is_leaf: false,
                    has_leaf_children: s.left.is_leaf() && s.right.is_leaf(),
                });
                s.left.collect_info(depth + 1, out);
                s.right.collect_info(depth + 1, out);
            }
        }
    }

    fn get(&self, target: usize, next: &mut usize) -> Option<&Node> {
        if *next == target {
            return Some(self);
        }
        *next += 1;
        match self {
            Node::Leaf(_) => None,
            Node::Split(s) => s.left.get(target, next).or_else(|| s.right.get(target, next)),
        }
    }

    fn get_mut(&mut self, target: usize, next: &mut usize) -> Option<&mut Node> {
        if *next == target {
            return Some(self);
        }
        *next += 1;
        match self {
            Node::Leaf(_) => None,
            Node::Split(s) => {
                if let Some(found) = s.left.get_mut(target, next) {
                    return Some(found);
                }
                s.right.get_mut(target, next)
            }
        }
    }

    fn leaves<'a>(&'a self, out: &mut Vec<&'a Leaf>) {
        match self {
            Node::Leaf(l) => out.push(l),
            Node::Split(s) => {
                s.left.leaves(out);
                s.right.leaves(out);
            }
        }
    }
}

/// Position and shape of one node, in preorder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeInfo {
    pub id: usize,
    pub depth: usize,
    pub is_leaf: bool,
    /// Internal node whose two children are leaves (prunable).
    pub has_leaf_children: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeConstraints {
    /// Minimum training rows for a node to carry a split.
    pub min_internal: usize,
    pub min_leaf: usize,
    pub max_depth: usize,
    /// Defaults to `2^max_depth` when `None`.
    pub max_leaves: Option<usize>,
}

impl Default for TreeConstraints {
    fn default() -> Self {
        TreeConstraints {
            min_internal: 20,
            min_leaf: 7,
            max_depth: 9,
            max_leaves: None,
        }
    }
}

impl TreeConstraints {
    pub fn max_leaves(&self) -> usize {
        self.max_leaves
            .unwrap_or_else(|| 1usize.checked_shl(self.max_depth as u32).unwrap_or(usize::MAX))
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_internal == 0 || self.min_leaf == 0 || self.max_depth == 0 || self.max_leaves() == 0 {
            return Err(Error::InvalidArgument("tree constraints must all be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    LeafTooSmall { node: usize, n: usize, min: usize },
    InternalTooSmall { node: usize, n: usize, min: usize },
    TooDeep { depth: usize, max: usize },
    TooManyLeaves { leaves: usize, max: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LeafTooSmall { node, n, min } => {
                write!(f, "leaf node {node} has {n} rows (minimum {min})")
            }
            Violation::InternalTooSmall { node, n, min } => {
                write!(f, "internal node {node} has {n} rows (minimum {min})")
            }
            Violation::TooDeep { depth, max } => write!(f, "depth {depth} exceeds {max}"),
            Violation::TooManyLeaves { leaves, max } => write!(f, "{leaves} leaves exceed {max}"),
        }
    }
}

/// Counts of prediction-time routing events.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PredictionReport {
    /// Rows that met at least one split on a level unknown to the tree.
    pub unseen_level_rows: usize,
}

/// A classification tree together with the feature schema it was built on.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    columns: Arc<Vec<ColumnSchema>>,
    root: Node,
}

impl Tree {
    /// Tree with an arbitrary structure; leaf statistics are whatever `root`
    /// carries (zero for unfitted leaves).
    pub fn from_root(columns: Arc<Vec<ColumnSchema>>, root: Node) -> Result<Self> {
        let tree = Tree { columns, root };
        tree.validate_rules()?;
        Ok(tree)
    }

    /// Single unfitted leaf.
    pub fn stump(columns: Arc<Vec<ColumnSchema>>) -> Self {
        Tree {
            columns,
            root: Node::leaf(),
        }
    }

    pub fn columns(&self) -> &[ColumnSchema] {
        &self.columns
    }

    pub fn shared_columns(&self) -> &Arc<Vec<ColumnSchema>> {
        &self.columns
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn root_mut(&mut self) -> &mut Node {
        &mut self.root
    }

    pub fn leaf_count(&self) -> usize {
        self.root.leaf_count()
    }

    pub fn internal_count(&self) -> usize {
        self.root.node_count() - self.root.leaf_count()
    }

    pub fn node_count(&self) -> usize {
        self.root.node_count()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Preorder description of every node.
    pub fn nodes(&self) -> Vec<NodeInfo> {
        let mut out = Vec::with_capacity(self.root.node_count());
        self.root.collect_info(0, &mut out);
        out
    }

    pub fn node(&self, id: usize) -> Option<&Node> {
        self.root.get(id, &mut 0)
    }

    pub fn node_mut(&mut self, id: usize) -> Option<&mut Node> {
        self.root.get_mut(id, &mut 0)
    }

    /// Leaves in preorder.
    pub fn leaves(&self) -> Vec<&Leaf> {
        let mut out = Vec::with_capacity(self.leaf_count());
        self.root.leaves(&mut out);
        out
    }

    fn validate_rules(&self) -> Result<()> {
        fn walk(node: &Node, columns: &[ColumnSchema]) -> Result<()> {
            if let Node::Split(s) = node {
                let col = columns
                    .get(s.rule.variable)
                    .ok_or_else(|| Error::Schema(format!("split variable {} out of range", s.rule.variable)))?;
                match (&s.rule.test, col.kind) {
                    (SplitTest::Cutoff(c), kind) if kind.is_cutoff() && c.is_finite() => {}
                    (SplitTest::Levels(set), ColumnKind::Categorical) => {
                        let k = col.levels.len();
                        if set.is_empty() || set.len() >= k || set.iter().any(|&l| l as usize >= k) {
                            return Err(Error::Schema(format!(
                                "level subset {set:?} is not a non-empty proper subset of `{}`",
                                col.name
                            )));
                        }
                        if set.windows(2).any(|w| w[0] >= w[1]) {
                            return Err(Error::Schema("level subset must be sorted".into()));
                        }
                    }
                    _ => {
                        return Err(Error::Schema(format!(
                            "split rule does not match the kind of column `{}`",
                            col.name
                        )))
                    }
                }
                walk(&s.left, columns)?;
                walk(&s.right, columns)?;
            }
            Ok(())
        }
        walk(&self.root, &self.columns)
    }

    /// Errors unless `data` carries exactly this tree's feature schema.
    pub fn check_schema(&self, data: &Dataset) -> Result<()> {
        if data.schema() != self.columns.as_slice() {
            return Err(Error::SchemaMismatch(
                "data columns differ from the tree's columns".into(),
            ));
        }
        Ok(())
    }

    /// Recomputes every node's row count and every leaf's churn fraction
    /// from `data`. Fails if some leaf receives no rows.
    pub fn fit_leaves(&self, data: &Dataset) -> Result<Tree> {
        let mut fitted = self.clone();
        fitted.refit(data)?;
        Ok(fitted)
    }

    /// In-place variant of [`Tree::fit_leaves`].
    pub fn refit(&mut self, data: &Dataset) -> Result<()> {
        if data.n_features() != self.columns.len() {
            return Err(Error::SchemaMismatch(format!(
                "tree has {} columns, data has {}",
                self.columns.len(),
                data.n_features()
            )));
        }
        match self.count_rows(data) {
            Some(leaf) => Err(Error::EmptyLeaf { leaf }),
            None => Ok(()),
        }
    }

    /// Routes `data` and stores counts; returns the first empty leaf, if any.
    fn count_rows(&mut self, data: &Dataset) -> Option<usize> {
        let mut rows: Vec<u32> = (0..data.n_rows() as u32).collect();
        let mut leaf_index = 0;
        let mut first_empty = None;
        fit_node(&mut self.root, data, &mut rows, &mut leaf_index, &mut first_empty);
        first_empty
    }

    /// Index (in preorder of leaves) of the leaf that `x` falls in.
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut node = &self.root;
        let mut offset = 0;
        loop {
            match node {
                Node::Leaf(_) => return offset,
                Node::Split(s) => {
                    if s.rule.goes_left(x[s.rule.variable]) {
                        node = &s.left;
                    } else {
                        offset += s.left.leaf_count();
                        node = &s.right;
                    }
                }
            }
        }
    }

    fn leaf_for(&self, x: &[f64]) -> (&Leaf, bool) {
        let mut node = &self.root;
        let mut unseen = false;
        loop {
            match node {
                Node::Leaf(l) => return (l, unseen),
                Node::Split(s) => {
                    let v = x[s.rule.variable];
                    unseen |= s.rule.is_unseen(v);
                    node = if s.rule.goes_left(v) { &s.left } else { &s.right };
                }
            }
        }
    }

    /// Churn score of a feature vector: the fraction of the leaf it lands in.
    pub fn score(&self, x: &[f64]) -> f64 {
        self.leaf_for(x).0.score
    }

    /// 0 iff `score(x) <= t`.
    pub fn classify(&self, x: &[f64], t: f64) -> u8 {
        u8::from(self.score(x) > t)
    }

    /// Scores of every row in `data`.
    pub fn score_dataset(&self, data: &Dataset) -> Vec<f64> {
        self.score_dataset_with_report(data).0
    }

    pub fn score_dataset_with_report(&self, data: &Dataset) -> (Vec<f64>, PredictionReport) {
        let mut report = PredictionReport::default();
        let mut x = vec![0.0; data.n_features()];
        let scores = (0..data.n_rows())
            .map(|row| {
                for (c, slot) in x.iter_mut().enumerate() {
                    *slot = data.value(row, c);
                }
                let (leaf, unseen) = self.leaf_for(&x);
                report.unseen_level_rows += usize::from(unseen);
                leaf.score
            })
            .collect();
        (scores, report)
    }

    /// Leaf index (preorder) of every row of `data`.
    pub fn leaf_assignment(&self, data: &Dataset) -> Vec<usize> {
        let mut out = vec![0usize; data.n_rows()];
        let mut rows: Vec<u32> = (0..data.n_rows() as u32).collect();
        assign_node(&self.root, data, &mut rows, 0, &mut out);
        out
    }

    /// Every violated constraint when the tree is routed over `data`.
    pub fn check_constraints(&self, data: &Dataset, c: &TreeConstraints) -> Vec<Violation> {
        let mut counted = self.clone();
        let mut violations = Vec::new();
        // An empty leaf shows up as a leaf-size violation.
        counted.count_rows(data);
        let infos = counted.nodes();
        for info in &infos {
            let node = counted.node(info.id).expect("preorder id");
            let n = node.n();
            if info.is_leaf && n < c.min_leaf {
                violations.push(Violation::LeafTooSmall {
                    node: info.id,
                    n,
                    min: c.min_leaf,
                });
            }
            if !info.is_leaf && n < c.min_internal {
                violations.push(Violation::InternalTooSmall {
                    node: info.id,
                    n,
                    min: c.min_internal,
                });
            }
        }
        let depth = counted.depth();
        if depth > c.max_depth {
            violations.push(Violation::TooDeep {
                depth,
                max: c.max_depth,
            });
        }
        let leaves = counted.leaf_count();
        if leaves > c.max_leaves() {
            violations.push(Violation::TooManyLeaves {
                leaves,
                max: c.max_leaves(),
            });
        }
        violations
    }

    /// Constraint check against the row counts already stored in the tree.
    pub fn satisfies(&self, c: &TreeConstraints) -> bool {
        fn walk(node: &Node, c: &TreeConstraints) -> bool {
            match node {
                Node::Leaf(l) => l.n >= c.min_leaf,
                Node::Split(s) => s.n >= c.min_internal && walk(&s.left, c) && walk(&s.right, c),
            }
        }
        self.depth() <= c.max_depth && self.leaf_count() <= c.max_leaves() && walk(&self.root, c)
    }

    /// Per-leaf `(churners, non-churners)` counts in preorder.
    pub fn leaf_counts(&self) -> Vec<(usize, usize)> {
        self.leaves().iter().map(|l| (l.churners, l.n - l.churners)).collect()
    }
}

fn fit_node(
    node: &mut Node,
    data: &Dataset,
    rows: &mut [u32],
    leaf_index: &mut usize,
    first_empty: &mut Option<usize>,
) {
    match node {
        Node::Leaf(leaf) => {
            if rows.is_empty() && first_empty.is_none() {
                *first_empty = Some(*leaf_index);
            }
            *leaf_index += 1;
            let labels = data.labels();
            let churners = rows.iter().filter(|&&r| labels[r as usize] == 1).count();
            let score = if rows.is_empty() {
                0.0
            } else {
                churners as f64 / rows.len() as f64
            };
            *leaf = Leaf {
                score,
                n: rows.len(),
                churners,
            };
        }
        Node::Split(s) => {
            s.n = rows.len();
            let mid = partition(rows, |r| s.rule.goes_left(data.value(r as usize, s.rule.variable)));
            let (left, right) = rows.split_at_mut(mid);
            fit_node(&mut s.left, data, left, leaf_index, first_empty);
            fit_node(&mut s.right, data, right, leaf_index, first_empty);
        }
    }
}

fn assign_node(node: &Node, data: &Dataset, rows: &mut [u32], offset: usize, out: &mut [usize]) {
    match node {
        Node::Leaf(_) => {
            for &r in rows.iter() {
                out[r as usize] = offset;
            }
        }
        Node::Split(s) => {
            let mid = partition(rows, |r| s.rule.goes_left(data.value(r as usize, s.rule.variable)));
            let (left, right) = rows.split_at_mut(mid);
            assign_node(&s.left, data, left, offset, out);
            assign_node(&s.right, data, right, offset + s.left.leaf_count(), out);
        }
    }
}

/// Moves rows satisfying `pred` to the front; returns their count.
pub(crate) fn partition(rows: &mut [u32], pred: impl Fn(u32) -> bool) -> usize {
    let mut mid = 0;
    for i in 0..rows.len() {
        if pred(rows[i]) {
            rows.swap(mid, i);
            mid += 1;
        }
    }
    mid
}

//! JSON, Graphviz DOT and plain-text renderings of a tree.
//!
//! JSON layout (version 1):
//!
//! ```json
//! {
//!   "format": "proftree-tree",
//!   "version": 1,
//!   "columns": [{"name": "x", "kind": "numeric"}, ...],
//!   "root": {"split": {"variable": 0, "cutoff": 0.5, "n": 100,
//!                      "left": {"leaf": {"score": 0.1, "n": 60, "churners": 6}},
//!                      "right": {...}}}
//! }
//! ```
//!
//! Categorical rules carry `"levels": [i, ...]`, the indices (into the
//! column's level list) that go left.

use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Node, SplitRule, SplitTest, Tree};
use crate::data::{ColumnKind, ColumnSchema};
use crate::error::{Error, Result};

pub const TREE_FORMAT: &str = "proftree-tree";
pub const TREE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeFile {
    pub format: String,
    pub version: u32,
    pub columns: Vec<ColumnSchema>,
    pub root: Node,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Dot,
    Text,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ExportFormat::Json),
            "dot" => Ok(ExportFormat::Dot),
            "text" | "txt" => Ok(ExportFormat::Text),
            other => Err(Error::InvalidArgument(format!("unknown export format `{other}`"))),
        }
    }
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Json => "json",
            ExportFormat::Dot => "dot",
            ExportFormat::Text => "txt",
        }
    }
}

impl Tree {
    pub fn export(&self, format: ExportFormat) -> String {
        match format {
            ExportFormat::Json => self.to_json(),
            ExportFormat::Dot => self.to_dot(),
            ExportFormat::Text => self.to_text(),
        }
    }

    pub fn to_json(&self) -> String {
        let file = TreeFile {
            format: TREE_FORMAT.into(),
            version: TREE_FORMAT_VERSION,
            columns: self.columns.as_ref().clone(),
            root: self.root.clone(),
        };
        let mut out = serde_json::to_string_pretty(&file).expect("tree serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Tree> {
        let file: TreeFile = serde_json::from_str(text)?;
        if file.format != TREE_FORMAT {
            return Err(Error::Schema(format!("not a tree file (format `{}`)", file.format)));
        }
        if file.version != TREE_FORMAT_VERSION {
            return Err(Error::Schema(format!(
                "unsupported tree format version {}",
                file.version
            )));
        }
        Tree::from_root(Arc::new(file.columns), file.root)
    }

    /// Condition under which a row takes the left (`left == true`) or right
    /// branch of `rule`, e.g. `age <= 41.5` or `region in {north, east}`.
    pub fn describe_rule(&self, rule: &SplitRule, left: bool) -> String {
        let col = &self.columns[rule.variable];
        match (&rule.test, col.kind) {
            (SplitTest::Cutoff(c), ColumnKind::Ordered) => {
                let rank = (c.floor().max(0.0) as usize).min(col.levels.len().saturating_sub(1));
                let level = col.levels.get(rank).map(String::as_str).unwrap_or("?");
                format!("{} {} {level}", col.name, if left { "<=" } else { ">" })
            }
            (SplitTest::Cutoff(c), _) => format!("{} {} {c}", col.name, if left { "<=" } else { ">" }),
            (SplitTest::Levels(set), _) => {
                let names: Vec<&str> = set
                    .iter()
                    .filter_map(|&l| col.levels.get(l as usize).map(String::as_str))
                    .collect();
                format!(
                    "{} {} {{{}}}",
                    col.name,
                    if left { "in" } else { "not in" },
                    names.join(", ")
                )
            }
        }
    }

    fn to_dot(&self) -> String {
        fn escape(s: &str) -> String {
            s.replace('\\', "\\\\").replace('"', "\\\"")
        }
        fn walk(tree: &Tree, node: &Node, next: &mut usize, out: &mut String) -> usize {
            let id = *next;
            *next += 1;
            match node {
                Node::Leaf(l) => {
                    let _ = writeln!(out, "  n{id} [shape=box, label=\"p = {:.4}\\nN = {}\"];", l.score, l.n);
                }
                Node::Split(s) => {
                    let name = &tree.columns[s.rule.variable].name;
                    let _ = writeln!(
                        out,
                        "  n{id} [shape=ellipse, label=\"{}\\nN = {}\"];",
                        escape(name),
                        s.n
                    );
                    let left = walk(tree, &s.left, next, out);
                    let right = walk(tree, &s.right, next, out);
                    let _ = writeln!(
                        out,
                        "  n{id} -> n{left} [label=\"{}\"];",
                        escape(&tree.describe_rule(&s.rule, true))
                    );
                    let _ = writeln!(
                        out,
                        "  n{id} -> n{right} [label=\"{}\"];",
                        escape(&tree.describe_rule(&s.rule, false))
                    );
                }
            }
            id
        }
        let mut out = String::from("digraph tree {\n");
        walk(self, &self.root, &mut 0, &mut out);
        out.push_str("}\n");
        out
    }

    fn to_text(&self) -> String {
        fn leaf_text(node: &Node) -> Option<String> {
            match node {
                Node::Leaf(l) => Some(format!("p = {:.4}, n = {}", l.score, l.n)),
                Node::Split(_) => None,
            }
        }
        fn walk(tree: &Tree, node: &Node, indent: usize, out: &mut String) {
            if let Node::Split(s) = node {
                for (child, left) in [(&s.left, true), (&s.right, false)] {
                    let pad = "  ".repeat(indent);
                    let cond = tree.describe_rule(&s.rule, left);
                    match leaf_text(child) {
                        Some(leaf) => {
                            let _ = writeln!(out, "{pad}{cond}: {leaf}");
                        }
                        None => {
                            let _ = writeln!(out, "{pad}{cond}");
                            walk(tree, child, indent + 1, out);
                        }
                    }
                }
            }
        }
        match leaf_text(&self.root) {
            Some(leaf) => format!("{leaf}\n"),
            None => {
                let mut out = String::new();
                walk(self, &self.root, 0, &mut out);
                out
            }
        }
    }
}

//! Deterministic DOT and JSON renderings of trees.

use crate::typenode::{atom_label, TypeNode};
use crate::typetree::CodingTree;
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Label a node by its newest block: positive atoms as written, an
/// explicit empty-set mark when the newest block has no positive atoms.
pub fn newest_block_label(tree_lang: &crate::lang::Language, t: &TypeNode) -> String {
    let block = t.block(t.level as usize);
    if block.is_empty() {
        "\u{2205}".to_string()
    } else {
        block
            .iter()
            .map(|a| atom_label(tree_lang, a, true))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// DOT rendering of a coding tree: levels as ranks, coding nodes filled
/// and labeled `c<n>`, edges from parent to child, growing upward.
pub fn tree_dot(tree: &CodingTree) -> String {
    let lang = tree.prefix.lang.clone();
    let mut out = String::new();
    out.push_str("digraph coding_tree {\n");
    out.push_str("  rankdir=BT;\n  node [fontsize=10];\n");
    for (n, lvl) in tree.levels.iter().enumerate() {
        for (i, t) in lvl.iter().enumerate() {
            let id = format!("n{n}_{i}");
            let label = newest_block_label(&lang, t);
            let coding = tree
                .coding
                .iter()
                .position(|c| c.level == n && c.index == i);
            match coding {
                Some(k) => {
                    let color = tree.coding[k]
                        .color
                        .map(|c| format!(" U{c}"))
                        .unwrap_or_default();
                    out.push_str(&format!(
                        "  {id} [shape=circle, style=filled, fillcolor=black, fontcolor=white, label=\"c{k}{color}\\n{label}\"];\n"
                    ));
                }
                None => {
                    out.push_str(&format!("  {id} [shape=circle, label=\"{label}\"];\n"));
                }
            }
        }
    }
    for n in 1..=tree.depth {
        for (i, &p) in tree.parent[n].iter().enumerate() {
            out.push_str(&format!("  n{}_{} -> n{n}_{i};\n", n - 1, p));
        }
    }
    out.push_str("}\n");
    out
}

#[derive(Serialize)]
struct TreeJson<'a> {
    schema_version: u32,
    class: String,
    mode: &'a str,
    depth: usize,
    levels: Vec<Vec<&'a TypeNode>>,
    parent: &'a Vec<Vec<usize>>,
    coding: Vec<CodingJson>,
}

#[derive(Serialize)]
struct CodingJson {
    n: usize,
    level: usize,
    index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    color: Option<usize>,
}

pub fn tree_json(tree: &CodingTree) -> String {
    let doc = TreeJson {
        schema_version: SCHEMA_VERSION,
        class: tree.spec.id(),
        mode: match tree.mode {
            crate::catalogue::TreeMode::S => "s",
            crate::catalogue::TreeMode::U => "u",
        },
        depth: tree.depth,
        levels: tree.levels.iter().map(|l| l.iter().collect()).collect(),
        parent: &tree.parent,
        coding: tree
            .coding
            .iter()
            .enumerate()
            .map(|(n, c)| CodingJson {
                n,
                level: c.level,
                index: c.index,
                color: c.color,
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).unwrap();
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalogue::{ClassSpec, TreeMode};

    #[test]
    fn dot_is_deterministic_and_marks_coding_nodes() {
        let spec = ClassSpec::LinearOrder;
        let t1 = CodingTree::build(&spec, 4, TreeMode::S).unwrap();
        let t2 = CodingTree::build(&spec, 4, TreeMode::S).unwrap();
        let d1 = tree_dot(&t1);
        let d2 = tree_dot(&t2);
        assert_eq!(d1, d2);
        assert!(d1.contains("c0"));
        assert!(d1.contains("style=filled"));
    }
}

//! Quantifier-free 1-types over initial segments of an enumerated
//! structure, represented sparsely by their positive atoms.
//!
//! A type over the first `n` vertices is complete: for every relation R
//! of arity k and every k-tuple of distinct entries from {x, v0..v(n-1)}
//! containing x, exactly one of R(..) and its negation holds. Only the
//! positive atoms are stored; everything else is negative. Equality
//! formulas are implicit and never stored.
//!
//! The linear order on formulas puts every negated symbol before every
//! positive symbol, then compares by relation id, then by argument tuple
//! with x below every vertex. A type decomposes into blocks: block 0 is
//! the parameter-free part, block i (i >= 1) collects the formulas whose
//! newest parameter is v(i-1). Types compare by their block sequences,
//! which makes restriction an order-preserving truncation.

use crate::lang::Language;
use crate::structure::{FinStructure, Vertex};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Argument of an atomic formula: the free variable or a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Param {
    X,
    V(Vertex),
}

/// An atomic formula `R(args)` with at least one occurrence of `X`.
/// Symmetric relations keep `args` sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub rel: usize,
    pub args: Vec<Param>,
}

impl Atom {
    pub fn new(lang: &Language, rel: usize, mut args: Vec<Param>) -> Atom {
        if lang.rel(rel).symmetric {
            args.sort_unstable();
        }
        Atom { rel, args }
    }

    /// Index of the block this atom belongs to: 0 for parameter-free,
    /// otherwise 1 + the largest vertex index among its parameters.
    pub fn block_index(&self) -> usize {
        self.args
            .iter()
            .filter_map(|p| match p {
                Param::X => None,
                Param::V(v) => Some(*v as usize + 1),
            })
            .max()
            .unwrap_or(0)
    }

    /// Instantiate `x` by the concrete vertex `v`.
    pub fn instantiate(&self, lang: &Language, v: Vertex) -> (usize, Vec<Vertex>) {
        let mut t: Vec<Vertex> = self
            .args
            .iter()
            .map(|p| match p {
                Param::X => v,
                Param::V(w) => *w,
            })
            .collect();
        if lang.rel(self.rel).symmetric {
            t.sort_unstable();
        }
        (self.rel, t)
    }

    /// Map vertex parameters through `f`, keeping `x` fixed.
    pub fn translate(&self, lang: &Language, f: &impl Fn(Vertex) -> Vertex) -> Atom {
        Atom::new(
            lang,
            self.rel,
            self.args
                .iter()
                .map(|p| match p {
                    Param::X => Param::X,
                    Param::V(v) => Param::V(f(*v)),
                })
                .collect(),
        )
    }
}

/// Signed formula; ordering puts negatives first, matching the symbol
/// order that seeds the tree order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Formula {
    pub positive: bool,
    pub atom: Atom,
}

/// A complete 1-type over the first `level` vertices, as its sorted set
/// of positive atoms. The derived ordering is structural (for use in
/// ordered containers); the tree order is [`prec`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TypeNode {
    pub level: u32,
    pub pos: Vec<Atom>,
}

impl TypeNode {
    pub fn new(level: u32, mut pos: Vec<Atom>) -> TypeNode {
        pos.sort_unstable();
        pos.dedup();
        TypeNode { level, pos }
    }

    /// Length in the tree sense: a type over K_n has length n+1.
    pub fn len(&self) -> u32 {
        self.level + 1
    }

    /// Positive atoms of block `i`, in atom order.
    pub fn block(&self, i: usize) -> Vec<&Atom> {
        self.pos.iter().filter(|a| a.block_index() == i).collect()
    }

    /// Restriction to the first `m` vertices.
    pub fn restrict(&self, m: u32) -> TypeNode {
        assert!(m <= self.level);
        TypeNode {
            level: m,
            pos: self
                .pos
                .iter()
                .filter(|a| a.block_index() <= m as usize)
                .cloned()
                .collect(),
        }
    }

    pub fn extends(&self, other: &TypeNode) -> bool {
        other.level <= self.level && self.restrict(other.level) == *other
    }

    /// Extend by one block (positive atoms whose newest parameter is the
    /// current level's vertex).
    pub fn extend(&self, new_block: &[Atom]) -> TypeNode {
        let mut pos = self.pos.clone();
        pos.extend(new_block.iter().cloned());
        TypeNode::new(self.level + 1, pos)
    }

    /// All formulas, signed, in formula order. Needs the language to
    /// enumerate the atoms of each block.
    pub fn full_formulas(&self, lang: &Language) -> Vec<Formula> {
        let mut out = Vec::new();
        for i in 0..=self.level as usize {
            for atom in block_atoms(lang, i) {
                let positive = self.pos.contains(&atom);
                out.push(Formula { positive, atom });
            }
        }
        out.sort_unstable();
        out
    }

    /// Drop unary atoms (the passage from the full tree to the
    /// unary-colored tree for non-coding nodes).
    pub fn strip_unary(&self, lang: &Language) -> TypeNode {
        TypeNode {
            level: self.level,
            pos: self
                .pos
                .iter()
                .filter(|a| lang.rel(a.rel).arity > 1)
                .cloned()
                .collect(),
        }
    }
}

/// All atoms of block `i`: tuples of distinct entries over
/// {x, v0..v(i-1)} containing x and (for i >= 1) the newest vertex
/// v(i-1); symmetric relations contribute each tuple once, sorted.
pub fn block_atoms(lang: &Language, i: usize) -> Vec<Atom> {
    let mut out = Vec::new();
    for (rel, r) in lang.relations.iter().enumerate() {
        let k = r.arity;
        if i == 0 {
            if k == 1 {
                out.push(Atom {
                    rel,
                    args: vec![Param::X],
                });
            }
            continue;
        }
        if k < 2 || k > i + 1 {
            continue;
        }
        let newest = (i - 1) as Vertex;
        // Choose k-2 older vertices, plus x and the newest one.
        let older: Vec<Vertex> = (0..newest).collect();
        let mut chosen = Vec::new();
        combos(&older, k - 2, 0, &mut chosen, &mut |older_set| {
            let mut entries: Vec<Param> = older_set.iter().map(|&v| Param::V(v)).collect();
            entries.push(Param::V(newest));
            entries.push(Param::X);
            if r.symmetric {
                entries.sort_unstable();
                out.push(Atom {
                    rel,
                    args: entries,
                });
            } else {
                // All arrangements of the chosen entries.
                let mut arr = entries.clone();
                arr.sort_unstable();
                permutations(&arr, &mut |p| {
                    out.push(Atom {
                        rel,
                        args: p.to_vec(),
                    });
                });
            }
        });
    }
    out.sort_unstable();
    out.dedup();
    out
}

fn combos(
    dom: &[Vertex],
    k: usize,
    start: usize,
    chosen: &mut Vec<Vertex>,
    f: &mut impl FnMut(&[Vertex]),
) {
    if chosen.len() == k {
        f(chosen);
        return;
    }
    for i in start..dom.len() {
        chosen.push(dom[i]);
        combos(dom, k, i + 1, chosen, f);
        chosen.pop();
    }
}

fn permutations(items: &[Param], f: &mut impl FnMut(&[Param])) {
    let mut v = items.to_vec();
    let n = v.len();
    fn rec(v: &mut Vec<Param>, k: usize, n: usize, f: &mut impl FnMut(&[Param])) {
        if k == n {
            f(v);
            return;
        }
        for i in k..n {
            v.swap(k, i);
            rec(v, k + 1, n, f);
            v.swap(k, i);
        }
    }
    rec(&mut v, 0, n, f);
    // Note: duplicates can arise when entries repeat; callers dedup.
}

/// Compare two blocks given as sorted positive-atom slices. At the first
/// atom where the blocks disagree, the type holding it negatively is the
/// smaller one; a proper positive-prefix is smaller.
fn cmp_block(x: &[&Atom], y: &[&Atom]) -> Ordering {
    let mut i = 0;
    loop {
        match (x.get(i), y.get(i)) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(a), Some(b)) => match a.cmp(b) {
                Ordering::Equal => i += 1,
                // x holds the smaller atom positively, y negatively.
                Ordering::Less => return Ordering::Greater,
                Ordering::Greater => return Ordering::Less,
            },
        }
    }
}

/// The tree order: block sequences compared lexicographically, with a
/// proper initial segment below every extension.
pub fn prec(a: &TypeNode, b: &TypeNode) -> Ordering {
    let m = a.level.min(b.level);
    for i in 0..=m as usize {
        match cmp_block(&a.block(i), &b.block(i)) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    a.level.cmp(&b.level)
}

/// Longest common restriction; `None` when even the parameter-free
/// blocks disagree (distinct roots).
pub fn meet(a: &TypeNode, b: &TypeNode) -> Option<TypeNode> {
    let m = a.level.min(b.level);
    for i in 0..=m as usize {
        if cmp_block(&a.block(i), &b.block(i)) != Ordering::Equal {
            if i == 0 {
                return None;
            }
            return Some(a.restrict(i as u32 - 1));
        }
    }
    Some(a.restrict(m))
}

/// The passing type t(l): the block of formulas whose newest parameter is
/// v(l-1). `l` ranges over 1..=level; `l = 0` gives the parameter-free
/// block.
pub fn passing_type(t: &TypeNode, l: usize) -> Vec<Atom> {
    t.block(l).into_iter().cloned().collect()
}

/// The passing type of `t` at length `at_len` relativized to the
/// parameters in `allowed` (vertex set) plus the newest parameter.
pub fn passing_type_over(t: &TypeNode, at_len: usize, allowed: &[Vertex]) -> Vec<Atom> {
    assert!(at_len >= 1);
    let newest = (at_len - 1) as Vertex;
    t.block(at_len)
        .into_iter()
        .filter(|a| {
            a.args.iter().all(|p| match p {
                Param::X => true,
                Param::V(v) => *v == newest || allowed.contains(v),
            })
        })
        .cloned()
        .collect()
}

/// Similarity of relativized passing types: the increasing bijection of
/// the two parameter lists (with newest mapped to newest and x fixed)
/// carries one positive set onto the other.
pub fn passing_sim(
    lang: &Language,
    s_block: &[Atom],
    s_params: &[Vertex],
    s_newest: Vertex,
    t_block: &[Atom],
    t_params: &[Vertex],
    t_newest: Vertex,
) -> bool {
    assert_eq!(s_params.len(), t_params.len());
    let map = |v: Vertex| -> Vertex {
        if v == s_newest {
            t_newest
        } else {
            let i = s_params.iter().position(|&w| w == v).expect("param in range");
            t_params[i]
        }
    };
    let mut translated: Vec<Atom> = s_block.iter().map(|a| a.translate(lang, &map)).collect();
    translated.sort_unstable();
    let mut target = t_block.to_vec();
    target.sort_unstable();
    translated == target
}

/// The complete 1-type of `v` over the prefix of `ambient` of size `n`.
pub fn type_of(ambient: &FinStructure, n: usize, v: Vertex) -> TypeNode {
    assert!((v as usize) >= n, "vertex lies inside the prefix");
    assert!((v as usize) < ambient.size);
    let lang = &ambient.lang;
    let mut pos = Vec::new();
    for i in 0..=n {
        for atom in block_atoms(lang, i) {
            let (rel, t) = atom.instantiate(lang, v);
            if ambient.holds(rel, &t) {
                pos.push(atom);
            }
        }
    }
    TypeNode::new(n as u32, pos)
}

/// Check that `v` satisfies every formula of its computed type in
/// `ambient` (positives hold, all other atoms fail).
pub fn realizes(ambient: &FinStructure, n: usize, v: Vertex, t: &TypeNode) -> bool {
    let lang = &ambient.lang;
    for i in 0..=n {
        for atom in block_atoms(lang, i) {
            let (rel, tup) = atom.instantiate(lang, v);
            let holds = ambient.holds(rel, &tup);
            let positive = t.pos.contains(&atom);
            if holds != positive {
                return false;
            }
        }
    }
    true
}

/// Materialize the one-point extension of `prefix` by a fresh vertex
/// realizing `t`.
pub fn one_point_extension(prefix: &FinStructure, t: &TypeNode) -> FinStructure {
    assert_eq!(t.level as usize, prefix.size);
    let mut ext = prefix.clone();
    let v = ext.size as Vertex;
    ext.size += 1;
    for atom in &t.pos {
        let (rel, tup) = atom.instantiate(&ext.lang, v);
        ext.add(rel, tup);
    }
    ext
}

/// Render an atom the way the tree figures label nodes, e.g. `x<v0`,
/// `E(x,v1)`, `R(x,v0,v2)`.
pub fn atom_label(lang: &Language, a: &Atom, positive: bool) -> String {
    let name = &lang.rel(a.rel).name;
    let arg = |p: &Param| match p {
        Param::X => "x".to_string(),
        Param::V(v) => format!("v{v}"),
    };
    let body = if a.args.len() == 2 && name.chars().all(|c| !c.is_alphanumeric()) {
        format!("{}{}{}", arg(&a.args[0]), name, arg(&a.args[1]))
    } else {
        format!(
            "{}({})",
            name,
            a.args.iter().map(arg).collect::<Vec<_>>().join(",")
        )
    };
    if positive {
        body
    } else {
        format!("\u{00ac}{body}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{RelKind, Relation};

    fn order_lang() -> Language {
        Language::new(
            vec![Relation {
                name: "<".into(),
                arity: 2,
                symmetric: false,
                kind: RelKind::LinearOrder,
            }],
            false,
        )
        .unwrap()
    }

    fn graph_lang() -> Language {
        Language::new(
            vec![Relation {
                name: "E".into(),
                arity: 2,
                symmetric: true,
                kind: RelKind::Plain,
            }],
            false,
        )
        .unwrap()
    }

    fn lt(a: Param, b: Param) -> Atom {
        Atom {
            rel: 0,
            args: vec![a, b],
        }
    }

    #[test]
    fn rationals_figure_types() {
        // Enumerated rationals with v2 < v0 < v3 < v1.
        let lang = order_lang();
        let mut q = FinStructure::new(lang, 4);
        for (a, b) in [(0, 1), (2, 0), (2, 1), (2, 3), (0, 3), (3, 1)] {
            q.add(0, vec![a, b]);
        }
        let c1 = type_of(&q, 1, 1);
        assert_eq!(c1.pos, vec![lt(Param::V(0), Param::X)]);
        let c2 = type_of(&q, 2, 2);
        assert_eq!(
            c2.pos,
            vec![lt(Param::X, Param::V(0)), lt(Param::X, Param::V(1))]
        );
        let c3 = type_of(&q, 3, 3);
        assert_eq!(
            c3.pos,
            vec![
                lt(Param::X, Param::V(1)),
                lt(Param::V(0), Param::X),
                lt(Param::V(2), Param::X)
            ]
        );
        // Passing type of c3 at length 2 is the block about v1.
        assert_eq!(passing_type(&c3, 2), vec![lt(Param::X, Param::V(1))]);
        // Parameter-free block is empty for an order language.
        assert!(passing_type(&c3, 0).is_empty());
        // Round trip: each vertex realizes its own type.
        for v in 1..4u32 {
            let t = type_of(&q, v as usize, v);
            assert!(realizes(&q, v as usize, v, &t));
        }
    }

    #[test]
    fn type_over_empty_prefix_is_parameter_free() {
        let lang = graph_lang();
        let mut g = FinStructure::new(lang, 2);
        g.add(0, vec![0, 1]);
        let t = type_of(&g, 0, 1);
        assert_eq!(t.level, 0);
        assert!(t.pos.is_empty());
    }

    #[test]
    fn rado_level_one_order() {
        // {not E(x,v0)} comes before {E(x,v0)}.
        let neg = TypeNode::new(1, vec![]);
        let posn = TypeNode::new(
            1,
            vec![Atom {
                rel: 0,
                args: vec![Param::X, Param::V(0)],
            }],
        );
        assert_eq!(prec(&neg, &posn), Ordering::Less);
        assert_eq!(prec(&posn, &posn), Ordering::Equal);
    }

    #[test]
    fn initial_segment_precedes_extension() {
        let s = TypeNode::new(1, vec![]);
        let t = s.extend(&[Atom {
            rel: 0,
            args: vec![Param::X, Param::V(1)],
        }]);
        assert_eq!(prec(&s, &t), Ordering::Less);
        assert!(t.extends(&s));
    }

    #[test]
    fn meet_of_figure_types() {
        let lang = order_lang();
        let mut q = FinStructure::new(lang, 4);
        for (a, b) in [(0, 1), (2, 0), (2, 1), (2, 3), (0, 3), (3, 1)] {
            q.add(0, vec![a, b]);
        }
        let c2 = type_of(&q, 2, 2);
        let c3 = type_of(&q, 3, 3);
        // c2 starts x<v0, c3 starts v0<x: they already disagree over K1,
        // so the meet is the empty type over K0.
        let m = meet(&c2, &c3).unwrap();
        assert_eq!(m.level, 0);
        assert!(m.pos.is_empty());
        let c1 = type_of(&q, 1, 1);
        assert_eq!(meet(&c1, &c3).unwrap(), c1);
    }

    #[test]
    fn prec_matches_full_formula_order() {
        // Independent oracle: compare the fully materialized signed
        // formula sequences lexicographically, treating a proper
        // blockwise prefix as smaller.
        let lang = graph_lang();
        let atoms1 = block_atoms(&lang, 1);
        let atoms2 = block_atoms(&lang, 2);
        let mut nodes = Vec::new();
        for b1 in [vec![], atoms1.clone()] {
            for b2 in [vec![], atoms2.clone()] {
                let mut pos = b1.clone();
                pos.extend(b2.iter().cloned());
                nodes.push(TypeNode::new(2, pos));
            }
        }
        for a in &nodes {
            for b in &nodes {
                let fast = prec(a, b);
                let slow = full_formula_oracle(&lang, a, b);
                assert_eq!(fast, slow, "a={a:?} b={b:?}");
            }
        }
    }

    fn full_formula_oracle(lang: &Language, a: &TypeNode, b: &TypeNode) -> Ordering {
        for i in 0..=a.level.min(b.level) as usize {
            let fa: Vec<Formula> = block_formulas(lang, a, i);
            let fb: Vec<Formula> = block_formulas(lang, b, i);
            match fa.cmp(&fb) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        a.level.cmp(&b.level)
    }

    fn block_formulas(lang: &Language, t: &TypeNode, i: usize) -> Vec<Formula> {
        let mut out: Vec<Formula> = block_atoms(lang, i)
            .into_iter()
            .map(|atom| Formula {
                positive: t.pos.contains(&atom),
                atom,
            })
            .collect();
        out.sort_unstable();
        out
    }

    #[test]
    fn hypergraph_block_atom_count() {
        let lang = Language::new(
            vec![Relation {
                name: "R".into(),
                arity: 3,
                symmetric: true,
                kind: RelKind::Plain,
            }],
            false,
        )
        .unwrap();
        // Block i has i-1 atoms: one per older vertex paired with the
        // newest one and x.
        assert_eq!(block_atoms(&lang, 1).len(), 0);
        assert_eq!(block_atoms(&lang, 2).len(), 1);
        assert_eq!(block_atoms(&lang, 5).len(), 4);
    }
}

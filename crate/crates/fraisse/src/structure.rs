//! Finite structures on a universe {0..n-1}, embeddings, and canonical
//! forms for isomorphism-reduced enumeration.

use crate::error::{Error, Result};
use crate::lang::Language;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

pub type Vertex = u32;

/// A finite structure: `tuples[r]` is the set of tuples satisfying
/// relation `r`. Tuples of symmetric relations are stored sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinStructure {
    pub lang: Language,
    pub size: usize,
    pub tuples: Vec<BTreeSet<Vec<Vertex>>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Loop { rel: usize, tuple: Vec<Vertex> },
    Arity { rel: usize, tuple: Vec<Vertex> },
    OutOfRange { rel: usize, tuple: Vec<Vertex> },
    NotCanonical { rel: usize, tuple: Vec<Vertex> },
    UnaryPartition { vertex: Vertex, count: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Loop { rel, tuple } => write!(f, "loop in relation {rel} at {tuple:?}"),
            Violation::Arity { rel, tuple } => write!(f, "arity mismatch in {rel} at {tuple:?}"),
            Violation::OutOfRange { rel, tuple } => {
                write!(f, "vertex out of range in {rel} at {tuple:?}")
            }
            Violation::NotCanonical { rel, tuple } => {
                write!(f, "symmetric tuple not sorted in {rel}: {tuple:?}")
            }
            Violation::UnaryPartition { vertex, count } => {
                write!(f, "vertex {vertex} satisfies {count} unary relations, expected 1")
            }
        }
    }
}

impl FinStructure {
    pub fn empty(lang: Language) -> FinStructure {
        let tuples = vec![BTreeSet::new(); lang.relations.len()];
        FinStructure {
            lang,
            size: 0,
            tuples,
        }
    }

    pub fn new(lang: Language, size: usize) -> FinStructure {
        let tuples = vec![BTreeSet::new(); lang.relations.len()];
        FinStructure { lang, size, tuples }
    }

    /// Canonicalize a tuple for storage: symmetric relations sort their
    /// arguments.
    pub fn canon_tuple(&self, rel: usize, mut t: Vec<Vertex>) -> Vec<Vertex> {
        if self.lang.rel(rel).symmetric {
            t.sort_unstable();
        }
        t
    }

    pub fn add(&mut self, rel: usize, t: Vec<Vertex>) {
        let t = self.canon_tuple(rel, t);
        self.tuples[rel].insert(t);
    }

    pub fn holds(&self, rel: usize, t: &[Vertex]) -> bool {
        if self.lang.rel(rel).symmetric {
            if t.len() <= 8 {
                let mut buf = [0u32; 8];
                buf[..t.len()].copy_from_slice(t);
                buf[..t.len()].sort_unstable();
                self.tuples[rel].contains(&buf[..t.len()])
            } else {
                let mut s = t.to_vec();
                s.sort_unstable();
                self.tuples[rel].contains(s.as_slice())
            }
        } else {
            self.tuples[rel].contains(t)
        }
    }

    /// Unary relations satisfied by `v`, as relation ids.
    pub fn unaries_of(&self, v: Vertex) -> Vec<usize> {
        self.lang
            .unary_rels()
            .into_iter()
            .filter(|&r| self.holds(r, &[v]))
            .collect()
    }

    /// Induced substructure on the given vertices, re-indexed in the
    /// given order (callers pass increasing order for an order-preserving
    /// restriction).
    pub fn induced(&self, verts: &[Vertex]) -> FinStructure {
        let mut out = FinStructure::new(self.lang.clone(), verts.len());
        let pos = |v: Vertex| verts.iter().position(|&w| w == v).map(|i| i as Vertex);
        for (r, set) in self.tuples.iter().enumerate() {
            for t in set {
                if let Some(mapped) = t.iter().map(|&v| pos(v)).collect::<Option<Vec<_>>>() {
                    out.add(r, mapped);
                }
            }
        }
        out
    }

    pub fn prefix(&self, n: usize) -> FinStructure {
        let verts: Vec<Vertex> = (0..n as Vertex).collect();
        self.induced(&verts)
    }

    /// Relabel by a permutation: vertex `v` of `self` becomes `perm[v]`.
    pub fn relabel(&self, perm: &[Vertex]) -> FinStructure {
        let mut out = FinStructure::new(self.lang.clone(), self.size);
        for (r, set) in self.tuples.iter().enumerate() {
            for t in set {
                out.add(r, t.iter().map(|&v| perm[v as usize]).collect());
            }
        }
        out
    }

    /// Disjoint union with `other` appended after `self`'s vertices.
    pub fn disjoint_union(&self, other: &FinStructure) -> FinStructure {
        let mut out = self.clone();
        out.size += other.size;
        for (r, set) in other.tuples.iter().enumerate() {
            for t in set {
                out.add(r, t.iter().map(|&v| v + self.size as Vertex).collect());
            }
        }
        out
    }

    /// A deterministic total encoding used for canonical forms.
    fn encoding(&self) -> Vec<Vec<Vec<Vertex>>> {
        self.tuples
            .iter()
            .map(|set| set.iter().cloned().collect())
            .collect()
    }

    /// Canonical form under vertex permutations: the relabel with the
    /// least encoding. Brute force; intended for small structures.
    pub fn canonical(&self) -> FinStructure {
        let n = self.size;
        if n <= 1 {
            return self.clone();
        }
        let mut best: Option<(Vec<Vec<Vec<Vertex>>>, FinStructure)> = None;
        let mut perm: Vec<Vertex> = (0..n as Vertex).collect();
        permute(&mut perm, 0, &mut |p| {
            let cand = self.relabel(p);
            let enc = cand.encoding();
            match &best {
                Some((b, _)) if *b <= enc => {}
                _ => best = Some((enc, cand)),
            }
        });
        best.unwrap().1
    }

    pub fn is_isomorphic(&self, other: &FinStructure) -> bool {
        self.lang == other.lang
            && self.size == other.size
            && self.canonical().tuples == other.canonical().tuples
    }
}

fn permute(perm: &mut Vec<Vertex>, k: usize, f: &mut impl FnMut(&[Vertex])) {
    if k == perm.len() {
        f(perm);
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute(perm, k + 1, f);
        perm.swap(k, i);
    }
}

/// Check the structural invariants: distinct entries per tuple, arities,
/// vertex ranges, canonical storage of symmetric tuples, and (in
/// partition mode) exactly one unary relation per vertex.
pub fn validate_structure(s: &FinStructure) -> Vec<Violation> {
    let mut out = Vec::new();
    for (r, set) in s.tuples.iter().enumerate() {
        let arity = s.lang.rel(r).arity;
        for t in set {
            if t.len() != arity {
                out.push(Violation::Arity {
                    rel: r,
                    tuple: t.clone(),
                });
                continue;
            }
            if t.iter().any(|&v| v as usize >= s.size) {
                out.push(Violation::OutOfRange {
                    rel: r,
                    tuple: t.clone(),
                });
            }
            let mut seen = t.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != t.len() {
                out.push(Violation::Loop {
                    rel: r,
                    tuple: t.clone(),
                });
            }
            if s.lang.rel(r).symmetric && !t.windows(2).all(|w| w[0] <= w[1]) {
                out.push(Violation::NotCanonical {
                    rel: r,
                    tuple: t.clone(),
                });
            }
        }
    }
    if s.lang.unary_partition {
        for v in 0..s.size as Vertex {
            let count = s.unaries_of(v).len();
            if count != 1 {
                out.push(Violation::UnaryPartition { vertex: v, count });
            }
        }
    }
    out
}

/// All embeddings of `a` into `b`: injections preserving and reflecting
/// every relation. Output is sorted lexicographically by image vector.
pub fn enumerate_embeddings(a: &FinStructure, b: &FinStructure) -> Result<Vec<Vec<Vertex>>> {
    if a.lang != b.lang {
        return Err(Error::LanguageMismatch);
    }
    let mut out = Vec::new();
    let mut image: Vec<Vertex> = Vec::with_capacity(a.size);
    embed_rec(a, b, &mut image, &mut out);
    Ok(out)
}

fn embed_rec(a: &FinStructure, b: &FinStructure, image: &mut Vec<Vertex>, out: &mut Vec<Vec<Vertex>>) {
    let k = image.len();
    if k == a.size {
        out.push(image.clone());
        return;
    }
    'cand: for w in 0..b.size as Vertex {
        if image.contains(&w) {
            continue;
        }
        image.push(w);
        // Check all tuples whose entries lie in the mapped prefix and
        // involve the newest point, in both directions.
        if partial_ok(a, b, image) {
            embed_rec(a, b, image, out);
        } else {
            // fallthrough
        }
        image.pop();
        continue 'cand;
    }
}

/// The biconditional on tuples within the mapped prefix that involve the
/// newest mapped vertex.
fn partial_ok(a: &FinStructure, b: &FinStructure, image: &[Vertex]) -> bool {
    let k = image.len();
    let newest = (k - 1) as Vertex;
    let dom: Vec<Vertex> = (0..k as Vertex).collect();
    for r in 0..a.lang.relations.len() {
        let arity = a.lang.rel(r).arity;
        if arity > k {
            continue;
        }
        let mut tuple = vec![0; arity];
        if !tuples_over(&dom, arity, &mut tuple, &mut |t| {
            if !t.contains(&newest) {
                return true;
            }
            let mapped: Vec<Vertex> = t.iter().map(|&v| image[v as usize]).collect();
            a.holds(r, t) == b.holds(r, &mapped)
        }) {
            return false;
        }
    }
    true
}

/// Enumerate all tuples of distinct entries from `dom` of length `arity`,
/// calling `f`; aborts (returns false) as soon as `f` does.
pub fn tuples_over(
    dom: &[Vertex],
    arity: usize,
    scratch: &mut Vec<Vertex>,
    f: &mut impl FnMut(&[Vertex]) -> bool,
) -> bool {
    fn rec(
        dom: &[Vertex],
        arity: usize,
        pos: usize,
        scratch: &mut Vec<Vertex>,
        f: &mut impl FnMut(&[Vertex]) -> bool,
    ) -> bool {
        if pos == arity {
            return f(scratch);
        }
        for &v in dom {
            if scratch[..pos].contains(&v) {
                continue;
            }
            scratch[pos] = v;
            if !rec(dom, arity, pos + 1, scratch, f) {
                return false;
            }
        }
        true
    }
    scratch.resize(arity, 0);
    rec(dom, arity, 0, scratch, f)
}

/// True iff the increasing bijection of the universes is an isomorphism.
/// Universes are always {0..n-1}, so this is tuple-set equality.
pub fn ordered_iso(a: &FinStructure, b: &FinStructure) -> bool {
    a.lang == b.lang && a.size == b.size && a.tuples == b.tuples
}

/// Early-exit embedding test.
pub fn exists_embedding(a: &FinStructure, b: &FinStructure) -> Result<bool> {
    if a.lang != b.lang {
        return Err(Error::LanguageMismatch);
    }
    let mut image: Vec<Vertex> = Vec::with_capacity(a.size);
    Ok(embed_first(a, b, &mut image))
}

fn embed_first(a: &FinStructure, b: &FinStructure, image: &mut Vec<Vertex>) -> bool {
    if image.len() == a.size {
        return true;
    }
    for w in 0..b.size as Vertex {
        if image.contains(&w) {
            continue;
        }
        image.push(w);
        if partial_ok(a, b, image) && embed_first(a, b, image) {
            image.pop();
            return true;
        }
        image.pop();
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{RelKind, Relation};

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

    #[test]
    fn loop_is_reported() {
        let mut s = FinStructure::new(graph_lang(), 1);
        s.tuples[0].insert(vec![0, 0]);
        let v = validate_structure(&s);
        assert!(matches!(v[0], Violation::Loop { .. }));
    }

    #[test]
    fn unary_partition_violation() {
        let lang = Language::new(
            vec![
                Relation {
                    name: "U0".into(),
                    arity: 1,
                    symmetric: false,
                    kind: RelKind::Plain,
                },
                Relation {
                    name: "U1".into(),
                    arity: 1,
                    symmetric: false,
                    kind: RelKind::Plain,
                },
                Relation {
                    name: "E".into(),
                    arity: 2,
                    symmetric: true,
                    kind: RelKind::Plain,
                },
            ],
            true,
        )
        .unwrap();
        let mut s = FinStructure::new(lang, 1);
        s.add(0, vec![0]);
        s.add(1, vec![0]);
        let v = validate_structure(&s);
        assert!(v
            .iter()
            .any(|x| matches!(x, Violation::UnaryPartition { vertex: 0, count: 2 })));
    }

    #[test]
    fn empty_structure_ok() {
        let s = FinStructure::empty(graph_lang());
        assert!(validate_structure(&s).is_empty());
    }

    #[test]
    fn point_into_chain_has_two_embeddings() {
        let a = FinStructure::new(order_lang(), 1);
        let mut b = FinStructure::new(order_lang(), 2);
        b.add(0, vec![0, 1]);
        let e = enumerate_embeddings(&a, &b).unwrap();
        assert_eq!(e, vec![vec![0], vec![1]]);
    }

    #[test]
    fn identity_embedding_present() {
        let mut a = FinStructure::new(graph_lang(), 3);
        a.add(0, vec![0, 1]);
        let e = enumerate_embeddings(&a, &a).unwrap();
        assert!(e.contains(&vec![0, 1, 2]));
    }

    #[test]
    fn edge_into_triangle_all_six() {
        // Independent oracle: every injection of a 2-set into K3 preserves E,
        // so the count must be exactly the number of injections, 3*2 = 6.
        let mut a = FinStructure::new(graph_lang(), 2);
        a.add(0, vec![0, 1]);
        let mut b = FinStructure::new(graph_lang(), 3);
        b.add(0, vec![0, 1]);
        b.add(0, vec![0, 2]);
        b.add(0, vec![1, 2]);
        let e = enumerate_embeddings(&a, &b).unwrap();
        assert_eq!(e.len(), 6);
    }

    #[test]
    fn ordered_iso_examples() {
        let mut a = FinStructure::new(order_lang(), 2);
        a.add(0, vec![0, 1]);
        let mut b = FinStructure::new(order_lang(), 2);
        b.add(0, vec![1, 0]);
        assert!(ordered_iso(&a, &a));
        assert!(!ordered_iso(&a, &b));
    }

    #[test]
    fn embedding_composition_closed() {
        // embeddings(a,b) . embeddings(b,c) lands inside embeddings(a,c).
        let mut a = FinStructure::new(graph_lang(), 2);
        a.add(0, vec![0, 1]);
        let mut b = FinStructure::new(graph_lang(), 3);
        b.add(0, vec![0, 1]);
        b.add(0, vec![1, 2]);
        let mut c = FinStructure::new(graph_lang(), 4);
        c.add(0, vec![0, 1]);
        c.add(0, vec![1, 2]);
        c.add(0, vec![2, 3]);
        c.add(0, vec![0, 3]);
        let ab = enumerate_embeddings(&a, &b).unwrap();
        let bc = enumerate_embeddings(&b, &c).unwrap();
        let ac = enumerate_embeddings(&a, &c).unwrap();
        for f in &ab {
            for g in &bc {
                let comp: Vec<Vertex> = f.iter().map(|&v| g[v as usize]).collect();
                assert!(ac.contains(&comp));
            }
        }
    }

    #[test]
    fn canonical_is_idempotent() {
        let mut s = FinStructure::new(graph_lang(), 4);
        s.add(0, vec![2, 0]);
        s.add(0, vec![3, 1]);
        let c1 = s.canonical();
        let c2 = c1.canonical();
        assert_eq!(c1, c2);
        assert!(s.is_isomorphic(&c1));
    }
}

//! Materialized coding trees of 1-types to a bounded depth: levels,
//! coding map, subtree selections, and similarity maps.

use crate::catalogue::{ClassSpec, TreeMode};
use crate::error::{Error, Result};
use crate::generator::Enumeration;
use crate::structure::{ordered_iso, FinStructure, Vertex};
use crate::typenode::{
    meet, passing_sim, passing_type_over, prec, TypeNode,
};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Node address: level and index within the level's sorted order.
pub type NodeId = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodingRef {
    pub level: usize,
    pub index: usize,
    /// Unary color of the represented vertex (U-mode only).
    pub color: Option<usize>,
}

/// The tree of 1-types over initial segments, built to a fixed depth.
/// Level `n` lists the realizable types over the first `n` vertices in
/// tree order; `coding[n]` locates the type of vertex `n` itself.
#[derive(Debug)]
pub struct CodingTree {
    pub spec: ClassSpec,
    pub mode: TreeMode,
    pub depth: usize,
    pub prefix: FinStructure,
    pub levels: Vec<Vec<TypeNode>>,
    pub parent: Vec<Vec<usize>>,
    pub coding: Vec<CodingRef>,
}

impl CodingTree {
    pub fn build(spec: &ClassSpec, depth: usize, mode: TreeMode) -> Result<CodingTree> {
        if depth < 1 {
            return Err(Error::Precondition("depth must be at least 1".into()));
        }
        let mut e = Enumeration::new(spec.clone());
        e.ensure_size(depth.max(1));
        Self::build_over(spec, &e, depth, mode)
    }

    /// Build over an existing enumeration (its prefix must be long
    /// enough).
    pub fn build_over(
        spec: &ClassSpec,
        e: &Enumeration,
        depth: usize,
        mode: TreeMode,
    ) -> Result<CodingTree> {
        assert!(e.size() >= depth);
        let amb = e.structure();
        let mut levels = Vec::with_capacity(depth + 1);
        for n in 0..=depth {
            levels.push(spec.level_types(amb, n, mode, 200_000)?);
        }
        let mut parent = vec![Vec::new()];
        for n in 1..=depth {
            let index: HashMap<&TypeNode, usize> = levels[n - 1]
                .iter()
                .enumerate()
                .map(|(i, t)| (t, i))
                .collect();
            let mut row = Vec::with_capacity(levels[n].len());
            for t in &levels[n] {
                let p = t.restrict(n as u32 - 1);
                row.push(*index.get(&p).expect("parent closure"));
            }
            parent.push(row);
        }
        let mut coding = Vec::new();
        for n in 0..depth {
            let (t, color) = e.coding_node(n, mode);
            let index = levels[n]
                .iter()
                .position(|u| *u == t)
                .expect("coding node realizable");
            coding.push(CodingRef {
                level: n,
                index,
                color,
            });
        }
        Ok(CodingTree {
            spec: spec.clone(),
            mode,
            depth,
            prefix: amb.prefix(depth),
            levels,
            parent,
            coding,
        })
    }

    pub fn node(&self, id: NodeId) -> &TypeNode {
        &self.levels[id.0][id.1]
    }

    /// Children of a node at the next level, in tree order.
    pub fn children(&self, id: NodeId) -> Vec<NodeId> {
        let (n, i) = id;
        if n + 1 > self.depth {
            return Vec::new();
        }
        self.parent[n + 1]
            .iter()
            .enumerate()
            .filter(|(_, &p)| p == i)
            .map(|(j, _)| (n + 1, j))
            .collect()
    }

    pub fn is_coding(&self, id: NodeId) -> bool {
        self.coding
            .iter()
            .any(|c| c.level == id.0 && c.index == id.1)
    }

    pub fn coding_id(&self, n: usize) -> NodeId {
        let c = &self.coding[n];
        (c.level, c.index)
    }

    pub fn locate(&self, t: &TypeNode) -> Option<NodeId> {
        let n = t.level as usize;
        if n > self.depth {
            return None;
        }
        self.levels[n].iter().position(|u| u == t).map(|i| (n, i))
    }

    /// Shape of the subtree rooted at `id` (children recursively, in
    /// tree order), ignoring formulas.
    pub fn shape(&self, id: NodeId) -> TreeShape {
        TreeShape {
            children: self
                .children(id)
                .into_iter()
                .map(|c| self.shape(c))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeShape {
    pub children: Vec<TreeShape>,
}

/// A meet-closed selection of nodes in a coding tree, with the level-set
/// accessors used throughout.
#[derive(Debug, Clone)]
pub struct SubtreeSel<'a> {
    pub tree: &'a CodingTree,
    pub nodes: BTreeSet<NodeId>,
}

impl<'a> SubtreeSel<'a> {
    pub fn max_len(&self) -> u32 {
        self.nodes
            .iter()
            .map(|&id| self.tree.node(id).len())
            .max()
            .unwrap_or(0)
    }

    /// Nodes of maximal length.
    pub fn max_nodes(&self) -> Vec<NodeId> {
        let l = self.max_len();
        self.nodes
            .iter()
            .copied()
            .filter(|&id| self.tree.node(id).len() == l)
            .collect()
    }

    /// Restriction of every long-enough node to length `l`.
    pub fn restrict_len(&self, l: u32) -> BTreeSet<TypeNode> {
        self.nodes
            .iter()
            .filter(|&&id| self.tree.node(id).len() >= l)
            .map(|&id| self.tree.node(id).restrict(l - 1))
            .collect()
    }

    /// Coding nodes in the selection, by increasing length; the entries
    /// are (coding index in the ambient tree, node id).
    pub fn coding_nodes(&self) -> Vec<(usize, NodeId)> {
        let mut out: Vec<(usize, NodeId)> = self
            .nodes
            .iter()
            .filter_map(|&id| {
                self.tree
                    .coding
                    .iter()
                    .position(|c| (c.level, c.index) == id)
                    .map(|n| (n, id))
            })
            .collect();
        out.sort_by_key(|&(n, _)| n);
        out
    }

    /// Vertices represented by the first `k` coding nodes.
    pub fn repr_vertices(&self, k: usize) -> Vec<Vertex> {
        self.coding_nodes()
            .into_iter()
            .take(k)
            .map(|(n, _)| n as Vertex)
            .collect()
    }
}

/// The subtree induced by a set of coding nodes: their meet closure plus
/// initial segments at the lengths of coding nodes and meets.
pub fn induced_subtree<'a>(tree: &'a CodingTree, coding: &[usize]) -> SubtreeSel<'a> {
    let mut nodes: BTreeSet<NodeId> = coding.iter().map(|&n| tree.coding_id(n)).collect();
    // Meet closure.
    loop {
        let cur: Vec<NodeId> = nodes.iter().copied().collect();
        let mut added = false;
        for i in 0..cur.len() {
            for j in (i + 1)..cur.len() {
                if let Some(m) = meet(tree.node(cur[i]), tree.node(cur[j])) {
                    if let Some(id) = tree.locate(&m) {
                        added |= nodes.insert(id);
                    }
                }
            }
        }
        if !added {
            break;
        }
    }
    // Lengths of coding nodes and of meets of incomparable pairs.
    let mut lens: BTreeSet<u32> = coding
        .iter()
        .map(|&n| tree.node(tree.coding_id(n)).len())
        .collect();
    let all: Vec<NodeId> = nodes.iter().copied().collect();
    for i in 0..all.len() {
        for j in (i + 1)..all.len() {
            let (a, b) = (tree.node(all[i]), tree.node(all[j]));
            if !a.extends(b) && !b.extends(a) {
                if let Some(m) = meet(a, b) {
                    lens.insert(m.len());
                }
            }
        }
    }
    // Close under initial segments at those lengths.
    loop {
        let cur: Vec<NodeId> = nodes.iter().copied().collect();
        let mut added = false;
        for id in cur {
            let t = tree.node(id);
            for &l in &lens {
                if l <= t.len() {
                    let r = t.restrict(l - 1);
                    if let Some(rid) = tree.locate(&r) {
                        added |= nodes.insert(rid);
                    }
                }
            }
        }
        if !added {
            break;
        }
    }
    SubtreeSel { tree, nodes }
}

/// Verify that the pairing `map` is a similarity map from `s` to `t`:
/// a bijection preserving the tree order, meets, relative lengths,
/// initial segments, coding nodes with their parameter-free formulas,
/// and relative passing types at coding nodes.
pub fn is_similarity(
    map: &[(NodeId, NodeId)],
    s: &SubtreeSel<'_>,
    t: &SubtreeSel<'_>,
) -> bool {
    let dom: BTreeSet<NodeId> = map.iter().map(|&(a, _)| a).collect();
    let ran: BTreeSet<NodeId> = map.iter().map(|&(_, b)| b).collect();
    if dom != s.nodes || ran != t.nodes || dom.len() != map.len() || ran.len() != map.len() {
        return false;
    }
    let f: BTreeMap<NodeId, NodeId> = map.iter().copied().collect();
    let st = s.tree;
    let tt = t.tree;
    let pairs: Vec<(NodeId, NodeId)> = map.to_vec();
    for &(a1, b1) in &pairs {
        for &(a2, b2) in &pairs {
            let (x1, y1) = (st.node(a1), tt.node(b1));
            let (x2, y2) = (st.node(a2), tt.node(b2));
            // (1) tree order
            if prec(x1, x2) != prec(y1, y2) {
                return false;
            }
            // (3) relative lengths
            if (x1.len() < x2.len()) != (y1.len() < y2.len()) {
                return false;
            }
            // (4) initial segments
            if x1.extends(x2) != y1.extends(y2) {
                return false;
            }
            // (2) meets
            let ms = meet(x1, x2);
            let mt = meet(y1, y2);
            match (ms, mt) {
                (None, None) => {}
                (Some(ms), Some(mt)) => {
                    let ms_id = st.locate(&ms);
                    let mt_id = tt.locate(&mt);
                    match (ms_id, mt_id) {
                        (Some(ms_id), Some(mt_id)) => {
                            if s.nodes.contains(&ms_id) {
                                if f.get(&ms_id) != Some(&mt_id) {
                                    return false;
                                }
                            }
                        }
                        _ => return false,
                    }
                }
                _ => return false,
            }
        }
    }
    // (5) coding nodes and their parameter-free formulas / colors.
    let sc = s.coding_nodes();
    let tc = t.coding_nodes();
    if sc.len() != tc.len() {
        return false;
    }
    for (k, (&(si, sid), &(ti, tid))) in sc.iter().zip(tc.iter()).enumerate() {
        let _ = k;
        if f.get(&sid) != Some(&tid) {
            return false;
        }
        match s.tree.mode {
            TreeMode::S => {
                let root_s = st.node(sid).block(0);
                let root_t = tt.node(tid).block(0);
                if root_s != root_t {
                    return false;
                }
            }
            TreeMode::U => {
                if st.coding[si].color != tt.coding[ti].color {
                    return false;
                }
            }
        }
    }
    // (6) relative passing types at coding nodes.
    let s_verts: Vec<Vertex> = sc.iter().map(|&(n, _)| n as Vertex).collect();
    let t_verts: Vec<Vertex> = tc.iter().map(|&(n, _)| n as Vertex).collect();
    let lang = st.prefix.lang.clone();
    for &(a, b) in &pairs {
        let x = st.node(a);
        let y = tt.node(b);
        for (k, (&(sn, _), &(tn, _))) in sc.iter().zip(tc.iter()).enumerate() {
            let s_len = (sn + 1) as u32;
            let t_len = (tn + 1) as u32;
            if x.len() <= s_len || y.len() <= t_len {
                continue;
            }
            let allowed_s: Vec<Vertex> = s_verts[..k].to_vec();
            let allowed_t: Vec<Vertex> = t_verts[..k].to_vec();
            let bs = passing_type_over(x, s_len as usize, &allowed_s);
            let bt = passing_type_over(y, t_len as usize, &allowed_t);
            if !passing_sim(
                &lang,
                &bs,
                &allowed_s,
                sn as Vertex,
                &bt,
                &allowed_t,
                tn as Vertex,
            ) {
                return false;
            }
        }
    }
    true
}

/// The order-aligned candidate similarity map: pair off nodes sorted by
/// (length, tree order), then verify all clauses.
pub fn canonical_similarity(s: &SubtreeSel<'_>, t: &SubtreeSel<'_>) -> Option<Vec<(NodeId, NodeId)>> {
    if s.nodes.len() != t.nodes.len() {
        return None;
    }
    let sort = |sel: &SubtreeSel<'_>| -> Vec<NodeId> {
        let mut v: Vec<NodeId> = sel.nodes.iter().copied().collect();
        v.sort_by(|&a, &b| {
            let (x, y) = (sel.tree.node(a), sel.tree.node(b));
            x.len().cmp(&y.len()).then(prec(x, y))
        });
        v
    };
    let map: Vec<(NodeId, NodeId)> = sort(s).into_iter().zip(sort(t)).collect();
    if is_similarity(&map, s, t) {
        Some(map)
    } else {
        None
    }
}

/// The two sides of the ordered-isomorphism bridge for coding-node sets
/// `a` and `b` (vertex index lists, increasing): the represented
/// substructures are isomorphic as ordered substructures iff the coding
/// nodes agree on parameter-free formulas and have pairwise similar
/// relative passing types.
pub fn fact_bridge(e: &Enumeration, a: &[Vertex], b: &[Vertex]) -> (bool, bool) {
    assert_eq!(a.len(), b.len());
    let amb = e.structure();
    let lang = amb.lang.clone();
    let lhs = ordered_iso(&amb.induced(a), &amb.induced(b));
    let mut rhs = true;
    for i in 0..a.len() {
        let ca = e.coding_node(a[i] as usize, TreeMode::S).0;
        let cb = e.coding_node(b[i] as usize, TreeMode::S).0;
        if ca.block(0) != cb.block(0) {
            rhs = false;
        }
    }
    if rhs {
        'outer: for j in 0..a.len() {
            for i in 0..j {
                let ta = e.coding_node(a[j] as usize, TreeMode::S).0;
                let tb = e.coding_node(b[j] as usize, TreeMode::S).0;
                let block_a = passing_type_over(&ta, a[i] as usize + 1, &a[..i]);
                let block_b = passing_type_over(&tb, b[i] as usize + 1, &b[..i]);
                if !passing_sim(&lang, &block_a, &a[..i], a[i], &block_b, &b[..i], b[i]) {
                    rhs = false;
                    break 'outer;
                }
            }
        }
    }
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typenode::passing_type;
    use std::cmp::Ordering;

    #[test]
    fn q_tree_only_coding_nodes_branch() {
        let spec = ClassSpec::LinearOrder;
        let tree = CodingTree::build(&spec, 6, TreeMode::S).unwrap();
        for n in 0..6 {
            for i in 0..tree.levels[n].len() {
                let k = tree.children((n, i)).len();
                if tree.is_coding((n, i)) {
                    assert_eq!(k, 2, "coding node at level {n} must split");
                } else {
                    assert_eq!(k, 1, "non-coding node at level {n} must not split");
                }
            }
        }
        // Level sizes are the cut counts.
        for (n, lvl) in tree.levels.iter().enumerate() {
            assert_eq!(lvl.len(), n + 1);
        }
    }

    #[test]
    fn q2_tree_has_two_isomorphic_root_subtrees() {
        let spec = ClassSpec::ColoredOrder(2);
        let tree = CodingTree::build(&spec, 5, TreeMode::S).unwrap();
        assert_eq!(tree.levels[0].len(), 2);
        let s0 = tree.shape((0, 0));
        let s1 = tree.shape((0, 1));
        assert_eq!(s0, s1);
        // Both root subtrees branch at the cut of the coding node, one
        // node per color, and nowhere else.
        for n in 0..5 {
            let coding = tree.node(tree.coding_id(n));
            let order = tree.spec.order_rel().unwrap();
            for i in 0..tree.levels[n].len() {
                let t = tree.node((n, i));
                let same_cut = (0..tree.prefix.lang.relations.len())
                    .filter(|&r| r == order)
                    .all(|r| {
                        t.pos.iter().filter(|a| a.rel == r).collect::<Vec<_>>()
                            == coding.pos.iter().filter(|a| a.rel == r).collect::<Vec<_>>()
                    });
                let k = tree.children((n, i)).len();
                assert_eq!(k, if same_cut { 2 } else { 1 }, "level {n} node {i}");
            }
        }
    }

    #[test]
    fn hypergraph_tree_branching_powers_of_two() {
        let spec = ClassSpec::Hypergraph(3);
        let tree = CodingTree::build(&spec, 5, TreeMode::S).unwrap();
        for n in 0..5 {
            for i in 0..tree.levels[n].len() {
                assert_eq!(tree.children((n, i)).len(), 1 << n);
            }
        }
    }

    #[test]
    fn u_mode_level_zero_single_node() {
        let spec = ClassSpec::ColoredOrder(2);
        let tree = CodingTree::build(&spec, 4, TreeMode::U).unwrap();
        assert_eq!(tree.levels[0].len(), 1);
        assert!(tree.coding.iter().all(|c| c.color.is_some()));
    }

    #[test]
    fn rado_passing_types_are_binary() {
        let spec = ClassSpec::parse("rado").unwrap();
        let mut e = Enumeration::new(spec);
        e.ensure_size(8);
        let (t, _) = e.coding_node(6, TreeMode::S);
        for l in 1..=6 {
            let b = passing_type(&t, l);
            assert!(b.len() <= 1, "binary passing type has at most one atom");
        }
    }

    #[test]
    fn prec_is_total_per_level_and_transitive() {
        let spec = ClassSpec::parse("rado").unwrap();
        let tree = CodingTree::build(&spec, 5, TreeMode::S).unwrap();
        let lvl = &tree.levels[4];
        for a in lvl {
            for b in lvl {
                let o = prec(a, b);
                if a == b {
                    assert_eq!(o, Ordering::Equal);
                } else {
                    assert_ne!(o, Ordering::Equal);
                    assert_eq!(prec(b, a), o.reverse());
                }
                for c in lvl {
                    if prec(a, b) == Ordering::Less && prec(b, c) == Ordering::Less {
                        assert_eq!(prec(a, c), Ordering::Less);
                    }
                }
            }
        }
        // Levels are stored sorted.
        for lvl in &tree.levels {
            for w in lvl.windows(2) {
                assert_eq!(prec(&w[0], &w[1]), Ordering::Less);
            }
        }
    }

    #[test]
    fn induced_subtree_examples() {
        let spec = ClassSpec::LinearOrder;
        let tree = CodingTree::build(&spec, 6, TreeMode::S).unwrap();
        // Singleton: just the node.
        let s = induced_subtree(&tree, &[3]);
        assert_eq!(s.nodes.len(), 1);
        // Two incomparable coding nodes: both plus their meet.
        let mut pair = None;
        'search: for i in 0..6 {
            for j in (i + 1)..6 {
                let a = tree.node(tree.coding_id(i));
                let b = tree.node(tree.coding_id(j));
                if !b.extends(a) && !a.extends(b) {
                    pair = Some((i, j));
                    break 'search;
                }
            }
        }
        let (i, j) = pair.expect("some incomparable coding pair below depth 6");
        let s = induced_subtree(&tree, &[i, j]);
        assert!(s.nodes.len() >= 3, "incomparable pair plus meet");
        // Four coding nodes: the closure occupies at most 2*4 - 1
        // distinct critical lengths.
        for set in [[0, 2, 3, 5], [0, 1, 2, 3], [2, 3, 4, 5]] {
            let s = induced_subtree(&tree, &set);
            let lens: BTreeSet<u32> = s.nodes.iter().map(|&id| tree.node(id).len()).collect();
            assert!(lens.len() <= 2 * 4 - 1, "critical lengths {lens:?}");
        }
    }

    #[test]
    fn identity_is_similarity() {
        let spec = ClassSpec::parse("rado").unwrap();
        let tree = CodingTree::build(&spec, 6, TreeMode::S).unwrap();
        let s = induced_subtree(&tree, &[1, 3, 4]);
        let map: Vec<(NodeId, NodeId)> = s.nodes.iter().map(|&id| (id, id)).collect();
        assert!(is_similarity(&map, &s, &s));
    }

    #[test]
    fn length_order_breaking_map_rejected() {
        let spec = ClassSpec::parse("rado").unwrap();
        let tree = CodingTree::build(&spec, 6, TreeMode::S).unwrap();
        let s = induced_subtree(&tree, &[1, 3]);
        let t = induced_subtree(&tree, &[2, 4]);
        if s.nodes.len() == t.nodes.len() {
            let mut sv: Vec<NodeId> = s.nodes.iter().copied().collect();
            let tv: Vec<NodeId> = t.nodes.iter().copied().collect();
            // Swap two entries to break relative lengths.
            sv.sort_by_key(|&id| tree.node(id).len());
            let mut tv2 = tv.clone();
            tv2.sort_by_key(|&id| std::cmp::Reverse(tree.node(id).len()));
            let map: Vec<(NodeId, NodeId)> = sv.into_iter().zip(tv2).collect();
            assert!(!is_similarity(&map, &s, &t));
        }
    }

    #[test]
    fn similarity_implies_ordered_iso() {
        // Canonical similarity of induced subtrees forces the represented
        // substructures to be order-isomorphic.
        let spec = ClassSpec::parse("rado").unwrap();
        let mut e = Enumeration::new(spec.clone());
        e.ensure_size(12);
        let tree = CodingTree::build_over(&spec, &e, 8, TreeMode::S).unwrap();
        let mut found = 0;
        let sets: Vec<Vec<usize>> = vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![1, 3], vec![0, 2]];
        for a in &sets {
            for b in &sets {
                let s = induced_subtree(&tree, a);
                let t = induced_subtree(&tree, b);
                if let Some(_map) = canonical_similarity(&s, &t) {
                    found += 1;
                    let av: Vec<Vertex> = a.iter().map(|&x| x as Vertex).collect();
                    let bv: Vec<Vertex> = b.iter().map(|&x| x as Vertex).collect();
                    let (lhs, _) = fact_bridge(&e, &av, &bv);
                    assert!(lhs, "similar subtrees must represent ordered-isomorphic structures");
                }
            }
        }
        assert!(found >= sets.len(), "at least the identities must be similar");
    }
}

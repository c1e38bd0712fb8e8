//! The catalogue of homogeneous-structure classes: class specifications,
//! membership tests for finite structures, and the realizability oracle
//! deciding which 1-types over a prefix extend to a class member.

use crate::error::{Error, Result};
use crate::lang::{Language, RelKind, Relation};
use crate::structure::{enumerate_embeddings, validate_structure, FinStructure, Vertex};
use crate::typenode::{block_atoms, Atom, Param, TypeNode};
use std::cmp::Ordering;
use std::collections::BTreeSet;

/// Which tree of 1-types is being populated: the full tree (`S`) whose
/// nodes carry unary relations, or the unary-colored tree (`U`) whose
/// non-coding nodes drop them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeMode {
    S,
    U,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassSpec {
    /// Dense linear order (the rationals).
    LinearOrder,
    /// Linear order with a dense partition into `n` unary classes.
    ColoredOrder(usize),
    /// Linear order with a convexly ordered equivalence relation.
    ConvexEquivOrder,
    /// No constraints at all: every structure in the language belongs.
    /// Relations are binary; `rado` is the one-symmetric-edge instance.
    Unrestricted(Vec<(String, bool)>),
    /// Complete n-partite-free... vertices carry one of `n` parts and
    /// edges only join distinct parts.
    NPartite(usize),
    /// All k-uniform hypergraphs.
    Hypergraph(usize),
    /// Structures embedding none of the listed forbidden structures.
    ForbiddenFree {
        name: String,
        lang: Language,
        forbidden: Vec<FinStructure>,
    },
    /// Free superposition with a linear order.
    Ordered(Box<ClassSpec>),
}

impl ClassSpec {
    pub fn parse(s: &str) -> Result<ClassSpec> {
        let spec = match s {
            "q" => ClassSpec::LinearOrder,
            "qq" => ClassSpec::ConvexEquivOrder,
            "rado" => ClassSpec::Unrestricted(vec![("E".into(), true)]),
            "digraph" => ClassSpec::Unrestricted(vec![("A".into(), false)]),
            "bipartite" => ClassSpec::NPartite(2),
            "trianglefree" => ClassSpec::triangle_free(),
            "tetrafree" => ClassSpec::tetra_free(),
            _ => {
                if let Some(rest) = s.strip_prefix("ordered:") {
                    ClassSpec::Ordered(Box::new(ClassSpec::parse(rest)?))
                } else if let Some(n) = s.strip_prefix("qn:") {
                    let n: usize = n.parse().map_err(|_| Error::Parse(s.into()))?;
                    if n < 2 {
                        return Err(Error::Parse("qn:<n> needs n >= 2".into()));
                    }
                    ClassSpec::ColoredOrder(n)
                } else if let Some(n) = s.strip_prefix("npartite:") {
                    let n: usize = n.parse().map_err(|_| Error::Parse(s.into()))?;
                    if n < 2 {
                        return Err(Error::Parse("npartite:<n> needs n >= 2".into()));
                    }
                    ClassSpec::NPartite(n)
                } else if let Some(k) = s.strip_prefix("hypergraph:") {
                    let k: usize = k.parse().map_err(|_| Error::Parse(s.into()))?;
                    if k < 2 {
                        return Err(Error::Parse("hypergraph:<k> needs k >= 2".into()));
                    }
                    ClassSpec::Hypergraph(k)
                } else if let Some(k) = s.strip_prefix("multi:") {
                    let k: usize = k.parse().map_err(|_| Error::Parse(s.into()))?;
                    if k < 1 {
                        return Err(Error::Parse("multi:<k> needs k >= 1".into()));
                    }
                    ClassSpec::Unrestricted(
                        (0..k).map(|i| (format!("E{i}"), true)).collect(),
                    )
                } else {
                    return Err(Error::UnknownClass(s.into()));
                }
            }
        };
        Ok(spec)
    }

    pub fn triangle_free() -> ClassSpec {
        let lang = Language::new(
            vec![Relation {
                name: "E".into(),
                arity: 2,
                symmetric: true,
                kind: RelKind::Plain,
            }],
            false,
        )
        .unwrap();
        let mut k3 = FinStructure::new(lang.clone(), 3);
        k3.add(0, vec![0, 1]);
        k3.add(0, vec![0, 2]);
        k3.add(0, vec![1, 2]);
        ClassSpec::ForbiddenFree {
            name: "trianglefree".into(),
            lang,
            forbidden: vec![k3],
        }
    }

    /// 3-uniform hypergraphs omitting the complete 3-uniform hypergraph
    /// on four vertices (a 3-irreducible structure).
    pub fn tetra_free() -> ClassSpec {
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
        let mut k43 = FinStructure::new(lang.clone(), 4);
        k43.add(0, vec![0, 1, 2]);
        k43.add(0, vec![0, 1, 3]);
        k43.add(0, vec![0, 2, 3]);
        k43.add(0, vec![1, 2, 3]);
        ClassSpec::ForbiddenFree {
            name: "tetrafree".into(),
            lang,
            forbidden: vec![k43],
        }
    }

    pub fn id(&self) -> String {
        match self {
            ClassSpec::LinearOrder => "q".into(),
            ClassSpec::ColoredOrder(n) => format!("qn:{n}"),
            ClassSpec::ConvexEquivOrder => "qq".into(),
            ClassSpec::Unrestricted(rels) => {
                if rels.len() == 1 && rels[0] == ("E".to_string(), true) {
                    "rado".into()
                } else if rels.len() == 1 && !rels[0].1 {
                    "digraph".into()
                } else {
                    format!("multi:{}", rels.len())
                }
            }
            ClassSpec::NPartite(2) => "bipartite".into(),
            ClassSpec::NPartite(n) => format!("npartite:{n}"),
            ClassSpec::Hypergraph(k) => format!("hypergraph:{k}"),
            ClassSpec::ForbiddenFree { name, .. } => name.clone(),
            ClassSpec::Ordered(base) => format!("ordered:{}", base.id()),
        }
    }

    pub fn language(&self) -> Language {
        match self {
            ClassSpec::LinearOrder => Language::new(vec![order_sym()], false).unwrap(),
            ClassSpec::ColoredOrder(n) => {
                let mut rels: Vec<Relation> = (0..*n)
                    .map(|i| Relation {
                        name: format!("U{i}"),
                        arity: 1,
                        symmetric: false,
                        kind: RelKind::Plain,
                    })
                    .collect();
                rels.push(order_sym());
                Language::new(rels, true).unwrap()
            }
            ClassSpec::ConvexEquivOrder => Language::new(
                vec![
                    order_sym(),
                    Relation {
                        name: "E".into(),
                        arity: 2,
                        symmetric: true,
                        kind: RelKind::Equivalence,
                    },
                ],
                false,
            )
            .unwrap(),
            ClassSpec::Unrestricted(rels) => Language::new(
                rels.iter()
                    .map(|(name, sym)| Relation {
                        name: name.clone(),
                        arity: 2,
                        symmetric: *sym,
                        kind: RelKind::Plain,
                    })
                    .collect(),
                false,
            )
            .unwrap(),
            ClassSpec::NPartite(n) => {
                let mut rels: Vec<Relation> = (0..*n)
                    .map(|i| Relation {
                        name: format!("U{i}"),
                        arity: 1,
                        symmetric: false,
                        kind: RelKind::Plain,
                    })
                    .collect();
                rels.push(Relation {
                    name: "E".into(),
                    arity: 2,
                    symmetric: true,
                    kind: RelKind::Plain,
                });
                Language::new(rels, true).unwrap()
            }
            ClassSpec::Hypergraph(k) => Language::new(
                vec![Relation {
                    name: "R".into(),
                    arity: *k,
                    symmetric: true,
                    kind: RelKind::Plain,
                }],
                false,
            )
            .unwrap(),
            ClassSpec::ForbiddenFree { lang, .. } => lang.clone(),
            ClassSpec::Ordered(base) => {
                let mut lang = base.language();
                lang.relations.push(order_sym());
                lang
            }
        }
    }

    /// Forbidden structures lifted into this class's language (used by
    /// ordered expansions, whose members must avoid them in the reduct).
    fn forbidden_lifted(&self) -> Vec<FinStructure> {
        match self {
            ClassSpec::ForbiddenFree { forbidden, .. } => forbidden.clone(),
            ClassSpec::Ordered(base) => {
                let lang = self.language();
                base.forbidden_lifted()
                    .into_iter()
                    .map(|f| {
                        let mut lifted = FinStructure::new(lang.clone(), f.size);
                        for (r, set) in f.tuples.iter().enumerate() {
                            for t in set {
                                lifted.add(r, t.clone());
                            }
                        }
                        lifted
                    })
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    /// A forbidden structure embeds into `s` ignoring relations absent
    /// from it (order relations of an expansion).
    fn forbidden_embeds(&self, s: &FinStructure) -> bool {
        for f in self.forbidden_lifted() {
            // Reduct comparison: drop tuples of symbols the forbidden
            // structure does not constrain (it has none there anyway, so
            // embed in the reduct language).
            let constrained: Vec<usize> = (0..f.lang.relations.len())
                .filter(|&r| f.lang.rel(r).kind == RelKind::Plain)
                .collect();
            let mut red_lang = f.lang.clone();
            red_lang.unary_partition = false;
            let reduct = |x: &FinStructure| {
                let mut out = FinStructure::new(red_lang.clone(), x.size);
                for &r in &constrained {
                    out.tuples[r] = x.tuples[r].clone();
                }
                out
            };
            if !enumerate_embeddings(&reduct(&f), &reduct(s))
                .map(|e| e.is_empty())
                .unwrap_or(true)
            {
                return true;
            }
        }
        false
    }

    /// Number of relation symbols, without building the language.
    fn rel_count(&self) -> usize {
        match self {
            ClassSpec::LinearOrder => 1,
            ClassSpec::ColoredOrder(n) => n + 1,
            ClassSpec::ConvexEquivOrder => 2,
            ClassSpec::Unrestricted(rels) => rels.len(),
            ClassSpec::NPartite(n) => n + 1,
            ClassSpec::Hypergraph(_) => 1,
            ClassSpec::ForbiddenFree { lang, .. } => lang.relations.len(),
            ClassSpec::Ordered(base) => base.rel_count() + 1,
        }
    }

    pub fn order_rel(&self) -> Option<usize> {
        match self {
            ClassSpec::LinearOrder => Some(0),
            ClassSpec::ColoredOrder(n) => Some(*n),
            ClassSpec::ConvexEquivOrder => Some(0),
            ClassSpec::ForbiddenFree { lang, .. } => lang.order_rel(),
            ClassSpec::Ordered(base) => Some(base.rel_count()),
            _ => None,
        }
    }

    pub fn equiv_rel(&self) -> Option<usize> {
        match self {
            ClassSpec::ConvexEquivOrder => Some(1),
            ClassSpec::ForbiddenFree { lang, .. } => lang.equiv_rel(),
            ClassSpec::Ordered(base) => base.equiv_rel(),
            _ => None,
        }
    }

    fn npartite_edge(&self) -> Option<usize> {
        match self {
            ClassSpec::NPartite(n) => Some(*n),
            ClassSpec::Ordered(base) => base.npartite_edge(),
            _ => None,
        }
    }

    /// Full membership test for a finite structure.
    pub fn is_member(&self, s: &FinStructure) -> bool {
        if s.lang != self.language() {
            return false;
        }
        if !validate_structure(s).is_empty() {
            return false;
        }
        let n = s.size as Vertex;
        if let Some(o) = self.order_rel() {
            for u in 0..n {
                for v in 0..n {
                    if u == v {
                        continue;
                    }
                    let uv = s.holds(o, &[u, v]);
                    let vu = s.holds(o, &[v, u]);
                    if uv == vu {
                        return false; // totality and antisymmetry
                    }
                    if uv {
                        for w in 0..n {
                            if w != u && w != v && s.holds(o, &[v, w]) && !s.holds(o, &[u, w]) {
                                return false; // transitivity
                            }
                        }
                    }
                }
            }
        }
        if let Some(e) = self.equiv_rel() {
            for a in 0..n {
                for b in 0..n {
                    if a == b || !s.holds(e, &[a, b]) {
                        continue;
                    }
                    for c in 0..n {
                        if c != a && c != b && s.holds(e, &[b, c]) && !s.holds(e, &[a, c]) {
                            return false; // transitivity
                        }
                    }
                    if let Some(o) = self.order_rel() {
                        // convexity: anything between equivalent points is
                        // equivalent to them
                        for w in 0..n {
                            if w != a
                                && w != b
                                && s.holds(o, &[a, w])
                                && s.holds(o, &[w, b])
                                && !s.holds(e, &[a, w])
                            {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        if let Some(e) = self.npartite_edge() {
            for a in 0..n {
                for b in (a + 1)..n {
                    if s.holds(e, &[a, b]) && s.unaries_of(a) == s.unaries_of(b) {
                        return false;
                    }
                }
            }
        }
        if self.forbidden_embeds(s) {
            return false;
        }
        true
    }

    /// Incremental form of membership: given a class member `amb`
    /// restricted to its first `n` vertices and a set of positive atoms
    /// describing a new point `x`, decide whether the extension stays in
    /// the class. With `complete = false` the atoms may leave some facts
    /// undecided and only decided facts are checked.
    pub fn extension_ok(
        &self,
        amb: &FinStructure,
        n: usize,
        pos: &[Atom],
        complete: bool,
    ) -> bool {
        let lang = &amb.lang;
        debug_assert_eq!(*lang, self.language());
        let holds = |rel: usize, t: &[Vertex]| amb.holds(rel, t);

        // Partition mode: exactly one unary.
        if lang.unary_partition && complete {
            let unaries = pos
                .iter()
                .filter(|a| lang.rel(a.rel).arity == 1)
                .count();
            if unaries != 1 {
                return false;
            }
        }

        let mut below: Vec<Vertex> = Vec::new(); // v < x
        let mut above: Vec<Vertex> = Vec::new(); // x < v
        if let Some(o) = self.order_rel() {
            for a in pos.iter().filter(|a| a.rel == o) {
                match (&a.args[0], &a.args[1]) {
                    (Param::V(v), Param::X) => below.push(*v),
                    (Param::X, Param::V(v)) => above.push(*v),
                    _ => return false,
                }
            }
            for &v in &below {
                if above.contains(&v) {
                    return false;
                }
            }
            if complete && below.len() + above.len() != n {
                return false;
            }
            // Every lower bound must lie below every upper bound.
            for &l in &below {
                for &u in &above {
                    if !holds(o, &[l, u]) {
                        return false;
                    }
                }
            }
        }

        if let Some(e) = self.equiv_rel() {
            let ex: Vec<Vertex> = pos
                .iter()
                .filter(|a| a.rel == e)
                .filter_map(|a| {
                    a.args.iter().find_map(|p| match p {
                        Param::V(v) => Some(*v),
                        Param::X => None,
                    })
                })
                .collect();
            // All equivalent points must already be mutually equivalent.
            for i in 0..ex.len() {
                for j in (i + 1)..ex.len() {
                    if !holds(e, &[ex[i], ex[j]]) {
                        return false;
                    }
                }
            }
            if complete {
                // x's class is a full existing class or empty.
                if let Some(&c0) = ex.first() {
                    for v in 0..n as Vertex {
                        if v != c0 && holds(e, &[c0, v]) && !ex.contains(&v) {
                            return false;
                        }
                    }
                }
            }
            if let Some(o) = self.order_rel() {
                let same_class = |a: Vertex, b: Vertex| a == b || holds(e, &[a, b]);
                let x_class = |v: Vertex| ex.iter().any(|&c| same_class(c, v));
                // A class other than x's cannot have members on both sides.
                for &l in &below {
                    for &u in &above {
                        if same_class(l, u) && !x_class(l) {
                            return false;
                        }
                    }
                }
                // Nothing may sit between x and a point of its class.
                for &c in &ex {
                    if above.contains(&c) {
                        for &u in &above {
                            if !x_class(u) && holds(o, &[u, c]) {
                                return false;
                            }
                        }
                    }
                    if below.contains(&c) {
                        for &l in &below {
                            if !x_class(l) && holds(o, &[c, l]) {
                                return false;
                            }
                        }
                    }
                }
            }
        }

        if let Some(e) = self.npartite_edge() {
            let my_part: Option<usize> = pos
                .iter()
                .find(|a| lang.rel(a.rel).arity == 1)
                .map(|a| a.rel);
            for a in pos.iter().filter(|a| a.rel == e) {
                let v = a
                    .args
                    .iter()
                    .find_map(|p| match p {
                        Param::V(v) => Some(*v),
                        Param::X => None,
                    })
                    .unwrap();
                if let Some(p) = my_part {
                    if holds(p, &[v]) {
                        return false;
                    }
                } else if complete {
                    return false;
                }
            }
        }

        if self.has_forbidden() && !self.forbidden_ext_ok(amb, n, pos) {
            return false;
        }
        true
    }

    pub fn has_forbidden(&self) -> bool {
        match self {
            ClassSpec::ForbiddenFree { .. } => true,
            ClassSpec::Ordered(base) => base.has_forbidden(),
            _ => false,
        }
    }

    /// No forbidden structure embeds into prefix + x using the new point.
    fn forbidden_ext_ok(&self, amb: &FinStructure, n: usize, pos: &[Atom]) -> bool {
        let lang = &amb.lang;
        let x: Vertex = u32::MAX; // sentinel for the new point
        let holds_ext = |rel: usize, t: &[Vertex]| -> bool {
            if t.contains(&x) {
                let args: Vec<Param> = t
                    .iter()
                    .map(|&v| if v == x { Param::X } else { Param::V(v) })
                    .collect();
                let atom = Atom::new(lang, rel, args);
                pos.contains(&atom)
            } else {
                amb.holds(rel, t)
            }
        };
        for f in self.forbidden_lifted() {
            let constrained: Vec<usize> = (0..f.lang.relations.len())
                .filter(|&r| f.lang.rel(r).kind == RelKind::Plain && f.lang.rel(r).arity > 1)
                .collect();
            // Map some forbidden vertex to x, the rest into the prefix.
            for fx in 0..f.size {
                let mut image: Vec<Option<Vertex>> = vec![None; f.size];
                image[fx] = Some(x);
                if embed_forbidden(&f, &constrained, &mut image, 0, n, &holds_ext) {
                    return false;
                }
            }
        }
        true
    }
}

fn embed_forbidden(
    f: &FinStructure,
    constrained: &[usize],
    image: &mut Vec<Option<Vertex>>,
    next: usize,
    n: usize,
    holds_ext: &impl Fn(usize, &[Vertex]) -> bool,
) -> bool {
    let next = (next..f.size).find(|&i| image[i].is_none());
    let Some(slot) = next else {
        return check_forbidden_map(f, constrained, image, holds_ext);
    };
    for w in 0..n as Vertex {
        if image.contains(&Some(w)) {
            continue;
        }
        image[slot] = Some(w);
        // prune on decided tuples involving the slot
        if partial_forbidden_ok(f, constrained, image, holds_ext)
            && embed_forbidden(f, constrained, image, slot + 1, n, holds_ext)
        {
            image[slot] = None;
            return true;
        }
        image[slot] = None;
    }
    false
}

fn forbidden_tuples(f: &FinStructure, constrained: &[usize]) -> Vec<(usize, Vec<Vertex>, bool)> {
    // Both positive and negative facts over the forbidden structure
    // (embedding preserves and reflects).
    let mut out = Vec::new();
    for &r in constrained {
        let arity = f.lang.rel(r).arity;
        let dom: Vec<Vertex> = (0..f.size as Vertex).collect();
        let mut scratch = Vec::new();
        crate::structure::tuples_over(&dom, arity, &mut scratch, &mut |t| {
            out.push((r, t.to_vec(), f.holds(r, t)));
            true
        });
    }
    out
}

fn check_forbidden_map(
    f: &FinStructure,
    constrained: &[usize],
    image: &[Option<Vertex>],
    holds_ext: &impl Fn(usize, &[Vertex]) -> bool,
) -> bool {
    for (r, t, want) in forbidden_tuples(f, constrained) {
        let mapped: Vec<Vertex> = t.iter().map(|&v| image[v as usize].unwrap()).collect();
        if holds_ext(r, &mapped) != want {
            return false;
        }
    }
    true
}

fn partial_forbidden_ok(
    f: &FinStructure,
    constrained: &[usize],
    image: &[Option<Vertex>],
    holds_ext: &impl Fn(usize, &[Vertex]) -> bool,
) -> bool {
    for (r, t, want) in forbidden_tuples(f, constrained) {
        let mapped: Option<Vec<Vertex>> = t.iter().map(|&v| image[v as usize]).collect();
        if let Some(mapped) = mapped {
            if holds_ext(r, &mapped) != want {
                return false;
            }
        }
    }
    true
}

fn order_sym() -> Relation {
    Relation {
        name: "<".into(),
        arity: 2,
        symmetric: false,
        kind: RelKind::LinearOrder,
    }
}

impl ClassSpec {
    /// Realizability of a complete 1-type over the prefix of `amb` of
    /// size `n`: true iff the one-point extension stays in the class.
    pub fn realizable(&self, amb: &FinStructure, n: usize, t: &TypeNode, mode: TreeMode) -> bool {
        debug_assert_eq!(t.level as usize, n);
        match mode {
            TreeMode::S => self.extension_ok(amb, n, &t.pos, true),
            TreeMode::U => {
                let lang = &amb.lang;
                let unaries = lang.unary_rels();
                if unaries.is_empty() {
                    self.extension_ok(amb, n, &t.pos, true)
                } else {
                    unaries.iter().any(|&u| {
                        let mut pos = t.pos.clone();
                        pos.push(Atom {
                            rel: u,
                            args: vec![Param::X],
                        });
                        pos.sort_unstable();
                        self.extension_ok(amb, n, &pos, true)
                    })
                }
            }
        }
    }

    /// The realizable level-0 types (the set Gamma in S-mode; the single
    /// empty type in U-mode).
    pub fn roots(&self, mode: TreeMode) -> Vec<TypeNode> {
        let lang = self.language();
        match mode {
            TreeMode::U => vec![TypeNode::new(0, vec![])],
            TreeMode::S => {
                if lang.unary_partition {
                    let mut out: Vec<TypeNode> = lang
                        .unary_rels()
                        .into_iter()
                        .map(|u| {
                            TypeNode::new(
                                0,
                                vec![Atom {
                                    rel: u,
                                    args: vec![Param::X],
                                }],
                            )
                        })
                        .collect();
                    out.sort_by(crate::typenode::prec);
                    out
                } else {
                    vec![TypeNode::new(0, vec![])]
                }
            }
        }
    }

    /// All realizable complete 1-types over the prefix of `amb` of size
    /// `n`, sorted by the tree order. Enumerates by extending blocks, so
    /// the cost is the size of the level, not of the ambient structure.
    pub fn level_types(
        &self,
        amb: &FinStructure,
        n: usize,
        mode: TreeMode,
        cap: usize,
    ) -> Result<Vec<TypeNode>> {
        assert!(n <= amb.size);
        let lang = self.language();
        let mut cur = self.roots(mode);
        for i in 1..=n {
            let atoms = block_atoms(&lang, i);
            if atoms.len() > 24 {
                return Err(Error::DepthExhausted(format!(
                    "level {i} has {} candidate atoms",
                    atoms.len()
                )));
            }
            let mut next = Vec::new();
            for node in &cur {
                for subset in subsets(&atoms) {
                    let cand = node.extend(&subset);
                    let ok = match mode {
                        TreeMode::S => self.extension_ok(amb, i, &cand.pos, true),
                        TreeMode::U => self.realizable(amb, i, &cand, TreeMode::U),
                    };
                    if ok {
                        next.push(cand);
                    }
                }
            }
            if next.len() > cap {
                return Err(Error::DepthExhausted(format!(
                    "level {i} exceeds cap {cap} with {} types",
                    next.len()
                )));
            }
            cur = next;
        }
        cur.sort_by(crate::typenode::prec);
        Ok(cur)
    }

    /// Candidate one-block continuations at level `i` under forced signs,
    /// smallest first in the tree order. Atoms of plain relations default
    /// to negative unless forced; atoms of order/equivalence symbols are
    /// enumerated, which keeps the candidate count bounded while still
    /// reaching every consistent completion.
    pub fn candidate_blocks(
        &self,
        amb: &FinStructure,
        i: usize,
        base_pos: &[Atom],
        forced_pos: &[Atom],
        forced_neg: &[Atom],
    ) -> Vec<Vec<Atom>> {
        let lang = &amb.lang;
        let atoms = block_atoms(lang, i);
        let mut fixed: Vec<Atom> = forced_pos.to_vec();
        let mut variable: Vec<Atom> = Vec::new();
        for a in &atoms {
            if forced_pos.contains(a) || forced_neg.contains(a) {
                continue;
            }
            let kind = lang.rel(a.rel).kind;
            if kind == RelKind::LinearOrder || kind == RelKind::Equivalence {
                variable.push(a.clone());
            }
        }
        let mut blocks = Vec::new();
        for subset in subsets(&variable) {
            let mut block = fixed.clone();
            block.extend(subset);
            block.sort_unstable();
            let mut pos: Vec<Atom> = base_pos.to_vec();
            pos.extend(block.iter().cloned());
            if self.extension_ok(amb, i, &pos, true) {
                blocks.push(block);
            }
        }
        let _ = &mut fixed;
        blocks.sort_by(|a, b| cmp_pos_blocks(a, b));
        blocks.dedup();
        blocks
    }

    /// Canonical class members of size <= k, isomorphism-reduced,
    /// deterministic order.
    pub fn members_upto(&self, k: usize) -> Vec<FinStructure> {
        let lang = self.language();
        let mut all: Vec<FinStructure> = vec![FinStructure::empty(lang.clone())];
        let mut frontier = all.clone();
        for _size in 1..=k {
            let mut next: Vec<FinStructure> = Vec::new();
            let mut seen: BTreeSet<String> = BTreeSet::new();
            for m in &frontier {
                for t in self
                    .level_types(m, m.size, TreeMode::S, 1 << 20)
                    .unwrap_or_default()
                {
                    let ext = crate::typenode::one_point_extension(m, &t);
                    if !self.is_member(&ext) {
                        continue;
                    }
                    let canon = ext.canonical();
                    let key = serde_json::to_string(&canon.tuples).unwrap();
                    if seen.insert(key) {
                        next.push(canon);
                    }
                }
            }
            all.extend(next.iter().cloned());
            frontier = next;
        }
        all
    }

    /// The uniform pattern of a coding node's immediate successor at its
    /// own vertex, used to keep passing types coherent along chains of
    /// coding nodes in diagonal trees.
    pub fn plus_pattern(&self, newest: Vertex) -> Vec<Atom> {
        let lang = self.language();
        let mut out = Vec::new();
        if let Some(o) = self.order_rel() {
            out.push(Atom {
                rel: o,
                args: vec![Param::V(newest), Param::X],
            });
        }
        if let Some(e) = self.equiv_rel() {
            out.push(Atom::new(&lang, e, vec![Param::X, Param::V(newest)]));
        }
        out.sort_unstable();
        out
    }
}

/// Compare two blocks of positive atoms by the tree order.
pub fn cmp_pos_blocks(x: &[Atom], y: &[Atom]) -> Ordering {
    let mut i = 0;
    loop {
        match (x.get(i), y.get(i)) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(a), Some(b)) => match a.cmp(b) {
                Ordering::Equal => i += 1,
                Ordering::Less => return Ordering::Greater,
                Ordering::Greater => return Ordering::Less,
            },
        }
    }
}

fn subsets(atoms: &[Atom]) -> Vec<Vec<Atom>> {
    let mut out = vec![Vec::new()];
    for a in atoms {
        let mut more = Vec::new();
        for s in &out {
            let mut t = s.clone();
            t.push(a.clone());
            more.push(t);
        }
        out.extend(more);
    }
    out
}

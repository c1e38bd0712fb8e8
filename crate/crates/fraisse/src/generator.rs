//! Deterministic incremental construction of enumerated limits.
//!
//! The generator keeps a FIFO queue of obligations. A level obligation
//! asks for a vertex realizing a given 1-type over an initial segment; an
//! age obligation embeds one more vertex of a small canonical member.
//! Realized level obligations are re-enqueued, so every enumerated type
//! is realized cofinally. Level enumeration stops once a level outgrows
//! the cap; obligations already queued keep cycling.

use crate::catalogue::{ClassSpec, TreeMode};
use crate::lang::{Language, RelKind};
use crate::structure::{FinStructure, Vertex};
use crate::typenode::{block_atoms, type_of, Atom, Param, TypeNode};
use std::collections::VecDeque;

/// A pattern for a new vertex over a set of existing vertices.
/// `pos` uses template indices: `V(j)` stands for `params[j]`.
#[derive(Debug, Clone)]
pub struct Task {
    pub params: Vec<Vertex>,
    pub pos: Vec<Atom>,
}

impl Task {
    pub fn from_level_type(level: usize, node: &TypeNode) -> Task {
        Task {
            params: (0..level as Vertex).collect(),
            pos: node.pos.clone(),
        }
    }

    /// Positive atoms translated to concrete vertices.
    fn translated(&self, lang: &Language) -> Vec<Atom> {
        self.pos
            .iter()
            .map(|a| a.translate(lang, &|j| self.params[j as usize]))
            .collect()
    }
}

#[derive(Debug, Clone)]
enum Item {
    Level { base: usize, node: TypeNode },
    AgeStep { member: FinStructure, placed: Vec<Vertex> },
}

#[derive(Debug, Clone)]
struct Queued {
    item: Item,
    enqueued_at: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerEntry {
    pub enqueued_at: usize,
    pub realized_at: usize,
    pub base_level: usize,
}

/// Running lower/upper bounds of the new point in the prefix order.
#[derive(Debug, Clone, Copy, Default)]
pub struct CutState {
    pub lo: Option<Vertex>,
    pub hi: Option<Vertex>,
}

impl CutState {
    /// Update for the decision `below == true` (u < x). Returns false if
    /// the decision contradicts the current bounds.
    pub fn push(
        &mut self,
        amb: &FinStructure,
        order: usize,
        u: Vertex,
        below: bool,
    ) -> bool {
        let lt = |a: Vertex, b: Vertex| amb.holds(order, &[a, b]);
        if below {
            if let Some(h) = self.hi {
                if !lt(u, h) {
                    return false;
                }
            }
            if self.lo.map_or(true, |l| lt(l, u)) {
                self.lo = Some(u);
            }
        } else {
            if let Some(l) = self.lo {
                if !lt(l, u) {
                    return false;
                }
            }
            if self.hi.map_or(true, |h| lt(u, h)) {
                self.hi = Some(u);
            }
        }
        true
    }
}

pub struct Enumeration {
    pub spec: ClassSpec,
    built: FinStructure,
    level_queue: VecDeque<Queued>,
    age_queue: VecDeque<Queued>,
    level_cursor: usize,
    level_cap: usize,
    max_task_level: usize,
    age_upto: usize,
    seeded: bool,
    steps: usize,
    ledger: Vec<LedgerEntry>,
}

impl Enumeration {
    pub fn new(spec: ClassSpec) -> Enumeration {
        let built = FinStructure::empty(spec.language());
        Enumeration {
            spec,
            built,
            level_queue: VecDeque::new(),
            age_queue: VecDeque::new(),
            level_cursor: 0,
            level_cap: 2048,
            max_task_level: 12,
            age_upto: 4,
            seeded: false,
            steps: 0,
            ledger: Vec::new(),
        }
    }

    /// Start from a given class member instead of the empty structure.
    pub fn with_seed(spec: ClassSpec, seed: FinStructure) -> Enumeration {
        assert!(spec.is_member(&seed), "seed must be a class member");
        let mut e = Enumeration::new(spec);
        e.level_cursor = 0;
        e.built = seed;
        e
    }

    pub fn structure(&self) -> &FinStructure {
        &self.built
    }

    pub fn size(&self) -> usize {
        self.built.size
    }

    pub fn prefix(&self, n: usize) -> FinStructure {
        self.built.prefix(n)
    }

    pub fn ledger(&self) -> &[LedgerEntry] {
        &self.ledger
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn seed_queue(&mut self) {
        if self.seeded {
            return;
        }
        self.seeded = true;
        for m in self.spec.members_upto(self.age_upto) {
            if m.size == 0 {
                continue;
            }
            self.age_queue.push_back(Queued {
                item: Item::AgeStep {
                    member: m,
                    placed: Vec::new(),
                },
                enqueued_at: self.steps,
            });
        }
    }

    fn unlock_levels(&mut self) {
        while self.level_cursor <= self.built.size
            && self.level_cursor <= self.max_task_level
            && self.level_cursor != usize::MAX
        {
            let lvl = self.level_cursor;
            match self
                .spec
                .level_types(&self.built, lvl, TreeMode::S, self.level_cap)
            {
                Ok(types) => {
                    for t in types {
                        self.level_queue.push_back(Queued {
                            item: Item::Level {
                                base: lvl,
                                node: t,
                            },
                            enqueued_at: self.steps,
                        });
                    }
                    self.level_cursor += 1;
                }
                Err(_) => {
                    self.level_cursor = usize::MAX;
                }
            }
        }
    }

    /// Realize one obligation with one new vertex. Age obligations (which
    /// embed small canonical members) alternate with level obligations
    /// (which realize 1-types over initial segments, cofinally).
    pub fn step(&mut self) {
        self.seed_queue();
        self.unlock_levels();
        let from_age = self.steps % 2 == 0 && !self.age_queue.is_empty();
        let q = if from_age {
            self.age_queue.pop_front()
        } else {
            self.level_queue.pop_front().or_else(|| self.age_queue.pop_front())
        };
        let Some(q) = q else {
            self.append_least();
            self.steps += 1;
            return;
        };
        match q.item {
            Item::Level { base, node } => {
                let task = Task::from_level_type(base, &node);
                let t = self
                    .complete(&task)
                    .expect("level obligation must stay completable");
                self.append(&t);
                self.ledger.push(LedgerEntry {
                    enqueued_at: q.enqueued_at,
                    realized_at: self.steps,
                    base_level: base,
                });
                self.level_queue.push_back(Queued {
                    item: Item::Level { base, node },
                    enqueued_at: self.steps,
                });
            }
            Item::AgeStep { member, placed } => {
                let j = placed.len();
                let pattern = type_of(&member, j, j as Vertex);
                let task = Task {
                    params: placed.clone(),
                    pos: pattern.pos,
                };
                let t = self
                    .complete(&task)
                    .expect("age obligation must stay completable");
                let v = self.append(&t);
                self.ledger.push(LedgerEntry {
                    enqueued_at: q.enqueued_at,
                    realized_at: self.steps,
                    base_level: j,
                });
                if j + 1 < member.size {
                    let mut placed = placed;
                    placed.push(v);
                    self.age_queue.push_front(Queued {
                        item: Item::AgeStep { member, placed },
                        enqueued_at: self.steps,
                    });
                }
            }
        }
        self.steps += 1;
    }

    pub fn ensure_size(&mut self, n: usize) {
        while self.built.size < n {
            self.step();
        }
    }

    /// Append a vertex realizing the pattern right now, outside the
    /// obligation queue. Panics if the pattern cannot be completed (the
    /// catalogue classes always can).
    pub fn realize_now(&mut self, task: &Task) -> Vertex {
        let t = self.complete(task).expect("pattern must be completable");
        self.append(&t)
    }

    /// Append a vertex realizing a full type over the current prefix.
    pub fn realize_type(&mut self, t: &TypeNode) -> Vertex {
        assert_eq!(t.level as usize, self.built.size);
        self.append(t)
    }

    /// Append the least realizable vertex (no constraints).
    pub fn append_least(&mut self) -> Vertex {
        let task = Task {
            params: Vec::new(),
            pos: Vec::new(),
        };
        self.realize_now(&task)
    }

    fn append(&mut self, t: &TypeNode) -> Vertex {
        debug_assert_eq!(t.level as usize, self.built.size);
        debug_assert!(
            self.spec
                .extension_ok(&self.built, self.built.size, &t.pos, true),
            "appending unrealizable type"
        );
        let v = self.built.size as Vertex;
        self.built.size += 1;
        for atom in &t.pos {
            let (rel, tup) = atom.instantiate(&self.built.lang.clone(), v);
            self.built.add(rel, tup);
        }
        v
    }

    /// The n-th coding node: the type of vertex n over the prefix of
    /// size n, with its parameter-free color in U-mode.
    pub fn coding_node(&self, n: usize, mode: TreeMode) -> (TypeNode, Option<usize>) {
        assert!(n < self.built.size);
        let t = type_of(&self.built, n, n as Vertex);
        match mode {
            TreeMode::S => (t, None),
            TreeMode::U => {
                let lang = &self.built.lang;
                let color = lang
                    .unary_rels()
                    .into_iter()
                    .position(|u| self.built.holds(u, &[n as Vertex]));
                (t.strip_unary(lang), color)
            }
        }
    }

    /// Least completion of a pattern to a full type over the current
    /// prefix, depth-first over the bounded per-level candidates.
    pub fn complete(&self, task: &Task) -> Option<TypeNode> {
        complete_over(&self.spec, &self.built, self.built.size, task)
    }
}

/// Complete `task` to a full 1-type over the first `n` vertices of
/// `amb`, taking the least realizable choice at every level.
pub fn complete_over(
    spec: &ClassSpec,
    amb: &FinStructure,
    n: usize,
    task: &Task,
) -> Option<TypeNode> {
    let lang = &amb.lang;
    let translated = task.translated(lang);
    // Forced signs per block: atoms fully inside the parameter set are
    // pinned by the (complete) pattern.
    let in_params = |a: &Atom| {
        a.args.iter().all(|p| match p {
            Param::X => true,
            Param::V(v) => task.params.contains(v),
        })
    };
    let forced_pos = |i: usize| -> Vec<Atom> {
        translated
            .iter()
            .filter(|a| a.block_index() == i)
            .cloned()
            .collect()
    };
    let forced_neg = |i: usize| -> Vec<Atom> {
        block_atoms(lang, i)
            .into_iter()
            .filter(|a| in_params(a) && !translated.contains(a))
            .collect()
    };

    // Root choices.
    let roots: Vec<TypeNode> = {
        let fp = forced_pos(0);
        if fp.is_empty() && lang.unary_partition {
            spec.roots(TreeMode::S)
        } else {
            vec![TypeNode::new(0, fp)]
        }
    };

    let order = spec.order_rel();
    let slow = spec.equiv_rel().is_some();
    for root in roots {
        if !spec.extension_ok(amb, 0, &root.pos, true) {
            continue;
        }
        let mut cut = CutState::default();
        if let Some(t) = complete_rec(
            spec, amb, n, lang, &forced_pos, &forced_neg, root, 1, order, slow, &mut cut,
        ) {
            return Some(t);
        }
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn complete_rec(
    spec: &ClassSpec,
    amb: &FinStructure,
    n: usize,
    lang: &Language,
    forced_pos: &impl Fn(usize) -> Vec<Atom>,
    forced_neg: &impl Fn(usize) -> Vec<Atom>,
    cur: TypeNode,
    i: usize,
    order: Option<usize>,
    slow: bool,
    cut: &mut CutState,
) -> Option<TypeNode> {
    if i > n {
        return Some(cur);
    }
    let fp = forced_pos(i);
    let fneg = forced_neg(i);
    for block in level_block_candidates(lang, i, &fp, &fneg, order) {
        let u = (i - 1) as Vertex;
        // Fast order consistency via the running cut.
        let mut next_cut = *cut;
        if let Some(o) = order {
            let below = block.iter().any(|a| {
                a.rel == o && a.args[0] == Param::V(u) && a.args[1] == Param::X
            });
            if !next_cut.push(amb, o, u, below) {
                continue;
            }
        }
        let cand = cur.extend(&block);
        let ok = if slow || needs_full_check(spec, lang, &block) {
            spec.extension_ok(amb, i, &cand.pos, true)
        } else {
            true
        };
        if ok {
            let mut c2 = next_cut;
            if let Some(t) = complete_rec(
                spec, amb, n, lang, forced_pos, forced_neg, cand, i + 1, order, slow, &mut c2,
            ) {
                return Some(t);
            }
        }
    }
    None
}

fn needs_full_check(spec: &ClassSpec, lang: &Language, block: &[Atom]) -> bool {
    // Plain positive atoms can create forbidden substructures or cross
    // edges; an all-negative step in a free class never can.
    !block.is_empty()
        && match spec {
            ClassSpec::Unrestricted(_) | ClassSpec::Hypergraph(_) | ClassSpec::LinearOrder => false,
            ClassSpec::Ordered(base) => {
                block.iter().any(|a| lang.rel(a.rel).kind == RelKind::Plain)
                    && needs_base_check(base)
            }
            _ => true,
        }
}

fn needs_base_check(base: &ClassSpec) -> bool {
    !matches!(base, ClassSpec::Unrestricted(_) | ClassSpec::Hypergraph(_))
}

/// Candidate one-block continuations at level `i`, least first: forced
/// atoms plus the unforced decisions on order/equivalence symbols.
pub fn level_block_candidates(
    lang: &Language,
    i: usize,
    forced_pos: &[Atom],
    forced_neg: &[Atom],
    order: Option<usize>,
) -> Vec<Vec<Atom>> {
    let u = (i - 1) as Vertex;
    let mut variants: Vec<Vec<Atom>> = vec![Vec::new()];
    // Order decision: exactly one direction must hold.
    if let Some(o) = order {
        let below = Atom {
            rel: o,
            args: vec![Param::V(u), Param::X],
        };
        let above = Atom {
            rel: o,
            args: vec![Param::X, Param::V(u)],
        };
        let forced_below = forced_pos.contains(&below);
        let forced_above = forced_pos.contains(&above);
        let choices: Vec<Atom> = if forced_below {
            vec![below]
        } else if forced_above {
            vec![above]
        } else {
            vec![below, above]
        };
        variants = choices.into_iter().map(|c| vec![c]).collect();
    }
    // Equivalence decision, when not forced.
    for rel in 0..lang.relations.len() {
        if lang.rel(rel).kind != RelKind::Equivalence {
            continue;
        }
        let e = Atom::new(lang, rel, vec![Param::X, Param::V(u)]);
        if forced_pos.contains(&e) {
            for v in &mut variants {
                v.push(e.clone());
            }
        } else if !forced_neg.contains(&e) {
            let mut doubled = Vec::new();
            for v in &variants {
                doubled.push(v.clone());
                let mut w = v.clone();
                w.push(e.clone());
                doubled.push(w);
            }
            variants = doubled;
        }
    }
    // Plain forced positives ride along in every variant.
    let plain: Vec<Atom> = forced_pos
        .iter()
        .filter(|a| {
            lang.rel(a.rel).kind == RelKind::Plain
        })
        .cloned()
        .collect();
    let mut out: Vec<Vec<Atom>> = variants
        .into_iter()
        .map(|mut v| {
            v.extend(plain.iter().cloned());
            v.sort_unstable();
            v
        })
        .collect();
    out.sort_by(|a, b| crate::catalogue::cmp_pos_blocks(a, b));
    out.dedup();
    out
}

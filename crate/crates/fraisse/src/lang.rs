//! Finite relational languages.
//!
//! A language is a finite list of relation symbols with arities. The
//! declaration order of the symbols seeds the linear order on atomic
//! formulas used everywhere else: negated symbols come before positive
//! symbols, then symbols compare by declaration index, then argument
//! tuples compare lexicographically with the free variable `x` below
//! every vertex.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Semantic role of a relation symbol, used by class definitions and
/// rendering. `Plain` relations carry no axioms of their own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelKind {
    Plain,
    /// Strict linear order (irreflexive, total, transitive).
    LinearOrder,
    /// Equivalence relation; catalogue classes may add convexity.
    Equivalence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub name: String,
    pub arity: usize,
    /// Symmetric relations store argument tuples sorted, so `E(u,v)` and
    /// `E(v,u)` are the same fact.
    pub symmetric: bool,
    #[serde(default = "RelKind::plain")]
    pub kind: RelKind,
}

impl RelKind {
    fn plain() -> RelKind {
        RelKind::Plain
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Language {
    pub relations: Vec<Relation>,
    /// Convention mode for unary symbols: every vertex satisfies exactly
    /// one unary relation.
    #[serde(default)]
    pub unary_partition: bool,
}

impl Language {
    pub fn new(relations: Vec<Relation>, unary_partition: bool) -> Result<Language> {
        let lang = Language {
            relations,
            unary_partition,
        };
        lang.check()?;
        Ok(lang)
    }

    fn check(&self) -> Result<()> {
        if self.relations.iter().any(|r| r.arity == 0) {
            return Err(Error::InvalidLanguage("nullary relation symbol".into()));
        }
        if !self.relations.iter().any(|r| r.arity >= 2) {
            return Err(Error::InvalidLanguage(
                "need at least one relation of arity >= 2".into(),
            ));
        }
        if self.unary_partition && self.unary_count() < 2 {
            return Err(Error::InvalidLanguage(
                "unary partition mode needs at least two unary symbols".into(),
            ));
        }
        for r in &self.relations {
            if r.kind == RelKind::LinearOrder && (r.arity != 2 || r.symmetric) {
                return Err(Error::InvalidLanguage(format!(
                    "order symbol {} must be binary and not symmetric",
                    r.name
                )));
            }
            if r.kind == RelKind::Equivalence && (r.arity != 2 || !r.symmetric) {
                return Err(Error::InvalidLanguage(format!(
                    "equivalence symbol {} must be binary and symmetric",
                    r.name
                )));
            }
        }
        Ok(())
    }

    pub fn unary_count(&self) -> usize {
        self.relations.iter().filter(|r| r.arity == 1).count()
    }

    /// Indices of the unary symbols, in declaration order.
    pub fn unary_rels(&self) -> Vec<usize> {
        (0..self.relations.len())
            .filter(|&i| self.relations[i].arity == 1)
            .collect()
    }

    pub fn rel(&self, id: usize) -> &Relation {
        &self.relations[id]
    }

    pub fn rel_id(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }

    /// The declared linear-order symbol, if any.
    pub fn order_rel(&self) -> Option<usize> {
        self.relations
            .iter()
            .position(|r| r.kind == RelKind::LinearOrder)
    }

    pub fn equiv_rel(&self) -> Option<usize> {
        self.relations
            .iter()
            .position(|r| r.kind == RelKind::Equivalence)
    }

    pub fn max_arity(&self) -> usize {
        self.relations.iter().map(|r| r.arity).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn graph_lang() -> Language {
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

    #[test]
    fn rejects_unary_only_language() {
        let r = Language::new(
            vec![Relation {
                name: "U".into(),
                arity: 1,
                symmetric: false,
                kind: RelKind::Plain,
            }],
            false,
        );
        assert!(r.is_err());
    }

    #[test]
    fn rejects_partition_with_single_unary() {
        let r = Language::new(
            vec![
                Relation {
                    name: "U".into(),
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
        );
        assert!(r.is_err());
    }

    #[test]
    fn json_round_trip() {
        let lang = graph_lang();
        let s = serde_json::to_string(&lang).unwrap();
        let back: Language = serde_json::from_str(&s).unwrap();
        assert_eq!(lang, back);
    }
}

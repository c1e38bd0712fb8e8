//! Enumerated limits of homogeneous-structure classes, their coding
//! trees of quantifier-free 1-types, diagonal coding subtrees, big
//! Ramsey degree counting, bounded amalgamation audits, and finite-scale
//! indivisibility searches.
//!
//! The guide under `book/` walks through the concepts chapter by
//! chapter; the `fraisse` CLI exposes the same operations as
//! subcommands.

pub mod catalogue;
pub mod degrees;
pub mod error;
pub mod export;
pub mod generator;
pub mod lang;
pub mod structure;
pub mod typenode;
pub mod typetree;

pub use catalogue::{ClassSpec, TreeMode};
pub use error::{Error, Result};
pub use lang::{Language, RelKind, Relation};
pub use structure::{
    enumerate_embeddings, ordered_iso, validate_structure, FinStructure, Vertex, Violation,
};
pub use typenode::{meet, passing_type, prec, type_of, Atom, Param, TypeNode};

//! Construction grammar dialog understanding for calendar scheduling.
//!
//! Utterances are parsed by a context-gated chart parser over a grammar of
//! constructions (form, meaning and context triples). Readings are mapped to
//! domain slots, merged across turns by a dialog manager and applied to a
//! calendar store.

pub mod calendar;
pub mod context;
pub mod dialogue;
pub mod grammar;
pub mod lexicon;
pub mod message;
pub mod ontology;
pub mod parser;
pub mod semantics;

pub use context::ContextState;
pub use grammar::Grammar;
pub use message::{Message, MessageSet, Value};
pub use ontology::Category;

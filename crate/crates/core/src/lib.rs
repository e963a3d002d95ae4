//! Reasoning about restaurant narratives with intentional agents.
//!
//! A story is given as a logic form (entity declarations plus action and
//! fluent observations on a story timeline). The reasoner maps it onto a
//! denser reasoning timeline and enumerates every mental model a cautious
//! reader could build: who did what and when, what each agent intended, and
//! which interferences explain surprises.
//!
//! The crate is `no_std` and only needs `alloc`. Wall-clock limits are
//! injected through [`Budget`].

#![no_std]

extern crate alloc;

pub mod activities;
pub mod domain_kb;
pub mod intentions;
pub mod logicform;
pub mod queries;
pub mod reasoner;
pub mod term;
pub mod transition;

pub use domain_kb::{build_restaurant_domain, DomainSpec};
pub use logicform::{parse_story, serialize_story, validate_story, Story};
pub use queries::{answer, generate_queries, parse_query, Answer, Query, QueryForm, Verdict};
pub use reasoner::{solve, Config, Model, SolveOutcome, TiMode};
pub use term::Term;

/// Cooperative cancellation for long searches.
pub trait Budget {
    /// Polled between search nodes; `true` aborts the search.
    fn exhausted(&self) -> bool;
}

/// A budget that never runs out.
#[derive(Clone, Copy, Debug, Default)]
pub struct Unlimited;

impl Budget for Unlimited {
    fn exhausted(&self) -> bool {
        false
    }
}

impl<F: Fn() -> bool> Budget for F {
    fn exhausted(&self) -> bool {
        self()
    }
}

//! Canonical JSON rendering of solver results.
//!
//! Keys are sorted and models keep the solver's canonical order, so equal
//! inputs give byte-identical output.

use restaurant_core::reasoner::{Explanation, Model};
use restaurant_core::{Config, DomainSpec, SolveOutcome, Story, Term};
use serde_json::{json, Value};

fn atoms(xs: Vec<(Term, usize)>) -> Value {
    Value::Array(xs.into_iter().map(|(t, i)| json!([t.to_string(), i])).collect())
}

pub fn model_json(domain: &DomainSpec, model: &Model) -> Value {
    json!({
        "mapping": model.mapping.pairs().iter().map(|&(s, i)| json!([s, i])).collect::<Vec<_>>(),
        "occurs": atoms(model.occurs_atoms(domain)),
        "holds": atoms(model.holds_atoms(domain)),
        "intend": atoms(model.intend_atoms()),
        "abduced": model.abduced,
        "max_step": model.max_step(),
    })
}

pub fn explanation_json(e: &Explanation) -> Value {
    let terms = |ts: &[Term]| ts.iter().map(ToString::to_string).collect::<Vec<_>>();
    json!({
        "waiter": terms(&e.waiter),
        "cook": terms(&e.cook),
        "interferences": e.interferences.iter().map(|(i, t)| json!([i, t.to_string()])).collect::<Vec<_>>(),
        "labels": e.labels,
        "models": e.models,
    })
}

pub fn outcome_json(
    domain: &DomainSpec,
    story: &Story,
    config: &Config,
    outcome: &SolveOutcome,
    explanations: &[Explanation],
) -> Value {
    json!({
        "story": story.id,
        "ti": config.ti_mode.to_string(),
        "structure": config.customer_structure.to_string(),
        "horizon": outcome.horizon,
        "complete": outcome.complete,
        "model_count": outcome.models.len(),
        "max_step": outcome.max_step(),
        "no_model": outcome.no_model.as_ref().map(ToString::to_string),
        "models": outcome.models.iter().map(|m| model_json(domain, m)).collect::<Vec<_>>(),
        "explanations": explanations.iter().map(explanation_json).collect::<Vec<_>>(),
    })
}

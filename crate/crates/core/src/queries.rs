//! Questions about a story and their cautious answers over a model set.
//!
//! Queries use the textual syntax `query_<form>(args)`, for instance
//! `query_yes_no(pay(nicole,b))` or `query_where(nicole,eat(nicole,F))`.
//! Action and fluent arguments may contain variables; they then match every
//! ground instance.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::domain_kb::{ActionId, DomainSpec};
use crate::intentions::Intent;
use crate::logicform::{ObsKind, Story};
use crate::reasoner::{Mind, Model};
use crate::term::{parse_term, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QueryForm {
    YesNo,
    When,
    Where,
    Who,
    WhoWhom,
    What,
    Goal,
    Intended,
}

impl QueryForm {
    pub const ALL: [QueryForm; 8] = [
        QueryForm::YesNo,
        QueryForm::When,
        QueryForm::Where,
        QueryForm::Who,
        QueryForm::WhoWhom,
        QueryForm::What,
        QueryForm::Goal,
        QueryForm::Intended,
    ];

    pub fn name(self) -> &'static str {
        match self {
            QueryForm::YesNo => "yes_no",
            QueryForm::When => "when",
            QueryForm::Where => "where",
            QueryForm::Who => "who",
            QueryForm::WhoWhom => "who_whom",
            QueryForm::What => "what",
            QueryForm::Goal => "goal",
            QueryForm::Intended => "intended",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        QueryForm::ALL.into_iter().find(|f| f.name() == s)
    }

    /// Whether the form takes a leading person or fluent argument.
    fn has_subject(self) -> bool {
        matches!(
            self,
            QueryForm::Where | QueryForm::What | QueryForm::Goal | QueryForm::Intended
        )
    }
}

impl fmt::Display for QueryForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One question. `subject` is the person (where, goal, intended) or the
/// fluent (what).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Query {
    pub form: QueryForm,
    pub subject: Option<Term>,
    pub action: Term,
}

impl Query {
    pub fn yes_no(action: Term) -> Self {
        Query {
            form: QueryForm::YesNo,
            subject: None,
            action,
        }
    }

    pub fn to_term(&self) -> Term {
        let mut args = Vec::new();
        if let Some(s) = &self.subject {
            args.push(s.clone());
        }
        args.push(self.action.clone());
        Term::app(alloc::format!("query_{}", self.form.name()), args)
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_term().fmt(f)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("cannot parse query: {0}")]
    Syntax(String),
    #[error("unknown query form `{0}`")]
    UnknownForm(String),
    #[error("query_{form} takes {expected} argument(s), got {got}")]
    Arity {
        form: QueryForm,
        expected: usize,
        got: usize,
    },
    #[error("`{0}` is not an action of this domain")]
    UnknownAction(Term),
    #[error("query bounds n={n} exceed m={m}")]
    Bounds { n: usize, m: usize },
    #[error("no models to answer from")]
    NoModels,
}

pub fn parse_query(src: &str) -> Result<Query, QueryError> {
    let src = src.trim().trim_end_matches('.').trim();
    let t = parse_term(src).map_err(|(pos, msg)| QueryError::Syntax(alloc::format!("{pos}: {msg}")))?;
    let name = t.functor.strip_prefix("query_").unwrap_or(&t.functor);
    let form = QueryForm::from_name(name).ok_or_else(|| QueryError::UnknownForm(t.functor.clone()))?;
    let expected = if form.has_subject() { 2 } else { 1 };
    if t.args.len() != expected {
        return Err(QueryError::Arity {
            form,
            expected,
            got: t.args.len(),
        });
    }
    let mut args = t.args.into_iter();
    let subject = if form.has_subject() { args.next() } else { None };
    Ok(Query {
        form,
        subject,
        action: args.next().expect("arity checked"),
    })
}

/// Truth of a yes/no question across all models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::Unknown => "unknown",
        })
    }
}

/// A reasoning step, with the story step mapped onto it if there is one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StepValue {
    pub step: usize,
    pub story_step: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Answer {
    Verdict(Verdict),
    /// Empty is unknown, one value is definite, several are alternatives.
    Steps(Vec<StepValue>),
    Values(Vec<Term>),
}

impl Answer {
    pub fn is_unknown(&self) -> bool {
        match self {
            Answer::Verdict(v) => *v == Verdict::Unknown,
            Answer::Steps(s) => s.is_empty(),
            Answer::Values(v) => v.is_empty(),
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Answer::Verdict(v) => v.fmt(f),
            Answer::Steps(s) if s.is_empty() => f.write_str("unknown"),
            Answer::Values(v) if v.is_empty() => f.write_str("unknown"),
            Answer::Steps(s) => {
                for (i, v) in s.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    write!(f, "{}", v.step)?;
                    if let Some(ss) = v.story_step {
                        write!(f, " (story step {ss})")?;
                    }
                }
                Ok(())
            }
            Answer::Values(v) => {
                for (i, t) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    t.fmt(f)?;
                }
                Ok(())
            }
        }
    }
}

/// Binds variables of `pattern` so it equals `ground`.
fn unify<'a>(pattern: &'a Term, ground: &Term, env: &mut BTreeMap<&'a str, Term>) -> bool {
    if pattern.is_variable() {
        if pattern.functor == "_" {
            return true;
        }
        return match env.get(pattern.functor.as_str()) {
            Some(v) => v == ground,
            None => {
                env.insert(&pattern.functor, ground.clone());
                true
            }
        };
    }
    pattern.functor == ground.functor
        && pattern.args.len() == ground.args.len()
        && pattern
            .args
            .iter()
            .zip(&ground.args)
            .all(|(p, g)| unify(p, g, env))
}

pub fn matches(pattern: &Term, ground: &Term) -> bool {
    unify(pattern, ground, &mut BTreeMap::new())
}

/// Ground actions of `domain` matching `pattern`.
fn matching_actions(domain: &DomainSpec, pattern: &Term) -> Vec<ActionId> {
    if pattern.is_ground() {
        return domain.action_id(pattern).into_iter().collect();
    }
    (0..domain.action_count())
        .filter(|&a| matches(pattern, domain.action_term(a)))
        .collect()
}

/// `(step, action)` of every occurrence matching `actions` in `model`.
fn occurrences(model: &Model, actions: &[ActionId]) -> Vec<(usize, ActionId)> {
    let mut out = Vec::new();
    for o in &model.occurrences {
        for &a in &o.actions {
            if actions.contains(&a) {
                out.push((o.step, a));
            }
        }
    }
    out
}

/// Answers `query` cautiously: a definite answer holds in every model.
pub fn answer(query: &Query, domain: &DomainSpec, models: &[Model]) -> Result<Answer, QueryError> {
    if models.is_empty() {
        return Err(QueryError::NoModels);
    }
    let actions = matching_actions(domain, &query.action);
    if actions.is_empty() && domain.action_signatures(&query.action.functor).is_empty() {
        return Err(QueryError::UnknownAction(query.action.clone()));
    }
    if query.form == QueryForm::YesNo {
        let hits = models
            .iter()
            .filter(|m| !occurrences(m, &actions).is_empty())
            .count();
        return Ok(Answer::Verdict(if hits == models.len() {
            Verdict::Yes
        } else if hits == 0 {
            Verdict::No
        } else {
            Verdict::Unknown
        }));
    }
    if query.form == QueryForm::When {
        let mut steps = BTreeSet::new();
        for m in models {
            for (i, _) in occurrences(m, &actions) {
                steps.insert(StepValue {
                    step: i,
                    story_step: m.mapping.story_step_at(i),
                });
            }
        }
        return Ok(Answer::Steps(steps.into_iter().collect()));
    }
    let person = query
        .subject
        .as_ref()
        .filter(|s| s.args.is_empty())
        .map(|s| s.functor.as_str());
    let mut values = BTreeSet::new();
    for m in models {
        for (i, a) in occurrences(m, &actions) {
            let term = domain.action_term(a);
            match query.form {
                QueryForm::Who => {
                    if let Some(agent) = domain.agent_of(a) {
                        values.insert(Term::atom(domain.agents()[agent].as_str()));
                    }
                }
                QueryForm::WhoWhom => {
                    if let Some(agent) = domain.agent_of(a) {
                        let whom = term
                            .args
                            .iter()
                            .skip(1)
                            .find(|x| domain.agent_id(&x.functor).is_some())
                            .cloned()
                            .unwrap_or_else(|| Term::atom("none"));
                        values.insert(Term::app(
                            "pair",
                            [Term::atom(domain.agents()[agent].as_str()), whom],
                        ));
                    }
                }
                QueryForm::Where => {
                    let Some(p) = person else { continue };
                    let pattern = Term::app("at", [Term::atom(p), Term::atom("L")]);
                    for f in m.trajectory[i].true_fluents() {
                        let ft = domain.fluent_term(f);
                        if matches(&pattern, ft) {
                            values.insert(ft.args[1].clone());
                        }
                    }
                }
                QueryForm::What => {
                    let Some(pattern) = &query.subject else { continue };
                    if pattern.is_ground() {
                        if let Some(f) = domain.fluent_id(pattern) {
                            let v = m.trajectory[i].get(f);
                            values.insert(Term::atom(if v { "true" } else { "false" }));
                        }
                    } else {
                        for f in m.trajectory[i].true_fluents() {
                            let ft = domain.fluent_term(f);
                            if matches(pattern, ft) {
                                values.insert(ft.clone());
                            }
                        }
                    }
                }
                QueryForm::Goal => {
                    let Some(g) = person.and_then(|p| domain.agent_id(p)) else { continue };
                    if let Mind::Goal(gis) = &m.minds[i][g] {
                        if let Some(goal) = gis.goal {
                            values.insert(domain.fluent_term(goal).clone());
                        }
                    }
                }
                QueryForm::Intended => {
                    let Some(g) = person.and_then(|p| domain.agent_id(p)) else { continue };
                    match &m.minds[i][g] {
                        Mind::Goal(gis) => {
                            if let Some(inner) = gis.chain().last() {
                                values.insert(inner.name.clone());
                            }
                        }
                        Mind::Simple(sis) => {
                            let live: Vec<&Intent> = sis.intents.iter().filter(|x| !x.done()).collect();
                            let with_a: Vec<&&Intent> =
                                live.iter().filter(|x| x.plan[x.index..].contains(&a)).collect();
                            if with_a.is_empty() {
                                values.extend(live.iter().map(|x| x.seq.name.clone()));
                            } else {
                                values.extend(with_a.iter().map(|x| x.seq.name.clone()));
                            }
                        }
                        Mind::Passive => {}
                    }
                }
                QueryForm::YesNo | QueryForm::When => unreachable!(),
            }
        }
    }
    Ok(Answer::Values(values.into_iter().collect()))
}

/// Between `n` and `m` queries of every form about actions the story does
/// not mention. Fewer than `n` are returned only when the vocabulary runs
/// out.
pub fn generate_queries(story: &Story, domain: &DomainSpec, n: usize, m: usize) -> Result<Vec<Query>, QueryError> {
    if n > m {
        return Err(QueryError::Bounds { n, m });
    }
    let explicit: BTreeSet<&Term> = story
        .observations
        .iter()
        .filter(|o| o.kind == ObsKind::Action)
        .map(|o| &o.subject)
        .collect();
    let intf = domain.interference();
    let candidates: Vec<ActionId> = (0..domain.action_count())
        .filter(|&a| a != intf && !explicit.contains(domain.action_term(a)))
        .collect();
    let mut out = Vec::new();
    for form in QueryForm::ALL {
        for &a in candidates.iter().take(m) {
            let action = domain.action_term(a).clone();
            let agent = domain
                .agent_of(a)
                .map(|g| Term::atom(domain.agents()[g].as_str()));
            let subject = match form {
                QueryForm::Where | QueryForm::Goal | QueryForm::Intended => agent,
                QueryForm::What => agent.map(|p| Term::app("at", [p, Term::atom("L")])),
                _ => None,
            };
            if form.has_subject() && subject.is_none() {
                continue;
            }
            out.push(Query { form, subject, action });
        }
    }
    Ok(out)
}

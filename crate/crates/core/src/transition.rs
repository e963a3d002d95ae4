//! Discrete transition semantics over a [`DomainSpec`]: complete states,
//! simultaneous occurrences, direct and indirect effects, and inertia.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::domain_kb::{body_holds, initial_defaults, ActionId, AgentId, DomainSpec, FluentId, Head, Literal};
use crate::intentions::MentalAction;
use crate::term::Term;

/// A total valuation of the domain's fluents as a bitset.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State {
    bits: Vec<u64>,
}

impl State {
    pub fn all_false(fluents: usize) -> Self {
        State {
            bits: vec![0; fluents.div_ceil(64)],
        }
    }

    /// The default initial situation, closed under static effects.
    pub fn initial(domain: &DomainSpec) -> Self {
        let mut s = State::all_false(domain.fluent_count());
        for l in initial_defaults(domain) {
            s.set(l.fluent, l.value);
        }
        s.close(domain);
        s
    }

    pub fn get(&self, f: FluentId) -> bool {
        self.bits[f / 64] >> (f % 64) & 1 == 1
    }

    pub fn set(&mut self, f: FluentId, value: bool) {
        if value {
            self.bits[f / 64] |= 1 << (f % 64);
        } else {
            self.bits[f / 64] &= !(1 << (f % 64));
        }
    }

    pub fn holds(&self, l: Literal) -> bool {
        self.get(l.fluent) == l.value
    }

    /// Recomputes every defined fluent from the inertial ones.
    pub fn close(&mut self, domain: &DomainSpec) {
        for f in 0..domain.fluent_count() {
            if !domain.is_inertial(f) {
                self.set(f, false);
            }
        }
        // Static axioms come in dependency order, so one pass suffices.
        for ax in domain.static_axioms() {
            if let Head::Lit(h) = ax.head {
                if !self.get(h.fluent) && body_holds(&ax.body, self, &[]) {
                    self.set(h.fluent, true);
                }
            }
        }
    }

    /// Fluents that hold, ascending.
    pub fn true_fluents(&self) -> impl Iterator<Item = FluentId> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            (0..64).filter(move |b| word >> b & 1 == 1).map(move |b| w * 64 + b)
        })
    }
}

/// Everything that happens at one reasoning step.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occurrence {
    pub step: usize,
    /// Physical and exogenous actions, sorted and distinct.
    pub actions: Vec<ActionId>,
    pub mental: Vec<MentalAction>,
}

impl Occurrence {
    pub fn new(step: usize, mut actions: Vec<ActionId>, mental: Vec<MentalAction>) -> Self {
        actions.sort_unstable();
        actions.dedup();
        Occurrence {
            step,
            actions,
            mental,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty() && self.mental.is_empty()
    }

    pub fn contains(&self, a: ActionId) -> bool {
        self.actions.binary_search(&a).is_ok()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransitionError {
    #[error("action `{0}` is not executable")]
    Inexecutable(Term),
    #[error("step {step} is outside a trajectory of {len} states")]
    StepOutOfRange { step: usize, len: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Inexecutable { action: Term },
    MentalAndPhysical { agent: String },
    TwoMental { agent: String },
    TwoPhysical { agent: String },
}

/// Lists the executability and per-agent exclusion violations of `occ`.
pub fn check_occurrence(domain: &DomainSpec, state: &State, occ: &Occurrence) -> Vec<Violation> {
    let mut out = Vec::new();
    for &a in &occ.actions {
        if !domain.executable_with(state, a, &occ.actions) {
            out.push(Violation::Inexecutable {
                action: domain.action_term(a).clone(),
            });
        }
    }
    let agents = domain.agents();
    let mut physical: BTreeSet<AgentId> = BTreeSet::new();
    let mut mental: BTreeSet<AgentId> = BTreeSet::new();
    for &a in &occ.actions {
        if let Some(ag) = domain.agent_of(a) {
            if !physical.insert(ag) {
                out.push(Violation::TwoPhysical {
                    agent: agents[ag].clone(),
                });
            }
        }
    }
    for m in &occ.mental {
        if !mental.insert(m.agent) {
            out.push(Violation::TwoMental {
                agent: agents[m.agent].clone(),
            });
        }
        if physical.contains(&m.agent) {
            out.push(Violation::MentalAndPhysical {
                agent: agents[m.agent].clone(),
            });
        }
    }
    out
}

/// All states that may follow `state` when the actions of `occ` happen.
/// Branches on non-deterministic effects; an alternative whose effects
/// contradict each other yields no state.
pub fn successor_states(
    domain: &DomainSpec,
    state: &State,
    occ: &Occurrence,
) -> Result<Vec<State>, TransitionError> {
    for &a in &occ.actions {
        if !domain.executable_with(state, a, &occ.actions) {
            return Err(TransitionError::Inexecutable(domain.action_term(a).clone()));
        }
    }
    let mut fixed: Vec<Literal> = Vec::new();
    let mut choices: Vec<Vec<&[Literal]>> = Vec::new();
    for &a in &occ.actions {
        for ax in domain.effect_axioms(a) {
            if !body_holds(&ax.body, state, &occ.actions) {
                continue;
            }
            match &ax.head {
                Head::Lit(l) => fixed.push(*l),
                Head::Choice(alts) => choices.push(
                    alts.iter()
                        .filter(|alt| alt.guard.iter().all(|&g| state.holds(g)))
                        .map(|alt| alt.effects.as_slice())
                        .collect(),
                ),
                Head::Impossible(_) => {}
            }
        }
    }
    let mut out: Vec<State> = Vec::new();
    let mut pick = vec![0usize; choices.len()];
    if choices.iter().any(Vec::is_empty) {
        return Ok(out);
    }
    loop {
        let mut effects = fixed.clone();
        for (c, &i) in choices.iter().zip(&pick) {
            effects.extend_from_slice(c[i]);
        }
        if let Some(next) = apply(domain, state, &effects) {
            if !out.contains(&next) {
                out.push(next);
            }
        }
        // Advance the mixed-radix counter over choice alternatives.
        let mut k = 0;
        while k < pick.len() {
            pick[k] += 1;
            if pick[k] < choices[k].len() {
                break;
            }
            pick[k] = 0;
            k += 1;
        }
        if k == pick.len() {
            break;
        }
    }
    out.sort();
    Ok(out)
}

fn apply(domain: &DomainSpec, state: &State, effects: &[Literal]) -> Option<State> {
    let mut next = state.clone();
    let mut touched: BTreeSet<FluentId> = BTreeSet::new();
    for &l in effects {
        if !touched.insert(l.fluent) && next.get(l.fluent) != l.value {
            return None;
        }
        next.set(l.fluent, l.value);
    }
    next.close(domain);
    Some(next)
}

/// Value of `fluent` in the `step`-th state of a trajectory.
pub fn project(trajectory: &[State], fluent: FluentId, step: usize) -> Result<bool, TransitionError> {
    trajectory
        .get(step)
        .map(|s| s.get(fluent))
        .ok_or(TransitionError::StepOutOfRange {
            step,
            len: trajectory.len(),
        })
}

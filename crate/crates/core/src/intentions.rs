//! Two theories of intentions as step-transition rules over mental state.
//!
//! Simple agents intend flat sequences: an intended action happens as soon
//! as it is executable and the intention persists until it does. Goal-driven
//! agents select a goal, start a (possibly nested) activity for it, and use
//! the mental actions `start`, `stop`, `replan` and `abandon` to manage it.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::domain_kb::{ActionId, AgentId, AxiomKind, Cond, DomainSpec, FluentId, Head};
use crate::term::Term;
use crate::transition::State;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SeqComponent {
    Action(ActionId),
    Sequence(SequenceSpec),
}

/// A plan without a goal, for simple agents.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SequenceSpec {
    pub name: Term,
    pub components: Vec<SeqComponent>,
}

impl SequenceSpec {
    pub fn length(&self) -> usize {
        self.components.len()
    }

    pub fn flatten(&self) -> Vec<ActionId> {
        let mut out = Vec::new();
        for c in &self.components {
            match c {
                SeqComponent::Action(a) => out.push(*a),
                SeqComponent::Sequence(s) => out.extend(s.flatten()),
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Component {
    Action(ActionId),
    Activity(ActivitySpec),
}

/// A plan paired with the goal it is meant to achieve.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ActivitySpec {
    pub name: Term,
    pub goal: FluentId,
    pub components: Vec<Component>,
}

impl ActivitySpec {
    pub fn length(&self) -> usize {
        self.components.len()
    }

    pub fn flatten(&self) -> Vec<ActionId> {
        let mut out = Vec::new();
        for c in &self.components {
            match c {
                Component::Action(a) => out.push(*a),
                Component::Activity(s) => out.extend(s.flatten()),
            }
        }
        out
    }

    /// This activity and all nested ones.
    pub fn activity_count(&self) -> usize {
        1 + self
            .components
            .iter()
            .map(|c| match c {
                Component::Activity(s) => s.activity_count(),
                Component::Action(_) => 0,
            })
            .sum::<usize>()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MentalKind {
    Select(FluentId),
    Abandon(FluentId),
    Start(Term),
    Stop(Term),
    Replan(FluentId),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MentalAction {
    pub agent: AgentId,
    pub kind: MentalKind,
}

impl MentalAction {
    /// The action in predicate notation, e.g. `start(nicole,c_act(...))`.
    pub fn to_term(&self, domain: &DomainSpec) -> Term {
        let agent = Term::atom(domain.agents()[self.agent].as_str());
        let (name, arg) = match &self.kind {
            MentalKind::Select(g) => ("select", domain.fluent_term(*g).clone()),
            MentalKind::Abandon(g) => ("abandon", domain.fluent_term(*g).clone()),
            MentalKind::Replan(g) => ("replan", domain.fluent_term(*g).clone()),
            MentalKind::Start(m) => ("start", m.clone()),
            MentalKind::Stop(m) => ("stop", m.clone()),
        };
        Term::app(name, [agent, arg])
    }
}

// ---------------------------------------------------------------------------
// Simple agents

/// One intended sequence and the position of its next unexecuted action.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Intent {
    pub seq: Arc<SequenceSpec>,
    pub plan: Arc<[ActionId]>,
    pub index: usize,
}

impl Intent {
    pub fn new(seq: Arc<SequenceSpec>) -> Self {
        let plan: Arc<[ActionId]> = seq.flatten().into();
        Intent {
            seq,
            plan,
            index: 0,
        }
    }

    pub fn next(&self) -> Option<ActionId> {
        self.plan.get(self.index).copied()
    }

    pub fn done(&self) -> bool {
        self.index >= self.plan.len()
    }
}

/// The sequences a simple agent currently intends. An agent may hold several
/// at once, e.g. one per customer.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SimpleIntentState {
    pub intents: Vec<Intent>,
}

/// Next actions of the agent's unfinished sequences that are executable now.
pub fn simple_next(domain: &DomainSpec, state: &State, sis: &SimpleIntentState) -> Vec<ActionId> {
    let mut out: Vec<ActionId> = sis
        .intents
        .iter()
        .filter_map(Intent::next)
        .filter(|&a| domain.executable_with(state, a, &[a]))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Advances every sequence whose next action occurred.
pub fn simple_advance(sis: &SimpleIntentState, occurred: &[ActionId]) -> SimpleIntentState {
    let mut next = sis.clone();
    for i in &mut next.intents {
        if i.next().is_some_and(|a| occurred.contains(&a)) {
            i.index += 1;
        }
    }
    next
}

// ---------------------------------------------------------------------------
// Goal-driven agents

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    /// No active goal.
    Idle,
    /// Goal selected, no activity started yet.
    Selected,
    /// An activity for the goal is in progress.
    Running,
    /// The top activity was stopped without achieving the goal.
    Stopped { futile: bool },
    /// The goal stays active but the reader does not guess the new plan.
    Replanned,
}

/// Mental state of one goal-driven agent.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GoalIntentState {
    pub goal: Option<FluentId>,
    pub phase: Phase,
    pub activity: Option<Arc<ActivitySpec>>,
    /// Completed-component counts of the in-progress activity chain, from the
    /// top activity inwards. Activities off the chain have status -1.
    pub frames: Vec<usize>,
}

impl Default for GoalIntentState {
    fn default() -> Self {
        GoalIntentState {
            goal: None,
            phase: Phase::Idle,
            activity: None,
            frames: Vec::new(),
        }
    }
}

/// What a goal-driven agent is due to do next.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Next {
    Mental(MentalKind),
    /// Start a top activity for the goal; the caller chooses which.
    StartTop,
    /// Replan if the goal is still reachable, else abandon it.
    ReplanOrAbandon(FluentId),
    /// An own physical action of the current plan.
    Act(ActionId),
    /// Nothing to do: waiting on another agent or without a plan.
    Wait,
}

impl GoalIntentState {
    /// In-progress activities from the top inwards.
    pub fn chain(&self) -> Vec<&ActivitySpec> {
        let mut out = Vec::new();
        let Some(top) = self.activity.as_deref() else {
            return out;
        };
        let mut cur = top;
        for (depth, &done) in self.frames.iter().enumerate() {
            out.push(cur);
            if depth + 1 == self.frames.len() {
                break;
            }
            match &cur.components[done] {
                Component::Activity(sub) => cur = sub,
                Component::Action(_) => break,
            }
        }
        out
    }

    /// Status of the named activity: completed components if in progress.
    pub fn status(&self, name: &Term) -> Option<usize> {
        self.chain()
            .iter()
            .position(|a| &a.name == name)
            .map(|d| self.frames[d])
    }

    /// The physical action the innermost in-progress activity waits for.
    pub fn current_action(&self) -> Option<ActionId> {
        let chain = self.chain();
        let inner = chain.last()?;
        match inner.components.get(*self.frames.last()?) {
            Some(Component::Action(a)) => Some(*a),
            _ => None,
        }
    }

    /// Remaining own plan, flattened, starting at the current position.
    pub fn remaining_plan(&self) -> Vec<ActionId> {
        let chain = self.chain();
        let mut out = Vec::new();
        for (depth, act) in chain.iter().enumerate().rev() {
            let from = self.frames[depth] + usize::from(depth + 1 < chain.len());
            for c in &act.components[from.min(act.components.len())..] {
                match c {
                    Component::Action(a) => out.push(*a),
                    Component::Activity(s) => out.extend(s.flatten()),
                }
            }
        }
        out
    }
}

/// Decides the agent's next step.
///
/// `futile(activity)` reports whether the top activity can no longer reach
/// its goal. `own(a)` tells whether a plan action is performed by this agent.
pub fn goal_next_action(
    gis: &GoalIntentState,
    state: &State,
    futile: &mut dyn FnMut(&GoalIntentState) -> bool,
    own: &dyn Fn(ActionId) -> bool,
) -> (Next, bool) {
    match gis.phase {
        Phase::Idle | Phase::Replanned => (Next::Wait, false),
        Phase::Selected => (Next::StartTop, false),
        Phase::Stopped { futile: true } => (Next::ReplanOrAbandon(gis.goal.unwrap()), false),
        Phase::Stopped { futile: false } => (Next::Wait, false),
        Phase::Running => {
            let chain = gis.chain();
            if let Some(act) = chain.iter().find(|a| state.get(a.goal)) {
                return (Next::Mental(MentalKind::Stop(act.name.clone())), false);
            }
            let top_done = gis.frames[0] >= chain[0].length();
            if !top_done && futile(gis) {
                return (Next::Mental(MentalKind::Stop(chain[0].name.clone())), true);
            }
            let inner = chain.last().unwrap();
            let done = *gis.frames.last().unwrap();
            match inner.components.get(done) {
                None => (Next::Mental(MentalKind::Stop(inner.name.clone())), false),
                Some(Component::Activity(sub)) => {
                    (Next::Mental(MentalKind::Start(sub.name.clone())), false)
                }
                Some(Component::Action(a)) if own(*a) => (Next::Act(*a), false),
                Some(Component::Action(_)) => (Next::Wait, false),
            }
        }
    }
}

/// Applies one step: the agent's own mental action (with whether a stop was
/// caused by futility), then every physical action that occurred. `state`
/// is the state the step was decided in.
pub fn goal_advance(
    gis: &GoalIntentState,
    state: &State,
    mental: Option<(&MentalKind, bool)>,
    top: Option<&Arc<ActivitySpec>>,
    occurred: &[ActionId],
) -> GoalIntentState {
    let mut next = gis.clone();
    if let Some((kind, futile)) = mental {
        match kind {
            MentalKind::Select(g) => {
                next.goal = Some(*g);
                next.phase = Phase::Selected;
                next.activity = None;
                next.frames.clear();
            }
            MentalKind::Abandon(_) => {
                next.goal = None;
                next.phase = Phase::Idle;
            }
            MentalKind::Replan(_) => next.phase = Phase::Replanned,
            MentalKind::Start(name) => {
                if next.phase == Phase::Selected {
                    next.activity = top.cloned();
                    next.frames = alloc::vec![0];
                    next.phase = Phase::Running;
                } else {
                    debug_assert!(next.chain().last().is_some_and(|a| matches!(
                        a.components.get(*next.frames.last().unwrap()),
                        Some(Component::Activity(s)) if &s.name == name
                    )));
                    next.frames.push(0);
                }
            }
            MentalKind::Stop(name) => {
                let depth = next.chain().iter().position(|a| &a.name == name);
                if let Some(d) = depth {
                    next.frames.truncate(d);
                    if d == 0 {
                        let achieved = next.goal.is_some_and(|g| state.get(g));
                        if achieved {
                            next.goal = None;
                            next.phase = Phase::Idle;
                        } else {
                            next.phase = Phase::Stopped { futile };
                        }
                    } else {
                        next.frames[d - 1] += 1;
                    }
                }
            }
        }
        return next;
    }
    if next.phase == Phase::Running {
        if let Some(a) = next.current_action() {
            if occurred.contains(&a) {
                *next.frames.last_mut().unwrap() += 1;
            }
        }
    }
    if matches!(next.phase, Phase::Stopped { .. } | Phase::Replanned)
        && next.goal.is_some_and(|g| state.get(g))
    {
        next.goal = None;
        next.phase = Phase::Idle;
    }
    next
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GoalClass {
    InProgress,
    Achieved,
    Futile,
}

impl fmt::Display for GoalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GoalClass::InProgress => "in-progress",
            GoalClass::Achieved => "achieved",
            GoalClass::Futile => "futile",
        })
    }
}

// ---------------------------------------------------------------------------
// Futility

/// Delete-relaxed reachability over the domain: negative preconditions and
/// delete effects are ignored, interference is never assumed.
#[derive(Clone, Debug)]
pub struct Relaxed {
    pre: Vec<Vec<FluentId>>,
    adds: Vec<Vec<(FluentId, Vec<FluentId>)>>,
    statics: Vec<(FluentId, Vec<FluentId>)>,
    fluents: usize,
}

impl Relaxed {
    pub fn new(domain: &DomainSpec) -> Self {
        let intf = domain.interference();
        let n = domain.action_count();
        let mut pre = alloc::vec![Vec::new(); n];
        let mut adds = alloc::vec![Vec::new(); n];
        for a in 0..n {
            for ax in domain.executability_axioms(a) {
                let body: Vec<&Cond> = ax
                    .body
                    .iter()
                    .filter(|c| **c != Cond::Occurs(intf, false))
                    .collect();
                if let [Cond::Holds(l)] = body[..] {
                    if !l.value {
                        pre[a].push(l.fluent);
                    }
                }
            }
            for ax in domain.effect_axioms(a) {
                let Head::Lit(h) = ax.head else { continue };
                if !h.value || ax.kind != AxiomKind::DynamicEffect {
                    continue;
                }
                let mut conds = Vec::new();
                let mut usable = true;
                for c in &ax.body {
                    match *c {
                        Cond::Holds(l) if l.value => conds.push(l.fluent),
                        Cond::Holds(_) => {}
                        Cond::Occurs(x, true) => usable &= x == a,
                        Cond::Occurs(x, false) => usable &= x == intf,
                    }
                }
                if usable {
                    adds[a].push((h.fluent, conds));
                }
            }
        }
        let statics = domain
            .static_axioms()
            .filter_map(|ax| match ax.head {
                Head::Lit(h) => Some((
                    h.fluent,
                    ax.body
                        .iter()
                        .filter_map(|c| match c {
                            Cond::Holds(l) if l.value => Some(l.fluent),
                            _ => None,
                        })
                        .collect(),
                )),
                _ => None,
            })
            .collect();
        Relaxed {
            pre,
            adds,
            statics,
            fluents: domain.fluent_count(),
        }
    }

    /// Whether `goal` can be reached from `from` using only actions in
    /// `allowed`.
    pub fn reachable(&self, from: &State, allowed: &dyn Fn(ActionId) -> bool, goal: FluentId) -> bool {
        let mut reach = alloc::vec![false; self.fluents];
        for f in from.true_fluents() {
            reach[f] = true;
        }
        let actions: Vec<ActionId> = (0..self.pre.len()).filter(|&a| allowed(a)).collect();
        loop {
            let mut changed = false;
            for (h, body) in &self.statics {
                if !reach[*h] && body.iter().all(|&f| reach[f]) {
                    reach[*h] = true;
                    changed = true;
                }
            }
            if reach[goal] {
                return true;
            }
            for &a in &actions {
                if !self.pre[a].iter().all(|&f| reach[f]) {
                    continue;
                }
                for (h, conds) in &self.adds[a] {
                    if !reach[*h] && conds.iter().all(|&f| reach[f]) {
                        reach[*h] = true;
                        changed = true;
                    }
                }
            }
            if !changed {
                return reach[goal];
            }
        }
    }
}

/// Classifies the agent's active goal. The top activity is futile when its
/// goal is unreachable with the agent restricted to the activity's own
/// actions and every other agent unrestricted.
pub fn classify_goal(
    domain: &DomainSpec,
    relaxed: &Relaxed,
    gis: &GoalIntentState,
    agent: AgentId,
    belief: &State,
) -> GoalClass {
    let Some(goal) = gis.goal else {
        return GoalClass::InProgress;
    };
    if belief.get(goal) {
        return GoalClass::Achieved;
    }
    let Some(top) = gis.activity.as_deref() else {
        return GoalClass::InProgress;
    };
    if activity_futile(domain, relaxed, top, agent, belief) {
        GoalClass::Futile
    } else {
        GoalClass::InProgress
    }
}

pub fn activity_futile(
    domain: &DomainSpec,
    relaxed: &Relaxed,
    top: &ActivitySpec,
    agent: AgentId,
    belief: &State,
) -> bool {
    let plan = top.flatten();
    let intf = domain.interference();
    let allowed = |a: ActionId| {
        a != intf
            && match domain.agent_of(a) {
                Some(ag) if ag == agent => plan.contains(&a),
                _ => true,
            }
    };
    !relaxed.reachable(belief, &allowed, top.goal)
}

/// Whether the agent could still achieve `goal` with any of its actions.
pub fn goal_reachable(
    domain: &DomainSpec,
    relaxed: &Relaxed,
    goal: FluentId,
    belief: &State,
) -> bool {
    let intf = domain.interference();
    relaxed.reachable(belief, &|a| a != intf, goal)
}

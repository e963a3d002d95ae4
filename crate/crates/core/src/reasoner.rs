//! The model finder.
//!
//! A model is one reading of the story: a strictly increasing mapping of
//! story steps onto the reasoning timeline, a trajectory of states, what
//! occurred at every step (physical, exogenous and mental actions) and the
//! agents' intentions along the way. The search walks the reasoning
//! timeline step by step. At each step it branches on the staff sequences a
//! simple agent may have adopted, the activity a goal-driven agent starts,
//! abduced interferences and non-deterministic effects, and checks every
//! observation mapped there.
//!
//! Story steps are mapped greedily: a story step lands on the first step
//! after its predecessor where all of its observations are satisfied. For
//! action observations this only removes readings that differ in the
//! mapping alone. For fluent observations it fixes the moment the reader
//! learns the observed value.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::activities::{
    cook_activity, cook_sequence, customer_activity, waiter_activity, waiter_sequence, ActivityError,
    CookParams, CustomerStructure, WaiterParams,
};
use crate::domain_kb::{executable, ActionId, AgentId, DomainSpec, FluentId, Literal};
use crate::intentions::{
    activity_futile, goal_advance, goal_next_action, goal_reachable, simple_advance, ActivitySpec,
    GoalIntentState, Intent, MentalAction, MentalKind, Next, Phase, Relaxed, SequenceSpec,
    SimpleIntentState,
};
use crate::logicform::{validate_story, Diagnostic, ObsKind, Sort, Story};
use crate::term::Term;
use crate::transition::{successor_states, Occurrence, State};
use crate::Budget;

/// Which theory of intentions governs the staff.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TiMode {
    /// Goal-driven customers, simple waiters and cooks.
    #[default]
    Mixed,
    /// Every character is goal-driven.
    NewOnly,
}

impl fmt::Display for TiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TiMode::Mixed => "mixed",
            TiMode::NewOnly => "new-only",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown intention mode `{0}` (expected mixed or new-only)")]
pub struct UnknownMode(pub String);

impl FromStr for TiMode {
    type Err = UnknownMode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "mixed" => Ok(TiMode::Mixed),
            "new-only" | "newonly" | "new" => Ok(TiMode::NewOnly),
            _ => Err(UnknownMode(s.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    pub ti_mode: TiMode,
    pub customer_structure: CustomerStructure,
    /// Length of the reasoning timeline; `None` derives it from the story.
    pub max_steps: Option<usize>,
    pub max_interferences: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            ti_mode: TiMode::Mixed,
            customer_structure: CustomerStructure::S2,
            max_steps: None,
            max_interferences: 2,
        }
    }
}

impl Config {
    pub fn new(ti_mode: TiMode, customer_structure: CustomerStructure) -> Self {
        Config {
            ti_mode,
            customer_structure,
            ..Config::default()
        }
    }

    /// The reasoning horizon used for `story`.
    ///
    /// Each customer needs one select, a start and a stop per activity and
    /// twelve physical actions; the staff add up to twelve more steps per
    /// customer, and four more when they are goal-driven.
    pub fn horizon(&self, domain: &DomainSpec, story: &Story) -> usize {
        if let Some(n) = self.max_steps {
            return n;
        }
        let activities = match self.customer_structure {
            CustomerStructure::Flat => 1,
            CustomerStructure::S1 => 2,
            CustomerStructure::S2 => 4,
        };
        let staff = if self.ti_mode == TiMode::NewOnly { 16 } else { 12 };
        let per_customer = 1 + 2 * activities + 12 + staff;
        domain.customers.len() * per_customer + story.story_steps().len() + 4
    }
}

/// Story step to reasoning step.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimelineMapping {
    pairs: Vec<(u32, usize)>,
}

impl TimelineMapping {
    pub fn from_pairs(mut pairs: Vec<(u32, usize)>) -> Self {
        pairs.sort_unstable();
        TimelineMapping { pairs }
    }

    pub fn get(&self, story_step: u32) -> Option<usize> {
        self.pairs
            .iter()
            .find(|(s, _)| *s == story_step)
            .map(|&(_, i)| i)
    }

    /// The story step mapped onto reasoning step `step`, if any.
    pub fn story_step_at(&self, step: usize) -> Option<u32> {
        self.pairs.iter().find(|(_, i)| *i == step).map(|&(s, _)| s)
    }

    pub fn pairs(&self) -> &[(u32, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.pairs
            .windows(2)
            .all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1)
    }
}

/// Every strictly increasing total assignment of `story_steps` into
/// `0..max_steps`, in lexicographic order.
pub fn enumerate_mappings(story_steps: &[u32], max_steps: usize) -> Vec<TimelineMapping> {
    let mut steps = story_steps.to_vec();
    steps.sort_unstable();
    steps.dedup();
    let k = steps.len();
    let mut out = Vec::new();
    if k > max_steps {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(TimelineMapping {
            pairs: steps.iter().copied().zip(idx.iter().copied()).collect(),
        });
        // Next k-combination of 0..max_steps.
        let mut j = k;
        while j > 0 && idx[j - 1] == max_steps - k + j - 1 {
            j -= 1;
        }
        if j == 0 {
            return out;
        }
        idx[j - 1] += 1;
        for t in j..k {
            idx[t] = idx[t - 1] + 1;
        }
    }
}

/// A simple agent adopting a sequence: `intend(seq, step)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Intention {
    pub step: usize,
    pub agent: AgentId,
    pub sequence: Term,
}

/// Mental state of one agent at one step.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Mind {
    /// Acts only when the story says so.
    Passive,
    Simple(SimpleIntentState),
    Goal(GoalIntentState),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    pub mapping: TimelineMapping,
    /// States `0..=horizon`.
    pub trajectory: Vec<State>,
    /// One per step `0..horizon`.
    pub occurrences: Vec<Occurrence>,
    /// Per step and agent, after staff intentions of that step were adopted.
    pub minds: Vec<Vec<Mind>>,
    pub intentions: Vec<Intention>,
    /// Steps at which an interference was abduced.
    pub abduced: Vec<usize>,
}

impl Model {
    /// Index of the last state.
    pub fn horizon(&self) -> usize {
        self.trajectory.len() - 1
    }

    /// The last step at which anything occurred.
    pub fn max_step(&self) -> Option<usize> {
        self.occurrences
            .iter()
            .rposition(|o| !o.is_empty())
    }

    pub fn occurs_at(&self, a: ActionId, step: usize) -> bool {
        self.occurrences.get(step).is_some_and(|o| o.contains(a))
    }

    /// Steps at which `a` occurs.
    pub fn steps_of(&self, a: ActionId) -> Vec<usize> {
        self.occurrences
            .iter()
            .filter(|o| o.contains(a))
            .map(|o| o.step)
            .collect()
    }

    pub fn holds(&self, f: FluentId, step: usize) -> Option<bool> {
        self.trajectory.get(step).map(|s| s.get(f))
    }

    pub fn mental_at(&self, step: usize) -> &[MentalAction] {
        self.occurrences
            .get(step)
            .map(|o| o.mental.as_slice())
            .unwrap_or(&[])
    }

    /// `occurs(x, i)` atoms: physical, exogenous and mental actions.
    pub fn occurs_atoms(&self, domain: &DomainSpec) -> Vec<(Term, usize)> {
        let mut out = Vec::new();
        for o in &self.occurrences {
            for &a in &o.actions {
                out.push((domain.action_term(a).clone(), o.step));
            }
            for m in &o.mental {
                out.push((m.to_term(domain), o.step));
            }
        }
        out
    }

    /// `holds(f, i)` atoms for every fluent true at some step.
    pub fn holds_atoms(&self, domain: &DomainSpec) -> Vec<(Term, usize)> {
        let mut out = Vec::new();
        for (i, s) in self.trajectory.iter().enumerate() {
            for f in s.true_fluents() {
                out.push((domain.fluent_term(f).clone(), i));
            }
        }
        out
    }

    /// `intend(seq, i)` atoms of the simple agents.
    pub fn intend_atoms(&self) -> Vec<(Term, usize)> {
        self.intentions
            .iter()
            .map(|i| (i.sequence.clone(), i.step))
            .collect()
    }

    /// Names of the top activities each agent started, with the step.
    pub fn started_activities(&self) -> Vec<(AgentId, Term, usize)> {
        let mut out = Vec::new();
        for o in &self.occurrences {
            for m in &o.mental {
                if let MentalKind::Start(name) = &m.kind {
                    out.push((m.agent, name.clone(), o.step));
                }
            }
        }
        out
    }
}

/// Why no model was found.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NoModelReason {
    /// A goal-driven agent would have needed two active top-level goals.
    SecondActiveGoal { agent: String },
    /// Some readings ran into the end of the reasoning timeline.
    Horizon { max_steps: usize },
    /// The observations contradict every reading.
    Inconsistent,
}

impl fmt::Display for NoModelReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoModelReason::SecondActiveGoal { agent } => write!(
                f,
                "`{agent}` would need a second active top-level goal, which a goal-driven agent cannot hold"
            ),
            NoModelReason::Horizon { max_steps } => write!(
                f,
                "no reading fits in {max_steps} reasoning steps; try a larger --max-steps"
            ),
            NoModelReason::Inconsistent => f.write_str("the observations contradict every reading"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub models: Vec<Model>,
    /// False when the budget ran out; `models` is then partial.
    pub complete: bool,
    pub horizon: usize,
    pub no_model: Option<NoModelReason>,
}

impl SolveOutcome {
    pub fn timed_out(&self) -> bool {
        !self.complete
    }

    /// The smallest last-occurrence step over all models.
    pub fn max_step(&self) -> Option<usize> {
        self.models.iter().filter_map(Model::max_step).min()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("story does not validate: {}", join(.0))]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Activity(#[from] ActivityError),
    #[error("`{0}` is not a ground action or fluent of this domain")]
    Ungrounded(Term),
    #[error("{steps} story steps cannot be mapped into {max_steps} reasoning steps")]
    HorizonTooShort { steps: usize, max_steps: usize },
    #[error("customer `{customer}` needs a declared {role}")]
    MissingRole { customer: String, role: &'static str },
}

fn join(ds: &[Diagnostic]) -> String {
    let mut s = String::new();
    for (i, d) in ds.iter().enumerate() {
        if i > 0 {
            s.push_str("; ");
        }
        s.push_str(&d.to_string());
    }
    s
}

/// Enumerates every model of `story` within the configured bounds.
pub fn solve(
    domain: &DomainSpec,
    story: &Story,
    config: &Config,
    budget: &dyn Budget,
) -> Result<SolveOutcome, SolveError> {
    let diags = validate_story(story, domain);
    if !diags.is_empty() {
        return Err(SolveError::Invalid(diags));
    }
    let mut search = Search::new(domain, story, config, budget)?;
    let root = search.root();
    if let Some(root) = root {
        search.explore(root);
    }
    Ok(search.finish())
}

// ---------------------------------------------------------------------------
// Search

struct StoryStep {
    step: u32,
    happened: Vec<ActionId>,
    not_happened: Vec<ActionId>,
    holds: Vec<Literal>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    Customer,
    Waiter,
    Cook,
    People,
}

enum TriggerKind {
    Waiter { customer: usize },
    Cook { food: String, waiter: String },
}

struct Trigger {
    agent: AgentId,
    fluent: FluentId,
    kind: TriggerKind,
}

/// Everything a branch carries from one step to the next.
#[derive(Clone)]
struct Node {
    step: usize,
    state: State,
    minds: Vec<Mind>,
    /// Candidate top activities for the next `start` of each agent.
    tops: Vec<Vec<Arc<ActivitySpec>>>,
    pending_select: Vec<Option<FluentId>>,
    /// Actions that were available only with interference at the previous
    /// step and were not taken.
    declined: Vec<Vec<ActionId>>,
    fired: Vec<bool>,
    revealed: Vec<bool>,
    next_story: usize,
    abduced: Vec<usize>,
}

#[derive(Clone)]
struct Choice {
    action: Option<ActionId>,
    mental: Option<(MentalKind, bool)>,
    top: Option<Arc<ActivitySpec>>,
    needs_interference: bool,
    /// Justified only by an observation mapped here.
    observed_only: bool,
    declined: Vec<ActionId>,
}

impl Choice {
    fn idle(declined: Vec<ActionId>) -> Self {
        Choice {
            action: None,
            mental: None,
            top: None,
            needs_interference: false,
            observed_only: false,
            declined,
        }
    }

    fn act(a: ActionId) -> Self {
        Choice {
            action: Some(a),
            ..Choice::idle(Vec::new())
        }
    }

    fn mental(kind: MentalKind, futile: bool) -> Self {
        Choice {
            mental: Some((kind, futile)),
            ..Choice::idle(Vec::new())
        }
    }
}

struct Search<'a> {
    d: &'a DomainSpec,
    cfg: &'a Config,
    budget: &'a dyn Budget,
    relaxed: Relaxed,
    horizon: usize,
    steps: Arc<Vec<StoryStep>>,
    roles: Vec<Role>,
    triggers: Vec<Trigger>,
    /// Per customer index: candidate waiter parameterizations.
    waiter_options: Vec<Vec<WaiterParams>>,
    /// Rigid fluents with an `st_obs`, and their default values.
    rigid_observed: Vec<(FluentId, bool)>,
    found: Vec<Model>,
    // Histories of the current branch.
    traj: Vec<State>,
    occs: Vec<Occurrence>,
    minds: Vec<Vec<Mind>>,
    mapping: Vec<(u32, usize)>,
    intentions: Vec<Intention>,
    aborted: bool,
    polls: usize,
    second_goal: Option<String>,
    horizon_hit: bool,
}

impl<'a> Search<'a> {
    fn new(
        d: &'a DomainSpec,
        story: &Story,
        cfg: &'a Config,
        budget: &'a dyn Budget,
    ) -> Result<Self, SolveError> {
        let horizon = cfg.horizon(d, story);
        let mut steps: Vec<StoryStep> = Vec::new();
        for s in story.story_steps() {
            let mut st = StoryStep {
                step: s,
                happened: Vec::new(),
                not_happened: Vec::new(),
                holds: Vec::new(),
            };
            for o in story.observations.iter().filter(|o| o.story_step == s) {
                match o.kind {
                    ObsKind::Action => {
                        let a = d
                            .action_id(&o.subject)
                            .ok_or_else(|| SolveError::Ungrounded(o.subject.clone()))?;
                        if o.value {
                            st.happened.push(a);
                        } else {
                            st.not_happened.push(a);
                        }
                    }
                    ObsKind::Fluent => {
                        let f = d
                            .fluent_id(&o.subject)
                            .ok_or_else(|| SolveError::Ungrounded(o.subject.clone()))?;
                        st.holds.push(Literal { fluent: f, value: o.value });
                    }
                }
            }
            // A repeated observation says nothing new.
            for v in [&mut st.happened, &mut st.not_happened] {
                v.sort_unstable();
                v.dedup();
            }
            st.holds.sort_unstable_by_key(|l| (l.fluent, l.value));
            st.holds.dedup();
            steps.push(st);
        }
        if steps.len() > horizon {
            return Err(SolveError::HorizonTooShort {
                steps: steps.len(),
                max_steps: horizon,
            });
        }

        let roles = d
            .agents()
            .iter()
            .map(|a| {
                if d.customers.contains(a) {
                    Role::Customer
                } else if d.waiters.contains(a) {
                    Role::Waiter
                } else if d.cooks.contains(a) {
                    Role::Cook
                } else {
                    Role::People
                }
            })
            .collect();

        let mut triggers = Vec::new();
        let mut waiter_options = Vec::new();
        for (ci, c) in d.customers.iter().enumerate() {
            let mut opts = Vec::new();
            for w in &d.waiters {
                if let Some(f) = d.fluent("inside", &[c]) {
                    triggers.push(Trigger {
                        agent: d.agent_id(w).expect("waiter is an agent"),
                        fluent: f,
                        kind: TriggerKind::Waiter { customer: ci },
                    });
                }
                for f1 in &d.foods {
                    for f2 in &d.foods {
                        for b in &d.bills {
                            opts.push(WaiterParams {
                                waiter: w.clone(),
                                customer: c.clone(),
                                understood: f1.clone(),
                                served: f2.clone(),
                                bill: b.clone(),
                            });
                        }
                    }
                }
            }
            waiter_options.push(opts);
        }
        for ck in &d.cooks {
            for f in &d.foods {
                for w in &d.waiters {
                    if let Some(fl) = d.fluent("requested", &[ck, f, w]) {
                        triggers.push(Trigger {
                            agent: d.agent_id(ck).expect("cook is an agent"),
                            fluent: fl,
                            kind: TriggerKind::Cook {
                                food: f.clone(),
                                waiter: w.clone(),
                            },
                        });
                    }
                }
            }
        }

        let rigid = d.rigid_fluents();
        let mut rigid_observed: Vec<(FluentId, bool)> = Vec::new();
        let init = State::initial(d);
        for st in &steps {
            for l in &st.holds {
                if rigid[l.fluent] && !rigid_observed.iter().any(|(f, _)| *f == l.fluent) {
                    rigid_observed.push((l.fluent, init.get(l.fluent)));
                }
            }
        }

        Ok(Search {
            d,
            cfg,
            budget,
            relaxed: Relaxed::new(d),
            horizon,
            steps: Arc::new(steps),
            roles,
            triggers,
            waiter_options,
            rigid_observed,
            found: Vec::new(),
            traj: Vec::new(),
            occs: Vec::new(),
            minds: Vec::new(),
            mapping: Vec::new(),
            intentions: Vec::new(),
            aborted: false,
            polls: 0,
            second_goal: None,
            horizon_hit: false,
        })
    }

    /// The initial branch, or `None` if the rigid observations contradict
    /// each other.
    fn root(&mut self) -> Option<Node> {
        let d = self.d;
        let mut state = State::initial(d);
        let mut fixed: Vec<Literal> = Vec::new();
        for st in self.steps.iter() {
            for l in &st.holds {
                if self.rigid_observed.iter().any(|(f, _)| *f == l.fluent) {
                    if fixed.iter().any(|x| x.fluent == l.fluent && x.value != l.value) {
                        return None;
                    }
                    fixed.push(*l);
                }
            }
        }
        for l in fixed {
            state.set(l.fluent, l.value);
        }
        state.close(d);

        let n = d.agents().len();
        let mut minds = Vec::with_capacity(n);
        let mut tops = vec![Vec::new(); n];
        let mut pending_select = vec![None; n];
        let mentioned = self.mentioned_agents();
        for (g, role) in self.roles.iter().enumerate() {
            let mind = match (role, self.cfg.ti_mode) {
                (Role::Customer, _) | (Role::Waiter | Role::Cook, TiMode::NewOnly) => {
                    Mind::Goal(GoalIntentState::default())
                }
                (Role::Waiter | Role::Cook, TiMode::Mixed) => Mind::Simple(SimpleIntentState::default()),
                (Role::People, _) => Mind::Passive,
            };
            minds.push(mind);
            if *role == Role::Customer && mentioned.contains(&g) {
                let c = d.agents()[g].clone();
                match self.customer_tops(&c) {
                    Ok(t) => tops[g] = t,
                    Err(_) => return None,
                }
                pending_select[g] = d.fluent("satiated_and_out", &[&c]);
            }
        }
        Some(Node {
            step: 0,
            state,
            minds,
            tops,
            pending_select,
            declined: vec![Vec::new(); n],
            fired: vec![false; self.triggers.len()],
            revealed: vec![false; self.rigid_observed.len()],
            next_story: 0,
            abduced: Vec::new(),
        })
    }

    fn mentioned_agents(&self) -> BTreeSet<AgentId> {
        let mut out = BTreeSet::new();
        for st in self.steps.iter() {
            let terms = st
                .happened
                .iter()
                .chain(&st.not_happened)
                .map(|&a| self.d.action_term(a))
                .chain(st.holds.iter().map(|l| self.d.fluent_term(l.fluent)));
            for t in terms {
                for c in t.constants() {
                    if let Some(g) = self.d.agent_id(c) {
                        out.insert(g);
                    }
                }
            }
        }
        out
    }

    fn customer_tops(&self, c: &str) -> Result<Vec<Arc<ActivitySpec>>, SolveError> {
        let d = self.d;
        let missing = |role| SolveError::MissingRole {
            customer: c.to_string(),
            role,
        };
        let w = d.waiters.first().ok_or_else(|| missing("waiter"))?;
        if d.restaurants.is_empty() {
            return Err(missing("restaurant"));
        }
        if d.foods.is_empty() {
            return Err(missing("food"));
        }
        let mut out = Vec::new();
        for r in &d.restaurants {
            for f in &d.foods {
                out.push(Arc::new(customer_activity(
                    d,
                    c,
                    r,
                    w,
                    f,
                    self.cfg.customer_structure,
                )?));
            }
        }
        Ok(out)
    }

    fn finish(mut self) -> SolveOutcome {
        let mut models = core::mem::take(&mut self.found);
        // Mapping-equivalent readings collapse; keep the smallest mapping.
        models.sort_by(|a, b| {
            (&a.occurrences, &a.trajectory, &a.intentions, &a.mapping).cmp(&(
                &b.occurrences,
                &b.trajectory,
                &b.intentions,
                &b.mapping,
            ))
        });
        models.dedup_by(|b, a| {
            a.occurrences == b.occurrences && a.trajectory == b.trajectory && a.intentions == b.intentions
        });
        let sets: Vec<Vec<usize>> = models.iter().map(|m| m.abduced.clone()).collect();
        models.retain(|m| !sets.iter().any(|s| strict_subset(s, &m.abduced)));
        models.sort_by(|a, b| {
            (&a.abduced, &a.occurrences, &a.intentions, &a.mapping).cmp(&(
                &b.abduced,
                &b.occurrences,
                &b.intentions,
                &b.mapping,
            ))
        });
        let no_model = if models.is_empty() {
            Some(if let Some(agent) = self.second_goal.take() {
                NoModelReason::SecondActiveGoal { agent }
            } else if self.horizon_hit {
                NoModelReason::Horizon {
                    max_steps: self.horizon,
                }
            } else {
                NoModelReason::Inconsistent
            })
        } else {
            None
        };
        SolveOutcome {
            models,
            complete: !self.aborted,
            horizon: self.horizon,
            no_model,
        }
    }

    fn belief(&self, node: &Node, revealed: &[bool]) -> State {
        let mut b = node.state.clone();
        let mut changed = false;
        for (k, &(f, default)) in self.rigid_observed.iter().enumerate() {
            if !revealed[k] && b.get(f) != default {
                b.set(f, default);
                changed = true;
            }
        }
        if changed {
            b.close(self.d);
        }
        b
    }

    fn explore(&mut self, node: Node) {
        if self.aborted {
            return;
        }
        self.polls += 1;
        if self.polls.is_multiple_of(32) && self.budget.exhausted() {
            self.aborted = true;
            return;
        }
        if self
            .found
            .iter()
            .any(|m| strict_subset(&m.abduced, &node.abduced))
        {
            return;
        }
        let i = node.step;
        if i == self.horizon {
            if node.next_story == self.steps.len() {
                self.traj.push(node.state.clone());
                self.minds.push(node.minds.clone());
                self.emit(&node);
                self.traj.pop();
                self.minds.pop();
            } else {
                self.horizon_hit = true;
            }
            return;
        }
        if self.steps.len() - node.next_story > self.horizon - i {
            self.horizon_hit = true;
            return;
        }
        for adopted in self.adopt_staff_intentions(&node) {
            let (node, new_intents) = adopted;
            let n_int = new_intents.len();
            self.intentions.extend(new_intents);
            self.traj.push(node.state.clone());
            self.minds.push(node.minds.clone());
            let can_map = node.next_story < self.steps.len();
            if can_map {
                self.expand(&node, true);
            }
            self.expand(&node, false);
            self.traj.pop();
            self.minds.pop();
            let keep = self.intentions.len() - n_int;
            self.intentions.truncate(keep);
            if self.aborted {
                return;
            }
        }
    }

    /// Staff react to fluents that just became true: simple agents adopt a
    /// sequence (branching over its parameters), goal-driven ones must
    /// select the matching goal.
    fn adopt_staff_intentions(&mut self, node: &Node) -> Vec<(Node, Vec<Intention>)> {
        let d = self.d;
        let mut branches: Vec<(Node, Vec<Intention>)> = vec![(node.clone(), Vec::new())];
        for (t, trig) in self.triggers.iter().enumerate() {
            if node.fired[t] || !node.state.get(trig.fluent) {
                continue;
            }
            let mut next = Vec::new();
            for (mut n, ints) in branches {
                n.fired[t] = true;
                match (&trig.kind, self.cfg.ti_mode) {
                    (TriggerKind::Waiter { customer }, TiMode::Mixed) => {
                        let Some(cook) = d.cooks.first() else { continue };
                        for p in &self.waiter_options[*customer] {
                            if d.agent_id(&p.waiter) != Some(trig.agent) {
                                continue;
                            }
                            let Ok(seq) = waiter_sequence(d, p, cook) else { continue };
                            let mut n2 = n.clone();
                            let mut ints2 = ints.clone();
                            adopt(&mut n2, trig.agent, seq, &mut ints2, node.step);
                            next.push((n2, ints2));
                        }
                    }
                    (TriggerKind::Cook { food, waiter }, TiMode::Mixed) => {
                        let p = CookParams {
                            cook: d.agents()[trig.agent].clone(),
                            food: food.clone(),
                            waiter: waiter.clone(),
                        };
                        let Ok(seq) = cook_sequence(d, &p) else { continue };
                        let mut ints = ints;
                        adopt(&mut n, trig.agent, seq, &mut ints, node.step);
                        next.push((n, ints));
                    }
                    (kind, TiMode::NewOnly) => {
                        let g = trig.agent;
                        let busy = match &n.minds[g] {
                            Mind::Goal(gis) => gis.goal.is_some() && gis.phase != Phase::Idle,
                            _ => false,
                        };
                        if busy || n.pending_select[g].is_some() {
                            self.second_goal = Some(d.agents()[g].clone());
                            continue;
                        }
                        let (goal, tops) = match kind {
                            TriggerKind::Waiter { customer } => {
                                let c = &d.customers[*customer];
                                let Some(cook) = d.cooks.first() else { continue };
                                let tops: Vec<_> = self.waiter_options[*customer]
                                    .iter()
                                    .filter(|p| d.agent_id(&p.waiter) == Some(g))
                                    .filter_map(|p| waiter_activity(d, p, cook).ok())
                                    .map(Arc::new)
                                    .collect();
                                (d.fluent("served_and_billed", &[c]), tops)
                            }
                            TriggerKind::Cook { food, waiter } => {
                                let p = CookParams {
                                    cook: d.agents()[g].clone(),
                                    food: food.clone(),
                                    waiter: waiter.clone(),
                                };
                                let tops = cook_activity(d, &p).ok().map(Arc::new).into_iter().collect();
                                (d.fluent("prepared", &[food]), tops)
                            }
                        };
                        n.pending_select[g] = goal;
                        n.tops[g] = tops;
                        next.push((n, ints));
                    }
                }
            }
            branches = next;
        }
        branches
    }

    /// Expands one step with the next story step either mapped here or not.
    fn expand(&mut self, node: &Node, mapped: bool) {
        let d = self.d;
        let i = node.step;
        let steps = self.steps.clone();
        let story = if mapped { Some(&steps[node.next_story]) } else { None };
        let mut revealed = node.revealed.clone();
        if let Some(st) = story {
            for l in &st.holds {
                if node.state.get(l.fluent) != l.value {
                    return;
                }
                if let Some(k) = self.rigid_observed.iter().position(|(f, _)| *f == l.fluent) {
                    revealed[k] = true;
                }
            }
        }
        let belief = self.belief(node, &revealed);
        let intf = d.interference();
        let observed: &[ActionId] = story.map_or(&[], |s| s.happened.as_slice());
        let forced_intf = observed.contains(&intf);
        let banned_intf = story.is_some_and(|s| s.not_happened.contains(&intf));

        let n = d.agents().len();
        let mut per_agent: Vec<Vec<Choice>> = Vec::with_capacity(n);
        for g in 0..n {
            let mut own_obs = observed.iter().copied().filter(|&a| d.agent_of(a) == Some(g));
            let o = own_obs.next();
            if own_obs.next().is_some() {
                return;
            }
            let opts = self.options(node, g, o, &belief);
            if opts.is_empty() {
                return;
            }
            per_agent.push(opts);
        }
        if observed
            .iter()
            .any(|&a| a != intf && d.agent_of(a).is_none())
        {
            return;
        }

        let mut pick = vec![0usize; n];
        loop {
            self.try_combination(node, &per_agent, &pick, story, &revealed, forced_intf, banned_intf);
            if self.aborted {
                return;
            }
            let mut k = 0;
            while k < n {
                pick[k] += 1;
                if pick[k] < per_agent[k].len() {
                    break;
                }
                pick[k] = 0;
                k += 1;
            }
            if k == n {
                break;
            }
        }
        let _ = i;
    }

    #[allow(clippy::too_many_arguments)]
    fn try_combination(
        &mut self,
        node: &Node,
        per_agent: &[Vec<Choice>],
        pick: &[usize],
        story: Option<&StoryStep>,
        revealed: &[bool],
        forced_intf: bool,
        banned_intf: bool,
    ) {
        let d = self.d;
        let intf = d.interference();
        let i = node.step;
        let choices: Vec<&Choice> = per_agent.iter().zip(pick).map(|(o, &k)| &o[k]).collect();
        if story.is_none() && choices.iter().any(|c| c.observed_only) {
            return;
        }
        let mut actions: Vec<ActionId> = choices.iter().filter_map(|c| c.action).collect();
        let mut mental: Vec<MentalAction> = choices
            .iter()
            .enumerate()
            .filter_map(|(g, c)| {
                c.mental.as_ref().map(|(k, _)| MentalAction {
                    agent: g,
                    kind: k.clone(),
                })
            })
            .collect();
        mental.sort();
        let needs = forced_intf || choices.iter().any(|c| c.needs_interference);
        let room = node.abduced.len() < self.cfg.max_interferences;
        let interferable = actions.iter().any(|&a| d.interferable(a));
        let variants: &[bool] = if needs {
            if !room || banned_intf {
                return;
            }
            &[true]
        } else if interferable && room && !banned_intf {
            &[false, true]
        } else {
            &[false]
        };
        actions.sort_unstable();
        for &with_intf in variants {
            let mut acts = actions.clone();
            if with_intf {
                acts.push(intf);
            }
            let occ = Occurrence::new(i, acts, mental.clone());
            if occ.actions.iter().any(|&a| !d.executable_with(&node.state, a, &occ.actions)) {
                continue;
            }
            let satisfied = match story {
                Some(st) => {
                    st.happened.iter().all(|&a| occ.contains(a))
                        && st.not_happened.iter().all(|&a| !occ.contains(a))
                }
                None => self.next_satisfied(node, &occ),
            };
            // Mapped steps must satisfy their story step; unmapped ones must
            // not, or the story step would have been mapped here.
            if satisfied != story.is_some() {
                continue;
            }
            let next_story = node.next_story + usize::from(story.is_some());
            if occ.is_empty() {
                if next_story == self.steps.len() {
                    if let Some(st) = story {
                        self.mapping.push((st.step, i));
                    }
                    self.emit_at(node);
                    if story.is_some() {
                        self.mapping.pop();
                    }
                }
                continue;
            }
            let successors = match successor_states(d, &node.state, &occ) {
                Ok(s) => s,
                Err(_) => continue,
            };
            for succ in successors {
                let mut child = node.clone();
                child.step = i + 1;
                child.state = succ;
                child.next_story = next_story;
                child.revealed = revealed.to_vec();
                if with_intf {
                    child.abduced.push(i);
                }
                for (g, c) in choices.iter().enumerate() {
                    child.declined[g] = c.declined.clone();
                    if c.mental.as_ref().is_some_and(|(k, _)| matches!(k, MentalKind::Select(_))) {
                        child.pending_select[g] = None;
                    }
                    child.minds[g] = match &node.minds[g] {
                        Mind::Passive => Mind::Passive,
                        Mind::Simple(s) => Mind::Simple(simple_advance(s, &occ.actions)),
                        Mind::Goal(gis) => Mind::Goal(goal_advance(
                            gis,
                            &node.state,
                            c.mental.as_ref().map(|(k, f)| (k, *f)),
                            c.top.as_ref(),
                            &occ.actions,
                        )),
                    };
                }
                if let Some(st) = story {
                    self.mapping.push((st.step, i));
                }
                self.occs.push(occ.clone());
                self.explore(child);
                self.occs.pop();
                if story.is_some() {
                    self.mapping.pop();
                }
                if self.aborted {
                    return;
                }
            }
        }
    }

    /// Whether the next story step would be satisfied at this step.
    fn next_satisfied(&self, node: &Node, occ: &Occurrence) -> bool {
        let Some(st) = self.steps.get(node.next_story) else {
            return false;
        };
        st.happened.iter().all(|&a| occ.contains(a))
            && st.not_happened.iter().all(|&a| !occ.contains(a))
            && st.holds.iter().all(|l| node.state.holds(*l))
    }

    /// What agent `g` may do at this step. `o` is its observed action here.
    fn options(&self, node: &Node, g: AgentId, o: Option<ActionId>, belief: &State) -> Vec<Choice> {
        let d = self.d;
        let intf = d.interference();
        let state = &node.state;
        let relaxed_ok = |a: ActionId| {
            !executable(d, state, a)
                && d.executable_with(state, a, &[a, intf])
                && !node.declined[g].contains(&a)
        };
        let observed = |x: ActionId| {
            let mut c = Choice::act(x);
            c.observed_only = true;
            if !executable(d, state, x) {
                c.needs_interference = true;
            }
            c
        };
        if let Some(goal) = node.pending_select[g] {
            return match o {
                Some(_) => Vec::new(),
                None => vec![Choice::mental(MentalKind::Select(goal), false)],
            };
        }
        match &node.minds[g] {
            Mind::Passive => match o {
                Some(x) => vec![observed(x)],
                None => vec![Choice::idle(Vec::new())],
            },
            Mind::Simple(sis) => {
                let mut nexts: Vec<ActionId> = sis.intents.iter().filter_map(Intent::next).collect();
                nexts.sort_unstable();
                nexts.dedup();
                let normal: Vec<ActionId> =
                    nexts.iter().copied().filter(|&a| executable(d, state, a)).collect();
                let relaxed: Vec<ActionId> = nexts.iter().copied().filter(|&a| relaxed_ok(a)).collect();
                if let Some(x) = o {
                    if !normal.is_empty() {
                        return if normal.contains(&x) { vec![Choice::act(x)] } else { Vec::new() };
                    }
                    if relaxed.contains(&x) {
                        let mut c = Choice::act(x);
                        c.needs_interference = true;
                        return vec![c];
                    }
                    return vec![observed(x)];
                }
                if !normal.is_empty() {
                    return normal.into_iter().map(Choice::act).collect();
                }
                let mut out = vec![Choice::idle(relaxed.clone())];
                for &a in &relaxed {
                    let mut c = Choice::act(a);
                    c.needs_interference = true;
                    c.declined = relaxed.iter().copied().filter(|&x| x != a).collect();
                    out.push(c);
                }
                out
            }
            Mind::Goal(gis) => {
                let relaxed = &self.relaxed;
                let mut futile = |s: &GoalIntentState| {
                    s.activity
                        .as_deref()
                        .is_some_and(|top| activity_futile(d, relaxed, top, g, belief))
                };
                let own = |a: ActionId| d.agent_of(a) == Some(g);
                let (next, futile_stop) = goal_next_action(gis, belief, &mut futile, &own);
                match next {
                    Next::Mental(kind) => match o {
                        Some(_) => Vec::new(),
                        None => vec![Choice::mental(kind, futile_stop)],
                    },
                    Next::StartTop => match o {
                        Some(_) => Vec::new(),
                        None => node.tops[g]
                            .iter()
                            .map(|t| {
                                let mut c = Choice::mental(MentalKind::Start(t.name.clone()), false);
                                c.top = Some(t.clone());
                                c
                            })
                            .collect(),
                    },
                    Next::ReplanOrAbandon(goal) => match o {
                        Some(_) => Vec::new(),
                        None => {
                            let kind = if goal_reachable(d, relaxed, goal, belief) {
                                MentalKind::Replan(goal)
                            } else {
                                MentalKind::Abandon(goal)
                            };
                            vec![Choice::mental(kind, false)]
                        }
                    },
                    Next::Act(a) => {
                        if executable(d, state, a) {
                            return match o {
                                Some(x) if x != a => Vec::new(),
                                _ => vec![Choice::act(a)],
                            };
                        }
                        if relaxed_ok(a) {
                            return match o {
                                Some(x) if x == a => {
                                    let mut c = Choice::act(a);
                                    c.needs_interference = true;
                                    vec![c]
                                }
                                Some(x) => vec![observed(x)],
                                None => {
                                    let mut c = Choice::act(a);
                                    c.needs_interference = true;
                                    vec![Choice::idle(vec![a]), c]
                                }
                            };
                        }
                        match o {
                            Some(x) => vec![observed(x)],
                            None => vec![Choice::idle(Vec::new())],
                        }
                    }
                    Next::Wait => match o {
                        Some(x) => vec![observed(x)],
                        None => vec![Choice::idle(Vec::new())],
                    },
                }
            }
        }
    }

    /// Records a model that ends at the current node's step.
    fn emit_at(&mut self, node: &Node) {
        self.emit(node);
    }

    fn emit(&mut self, node: &Node) {
        let model = Model {
            mapping: TimelineMapping::from_pairs(self.mapping.clone()),
            trajectory: self.traj.clone(),
            occurrences: self.occs.clone(),
            minds: self.minds.clone(),
            intentions: {
                let mut v = self.intentions.clone();
                v.sort();
                v
            },
            abduced: node.abduced.clone(),
        };
        self.found.retain(|m| !strict_subset(&model.abduced, &m.abduced));
        self.found.push(model);
    }
}

fn adopt(n: &mut Node, agent: AgentId, seq: SequenceSpec, ints: &mut Vec<Intention>, step: usize) {
    ints.push(Intention {
        agent,
        sequence: seq.name.clone(),
        step,
    });
    if let Mind::Simple(s) = &mut n.minds[agent] {
        s.intents.push(Intent::new(Arc::new(seq)));
    }
}

/// `a` is a strict subset of `b`; both ascending.
fn strict_subset(a: &[usize], b: &[usize]) -> bool {
    a.len() < b.len() && a.iter().all(|x| b.contains(x))
}

// ---------------------------------------------------------------------------
// Explanations

/// One diagnosis: the staff plans and the interferences of a group of
/// models.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Explanation {
    pub waiter: Vec<Term>,
    pub cook: Vec<Term>,
    /// Step of each interference and the action it disturbed.
    pub interferences: Vec<(usize, Term)>,
    pub labels: Vec<String>,
    pub models: usize,
}

/// Groups models by staff plans and interference placement.
pub fn explain(domain: &DomainSpec, story: &Story, models: &[Model]) -> Vec<Explanation> {
    let waiter_noun = if story.entities_of(Sort::Waitress).next().is_some() {
        "waitress"
    } else {
        "waiter"
    };
    let mut out: Vec<Explanation> = Vec::new();
    for m in models {
        let mut waiter = Vec::new();
        let mut cook = Vec::new();
        for t in m
            .intentions
            .iter()
            .map(|i| i.sequence.clone())
            .chain(m.started_activities().into_iter().map(|(_, t, _)| t))
        {
            match t.functor.as_str() {
                "w_seq" | "w_act" => waiter.push(t),
                "ck_seq" | "ck_act" => cook.push(t),
                _ => {}
            }
        }
        waiter.sort();
        cook.sort();
        let mut interferences = Vec::new();
        let mut labels = Vec::new();
        for &s in &m.abduced {
            for &a in &m.occurrences[s].actions {
                if domain.interferable(a) {
                    let t = domain.action_term(a).clone();
                    labels.push(label(domain, &t, waiter_noun));
                    interferences.push((s, t));
                }
            }
        }
        if let Some(e) = out.iter_mut().find(|e| {
            e.waiter == waiter && e.cook == cook && e.interferences == interferences
        }) {
            e.models += 1;
        } else {
            out.push(Explanation {
                waiter,
                cook,
                interferences,
                labels,
                models: 1,
            });
        }
    }
    out.sort();
    out
}

fn label(domain: &DomainSpec, action: &Term, waiter: &str) -> String {
    let bill = action
        .arg_name(1)
        .is_some_and(|x| domain.bills.iter().any(|b| b == x));
    match action.functor.as_str() {
        "order" => alloc::format!("The {waiter} misunderstood the customer's order."),
        "request" => String::from("The cook misunderstood the food request made by the waiter."),
        "prepare" => String::from("The cook understood the order correctly but prepared the wrong food."),
        "pick_up" if bill => alloc::format!("The {waiter} picked up the wrong bill from the counter."),
        "pick_up" => alloc::format!("The {waiter} picked up the wrong order from the kitchen."),
        _ => alloc::format!("Something went wrong with {action}."),
    }
}

// ---------------------------------------------------------------------------
// Lone agents

/// How a lone agent follows a plan.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Theory {
    /// The plan is an intended sequence.
    Simple,
    /// The plan is an activity started and stopped by mental actions.
    GoalDriven,
}

/// Runs `activity` for `agent` alone from `state` and returns the occurrences
/// from the first to the last step at which something happened. `None` if
/// the agent gets stuck before finishing.
pub fn lone_agent_run(
    domain: &DomainSpec,
    state: &State,
    agent: AgentId,
    activity: &ActivitySpec,
    theory: Theory,
) -> Option<Vec<Occurrence>> {
    let bound = 2 * activity.flatten().len() + 2 * activity.activity_count() + 4;
    let relaxed = Relaxed::new(domain);
    let mut state = state.clone();
    let mut out = Vec::new();
    match theory {
        Theory::Simple => {
            let seq = SequenceSpec {
                name: activity.name.clone(),
                components: activity
                    .flatten()
                    .into_iter()
                    .map(crate::intentions::SeqComponent::Action)
                    .collect(),
            };
            let mut sis = SimpleIntentState {
                intents: vec![Intent::new(Arc::new(seq))],
            };
            for step in 0..bound {
                if sis.intents[0].done() {
                    return Some(out);
                }
                let a = sis.intents[0].next()?;
                if !executable(domain, &state, a) {
                    return None;
                }
                let occ = Occurrence::new(step, vec![a], Vec::new());
                state = successor_states(domain, &state, &occ).ok()?.into_iter().next()?;
                sis = simple_advance(&sis, &occ.actions);
                out.push(occ);
            }
            None
        }
        Theory::GoalDriven => {
            let top = Arc::new(activity.clone());
            let mut gis = GoalIntentState {
                goal: Some(activity.goal),
                phase: Phase::Selected,
                activity: None,
                frames: Vec::new(),
            };
            for step in 0..bound {
                let mut futile = |s: &GoalIntentState| {
                    s.activity
                        .as_deref()
                        .is_some_and(|t| activity_futile(domain, &relaxed, t, agent, &state))
                };
                let own = |a: ActionId| domain.agent_of(a) == Some(agent);
                let (next, futile_stop) = goal_next_action(&gis, &state, &mut futile, &own);
                let (occ, mental) = match next {
                    Next::Mental(kind) => (
                        Occurrence::new(step, Vec::new(), vec![MentalAction { agent, kind: kind.clone() }]),
                        Some(kind),
                    ),
                    Next::StartTop => {
                        let kind = MentalKind::Start(top.name.clone());
                        (
                            Occurrence::new(step, Vec::new(), vec![MentalAction { agent, kind: kind.clone() }]),
                            Some(kind),
                        )
                    }
                    Next::Act(a) if executable(domain, &state, a) => {
                        (Occurrence::new(step, vec![a], Vec::new()), None)
                    }
                    _ if gis.phase == Phase::Idle => return Some(out),
                    _ => return None,
                };
                let next_state = successor_states(domain, &state, &occ).ok()?.into_iter().next()?;
                gis = goal_advance(
                    &gis,
                    &state,
                    mental.as_ref().map(|k| (k, futile_stop)),
                    Some(&top),
                    &occ.actions,
                );
                state = next_state;
                out.push(occ);
            }
            None
        }
    }
}

/// Number of reasoning steps a lone agent needs for `activity`.
pub fn lone_agent_span(
    domain: &DomainSpec,
    state: &State,
    agent: AgentId,
    activity: &ActivitySpec,
    theory: Theory,
) -> Option<usize> {
    lone_agent_run(domain, state, agent, activity, theory).map(|occs| occs.len())
}

//! Brute-force model enumeration compared against the solver.
//!
//! The oracle fixes a full timeline mapping first, then at every step tries
//! every combination of per-agent candidates (nothing, any executable
//! physical action, any mental action mentioned by the agent's plans) with
//! and without an interference, and keeps the combinations the intention
//! rules accept. Greedy mapping and abductive minimality are applied as
//! filters afterwards.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::micro_story;
use proptest::prop_assert;

use proptest::test_runner::{Config as PropConfig, TestRunner};
use restaurant_core::activities::{
    candidate_staff_sequences, cook_activity, cook_sequence, customer_activity, waiter_activity,
    waiter_sequence, CustomerStructure, StaffParams,
};
use restaurant_core::domain_kb::{executable, ActionId, AgentId, DomainSpec, FluentId, Literal};
use restaurant_core::intentions::{
    activity_futile, goal_advance, goal_next_action, goal_reachable, simple_advance, ActivitySpec,
    Component, GoalIntentState, Intent, MentalAction, MentalKind, Next, Phase, Relaxed,
    SimpleIntentState,
};
use restaurant_core::logicform::ObsKind;
use restaurant_core::reasoner::{solve, Config, TiMode};
use restaurant_core::term::Term;
use restaurant_core::transition::{successor_states, Occurrence, State};
use restaurant_core::{build_restaurant_domain, parse_story, Story, Unlimited};

type Key = (Vec<(u32, usize)>, Vec<Occurrence>, Vec<State>, Vec<(usize, AgentId, Term)>);

#[derive(Clone)]
enum M {
    Passive,
    Simple(SimpleIntentState),
    Goal(GoalIntentState),
}

#[derive(Clone, PartialEq)]
enum Pick {
    Nothing,
    Act(ActionId),
    Mental(MentalKind),
}

struct StoryStep {
    step: u32,
    happened: Vec<ActionId>,
    not_happened: Vec<ActionId>,
    holds: Vec<Literal>,
}

#[derive(Clone)]
struct World {
    state: State,
    minds: Vec<M>,
    pending: Vec<Option<FluentId>>,
    tops: Vec<Vec<Arc<ActivitySpec>>>,
    declined: Vec<Vec<ActionId>>,
    fired: BTreeSet<(AgentId, FluentId)>,
    revealed: BTreeSet<FluentId>,
    abduced: Vec<usize>,
    traj: Vec<State>,
    occs: Vec<Occurrence>,
    intends: Vec<(usize, AgentId, Term)>,
}

/// Agent, fluent, and the customer or (customer, food) a reaction is for.
type Watch = (AgentId, FluentId, Option<String>, Option<(String, String)>);

pub struct Oracle<'a> {
    d: &'a DomainSpec,
    mode: TiMode,
    horizon: usize,
    max_intf: usize,
    steps: Vec<StoryStep>,
    relaxed: Relaxed,
    /// Rigid observed fluents and their unobserved default.
    rigid: Vec<(FluentId, bool)>,
    out: Vec<(Key, Vec<usize>)>,
}

fn all_mappings(k: usize, horizon: usize) -> Vec<Vec<usize>> {
    fn go(k: usize, from: usize, horizon: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in from..horizon {
            cur.push(i);
            go(k, i + 1, horizon, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(k, 0, horizon, &mut Vec::new(), &mut out);
    out
}

fn activity_names(a: &ActivitySpec, out: &mut Vec<Term>) {
    out.push(a.name.clone());
    for c in &a.components {
        if let Component::Activity(s) = c {
            activity_names(s, out);
        }
    }
}

impl<'a> Oracle<'a> {
    pub fn new(d: &'a DomainSpec, story: &Story, mode: TiMode, horizon: usize) -> Self {
        let mut steps = Vec::new();
        let mut values: Vec<u32> = story.observations.iter().map(|o| o.story_step).collect();
        values.sort_unstable();
        values.dedup();
        for s in values {
            let mut st = StoryStep {
                step: s,
                happened: vec![],
                not_happened: vec![],
                holds: vec![],
            };
            for o in story.observations.iter().filter(|o| o.story_step == s) {
                match o.kind {
                    ObsKind::Action => {
                        let a = d.action_id(&o.subject).unwrap();
                        if o.value {
                            st.happened.push(a)
                        } else {
                            st.not_happened.push(a)
                        }
                    }
                    ObsKind::Fluent => st.holds.push(Literal {
                        fluent: d.fluent_id(&o.subject).unwrap(),
                        value: o.value,
                    }),
                }
            }
            steps.push(st);
        }
        let rigid_flags = d.rigid_fluents();
        let init = State::initial(d);
        let mut rigid = Vec::new();
        for st in &steps {
            for l in &st.holds {
                if rigid_flags[l.fluent] && !rigid.iter().any(|(f, _)| *f == l.fluent) {
                    rigid.push((l.fluent, init.get(l.fluent)));
                }
            }
        }
        Oracle {
            d,
            mode,
            horizon,
            max_intf: 2,
            steps,
            relaxed: Relaxed::new(d),
            rigid,
            out: Vec::new(),
        }
    }

    pub fn run(mut self) -> BTreeSet<Key> {
        for mapping in all_mappings(self.steps.len(), self.horizon) {
            if let Some(w) = self.initial() {
                self.step(&mapping, w, 0);
            }
        }
        let sets: Vec<Vec<usize>> = self.out.iter().map(|(_, a)| a.clone()).collect();
        self.out
            .iter()
            .filter(|(_, a)| !sets.iter().any(|s| s.len() < a.len() && s.iter().all(|x| a.contains(x))))
            .map(|(k, _)| k.clone())
            .collect()
    }

    fn initial(&self) -> Option<World> {
        let d = self.d;
        let mut state = State::initial(d);
        for st in &self.steps {
            for l in &st.holds {
                if self.rigid.iter().any(|(f, _)| *f == l.fluent) {
                    if state.get(l.fluent) != l.value && state.get(l.fluent) != State::initial(d).get(l.fluent) {
                        return None;
                    }
                    state.set(l.fluent, l.value);
                }
            }
        }
        // Contradicting rigid observations.
        for st in &self.steps {
            for l in &st.holds {
                if self.rigid.iter().any(|(f, _)| *f == l.fluent) && state.get(l.fluent) != l.value {
                    return None;
                }
            }
        }
        state.close(d);
        let agents = d.agents();
        let mut mentioned = BTreeSet::new();
        for st in &self.steps {
            let terms: Vec<&Term> = st
                .happened
                .iter()
                .chain(&st.not_happened)
                .map(|&a| d.action_term(a))
                .chain(st.holds.iter().map(|l| d.fluent_term(l.fluent)))
                .collect();
            for t in terms {
                for c in t.constants() {
                    mentioned.insert(c.to_string());
                }
            }
        }
        let mut w = World {
            state: state.clone(),
            minds: vec![],
            pending: vec![None; agents.len()],
            tops: vec![vec![]; agents.len()],
            declined: vec![vec![]; agents.len()],
            fired: BTreeSet::new(),
            revealed: BTreeSet::new(),
            abduced: vec![],
            traj: vec![],
            occs: vec![],
            intends: vec![],
        };
        for (g, name) in agents.iter().enumerate() {
            let customer = d.customers.contains(name);
            let staff = d.waiters.contains(name) || d.cooks.contains(name);
            w.minds.push(if customer || (staff && self.mode == TiMode::NewOnly) {
                M::Goal(GoalIntentState::default())
            } else if staff {
                M::Simple(SimpleIntentState::default())
            } else {
                M::Passive
            });
            if customer && mentioned.contains(name) {
                w.pending[g] = d.fluent("satiated_and_out", &[name]);
                for r in &d.restaurants {
                    for f in &d.foods {
                        let a = customer_activity(d, name, r, &d.waiters[0], f, CustomerStructure::S2).unwrap();
                        w.tops[g].push(Arc::new(a));
                    }
                }
            }
        }
        Some(w)
    }

    /// Staff reactions at the current state; several worlds when a simple
    /// waiter may adopt one of several sequences.
    fn adopt(&self, w: World, i: usize) -> Vec<World> {
        let d = self.d;
        let mut worlds = vec![w];
        let mut watch: Vec<Watch> = vec![];
        for c in &d.customers {
            for wt in &d.waiters {
                watch.push((d.agent_id(wt).unwrap(), d.fluent("inside", &[c]).unwrap(), Some(c.clone()), None));
            }
        }
        for ck in &d.cooks {
            for f in &d.foods {
                for wt in &d.waiters {
                    watch.push((
                        d.agent_id(ck).unwrap(),
                        d.fluent("requested", &[ck, f, wt]).unwrap(),
                        None,
                        Some((f.clone(), wt.clone())),
                    ));
                }
            }
        }
        for (g, fl, customer, cook_for) in watch {
            let mut next = vec![];
            for mut w in worlds {
                if w.fired.contains(&(g, fl)) || !w.state.get(fl) {
                    next.push(w);
                    continue;
                }
                w.fired.insert((g, fl));
                let me = &d.agents()[g];
                let params: Vec<StaffParams> = candidate_staff_sequences(d)
                    .into_iter()
                    .filter(|p| match (p, &customer, &cook_for) {
                        (StaffParams::Waiter(p), Some(c), _) => &p.waiter == me && &p.customer == c,
                        (StaffParams::Cook(p), _, Some((f, wt))) => &p.cook == me && &p.food == f && &p.waiter == wt,
                        _ => false,
                    })
                    .collect();
                match self.mode {
                    TiMode::Mixed => {
                        for p in params {
                            let seq = match &p {
                                StaffParams::Waiter(p) => waiter_sequence(d, p, &d.cooks[0]).unwrap(),
                                StaffParams::Cook(p) => cook_sequence(d, p).unwrap(),
                            };
                            let mut w2 = w.clone();
                            w2.intends.push((i, g, seq.name.clone()));
                            if let M::Simple(s) = &mut w2.minds[g] {
                                s.intents.push(Intent::new(Arc::new(seq)));
                            }
                            next.push(w2);
                        }
                    }
                    TiMode::NewOnly => {
                        let active = matches!(&w.minds[g], M::Goal(s) if s.goal.is_some() && s.phase != Phase::Idle);
                        if active || w.pending[g].is_some() {
                            continue;
                        }
                        w.pending[g] = match &customer {
                            Some(c) => d.fluent("served_and_billed", &[c]),
                            None => d.fluent("prepared", &[&cook_for.as_ref().unwrap().0]),
                        };
                        w.tops[g] = params
                            .iter()
                            .map(|p| match p {
                                StaffParams::Waiter(p) => waiter_activity(d, p, &d.cooks[0]).unwrap(),
                                StaffParams::Cook(p) => cook_activity(d, p).unwrap(),
                            })
                            .map(Arc::new)
                            .collect();
                        next.push(w);
                    }
                }
            }
            worlds = next;
        }
        worlds
    }

    fn satisfied(&self, s: usize, state: &State, occ: &[ActionId]) -> bool {
        let st = &self.steps[s];
        st.happened.iter().all(|a| occ.contains(a))
            && st.not_happened.iter().all(|a| !occ.contains(a))
            && st.holds.iter().all(|l| state.holds(*l))
    }

    fn emit(&mut self, mapping: &[usize], w: &World) {
        let mut intends = w.intends.clone();
        intends.sort();
        let pairs = self.steps.iter().zip(mapping).map(|(s, &i)| (s.step, i)).collect();
        self.out
            .push(((pairs, w.occs.clone(), w.traj.clone(), intends), w.abduced.clone()));
    }

    fn step(&mut self, mapping: &[usize], w: World, i: usize) {
        if i == self.horizon {
            let mut w = w;
            w.traj.push(w.state.clone());
            self.emit(mapping, &w);
            return;
        }
        for w in self.adopt(w, i) {
            self.expand(mapping, w, i);
        }
    }

    fn expand(&mut self, mapping: &[usize], w: World, i: usize) {
        let d = self.d;
        let intf = d.interference();
        let here = mapping.iter().position(|&m| m == i);
        let mut revealed = w.revealed.clone();
        if let Some(s) = here {
            for l in &self.steps[s].holds {
                if self.rigid.iter().any(|(f, _)| *f == l.fluent) {
                    revealed.insert(l.fluent);
                }
            }
        }
        let mut belief = w.state.clone();
        for &(f, default) in &self.rigid {
            if !revealed.contains(&f) {
                belief.set(f, default);
            }
        }
        belief.close(d);
        let observed: Vec<ActionId> = here.map(|s| self.steps[s].happened.clone()).unwrap_or_default();
        let n = d.agents().len();

        // Candidates and the rule each agent must follow.
        let mut cands: Vec<Vec<(Pick, bool, Vec<ActionId>)>> = vec![];
        for g in 0..n {
            let own_obs: Vec<ActionId> = observed.iter().copied().filter(|&a| d.agent_of(a) == Some(g)).collect();
            let o = own_obs.first().copied();
            let mut picks = vec![Pick::Nothing];
            for a in 0..d.action_count() {
                if d.agent_of(a) == Some(g) && d.executable_with(&w.state, a, &[a, intf]) {
                    picks.push(Pick::Act(a));
                }
            }
            let mut next = None;
            if let M::Goal(gis) = &w.minds[g] {
                let mut ms = vec![];
                if let Some(goal) = w.pending[g] {
                    ms.push(MentalKind::Select(goal));
                }
                let mut names = vec![];
                for t in &w.tops[g] {
                    activity_names(t, &mut names);
                }
                if let Some(a) = &gis.activity {
                    activity_names(a, &mut names);
                }
                for t in names {
                    ms.push(MentalKind::Start(t.clone()));
                    ms.push(MentalKind::Stop(t));
                }
                if let Some(goal) = gis.goal {
                    ms.push(MentalKind::Abandon(goal));
                    ms.push(MentalKind::Replan(goal));
                }
                picks.extend(ms.into_iter().map(Pick::Mental));
                let relaxed = &self.relaxed;
                let mut futile = |s: &GoalIntentState| {
                    s.activity.as_deref().is_some_and(|t| activity_futile(d, relaxed, t, g, &belief))
                };
                let own = |a: ActionId| d.agent_of(a) == Some(g);
                next = Some(goal_next_action(gis, &belief, &mut futile, &own));
            }
            let mut ok = vec![];
            for p in picks {
                if let Some((dec, fut)) = self.allowed(&w, g, &p, o, next.as_ref(), &belief) {
                    ok.push((p, fut, dec));
                }
            }
            if ok.is_empty() {
                return;
            }
            cands.push(ok);
        }

        let mut idx = vec![0usize; n];
        loop {
            let choice: Vec<&(Pick, bool, Vec<ActionId>)> = cands.iter().zip(&idx).map(|(c, &k)| &c[k]).collect();
            for with_intf in [false, true] {
                self.try_occ(mapping, &w, i, &choice, with_intf, &revealed, here);
            }
            let mut k = 0;
            while k < n {
                idx[k] += 1;
                if idx[k] < cands[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == n {
                break;
            }
        }
    }

    /// Whether agent `g` may make `pick`; returns the actions it declines
    /// and whether a stop is caused by futility.
    fn allowed(
        &self,
        w: &World,
        g: AgentId,
        pick: &Pick,
        o: Option<ActionId>,
        next: Option<&(Next, bool)>,
        belief: &State,
    ) -> Option<(Vec<ActionId>, bool)> {
        let d = self.d;
        let intf = d.interference();
        let state = &w.state;
        let normal = |a: ActionId| executable(d, state, a);
        let relaxed_new = |a: ActionId| {
            !normal(a) && d.executable_with(state, a, &[a, intf]) && !w.declined[g].contains(&a)
        };
        if let Some(goal) = w.pending[g] {
            return (o.is_none() && *pick == Pick::Mental(MentalKind::Select(goal))).then(|| (vec![], false));
        }
        let obs_ok = |x: ActionId| *pick == Pick::Act(x);
        match &w.minds[g] {
            M::Passive => match o {
                Some(x) => obs_ok(x).then(|| (vec![], false)),
                None => (*pick == Pick::Nothing).then(|| (vec![], false)),
            },
            M::Simple(s) => {
                let mut nexts: Vec<ActionId> = s.intents.iter().filter_map(Intent::next).collect();
                nexts.sort_unstable();
                nexts.dedup();
                let n: Vec<ActionId> = nexts.iter().copied().filter(|&a| normal(a)).collect();
                let r: Vec<ActionId> = nexts.iter().copied().filter(|&a| relaxed_new(a)).collect();
                match (o, pick) {
                    (Some(x), _) => (obs_ok(x) && (n.is_empty() || n.contains(&x))).then(|| (vec![], false)),
                    (None, Pick::Act(a)) if !n.is_empty() => n.contains(a).then(|| (vec![], false)),
                    (None, _) if !n.is_empty() => None,
                    (None, Pick::Nothing) => Some((r.clone(), false)),
                    (None, Pick::Act(a)) if r.contains(a) => {
                        Some((r.iter().copied().filter(|x| x != a).collect(), false))
                    }
                    _ => None,
                }
            }
            M::Goal(_) => {
                let (next, fut) = next.unwrap();
                match next {
                    Next::Mental(k) => (o.is_none() && *pick == Pick::Mental(k.clone())).then(|| (vec![], *fut)),
                    Next::StartTop => {
                        let ok = o.is_none()
                            && w.tops[g].iter().any(|t| *pick == Pick::Mental(MentalKind::Start(t.name.clone())));
                        ok.then(|| (vec![], false))
                    }
                    Next::ReplanOrAbandon(goal) => {
                        let k = if goal_reachable(d, &self.relaxed, *goal, belief) {
                            MentalKind::Replan(*goal)
                        } else {
                            MentalKind::Abandon(*goal)
                        };
                        (o.is_none() && *pick == Pick::Mental(k)).then(|| (vec![], false))
                    }
                    Next::Act(a) if normal(*a) => {
                        (o.is_none_or(|x| x == *a) && *pick == Pick::Act(*a)).then(|| (vec![], false))
                    }
                    Next::Act(a) if relaxed_new(*a) => match o {
                        Some(x) => obs_ok(x).then(|| (vec![], false)),
                        None if *pick == Pick::Nothing => Some((vec![*a], false)),
                        None => (*pick == Pick::Act(*a)).then(|| (vec![], false)),
                    },
                    Next::Act(_) | Next::Wait => match o {
                        Some(x) => obs_ok(x).then(|| (vec![], false)),
                        None => (*pick == Pick::Nothing).then(|| (vec![], false)),
                    },
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn try_occ(
        &mut self,
        mapping: &[usize],
        w: &World,
        i: usize,
        choice: &[&(Pick, bool, Vec<ActionId>)],
        with_intf: bool,
        revealed: &BTreeSet<FluentId>,
        here: Option<usize>,
    ) {
        let d = self.d;
        let intf = d.interference();
        let mut acts: Vec<ActionId> = choice
            .iter()
            .filter_map(|(p, _, _)| if let Pick::Act(a) = p { Some(*a) } else { None })
            .collect();
        let needs = acts.iter().any(|&a| !executable(d, &w.state, a));
        let can = acts.iter().any(|&a| d.interferable(a));
        if with_intf {
            if !can || w.abduced.len() >= self.max_intf {
                return;
            }
            acts.push(intf);
        } else if needs {
            return;
        }
        acts.sort_unstable();
        if acts.iter().any(|&a| !d.executable_with(&w.state, a, &acts)) {
            return;
        }
        if let Some(s) = here {
            if !self.satisfied(s, &w.state, &acts) {
                return;
            }
        } else if let Some(s) = mapping.iter().position(|&m| m > i) {
            let prev_before = s == 0 || mapping[s - 1] < i;
            if prev_before && self.satisfied(s, &w.state, &acts) {
                return;
            }
        }
        let mut mental: Vec<MentalAction> = choice
            .iter()
            .enumerate()
            .filter_map(|(g, (p, _, _))| match p {
                Pick::Mental(k) => Some(MentalAction { agent: g, kind: k.clone() }),
                _ => None,
            })
            .collect();
        mental.sort();
        let occ = Occurrence::new(i, acts, mental);
        if occ.is_empty() {
            if mapping.iter().all(|&m| m <= i) {
                let mut w = w.clone();
                w.traj.push(w.state.clone());
                self.emit(mapping, &w);
            }
            return;
        }
        let Ok(succs) = successor_states(d, &w.state, &occ) else { return };
        for succ in succs {
            let mut w2 = w.clone();
            w2.traj.push(w.state.clone());
            w2.occs.push(occ.clone());
            w2.revealed = revealed.clone();
            if with_intf {
                w2.abduced.push(i);
            }
            for (g, (p, fut, dec)) in choice.iter().enumerate() {
                w2.declined[g] = dec.clone();
                if matches!(p, Pick::Mental(MentalKind::Select(_))) {
                    w2.pending[g] = None;
                }
                let mental = match p {
                    Pick::Mental(k) => Some((k, *fut)),
                    _ => None,
                };
                let top = match p {
                    Pick::Mental(MentalKind::Start(name)) => w.tops[g].iter().find(|t| &t.name == name),
                    _ => None,
                };
                w2.minds[g] = match &w.minds[g] {
                    M::Passive => M::Passive,
                    M::Simple(s) => M::Simple(simple_advance(s, &occ.actions)),
                    M::Goal(s) => M::Goal(goal_advance(s, &w.state, mental, top, &occ.actions)),
                };
            }
            w2.state = succ;
            self.step(mapping, w2, i + 1);
        }
    }
}

pub fn solver_keys(d: &DomainSpec, story: &Story, mode: TiMode, horizon: usize) -> BTreeSet<Key> {
    let cfg = Config {
        ti_mode: mode,
        max_steps: Some(horizon),
        ..Config::default()
    };
    let out = solve(d, story, &cfg, &Unlimited).unwrap();
    out.models
        .iter()
        .map(|m| {
            let ints = m.intentions.iter().map(|x| (x.step, x.agent, x.sequence.clone())).collect();
            (m.mapping.pairs().to_vec(), m.occurrences.clone(), m.trajectory.clone(), ints)
        })
        .collect()
}

fn render(d: &DomainSpec, k: &Key) -> String {
    let mut s = format!("map {:?} |", k.0);
    for o in &k.1 {
        s.push_str(&format!(" {}:", o.step));
        for &a in &o.actions {
            s.push_str(&format!("{} ", d.action_term(a)));
        }
        for m in &o.mental {
            s.push_str(&format!("{} ", m.to_term(d)));
        }
    }
    s.push_str(&format!("| intends {:?}", k.3.iter().map(|x| format!("{}@{}", x.2, x.0)).collect::<Vec<_>>()));
    s
}

pub fn diff(d: &DomainSpec, got: &BTreeSet<Key>, want: &BTreeSet<Key>) -> String {
    let mut s = String::new();
    for k in got.difference(want) {
        s.push_str(&format!("solver only: {}\n", render(d, k)));
    }
    for k in want.difference(got) {
        s.push_str(&format!("oracle only: {}\n", render(d, k)));
    }
    s
}

/// Compares solver and oracle on `cases` generated micro-stories. Returns
/// how many of them had models.
pub fn agreement(cases: u32) -> Result<usize, String> {
    let mut runner = TestRunner::new(PropConfig {
        cases,
        failure_persistence: None,
        ..PropConfig::default()
    });
    let nonempty = std::cell::Cell::new(0usize);
    runner
        .run(&micro_story(), |(text, horizon, new_only)| {
            let story = parse_story(&text).unwrap();
            let d = build_restaurant_domain(&story.entities).unwrap();
            let mode = if new_only { TiMode::NewOnly } else { TiMode::Mixed };
            let want = Oracle::new(&d, &story, mode, horizon).run();
            let got = solver_keys(&d, &story, mode, horizon);
            if !got.is_empty() {
                nonempty.set(nonempty.get() + 1);
            }
            prop_assert!(got == want, "story:\n{}horizon {} mode {}\n{}", text, horizon, mode, diff(&d, &got, &want));
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(nonempty.get())
}

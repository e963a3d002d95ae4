//! The restaurant knowledge base.
//!
//! Symbols are declared with argument sorts and then grounded over the
//! story's entities plus the fixed constants of every restaurant: locations
//! `entrance`, `t` (the table), `kitchen`, `counter`, the menu `m` and the
//! bill `b`. Axioms are plain data over interned ids so the transition
//! semantics in [`crate::transition`] stays domain-independent.
//!
//! Defined (non-inertial) fluents:
//!
//! | fluent | definition |
//! |---|---|
//! | `inside(C)` | `in(C,R)` for some restaurant |
//! | `order_transmitted(C)` | `informed(W,F,C)` for some waiter and food |
//! | `ready_to_eat(C)` | `seated(C)` and `order_transmitted(C)` |
//! | `done_with_payment(C)` | `paid(b)` |
//! | `satiated_and_out(C)` | `satiated(C)` and `left(C)` |
//! | `served_and_billed(C)` | `served(C)` and (`on(b,t)` or `paid(b)`) |
//! | `order_pending(W)` | `informed(W,F,C)` and not `relayed(W,C)` |
//! | `knows_order(W,F)` | `informed(W,F,C)` for some customer |
//! | `bill_wanted` | `bill_requested(C)` for some customer, or `paid(b)` |

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::logicform::{EntityDecl, Sort};
use crate::term::Term;
use crate::transition::State;

pub type FluentId = usize;
pub type ActionId = usize;
pub type AgentId = usize;

pub const LOCATIONS: [&str; 4] = ["entrance", "t", "kitchen", "counter"];
pub const TABLE: &str = "t";
pub const MENU: &str = "m";
pub const BILL: &str = "b";

/// Sorts usable in symbol signatures. `Person` and `Thing` are supersorts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArgSort {
    Customer,
    Waiter,
    Cook,
    People,
    Person,
    Restaurant,
    Food,
    Bill,
    Menu,
    Thing,
    Location,
    /// Arguments of mental actions (goals, activities).
    Any,
}

impl ArgSort {
    pub fn contains(self, leaf: ArgSort) -> bool {
        self == leaf
            || self == ArgSort::Any
            || (self == ArgSort::Person
                && matches!(
                    leaf,
                    ArgSort::Customer | ArgSort::Waiter | ArgSort::Cook | ArgSort::People
                ))
            || (self == ArgSort::Thing
                && matches!(leaf, ArgSort::Food | ArgSort::Bill | ArgSort::Menu))
    }

    fn of_sort(sort: Sort) -> ArgSort {
        match sort {
            Sort::Bill => ArgSort::Bill,
            Sort::Cook => ArgSort::Cook,
            Sort::Customer => ArgSort::Customer,
            Sort::Food => ArgSort::Food,
            Sort::People => ArgSort::People,
            Sort::Restaurant => ArgSort::Restaurant,
            Sort::Waiter | Sort::Waitress => ArgSort::Waiter,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FluentSymbol {
    pub name: &'static str,
    pub arg_sorts: Vec<ArgSort>,
    pub inertial: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionKind {
    Physical,
    Mental,
    Exogenous,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionSymbol {
    pub name: &'static str,
    pub arg_sorts: Vec<ArgSort>,
    pub kind: ActionKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub fluent: FluentId,
    pub value: bool,
}

impl Literal {
    pub fn pos(fluent: FluentId) -> Self {
        Literal {
            fluent,
            value: true,
        }
    }

    pub fn neg(fluent: FluentId) -> Self {
        Literal {
            fluent,
            value: false,
        }
    }

    pub fn negate(self) -> Self {
        Literal {
            fluent: self.fluent,
            value: !self.value,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cond {
    Holds(Literal),
    Occurs(ActionId, bool),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxiomKind {
    DynamicEffect,
    StaticEffect,
    Executability,
    NondetEffect,
    Default,
}

/// One branch of a non-deterministic effect; available only when `guard`
/// holds in the state the action is executed in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alternative {
    pub guard: Vec<Literal>,
    pub effects: Vec<Literal>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Head {
    Lit(Literal),
    /// `impossible(a)`: the action cannot occur when the body holds.
    Impossible(ActionId),
    /// Exactly one alternative whose guard holds is chosen.
    Choice(Vec<Alternative>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Axiom {
    pub kind: AxiomKind,
    pub head: Head,
    pub body: Vec<Cond>,
}

impl Axiom {
    /// The action whose occurrence triggers a dynamic or non-deterministic
    /// effect.
    pub fn trigger(&self) -> Option<ActionId> {
        self.body.iter().find_map(|c| match *c {
            Cond::Occurs(a, true) => Some(a),
            _ => None,
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomainError {
    #[error("the story declares no customer")]
    NoCustomer,
    #[error("more than one waiter declared ({0}); one waiter per story is supported")]
    MultipleWaiters(String),
    #[error("cyclic or negative dependency among defined fluents at `{0}`")]
    UnstratifiedStatic(String),
}

/// The grounded restaurant knowledge base for one story.
#[derive(Clone, Debug)]
pub struct DomainSpec {
    pub fluent_symbols: Vec<FluentSymbol>,
    pub action_symbols: Vec<ActionSymbol>,
    pub axioms: Vec<Axiom>,
    pub customers: Vec<String>,
    pub waiters: Vec<String>,
    pub cooks: Vec<String>,
    pub people: Vec<String>,
    pub restaurants: Vec<String>,
    pub foods: Vec<String>,
    pub bills: Vec<String>,
    constants: BTreeMap<String, ArgSort>,
    fluents: Vec<Term>,
    fluent_index: BTreeMap<Term, FluentId>,
    inertial: Vec<bool>,
    actions: Vec<Term>,
    action_index: BTreeMap<Term, ActionId>,
    action_agent: Vec<Option<AgentId>>,
    agents: Vec<String>,
    interference: ActionId,
    by_trigger: Vec<Vec<usize>>,
    exec_by_action: Vec<Vec<usize>>,
    statics: Vec<usize>,
    defaults: Vec<Literal>,
}

impl DomainSpec {
    pub fn fluent_count(&self) -> usize {
        self.fluents.len()
    }

    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    pub fn fluent_term(&self, f: FluentId) -> &Term {
        &self.fluents[f]
    }

    pub fn action_term(&self, a: ActionId) -> &Term {
        &self.actions[a]
    }

    pub fn fluent_id(&self, t: &Term) -> Option<FluentId> {
        self.fluent_index.get(t).copied()
    }

    pub fn action_id(&self, t: &Term) -> Option<ActionId> {
        self.action_index.get(t).copied()
    }

    pub fn is_inertial(&self, f: FluentId) -> bool {
        self.inertial[f]
    }

    pub fn interference(&self) -> ActionId {
        self.interference
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn agent_id(&self, name: &str) -> Option<AgentId> {
        self.agents.iter().position(|a| a == name)
    }

    pub fn agent_of(&self, a: ActionId) -> Option<AgentId> {
        self.action_agent[a]
    }

    /// Dynamic and non-deterministic axioms triggered by `a`.
    pub fn effect_axioms(&self, a: ActionId) -> impl Iterator<Item = &Axiom> {
        self.by_trigger[a].iter().map(|&i| &self.axioms[i])
    }

    pub fn executability_axioms(&self, a: ActionId) -> impl Iterator<Item = &Axiom> {
        self.exec_by_action[a].iter().map(|&i| &self.axioms[i])
    }

    /// Static axioms in dependency order.
    pub fn static_axioms(&self) -> impl Iterator<Item = &Axiom> {
        self.statics.iter().map(|&i| &self.axioms[i])
    }

    /// Actions with a non-deterministic effect under concurrent interference.
    pub fn interferable(&self, a: ActionId) -> bool {
        self.effect_axioms(a)
            .any(|ax| ax.kind == AxiomKind::NondetEffect)
    }

    pub fn constant_sort(&self, name: &str) -> Option<ArgSort> {
        self.constants.get(name).copied()
    }

    pub fn fluent_signatures(&self, name: &str) -> Vec<&[ArgSort]> {
        self.fluent_symbols
            .iter()
            .filter(|s| s.name == name)
            .map(|s| s.arg_sorts.as_slice())
            .collect()
    }

    pub fn action_signatures(&self, name: &str) -> Vec<&[ArgSort]> {
        self.action_symbols
            .iter()
            .filter(|s| s.name == name)
            .map(|s| s.arg_sorts.as_slice())
            .collect()
    }

    pub fn arg_fits(&self, arg: &Term, sort: ArgSort) -> bool {
        if sort == ArgSort::Any {
            return true;
        }
        arg.args.is_empty()
            && self
                .constant_sort(&arg.functor)
                .is_some_and(|leaf| sort.contains(leaf))
    }

    pub fn well_sorted(&self, term: &Term, sig: &[ArgSort]) -> bool {
        term.arity() == sig.len()
            && term.args.iter().zip(sig).all(|(a, &s)| self.arg_fits(a, s))
    }

    /// `other_food(F1,F)`: both are foods and `F1 != F`.
    pub fn other_food(&self, f1: &str, f: &str) -> bool {
        f1 != f && self.foods.iter().any(|x| x == f1) && self.foods.iter().any(|x| x == f)
    }

    /// Items that may be confused with `thing`: other foods for a food, other
    /// bills for a bill.
    pub fn same_kind(&self, thing: &str) -> Vec<&str> {
        let pool = if self.foods.iter().any(|f| f == thing) {
            &self.foods
        } else if self.bills.iter().any(|b| b == thing) {
            &self.bills
        } else {
            return Vec::new();
        };
        pool.iter()
            .map(String::as_str)
            .filter(|x| *x != thing)
            .collect()
    }

    /// Inertial fluents no action ever changes (e.g. `open`, `available`).
    pub fn rigid_fluents(&self) -> Vec<bool> {
        let mut rigid = self.inertial.clone();
        for ax in &self.axioms {
            match &ax.head {
                Head::Lit(l) if ax.kind == AxiomKind::DynamicEffect => rigid[l.fluent] = false,
                Head::Choice(alts) => {
                    for e in alts.iter().flat_map(|a| &a.effects) {
                        rigid[e.fluent] = false;
                    }
                }
                _ => {}
            }
        }
        rigid
    }

    /// Default literals for reasoning step 0. Every inertial fluent without a
    /// positive default is false.
    pub fn defaults(&self) -> &[Literal] {
        &self.defaults
    }

    pub fn fluent(&self, name: &str, args: &[&str]) -> Option<FluentId> {
        self.fluent_id(&Term::app(name, args.iter().copied()))
    }

    pub fn action(&self, name: &str, args: &[&str]) -> Option<ActionId> {
        self.action_id(&Term::app(name, args.iter().copied()))
    }

    /// Whether `a` may occur in `state` alongside the actions in `occ`.
    pub fn executable_with(&self, state: &State, a: ActionId, occ: &[ActionId]) -> bool {
        !self
            .executability_axioms(a)
            .any(|ax| body_holds(&ax.body, state, occ))
    }

    pub fn display_literal(&self, l: Literal) -> LiteralDisplay<'_> {
        LiteralDisplay { domain: self, lit: l }
    }
}

pub struct LiteralDisplay<'a> {
    domain: &'a DomainSpec,
    lit: Literal,
}

impl fmt::Display for LiteralDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.lit.value {
            f.write_str("-")?;
        }
        write!(f, "{}", self.domain.fluent_term(self.lit.fluent))
    }
}

pub fn body_holds(body: &[Cond], state: &State, occ: &[ActionId]) -> bool {
    body.iter().all(|c| match *c {
        Cond::Holds(l) => state.get(l.fluent) == l.value,
        Cond::Occurs(a, v) => occ.contains(&a) == v,
    })
}

/// False iff some executability axiom of `action` fires in `state`, with no
/// other action occurring.
pub fn executable(domain: &DomainSpec, state: &State, action: ActionId) -> bool {
    domain.executable_with(state, action, &[action])
}

/// The step-0 defaults as (fluent, value) pairs for every inertial fluent.
pub fn initial_defaults(domain: &DomainSpec) -> Vec<Literal> {
    let mut values: Vec<Option<bool>> = domain
        .inertial
        .iter()
        .map(|&i| if i { Some(false) } else { None })
        .collect();
    for l in &domain.defaults {
        values[l.fluent] = Some(l.value);
    }
    values
        .into_iter()
        .enumerate()
        .filter_map(|(f, v)| v.map(|value| Literal { fluent: f, value }))
        .collect()
}

fn fluent_symbols() -> Vec<FluentSymbol> {
    use ArgSort::*;
    let inertial = |name, arg_sorts: &[ArgSort]| FluentSymbol {
        name,
        arg_sorts: arg_sorts.to_vec(),
        inertial: true,
    };
    let defined = |name, arg_sorts: &[ArgSort]| FluentSymbol {
        name,
        arg_sorts: arg_sorts.to_vec(),
        inertial: false,
    };
    vec![
        inertial("open", &[Restaurant]),
        inertial("available", &[Food]),
        inertial("in", &[Customer, Restaurant]),
        inertial("at", &[Person, Location]),
        inertial("on", &[Thing, Location]),
        inertial("holding", &[Person, Thing]),
        inertial("greeted", &[Customer]),
        inertial("seated", &[Customer]),
        inertial("informed", &[Waiter, Food, Customer]),
        inertial("relayed", &[Waiter, Customer]),
        inertial("requested", &[Cook, Food, Waiter]),
        inertial("prepared", &[Food]),
        inertial("satiated", &[Customer]),
        inertial("left", &[Customer]),
        inertial("served", &[Customer]),
        inertial("bill_requested", &[Customer]),
        inertial("bill_generated", &[Bill, Customer]),
        inertial("paid", &[Bill]),
        defined("inside", &[Customer]),
        defined("order_transmitted", &[Customer]),
        defined("ready_to_eat", &[Customer]),
        defined("done_with_payment", &[Customer]),
        defined("satiated_and_out", &[Customer]),
        defined("served_and_billed", &[Customer]),
        defined("order_pending", &[Waiter]),
        defined("knows_order", &[Waiter, Food]),
        defined("bill_wanted", &[]),
    ]
}

fn action_symbols() -> Vec<ActionSymbol> {
    use ArgSort::*;
    let phys = |name, arg_sorts: &[ArgSort]| ActionSymbol {
        name,
        arg_sorts: arg_sorts.to_vec(),
        kind: ActionKind::Physical,
    };
    let mental = |name| ActionSymbol {
        name,
        arg_sorts: vec![Person, Any],
        kind: ActionKind::Mental,
    };
    vec![
        phys("enter", &[Customer, Restaurant]),
        phys("greet", &[Waiter, Customer]),
        phys("lead_to", &[Waiter, Customer, Location]),
        phys("sit", &[Customer]),
        phys("pick_up", &[Person, Thing, Location]),
        phys("put", &[Person, Thing, Location]),
        phys("order", &[Customer, Food, Waiter]),
        phys("move", &[Person, Location, Location]),
        phys("request", &[Waiter, Food, Cook]),
        phys("request", &[Customer, Bill, Waiter]),
        phys("prepare", &[Cook, Food, Waiter]),
        phys("eat", &[Customer, Food]),
        phys("pay", &[Person, Bill]),
        phys("stand_up", &[Customer]),
        phys("leave", &[Customer]),
        ActionSymbol {
            name: "interference",
            arg_sorts: Vec::new(),
            kind: ActionKind::Exogenous,
        },
        mental("select"),
        mental("abandon"),
        mental("start"),
        mental("stop"),
        mental("replan"),
    ]
}

struct Builder {
    d: DomainSpec,
}

impl Builder {
    fn members(&self, sort: ArgSort) -> Vec<String> {
        self.d
            .constants
            .iter()
            .filter(|(_, &leaf)| sort.contains(leaf))
            .map(|(n, _)| n.clone())
            .collect()
    }

    fn ground(&self, sig: &[ArgSort]) -> Vec<Vec<String>> {
        let mut out = vec![Vec::new()];
        for &s in sig {
            let pool = self.members(s);
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    pool.iter().map(move |c| {
                        let mut p = prefix.clone();
                        p.push(c.clone());
                        p
                    })
                })
                .collect();
        }
        out
    }

    fn f(&self, name: &str, args: &[&str]) -> FluentId {
        self.d
            .fluent(name, args)
            .unwrap_or_else(|| panic!("ungrounded fluent {name}{args:?}"))
    }

    fn pos(&self, name: &str, args: &[&str]) -> Literal {
        Literal::pos(self.f(name, args))
    }

    fn neg(&self, name: &str, args: &[&str]) -> Literal {
        Literal::neg(self.f(name, args))
    }

    fn push(&mut self, kind: AxiomKind, head: Head, body: Vec<Cond>) {
        self.d.axioms.push(Axiom { kind, head, body });
    }

    fn effect(&mut self, a: ActionId, head: Literal, mut body: Vec<Cond>) {
        body.insert(0, Cond::Occurs(a, true));
        self.push(AxiomKind::DynamicEffect, Head::Lit(head), body);
    }

    /// Deterministic effect that interference suppresses.
    fn plain_effect(&mut self, a: ActionId, head: Literal) {
        let i = self.d.interference;
        self.effect(a, head, vec![Cond::Occurs(i, false)]);
    }

    fn choice(&mut self, a: ActionId, alternatives: Vec<Alternative>) {
        if alternatives.is_empty() {
            return;
        }
        let i = self.d.interference;
        self.push(
            AxiomKind::NondetEffect,
            Head::Choice(alternatives),
            vec![Cond::Occurs(a, true), Cond::Occurs(i, true)],
        );
    }

    /// `impossible(a)` when all `body` literals hold.
    fn impossible(&mut self, a: ActionId, body: &[Literal]) {
        let body = body.iter().map(|&l| Cond::Holds(l)).collect();
        self.push(AxiomKind::Executability, Head::Impossible(a), body);
    }

    fn derive(&mut self, head: Literal, body: &[Literal]) {
        let body = body.iter().map(|&l| Cond::Holds(l)).collect();
        self.push(AxiomKind::StaticEffect, Head::Lit(head), body);
    }

    fn default(&mut self, lit: Literal) {
        self.push(AxiomKind::Default, Head::Lit(lit), Vec::new());
        self.d.defaults.push(lit);
    }

    /// Sets `at(p,l)` and clears every other location of `p`.
    fn relocate(&mut self, a: ActionId, p: &str, l: &str) {
        let here = self.pos("at", &[p, l]);
        self.effect(a, here, Vec::new());
        for other in LOCATIONS.iter().filter(|&&x| x != l) {
            let gone = self.neg("at", &[p, other]);
            self.effect(a, gone, Vec::new());
        }
    }
}

/// Grounds the restaurant KB over the story's entities.
pub fn build_restaurant_domain(entities: &[EntityDecl]) -> Result<DomainSpec, DomainError> {
    let names = |pred: fn(Sort) -> bool| -> Vec<String> {
        entities
            .iter()
            .filter(|e| pred(e.sort))
            .map(|e| e.name.clone())
            .collect()
    };
    let customers = names(|s| s == Sort::Customer);
    let waiters = names(Sort::is_waiter);
    if customers.is_empty() {
        return Err(DomainError::NoCustomer);
    }
    if waiters.len() > 1 {
        return Err(DomainError::MultipleWaiters(waiters.join(", ")));
    }
    let mut constants = BTreeMap::new();
    for l in LOCATIONS {
        constants.insert(l.to_string(), ArgSort::Location);
    }
    constants.insert(MENU.to_string(), ArgSort::Menu);
    constants.insert(BILL.to_string(), ArgSort::Bill);
    for e in entities {
        constants.insert(e.name.clone(), ArgSort::of_sort(e.sort));
    }
    let mut bills = vec![BILL.to_string()];
    bills.extend(names(|s| s == Sort::Bill).into_iter().filter(|b| b != BILL));

    let mut b = Builder {
        d: DomainSpec {
            fluent_symbols: fluent_symbols(),
            action_symbols: action_symbols(),
            axioms: Vec::new(),
            customers,
            waiters,
            cooks: names(|s| s == Sort::Cook),
            people: names(|s| s == Sort::People),
            restaurants: names(|s| s == Sort::Restaurant),
            foods: names(|s| s == Sort::Food),
            bills,
            constants,
            fluents: Vec::new(),
            fluent_index: BTreeMap::new(),
            inertial: Vec::new(),
            actions: Vec::new(),
            action_index: BTreeMap::new(),
            action_agent: Vec::new(),
            agents: Vec::new(),
            interference: 0,
            by_trigger: Vec::new(),
            exec_by_action: Vec::new(),
            statics: Vec::new(),
            defaults: Vec::new(),
        },
    };
    b.d.agents = b.members(ArgSort::Person);

    // Inertial fluents first, so their ids form a prefix.
    for pass_inertial in [true, false] {
        for sym in b.d.fluent_symbols.clone() {
            if sym.inertial != pass_inertial {
                continue;
            }
            for args in b.ground(&sym.arg_sorts) {
                let t = Term::app(sym.name, args.iter());
                b.d.fluent_index.insert(t.clone(), b.d.fluents.len());
                b.d.fluents.push(t);
                b.d.inertial.push(sym.inertial);
            }
        }
    }
    for sym in b.d.action_symbols.clone() {
        if sym.kind == ActionKind::Mental {
            continue;
        }
        for args in b.ground(&sym.arg_sorts) {
            if sym.name == "move" && args[1] == args[2] {
                continue;
            }
            let t = Term::app(sym.name, args.iter());
            let agent = args.first().and_then(|a| b.d.agent_id(a));
            b.d.action_index.insert(t.clone(), b.d.actions.len());
            b.d.actions.push(t);
            b.d.action_agent.push(agent);
        }
    }
    b.d.interference = b.d.action("interference", &[]).expect("interference grounded");

    author_axioms(&mut b);
    index(&mut b.d)?;
    Ok(b.d)
}

fn author_axioms(b: &mut Builder) {
    let d = b.d.clone();
    let customers = d.customers.clone();
    let waiters = d.waiters.clone();
    let foods = d.foods.clone();
    let restaurants = d.restaurants.clone();
    let intf = d.interference;

    // Defaults for step 0.
    for r in &restaurants {
        let l = b.pos("open", &[r]);
        b.default(l);
    }
    for f in &foods {
        let l = b.pos("available", &[f]);
        b.default(l);
    }
    let l = b.pos("on", &[MENU, TABLE]);
    b.default(l);
    for p in customers.iter().chain(&waiters) {
        let l = b.pos("at", &[p, "entrance"]);
        b.default(l);
    }
    for ck in &d.cooks {
        let l = b.pos("at", &[ck, "kitchen"]);
        b.default(l);
    }

    // Defined fluents.
    for c in &customers {
        for r in &restaurants {
            let (h, x) = (b.pos("inside", &[c]), b.pos("in", &[c, r]));
            b.derive(h, &[x]);
        }
        for w in &waiters {
            for f in &foods {
                let (h, x) = (b.pos("order_transmitted", &[c]), b.pos("informed", &[w, f, c]));
                b.derive(h, &[x]);
                let (h, y) = (b.pos("knows_order", &[w, f]), b.neg("relayed", &[w, c]));
                b.derive(h, &[x]);
                let h = b.pos("order_pending", &[w]);
                b.derive(h, &[x, y]);
            }
        }
        let h = b.pos("ready_to_eat", &[c]);
        let body = [b.pos("seated", &[c]), b.pos("order_transmitted", &[c])];
        b.derive(h, &body);
        let h = b.pos("done_with_payment", &[c]);
        let body = [b.pos("paid", &[BILL])];
        b.derive(h, &body);
        let h = b.pos("satiated_and_out", &[c]);
        let body = [b.pos("satiated", &[c]), b.pos("left", &[c])];
        b.derive(h, &body);
        let h = b.pos("served_and_billed", &[c]);
        let served = b.pos("served", &[c]);
        let body = [served, b.pos("on", &[BILL, TABLE])];
        b.derive(h, &body);
        let body = [served, b.pos("paid", &[BILL])];
        b.derive(h, &body);
        let h = b.pos("bill_wanted", &[]);
        let body = [b.pos("bill_requested", &[c])];
        b.derive(h, &body);
    }
    let h = b.pos("bill_wanted", &[]);
    let body = [b.pos("paid", &[BILL])];
    b.derive(h, &body);

    for a in 0..d.action_count() {
        let t = d.action_term(a).clone();
        let arg = |i: usize| t.arg_name(i).unwrap_or("");
        let is = |name: &str, sort: ArgSort| {
            d.constant_sort(name).is_some_and(|leaf| sort.contains(leaf))
        };
        match (t.functor.as_str(), t.arity()) {
            ("enter", 2) => {
                let (c, r) = (arg(0), arg(1));
                let nopen = b.neg("open", &[r]);
                let inside = b.pos("in", &[c, r]);
                b.impossible(a, &[nopen]);
                b.impossible(a, &[inside]);
                b.effect(a, inside, Vec::new());
            }
            ("greet", 2) => {
                let c = arg(1);
                let body = [b.neg("inside", &[c])];
                b.impossible(a, &body);
                let body = [b.neg("at", &[c, "entrance"])];
                b.impossible(a, &body);
                let g = b.pos("greeted", &[c]);
                b.impossible(a, &[g]);
                b.effect(a, g, Vec::new());
            }
            ("lead_to", 3) => {
                let (w, c, l) = (arg(0), arg(1), arg(2));
                if l == "entrance" {
                    b.impossible(a, &[]);
                }
                let body = [b.neg("greeted", &[c])];
                b.impossible(a, &body);
                let body = [b.neg("at", &[c, "entrance"])];
                b.impossible(a, &body);
                b.relocate(a, c, l);
                b.relocate(a, w, l);
            }
            ("sit", 1) => {
                let c = arg(0);
                let body = [b.neg("at", &[c, TABLE])];
                b.impossible(a, &body);
                let s = b.pos("seated", &[c]);
                b.impossible(a, &[s]);
                b.effect(a, s, Vec::new());
            }
            ("pick_up", 3) => {
                let (p, x, l) = (arg(0), arg(1), arg(2));
                let body = [b.neg("at", &[p, l])];
                b.impossible(a, &body);
                let off = b.neg("on", &[x, l]);
                b.push(
                    AxiomKind::Executability,
                    Head::Impossible(a),
                    vec![Cond::Holds(off), Cond::Occurs(intf, false)],
                );
                // With interference the agent may take `x` while a different
                // item of the same kind is what actually lies there.
                let others = d.same_kind(x);
                let mut body = vec![Cond::Holds(off), Cond::Occurs(intf, true)];
                body.extend(others.iter().map(|y| Cond::Holds(b.neg("on", &[y, l]))));
                b.push(AxiomKind::Executability, Head::Impossible(a), body);
                let h = b.pos("holding", &[p, x]);
                b.effect(a, h, Vec::new());
                b.plain_effect(a, off);
                let alts = others
                    .iter()
                    .map(|y| Alternative {
                        guard: vec![b.pos("on", &[y, l])],
                        effects: vec![b.neg("on", &[y, l])],
                    })
                    .collect();
                b.choice(a, alts);
            }
            ("put", 3) => {
                let (p, x, l) = (arg(0), arg(1), arg(2));
                let h = b.neg("holding", &[p, x]);
                b.impossible(a, &[h]);
                let body = [b.neg("at", &[p, l])];
                b.impossible(a, &body);
                let on = b.pos("on", &[x, l]);
                b.effect(a, on, Vec::new());
                let drop = b.neg("holding", &[p, x]);
                b.effect(a, drop, Vec::new());
                if l == TABLE && is(p, ArgSort::Waiter) && is(x, ArgSort::Food) {
                    for c in &customers {
                        let served = b.pos("served", &[c]);
                        let cond = Cond::Holds(b.pos("informed", &[p, x, c]));
                        b.effect(a, served, vec![cond]);
                    }
                }
            }
            ("order", 3) => {
                let (c, f, w) = (arg(0), arg(1), arg(2));
                let body = [b.neg("seated", &[c])];
                b.impossible(a, &body);
                let body = [b.pos("order_transmitted", &[c])];
                b.impossible(a, &body);
                let h = b.pos("informed", &[w, f, c]);
                b.plain_effect(a, h);
                let alts = foods
                    .iter()
                    .filter(|f1| d.other_food(f1, f))
                    .map(|f1| Alternative {
                        guard: Vec::new(),
                        effects: vec![b.pos("informed", &[w, f1, c])],
                    })
                    .collect();
                b.choice(a, alts);
            }
            ("move", 3) => {
                let (p, from, to) = (arg(0), arg(1), arg(2));
                let body = [b.neg("at", &[p, from])];
                b.impossible(a, &body);
                if is(p, ArgSort::Customer) {
                    let body = [b.pos("seated", &[p])];
                    b.impossible(a, &body);
                }
                if is(p, ArgSort::Waiter) && from == TABLE && to == "kitchen" {
                    let body = [b.neg("order_pending", &[p])];
                    b.impossible(a, &body);
                }
                if is(p, ArgSort::Waiter) && from == TABLE && to == "counter" {
                    let body = [b.neg("bill_wanted", &[])];
                    b.impossible(a, &body);
                }
                let h = b.pos("at", &[p, to]);
                b.effect(a, h, Vec::new());
                let h = b.neg("at", &[p, from]);
                b.effect(a, h, Vec::new());
            }
            ("request", 3) if is(arg(0), ArgSort::Waiter) => {
                let (w, f, ck) = (arg(0), arg(1), arg(2));
                let body = [b.neg("at", &[w, "kitchen"])];
                b.impossible(a, &body);
                let body = [b.neg("knows_order", &[w, f])];
                b.impossible(a, &body);
                let h = b.pos("requested", &[ck, f, w]);
                b.plain_effect(a, h);
                let alts = foods
                    .iter()
                    .filter(|f1| d.other_food(f1, f))
                    .map(|f1| Alternative {
                        guard: Vec::new(),
                        effects: vec![b.pos("requested", &[ck, f1, w])],
                    })
                    .collect();
                b.choice(a, alts);
                for c in &customers {
                    for f1 in &foods {
                        let h = b.pos("relayed", &[w, c]);
                        let cond = Cond::Holds(b.pos("informed", &[w, f1, c]));
                        b.effect(a, h, vec![cond]);
                    }
                }
            }
            ("request", 3) => {
                let c = arg(0);
                let h = b.pos("bill_requested", &[c]);
                b.effect(a, h, Vec::new());
            }
            ("prepare", 3) => {
                let (ck, f, w) = (arg(0), arg(1), arg(2));
                let body = [b.neg("requested", &[ck, f, w])];
                b.impossible(a, &body);
                let body = [b.neg("available", &[f])];
                b.impossible(a, &body);
                let h = b.pos("on", &[f, "kitchen"]);
                b.plain_effect(a, h);
                let h = b.pos("prepared", &[f]);
                b.plain_effect(a, h);
                let alts = foods
                    .iter()
                    .filter(|f1| d.other_food(f1, f))
                    .map(|f1| Alternative {
                        guard: vec![b.pos("available", &[f1])],
                        effects: vec![b.pos("on", &[f1, "kitchen"]), b.pos("prepared", &[f1])],
                    })
                    .collect();
                b.choice(a, alts);
            }
            ("eat", 2) => {
                let (c, f) = (arg(0), arg(1));
                let body = [b.neg("on", &[f, TABLE])];
                b.impossible(a, &body);
                let body = [b.neg("at", &[c, TABLE])];
                b.impossible(a, &body);
                let body = [b.neg("seated", &[c])];
                b.impossible(a, &body);
                let h = b.pos("satiated", &[c]);
                b.effect(a, h, Vec::new());
                let h = b.neg("on", &[f, TABLE]);
                b.effect(a, h, Vec::new());
                // The first meal of the table generates the shared bill.
                let fresh: Vec<Cond> = customers
                    .iter()
                    .map(|c1| Cond::Holds(b.neg("bill_generated", &[BILL, c1])))
                    .collect();
                let h = b.pos("on", &[BILL, "counter"]);
                b.effect(a, h, fresh);
                let h = b.pos("bill_generated", &[BILL, c]);
                b.effect(a, h, Vec::new());
            }
            ("pay", 2) => {
                let (p, bill) = (arg(0), arg(1));
                let paid = b.pos("paid", &[bill]);
                b.impossible(a, &[paid]);
                if is(p, ArgSort::Customer) {
                    let body = [b.pos("bill_requested", &[p]), b.neg("on", &[bill, TABLE])];
                    b.impossible(a, &body);
                }
                b.effect(a, paid, Vec::new());
            }
            ("stand_up", 1) => {
                let c = arg(0);
                let body = [b.neg("seated", &[c])];
                b.impossible(a, &body);
                let h = b.neg("seated", &[c]);
                b.effect(a, h, Vec::new());
            }
            ("leave", 1) => {
                let c = arg(0);
                let body = [b.neg("at", &[c, "entrance"])];
                b.impossible(a, &body);
                let body = [b.neg("inside", &[c])];
                b.impossible(a, &body);
                for r in &restaurants {
                    let h = b.neg("in", &[c, r]);
                    b.effect(a, h, Vec::new());
                }
                let h = b.pos("left", &[c]);
                b.effect(a, h, Vec::new());
            }
            _ => {}
        }
    }
}

/// Builds the per-action indexes and orders static axioms so that a single
/// pass computes the closure.
fn index(d: &mut DomainSpec) -> Result<(), DomainError> {
    d.by_trigger = vec![Vec::new(); d.actions.len()];
    d.exec_by_action = vec![Vec::new(); d.actions.len()];
    let mut statics = Vec::new();
    for (i, ax) in d.axioms.iter().enumerate() {
        match (&ax.kind, &ax.head) {
            (AxiomKind::DynamicEffect | AxiomKind::NondetEffect, _) => {
                let a = ax.trigger().expect("effect axiom without trigger");
                d.by_trigger[a].push(i);
            }
            (AxiomKind::Executability, Head::Impossible(a)) => d.exec_by_action[*a].push(i),
            (AxiomKind::StaticEffect, Head::Lit(h)) => {
                if d.inertial[h.fluent] || !h.value {
                    return Err(DomainError::UnstratifiedStatic(d.fluents[h.fluent].to_string()));
                }
                statics.push(i);
            }
            _ => {}
        }
    }
    // Topological order over defined heads; negative dependencies on defined
    // fluents and cycles are rejected.
    let mut done = vec![false; d.fluents.len()];
    for (f, &inertial) in d.inertial.iter().enumerate() {
        done[f] = inertial;
    }
    let mut ordered = Vec::with_capacity(statics.len());
    let mut pending = statics;
    while !pending.is_empty() {
        let heads_pending: Vec<FluentId> = pending
            .iter()
            .filter_map(|&i| match d.axioms[i].head {
                Head::Lit(l) => Some(l.fluent),
                _ => None,
            })
            .collect();
        let (ready, rest): (Vec<usize>, Vec<usize>) = pending.iter().partition(|&&i| {
            d.axioms[i].body.iter().all(|c| match c {
                Cond::Holds(l) => d.inertial[l.fluent] || !heads_pending.contains(&l.fluent),
                Cond::Occurs(..) => false,
            })
        });
        if ready.is_empty() {
            let i = rest[0];
            let name = match d.axioms[i].head {
                Head::Lit(l) => d.fluents[l.fluent].to_string(),
                _ => String::new(),
            };
            return Err(DomainError::UnstratifiedStatic(name));
        }
        for &i in &ready {
            for c in &d.axioms[i].body {
                if let Cond::Holds(l) = c {
                    if !d.inertial[l.fluent] && !l.value {
                        return Err(DomainError::UnstratifiedStatic(d.fluents[l.fluent].to_string()));
                    }
                }
            }
            if let Head::Lit(l) = d.axioms[i].head {
                done[l.fluent] = true;
            }
        }
        ordered.extend(ready);
        pending = rest;
    }
    d.statics = ordered;
    Ok(())
}

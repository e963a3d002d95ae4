//! The restaurant plan library: customer activities in three structures and
//! the parameterized waiter and cook sequences.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::domain_kb::{ActionId, DomainSpec, FluentId, BILL, MENU, TABLE};
use crate::intentions::{ActivitySpec, Component, SeqComponent, SequenceSpec};
use crate::term::Term;

/// How the customer's twelve actions are grouped into activities.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum CustomerStructure {
    /// One activity, twelve actions.
    Flat,
    /// Paying is a sub-activity.
    S1,
    /// Getting ready to eat, ordering and paying are sub-activities.
    #[default]
    S2,
}

impl fmt::Display for CustomerStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CustomerStructure::Flat => "s-flat",
            CustomerStructure::S1 => "s1",
            CustomerStructure::S2 => "s2",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ActivityError {
    #[error("unknown customer structure `{0}` (expected s-flat, s1 or s2)")]
    UnknownStructure(String),
    #[error("`{0}` is not a ground action or fluent of this domain")]
    Ungrounded(Term),
}

impl FromStr for CustomerStructure {
    type Err = ActivityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "s-flat" | "sflat" | "flat" => Ok(CustomerStructure::Flat),
            "s1" | "s-1" => Ok(CustomerStructure::S1),
            "s2" | "s-2" => Ok(CustomerStructure::S2),
            _ => Err(ActivityError::UnknownStructure(s.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WaiterParams {
    pub waiter: String,
    pub customer: String,
    /// The food the waiter understood was ordered.
    pub understood: String,
    /// The food the waiter serves.
    pub served: String,
    /// The bill the waiter brings.
    pub bill: String,
}

impl WaiterParams {
    pub fn name(&self) -> Term {
        Term::app(
            "w_seq",
            [&self.waiter, &self.customer, &self.understood, &self.served, &self.bill],
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CookParams {
    pub cook: String,
    pub food: String,
    pub waiter: String,
}

impl CookParams {
    pub fn name(&self) -> Term {
        Term::app("ck_seq", [&self.cook, &self.food, &self.waiter])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StaffParams {
    Waiter(WaiterParams),
    Cook(CookParams),
}

fn action(d: &DomainSpec, name: &str, args: &[&str]) -> Result<ActionId, ActivityError> {
    d.action(name, args)
        .ok_or_else(|| ActivityError::Ungrounded(Term::app(name, args.iter().copied())))
}

fn fluent(d: &DomainSpec, name: &str, args: &[&str]) -> Result<FluentId, ActivityError> {
    d.fluent(name, args)
        .ok_or_else(|| ActivityError::Ungrounded(Term::app(name, args.iter().copied())))
}

/// The customer's twelve physical actions in order.
pub fn customer_plan(
    d: &DomainSpec,
    c: &str,
    r: &str,
    w: &str,
    f: &str,
) -> Result<Vec<ActionId>, ActivityError> {
    let steps: [(&str, &[&str]); 12] = [
        ("enter", &[c, r]),
        ("lead_to", &[w, c, TABLE]),
        ("sit", &[c]),
        ("pick_up", &[c, MENU, TABLE]),
        ("put", &[c, MENU, TABLE]),
        ("order", &[c, f, w]),
        ("eat", &[c, f]),
        ("request", &[c, BILL, w]),
        ("pay", &[c, BILL]),
        ("stand_up", &[c]),
        ("move", &[c, TABLE, "entrance"]),
        ("leave", &[c]),
    ];
    steps.iter().map(|(n, args)| action(d, n, args)).collect()
}

/// `c_act(C,R,W,F)` with goal `satiated_and_out(C)`.
pub fn customer_activity(
    d: &DomainSpec,
    c: &str,
    r: &str,
    w: &str,
    f: &str,
    structure: CustomerStructure,
) -> Result<ActivitySpec, ActivityError> {
    let plan = customer_plan(d, c, r, w, f)?;
    let acts = |range: core::ops::Range<usize>| -> Vec<Component> {
        plan[range].iter().map(|&a| Component::Action(a)).collect()
    };
    let pay = ActivitySpec {
        name: Term::app("c_subact_p", [c, w]),
        goal: fluent(d, "done_with_payment", &[c])?,
        components: acts(7..9),
    };
    let components = match structure {
        CustomerStructure::Flat => acts(0..12),
        CustomerStructure::S1 => {
            let mut v = acts(0..7);
            v.push(Component::Activity(pay));
            v.extend(acts(9..12));
            v
        }
        CustomerStructure::S2 => {
            let order = ActivitySpec {
                name: Term::app("c_subact_o", [c, f, w]),
                goal: fluent(d, "order_transmitted", &[c])?,
                components: acts(3..6),
            };
            let mut ready = acts(0..3);
            ready.push(Component::Activity(order));
            let ready = ActivitySpec {
                name: Term::app("c_subact_r", [c, r, w, f]),
                goal: fluent(d, "ready_to_eat", &[c])?,
                components: ready,
            };
            let mut v = alloc::vec![Component::Activity(ready)];
            v.extend(acts(6..7));
            v.push(Component::Activity(pay));
            v.extend(acts(9..12));
            v
        }
    };
    Ok(ActivitySpec {
        name: Term::app("c_act", [c, r, w, f]),
        goal: fluent(d, "satiated_and_out", &[c])?,
        components,
    })
}

fn waiter_plan(d: &DomainSpec, p: &WaiterParams, cook: &str) -> Result<Vec<ActionId>, ActivityError> {
    let (w, c, f1, f2, b) = (
        p.waiter.as_str(),
        p.customer.as_str(),
        p.understood.as_str(),
        p.served.as_str(),
        p.bill.as_str(),
    );
    let steps: [(&str, &[&str]); 11] = [
        ("greet", &[w, c]),
        ("lead_to", &[w, c, TABLE]),
        ("move", &[w, TABLE, "kitchen"]),
        ("request", &[w, f1, cook]),
        ("pick_up", &[w, f2, "kitchen"]),
        ("move", &[w, "kitchen", TABLE]),
        ("put", &[w, f2, TABLE]),
        ("move", &[w, TABLE, "counter"]),
        ("pick_up", &[w, b, "counter"]),
        ("move", &[w, "counter", TABLE]),
        ("put", &[w, b, TABLE]),
    ];
    steps.iter().map(|(n, args)| action(d, n, args)).collect()
}

/// `w_seq(W,C,F1,F2,B)`: greet, seat, relay the order for `F1`, serve `F2`
/// and bring bill `B`.
pub fn waiter_sequence(d: &DomainSpec, p: &WaiterParams, cook: &str) -> Result<SequenceSpec, ActivityError> {
    Ok(SequenceSpec {
        name: p.name(),
        components: waiter_plan(d, p, cook)?
            .into_iter()
            .map(SeqComponent::Action)
            .collect(),
    })
}

/// `ck_seq(Ck,F,W)`: the single action `prepare(Ck,F,W)`.
pub fn cook_sequence(d: &DomainSpec, p: &CookParams) -> Result<SequenceSpec, ActivityError> {
    Ok(SequenceSpec {
        name: p.name(),
        components: alloc::vec![SeqComponent::Action(action(
            d,
            "prepare",
            &[&p.cook, &p.food, &p.waiter]
        )?)],
    })
}

/// The waiter sequence as a goal-driven activity with goal
/// `served_and_billed(C)`.
pub fn waiter_activity(d: &DomainSpec, p: &WaiterParams, cook: &str) -> Result<ActivitySpec, ActivityError> {
    Ok(ActivitySpec {
        name: Term::app(
            "w_act",
            [&p.waiter, &p.customer, &p.understood, &p.served, &p.bill],
        ),
        goal: fluent(d, "served_and_billed", &[&p.customer])?,
        components: waiter_plan(d, p, cook)?
            .into_iter()
            .map(Component::Action)
            .collect(),
    })
}

/// The cook sequence as a goal-driven activity with goal `prepared(F)`.
pub fn cook_activity(d: &DomainSpec, p: &CookParams) -> Result<ActivitySpec, ActivityError> {
    Ok(ActivitySpec {
        name: Term::app("ck_act", [&p.cook, &p.food, &p.waiter]),
        goal: fluent(d, "prepared", &[&p.food])?,
        components: alloc::vec![Component::Action(action(
            d,
            "prepare",
            &[&p.cook, &p.food, &p.waiter]
        )?)],
    })
}

/// Every waiter and cook parameterization the reader may have to consider:
/// for each (waiter, customer) pair all (F1, F2, B) over the foods and
/// bills, and for each (cook, waiter) pair every food.
pub fn candidate_staff_sequences(d: &DomainSpec) -> Vec<StaffParams> {
    let mut out = Vec::new();
    for w in &d.waiters {
        for c in &d.customers {
            for f1 in &d.foods {
                for f2 in &d.foods {
                    for b in &d.bills {
                        out.push(StaffParams::Waiter(WaiterParams {
                            waiter: w.clone(),
                            customer: c.clone(),
                            understood: f1.clone(),
                            served: f2.clone(),
                            bill: b.clone(),
                        }));
                    }
                }
            }
        }
        for ck in &d.cooks {
            for f in &d.foods {
                out.push(StaffParams::Cook(CookParams {
                    cook: ck.clone(),
                    food: f.clone(),
                    waiter: w.clone(),
                }));
            }
        }
    }
    out
}

#![allow(dead_code)]

pub mod oracle;
pub mod props;

use proptest::prelude::*;
use restaurant_core::domain_kb::Literal;
use restaurant_core::intentions::{ActivitySpec, Component};
use restaurant_core::reasoner::{lone_agent_span, solve, Config, SolveOutcome, Theory, TiMode};
use restaurant_core::term::parse_term;
use restaurant_core::transition::State;
use restaurant_core::{build_restaurant_domain, parse_story, DomainSpec, Model, Story, Unlimited};

pub const NORMAL: &str = "
customer(nicole). restaurant(veg_r). food(lentil_soup). waitress(waitress). cook(cook1).
st_hpd(enter(nicole,veg_r),true,0).
st_hpd(order(nicole,lentil_soup,waitress),true,1).
st_hpd(put(waitress,lentil_soup,t),true,2).
st_hpd(eat(nicole,lentil_soup),true,3).
st_hpd(leave(nicole),true,4).
";

pub const SERENDIPITY: &str = "
customer(nicole). restaurant(veg_r). food(lentil_soup). waitress(waitress). cook(cook1). people(owner).
st_hpd(enter(nicole,veg_r),true,0).
st_hpd(order(nicole,lentil_soup,waitress),true,1).
st_hpd(pay(owner,b),true,2).
st_hpd(put(waitress,lentil_soup,t),true,3).
st_hpd(eat(nicole,lentil_soup),true,4).
st_hpd(leave(nicole),true,5).
";

pub const DIAGNOSIS: &str = "
customer(nicole). restaurant(veg_r). food(lentil_soup). food(miso_soup). waitress(waitress). cook(cook1).
st_hpd(enter(nicole,veg_r),true,0).
st_hpd(order(nicole,lentil_soup,waitress),true,1).
st_hpd(put(waitress,miso_soup,t),true,2).
";

pub const WRONG_BILL: &str = "
customer(nicole). restaurant(veg_r). food(lentil_soup). waitress(waitress). cook(cook1). bill(b1).
st_hpd(enter(nicole,veg_r),true,0).
st_hpd(order(nicole,lentil_soup,waitress),true,1).
st_hpd(put(waitress,lentil_soup,t),true,2).
st_hpd(eat(nicole,lentil_soup),true,3).
st_hpd(put(waitress,b1,t),true,4).
";

pub const FUTILE: &str = "
customer(nicole). restaurant(veg_r). food(lentil_soup). waitress(waitress). cook(cook1).
st_hpd(enter(nicole,veg_r),true,0).
st_hpd(sit(nicole),true,1).
st_obs(available(lentil_soup),false,2).
";

pub const WAITER_SERENDIPITY: &str = "
customer(nicole). restaurant(veg_r). food(lentil_soup). waitress(waitress). cook(cook1).
st_hpd(enter(nicole,veg_r),true,0).
st_hpd(order(nicole,lentil_soup,waitress),true,1).
st_hpd(pay(nicole,b),true,2).
st_hpd(put(waitress,lentil_soup,t),true,3).
";

pub const MULTI: &str = "
customer(nicole). customer(sam). restaurant(veg_r). food(lentil_soup). food(miso_soup).
waitress(waitress). cook(cook1).
st_hpd(enter(nicole,veg_r),true,0).
st_hpd(enter(sam,veg_r),true,0).
st_hpd(order(nicole,lentil_soup,waitress),true,1).
st_hpd(order(sam,miso_soup,waitress),true,2).
st_hpd(eat(nicole,lentil_soup),true,3).
st_hpd(eat(sam,miso_soup),true,4).
";

pub fn load(text: &str) -> (Story, DomainSpec) {
    let story = parse_story(text).expect("story parses");
    let domain = build_restaurant_domain(&story.entities).expect("domain builds");
    (story, domain)
}

pub fn run_story(text: &str, mode: TiMode) -> (Story, DomainSpec, SolveOutcome) {
    let (story, domain) = load(text);
    let out = solve(&domain, &story, &Config::new(mode, Default::default()), &Unlimited).expect("solves");
    (story, domain, out)
}

/// `step:term` for every mental action of `model`.
pub fn mental_schedule(domain: &DomainSpec, model: &Model) -> Vec<String> {
    model
        .occurrences
        .iter()
        .flat_map(|o| o.mental.iter().map(move |m| format!("{}:{}", o.step, m.to_term(domain))))
        .collect()
}

pub fn occurs(domain: &DomainSpec, model: &Model, action: &str) -> Vec<usize> {
    let t = restaurant_core::term::parse_term(action).unwrap();
    model.steps_of(domain.action_id(&t).expect("ground action"))
}

/// Observations a micro-story draws from; `S` is the story step and
/// `FOOD` one of the declared foods.
const POOL: &[&str] = &[
    "st_hpd(enter(nicole,veg_r),true,S).",
    "st_hpd(enter(nicole,veg_r),false,S).",
    "st_hpd(greet(waitress,nicole),true,S).",
    "st_hpd(lead_to(waitress,nicole,t),true,S).",
    "st_hpd(sit(nicole),true,S).",
    "st_hpd(pick_up(nicole,m,t),true,S).",
    "st_hpd(order(nicole,FOOD,waitress),true,S).",
    "st_hpd(leave(nicole),true,S).",
    "st_obs(inside(nicole),true,S).",
    "st_obs(inside(nicole),false,S).",
    "st_obs(greeted(nicole),true,S).",
    "st_obs(available(FOOD),false,S).",
];

pub fn micro_story() -> impl Strategy<Value = (String, usize, bool)> {
    let step = prop::collection::vec((0..POOL.len(), any::<bool>()), 1..=2);
    (
        prop::collection::vec(step, 0..=3),
        prop_oneof![Just(1usize), Just(2usize)],
        4usize..=8,
        any::<bool>(),
    )
        .prop_map(|(steps, foods, horizon, new_only)| {
            let mut text = String::from("customer(nicole). restaurant(veg_r). waitress(waitress). cook(cook1). food(lentil_soup).\n");
            if foods == 2 {
                text.push_str("food(miso_soup).\n");
            }
            for (s, obs) in steps.iter().enumerate() {
                for &(k, second_food) in obs {
                    let food = if foods == 2 && second_food { "miso_soup" } else { "lentil_soup" };
                    text.push_str(&POOL[k].replace("FOOD", food).replace(",S)", &format!(",{s})")));
                    text.push('\n');
                }
            }
            (text, horizon, new_only)
        })
}


/// A flat activity for one customer, starting from the given literals.
pub fn lone(actions: &[&str], inside: bool) -> (DomainSpec, State, ActivitySpec) {
    let (_, d) = load("customer(nicole). restaurant(veg_r). waiter(w). cook(c). food(f).");
    let mut state = State::initial(&d);
    if inside {
        let f = d.fluent("in", &["nicole", "veg_r"]).unwrap();
        state.set(f, true);
        state.close(&d);
        assert!(state.holds(Literal { fluent: f, value: true }));
    }
    let components = actions
        .iter()
        .map(|a| Component::Action(d.action_id(&parse_term(a).unwrap()).unwrap()))
        .collect();
    let act = ActivitySpec {
        name: parse_term("walk(nicole)").unwrap(),
        goal: d.fluent("left", &["nicole"]).unwrap(),
        components,
    };
    (d, state, act)
}


/// A flat plan of `n` actions for a customer who is already inside, or who
/// starts by entering when `n` is large.
pub fn lone_plan(n: usize) -> (Vec<String>, bool) {
    match n {
        1 => (vec!["leave(nicole)".into()], true),
        _ if n % 2 == 1 => {
            let mut plan: Vec<String> = (0..n - 1)
                .map(|k| if k % 2 == 0 { "move(nicole,entrance,t)" } else { "move(nicole,t,entrance)" }.into())
                .collect();
            plan.push("leave(nicole)".into());
            (plan, true)
        }
        _ => {
            let mut plan = vec!["enter(nicole,veg_r)".to_string()];
            plan.extend((0..n - 2).map(|k| if k % 2 == 0 { "move(nicole,entrance,t)" } else { "move(nicole,t,entrance)" }.into()));
            plan.push("leave(nicole)".into());
            (plan, false)
        }
    }
}

/// Steps a lone customer needs for [`lone_plan`]`(n)` as a simple and as a
/// goal-driven agent.
pub fn lone_spans(n: usize) -> (Option<usize>, Option<usize>) {
    let (plan, inside) = lone_plan(n);
    let refs: Vec<&str> = plan.iter().map(String::as_str).collect();
    let (d, state, act) = lone(&refs, inside);
    assert_eq!(act.components.len(), n);
    let agent = d.agent_id("nicole").unwrap();
    (
        lone_agent_span(&d, &state, agent, &act, Theory::Simple),
        lone_agent_span(&d, &state, agent, &act, Theory::GoalDriven),
    )
}

//! Model properties checked over named and generated stories.

use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use restaurant_core::domain_kb::{executable, Head};
use restaurant_core::intentions::{Intent, Phase};
use restaurant_core::logicform::{EntityDecl, ObsKind, Observation, Sort};
use restaurant_core::reasoner::{solve, Config, Mind, Model, TiMode};
use restaurant_core::term::parse_term;
use restaurant_core::{
    answer, build_restaurant_domain, generate_queries, parse_story, serialize_story, Answer, DomainSpec,
    QueryForm, Story, Unlimited, Verdict,
};

use super::*;

pub fn solve_micro(text: &str, horizon: usize, new_only: bool) -> (Story, DomainSpec, Vec<Model>) {
    let story = parse_story(text).unwrap();
    let d = build_restaurant_domain(&story.entities).unwrap();
    let cfg = Config {
        ti_mode: if new_only { TiMode::NewOnly } else { TiMode::Mixed },
        max_steps: Some(horizon),
        ..Config::default()
    };
    let models = solve(&d, &story, &cfg, &Unlimited).unwrap().models;
    (story, d, models)
}

/// Named stories plus the solver's models, solved once.
pub fn named_models() -> Vec<(Story, DomainSpec, Vec<Model>)> {
    let mut out = Vec::new();
    for text in [NORMAL, SERENDIPITY, DIAGNOSIS, WRONG_BILL, FUTILE, WAITER_SERENDIPITY] {
        for mode in [TiMode::Mixed, TiMode::NewOnly] {
            let (s, d, o) = run_story(text, mode);
            out.push((s, d, o.models));
        }
    }
    out
}

pub fn check_inertia(d: &DomainSpec, m: &Model) -> Result<(), String> {
    let static_heads: Vec<usize> = d
        .static_axioms()
        .filter_map(|a| match &a.head {
            Head::Lit(l) => Some(l.fluent),
            _ => None,
        })
        .collect();
    for o in &m.occurrences {
        let (before, after) = (&m.trajectory[o.step], &m.trajectory[o.step + 1]);
        for f in 0..d.fluent_count() {
            if !d.is_inertial(f) || static_heads.contains(&f) || before.get(f) == after.get(f) {
                continue;
            }
            let affected = o.actions.iter().any(|&a| {
                d.effect_axioms(a).any(|ax| match &ax.head {
                    Head::Lit(l) => l.fluent == f,
                    Head::Choice(alts) => alts.iter().any(|x| x.effects.iter().any(|l| l.fluent == f)),
                    Head::Impossible(_) => false,
                })
            });
            if !affected {
                return Err(format!("{} changed at {} without a cause", d.fluent_term(f), o.step));
            }
        }
    }
    Ok(())
}

pub fn check_non_procrastination(d: &DomainSpec, m: &Model) -> Result<(), String> {
    for o in &m.occurrences {
        let state = &m.trajectory[o.step];
        for (g, mind) in m.minds[o.step].iter().enumerate() {
            match mind {
                Mind::Simple(s) => {
                    let ready: Vec<_> = s
                        .intents
                        .iter()
                        .filter_map(Intent::next)
                        .filter(|&a| executable(d, state, a))
                        .collect();
                    if !ready.is_empty() && !ready.iter().any(|&a| o.contains(a)) {
                        return Err(format!("{} delayed an executable intended action at {}", d.agents()[g], o.step));
                    }
                }
                Mind::Goal(s) if s.phase == Phase::Running => {
                    let Some(a) = s.current_action() else { continue };
                    let mental = o.mental.iter().any(|x| x.agent == g);
                    if d.agent_of(a) == Some(g) && executable(d, state, a) && !mental && !o.contains(a) {
                        return Err(format!("{} delayed {} at {}", d.agents()[g], d.action_term(a), o.step));
                    }
                }
                _ => {}
            }
        }
    }
    Ok(())
}

pub fn check_persistence(d: &DomainSpec, m: &Model) -> Result<(), String> {
    for o in &m.occurrences {
        let (now, next) = (&m.minds[o.step], &m.minds[o.step + 1]);
        for g in 0..now.len() {
            match (&now[g], &next[g]) {
                (Mind::Simple(a), Mind::Simple(b)) => {
                    for (x, y) in a.intents.iter().zip(&b.intents) {
                        if let Some(act) = x.next() {
                            if !o.contains(act) && y.next() != Some(act) {
                                return Err(format!("{} dropped {} at {}", d.agents()[g], d.action_term(act), o.step));
                            }
                        }
                    }
                }
                (Mind::Goal(a), Mind::Goal(b)) if a.phase == Phase::Running => {
                    let mental = o.mental.iter().any(|x| x.agent == g);
                    if let Some(act) = a.current_action() {
                        if !mental && !o.contains(act) && b.current_action() != Some(act) {
                            return Err(format!("{} dropped {} at {}", d.agents()[g], d.action_term(act), o.step));
                        }
                    }
                }
                _ => {}
            }
        }
    }
    Ok(())
}

pub fn check_gap_free(m: &Model) -> Result<(), String> {
    if let Some(o) = m.occurrences.iter().find(|o| o.is_empty()) {
        return Err(format!("empty step {} inside the timeline", o.step));
    }
    if m.trajectory.len() != m.occurrences.len() + 1 {
        return Err("trajectory and occurrences disagree".into());
    }
    Ok(())
}

pub fn check_mapping(story: &Story, d: &DomainSpec, m: &Model) -> Result<(), String> {
    if !m.mapping.is_strictly_increasing() {
        return Err(format!("mapping {:?} is not strictly increasing", m.mapping));
    }
    let mapped: Vec<u32> = m.mapping.pairs().iter().map(|p| p.0).collect();
    if mapped != story.story_steps() {
        return Err(format!("mapping {:?} misses story steps", m.mapping));
    }
    for obs in &story.observations {
        let i = m.mapping.get(obs.story_step).unwrap();
        let holds = match obs.kind {
            ObsKind::Action => {
                let a = d.action_id(&obs.subject).unwrap();
                m.occurrences.get(i).is_some_and(|o| o.contains(a))
            }
            ObsKind::Fluent => m.trajectory[i].get(d.fluent_id(&obs.subject).unwrap()),
        };
        if holds != obs.value {
            return Err(format!("observation {} at story step {} not honoured", obs.subject, obs.story_step));
        }
    }
    Ok(())
}

pub fn check_minimal(models: &[Model]) -> Result<(), String> {
    for a in models {
        for b in models {
            if a.abduced.len() < b.abduced.len() && a.abduced.iter().all(|x| b.abduced.contains(x)) {
                return Err(format!("{:?} is not minimal next to {:?}", b.abduced, a.abduced));
            }
        }
    }
    Ok(())
}

pub fn check_all(story: &Story, d: &DomainSpec, models: &[Model]) -> Result<(), String> {
    for m in models {
        check_inertia(d, m)?;
        check_non_procrastination(d, m)?;
        check_persistence(d, m)?;
        check_gap_free(m)?;
        check_mapping(story, d, m)?;
    }
    check_minimal(models)
}


/// The property suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Property {
    Inertia,
    NonProcrastination,
    Persistence,
    GapFree,
    StrictMapping,
    Minimality,
    CautiousMonotonicity,
    RoundTrip,
}

impl Property {
    pub const ALL: [Property; 8] = [
        Property::Inertia,
        Property::NonProcrastination,
        Property::Persistence,
        Property::GapFree,
        Property::StrictMapping,
        Property::Minimality,
        Property::CautiousMonotonicity,
        Property::RoundTrip,
    ];
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(PropConfig {
        cases,
        failure_persistence: None,
        ..PropConfig::default()
    })
}

fn per_model(
    cases: u32,
    check: impl Fn(&Story, &DomainSpec, &[Model]) -> Result<(), String>,
) -> Result<(), String> {
    runner(cases)
        .run(&micro_story(), |(text, horizon, new_only)| {
            let (story, d, models) = solve_micro(&text, horizon, new_only);
            let r = check(&story, &d, &models);
            prop_assert!(r.is_ok(), "{:?}\n{}", r, text);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn each(
    check: impl Fn(&Story, &DomainSpec, &Model) -> Result<(), String>,
) -> impl Fn(&Story, &DomainSpec, &[Model]) -> Result<(), String> {
    move |s, d, ms| ms.iter().try_for_each(|m| check(s, d, m))
}

/// Runs `property` over `cases` generated instances.
pub fn run(property: Property, cases: u32) -> Result<(), String> {
    match property {
        Property::Inertia => per_model(cases, each(|_, d, m| check_inertia(d, m))),
        Property::NonProcrastination => per_model(cases, each(|_, d, m| check_non_procrastination(d, m))),
        Property::Persistence => per_model(cases, each(|_, d, m| check_persistence(d, m))),
        Property::GapFree => per_model(cases, each(|_, _, m| check_gap_free(m))),
        Property::StrictMapping => per_model(cases, each(check_mapping)),
        Property::Minimality => per_model(cases, |_, _, ms| check_minimal(ms)),
        Property::CautiousMonotonicity => cautious(cases),
        Property::RoundTrip => round_trip(cases),
    }
}

fn cautious(cases: u32) -> Result<(), String> {
    let stories = [NORMAL, SERENDIPITY, DIAGNOSIS, WRONG_BILL, FUTILE, WAITER_SERENDIPITY];
    let solved: Vec<_> = stories.iter().map(|s| run_story(s, TiMode::Mixed)).collect();
    let strategy = (prop::collection::vec(any::<bool>(), 1..12), 0usize..stories.len());
    runner(cases)
        .run(&strategy, |(pick, which)| {
            let (story, d, out) = &solved[which];
            let all = &out.models;
            let subset: Vec<Model> = all
                .iter()
                .zip(pick.iter().cycle())
                .filter(|(_, &k)| k)
                .map(|(m, _)| m.clone())
                .collect();
            if subset.is_empty() {
                return Ok(());
            }
            let queries = generate_queries(story, d, 0, 40).unwrap();
            for q in queries.iter().filter(|q| q.form == QueryForm::YesNo) {
                let small = answer(q, d, &subset).unwrap();
                let big = answer(q, d, all).unwrap();
                match (small, big) {
                    (Answer::Verdict(Verdict::Yes), Answer::Verdict(v)) => prop_assert!(v != Verdict::No),
                    (Answer::Verdict(Verdict::No), Answer::Verdict(v)) => prop_assert!(v != Verdict::Yes),
                    (Answer::Verdict(Verdict::Unknown), Answer::Verdict(v)) => prop_assert_eq!(v, Verdict::Unknown),
                    _ => unreachable!(),
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn round_trip(cases: u32) -> Result<(), String> {
    let strategy = (
        prop::collection::vec("[a-z][a-z0-9_]{0,6}", 1..4),
        prop::collection::vec((0usize..4, 0u32..6, any::<bool>()), 0..8),
    );
    runner(cases)
        .run(&strategy, |(names, obs)| {
            let mut story = Story::default();
            story.entities.push(EntityDecl { name: "nicole".into(), sort: Sort::Customer });
            for (k, n) in names.iter().enumerate() {
                let sort = [Sort::Food, Sort::Restaurant, Sort::Cook, Sort::Bill][k % 4];
                if story.sort_of(n).is_none() {
                    story.entities.push(EntityDecl { name: n.clone(), sort });
                }
            }
            let subjects = [
                ("enter(nicole,veg_r)", ObsKind::Action),
                ("leave(nicole)", ObsKind::Action),
                ("inside(nicole)", ObsKind::Fluent),
                ("available(lentil_soup)", ObsKind::Fluent),
            ];
            for (k, step, value) in obs {
                let (t, kind) = subjects[k];
                story.observations.push(Observation { story_step: step, kind, subject: parse_term(t).unwrap(), value });
            }
            let text = serialize_story(&story);
            let back = parse_story(&text).unwrap();
            prop_assert!(back.same_facts(&story), "{}", text);
            prop_assert_eq!(serialize_story(&back), text);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

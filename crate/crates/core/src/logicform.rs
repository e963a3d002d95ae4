//! The input-dependent part of a story program: entity declarations and
//! observations on the story timeline, in ASP fact syntax.
//!
//! ```text
//! customer(nicole).
//! st_hpd(enter(nicole,veg_r),true,0).
//! st_obs(available(lentil_soup),false,1).
//! ```

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::domain_kb::DomainSpec;
use crate::term::{Cursor, Pos, Term};

/// Entity sorts that a logic form may declare.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Bill,
    Cook,
    Customer,
    Food,
    People,
    Restaurant,
    Waiter,
    Waitress,
}

impl Sort {
    pub const ALL: [Sort; 8] = [
        Sort::Bill,
        Sort::Cook,
        Sort::Customer,
        Sort::Food,
        Sort::People,
        Sort::Restaurant,
        Sort::Waiter,
        Sort::Waitress,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Sort::Bill => "bill",
            Sort::Cook => "cook",
            Sort::Customer => "customer",
            Sort::Food => "food",
            Sort::People => "people",
            Sort::Restaurant => "restaurant",
            Sort::Waiter => "waiter",
            Sort::Waitress => "waitress",
        }
    }

    pub fn from_name(name: &str) -> Option<Sort> {
        Sort::ALL.into_iter().find(|s| s.name() == name)
    }

    /// `waiter` and `waitress` declare the same role.
    pub fn is_waiter(self) -> bool {
        matches!(self, Sort::Waiter | Sort::Waitress)
    }

    pub fn is_person(self) -> bool {
        matches!(
            self,
            Sort::Cook | Sort::Customer | Sort::People | Sort::Waiter | Sort::Waitress
        )
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityDecl {
    pub name: String,
    pub sort: Sort,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ObsKind {
    /// `st_hpd(action, value, step)`
    Action,
    /// `st_obs(fluent, value, step)`
    Fluent,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Observation {
    pub story_step: u32,
    pub kind: ObsKind,
    pub subject: Term,
    pub value: bool,
}

impl Observation {
    pub fn action(subject: Term, value: bool, story_step: u32) -> Self {
        Observation {
            story_step,
            kind: ObsKind::Action,
            subject,
            value,
        }
    }

    pub fn fluent(subject: Term, value: bool, story_step: u32) -> Self {
        Observation {
            story_step,
            kind: ObsKind::Fluent,
            subject,
            value,
        }
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pred = match self.kind {
            ObsKind::Action => "st_hpd",
            ObsKind::Fluent => "st_obs",
        };
        write!(f, "{pred}({},{},{})", self.subject, self.value, self.story_step)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Story {
    pub id: Option<String>,
    pub entities: Vec<EntityDecl>,
    pub observations: Vec<Observation>,
}

impl Story {
    pub fn entities_of(&self, sort: Sort) -> impl Iterator<Item = &str> {
        self.entities
            .iter()
            .filter(move |e| e.sort == sort)
            .map(|e| e.name.as_str())
    }

    pub fn sort_of(&self, name: &str) -> Option<Sort> {
        self.entities.iter().find(|e| e.name == name).map(|e| e.sort)
    }

    /// Distinct story steps mentioned by any observation, ascending.
    pub fn story_steps(&self) -> Vec<u32> {
        let steps: BTreeSet<u32> = self.observations.iter().map(|o| o.story_step).collect();
        steps.into_iter().collect()
    }

    /// Largest step carrying a positive action observation.
    pub fn length(&self) -> Option<u32> {
        self.observations
            .iter()
            .filter(|o| o.kind == ObsKind::Action && o.value)
            .map(|o| o.story_step)
            .max()
    }

    /// Equality of entity and observation sets, ignoring order and id.
    pub fn same_facts(&self, other: &Story) -> bool {
        let ea: BTreeSet<_> = self.entities.iter().collect();
        let eb: BTreeSet<_> = other.entities.iter().collect();
        let oa: BTreeSet<_> = self.observations.iter().collect();
        let ob: BTreeSet<_> = other.observations.iter().collect();
        ea == eb && oa == ob
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{pos}: syntax error: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("{pos}: unknown predicate or sort `{name}/{arity}`")]
    UnknownPredicate {
        pos: Pos,
        name: String,
        arity: usize,
    },
    #[error("{pos}: observation term `{term}` is not ground")]
    NonGround { pos: Pos, term: Term },
    #[error("{pos}: expected `true` or `false`, found `{found}`")]
    BadValue { pos: Pos, found: Term },
    #[error("{pos}: expected a non-negative story step, found `{found}`")]
    BadStep { pos: Pos, found: Term },
    #[error("{pos}: malformed entity declaration `{found}`")]
    BadEntity { pos: Pos, found: Term },
    #[error("{pos}: entity `{name}` declared twice")]
    DuplicateEntity { pos: Pos, name: String },
}

fn syntax((pos, message): (Pos, String)) -> ParseError {
    ParseError::Syntax { pos, message }
}

/// Parses a logic form. Facts may be spread over lines freely; `%` starts a
/// comment running to end of line.
pub fn parse_story(source: &str) -> Result<Story, ParseError> {
    let mut cur = Cursor::new(source);
    let mut story = Story::default();
    let mut names = BTreeSet::new();
    while !cur.at_end() {
        let pos = cur.pos();
        let fact = cur.term().map_err(syntax)?;
        cur.eat('.').map_err(syntax)?;
        match (fact.functor.as_str(), fact.arity()) {
            ("st_hpd" | "st_obs", 3) => {
                let subject = fact.args[0].clone();
                if !subject.is_ground() {
                    return Err(ParseError::NonGround { pos, term: subject });
                }
                let value = match fact.args[1].functor.as_str() {
                    "true" if fact.args[1].args.is_empty() => true,
                    "false" if fact.args[1].args.is_empty() => false,
                    _ => {
                        return Err(ParseError::BadValue {
                            pos,
                            found: fact.args[1].clone(),
                        })
                    }
                };
                let step = fact.args[2]
                    .as_int()
                    .and_then(|s| u32::try_from(s).ok())
                    .ok_or_else(|| ParseError::BadStep {
                        pos,
                        found: fact.args[2].clone(),
                    })?;
                let kind = if fact.functor == "st_hpd" {
                    ObsKind::Action
                } else {
                    ObsKind::Fluent
                };
                story.observations.push(Observation {
                    story_step: step,
                    kind,
                    subject,
                    value,
                });
            }
            (name, 1) if Sort::from_name(name).is_some() => {
                let arg = &fact.args[0];
                if !arg.args.is_empty() || arg.is_variable() || arg.as_int().is_some() {
                    return Err(ParseError::BadEntity { pos, found: fact });
                }
                if !names.insert(arg.functor.clone()) {
                    return Err(ParseError::DuplicateEntity {
                        pos,
                        name: arg.functor.clone(),
                    });
                }
                story.entities.push(EntityDecl {
                    name: arg.functor.clone(),
                    sort: Sort::from_name(name).unwrap(),
                });
            }
            (name, arity) => {
                return Err(ParseError::UnknownPredicate {
                    pos,
                    name: name.to_string(),
                    arity,
                })
            }
        }
    }
    Ok(story)
}

/// Canonical text: entities sorted by (sort, name), then observations sorted
/// by (story step, kind, term), one fact per line.
pub fn serialize_story(story: &Story) -> String {
    let mut entities: Vec<&EntityDecl> = story.entities.iter().collect();
    entities.sort_by(|a, b| (a.sort.name(), &a.name).cmp(&(b.sort.name(), &b.name)));
    let mut observations: Vec<&Observation> = story.observations.iter().collect();
    observations.sort();
    let mut out = String::new();
    for e in entities {
        out.push_str(e.sort.name());
        out.push('(');
        out.push_str(&e.name);
        out.push_str(").\n");
    }
    for o in observations {
        out.push_str(&o.to_string());
        out.push_str(".\n");
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    UnknownSymbol {
        term: Term,
    },
    /// An action symbol observed with `st_obs`, or a fluent with `st_hpd`.
    WrongKind {
        term: Term,
    },
    ArityMismatch {
        term: Term,
        expected: Vec<usize>,
    },
    SortMismatch {
        term: Term,
        position: usize,
        constant: String,
    },
    UndeclaredEntity {
        term: Term,
        name: String,
    },
    /// The story declares something the restaurant domain cannot ground.
    Domain {
        message: String,
    },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::UnknownSymbol { term } => write!(f, "unknown symbol in `{term}`"),
            Diagnostic::WrongKind { term } => {
                write!(f, "`{term}` observed with the wrong predicate (action vs fluent)")
            }
            Diagnostic::ArityMismatch { term, expected } => {
                write!(f, "`{term}` has arity {}, expected one of {expected:?}", term.arity())
            }
            Diagnostic::SortMismatch {
                term,
                position,
                constant,
            } => write!(
                f,
                "sort mismatch in `{term}`: argument {} (`{constant}`) has the wrong sort",
                position + 1
            ),
            Diagnostic::UndeclaredEntity { term, name } => {
                write!(f, "`{name}` in `{term}` is not declared")
            }
            Diagnostic::Domain { message } => f.write_str(message),
        }
    }
}

/// Checks every observation against the domain signature. An empty result
/// means the story is well-sorted.
pub fn validate_story(story: &Story, domain: &DomainSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for obs in &story.observations {
        let term = &obs.subject;
        for name in term.constants() {
            if name.parse::<i64>().is_err()
                && story.sort_of(name).is_none()
                && domain.constant_sort(name).is_none()
            {
                out.push(Diagnostic::UndeclaredEntity {
                    term: term.clone(),
                    name: name.to_string(),
                });
            }
        }
        if out
            .iter()
            .any(|d| matches!(d, Diagnostic::UndeclaredEntity { term: t, .. } if t == term))
        {
            continue;
        }
        let sigs = match obs.kind {
            ObsKind::Action => domain.action_signatures(&term.functor),
            ObsKind::Fluent => domain.fluent_signatures(&term.functor),
        };
        if sigs.is_empty() {
            let other = match obs.kind {
                ObsKind::Action => domain.fluent_signatures(&term.functor),
                ObsKind::Fluent => domain.action_signatures(&term.functor),
            };
            out.push(if other.is_empty() {
                Diagnostic::UnknownSymbol { term: term.clone() }
            } else {
                Diagnostic::WrongKind { term: term.clone() }
            });
            continue;
        }
        let same_arity: Vec<_> = sigs.iter().filter(|s| s.len() == term.arity()).collect();
        if same_arity.is_empty() {
            out.push(Diagnostic::ArityMismatch {
                term: term.clone(),
                expected: sigs.iter().map(|s| s.len()).collect(),
            });
            continue;
        }
        if same_arity.iter().any(|sig| domain.well_sorted(term, sig)) {
            continue;
        }
        // Report the first argument that no signature accepts.
        let position = (0..term.arity())
            .find(|&i| {
                same_arity
                    .iter()
                    .all(|sig| !domain.arg_fits(&term.args[i], sig[i]))
            })
            .unwrap_or(0);
        out.push(Diagnostic::SortMismatch {
            term: term.clone(),
            position,
            constant: term.args[position].to_string(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain_kb::build_restaurant_domain;

    pub(crate) const EXAMPLE_4: &str = "\
customer(nicole).
restaurant(veg_r).
food(lentil_soup).
waitress(waitress).
cook(cook1).
st_hpd(enter(nicole, veg_r), true, 0).
st_hpd(order(nicole, lentil_soup, waitress), true, 1).
st_hpd(put(waitress, lentil_soup, t), true, 2).
st_hpd(eat(nicole, lentil_soup), true, 3).
st_hpd(leave(nicole), true, 4).
";

    #[test]
    fn parses_single_fact_pair() {
        let s = parse_story("customer(nicole). st_hpd(enter(nicole,veg_r),true,0).").unwrap();
        assert_eq!(s.entities.len(), 1);
        assert_eq!(s.observations.len(), 1);
        assert_eq!(s.observations[0].kind, ObsKind::Action);
        assert_eq!(s.observations[0].story_step, 0);
    }

    #[test]
    fn empty_text_is_empty_story() {
        let s = parse_story("").unwrap();
        assert!(s.entities.is_empty() && s.observations.is_empty());
        let s = parse_story("% only a comment\n\n").unwrap();
        assert!(s.entities.is_empty());
    }

    #[test]
    fn example_four_shape() {
        let s = parse_story(EXAMPLE_4).unwrap();
        assert_eq!(s.entities.len(), 5);
        assert_eq!(s.observations.len(), 5);
        let steps: Vec<u32> = s.observations.iter().map(|o| o.story_step).collect();
        assert_eq!(steps, [0, 1, 2, 3, 4]);
        assert_eq!(s.length(), Some(4));
    }

    #[test]
    fn unknown_predicate_is_error() {
        let e = parse_story("chef(bob).").unwrap_err();
        assert!(matches!(e, ParseError::UnknownPredicate { ref name, .. } if name == "chef"));
        let e = parse_story("customer(nicole).\nhpd(eat(nicole,x),true,0).").unwrap_err();
        assert!(matches!(e, ParseError::UnknownPredicate { pos, .. } if pos.line == 2));
    }

    #[test]
    fn syntax_error_reports_line_and_column() {
        let e = parse_story("customer(nicole)\nfood(x).").unwrap_err();
        match e {
            ParseError::Syntax { pos, .. } => assert_eq!((pos.line, pos.column), (2, 1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_ground_and_bad_values_rejected() {
        assert!(matches!(
            parse_story("st_hpd(eat(C,soup),true,0).").unwrap_err(),
            ParseError::NonGround { .. }
        ));
        assert!(matches!(
            parse_story("st_hpd(eat(c,soup),yes,0).").unwrap_err(),
            ParseError::BadValue { .. }
        ));
        assert!(matches!(
            parse_story("st_hpd(eat(c,soup),true,-1).").unwrap_err(),
            ParseError::BadStep { .. }
        ));
        assert!(matches!(
            parse_story("food(x). food(x).").unwrap_err(),
            ParseError::DuplicateEntity { .. }
        ));
    }

    #[test]
    fn serialize_example_four_has_ten_facts() {
        let s = parse_story(EXAMPLE_4).unwrap();
        let text = serialize_story(&s);
        assert_eq!(text.lines().count(), 10);
        assert!(text.contains("st_hpd(enter(nicole,veg_r),true,0).\n"));
        assert!(text.starts_with("cook(cook1).\ncustomer(nicole).\nfood(lentil_soup).\n"));
        assert!(parse_story(&text).unwrap().same_facts(&s));
    }

    #[test]
    fn serialize_empty_is_empty() {
        assert_eq!(serialize_story(&Story::default()), "");
    }

    fn domain_for(s: &Story) -> DomainSpec {
        build_restaurant_domain(&s.entities).unwrap()
    }

    #[test]
    fn validate_example_four_clean() {
        let s = parse_story(EXAMPLE_4).unwrap();
        assert_eq!(validate_story(&s, &domain_for(&s)), []);
    }

    #[test]
    fn validate_swapped_arguments() {
        let s = parse_story(
            "customer(nicole). restaurant(veg_r). food(lentil_soup). waitress(waitress). cook(cook1).\n\
             st_hpd(eat(veg_r,nicole),true,0).",
        )
        .unwrap();
        let d = validate_story(&s, &domain_for(&s));
        assert_eq!(d.len(), 1);
        assert!(matches!(d[0], Diagnostic::SortMismatch { .. }));
    }

    #[test]
    fn validate_undeclared_entity() {
        let s = parse_story(
            "customer(nicole). restaurant(veg_r). waitress(waitress). cook(cook1).\n\
             st_hpd(eat(nicole,miso_soup),true,0).",
        )
        .unwrap();
        let d = validate_story(&s, &domain_for(&s));
        assert!(matches!(&d[..], [Diagnostic::UndeclaredEntity { name, .. }] if name == "miso_soup"));
    }

    #[test]
    fn validate_kind_and_arity() {
        let s = parse_story(
            "customer(nicole). restaurant(veg_r). waitress(waitress). cook(cook1).\n\
             st_hpd(open(veg_r),true,0). st_obs(leave(nicole),true,0). st_hpd(leave(nicole,veg_r),true,1).",
        )
        .unwrap();
        let d = validate_story(&s, &domain_for(&s));
        assert!(matches!(d[0], Diagnostic::WrongKind { .. }));
        assert!(matches!(d[1], Diagnostic::WrongKind { .. }));
        assert!(matches!(d[2], Diagnostic::ArityMismatch { .. }));
    }
}

//! The story corpus: XML loading, validation and timed runs.
//!
//! Schema (version 1):
//!
//! ```xml
//! <corpus version="1">
//!   <story reconstructed="true" class="normal" limitation="new-only">
//!     <id>ex1</id>
//!     <source>mueller</source>
//!     <type>normal</type>
//!     <excerpt>Nicole went to a vegetarian restaurant...</excerpt>
//!     <logicform>customer(nicole). ...</logicform>
//!   </story>
//! </corpus>
//! ```
//!
//! `class` names the benchmark scenario an entry stands for and
//! `limitation` the intention mode under which the entry is expected to have
//! no models. Both are optional.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use restaurant_core::logicform::{EntityDecl, Observation};
use restaurant_core::reasoner::{explain, Explanation, NoModelReason, SolveError};
use restaurant_core::{
    build_restaurant_domain, parse_story, solve, validate_story, Config, DomainSpec, Story, Term,
    TiMode,
};
use serde::Serialize;
use thiserror::Error;

use crate::Deadline;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Youtube,
    GoogleBooks,
    Gutenberg,
    Mueller,
    HandCrafted,
}

impl Source {
    pub const ALL: [Source; 5] = [
        Source::Youtube,
        Source::GoogleBooks,
        Source::Gutenberg,
        Source::Mueller,
        Source::HandCrafted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Source::Youtube => "youtube",
            Source::GoogleBooks => "google_books",
            Source::Gutenberg => "gutenberg",
            Source::Mueller => "mueller",
            Source::HandCrafted => "hand_crafted",
        }
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Source::ALL
            .into_iter()
            .find(|x| x.name() == s.trim())
            .ok_or_else(|| format!("unknown source `{s}`"))
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioType {
    Normal,
    Exception,
    Variation,
}

impl ScenarioType {
    pub const ALL: [ScenarioType; 3] = [ScenarioType::Normal, ScenarioType::Exception, ScenarioType::Variation];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioType::Normal => "normal",
            ScenarioType::Exception => "exception",
            ScenarioType::Variation => "variation",
        }
    }
}

impl FromStr for ScenarioType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ScenarioType::ALL
            .into_iter()
            .find(|x| x.name() == s.trim())
            .ok_or_else(|| format!("unknown scenario type `{s}`"))
    }
}

impl fmt::Display for ScenarioType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub id: String,
    pub excerpt: String,
    pub source: Source,
    pub scenario_type: ScenarioType,
    pub logic_form: String,
    /// The entry retells a story quoted in the literature rather than a
    /// synthetic one.
    pub reconstructed: bool,
    pub class: Option<String>,
    pub limitation: Option<TiMode>,
    pub story: Story,
}

impl CorpusEntry {
    pub fn domain(&self) -> DomainSpec {
        build_restaurant_domain(&self.story.entities).expect("validated at load time")
    }

    /// Whether the entry is expected to have models under `mode`.
    pub fn expects_models(&self, mode: TiMode) -> bool {
        self.limitation != Some(mode)
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed corpus XML: {0}")]
    Xml(#[from] roxmltree::Error),
    #[error("corpus schema: {0}")]
    Schema(String),
    #[error("story `{id}`: {message}")]
    Entry { id: String, message: String },
    #[error("story `{id}` has an invalid logic form: {message}")]
    LogicForm { id: String, message: String },
    #[error("duplicate story id `{0}`")]
    DuplicateId(String),
    #[error("stories `{0}` and `{1}` have the same logic form up to renaming")]
    DuplicateLogicForm(String, String),
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<CorpusEntry>, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(&text)
}

/// Parses and validates a corpus document. Blank input is an empty corpus.
pub fn parse_corpus(text: &str) -> Result<Vec<CorpusEntry>, CorpusError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let doc = roxmltree::Document::parse(text)?;
    let root = doc.root_element();
    if root.tag_name().name() != "corpus" {
        return Err(CorpusError::Schema(format!("root element is <{}>, expected <corpus>", root.tag_name().name())));
    }
    if let Some(v) = root.attribute("version") {
        if v != SCHEMA_VERSION {
            return Err(CorpusError::Schema(format!("unsupported version {v}")));
        }
    }
    let mut entries: Vec<CorpusEntry> = Vec::new();
    let mut seen_forms: HashMap<String, String> = HashMap::new();
    for (k, node) in root.children().filter(|n| n.is_element()).enumerate() {
        if node.tag_name().name() != "story" {
            return Err(CorpusError::Schema(format!("unexpected <{}>", node.tag_name().name())));
        }
        let entry = parse_entry(node, k)?;
        if entries.iter().any(|e| e.id == entry.id) {
            return Err(CorpusError::DuplicateId(entry.id));
        }
        let key = canonical_form(&entry.story);
        if let Some(other) = seen_forms.insert(key, entry.id.clone()) {
            return Err(CorpusError::DuplicateLogicForm(other, entry.id));
        }
        entries.push(entry);
    }
    Ok(entries)
}

fn parse_entry(node: roxmltree::Node, index: usize) -> Result<CorpusEntry, CorpusError> {
    let child = |name: &str| -> Option<String> {
        node.children()
            .find(|c| c.is_element() && c.tag_name().name() == name)
            .map(|c| c.text().unwrap_or("").trim().to_string())
    };
    let id = child("id")
        .or_else(|| node.attribute("id").map(str::to_string))
        .ok_or_else(|| CorpusError::Schema(format!("story #{} has no id", index + 1)))?;
    let err = |message: String| CorpusError::Entry { id: id.clone(), message };
    let field = |name: &str| child(name).ok_or_else(|| err(format!("missing <{name}>")));

    let source = field("source")?.parse().map_err(err)?;
    let scenario_type = field("type")?.parse().map_err(err)?;
    let excerpt = field("excerpt")?;
    let logic_form = field("logicform")?;
    let reconstructed = match node.attribute("reconstructed") {
        None | Some("false") => false,
        Some("true") => true,
        Some(x) => return Err(err(format!("reconstructed must be true or false, not `{x}`"))),
    };
    let limitation = node
        .attribute("limitation")
        .map(|m| m.parse::<TiMode>().map_err(|e| err(e.to_string())))
        .transpose()?;
    let class = node.attribute("class").map(str::to_string);

    let lf_err = |message: String| CorpusError::LogicForm { id: id.clone(), message };
    let mut story = parse_story(&logic_form).map_err(|e| lf_err(e.to_string()))?;
    story.id = Some(id.clone());
    let domain = build_restaurant_domain(&story.entities).map_err(|e| lf_err(e.to_string()))?;
    let diags = validate_story(&story, &domain);
    if !diags.is_empty() {
        let msgs: Vec<String> = diags.iter().map(ToString::to_string).collect();
        return Err(lf_err(msgs.join("; ")));
    }
    Ok(CorpusEntry {
        id,
        excerpt,
        source,
        scenario_type,
        logic_form,
        reconstructed,
        class,
        limitation,
        story,
    })
}

/// The logic form with declared entities renamed by sort and order of first
/// use, so that stories differing only in names compare equal.
pub fn canonical_form(story: &Story) -> String {
    let sort_of: HashMap<&str, &EntityDecl> = story.entities.iter().map(|e| (e.name.as_str(), e)).collect();
    let mut obs: Vec<&Observation> = story.observations.iter().collect();
    // Ordering must not depend on names: sort on everything but constants.
    obs.sort_by_key(|o| (o.story_step, o.kind, !o.value, shape(&o.subject)));
    let mut names: HashMap<String, String> = HashMap::new();
    let mut counters: BTreeMap<&str, usize> = BTreeMap::new();
    let mut rename = |n: &str| -> Option<String> {
        let decl = sort_of.get(n)?;
        let sort = if decl.sort.is_waiter() { "waiter" } else { decl.sort.name() };
        Some(
            names
                .entry(n.to_string())
                .or_insert_with(|| {
                    let c = counters.entry(sort).or_default();
                    *c += 1;
                    format!("{sort}{c}")
                })
                .clone(),
        )
    };
    let mut lines: Vec<String> = Vec::new();
    for o in obs {
        let subject = map_constants(&o.subject, &mut rename);
        lines.push(format!("{:?}({},{},{})", o.kind, subject, o.value, o.story_step));
    }
    let mut decls: Vec<String> = story
        .entities
        .iter()
        .map(|e| match rename(&e.name) {
            Some(n) => format!("{}({n})", if e.sort.is_waiter() { "waiter" } else { e.sort.name() }),
            None => unreachable!("declared entities always rename"),
        })
        .collect();
    decls.sort();
    lines.sort();
    format!("{}\n{}", decls.join(" "), lines.join("\n"))
}

fn shape(t: &Term) -> String {
    if t.args.is_empty() {
        return String::from("_");
    }
    let args: Vec<String> = t.args.iter().map(shape).collect();
    format!("{}({})", t.functor, args.join(","))
}

fn map_constants(t: &Term, rename: &mut impl FnMut(&str) -> Option<String>) -> Term {
    if t.args.is_empty() {
        return Term::atom(rename(&t.functor).unwrap_or_else(|| t.functor.clone()));
    }
    Term {
        functor: t.functor.clone(),
        args: t.args.iter().map(|a| map_constants(a, rename)).collect(),
    }
}

/// Entry counts per source and scenario type.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Distribution {
    pub cells: BTreeMap<Source, BTreeMap<ScenarioType, usize>>,
}

impl Distribution {
    pub fn of(entries: &[CorpusEntry]) -> Self {
        let mut d = Distribution::default();
        for e in entries {
            *d.cells.entry(e.source).or_default().entry(e.scenario_type).or_default() += 1;
        }
        d
    }

    pub fn get(&self, source: Source, ty: ScenarioType) -> usize {
        self.cells.get(&source).and_then(|m| m.get(&ty)).copied().unwrap_or(0)
    }

    pub fn by_type(&self, ty: ScenarioType) -> usize {
        Source::ALL.iter().map(|&s| self.get(s, ty)).sum()
    }

    pub fn by_source(&self, source: Source) -> usize {
        ScenarioType::ALL.iter().map(|&t| self.get(source, t)).sum()
    }

    pub fn total(&self) -> usize {
        Source::ALL.iter().map(|&s| self.by_source(s)).sum()
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<14}{:>8}{:>11}{:>11}{:>7}", "source", "normal", "exception", "variation", "total")?;
        for s in Source::ALL {
            writeln!(
                f,
                "{:<14}{:>8}{:>11}{:>11}{:>7}",
                s.name(),
                self.get(s, ScenarioType::Normal),
                self.get(s, ScenarioType::Exception),
                self.get(s, ScenarioType::Variation),
                self.by_source(s)
            )?;
        }
        write!(
            f,
            "{:<14}{:>8}{:>11}{:>11}{:>7}",
            "total",
            self.by_type(ScenarioType::Normal),
            self.by_type(ScenarioType::Exception),
            self.by_type(ScenarioType::Variation),
            self.total()
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunVerdict {
    ModelsFound,
    NoModels,
    Timeout,
}

impl fmt::Display for RunVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunVerdict::ModelsFound => "models-found",
            RunVerdict::NoModels => "no-models",
            RunVerdict::Timeout => "timeout",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunResult {
    pub id: String,
    pub ti: TiModeName,
    pub structure: String,
    pub models: usize,
    pub wall_secs: f64,
    pub verdict: RunVerdict,
    pub max_step: Option<usize>,
    #[serde(skip)]
    pub no_model: Option<NoModelReason>,
    #[serde(skip)]
    pub explanations: Vec<Explanation>,
}

/// `TiMode` rendered through its `Display`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TiModeName(pub TiMode);

impl Serialize for TiModeName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&self.0)
    }
}

/// Solves `entry` under `config`, giving up after `timeout`. Running out of
/// time is a verdict, not an error.
pub fn run_entry(entry: &CorpusEntry, config: &Config, timeout: Duration) -> Result<RunResult, SolveError> {
    let domain = entry.domain();
    let start = Instant::now();
    let outcome = solve(&domain, &entry.story, config, &Deadline::after(timeout))?;
    let wall = start.elapsed();
    let verdict = if outcome.timed_out() {
        RunVerdict::Timeout
    } else if outcome.models.is_empty() {
        RunVerdict::NoModels
    } else {
        RunVerdict::ModelsFound
    };
    let explanations = if outcome.models.iter().any(|m| !m.abduced.is_empty()) {
        explain(&domain, &entry.story, &outcome.models)
    } else {
        Vec::new()
    };
    Ok(RunResult {
        id: entry.id.clone(),
        ti: TiModeName(config.ti_mode),
        structure: config.customer_structure.to_string(),
        models: outcome.models.len(),
        wall_secs: wall.as_secs_f64(),
        verdict,
        max_step: outcome.max_step(),
        no_model: outcome.no_model,
        explanations,
    })
}

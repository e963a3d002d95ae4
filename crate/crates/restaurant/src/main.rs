use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use restaurant::bench::{self, ComparisonTable};
use restaurant::corpus::{load_corpus, run_entry, CorpusEntry, Distribution, RunResult, RunVerdict};
use restaurant::{default_corpus_path, report, Deadline};
use restaurant_core::activities::CustomerStructure;
use restaurant_core::queries::QueryError;
use restaurant_core::reasoner::explain;
use restaurant_core::{
    answer, build_restaurant_domain, generate_queries, parse_query, parse_story, solve, validate_story, Config,
    DomainSpec, SolveOutcome, Story, TiMode,
};

const EXIT_USAGE: u8 = 1;
const EXIT_NO_MODELS: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;

/// Narrative comprehension for restaurant stories.
#[derive(Parser)]
#[command(name = "restaurant", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the mental models of a story.
    Solve(SolveArgs),
    /// Answer a query against every model of a story.
    Ask(AskArgs),
    /// Generate questions about a story.
    GenQuestions(GenArgs),
    /// Time the scenario classes of a corpus under both intention modes.
    Bench(BenchArgs),
    /// Solve every corpus entry once.
    CorpusRun(CorpusRunArgs),
    /// Check a story or a corpus without solving.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct ReasonerArgs {
    /// Intention mode: mixed or new-only.
    #[arg(long, default_value = "mixed")]
    ti: TiMode,
    /// Customer activity structure: s-flat, s1 or s2.
    #[arg(long, default_value = "s2")]
    structure: CustomerStructure,
    /// Length of the reasoning timeline; derived from the story by default.
    #[arg(long)]
    max_steps: Option<usize>,
    /// Largest number of abduced interferences per model.
    #[arg(long, default_value_t = 2)]
    max_interferences: usize,
    /// Give up after this many seconds.
    #[arg(long)]
    timeout: Option<f64>,
}

impl ReasonerArgs {
    fn config(&self) -> Config {
        Config {
            max_steps: self.max_steps,
            max_interferences: self.max_interferences,
            ..Config::new(self.ti, self.structure)
        }
    }

    fn budget(&self) -> Result<Deadline> {
        match self.timeout {
            None => Ok(Deadline::never()),
            Some(s) => Ok(Deadline::after(seconds(s)?)),
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Logic form file.
    #[arg(long)]
    story: PathBuf,
    #[command(flatten)]
    reasoner: ReasonerArgs,
    /// Write the models as JSON to this file instead of standard output.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct AskArgs {
    #[arg(long)]
    story: PathBuf,
    /// A query such as `query_yes_no(pay(nicole,b))`; may be repeated.
    #[arg(long, required = true)]
    query: Vec<String>,
    #[command(flatten)]
    reasoner: ReasonerArgs,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    story: PathBuf,
    /// Skip the first N candidate actions of each question form.
    #[arg(long, default_value_t = 0)]
    n: usize,
    /// Stop after the first M candidate actions of each question form.
    #[arg(long, default_value_t = 10)]
    m: usize,
    /// Also answer each question.
    #[arg(long)]
    answer: bool,
    #[command(flatten)]
    reasoner: ReasonerArgs,
}

#[derive(Args)]
struct CorpusArg {
    /// Corpus XML; defaults to $RESTAURANT_CORPUS, then the bundled corpus.
    #[arg(long)]
    corpus: Option<PathBuf>,
}

impl CorpusArg {
    fn load(&self) -> Result<Vec<CorpusEntry>> {
        let path = self.corpus.clone().unwrap_or_else(default_corpus_path);
        load_corpus(&path).with_context(|| format!("loading {}", path.display()))
    }
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    corpus: CorpusArg,
    /// Runs per entry and configuration.
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// Per-run timeout in seconds.
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    /// Also compare customer structures on the `normal` class.
    #[arg(long)]
    structures: bool,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct CorpusRunArgs {
    #[command(flatten)]
    corpus: CorpusArg,
    #[arg(long, default_value = "mixed")]
    ti: TiMode,
    #[arg(long, default_value = "s2")]
    structure: CustomerStructure,
    /// Per-entry timeout in seconds.
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    /// Entries solved in parallel; results are reported in corpus order.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, conflicts_with = "corpus", required_unless_present = "corpus")]
    story: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Ask(a) => cmd_ask(a),
        Command::GenQuestions(a) => cmd_gen(a),
        Command::Bench(a) => cmd_bench(a),
        Command::CorpusRun(a) => cmd_corpus_run(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn seconds(s: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(s).with_context(|| format!("invalid timeout {s}"))
}

fn load_story(path: &Path) -> Result<(Story, DomainSpec)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut story = parse_story(&text).with_context(|| format!("parsing {}", path.display()))?;
    if story.id.is_none() {
        story.id = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    }
    let domain = build_restaurant_domain(&story.entities)?;
    Ok((story, domain))
}

fn run_solver(story: &Story, domain: &DomainSpec, args: &ReasonerArgs) -> Result<SolveOutcome> {
    Ok(solve(domain, story, &args.config(), &args.budget()?)?)
}

fn outcome_code(outcome: &SolveOutcome) -> u8 {
    if outcome.timed_out() {
        EXIT_TIMEOUT
    } else if outcome.models.is_empty() {
        EXIT_NO_MODELS
    } else {
        0
    }
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) if p != Path::new("-") => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        _ => Ok(std::io::stdout().write_all(bytes)?),
    }
}

fn cmd_solve(a: SolveArgs) -> Result<u8> {
    let (story, domain) = load_story(&a.story)?;
    let outcome = run_solver(&story, &domain, &a.reasoner)?;
    let explanations = if outcome.models.iter().any(|m| !m.abduced.is_empty()) {
        explain(&domain, &story, &outcome.models)
    } else {
        Vec::new()
    };
    let value = report::outcome_json(&domain, &story, &a.reasoner.config(), &outcome, &explanations);
    let mut bytes = serde_json::to_vec_pretty(&value)?;
    bytes.push(b'\n');
    write_output(a.json.as_deref(), &bytes)?;
    if a.json.is_some() {
        println!(
            "{} model(s), max step {}",
            outcome.models.len(),
            outcome.max_step().map_or("-".into(), |s| s.to_string())
        );
    }
    if let Some(reason) = &outcome.no_model {
        eprintln!("no models: {reason}");
    }
    if outcome.timed_out() {
        eprintln!("timed out; the models listed are partial");
    }
    Ok(outcome_code(&outcome))
}

fn cmd_ask(a: AskArgs) -> Result<u8> {
    let queries = a
        .query
        .iter()
        .map(|q| parse_query(q).with_context(|| format!("query `{q}`")))
        .collect::<Result<Vec<_>>>()?;
    let (story, domain) = load_story(&a.story)?;
    let outcome = run_solver(&story, &domain, &a.reasoner)?;
    if outcome.timed_out() {
        eprintln!("timed out before all models were found");
        return Ok(EXIT_TIMEOUT);
    }
    for q in &queries {
        match answer(q, &domain, &outcome.models) {
            Ok(ans) => println!("{ans}"),
            Err(QueryError::NoModels) => {
                if let Some(reason) = &outcome.no_model {
                    eprintln!("no models: {reason}");
                }
                return Ok(EXIT_NO_MODELS);
            }
            Err(e) => return Err(e).with_context(|| format!("query `{q}`")),
        }
    }
    Ok(0)
}

fn cmd_gen(a: GenArgs) -> Result<u8> {
    let (story, domain) = load_story(&a.story)?;
    let queries = generate_queries(&story, &domain, a.n, a.m)?;
    if !a.answer {
        for q in &queries {
            println!("{q}");
        }
        return Ok(0);
    }
    let outcome = run_solver(&story, &domain, &a.reasoner)?;
    let code = outcome_code(&outcome);
    if code != 0 {
        return Ok(code);
    }
    for q in &queries {
        println!("{q}\t{}", answer(q, &domain, &outcome.models)?);
    }
    Ok(0)
}

fn cmd_bench(a: BenchArgs) -> Result<u8> {
    if a.reps == 0 {
        bail!("--reps must be at least 1");
    }
    let entries = a.corpus.load()?;
    let timeout = seconds(a.timeout)?;
    let mut rows = bench::bench(&entries, &bench::mode_configs(CustomerStructure::S2), a.reps, timeout)?;
    print!("{}", ComparisonTable(&bench::compare_modes(&rows)));
    if a.structures {
        let normal: Vec<CorpusEntry> = entries.iter().filter(|e| e.class.as_deref() == Some("normal")).cloned().collect();
        let by_structure = bench::bench(&normal, &bench::structure_configs(TiMode::Mixed), a.reps, timeout)?;
        println!();
        for r in &by_structure {
            println!("{:<10}{:<8}{:>10.4} s", r.class, r.structure, r.mean_secs);
        }
        rows.extend(by_structure);
    }
    if let Some(p) = &a.csv {
        let mut buf = Vec::new();
        bench::write_csv(&rows, &mut buf)?;
        write_output(Some(p), &buf)?;
    }
    if let Some(p) = &a.json {
        write_output(Some(p), &serde_json::to_vec_pretty(&rows)?)?;
    }
    Ok(if rows.iter().any(|r| r.timeouts > 0) { EXIT_TIMEOUT } else { 0 })
}

fn cmd_corpus_run(a: CorpusRunArgs) -> Result<u8> {
    let entries = a.corpus.load()?;
    let config = Config::new(a.ti, a.structure);
    let timeout = seconds(a.timeout)?;
    let threads = a.threads.max(1);
    let mut results: Vec<Option<Result<RunResult, String>>> = vec![None; entries.len()];
    std::thread::scope(|s| {
        for (chunk_entries, chunk_results) in entries
            .chunks(entries.len().div_ceil(threads).max(1))
            .zip(results.chunks_mut(entries.len().div_ceil(threads).max(1)))
        {
            let config = &config;
            s.spawn(move || {
                for (e, slot) in chunk_entries.iter().zip(chunk_results) {
                    *slot = Some(run_entry(e, config, timeout).map_err(|err| err.to_string()));
                }
            });
        }
    });
    let mut code = 0;
    let mut done = Vec::new();
    for (e, r) in entries.iter().zip(results) {
        let r = r.expect("every entry ran").map_err(anyhow::Error::msg).with_context(|| format!("story `{}`", e.id))?;
        let expected = e.expects_models(a.ti);
        let note = match (r.verdict, expected) {
            (RunVerdict::Timeout, _) => {
                code = EXIT_TIMEOUT;
                "timeout"
            }
            (RunVerdict::NoModels, true) => {
                code = code.max(EXIT_NO_MODELS);
                "UNEXPECTED"
            }
            (RunVerdict::ModelsFound, false) => "unexpected models",
            _ => "ok",
        };
        println!(
            "{:<24}{:<14}{:>6} model(s){:>10.3} s  max step {:>3}  {note}",
            r.id,
            r.verdict.to_string(),
            r.models,
            r.wall_secs,
            r.max_step.map_or("-".into(), |s| s.to_string())
        );
        done.push(r);
    }
    if let Some(p) = &a.csv {
        let mut buf = Vec::new();
        bench::write_csv(&done, &mut buf)?;
        write_output(Some(p), &buf)?;
    }
    if let Some(p) = &a.json {
        write_output(Some(p), &serde_json::to_vec_pretty(&done)?)?;
    }
    Ok(code)
}

fn cmd_validate(a: ValidateArgs) -> Result<u8> {
    if let Some(path) = &a.corpus {
        let entries = load_corpus(path).with_context(|| format!("loading {}", path.display()))?;
        println!("{} entries", entries.len());
        println!("{}", Distribution::of(&entries));
        return Ok(0);
    }
    let path = a.story.expect("clap requires --story or --corpus");
    let (story, domain) = load_story(&path)?;
    let diags = validate_story(&story, &domain);
    for d in &diags {
        eprintln!("{}: {d}", path.display());
    }
    if diags.is_empty() {
        println!("ok");
        Ok(0)
    } else {
        Ok(EXIT_USAGE)
    }
}

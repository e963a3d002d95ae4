//! Timing of scenario classes under several configurations.
//!
//! Entries run one at a time so that measurements do not contend.

use std::fmt;
use std::io::Write;
use std::time::Duration;

use restaurant_core::activities::CustomerStructure;
use restaurant_core::reasoner::SolveError;
use restaurant_core::{Config, TiMode};
use serde::Serialize;

use crate::corpus::{run_entry, CorpusEntry, RunVerdict, TiModeName};

/// Mean over all runs of one scenario class under one configuration.
#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub class: String,
    pub ti: TiModeName,
    pub structure: String,
    pub entries: usize,
    pub reps: usize,
    pub mean_secs: f64,
    /// Largest Max Step over the class's entries; empty when some entry
    /// had no models.
    pub max_step: Option<usize>,
    pub timeouts: usize,
}

/// The classes of `entries` in order of first appearance.
pub fn classes(entries: &[CorpusEntry]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for c in entries.iter().filter_map(|e| e.class.as_ref()) {
        if !out.contains(c) {
            out.push(c.clone());
        }
    }
    out
}

/// Runs every classed entry `reps` times under each configuration.
///
/// Each entry gets one untimed warm-up run per configuration, and the
/// configurations take turns within every repetition so that drift does not
/// favour one of them.
pub fn bench(
    entries: &[CorpusEntry],
    configs: &[Config],
    reps: usize,
    timeout: Duration,
) -> Result<Vec<BenchRow>, SolveError> {
    let reps = reps.max(1);
    let mut rows = Vec::new();
    for class in classes(entries) {
        let members: Vec<&CorpusEntry> = entries.iter().filter(|e| e.class.as_ref() == Some(&class)).collect();
        let mut total = vec![0.0; configs.len()];
        let mut timeouts = vec![0; configs.len()];
        let mut max_step = vec![Some(0); configs.len()];
        for entry in &members {
            for (k, config) in configs.iter().enumerate() {
                let r = run_entry(entry, config, timeout)?;
                max_step[k] = match (max_step[k], r.max_step) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    _ => None,
                };
            }
            for _ in 0..reps {
                for (k, config) in configs.iter().enumerate() {
                    let r = run_entry(entry, config, timeout)?;
                    total[k] += r.wall_secs;
                    if r.verdict == RunVerdict::Timeout {
                        timeouts[k] += 1;
                    }
                }
            }
        }
        for (k, config) in configs.iter().enumerate() {
            rows.push(BenchRow {
                class: class.clone(),
                ti: TiModeName(config.ti_mode),
                structure: config.customer_structure.to_string(),
                entries: members.len(),
                reps,
                mean_secs: total[k] / (members.len() * reps) as f64,
                max_step: max_step[k],
                timeouts: timeouts[k],
            });
        }
    }
    Ok(rows)
}

/// Both intention modes under `structure`.
pub fn mode_configs(structure: CustomerStructure) -> [Config; 2] {
    [Config::new(TiMode::Mixed, structure), Config::new(TiMode::NewOnly, structure)]
}

/// Every customer structure under `mode`.
pub fn structure_configs(mode: TiMode) -> [Config; 3] {
    [CustomerStructure::Flat, CustomerStructure::S1, CustomerStructure::S2].map(|s| Config::new(mode, s))
}

/// One line of the mode comparison: a class under mixed and new-only.
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonRow {
    pub class: String,
    pub mixed_secs: f64,
    pub mixed_max_step: Option<usize>,
    pub new_only_secs: f64,
    pub new_only_max_step: Option<usize>,
    /// Relative time increase of new-only over mixed, in percent.
    pub increase_pct: f64,
}

/// Pairs mixed and new-only rows of the same class and structure.
pub fn compare_modes(rows: &[BenchRow]) -> Vec<ComparisonRow> {
    let mut out = Vec::new();
    for m in rows.iter().filter(|r| r.ti.0 == TiMode::Mixed) {
        let Some(n) = rows
            .iter()
            .find(|r| r.ti.0 == TiMode::NewOnly && r.class == m.class && r.structure == m.structure)
        else {
            continue;
        };
        out.push(ComparisonRow {
            class: m.class.clone(),
            mixed_secs: m.mean_secs,
            mixed_max_step: m.max_step,
            new_only_secs: n.mean_secs,
            new_only_max_step: n.max_step,
            increase_pct: if m.mean_secs > 0.0 {
                100.0 * (n.mean_secs - m.mean_secs) / m.mean_secs
            } else {
                0.0
            },
        });
    }
    out
}

/// Text rendering of [`compare_modes`].
pub struct ComparisonTable<'a>(pub &'a [ComparisonRow]);

impl fmt::Display for ComparisonTable<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let step = |s: Option<usize>| s.map_or_else(|| "-".to_string(), |x| x.to_string());
        writeln!(
            f,
            "{:<14}{:>12}{:>10}{:>14}{:>10}{:>12}",
            "scenario", "mixed (s)", "max step", "new-only (s)", "max step", "increase"
        )?;
        for r in self.0 {
            writeln!(
                f,
                "{:<14}{:>12.4}{:>10}{:>14.4}{:>10}{:>11.1}%",
                r.class,
                r.mixed_secs,
                step(r.mixed_max_step),
                r.new_only_secs,
                step(r.new_only_max_step),
                r.increase_pct
            )?;
        }
        Ok(())
    }
}

pub fn write_csv<T: Serialize>(rows: &[T], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

//! Benchmark suites: loading problem/grammar pairs from disk and running a
//! synthesizer over them with timeouts.
//!
//! A suite is a directory of `<name>.problem.json` files. Each problem uses
//! `<name>.herbg` when present and the shared `default.herbg` otherwise.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::Node;
use crate::constraints::{parse_constraint, Constraint, ConstraintError};
use crate::grammar::Grammar;
use crate::grammar_text::{parse_grammar, GrammarTextError};
use crate::interpreter::{IOExample, Problem};
use crate::probe::{probe_until, ProbeConfig};
use crate::search::{synth_until, IteratorConfig, IteratorKind, SearchError, SynthFlag};

pub const PROBLEM_SUFFIX: &str = ".problem.json";
pub const GRAMMAR_SUFFIX: &str = ".herbg";
pub const DEFAULT_GRAMMAR: &str = "default.herbg";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub name: String,
    pub start_symbol: String,
    pub examples: Vec<IOExample>,
    /// Constraint s-expressions.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<String>,
}

impl ProblemFile {
    pub fn problem(&self) -> Problem {
        Problem::new(self.name.clone(), self.examples.clone())
    }

    pub fn parsed_constraints(&self) -> Result<Vec<Constraint>, ConstraintError> {
        self.constraints
            .iter()
            .map(|c| parse_constraint(c))
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Json {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Grammar {
        path: PathBuf,
        source: GrammarTextError,
    },
    #[error("{path}: {source}")]
    Constraint {
        path: PathBuf,
        source: ConstraintError,
    },
    #[error("{0}: problem has no examples")]
    NoExamples(PathBuf),
    #[error("{0}: examples bind different variables")]
    InconsistentInputs(PathBuf),
    #[error("{0}: no grammar for this problem and no {DEFAULT_GRAMMAR}")]
    MissingGrammar(PathBuf),
}

fn read(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Reads and validates a problem file.
pub fn load_problem(path: &Path) -> Result<ProblemFile, LoadError> {
    let text = read(path)?;
    let file: ProblemFile = serde_json::from_str(&text).map_err(|e| LoadError::Json {
        path: path.to_owned(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let Some(first) = file.examples.first() else {
        return Err(LoadError::NoExamples(path.to_owned()));
    };
    let vars: BTreeSet<&String> = first.input.keys().collect();
    if file
        .examples
        .iter()
        .any(|e| e.input.keys().collect::<BTreeSet<_>>() != vars)
    {
        return Err(LoadError::InconsistentInputs(path.to_owned()));
    }
    file.parsed_constraints()
        .map_err(|source| LoadError::Constraint {
            path: path.to_owned(),
            source,
        })?;
    Ok(file)
}

pub fn load_grammar(path: &Path) -> Result<Grammar, LoadError> {
    parse_grammar(&read(path)?).map_err(|source| LoadError::Grammar {
        path: path.to_owned(),
        source,
    })
}

/// Every problem in `dir` with its grammar, in lexicographic name order.
pub fn get_all_problem_grammar_pairs(dir: &Path) -> Result<Vec<(ProblemFile, Grammar)>, LoadError> {
    let entries = fs::read_dir(dir).map_err(|source| LoadError::Io {
        path: dir.to_owned(),
        source,
    })?;
    let mut names = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| LoadError::Io {
            path: dir.to_owned(),
            source,
        })?;
        let file_name = entry.file_name();
        if let Some(stem) = file_name
            .to_str()
            .and_then(|f| f.strip_suffix(PROBLEM_SUFFIX))
        {
            names.push(stem.to_owned());
        }
    }
    names.sort();
    let default_path = dir.join(DEFAULT_GRAMMAR);
    let mut default: Option<Grammar> = None;
    let mut pairs = Vec::with_capacity(names.len());
    for name in names {
        let problem_path = dir.join(format!("{name}{PROBLEM_SUFFIX}"));
        let problem = load_problem(&problem_path)?;
        let own = dir.join(format!("{name}{GRAMMAR_SUFFIX}"));
        let grammar = if own.is_file() {
            load_grammar(&own)?
        } else if default_path.is_file() {
            match &default {
                Some(g) => g.clone(),
                None => default.insert(load_grammar(&default_path)?).clone(),
            }
        } else {
            return Err(LoadError::MissingGrammar(problem_path));
        };
        pairs.push((problem, grammar));
    }
    Ok(pairs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Synthesizer {
    Search(IteratorKind),
    Probe,
}

impl std::str::FromStr for Synthesizer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "probe" => Ok(Synthesizer::Probe),
            other => other.parse().map(Synthesizer::Search),
        }
    }
}

/// How to attack each problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizerSpec {
    pub synthesizer: Synthesizer,
    pub max_depth: Option<usize>,
    pub max_size: Option<usize>,
    /// For probe, the per-cycle budget (default 5000).
    pub max_enumerations: Option<usize>,
    pub cycles: usize,
    pub allow_evaluation_errors: bool,
}

impl SynthesizerSpec {
    pub fn new(synthesizer: Synthesizer) -> Self {
        SynthesizerSpec {
            synthesizer,
            max_depth: None,
            max_size: None,
            max_enumerations: None,
            cycles: 3,
            allow_evaluation_errors: true,
        }
    }

    /// Iterator settings for one problem. MLFS on a grammar without
    /// probabilities falls back to uniform ones.
    pub fn iterator_config(
        &self,
        kind: IteratorKind,
        grammar: &Grammar,
        file: &ProblemFile,
    ) -> Result<IteratorConfig, ConstraintError> {
        let grammar = if kind == IteratorKind::Mlfs && !grammar.has_probabilities() {
            grammar.set_uniform_probabilities()
        } else {
            grammar.clone()
        };
        let mut config = IteratorConfig::new(kind, grammar, file.start_symbol.clone())
            .constraints(file.parsed_constraints()?);
        config.max_depth = self.max_depth;
        config.max_size = self.max_size;
        config.max_enumerations = self.max_enumerations;
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemRecord {
    pub name: String,
    pub solved: bool,
    pub flag: SynthFlag,
    pub wall_time_seconds: f64,
    pub enumerated: usize,
    /// Serialized AST of the returned program.
    pub program: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub problems: Vec<ProblemRecord>,
    pub solved_problems: usize,
    pub total: usize,
}

impl SuiteReport {
    pub fn new(problems: Vec<ProblemRecord>) -> Self {
        SuiteReport {
            solved_problems: problems
                .iter()
                .filter(|p| p.flag == SynthFlag::OptimalProgram)
                .count(),
            total: problems.len(),
            problems,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

struct Outcome {
    program: Option<Node>,
    flag: SynthFlag,
    enumerated: usize,
    timed_out: bool,
}

fn attempt(
    file: &ProblemFile,
    grammar: &Grammar,
    spec: &SynthesizerSpec,
    deadline: Option<Instant>,
) -> Result<Outcome, SearchError> {
    let problem = file.problem();
    match spec.synthesizer {
        Synthesizer::Search(kind) => {
            let config = spec.iterator_config(kind, grammar, file)?;
            let r = synth_until(&problem, &config, spec.allow_evaluation_errors, deadline)?;
            Ok(Outcome {
                program: r.program,
                flag: r.flag,
                enumerated: r.stats.enumerated,
                timed_out: r.stats.timed_out,
            })
        }
        Synthesizer::Probe => {
            let config = ProbeConfig {
                cycles: spec.cycles,
                max_depth: spec.max_depth,
                max_size: spec.max_size,
                max_enumerations: spec
                    .max_enumerations
                    .unwrap_or(ProbeConfig::default().max_enumerations),
                allow_evaluation_errors: spec.allow_evaluation_errors,
                constraints: file.parsed_constraints()?,
            };
            let r = probe_until(grammar, &file.start_symbol, &problem, &config, deadline)?;
            Ok(Outcome {
                flag: if r.program.is_some() {
                    SynthFlag::OptimalProgram
                } else {
                    SynthFlag::NoProgram
                },
                program: r.program,
                enumerated: r.enumerated,
                timed_out: r.timed_out,
            })
        }
    }
}

/// Runs one problem. A run that hits the timeout is recorded as unsolved with
/// the timeout as its time.
pub fn run_problem(
    file: &ProblemFile,
    grammar: &Grammar,
    spec: &SynthesizerSpec,
    timeout: Option<Duration>,
) -> ProblemRecord {
    let mut record = ProblemRecord {
        name: file.name.clone(),
        solved: false,
        flag: SynthFlag::NoProgram,
        wall_time_seconds: 0.0,
        enumerated: 0,
        program: None,
        error: None,
    };
    if timeout.is_some_and(|t| t.is_zero()) {
        return record;
    }
    let start = Instant::now();
    let deadline = timeout.map(|t| start + t);
    match attempt(file, grammar, spec, deadline) {
        Ok(outcome) if outcome.timed_out && outcome.flag != SynthFlag::OptimalProgram => {
            record.enumerated = outcome.enumerated;
            record.wall_time_seconds = timeout.map_or(0.0, |t| t.as_secs_f64());
        }
        Ok(outcome) => {
            record.wall_time_seconds = start.elapsed().as_secs_f64();
            record.enumerated = outcome.enumerated;
            record.solved = outcome.flag == SynthFlag::OptimalProgram;
            record.flag = outcome.flag;
            record.program = outcome.program.and_then(|p| p.serialize().ok());
        }
        Err(e) => {
            record.wall_time_seconds = start.elapsed().as_secs_f64();
            record.error = Some(e.to_string());
        }
    }
    record
}

/// Runs every pair, up to `parallelism` at a time; records keep the input order.
pub fn run_suite(
    pairs: &[(ProblemFile, Grammar)],
    spec: &SynthesizerSpec,
    timeout: Option<Duration>,
    parallelism: usize,
) -> SuiteReport {
    let next = AtomicUsize::new(0);
    let records: Mutex<Vec<Option<ProblemRecord>>> = Mutex::new(vec![None; pairs.len()]);
    let workers = parallelism.clamp(1, pairs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((file, grammar)) = pairs.get(i) else {
                    break;
                };
                let record = run_problem(file, grammar, spec, timeout);
                records
                    .lock()
                    .expect("no worker panics while holding the lock")[i] = Some(record);
            });
        }
    });
    let records = records.into_inner().expect("workers finished");
    SuiteReport::new(
        records
            .into_iter()
            .map(|r| r.expect("every problem ran"))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interpreter::Value;

    const G0: &str = "Int = 1 | 2 | x\nInt = Int + Int\nInt = Int * Int\n";

    fn problem_json(name: &str, pairs: &[(i64, i64)]) -> String {
        let file = ProblemFile {
            name: name.into(),
            start_symbol: "Int".into(),
            examples: pairs
                .iter()
                .map(|&(i, o)| IOExample::new([("x", Value::Int(i))], o))
                .collect(),
            constraints: vec![],
        };
        serde_json::to_string(&file).unwrap()
    }

    #[test]
    fn loads_in_name_order_with_default_grammar() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        fs::write(dir.join("default.herbg"), G0).unwrap();
        fs::write(dir.join("b.problem.json"), problem_json("b", &[(1, 2)])).unwrap();
        fs::write(dir.join("a.problem.json"), problem_json("a", &[(1, 1)])).unwrap();
        fs::write(dir.join("a.herbg"), "Int = x | 1").unwrap();
        let pairs = get_all_problem_grammar_pairs(dir).unwrap();
        assert_eq!(
            pairs.iter().map(|p| p.0.name.as_str()).collect::<Vec<_>>(),
            ["a", "b"]
        );
        assert_eq!(pairs[0].1.len(), 2);
        assert_eq!(pairs[1].1.len(), 5);
    }

    #[test]
    fn load_errors() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        assert!(get_all_problem_grammar_pairs(dir).unwrap().is_empty());
        fs::write(dir.join("a.problem.json"), problem_json("a", &[(1, 1)])).unwrap();
        let err = get_all_problem_grammar_pairs(dir).unwrap_err();
        assert!(matches!(err, LoadError::MissingGrammar(_)));
        assert!(err.to_string().contains("a.problem.json"));
        fs::write(dir.join("default.herbg"), G0).unwrap();
        fs::write(dir.join("a.problem.json"), problem_json("a", &[])).unwrap();
        assert!(matches!(
            get_all_problem_grammar_pairs(dir),
            Err(LoadError::NoExamples(_))
        ));
        fs::write(
            dir.join("a.problem.json"),
            "{\"name\": \"a\",\n  \"start_symbol\": }",
        )
        .unwrap();
        match get_all_problem_grammar_pairs(dir) {
            Err(LoadError::Json { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn suite_runs_and_reports() {
        let g = parse_grammar(G0).unwrap();
        let ok: ProblemFile =
            serde_json::from_str(&problem_json("ok", &[(0, 1), (1, 3), (2, 5), (3, 7)])).unwrap();
        let bad: ProblemFile =
            serde_json::from_str(&problem_json("bad", &[(0, 1), (0, 2)])).unwrap();
        let pairs = vec![(ok, g.clone()), (bad, g)];
        let mut spec = SynthesizerSpec::new(Synthesizer::Search(IteratorKind::Bfs));
        spec.max_depth = Some(3);
        let serial = run_suite(&pairs, &spec, None, 1);
        assert_eq!(serial.total, 2);
        assert_eq!(serial.solved_problems, 1);
        assert_eq!(serial.problems[1].flag, SynthFlag::SuboptimalProgram);
        let parallel = run_suite(&pairs, &spec, None, 4);
        let strip = |r: &SuiteReport| {
            r.problems
                .iter()
                .map(|p| (p.flag, p.program.clone(), p.enumerated))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&serial), strip(&parallel));
        assert_eq!(SuiteReport::from_json(&serial.to_json()).unwrap(), serial);
        let zero = run_suite(&pairs, &spec, Some(Duration::ZERO), 2);
        assert_eq!(zero.solved_problems, 0);
        assert!(zero
            .problems
            .iter()
            .all(|p| p.wall_time_seconds == 0.0 && p.flag == SynthFlag::NoProgram));
    }
}

//! Program enumeration: top-down over uniform trees, and bottom-up by size.

mod bottom_up;
pub mod priority;
mod synth;
mod top_down;
mod uniform;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::Node;
use crate::constraints::{Constraint, ConstraintError};
use crate::grammar::Grammar;
use crate::interpreter::{Env, EvalError, TemplateError};

pub use bottom_up::BottomUpIterator;
pub use priority::{max_rulenode_log_probability, Bfs, Dfs, Mlfs, Priority, TopDownStrategy};
pub use synth::{synth, synth_until};
pub use top_down::TopDownIterator;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("grammar has no rule probabilities")]
    MissingProbabilities,
    #[error("rule {0} is not in the grammar")]
    UnknownRule(usize),
    #[error("hole with an empty domain")]
    EmptyDomain,
    #[error("start symbol `{0}` has no rules")]
    UnknownStartSymbol(String),
    #[error("grammar is recursive from `{0}`; set max_depth, max_size or max_enumerations")]
    Unbounded(String),
    #[error("bottom-up search needs max_size or max_depth on a recursive grammar")]
    BottomUpUnbounded,
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("evaluation failed: {0}")]
    Evaluation(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IteratorKind {
    Bfs,
    Dfs,
    Mlfs,
    BottomUp,
}

impl std::str::FromStr for IteratorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bfs" => Ok(IteratorKind::Bfs),
            "dfs" => Ok(IteratorKind::Dfs),
            "mlfs" => Ok(IteratorKind::Mlfs),
            "bottom-up" | "bottom_up" => Ok(IteratorKind::BottomUp),
            other => Err(format!("unknown iterator kind `{other}`")),
        }
    }
}

/// What to enumerate and when to stop.
#[derive(Debug, Clone)]
pub struct IteratorConfig {
    pub kind: IteratorKind,
    pub grammar: Grammar,
    pub start_symbol: String,
    /// Tree depth; holes count as leaves.
    pub max_depth: Option<usize>,
    /// Node count.
    pub max_size: Option<usize>,
    pub max_enumerations: Option<usize>,
    pub constraints: Vec<Constraint>,
    /// DFS only: exhaust each uniform tree before leaving it.
    pub dfs_over_shapes: bool,
    /// Bottom-up only: drop programs whose outputs on these inputs match a
    /// program already banked for the same nonterminal.
    pub observational_equivalence: Option<Vec<Env>>,
}

impl IteratorConfig {
    pub fn new(kind: IteratorKind, grammar: Grammar, start_symbol: impl Into<String>) -> Self {
        IteratorConfig {
            kind,
            grammar,
            start_symbol: start_symbol.into(),
            max_depth: None,
            max_size: None,
            max_enumerations: None,
            constraints: Vec::new(),
            dfs_over_shapes: false,
            observational_equivalence: None,
        }
    }

    pub fn max_depth(mut self, depth: usize) -> Self {
        self.max_depth = Some(depth);
        self
    }

    pub fn max_size(mut self, size: usize) -> Self {
        self.max_size = Some(size);
        self
    }

    pub fn max_enumerations(mut self, n: usize) -> Self {
        self.max_enumerations = Some(n);
        self
    }

    pub fn constraints(mut self, constraints: Vec<Constraint>) -> Self {
        self.constraints = constraints;
        self
    }

    pub fn dfs_over_shapes(mut self, on: bool) -> Self {
        self.dfs_over_shapes = on;
        self
    }

    pub fn observational_equivalence(mut self, inputs: Vec<Env>) -> Self {
        self.observational_equivalence = Some(inputs);
        self
    }

    /// Checks the configuration without building an iterator.
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.grammar.bytype(&self.start_symbol).is_empty() {
            return Err(SearchError::UnknownStartSymbol(self.start_symbol.clone()));
        }
        let recursive = is_recursive(&self.grammar, &self.start_symbol);
        match self.kind {
            IteratorKind::BottomUp => {
                if recursive && self.max_size.is_none() && self.max_depth.is_none() {
                    return Err(SearchError::BottomUpUnbounded);
                }
            }
            kind => {
                if recursive
                    && self.max_size.is_none()
                    && self.max_depth.is_none()
                    && self.max_enumerations.is_none()
                {
                    return Err(SearchError::Unbounded(self.start_symbol.clone()));
                }
                if kind == IteratorKind::Mlfs {
                    Mlfs.validate(&self.grammar)?;
                }
            }
        }
        Ok(())
    }

    /// Builds the configured iterator.
    pub fn iter(&self) -> Result<Box<dyn ProgramIterator + '_>, SearchError> {
        self.validate()?;
        Ok(match self.kind {
            IteratorKind::Bfs => Box::new(TopDownIterator::new(self, Box::new(Bfs))?),
            IteratorKind::Dfs => Box::new(TopDownIterator::new(
                self,
                Box::new(Dfs {
                    over_shapes: self.dfs_over_shapes,
                }),
            )?),
            IteratorKind::Mlfs => Box::new(TopDownIterator::new(self, Box::new(Mlfs))?),
            IteratorKind::BottomUp => Box::new(BottomUpIterator::new(self)?),
        })
    }
}

/// A stream of complete programs with bookkeeping for budgets and timeouts.
pub trait ProgramIterator: Iterator<Item = Node> {
    /// Programs emitted so far.
    fn enumerated(&self) -> usize;

    /// After the deadline the iterator stops, checking between emissions.
    fn set_deadline(&mut self, deadline: Option<Instant>);

    /// Whether the stream ended because of the deadline.
    fn timed_out(&self) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthFlag {
    OptimalProgram,
    SuboptimalProgram,
    NoProgram,
}

impl std::fmt::Display for SynthFlag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SynthFlag::OptimalProgram => "optimal_program",
            SynthFlag::SuboptimalProgram => "suboptimal_program",
            SynthFlag::NoProgram => "no_program",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SearchStats {
    pub enumerated: usize,
    pub elapsed: Duration,
    pub timed_out: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthResult {
    pub program: Option<Node>,
    pub flag: SynthFlag,
    /// Examples solved by `program`, out of the total.
    pub solved: usize,
    pub total: usize,
    pub stats: SearchStats,
}

/// Whether some nonterminal reachable from `start` can derive itself.
pub fn is_recursive(grammar: &Grammar, start: &str) -> bool {
    let edges: BTreeMap<&str, BTreeSet<&str>> = grammar
        .nonterminals()
        .map(|nt| {
            let succ = grammar
                .bytype(nt)
                .iter()
                .flat_map(|&r| grammar.childtypes(r).unwrap_or(&[]))
                .map(String::as_str)
                .collect();
            (nt, succ)
        })
        .collect();
    // Colour-marking DFS for a cycle.
    fn visit<'a>(
        n: &'a str,
        edges: &BTreeMap<&'a str, BTreeSet<&'a str>>,
        state: &mut BTreeMap<&'a str, bool>,
    ) -> bool {
        match state.get(n) {
            Some(true) => return true,
            Some(false) => return false,
            None => {}
        }
        state.insert(n, true);
        let cyclic = edges
            .get(n)
            .is_some_and(|succ| succ.iter().any(|m| visit(m, edges, state)));
        state.insert(n, false);
        cyclic
    }
    visit(start, &edges, &mut BTreeMap::new())
}

/// Longest derivation chain from `start` in a non-recursive grammar.
pub(crate) fn acyclic_depth(grammar: &Grammar, start: &str) -> usize {
    fn go(grammar: &Grammar, nt: &str) -> usize {
        grammar
            .bytype(nt)
            .iter()
            .map(|&r| {
                1 + grammar
                    .childtypes(r)
                    .unwrap_or(&[])
                    .iter()
                    .map(|c| go(grammar, c))
                    .max()
                    .unwrap_or(0)
            })
            .max()
            .unwrap_or(0)
    }
    go(grammar, start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar_text::parse_grammar;

    fn g0() -> Grammar {
        parse_grammar("Int = 1 | 2 | x\nInt = Int + Int\nInt = Int * Int").unwrap()
    }

    #[test]
    fn recursion_detection() {
        assert!(is_recursive(&g0(), "Int"));
        let g = parse_grammar("S = f(A, B)\nA = 1 | g(B)\nB = x").unwrap();
        assert!(!is_recursive(&g, "S"));
        assert_eq!(acyclic_depth(&g, "S"), 3);
    }

    #[test]
    fn config_validation() {
        let unbounded = IteratorConfig::new(IteratorKind::Bfs, g0(), "Int");
        assert_eq!(
            unbounded.validate(),
            Err(SearchError::Unbounded("Int".into()))
        );
        assert!(unbounded.clone().max_enumerations(3).validate().is_ok());
        let bad = IteratorConfig::new(IteratorKind::Bfs, g0(), "Str").max_depth(2);
        assert_eq!(
            bad.validate(),
            Err(SearchError::UnknownStartSymbol("Str".into()))
        );
        let mlfs = IteratorConfig::new(IteratorKind::Mlfs, g0(), "Int").max_depth(2);
        assert_eq!(mlfs.validate(), Err(SearchError::MissingProbabilities));
        let bu = IteratorConfig::new(IteratorKind::BottomUp, g0(), "Int").max_enumerations(3);
        assert_eq!(bu.validate(), Err(SearchError::BottomUpUnbounded));
    }

    #[test]
    fn kind_parsing() {
        assert_eq!(
            "bottom-up".parse::<IteratorKind>(),
            Ok(IteratorKind::BottomUp)
        );
        assert!("astar".parse::<IteratorKind>().is_err());
        assert_eq!(
            serde_json::to_string(&SynthFlag::OptimalProgram).unwrap(),
            "\"optimal_program\""
        );
    }
}

//! Grammar-based enumerative program synthesis.
//!
//! Program spaces are (probabilistic) context-free grammars; programs are ASTs
//! whose nodes hold rule indices. Search iterators enumerate complete programs
//! top-down over uniform trees (fixed-shape families of programs) or bottom-up by
//! size, an interpreter checks them against input/output examples, and the Probe
//! synthesizer reweights the grammar between most-likely-first search cycles.

pub mod ast;
pub mod constraints;
pub mod domain;
pub mod grammar;
pub mod grammar_text;
pub mod harness;
pub mod interpreter;
pub mod probe;
pub mod search;

pub use ast::{parse_node, AstError, Node, ParseError};
pub use constraints::{
    check_program, decompose, match_pattern, parse_constraint, parse_constraints, Constraint,
    ConstraintError, Pattern, Propagation, SolverState,
};
pub use domain::Domain;
pub use grammar::{Grammar, GrammarError, Rule, Symbol, Token};
pub use grammar_text::{parse_grammar, serialize_grammar, GrammarTextError};
pub use harness::{
    get_all_problem_grammar_pairs, load_grammar, load_problem, run_problem, run_suite, LoadError,
    ProblemFile, ProblemRecord, SuiteReport, Synthesizer, SynthesizerSpec,
};
pub use interpreter::{
    evaluate, execute_on_input, run_examples, to_expression, Env, EvalError, Expr, IOExample,
    InterpretError, Interpreter, Problem, Value,
};
pub use probe::{
    fitness, get_promising_programs_with_fitness, modify_grammar_probe, probe, probe_until,
    CycleResult, ProbeConfig, ProbeResult, PromisingProgram,
};
pub use search::{
    max_rulenode_log_probability, synth, synth_until, IteratorConfig, IteratorKind, Priority,
    ProgramIterator, SearchError, SearchStats, SynthFlag, SynthResult,
};

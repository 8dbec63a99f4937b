use std::time::Instant;

use crate::interpreter::{Interpreter, Problem};

use super::{IteratorConfig, SearchError, SearchStats, SynthFlag, SynthResult};

/// Runs the configured iterator against `problem` until a program solves every
/// example. Otherwise returns the program solving the most examples (earliest
/// on ties), or none if nothing was enumerated.
///
/// With `allow_evaluation_errors` a failing evaluation counts as unsolved;
/// without it the first failure aborts the search.
pub fn synth(
    problem: &Problem,
    config: &IteratorConfig,
    allow_evaluation_errors: bool,
) -> Result<SynthResult, SearchError> {
    synth_until(problem, config, allow_evaluation_errors, None)
}

/// [`synth`] with a cooperative deadline, checked between programs.
pub fn synth_until(
    problem: &Problem,
    config: &IteratorConfig,
    allow_evaluation_errors: bool,
    deadline: Option<Instant>,
) -> Result<SynthResult, SearchError> {
    let start = Instant::now();
    let interpreter = Interpreter::new(&config.grammar)?;
    let mut programs = config.iter()?;
    programs.set_deadline(deadline);
    let total = problem.examples.len();
    let mut best = None;
    let mut best_solved = 0;
    let mut flag = SynthFlag::NoProgram;
    for program in programs.by_ref() {
        let (solved, _) = interpreter.run_examples(&program, problem, allow_evaluation_errors)?;
        if solved == total {
            best = Some(program);
            best_solved = solved;
            flag = SynthFlag::OptimalProgram;
            break;
        }
        if best.is_none() || solved > best_solved {
            best = Some(program);
            best_solved = solved;
            flag = SynthFlag::SuboptimalProgram;
        }
    }
    Ok(SynthResult {
        program: best,
        flag,
        solved: best_solved,
        total,
        stats: SearchStats {
            enumerated: programs.enumerated(),
            elapsed: start.elapsed(),
            timed_out: programs.timed_out(),
        },
    })
}

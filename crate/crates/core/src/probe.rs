//! Probe: most-likely-first search cycles that reweight the grammar toward
//! rules used by programs solving some of the examples.

use std::collections::HashMap;
use std::time::Instant;

use crate::ast::Node;
use crate::constraints::Constraint;
use crate::grammar::Grammar;
use crate::interpreter::{Interpreter, Problem, Value};
use crate::search::{IteratorConfig, IteratorKind, SearchError, SynthFlag};

/// A program solving at least one example.
#[derive(Debug, Clone, PartialEq)]
pub struct PromisingProgram {
    pub program: Node,
    /// Fraction of examples solved, in (0, 1].
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub cycles: usize,
    pub max_depth: Option<usize>,
    pub max_size: Option<usize>,
    /// Per-cycle budget.
    pub max_enumerations: usize,
    /// When false, the first failing evaluation aborts the run.
    pub allow_evaluation_errors: bool,
    pub constraints: Vec<Constraint>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            cycles: 3,
            max_depth: None,
            max_size: None,
            max_enumerations: 5000,
            allow_evaluation_errors: true,
            constraints: Vec::new(),
        }
    }
}

/// Outcome of one enumeration cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleResult {
    /// Holds exactly the solution when `flag` is optimal.
    pub promising: Vec<PromisingProgram>,
    pub flag: SynthFlag,
    pub enumerated: usize,
    pub timed_out: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub program: Option<Node>,
    pub cycles: usize,
    pub enumerated: usize,
    pub timed_out: bool,
    /// The grammar as reweighted after the last completed cycle.
    pub grammar: Grammar,
}

/// Portion of the examples `program` solves; failed evaluations count as unsolved.
pub fn fitness(program: &Node, grammar: &Grammar, problem: &Problem) -> Result<f64, SearchError> {
    let interpreter = Interpreter::new(grammar)?;
    fitness_with(&interpreter, program, problem, true)
}

fn fitness_with(
    interpreter: &Interpreter,
    program: &Node,
    problem: &Problem,
    allow_errors: bool,
) -> Result<f64, SearchError> {
    let (solved, total) = interpreter.run_examples(program, problem, allow_errors)?;
    Ok(if total == 0 {
        0.0
    } else {
        solved as f64 / total as f64
    })
}

/// Enumerates one cycle's budget, collecting programs with positive fitness.
/// Programs with the same outputs on the example inputs are kept once, as the
/// smallest (then earliest) representative. Stops at the first program that
/// solves every example.
pub fn get_promising_programs_with_fitness(
    config: &IteratorConfig,
    problem: &Problem,
    allow_evaluation_errors: bool,
    deadline: Option<Instant>,
) -> Result<CycleResult, SearchError> {
    let interpreter = Interpreter::new(&config.grammar)?;
    let inputs = problem.inputs();
    let mut programs = config.iter()?;
    programs.set_deadline(deadline);
    let mut promising: Vec<PromisingProgram> = Vec::new();
    let mut by_outputs: HashMap<Vec<Option<Value>>, usize> = HashMap::new();
    let mut flag = SynthFlag::NoProgram;
    for program in programs.by_ref() {
        let fit = fitness_with(&interpreter, &program, problem, allow_evaluation_errors)?;
        if fit >= 1.0 {
            promising = vec![PromisingProgram {
                program,
                fitness: fit,
            }];
            flag = SynthFlag::OptimalProgram;
            break;
        }
        if fit <= 0.0 {
            continue;
        }
        flag = SynthFlag::SuboptimalProgram;
        let outputs = interpreter.output_vector(&program, &inputs);
        match by_outputs.get(&outputs) {
            Some(&i) => {
                if program.size() < promising[i].program.size() {
                    promising[i].program = program;
                }
            }
            None => {
                by_outputs.insert(outputs, promising.len());
                promising.push(PromisingProgram {
                    program,
                    fitness: fit,
                });
            }
        }
    }
    Ok(CycleResult {
        promising,
        flag,
        enumerated: programs.enumerated(),
        timed_out: programs.timed_out(),
    })
}

/// Reweights `grammar`: each rule's probability becomes `p^(1 - Fit)`, where
/// `Fit` is the best fitness among promising programs using the rule (0 if
/// none), renormalized per nonterminal. A grammar without probabilities is
/// treated as uniform. The input is not modified.
pub fn modify_grammar_probe(promising: &[PromisingProgram], grammar: &Grammar) -> Grammar {
    let base = if grammar.has_probabilities() {
        grammar.clone()
    } else {
        grammar.set_uniform_probabilities()
    };
    let old = base.log_probabilities().expect("probabilities set");
    let mut fit = vec![0.0f64; base.len()];
    for p in promising {
        for r in p.program.rules_used() {
            if let Some(f) = r.checked_sub(1).and_then(|i| fit.get_mut(i)) {
                *f = f.max(p.fitness);
            }
        }
    }
    let mut logs: Vec<f64> = old
        .iter()
        .zip(&fit)
        .map(|(&lp, &f)| if f >= 1.0 { 0.0 } else { lp * (1.0 - f) })
        .collect();
    for nt in base.nonterminals() {
        let rules = base.bytype(nt);
        let max = rules
            .iter()
            .map(|&r| logs[r - 1])
            .fold(f64::NEG_INFINITY, f64::max);
        let z = max
            + rules
                .iter()
                .map(|&r| (logs[r - 1] - max).exp())
                .sum::<f64>()
                .ln();
        for &r in rules {
            logs[r - 1] -= z;
        }
    }
    base.with_log_probabilities(logs)
        .expect("renormalized per nonterminal")
}

/// Runs up to `config.cycles` most-likely-first cycles, reweighting the
/// grammar after each cycle without a solution.
pub fn probe(
    grammar: &Grammar,
    start_symbol: &str,
    problem: &Problem,
    config: &ProbeConfig,
) -> Result<ProbeResult, SearchError> {
    probe_until(grammar, start_symbol, problem, config, None)
}

/// [`probe`] with a cooperative deadline.
pub fn probe_until(
    grammar: &Grammar,
    start_symbol: &str,
    problem: &Problem,
    config: &ProbeConfig,
    deadline: Option<Instant>,
) -> Result<ProbeResult, SearchError> {
    let mut current = if grammar.has_probabilities() {
        grammar.clone()
    } else {
        grammar.set_uniform_probabilities()
    };
    let mut result = ProbeResult {
        program: None,
        cycles: 0,
        enumerated: 0,
        timed_out: false,
        grammar: current.clone(),
    };
    for _ in 0..config.cycles {
        let mut iterator = IteratorConfig::new(IteratorKind::Mlfs, current, start_symbol)
            .max_enumerations(config.max_enumerations)
            .constraints(config.constraints.clone());
        iterator.max_depth = config.max_depth;
        iterator.max_size = config.max_size;
        let cycle = get_promising_programs_with_fitness(
            &iterator,
            problem,
            config.allow_evaluation_errors,
            deadline,
        )?;
        result.cycles += 1;
        result.enumerated += cycle.enumerated;
        if cycle.flag == SynthFlag::OptimalProgram {
            result.program = cycle.promising.into_iter().next().map(|p| p.program);
            return Ok(result);
        }
        if cycle.timed_out {
            result.timed_out = true;
            return Ok(result);
        }
        current = modify_grammar_probe(&cycle.promising, &iterator.grammar);
        result.grammar = current.clone();
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::parse_node;
    use crate::grammar_text::parse_grammar;
    use crate::interpreter::IOExample;

    fn g0() -> Grammar {
        parse_grammar("Int = 1 | 2 | x\nInt = Int + Int\nInt = Int * Int").unwrap()
    }

    fn example() -> Problem {
        Problem::new(
            "example",
            [(0, 1), (1, 3), (2, 5), (3, 7)]
                .into_iter()
                .map(|(i, o)| IOExample::new([("x", Value::Int(i))], o as i64))
                .collect(),
        )
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn fitness_examples() {
        let g = g0();
        assert_eq!(
            fitness(&parse_node("4{3,4{1,3}}").unwrap(), &g, &example()).unwrap(),
            1.0
        );
        assert_eq!(
            fitness(&parse_node("4{3,1}").unwrap(), &g, &example()).unwrap(),
            0.25
        );
        assert_eq!(
            fitness(&parse_node("3").unwrap(), &g, &example()).unwrap(),
            0.0
        );
    }

    #[test]
    fn update_arithmetic() {
        let g = g0().set_uniform_probabilities();
        let promising = [PromisingProgram {
            program: parse_node("4{3,1}").unwrap(),
            fitness: 0.5,
        }];
        let updated = modify_grammar_probe(&promising, &g);
        let p = updated.probabilities().unwrap();
        // 0.2^0.5 for used rules, 0.2 otherwise, over their sum
        let boosted = 0.2f64.sqrt();
        let z = 3.0 * boosted + 2.0 * 0.2;
        let expected = [boosted / z, 0.2 / z, boosted / z, boosted / z, 0.2 / z];
        for (a, b) in p.iter().zip(expected) {
            assert!(close(*a, b, 1e-12));
        }
        assert!(close(p[0], 0.256778, 1e-6));
        assert!(close(p[1], 0.114835, 1e-6));
        assert!(close(p.iter().sum::<f64>(), 1.0, 1e-9));
        assert!(
            close(g.probability(1).unwrap(), 0.2, 1e-15),
            "input grammar untouched"
        );
    }

    #[test]
    fn empty_evidence_is_identity() {
        let g = g0()
            .with_probabilities(&[0.4, 0.1, 0.3, 0.15, 0.05])
            .unwrap();
        let updated = modify_grammar_probe(&[], &g);
        for (a, b) in updated
            .probabilities()
            .unwrap()
            .iter()
            .zip(g.probabilities().unwrap())
        {
            assert!(close(*a, b, 1e-12));
        }
    }

    #[test]
    fn full_fitness_gets_maximal_boost() {
        let g = g0().set_uniform_probabilities();
        let promising = [PromisingProgram {
            program: parse_node("3").unwrap(),
            fitness: 1.0,
        }];
        let p = modify_grammar_probe(&promising, &g)
            .probabilities()
            .unwrap();
        assert!(close(p[2], 1.0 / (1.0 + 4.0 * 0.2), 1e-12));
    }

    #[test]
    fn three_enumerations_collect_one_leaf() {
        let g = g0().set_uniform_probabilities();
        let c = IteratorConfig::new(IteratorKind::Mlfs, g, "Int").max_enumerations(3);
        let r = get_promising_programs_with_fitness(&c, &example(), true, None).unwrap();
        assert_eq!(r.enumerated, 3);
        assert_eq!(r.flag, SynthFlag::SuboptimalProgram);
        assert_eq!(r.promising.len(), 1);
        assert_eq!(r.promising[0].program.serialize().unwrap(), "1");
        assert_eq!(r.promising[0].fitness, 0.25);
    }

    #[test]
    fn dedup_keeps_smallest() {
        let g = g0().set_uniform_probabilities();
        let c = IteratorConfig::new(IteratorKind::Mlfs, g, "Int")
            .max_depth(3)
            .max_enumerations(400);
        let p = Problem::new(
            "p",
            vec![
                IOExample::new([("x", Value::Int(1))], 2),
                IOExample::new([("x", Value::Int(2))], 0),
            ],
        );
        let r = get_promising_programs_with_fitness(&c, &p, true, None).unwrap();
        let two = r
            .promising
            .iter()
            .find(|q| q.program.serialize().unwrap() == "2")
            .unwrap();
        assert_eq!(two.fitness, 0.5);
        let interp = Interpreter::new(&g0()).unwrap();
        let mut seen = std::collections::HashSet::new();
        for q in &r.promising {
            assert!(seen.insert(interp.output_vector(&q.program, &p.inputs())));
        }
    }

    #[test]
    fn probe_solves_example() {
        let config = ProbeConfig {
            max_depth: Some(5),
            ..ProbeConfig::default()
        };
        let r = probe(&g0(), "Int", &example(), &config).unwrap();
        let program = r.program.unwrap();
        assert_eq!(fitness(&program, &g0(), &example()).unwrap(), 1.0);
        assert!(r.cycles <= 3);
    }

    #[test]
    fn zero_cycles_and_unsatisfiable() {
        let config = ProbeConfig {
            cycles: 0,
            max_depth: Some(3),
            ..ProbeConfig::default()
        };
        assert_eq!(
            probe(&g0(), "Int", &example(), &config).unwrap().program,
            None
        );
        let bad = Problem::new(
            "bad",
            vec![
                IOExample::new([("x", Value::Int(0))], 1),
                IOExample::new([("x", Value::Int(0))], 2),
            ],
        );
        let config = ProbeConfig {
            max_depth: Some(3),
            max_enumerations: 300,
            ..ProbeConfig::default()
        };
        let r = probe(&g0(), "Int", &bad, &config).unwrap();
        assert_eq!(r.program, None);
        assert_eq!(r.cycles, 3);
        let sum: f64 = r.grammar.probabilities().unwrap().iter().sum();
        assert!(close(sum, 1.0, 1e-9));
    }

    #[test]
    fn deterministic() {
        let config = ProbeConfig {
            max_depth: Some(4),
            max_enumerations: 200,
            ..ProbeConfig::default()
        };
        let p = Problem::new(
            "sq",
            (0..4)
                .map(|i| IOExample::new([("x", Value::Int(i))], i * i + 2))
                .collect(),
        );
        let a = probe(&g0(), "Int", &p, &config).unwrap();
        let b = probe(&g0(), "Int", &p, &config).unwrap();
        assert_eq!(a, b);
    }
}

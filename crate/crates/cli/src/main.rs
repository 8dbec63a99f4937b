use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sprout::harness::{
    get_all_problem_grammar_pairs, load_grammar, load_problem, run_suite, Synthesizer,
    SynthesizerSpec,
};
use sprout::{synth, Interpreter, IteratorConfig, IteratorKind};

#[derive(Parser)]
#[command(
    name = "sprout",
    version,
    about = "Enumerative program synthesis from input/output examples"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a program solving one problem.
    Solve(SolveArgs),
    /// Run a synthesizer over every problem in a suite directory.
    Bench(BenchArgs),
    /// Print the programs of a grammar, one serialized AST per line.
    Enumerate(EnumerateArgs),
}

#[derive(Args)]
struct Bounds {
    #[arg(long)]
    max_depth: Option<usize>,
    /// Node-count bound.
    #[arg(long)]
    max_size: Option<usize>,
    #[arg(long)]
    max_enumerations: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    grammar: PathBuf,
    #[arg(long)]
    problem: PathBuf,
    /// bfs, dfs, mlfs or bottom-up.
    #[arg(long, default_value = "bfs")]
    iterator: IteratorKind,
    #[command(flatten)]
    bounds: Bounds,
    /// Count failing evaluations as unsolved instead of aborting.
    #[arg(long)]
    allow_eval_errors: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    suite: PathBuf,
    /// bfs, dfs, mlfs, bottom-up or probe.
    #[arg(long, default_value = "probe")]
    synthesizer: Synthesizer,
    /// Probe cycles.
    #[arg(long, default_value_t = 3)]
    cycles: usize,
    #[command(flatten)]
    bounds: Bounds,
    /// Per-problem timeout in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    /// Where to write the JSON report.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Abort a problem on its first failing evaluation.
    #[arg(long)]
    strict_eval: bool,
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long)]
    grammar: PathBuf,
    #[arg(long)]
    start: String,
    #[arg(long, default_value = "bfs")]
    iterator: IteratorKind,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    max_size: Option<usize>,
    /// Stop after this many programs.
    #[arg(long)]
    limit: Option<usize>,
}

fn solve(args: SolveArgs) -> Result<()> {
    let grammar = load_grammar(&args.grammar)?;
    let file = load_problem(&args.problem)?;
    let grammar = if args.iterator == IteratorKind::Mlfs && !grammar.has_probabilities() {
        grammar.set_uniform_probabilities()
    } else {
        grammar
    };
    let mut config = IteratorConfig::new(args.iterator, grammar, file.start_symbol.clone())
        .constraints(file.parsed_constraints()?);
    config.max_depth = args.bounds.max_depth;
    config.max_size = args.bounds.max_size;
    config.max_enumerations = args.bounds.max_enumerations;
    let result = synth(&file.problem(), &config, args.allow_eval_errors)?;
    match &result.program {
        Some(program) => {
            let expr = Interpreter::new(&config.grammar)?.to_expression(program)?;
            println!("program: {}", program.serialize()?);
            println!("expression: {expr}");
        }
        None => println!("program: none"),
    }
    println!("flag: {}", result.flag);
    println!("solved: {}/{}", result.solved, result.total);
    println!(
        "enumerated: {} in {:.3}s",
        result.stats.enumerated,
        result.stats.elapsed.as_secs_f64()
    );
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let pairs = get_all_problem_grammar_pairs(&args.suite)?;
    let mut spec = SynthesizerSpec::new(args.synthesizer);
    spec.cycles = args.cycles;
    spec.max_depth = args.bounds.max_depth;
    spec.max_size = args.bounds.max_size;
    spec.max_enumerations = args.bounds.max_enumerations;
    spec.allow_evaluation_errors = !args.strict_eval;
    let timeout = match args.timeout {
        Some(t) if !(t >= 0.0 && t.is_finite()) => {
            bail!("--timeout must be a non-negative number of seconds")
        }
        Some(t) => Some(Duration::from_secs_f64(t)),
        None => None,
    };
    let report = run_suite(&pairs, &spec, timeout, args.parallelism);
    for p in &report.problems {
        println!(
            "{:<24} {:<18} {:>8.3}s {:>8} {}",
            p.name,
            p.flag.to_string(),
            p.wall_time_seconds,
            p.enumerated,
            p.error.as_deref().or(p.program.as_deref()).unwrap_or("-")
        );
    }
    println!("solved {}/{}", report.solved_problems, report.total);
    if let Some(path) = args.report {
        fs::write(&path, report.to_json() + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn enumerate(args: EnumerateArgs) -> Result<()> {
    let grammar = load_grammar(&args.grammar)?;
    let grammar = if args.iterator == IteratorKind::Mlfs && !grammar.has_probabilities() {
        grammar.set_uniform_probabilities()
    } else {
        grammar
    };
    let mut config = IteratorConfig::new(args.iterator, grammar, args.start);
    config.max_depth = args.max_depth;
    config.max_size = args.max_size;
    config.max_enumerations = args.limit;
    let mut out = std::io::stdout().lock();
    for program in config.iter()? {
        use std::io::Write;
        if writeln!(out, "{}", program.serialize()?).is_err() {
            break;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => solve(args),
        Command::Bench(args) => bench(args),
        Command::Enumerate(args) => enumerate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

//! Semantics: turning ASTs into expressions and evaluating them.
//!
//! Rule templates are flat token sequences. They are compiled once per grammar
//! into small expression skeletons with numbered slots for the rule's children.
//! The supported object language:
//!
//! | form                        | meaning                                          |
//! |-----------------------------|--------------------------------------------------|
//! | `a + b`, `a - b`, `a * b`   | 64-bit wrapping integer arithmetic               |
//! | `a == b`                    | equality of two values of the same type          |
//! | `a <= b`                    | integer comparison                               |
//! | `concat(s, t)`              | string concatenation                             |
//! | `length(s)`                 | number of characters                             |
//! | `substring(s, i, j)`        | characters `i..=j`, 1-based; `i = j + 1` is empty |
//! | `replace(s, old, new)`      | replace all occurrences (`old` empty: unchanged) |
//! | `if(c, a, b)`               | conditional; only the taken branch is evaluated  |
//! | `true`, `false`             | boolean literals                                 |
//!
//! Any other identifier is a variable looked up in the input environment.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::Node;
use crate::grammar::{Grammar, Symbol, Token};

/// A runtime value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Str(String),
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "integer",
            Value::Str(_) => "string",
            Value::Bool(_) => "boolean",
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => write!(f, "{}", Token::Str(s.clone())),
        }
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::Int(n)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_owned())
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

/// Variable bindings for one evaluation.
pub type Env = BTreeMap<String, Value>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("type error: {0}")]
    TypeMismatch(String),
    #[error("index out of bounds: {0}")]
    OutOfBounds(String),
    #[error("program contains a hole")]
    IncompleteProgram,
    #[error("rule {0} is not in the grammar")]
    UnknownRule(usize),
}

impl EvalError {
    /// True for missing bindings, as opposed to failures of the program itself.
    pub fn is_environment_error(&self) -> bool {
        matches!(self, EvalError::UnboundVariable(_))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("rule {rule}: {message}")]
pub struct TemplateError {
    pub rule: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Le,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Le => "<=",
        }
    }

    fn from_symbol(s: &str) -> Option<BinOp> {
        Some(match s {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "==" => BinOp::Eq,
            "<=" => BinOp::Le,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Concat,
    Length,
    Substring,
    Replace,
    If,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Concat => "concat",
            Func::Length => "length",
            Func::Substring => "substring",
            Func::Replace => "replace",
            Func::If => "if",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Length => 1,
            Func::Concat => 2,
            Func::Substring | Func::Replace | Func::If => 3,
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "concat" => Func::Concat,
            "length" => Func::Length,
            "substring" => Func::Substring,
            "replace" => Func::Replace,
            "if" => Func::If,
            _ => return None,
        })
    }
}

/// An executable expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Lit(Value),
    Var(String),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit(v) => write!(f, "{v}"),
            Expr::Var(name) => f.write_str(name),
            Expr::Binary(op, a, b) => {
                let side = |f: &mut fmt::Formatter<'_>, e: &Expr| match e {
                    Expr::Binary(..) => write!(f, "({e})"),
                    _ => write!(f, "{e}"),
                };
                side(f, a)?;
                write!(f, " {} ", op.symbol())?;
                side(f, b)
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Compiled rule body; `Slot(k)` is the k-th child.
#[derive(Debug, Clone, PartialEq)]
enum Template {
    Slot(usize),
    Lit(Value),
    Var(String),
    Binary(BinOp, Box<Template>, Box<Template>),
    Call(Func, Vec<Template>),
}

struct TemplateParser<'a> {
    symbols: &'a [Symbol],
    pos: usize,
    slots: usize,
}

impl<'a> TemplateParser<'a> {
    fn peek_op(&self) -> Option<&'a str> {
        match self.symbols.get(self.pos) {
            Some(Symbol::Terminal(Token::Op(op))) => Some(op),
            _ => None,
        }
    }

    fn expect_op(&mut self, op: &str) -> Result<(), String> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            Err(format!("expected `{op}` at token {}", self.pos + 1))
        }
    }

    fn comparison(&mut self) -> Result<Template, String> {
        let lhs = self.additive()?;
        match self.peek_op().and_then(BinOp::from_symbol) {
            Some(op @ (BinOp::Eq | BinOp::Le)) => {
                self.pos += 1;
                let rhs = self.additive()?;
                Ok(Template::Binary(op, Box::new(lhs), Box::new(rhs)))
            }
            _ => Ok(lhs),
        }
    }

    fn additive(&mut self) -> Result<Template, String> {
        let mut lhs = self.multiplicative()?;
        while let Some(op @ (BinOp::Add | BinOp::Sub)) = self.peek_op().and_then(BinOp::from_symbol)
        {
            self.pos += 1;
            let rhs = self.multiplicative()?;
            lhs = Template::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn multiplicative(&mut self) -> Result<Template, String> {
        let mut lhs = self.atom()?;
        while self.peek_op() == Some("*") {
            self.pos += 1;
            let rhs = self.atom()?;
            lhs = Template::Binary(BinOp::Mul, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<Template, String> {
        let sym = self
            .symbols
            .get(self.pos)
            .ok_or_else(|| "unexpected end of template".to_owned())?;
        self.pos += 1;
        match sym {
            Symbol::NonTerminal(_) => {
                self.slots += 1;
                Ok(Template::Slot(self.slots - 1))
            }
            Symbol::Terminal(Token::Int(n)) => Ok(Template::Lit(Value::Int(*n))),
            Symbol::Terminal(Token::Str(s)) => Ok(Template::Lit(Value::Str(s.clone()))),
            Symbol::Terminal(Token::Decimal(d)) => {
                Err(format!("decimal literal `{d}` has no runtime type"))
            }
            Symbol::Terminal(Token::Op(op)) if op == "(" => {
                let inner = self.comparison()?;
                self.expect_op(")")?;
                Ok(inner)
            }
            Symbol::Terminal(Token::Op(op)) => Err(format!("unexpected `{op}`")),
            Symbol::Terminal(Token::Ident(name)) => {
                if self.peek_op() == Some("(") {
                    let func = Func::from_name(name)
                        .ok_or_else(|| format!("unknown function `{name}`"))?;
                    self.pos += 1;
                    let mut args = vec![self.comparison()?];
                    while self.peek_op() == Some(",") {
                        self.pos += 1;
                        args.push(self.comparison()?);
                    }
                    self.expect_op(")")?;
                    if args.len() != func.arity() {
                        return Err(format!(
                            "`{name}` takes {} arguments, got {}",
                            func.arity(),
                            args.len()
                        ));
                    }
                    Ok(Template::Call(func, args))
                } else {
                    Ok(match name.as_str() {
                        "true" => Template::Lit(Value::Bool(true)),
                        "false" => Template::Lit(Value::Bool(false)),
                        _ => Template::Var(name.clone()),
                    })
                }
            }
        }
    }
}

fn compile_template(symbols: &[Symbol]) -> Result<Template, String> {
    let mut parser = TemplateParser {
        symbols,
        pos: 0,
        slots: 0,
    };
    let t = parser.comparison()?;
    if parser.pos != symbols.len() {
        return Err(format!("trailing tokens from token {}", parser.pos + 1));
    }
    Ok(t)
}

/// Evaluator for the programs of one grammar.
#[derive(Debug, Clone)]
pub struct Interpreter {
    templates: Vec<Template>,
}

impl Interpreter {
    pub fn new(grammar: &Grammar) -> Result<Self, TemplateError> {
        let templates = grammar
            .indexed_rules()
            .map(|(i, rule)| {
                compile_template(&rule.rhs).map_err(|message| TemplateError { rule: i, message })
            })
            .collect::<Result<_, _>>()?;
        Ok(Interpreter { templates })
    }

    fn template(&self, rule: usize) -> Result<&Template, EvalError> {
        rule.checked_sub(1)
            .and_then(|i| self.templates.get(i))
            .ok_or(EvalError::UnknownRule(rule))
    }

    /// Expression for a complete program.
    pub fn to_expression(&self, node: &Node) -> Result<Expr, EvalError> {
        let Node::Rule { index, children } = node else {
            return Err(EvalError::IncompleteProgram);
        };
        let kids = children
            .iter()
            .map(|c| self.to_expression(c))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(instantiate(self.template(*index)?, &kids))
    }

    /// Evaluates a complete program directly, without building its expression.
    pub fn execute(&self, node: &Node, env: &Env) -> Result<Value, EvalError> {
        let Node::Rule { index, children } = node else {
            return Err(EvalError::IncompleteProgram);
        };
        self.run_template(self.template(*index)?, children, env)
    }

    fn run_template(&self, t: &Template, children: &[Node], env: &Env) -> Result<Value, EvalError> {
        match t {
            Template::Slot(k) => self.execute(&children[*k], env),
            Template::Lit(v) => Ok(v.clone()),
            Template::Var(name) => lookup(env, name),
            Template::Binary(op, a, b) => {
                let a = self.run_template(a, children, env)?;
                let b = self.run_template(b, children, env)?;
                binary(*op, a, b)
            }
            Template::Call(Func::If, args) => match self.run_template(&args[0], children, env)? {
                Value::Bool(true) => self.run_template(&args[1], children, env),
                Value::Bool(false) => self.run_template(&args[2], children, env),
                other => Err(EvalError::TypeMismatch(format!(
                    "if condition is {}",
                    other.type_name()
                ))),
            },
            Template::Call(func, args) => {
                let vals = args
                    .iter()
                    .map(|a| self.run_template(a, children, env))
                    .collect::<Result<Vec<_>, _>>()?;
                call(*func, vals)
            }
        }
    }

    /// Number of examples the program reproduces. With `allow_errors`, a failing
    /// evaluation counts as unsolved; otherwise the first error is returned.
    pub fn run_examples(
        &self,
        node: &Node,
        problem: &Problem,
        allow_errors: bool,
    ) -> Result<(usize, usize), EvalError> {
        let mut solved = 0;
        for ex in &problem.examples {
            match self.execute(node, &ex.input) {
                Ok(v) if v == ex.output => solved += 1,
                Ok(_) => {}
                Err(e) if !allow_errors => return Err(e),
                Err(_) => {}
            }
        }
        Ok((solved, problem.examples.len()))
    }

    /// Outputs on each example input; errors become `None`.
    pub fn output_vector(&self, node: &Node, inputs: &[Env]) -> Vec<Option<Value>> {
        inputs
            .iter()
            .map(|env| self.execute(node, env).ok())
            .collect()
    }
}

fn instantiate(t: &Template, kids: &[Expr]) -> Expr {
    match t {
        Template::Slot(k) => kids[*k].clone(),
        Template::Lit(v) => Expr::Lit(v.clone()),
        Template::Var(name) => Expr::Var(name.clone()),
        Template::Binary(op, a, b) => Expr::Binary(
            *op,
            Box::new(instantiate(a, kids)),
            Box::new(instantiate(b, kids)),
        ),
        Template::Call(f, args) => {
            Expr::Call(*f, args.iter().map(|a| instantiate(a, kids)).collect())
        }
    }
}

fn lookup(env: &Env, name: &str) -> Result<Value, EvalError> {
    env.get(name)
        .cloned()
        .ok_or_else(|| EvalError::UnboundVariable(name.to_owned()))
}

fn mismatch(what: &str, args: &[&Value]) -> EvalError {
    let types: Vec<&str> = args.iter().map(|v| v.type_name()).collect();
    EvalError::TypeMismatch(format!("{what} applied to ({})", types.join(", ")))
}

fn binary(op: BinOp, a: Value, b: Value) -> Result<Value, EvalError> {
    match (op, &a, &b) {
        (BinOp::Add, Value::Int(x), Value::Int(y)) => Ok(Value::Int(x.wrapping_add(*y))),
        (BinOp::Sub, Value::Int(x), Value::Int(y)) => Ok(Value::Int(x.wrapping_sub(*y))),
        (BinOp::Mul, Value::Int(x), Value::Int(y)) => Ok(Value::Int(x.wrapping_mul(*y))),
        (BinOp::Le, Value::Int(x), Value::Int(y)) => Ok(Value::Bool(x <= y)),
        (BinOp::Eq, _, _) if std::mem::discriminant(&a) == std::mem::discriminant(&b) => {
            Ok(Value::Bool(a == b))
        }
        _ => Err(mismatch(op.symbol(), &[&a, &b])),
    }
}

fn call(func: Func, args: Vec<Value>) -> Result<Value, EvalError> {
    match (func, args.as_slice()) {
        (Func::Concat, [Value::Str(a), Value::Str(b)]) => Ok(Value::Str(format!("{a}{b}"))),
        (Func::Length, [Value::Str(s)]) => Ok(Value::Int(s.chars().count() as i64)),
        (Func::Substring, [Value::Str(s), Value::Int(i), Value::Int(j)]) => {
            let len = s.chars().count() as i64;
            if *i < 1 || *j > len || *i > *j + 1 {
                return Err(EvalError::OutOfBounds(format!(
                    "substring({i}, {j}) of a string of length {len}"
                )));
            }
            Ok(Value::Str(
                s.chars()
                    .skip(*i as usize - 1)
                    .take((*j - *i + 1) as usize)
                    .collect(),
            ))
        }
        (Func::Replace, [Value::Str(s), Value::Str(old), Value::Str(new)]) => {
            if old.is_empty() {
                Ok(Value::Str(s.clone()))
            } else {
                Ok(Value::Str(s.replace(old.as_str(), new)))
            }
        }
        _ => Err(mismatch(func.name(), &args.iter().collect::<Vec<_>>())),
    }
}

/// Evaluates an expression in an environment.
pub fn evaluate(expr: &Expr, env: &Env) -> Result<Value, EvalError> {
    match expr {
        Expr::Lit(v) => Ok(v.clone()),
        Expr::Var(name) => lookup(env, name),
        Expr::Binary(op, a, b) => binary(*op, evaluate(a, env)?, evaluate(b, env)?),
        Expr::Call(Func::If, args) => match evaluate(&args[0], env)? {
            Value::Bool(true) => evaluate(&args[1], env),
            Value::Bool(false) => evaluate(&args[2], env),
            other => Err(EvalError::TypeMismatch(format!(
                "if condition is {}",
                other.type_name()
            ))),
        },
        Expr::Call(func, args) => {
            let vals = args
                .iter()
                .map(|a| evaluate(a, env))
                .collect::<Result<Vec<_>, _>>()?;
            call(*func, vals)
        }
    }
}

/// One input/output example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IOExample {
    pub input: Env,
    pub output: Value,
}

impl IOExample {
    pub fn new<I, K>(input: I, output: impl Into<Value>) -> Self
    where
        I: IntoIterator<Item = (K, Value)>,
        K: Into<String>,
    {
        IOExample {
            input: input.into_iter().map(|(k, v)| (k.into(), v)).collect(),
            output: output.into(),
        }
    }
}

/// A named example-based specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub name: String,
    pub examples: Vec<IOExample>,
}

impl Problem {
    pub fn new(name: impl Into<String>, examples: Vec<IOExample>) -> Self {
        Problem {
            name: name.into(),
            examples,
        }
    }

    pub fn inputs(&self) -> Vec<Env> {
        self.examples.iter().map(|e| e.input.clone()).collect()
    }
}

/// Converts a complete program into an expression.
pub fn to_expression(grammar: &Grammar, node: &Node) -> Result<Expr, InterpretError> {
    Ok(Interpreter::new(grammar)?.to_expression(node)?)
}

/// Evaluates a complete program on one input.
pub fn execute_on_input(
    grammar: &Grammar,
    node: &Node,
    env: &Env,
) -> Result<Value, InterpretError> {
    let expr = to_expression(grammar, node)?;
    Ok(evaluate(&expr, env)?)
}

/// Counts the examples a program solves.
pub fn run_examples(
    grammar: &Grammar,
    node: &Node,
    problem: &Problem,
    allow_errors: bool,
) -> Result<(usize, usize), InterpretError> {
    Ok(Interpreter::new(grammar)?.run_examples(node, problem, allow_errors)?)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterpretError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::parse_node;
    use crate::grammar_text::parse_grammar;
    use proptest::prelude::*;

    fn g0() -> Grammar {
        parse_grammar("Int = 1 | 2 | x\nInt = Int + Int\nInt = Int * Int").unwrap()
    }

    fn x(v: i64) -> Env {
        [("x".to_owned(), Value::Int(v))].into_iter().collect()
    }

    fn example_problem() -> Problem {
        Problem::new(
            "example",
            [(0, 1), (1, 3), (2, 5), (3, 7)]
                .into_iter()
                .map(|(i, o)| IOExample::new([("x", Value::Int(i))], o as i64))
                .collect(),
        )
    }

    #[test]
    fn expression_rendering() {
        let g = g0();
        let sol = parse_node("4{3,4{1,3}}").unwrap();
        assert_eq!(to_expression(&g, &sol).unwrap().to_string(), "x + (1 + x)");
        assert_eq!(
            to_expression(&g, &Node::leaf(1)).unwrap(),
            Expr::Lit(Value::Int(1))
        );
        assert_eq!(
            to_expression(&g, &parse_node("5{2,3}").unwrap())
                .unwrap()
                .to_string(),
            "2 * x"
        );
    }

    #[test]
    fn to_expression_rejects_holes() {
        let g = g0();
        let n = Node::node(
            4,
            vec![
                Node::leaf(1),
                Node::Hole {
                    domain: [1].into_iter().collect(),
                },
            ],
        );
        assert_eq!(
            to_expression(&g, &n),
            Err(InterpretError::Eval(EvalError::IncompleteProgram))
        );
    }

    #[test]
    fn evaluate_examples() {
        let g = g0();
        let e = to_expression(&g, &parse_node("4{3,4{1,3}}").unwrap()).unwrap();
        assert_eq!(evaluate(&e, &x(5)), Ok(Value::Int(11)));
        assert_eq!(evaluate(&Expr::Var("x".into()), &x(0)), Ok(Value::Int(0)));
        let e = Expr::Call(
            Func::Concat,
            vec![
                Expr::Call(
                    Func::Substring,
                    vec![
                        Expr::Lit("hello".into()),
                        Expr::Lit(Value::Int(1)),
                        Expr::Lit(Value::Int(2)),
                    ],
                ),
                Expr::Lit("!".into()),
            ],
        );
        assert_eq!(evaluate(&e, &Env::new()), Ok(Value::Str("he!".into())));
    }

    #[test]
    fn error_kinds_are_distinct() {
        let unbound = evaluate(&Expr::Var("y".into()), &x(1)).unwrap_err();
        assert!(unbound.is_environment_error());
        let mismatch = evaluate(
            &Expr::Binary(
                BinOp::Add,
                Box::new(Expr::Lit(1.into())),
                Box::new(Expr::Lit("a".into())),
            ),
            &Env::new(),
        )
        .unwrap_err();
        assert!(matches!(mismatch, EvalError::TypeMismatch(_)));
        assert!(!mismatch.is_environment_error());
        let sub = |i: i64, j: i64| {
            evaluate(
                &Expr::Call(
                    Func::Substring,
                    vec![
                        Expr::Lit("abc".into()),
                        Expr::Lit(i.into()),
                        Expr::Lit(j.into()),
                    ],
                ),
                &Env::new(),
            )
        };
        assert!(matches!(sub(0, 2), Err(EvalError::OutOfBounds(_))));
        assert!(matches!(sub(2, 4), Err(EvalError::OutOfBounds(_))));
        assert!(matches!(sub(3, 1), Err(EvalError::OutOfBounds(_))));
        assert_eq!(sub(2, 1), Ok(Value::Str(String::new())));
        assert_eq!(sub(1, 3), Ok(Value::Str("abc".into())));
    }

    #[test]
    fn execute_on_input_examples() {
        let g = g0();
        let run = |s: &str, v: i64| execute_on_input(&g, &parse_node(s).unwrap(), &x(v)).unwrap();
        assert_eq!(run("4{3,4{1,3}}", 5), Value::Int(11));
        assert_eq!(run("3", 7), Value::Int(7));
        assert_eq!(run("4{1,1}", -40), Value::Int(2));
    }

    #[test]
    fn run_examples_counts() {
        let g = g0();
        let p = example_problem();
        let count = |s: &str| run_examples(&g, &parse_node(s).unwrap(), &p, false).unwrap();
        assert_eq!(count("4{3,4{1,3}}"), (4, 4));
        assert_eq!(count("4{3,1}"), (1, 4));
        assert_eq!(
            run_examples(&g, &Node::leaf(1), &Problem::new("empty", vec![]), false).unwrap(),
            (0, 0)
        );
    }

    #[test]
    fn run_examples_error_policy() {
        let g = g0();
        let p = Problem::new("y", vec![IOExample::new([("y", Value::Int(1))], 1)]);
        let prog = Node::leaf(3);
        assert!(run_examples(&g, &prog, &p, false).is_err());
        assert_eq!(run_examples(&g, &prog, &p, true).unwrap(), (0, 1));
    }

    #[test]
    fn string_operations() {
        let g = parse_grammar(
            r#"S = s | "-" | concat(S, S) | substring(S, I, I) | replace(S, S, S) | if(B, S, S)
I = 1 | 2 | length(S) | I + I | I - I
B = I <= I | S == S"#,
        )
        .unwrap();
        let interp = Interpreter::new(&g).unwrap();
        let env: Env = [("s".to_owned(), Value::from("a-b-c"))]
            .into_iter()
            .collect();
        // replace(s, "-", s)
        let prog = parse_node("5{1,2,1}").unwrap();
        assert_eq!(
            interp.execute(&prog, &env),
            Ok(Value::Str("aa-b-cba-b-cc".into()))
        );
        // substring(s, 1 + 1, length(s))
        let prog = parse_node("4{1,10{7,7},9{1}}").unwrap();
        assert_eq!(interp.execute(&prog, &env), Ok(Value::Str("-b-c".into())));
        // if(length(s) <= 2, "-", s)
        let prog = parse_node("6{12{9{1},8},2,1}").unwrap();
        assert_eq!(interp.execute(&prog, &env), Ok(Value::Str("a-b-c".into())));
        assert_eq!(
            interp.to_expression(&prog).unwrap().to_string(),
            "if(length(s) <= 2, \"-\", s)"
        );
        // s == "-"
        let prog = parse_node("6{13{1,2},1,2}").unwrap();
        assert_eq!(interp.execute(&prog, &env), Ok(Value::Str("-".into())));
    }

    #[test]
    fn template_errors() {
        let g = parse_grammar("S = frob ( S ) | x").unwrap();
        assert_eq!(Interpreter::new(&g).unwrap_err().rule, 1);
        let g = parse_grammar("S = concat ( S ) | x").unwrap();
        assert!(Interpreter::new(&g).is_err());
        let g = parse_grammar("S = 0.5").unwrap();
        assert!(Interpreter::new(&g).is_err());
        let g = parse_grammar("S = x y").unwrap();
        assert!(Interpreter::new(&g).is_err());
    }

    #[test]
    fn wrapping_arithmetic() {
        let e = Expr::Binary(
            BinOp::Mul,
            Box::new(Expr::Lit(Value::Int(i64::MAX))),
            Box::new(Expr::Lit(Value::Int(2))),
        );
        assert_eq!(evaluate(&e, &Env::new()), Ok(Value::Int(-2)));
    }

    /// Independent reference semantics for G0, written against rule numbers.
    fn reference_eval(n: &Node, x: i64) -> i64 {
        let kids = n.children();
        match n.rule_index().unwrap() {
            1 => 1,
            2 => 2,
            3 => x,
            4 => reference_eval(&kids[0], x).wrapping_add(reference_eval(&kids[1], x)),
            5 => reference_eval(&kids[0], x).wrapping_mul(reference_eval(&kids[1], x)),
            _ => unreachable!(),
        }
    }

    fn arb_tree(depth: u32) -> impl Strategy<Value = Node> {
        let leaf = (1usize..=3).prop_map(Node::leaf);
        leaf.prop_recursive(depth, 64, 2, |inner| {
            (4usize..=5, inner.clone(), inner).prop_map(|(r, a, b)| Node::node(r, vec![a, b]))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn matches_reference_evaluator(n in arb_tree(5), v in any::<i64>()) {
            let interp = Interpreter::new(&g0()).unwrap();
            prop_assert_eq!(interp.execute(&n, &x(v)), Ok(Value::Int(reference_eval(&n, v))));
        }

        #[test]
        fn compositional_and_deterministic(n in arb_tree(4), v in -100i64..100) {
            let g = g0();
            let interp = Interpreter::new(&g).unwrap();
            let expr = interp.to_expression(&n).unwrap();
            let direct = interp.execute(&n, &x(v));
            prop_assert_eq!(evaluate(&expr, &x(v)), direct.clone());
            prop_assert_eq!(execute_on_input(&g, &n, &x(v)), direct.map_err(Into::into));
            prop_assert_eq!(evaluate(&expr, &x(v)), evaluate(&expr, &x(v)));
        }
    }
}

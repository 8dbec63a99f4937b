//! Program constraints, uniform-tree decomposition and domain propagation.
//!
//! Constraints are written as s-expressions:
//!
//! ```text
//! (forbidden (rule 4 (var a) (var a)))          ; no `t + t`
//! (ordered (rule 4 (var a) (var b)) (a b))      ; `a + b` only with a <= b
//! (forbidden (domain (4 5) (rule 1) (var a)))   ; no `1 + _` or `1 * _`
//! ```
//!
//! A pattern node with no child patterns matches any children. `ordered`
//! compares bound subtrees by their serialized text, lexicographically.

mod decompose;
mod solver;
mod tree;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::ast::Node;
use crate::domain::Domain;

pub use decompose::decompose;
pub use solver::{Checkpoint, Propagation, SolverError, SolverState};

use tree::{Bindings, Tree, Tri};

/// A tree pattern.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Pattern {
    /// Matches a node with exactly this rule.
    Rule(usize, Vec<Pattern>),
    /// Matches a node whose rule is in the set.
    Domain(Domain, Vec<Pattern>),
    /// Matches any subtree; repeated names must bind equal subtrees.
    Var(String),
}

impl Pattern {
    pub fn var(name: &str) -> Pattern {
        Pattern::Var(name.to_owned())
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Pattern::Var(v) => out.push(v),
            Pattern::Rule(_, kids) | Pattern::Domain(_, kids) => {
                kids.iter().for_each(|k| k.collect_vars(out));
            }
        }
    }

    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kids = match self {
            Pattern::Var(v) => return write!(f, "(var {v})"),
            Pattern::Rule(r, kids) => {
                write!(f, "(rule {r}")?;
                kids
            }
            Pattern::Domain(d, kids) => {
                write!(f, "(domain (")?;
                for (i, r) in d.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{r}")?;
                }
                write!(f, ")")?;
                kids
            }
        };
        for k in kids {
            write!(f, " {k}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Constraint {
    /// No complete program may contain a match anywhere.
    Forbidden(Pattern),
    /// Wherever the pattern matches, the bound subtrees must be in
    /// non-decreasing order of their serialized text.
    Ordered(Pattern, Vec<String>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstraintError {
    #[error("ordered constraint names variable `{0}` which its pattern does not bind")]
    UnboundOrderVar(String),
    #[error("constraint syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
}

impl Constraint {
    pub fn forbidden(pattern: Pattern) -> Constraint {
        Constraint::Forbidden(pattern)
    }

    pub fn ordered(pattern: Pattern, vars: &[&str]) -> Result<Constraint, ConstraintError> {
        let bound = pattern.vars();
        if let Some(v) = vars.iter().find(|v| !bound.contains(v)) {
            return Err(ConstraintError::UnboundOrderVar((*v).to_owned()));
        }
        Ok(Constraint::Ordered(
            pattern,
            vars.iter().map(|v| (*v).to_owned()).collect(),
        ))
    }

    pub fn pattern(&self) -> &Pattern {
        match self {
            Constraint::Forbidden(p) | Constraint::Ordered(p, _) => p,
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Forbidden(p) => write!(f, "(forbidden {p})"),
            Constraint::Ordered(p, vars) => write!(f, "(ordered {p} ({}))", vars.join(" ")),
        }
    }
}

/// Matches `pattern` at the root of a complete program, returning the variable
/// bindings on success.
pub fn match_pattern(pattern: &Pattern, node: &Node) -> Option<BTreeMap<String, Node>> {
    let tree = Tree::from_node(node);
    let mut binds = Bindings::new();
    match tree.match_at(pattern, 0, &mut binds) {
        Tri::Yes => Some(
            binds
                .into_iter()
                .map(|(name, id)| (name.to_owned(), tree.to_node(id)))
                .collect(),
        ),
        _ => None,
    }
}

/// True iff the complete program satisfies every constraint at every subtree.
pub fn check_program(constraints: &[Constraint], node: &Node) -> bool {
    if constraints.is_empty() {
        return true;
    }
    let tree = Tree::from_node(node);
    !constraints.iter().any(|c| tree.violated_anywhere(c))
}

#[derive(Debug, Clone, PartialEq)]
enum SExpr {
    Atom(String, usize),
    List(Vec<SExpr>, usize),
}

impl SExpr {
    fn position(&self) -> usize {
        match self {
            SExpr::Atom(_, p) | SExpr::List(_, p) => *p,
        }
    }
}

fn syntax(position: usize, message: impl Into<String>) -> ConstraintError {
    ConstraintError::Syntax {
        position,
        message: message.into(),
    }
}

fn read_sexprs(text: &str) -> Result<Vec<SExpr>, ConstraintError> {
    let mut stack: Vec<(Vec<SExpr>, usize)> = vec![(Vec::new(), 0)];
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        match c {
            '(' => stack.push((Vec::new(), i)),
            ')' => {
                let (items, start) = stack.pop().unwrap();
                let parent = stack
                    .last_mut()
                    .ok_or_else(|| syntax(i, "unbalanced `)`"))?;
                parent.0.push(SExpr::List(items, start));
            }
            ';' => while chars.next_if(|&(_, c)| c != '\n').is_some() {},
            c if c.is_whitespace() => {}
            _ => {
                let mut atom = String::from(c);
                while let Some((_, c)) =
                    chars.next_if(|&(_, c)| !c.is_whitespace() && c != '(' && c != ')')
                {
                    atom.push(c);
                }
                stack.last_mut().unwrap().0.push(SExpr::Atom(atom, i));
            }
        }
    }
    if stack.len() != 1 {
        let (_, open) = stack.pop().unwrap();
        return Err(syntax(open, "unbalanced `(`"));
    }
    Ok(stack.pop().unwrap().0)
}

fn rule_number(e: &SExpr) -> Result<usize, ConstraintError> {
    match e {
        SExpr::Atom(a, p) => a
            .parse::<usize>()
            .ok()
            .filter(|&r| r > 0)
            .ok_or_else(|| syntax(*p, format!("expected rule index, found `{a}`"))),
        SExpr::List(_, p) => Err(syntax(*p, "expected rule index")),
    }
}

fn to_pattern(e: &SExpr) -> Result<Pattern, ConstraintError> {
    let SExpr::List(items, pos) = e else {
        return Err(syntax(e.position(), "expected a pattern list"));
    };
    let head = match items.first() {
        Some(SExpr::Atom(h, _)) => h.as_str(),
        _ => return Err(syntax(*pos, "expected `rule`, `domain` or `var`")),
    };
    match (head, &items[1..]) {
        ("var", [SExpr::Atom(name, _)]) => Ok(Pattern::Var(name.clone())),
        ("rule", [r, kids @ ..]) => Ok(Pattern::Rule(
            rule_number(r)?,
            kids.iter().map(to_pattern).collect::<Result<_, _>>()?,
        )),
        ("domain", [SExpr::List(rules, _), kids @ ..]) => {
            let domain: Domain = rules.iter().map(rule_number).collect::<Result<_, _>>()?;
            if domain.is_empty() {
                return Err(syntax(*pos, "empty domain"));
            }
            Ok(Pattern::Domain(
                domain,
                kids.iter().map(to_pattern).collect::<Result<_, _>>()?,
            ))
        }
        _ => Err(syntax(*pos, format!("malformed `{head}` pattern"))),
    }
}

fn to_constraint(e: &SExpr) -> Result<Constraint, ConstraintError> {
    let SExpr::List(items, pos) = e else {
        return Err(syntax(e.position(), "expected a constraint list"));
    };
    match items.as_slice() {
        [SExpr::Atom(h, _), p] if h == "forbidden" => Ok(Constraint::Forbidden(to_pattern(p)?)),
        [SExpr::Atom(h, _), p, SExpr::List(vars, _)] if h == "ordered" => {
            let names = vars
                .iter()
                .map(|v| match v {
                    SExpr::Atom(a, _) => Ok(a.as_str()),
                    SExpr::List(_, p) => Err(syntax(*p, "expected variable name")),
                })
                .collect::<Result<Vec<_>, _>>()?;
            Constraint::ordered(to_pattern(p)?, &names)
        }
        _ => Err(syntax(
            *pos,
            "expected (forbidden PATTERN) or (ordered PATTERN (VARS))",
        )),
    }
}

/// Parses one constraint.
pub fn parse_constraint(text: &str) -> Result<Constraint, ConstraintError> {
    match read_sexprs(text)?.as_slice() {
        [one] => to_constraint(one),
        _ => Err(syntax(0, "expected exactly one constraint")),
    }
}

/// Parses any number of constraints.
pub fn parse_constraints(text: &str) -> Result<Vec<Constraint>, ConstraintError> {
    read_sexprs(text)?.iter().map(to_constraint).collect()
}

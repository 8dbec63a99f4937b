//! Text format for grammars.
//!
//! ```text
//! # comment
//! Int = 1 | 2 | x
//! Int = Int + Int
//! S = 0.7 : concat ( S , S ) | 0.3 : name
//! 0.5 : B = true
//! ```
//!
//! Each alternative becomes one rule, numbered in source order. An identifier is
//! a nonterminal placeholder iff it appears as the left-hand side of some line;
//! everything else is a terminal. Probabilities are optional, given either per
//! alternative (`p : tokens`) or for a whole single-alternative line
//! (`p : N = tokens`); when present they must be given for every rule.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::grammar::{Grammar, GrammarError, Rule, Symbol, Token};

/// Tolerance on per-nonterminal probability sums in source text.
pub const SOURCE_PROBABILITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrammarTextError {
    #[error("{line}:{column}: {message}")]
    Lex {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid grammar: {0}")]
    Validation(String),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

#[derive(Debug, Clone, PartialEq)]
enum Lexeme {
    Int(i64),
    Decimal(String),
    Str(String),
    Ident(String),
    Op(&'static str),
    Eq,
    Bar,
    Colon,
}

impl Lexeme {
    fn is_operand(&self) -> bool {
        matches!(
            self,
            Lexeme::Int(_)
                | Lexeme::Decimal(_)
                | Lexeme::Str(_)
                | Lexeme::Ident(_)
                | Lexeme::Op(")")
        )
    }

    fn number(&self) -> Option<f64> {
        match self {
            Lexeme::Int(n) => Some(*n as f64),
            Lexeme::Decimal(s) => s.parse().ok(),
            _ => None,
        }
    }
}

const OPERATORS: [&str; 8] = ["==", "<=", "+", "-", "*", ",", "(", ")"];

fn lex_line(line: &str, line_no: usize) -> Result<Vec<(usize, Lexeme)>, GrammarTextError> {
    let chars: Vec<(usize, char)> = line.char_indices().collect();
    let mut out: Vec<(usize, Lexeme)> = Vec::new();
    let mut i = 0;
    let err = |col: usize, message: String| GrammarTextError::Lex {
        line: line_no,
        column: col + 1,
        message,
    };
    while i < chars.len() {
        let (col, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            break;
        }
        let prev_is_operand = out.last().is_some_and(|(_, l)| l.is_operand());
        let negative = c == '-'
            && !prev_is_operand
            && chars.get(i + 1).is_some_and(|(_, d)| d.is_ascii_digit());
        if c.is_ascii_digit() || negative {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                i += 1;
            }
            let mut decimal = false;
            if i + 1 < chars.len() && chars[i].1 == '.' && chars[i + 1].1.is_ascii_digit() {
                decimal = true;
                i += 1;
                while i < chars.len() && chars[i].1.is_ascii_digit() {
                    i += 1;
                }
            }
            let text: String = chars[start..i].iter().map(|(_, c)| c).collect();
            let lexeme = if decimal {
                Lexeme::Decimal(text)
            } else {
                Lexeme::Int(
                    text.parse()
                        .map_err(|_| err(col, format!("integer literal `{text}` out of range")))?,
                )
            };
            out.push((col, lexeme));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            out.push((
                col,
                Lexeme::Ident(chars[start..i].iter().map(|(_, c)| c).collect()),
            ));
            continue;
        }
        if c == '"' {
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err(err(col, "unterminated string literal".into())),
                    Some((_, '"')) => {
                        i += 1;
                        break;
                    }
                    Some((ecol, '\\')) => {
                        let escaped = match chars.get(i + 1).map(|(_, c)| *c) {
                            Some('"') => '"',
                            Some('\\') => '\\',
                            Some('n') => '\n',
                            Some('t') => '\t',
                            _ => return Err(err(*ecol, "invalid escape sequence".into())),
                        };
                        s.push(escaped);
                        i += 2;
                    }
                    Some((_, ch)) => {
                        s.push(*ch);
                        i += 1;
                    }
                }
            }
            out.push((col, Lexeme::Str(s)));
            continue;
        }
        let rest = &line[col..];
        if let Some(op) = OPERATORS.iter().find(|op| rest.starts_with(**op)) {
            out.push((col, Lexeme::Op(op)));
            i += op.chars().count();
            continue;
        }
        let structural = match c {
            '=' => Lexeme::Eq,
            '|' => Lexeme::Bar,
            ':' => Lexeme::Colon,
            _ => return Err(err(col, format!("unknown token `{c}`"))),
        };
        out.push((col, structural));
        i += 1;
    }
    Ok(out)
}

struct Alternative {
    probability: Option<f64>,
    tokens: Vec<Lexeme>,
}

struct Declaration {
    lhs: String,
    alternatives: Vec<Alternative>,
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> GrammarTextError {
    GrammarTextError::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Splits a leading `p :` off a token run.
fn probability_prefix(tokens: &[(usize, Lexeme)]) -> (Option<f64>, &[(usize, Lexeme)]) {
    if tokens.len() >= 2 && tokens[1].1 == Lexeme::Colon {
        if let Some(p) = tokens[0].1.number() {
            return (Some(p), &tokens[2..]);
        }
    }
    (None, tokens)
}

fn parse_declaration(
    tokens: Vec<(usize, Lexeme)>,
    line: usize,
) -> Result<Declaration, GrammarTextError> {
    let (line_prob, rest) = probability_prefix(&tokens);
    let (lhs, rest) = match rest {
        [(_, Lexeme::Ident(name)), (_, Lexeme::Eq), rest @ ..] => (name.clone(), rest),
        [(col, _), ..] => return Err(parse_err(line, col + 1, "expected `NonTerminal =`")),
        [] => return Err(parse_err(line, 1, "expected `NonTerminal =`")),
    };
    let mut alternatives = Vec::new();
    let eol = tokens.last().map_or(0, |(c, _)| c + 2);
    for group in rest.split(|(_, l)| *l == Lexeme::Bar) {
        let (probability, body) = probability_prefix(group);
        if body.is_empty() {
            let col = group.first().map_or(eol, |(c, _)| c + 1);
            return Err(parse_err(line, col, "empty alternative"));
        }
        if let Some((col, bad)) = body
            .iter()
            .find(|(_, l)| matches!(l, Lexeme::Eq | Lexeme::Colon))
        {
            let what = if *bad == Lexeme::Eq { "=" } else { ":" };
            return Err(parse_err(
                line,
                col + 1,
                format!("unexpected `{what}` in alternative"),
            ));
        }
        alternatives.push(Alternative {
            probability,
            tokens: body.iter().map(|(_, l)| l.clone()).collect(),
        });
    }
    if let Some(p) = line_prob {
        if alternatives.len() != 1 {
            return Err(parse_err(
                line,
                1,
                "a line-level probability needs exactly one alternative; prefix each alternative instead",
            ));
        }
        if alternatives[0].probability.is_some() {
            return Err(parse_err(line, 1, "probability given twice"));
        }
        alternatives[0].probability = Some(p);
    }
    Ok(Declaration { lhs, alternatives })
}

/// Parses grammar source text.
pub fn parse_grammar(text: &str) -> Result<Grammar, GrammarTextError> {
    let mut declarations = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let tokens = lex_line(line, i + 1)?;
        if tokens.is_empty() {
            continue;
        }
        declarations.push(parse_declaration(tokens, i + 1)?);
    }
    if declarations.is_empty() {
        return Err(GrammarTextError::Validation("no rules".into()));
    }
    let nonterminals: BTreeSet<&str> = declarations.iter().map(|d| d.lhs.as_str()).collect();

    let mut rules = Vec::new();
    let mut probabilities = Vec::new();
    for decl in &declarations {
        for alt in &decl.alternatives {
            let rhs = alt
                .tokens
                .iter()
                .map(|l| match l {
                    Lexeme::Ident(name) if nonterminals.contains(name.as_str()) => {
                        Symbol::NonTerminal(name.clone())
                    }
                    Lexeme::Ident(name) => Symbol::Terminal(Token::Ident(name.clone())),
                    Lexeme::Int(n) => Symbol::Terminal(Token::Int(*n)),
                    Lexeme::Decimal(s) => Symbol::Terminal(Token::Decimal(s.clone())),
                    Lexeme::Str(s) => Symbol::Terminal(Token::Str(s.clone())),
                    Lexeme::Op(op) => Symbol::Terminal(Token::Op((*op).to_owned())),
                    Lexeme::Eq | Lexeme::Bar | Lexeme::Colon => unreachable!("filtered by parser"),
                })
                .collect();
            rules.push(Rule::new(decl.lhs.clone(), rhs));
            probabilities.push(alt.probability);
        }
    }
    let grammar = Grammar::new(rules)?;

    let given = probabilities.iter().filter(|p| p.is_some()).count();
    if given == 0 {
        return Ok(grammar);
    }
    if given != probabilities.len() {
        return Err(GrammarTextError::Validation(
            "probabilities must be given for every rule or for none".into(),
        ));
    }
    let probs: Vec<f64> = probabilities.into_iter().map(Option::unwrap).collect();
    for nt in grammar.nonterminals() {
        let sum: f64 = grammar.bytype(nt).iter().map(|&i| probs[i - 1]).sum();
        if (sum - 1.0).abs() > SOURCE_PROBABILITY_TOLERANCE {
            return Err(GrammarTextError::Validation(format!(
                "probabilities of `{nt}` sum to {sum}"
            )));
        }
    }
    Ok(grammar.with_probabilities(&probs)?)
}

/// Writes one line per rule in index order. `parse_grammar` reads it back to an
/// equal grammar.
pub fn serialize_grammar(grammar: &Grammar) -> String {
    let mut out = String::new();
    for (i, rule) in grammar.indexed_rules() {
        if let Some(p) = grammar.probability(i) {
            out.push_str(&format_probability(p));
            out.push_str(" : ");
        }
        out.push_str(&rule.to_string());
        out.push('\n');
    }
    out
}

/// Shortest round-trip decimal, padded to at least nine significant digits.
fn format_probability(p: f64) -> String {
    let mut s = format!("{p}");
    if !s.contains('.') {
        s.push('.');
    }
    let significant = s
        .chars()
        .filter(char::is_ascii_digit)
        .skip_while(|&c| c == '0')
        .count();
    for _ in significant..9 {
        s.push('0');
    }
    s
}

//! Indexed context-free grammars with optional per-rule log-probabilities.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::domain::Domain;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrammarError {
    #[error("rule index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("rule {rule} references nonterminal `{symbol}` which has no rules")]
    UnknownNonTerminal { rule: usize, symbol: String },
    #[error("grammar has no rules")]
    Empty,
    #[error("expected {expected} probabilities, got {got}")]
    ProbabilityCount { expected: usize, got: usize },
    #[error("probabilities of `{nonterminal}` sum to {sum}, not 1")]
    NotNormalized { nonterminal: String, sum: f64 },
    #[error("invalid probability {value} for rule {rule}")]
    InvalidProbability { rule: usize, value: f64 },
    #[error("unknown nonterminal `{0}`")]
    NoSuchNonTerminal(String),
}

/// A terminal token of a rule template.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Token {
    Int(i64),
    /// Decimal literal, kept verbatim.
    Decimal(String),
    Str(String),
    /// Variable or function name.
    Ident(String),
    /// Operator or punctuation: `+ - * == <= , ( )`.
    Op(String),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Int(n) => write!(f, "{n}"),
            Token::Decimal(s) | Token::Ident(s) | Token::Op(s) => f.write_str(s),
            Token::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\t' => f.write_str("\\t")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Symbol {
    Terminal(Token),
    /// Placeholder for a child of the given nonterminal.
    NonTerminal(String),
}

/// A derivation rule `lhs -> rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub lhs: String,
    pub rhs: Vec<Symbol>,
}

impl Rule {
    pub fn new(lhs: impl Into<String>, rhs: Vec<Symbol>) -> Self {
        Rule {
            lhs: lhs.into(),
            rhs,
        }
    }

    pub fn arity(&self) -> usize {
        self.childtypes().count()
    }

    pub fn is_terminal(&self) -> bool {
        self.arity() == 0
    }

    pub fn childtypes(&self) -> impl Iterator<Item = &str> {
        self.rhs.iter().filter_map(|s| match s {
            Symbol::NonTerminal(nt) => Some(nt.as_str()),
            Symbol::Terminal(_) => None,
        })
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} =", self.lhs)?;
        for s in &self.rhs {
            match s {
                Symbol::Terminal(t) => write!(f, " {t}")?,
                Symbol::NonTerminal(nt) => write!(f, " {nt}")?,
            }
        }
        Ok(())
    }
}

/// An immutable grammar. Rule indices are 1-based and stable.
#[derive(Debug, Clone, PartialEq)]
pub struct Grammar {
    rules: Vec<Rule>,
    childtypes: Vec<Vec<String>>,
    log_probabilities: Option<Vec<f64>>,
    bytype: BTreeMap<String, Vec<usize>>,
}

/// Tolerance used when checking that per-nonterminal probabilities sum to one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

impl Grammar {
    pub fn new(rules: Vec<Rule>) -> Result<Self, GrammarError> {
        if rules.is_empty() {
            return Err(GrammarError::Empty);
        }
        let mut bytype: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, rule) in rules.iter().enumerate() {
            bytype.entry(rule.lhs.clone()).or_default().push(i + 1);
        }
        let childtypes: Vec<Vec<String>> = rules
            .iter()
            .map(|r| r.childtypes().map(str::to_owned).collect())
            .collect();
        for (i, cts) in childtypes.iter().enumerate() {
            if let Some(missing) = cts.iter().find(|c| !bytype.contains_key(*c)) {
                return Err(GrammarError::UnknownNonTerminal {
                    rule: i + 1,
                    symbol: missing.clone(),
                });
            }
        }
        Ok(Grammar {
            rules,
            childtypes,
            log_probabilities: None,
            bytype,
        })
    }

    /// Attach natural-log rule probabilities, one per rule in index order.
    pub fn with_log_probabilities(mut self, logs: Vec<f64>) -> Result<Self, GrammarError> {
        if logs.len() != self.rules.len() {
            return Err(GrammarError::ProbabilityCount {
                expected: self.rules.len(),
                got: logs.len(),
            });
        }
        for (i, &lp) in logs.iter().enumerate() {
            if lp.is_nan() || lp > 0.0 {
                return Err(GrammarError::InvalidProbability {
                    rule: i + 1,
                    value: lp.exp(),
                });
            }
        }
        for (nt, idxs) in &self.bytype {
            let sum: f64 = idxs.iter().map(|&i| logs[i - 1].exp()).sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                return Err(GrammarError::NotNormalized {
                    nonterminal: nt.clone(),
                    sum,
                });
            }
        }
        self.log_probabilities = Some(logs);
        Ok(self)
    }

    /// Attach linear probabilities, renormalizing each nonterminal's rules.
    pub fn with_probabilities(self, probs: &[f64]) -> Result<Self, GrammarError> {
        if probs.len() != self.rules.len() {
            return Err(GrammarError::ProbabilityCount {
                expected: self.rules.len(),
                got: probs.len(),
            });
        }
        let mut logs = vec![0.0; probs.len()];
        for idxs in self.bytype.values() {
            let sum: f64 = idxs.iter().map(|&i| probs[i - 1]).sum();
            for &i in idxs {
                let p = probs[i - 1];
                if !(p.is_finite() && p >= 0.0) || sum <= 0.0 {
                    return Err(GrammarError::InvalidProbability { rule: i, value: p });
                }
                logs[i - 1] = (p / sum).ln();
            }
        }
        self.with_log_probabilities(logs)
    }

    /// A copy where every rule of nonterminal `N` has probability `1 / |rules of N|`.
    pub fn set_uniform_probabilities(&self) -> Grammar {
        let mut logs = vec![0.0; self.rules.len()];
        for idxs in self.bytype.values() {
            let lp = -(idxs.len() as f64).ln();
            for &i in idxs {
                logs[i - 1] = lp;
            }
        }
        Grammar {
            log_probabilities: Some(logs),
            ..self.clone()
        }
    }

    pub fn without_probabilities(&self) -> Grammar {
        Grammar {
            log_probabilities: None,
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Iterate over `(index, rule)` pairs with 1-based indices.
    pub fn indexed_rules(&self) -> impl Iterator<Item = (usize, &Rule)> {
        self.rules.iter().enumerate().map(|(i, r)| (i + 1, r))
    }

    fn check(&self, index: usize) -> Result<usize, GrammarError> {
        if index == 0 || index > self.rules.len() {
            Err(GrammarError::IndexOutOfRange {
                index,
                len: self.rules.len(),
            })
        } else {
            Ok(index - 1)
        }
    }

    pub fn rule(&self, index: usize) -> Result<&Rule, GrammarError> {
        Ok(&self.rules[self.check(index)?])
    }

    pub fn arity(&self, index: usize) -> Result<usize, GrammarError> {
        Ok(self.childtypes[self.check(index)?].len())
    }

    pub fn childtypes(&self, index: usize) -> Result<&[String], GrammarError> {
        Ok(&self.childtypes[self.check(index)?])
    }

    pub fn lhs(&self, index: usize) -> Result<&str, GrammarError> {
        Ok(&self.rules[self.check(index)?].lhs)
    }

    pub fn contains_index(&self, index: usize) -> bool {
        self.check(index).is_ok()
    }

    /// Rule indices with the given left-hand side, ascending.
    pub fn bytype(&self, nonterminal: &str) -> &[usize] {
        self.bytype.get(nonterminal).map_or(&[], Vec::as_slice)
    }

    pub fn nonterminals(&self) -> impl Iterator<Item = &str> {
        self.bytype.keys().map(String::as_str)
    }

    pub fn is_nonterminal(&self, symbol: &str) -> bool {
        self.bytype.contains_key(symbol)
    }

    /// All rules of a nonterminal as a domain.
    pub fn domain_of(&self, nonterminal: &str) -> Result<Domain, GrammarError> {
        match self.bytype.get(nonterminal) {
            Some(idxs) => Ok(idxs.iter().copied().collect()),
            None => Err(GrammarError::NoSuchNonTerminal(nonterminal.to_owned())),
        }
    }

    pub fn max_arity(&self) -> usize {
        self.childtypes.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_probabilities(&self) -> bool {
        self.log_probabilities.is_some()
    }

    pub fn log_probabilities(&self) -> Option<&[f64]> {
        self.log_probabilities.as_deref()
    }

    pub fn log_probability(&self, index: usize) -> Option<f64> {
        let i = self.check(index).ok()?;
        self.log_probabilities.as_ref().map(|lp| lp[i])
    }

    pub fn probability(&self, index: usize) -> Option<f64> {
        self.log_probability(index).map(f64::exp)
    }

    /// Linear probabilities, in index order.
    pub fn probabilities(&self) -> Option<Vec<f64>> {
        self.log_probabilities
            .as_ref()
            .map(|lp| lp.iter().map(|l| l.exp()).collect())
    }

    /// True when rules `a` and `b` have the same left-hand side and child types.
    pub fn same_shape(&self, a: usize, b: usize) -> bool {
        self.rules[a - 1].lhs == self.rules[b - 1].lhs
            && self.childtypes[a - 1] == self.childtypes[b - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar_text::parse_grammar;

    fn g0() -> Grammar {
        parse_grammar("Int = 1 | 2 | x\nInt = Int + Int\nInt = Int * Int").unwrap()
    }

    #[test]
    fn arity_of_g0_rules() {
        let g = g0();
        assert_eq!(g.arity(3).unwrap(), 0);
        assert_eq!(g.arity(4).unwrap(), 2);
        assert_eq!(g.arity(5).unwrap(), 2);
        assert!(matches!(
            g.arity(0),
            Err(GrammarError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            g.arity(6),
            Err(GrammarError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn empty_template_rule_has_arity_zero() {
        let g = Grammar::new(vec![Rule::new("S", vec![])]).unwrap();
        assert_eq!(g.arity(1).unwrap(), 0);
        assert!(g.rule(1).unwrap().is_terminal());
    }

    #[test]
    fn bytype_inverts_lhs() {
        let g = parse_grammar("A = a | B\nB = b | c | A").unwrap();
        assert_eq!(g.bytype("A"), &[1, 2]);
        assert_eq!(g.bytype("B"), &[3, 4, 5]);
        for (i, r) in g.indexed_rules() {
            assert!(g.bytype(&r.lhs).contains(&i));
        }
        assert_eq!(g.childtypes(2).unwrap(), &["B".to_owned()]);
    }

    #[test]
    fn uniform_probabilities_g0() {
        let g = g0().set_uniform_probabilities();
        for i in 1..=5 {
            assert!((g.probability(i).unwrap() - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_probabilities_single_rule() {
        let g = parse_grammar("S = x").unwrap().set_uniform_probabilities();
        assert_eq!(g.probability(1), Some(1.0));
        assert_eq!(g.log_probability(1), Some(0.0));
    }

    #[test]
    fn uniform_probabilities_per_nonterminal() {
        let g = parse_grammar("A = a | b\nB = c | d | e | f")
            .unwrap()
            .set_uniform_probabilities();
        assert!((g.probability(1).unwrap() - 0.5).abs() < 1e-15);
        assert!((g.probability(2).unwrap() - 0.5).abs() < 1e-15);
        for i in 3..=6 {
            assert!((g.probability(i).unwrap() - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_unnormalized_probabilities() {
        let g = g0();
        let err = g.with_log_probabilities(vec![0.3f64.ln(); 5]).unwrap_err();
        assert!(matches!(err, GrammarError::NotNormalized { .. }));
    }

    #[test]
    fn rejects_dangling_placeholder() {
        let err =
            Grammar::new(vec![Rule::new("S", vec![Symbol::NonTerminal("T".into())])]).unwrap_err();
        assert!(matches!(
            err,
            GrammarError::UnknownNonTerminal { rule: 1, .. }
        ));
    }
}

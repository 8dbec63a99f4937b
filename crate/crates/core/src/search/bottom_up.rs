use std::collections::{BTreeMap, HashSet, VecDeque};
use std::time::Instant;

use crate::ast::Node;
use crate::grammar::Grammar;
use crate::interpreter::{Env, Interpreter, Value};

use super::{acyclic_depth, is_recursive, IteratorConfig, ProgramIterator, SearchError};

struct Equivalence {
    interpreter: Interpreter,
    inputs: Vec<Env>,
    seen: BTreeMap<String, HashSet<Vec<Option<Value>>>>,
}

/// Size-ordered bottom-up enumeration. Programs of size `s` apply each rule to
/// banked children whose sizes sum to `s - 1`; within a size, programs come in
/// rule-index order.
pub struct BottomUpIterator<'a> {
    config: &'a IteratorConfig,
    /// Per nonterminal, programs by size (index 0 unused).
    banks: BTreeMap<String, Vec<Vec<Node>>>,
    equivalence: Option<Equivalence>,
    size: usize,
    max_size: usize,
    largest: usize,
    buffer: VecDeque<Node>,
    enumerated: usize,
    deadline: Option<Instant>,
    timed_out: bool,
}

impl<'a> BottomUpIterator<'a> {
    pub fn new(config: &'a IteratorConfig) -> Result<Self, SearchError> {
        let grammar = &config.grammar;
        if grammar.bytype(&config.start_symbol).is_empty() {
            return Err(SearchError::UnknownStartSymbol(config.start_symbol.clone()));
        }
        let depth = match (
            config.max_depth,
            is_recursive(grammar, &config.start_symbol),
        ) {
            (Some(d), _) => Some(d),
            (None, false) => Some(acyclic_depth(grammar, &config.start_symbol)),
            (None, true) => None,
        };
        let max_size = match (config.max_size, depth) {
            (Some(s), _) => s,
            (None, Some(d)) => max_tree_size(grammar.max_arity(), d),
            (None, None) => return Err(SearchError::BottomUpUnbounded),
        };
        let equivalence = match &config.observational_equivalence {
            Some(inputs) => Some(Equivalence {
                interpreter: Interpreter::new(grammar)?,
                inputs: inputs.clone(),
                seen: BTreeMap::new(),
            }),
            None => None,
        };
        Ok(BottomUpIterator {
            config,
            banks: grammar
                .nonterminals()
                .map(|nt| (nt.to_owned(), vec![Vec::new()]))
                .collect(),
            equivalence,
            size: 0,
            max_size,
            largest: 0,
            buffer: VecDeque::new(),
            enumerated: 0,
            deadline: None,
            timed_out: false,
        })
    }

    fn grammar(&self) -> &'a Grammar {
        &self.config.grammar
    }

    fn expired(&mut self) -> bool {
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.timed_out = true;
        }
        self.timed_out
    }

    /// Builds and banks every program of the next size. Returns false once no
    /// larger program can exist.
    fn grow(&mut self) -> bool {
        let s = self.size + 1;
        let grammar = self.grammar();
        if s > self.max_size || (s > 1 && s > 1 + grammar.max_arity() * self.largest) {
            return false;
        }
        self.size = s;
        let mut level: BTreeMap<String, Vec<Node>> = BTreeMap::new();
        for (index, rule) in grammar.indexed_rules() {
            let childtypes = grammar.childtypes(index).expect("indexed rule");
            let mut programs = Vec::new();
            if childtypes.is_empty() {
                if s == 1 {
                    programs.push(Node::leaf(index));
                }
            } else if s > childtypes.len() {
                let mut sizes = Vec::with_capacity(childtypes.len());
                self.compositions(childtypes, s - 1, &mut sizes, &mut |children| {
                    programs.push(Node::Rule { index, children });
                });
            }
            if self.expired() {
                return false;
            }
            let depth_ok = |p: &Node| self.config.max_depth.is_none_or(|d| p.depth() <= d);
            let kept: Vec<Node> = programs.into_iter().filter(depth_ok).collect();
            let kept = match &mut self.equivalence {
                Some(eq) => {
                    let seen = eq.seen.entry(rule.lhs.clone()).or_default();
                    kept.into_iter()
                        .filter(|p| seen.insert(eq.interpreter.output_vector(p, &eq.inputs)))
                        .collect()
                }
                None => kept,
            };
            level.entry(rule.lhs.clone()).or_default().extend(kept);
        }
        for (nt, bank) in self.banks.iter_mut() {
            let programs = level.remove(nt).unwrap_or_default();
            if !programs.is_empty() {
                self.largest = s;
            }
            if *nt == self.config.start_symbol {
                self.buffer.extend(programs.iter().cloned());
            }
            bank.push(programs);
        }
        true
    }

    /// Calls `emit` with every child list whose sizes sum to `total`.
    fn compositions(
        &self,
        types: &[String],
        total: usize,
        sizes: &mut Vec<usize>,
        emit: &mut impl FnMut(Vec<Node>),
    ) {
        let k = sizes.len();
        if k == types.len() {
            if total == 0 {
                self.product(types, sizes, &mut Vec::with_capacity(types.len()), emit);
            }
            return;
        }
        let remaining = types.len() - k - 1;
        if total < remaining + 1 {
            return;
        }
        let bank = &self.banks[&types[k]];
        for part in 1..=(total - remaining) {
            if bank.get(part).is_some_and(|b| !b.is_empty()) {
                sizes.push(part);
                self.compositions(types, total - part, sizes, emit);
                sizes.pop();
            }
        }
    }

    fn product(
        &self,
        types: &[String],
        sizes: &[usize],
        prefix: &mut Vec<Node>,
        emit: &mut impl FnMut(Vec<Node>),
    ) {
        let k = prefix.len();
        if k == types.len() {
            emit(prefix.clone());
            return;
        }
        for child in &self.banks[&types[k]][sizes[k]] {
            prefix.push(child.clone());
            self.product(types, sizes, prefix, emit);
            prefix.pop();
        }
    }
}

/// Node count of a full tree of the given arity and depth.
fn max_tree_size(arity: usize, depth: usize) -> usize {
    if arity == 0 {
        return depth.min(1);
    }
    let mut total = 0usize;
    let mut level = 1usize;
    for _ in 0..depth {
        total = total.saturating_add(level);
        level = level.saturating_mul(arity);
    }
    total
}

impl Iterator for BottomUpIterator<'_> {
    type Item = Node;

    fn next(&mut self) -> Option<Node> {
        if self
            .config
            .max_enumerations
            .is_some_and(|m| self.enumerated >= m)
        {
            return None;
        }
        loop {
            if self.expired() {
                return None;
            }
            if let Some(p) = self.buffer.pop_front() {
                self.enumerated += 1;
                return Some(p);
            }
            if !self.grow() {
                return None;
            }
        }
    }
}

impl ProgramIterator for BottomUpIterator<'_> {
    fn enumerated(&self) -> usize {
        self.enumerated
    }

    fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.deadline = deadline;
    }

    fn timed_out(&self) -> bool {
        self.timed_out
    }
}

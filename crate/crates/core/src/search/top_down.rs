use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::ast::Node;
use crate::constraints::{decompose, Propagation, SolverState};
use crate::domain::Domain;
use crate::grammar::Grammar;

use super::priority::{Priority, TopDownStrategy};
use super::uniform::UniformEnumerator;
use super::{IteratorConfig, ProgramIterator, SearchError};

/// Slack for comparing a re-keyed priority against its queue key.
const REKEY_EPSILON: f64 = 1e-12;

enum Item<'c> {
    /// Contains plain holes; expanded by decomposition.
    Partial(Node),
    /// Uniform tree not yet started.
    Uniform(Node),
    /// Uniform tree with programs already emitted.
    Running(Box<UniformEnumerator<'c>>),
}

struct Entry<'c> {
    priority: Priority,
    seq: u64,
    item: Item<'c>,
}

impl PartialEq for Entry<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry<'_> {}

impl PartialOrd for Entry<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry<'_> {
    /// Reversed so that `BinaryHeap` pops the lowest priority, oldest first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .priority
            .total_cmp(&self.priority)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Priority-queue search over partial programs. Trees with plain holes are
/// split into uniform trees; a dequeued uniform tree emits its next program and
/// goes back on the queue.
pub struct TopDownIterator<'a> {
    config: &'a IteratorConfig,
    strategy: Box<dyn TopDownStrategy + 'a>,
    queue: BinaryHeap<Entry<'a>>,
    seq: u64,
    enumerated: usize,
    deadline: Option<Instant>,
    timed_out: bool,
}

impl<'a> TopDownIterator<'a> {
    pub fn new(
        config: &'a IteratorConfig,
        strategy: Box<dyn TopDownStrategy + 'a>,
    ) -> Result<Self, SearchError> {
        let domain = config
            .grammar
            .domain_of(&config.start_symbol)
            .map_err(|_| SearchError::UnknownStartSymbol(config.start_symbol.clone()))?;
        strategy.validate(&config.grammar)?;
        let mut it = TopDownIterator {
            config,
            strategy,
            queue: BinaryHeap::new(),
            seq: 0,
            enumerated: 0,
            deadline: None,
            timed_out: false,
        };
        let root = Node::Hole { domain };
        if let Some(root) = it.prune(root) {
            let priority = if it.strategy.best_first() {
                it.strategy.priority_function(
                    &config.grammar,
                    &root,
                    &Priority::Scalar(0.0),
                    false,
                )?
            } else {
                Priority::Scalar(0.0)
            };
            it.push(priority, Item::Partial(root));
        }
        Ok(it)
    }

    fn grammar(&self) -> &'a Grammar {
        &self.config.grammar
    }

    fn push(&mut self, priority: Priority, item: Item<'a>) {
        self.seq += 1;
        self.queue.push(Entry {
            priority,
            seq: self.seq,
            item,
        });
    }

    fn within_bounds(&self, tree: &Node) -> bool {
        self.config.max_depth.is_none_or(|d| tree.depth() <= d)
            && self.config.max_size.is_none_or(|s| tree.size() <= s)
    }

    /// Applies bounds and constraint propagation; `None` if nothing survives.
    fn prune(&self, tree: Node) -> Option<Node> {
        if !self.within_bounds(&tree) {
            return None;
        }
        if self.config.constraints.is_empty() {
            return Some(tree);
        }
        let mut state = SolverState::new(&tree, &self.config.constraints);
        match state.propagate() {
            Propagation::Consistent => Some(state.tree()),
            Propagation::Infeasible => None,
        }
    }

    fn expand(&mut self, parent: &Priority, tree: &Node) {
        for child in decompose(self.grammar(), tree) {
            let Some(child) = self.prune(child) else {
                continue;
            };
            let Ok(priority) =
                self.strategy
                    .priority_function(self.grammar(), &child, parent, false)
            else {
                continue;
            };
            let item = if child.is_uniform() {
                Item::Uniform(child)
            } else {
                Item::Partial(child)
            };
            self.push(priority, item);
        }
    }

    fn enumerator(&self, tree: &Node) -> UniformEnumerator<'a> {
        let constraints: &'a [crate::constraints::Constraint] = &self.config.constraints;
        if self.strategy.best_first() {
            let grammar = self.grammar();
            let order = |d: &Domain| self.strategy.derivation_heuristic(grammar, d);
            let log_prob = |r: usize| grammar.log_probability(r).unwrap_or(f64::NEG_INFINITY);
            UniformEnumerator::best_first(tree, constraints, &order, &log_prob)
        } else {
            UniformEnumerator::depth_first(tree, constraints)
        }
    }

    /// Dequeues until a program is emitted or the queue runs dry.
    fn step(&mut self) -> Option<Node> {
        loop {
            if self.deadline.is_some_and(|d| Instant::now() >= d) {
                self.timed_out = true;
                return None;
            }
            let Entry { priority, item, .. } = self.queue.pop()?;
            let mut enumerator = match item {
                Item::Partial(tree) => {
                    self.expand(&priority, &tree);
                    continue;
                }
                Item::Uniform(tree) => Box::new(self.enumerator(&tree)),
                Item::Running(e) => e,
            };
            let (program, requeue) = {
                let grammar = self.grammar();
                let strategy = &self.strategy;
                let order = |d: &Domain| strategy.derivation_heuristic(grammar, d);
                if strategy.best_first() {
                    // Queue keys are optimistic; only emit when the exact value
                    // of this tree's next program still beats everything queued.
                    match enumerator.peek(&order) {
                        None => (None, None),
                        Some(next) => {
                            match strategy.priority_function(grammar, next, &priority, true) {
                                Err(_) => (None, None),
                                Ok(exact) if exact.value() > priority.value() + REKEY_EPSILON => {
                                    (None, Some(exact))
                                }
                                Ok(exact) => (enumerator.next(&order), Some(exact)),
                            }
                        }
                    }
                } else {
                    match enumerator.next(&order) {
                        None => (None, None),
                        Some(program) => {
                            let requeue = match enumerator.peek(&order) {
                                Some(_) => strategy
                                    .priority_function(grammar, &program, &priority, true)
                                    .ok(),
                                None => None,
                            };
                            (Some(program), requeue)
                        }
                    }
                }
            };
            if let Some(p) = requeue {
                self.push(p, Item::Running(enumerator));
            }
            if program.is_some() {
                return program;
            }
        }
    }
}

impl Iterator for TopDownIterator<'_> {
    type Item = Node;

    fn next(&mut self) -> Option<Node> {
        if self
            .config
            .max_enumerations
            .is_some_and(|m| self.enumerated >= m)
        {
            return None;
        }
        let program = self.step()?;
        self.enumerated += 1;
        Some(program)
    }
}

impl ProgramIterator for TopDownIterator<'_> {
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

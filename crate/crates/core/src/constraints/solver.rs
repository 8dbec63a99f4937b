use thiserror::Error;

use crate::ast::Node;
use crate::domain::Domain;

use super::tree::{Kind, Tree};
use super::Constraint;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error("checkpoint {0} is no longer live")]
    StaleCheckpoint(u64),
    #[error("node {0} is not an open uniform hole")]
    NotAssignable(usize),
    #[error("rule {rule} is not in the domain of node {node}")]
    NotInDomain { node: usize, rule: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Propagation {
    Consistent,
    Infeasible,
}

/// Handle returned by [`SolverState::save`].
#[derive(Debug, PartialEq, Eq)]
pub struct Checkpoint {
    id: u64,
}

#[derive(Debug, Clone)]
struct TrailEntry {
    node: usize,
    domain: Domain,
    kind: Kind,
}

/// A partial program under constraints, with an undo trail.
///
/// Node ids are pre-order positions in the tree passed to [`SolverState::new`].
#[derive(Debug, Clone)]
pub struct SolverState<'c> {
    tree: Tree,
    constraints: &'c [Constraint],
    trail: Vec<TrailEntry>,
    checkpoints: Vec<(u64, usize)>,
    next_checkpoint: u64,
}

impl<'c> SolverState<'c> {
    pub fn new(tree: &Node, constraints: &'c [Constraint]) -> Self {
        SolverState {
            tree: Tree::from_node(tree),
            constraints,
            trail: Vec::new(),
            checkpoints: Vec::new(),
            next_checkpoint: 0,
        }
    }

    pub fn constraints(&self) -> &'c [Constraint] {
        self.constraints
    }

    pub fn tree(&self) -> Node {
        self.tree.to_node(0)
    }

    pub fn len(&self) -> usize {
        self.tree.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.slots.is_empty()
    }

    pub fn domain(&self, node: usize) -> &Domain {
        &self.tree.slots[node].domain
    }

    /// True if `node` is a uniform hole with more than one candidate.
    pub fn is_open(&self, node: usize) -> bool {
        let slot = &self.tree.slots[node];
        slot.kind == Kind::Uniform && slot.domain.len() > 1
    }

    /// Uniform holes still undecided, in pre-order.
    pub fn open_holes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&n| self.is_open(n)).collect()
    }

    pub fn first_open_hole(&self) -> Option<usize> {
        (0..self.len()).find(|&n| self.is_open(n))
    }

    pub fn is_complete(&self) -> bool {
        self.tree.slots.iter().all(|s| s.kind == Kind::Decided)
    }

    fn record(&mut self, node: usize) {
        let slot = &self.tree.slots[node];
        self.trail.push(TrailEntry {
            node,
            domain: slot.domain.clone(),
            kind: slot.kind,
        });
    }

    pub fn remove(&mut self, node: usize, rule: usize) -> bool {
        if !self.tree.slots[node].domain.contains(rule) {
            return false;
        }
        self.record(node);
        self.tree.slots[node].domain.remove(rule);
        true
    }

    /// Fixes an open uniform hole to one of its rules.
    pub fn assign(&mut self, node: usize, rule: usize) -> Result<(), SolverError> {
        let slot = &self.tree.slots[node];
        if slot.kind != Kind::Uniform {
            return Err(SolverError::NotAssignable(node));
        }
        if !slot.domain.contains(rule) {
            return Err(SolverError::NotInDomain { node, rule });
        }
        self.record(node);
        let slot = &mut self.tree.slots[node];
        slot.domain = Domain::singleton(rule);
        slot.kind = Kind::Decided;
        Ok(())
    }

    fn promote_singletons(&mut self) {
        for node in 0..self.len() {
            let slot = &self.tree.slots[node];
            if slot.kind == Kind::Uniform && slot.domain.len() == 1 {
                self.record(node);
                self.tree.slots[node].kind = Kind::Decided;
            }
        }
    }

    /// Whether fixing `node` to `rule` makes some constraint fail in every
    /// completion.
    fn refuted(&mut self, node: usize, rule: usize) -> bool {
        let slot = &mut self.tree.slots[node];
        let saved = (
            std::mem::replace(&mut slot.domain, Domain::singleton(rule)),
            slot.kind,
        );
        slot.kind = Kind::Decided;
        let mut site = Some(node);
        let mut refuted = false;
        while let Some(s) = site {
            if self.constraints.iter().any(|c| self.tree.violated_at(c, s)) {
                refuted = true;
                break;
            }
            site = self.tree.slots[s].parent;
        }
        let slot = &mut self.tree.slots[node];
        slot.domain = saved.0;
        slot.kind = saved.1;
        refuted
    }

    /// Filters uniform-hole domains to a fixed point of singleton lookahead.
    pub fn propagate(&mut self) -> Propagation {
        self.promote_singletons();
        if self.constraints.is_empty() {
            return Propagation::Consistent;
        }
        if self
            .constraints
            .iter()
            .any(|c| self.tree.violated_anywhere(c))
        {
            return Propagation::Infeasible;
        }
        loop {
            let mut changed = false;
            for node in 0..self.len() {
                if !self.is_open(node) {
                    continue;
                }
                let candidates: Vec<usize> = self.domain(node).iter().collect();
                for rule in candidates {
                    if self.refuted(node, rule) {
                        self.remove(node, rule);
                        changed = true;
                    }
                }
                match self.domain(node).len() {
                    0 => return Propagation::Infeasible,
                    1 => {
                        self.record(node);
                        self.tree.slots[node].kind = Kind::Decided;
                    }
                    _ => {}
                }
            }
            if !changed {
                return Propagation::Consistent;
            }
        }
    }

    pub fn save(&mut self) -> Checkpoint {
        let id = self.next_checkpoint;
        self.next_checkpoint += 1;
        self.checkpoints.push((id, self.trail.len()));
        Checkpoint { id }
    }

    /// Undoes every change since `checkpoint` was taken. Checkpoints taken later
    /// are invalidated along with it.
    pub fn restore(&mut self, checkpoint: Checkpoint) -> Result<(), SolverError> {
        let pos = self
            .checkpoints
            .iter()
            .rposition(|&(id, _)| id == checkpoint.id)
            .ok_or(SolverError::StaleCheckpoint(checkpoint.id))?;
        let (_, mark) = self.checkpoints[pos];
        self.checkpoints.truncate(pos);
        while self.trail.len() > mark {
            let entry = self.trail.pop().unwrap();
            let slot = &mut self.tree.slots[entry.node];
            slot.domain = entry.domain;
            slot.kind = entry.kind;
        }
        Ok(())
    }
}

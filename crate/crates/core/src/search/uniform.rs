//! Enumerating the complete programs of one uniform tree.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::ast::Node;
use crate::constraints::{check_program, Constraint, Propagation, SolverState};
use crate::domain::Domain;

/// Rule order for one hole's domain.
pub(crate) type Order<'o> = &'o dyn Fn(&Domain) -> Vec<usize>;

/// Yields a uniform tree's programs one by one, with one program of lookahead.
pub(crate) enum UniformEnumerator<'c> {
    DepthFirst(DepthFirst<'c>),
    BestFirst(BestFirst<'c>),
}

impl<'c> UniformEnumerator<'c> {
    pub fn depth_first(tree: &Node, constraints: &'c [Constraint]) -> Self {
        UniformEnumerator::DepthFirst(DepthFirst::new(tree, constraints))
    }

    /// `log_prob(r)` scores rule `r`; programs come out by descending total score.
    pub fn best_first(
        tree: &Node,
        constraints: &'c [Constraint],
        order: Order<'_>,
        log_prob: &dyn Fn(usize) -> f64,
    ) -> Self {
        UniformEnumerator::BestFirst(BestFirst::new(tree, constraints, order, log_prob))
    }

    pub fn peek(&mut self, order: Order<'_>) -> Option<&Node> {
        match self {
            UniformEnumerator::DepthFirst(e) => e.peek(order),
            UniformEnumerator::BestFirst(e) => e.peek(),
        }
    }

    pub fn next(&mut self, order: Order<'_>) -> Option<Node> {
        self.peek(order);
        match self {
            UniformEnumerator::DepthFirst(e) => e.peeked.take(),
            UniformEnumerator::BestFirst(e) => e.peeked.take(),
        }
    }
}

struct Frame {
    hole: usize,
    candidates: Vec<usize>,
    next: usize,
    checkpoint: Option<crate::constraints::Checkpoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Fresh,
    Running,
    Done,
}

/// Depth-first assignment of holes in pre-order, propagating after each choice
/// and undoing through the solver trail on backtrack.
pub(crate) struct DepthFirst<'c> {
    state: SolverState<'c>,
    stack: Vec<Frame>,
    phase: Phase,
    peeked: Option<Node>,
}

impl<'c> DepthFirst<'c> {
    fn new(tree: &Node, constraints: &'c [Constraint]) -> Self {
        DepthFirst {
            state: SolverState::new(tree, constraints),
            stack: Vec::new(),
            phase: Phase::Fresh,
            peeked: None,
        }
    }

    fn peek(&mut self, order: Order<'_>) -> Option<&Node> {
        if self.peeked.is_none() {
            self.peeked = self.advance(order);
        }
        self.peeked.as_ref()
    }

    fn advance(&mut self, order: Order<'_>) -> Option<Node> {
        let mut backtrack = match self.phase {
            Phase::Done => return None,
            Phase::Fresh => {
                self.phase = Phase::Running;
                if self.state.propagate() == Propagation::Infeasible {
                    self.phase = Phase::Done;
                    return None;
                }
                false
            }
            Phase::Running => true,
        };
        loop {
            if backtrack {
                loop {
                    if self.stack.is_empty() {
                        self.phase = Phase::Done;
                        return None;
                    }
                    if self.try_next_candidate() {
                        break;
                    }
                    self.stack.pop();
                }
            }
            match self.state.first_open_hole() {
                None => {
                    backtrack = true;
                    let program = self.state.tree();
                    if check_program(self.state.constraints(), &program) {
                        return Some(program);
                    }
                }
                Some(hole) => {
                    let candidates = order(self.state.domain(hole));
                    self.stack.push(Frame {
                        hole,
                        candidates,
                        next: 0,
                        checkpoint: None,
                    });
                    backtrack = !self.try_next_candidate();
                    if backtrack {
                        self.stack.pop();
                    }
                }
            }
        }
    }

    /// Moves the top frame to its next consistent candidate.
    fn try_next_candidate(&mut self) -> bool {
        let frame = self.stack.last_mut().expect("non-empty stack");
        if let Some(cp) = frame.checkpoint.take() {
            self.state
                .restore(cp)
                .expect("frame checkpoints are restored in LIFO order");
        }
        while frame.next < frame.candidates.len() {
            let rule = frame.candidates[frame.next];
            frame.next += 1;
            let cp = self.state.save();
            self.state
                .assign(frame.hole, rule)
                .expect("candidate from the hole's domain");
            if self.state.propagate() == Propagation::Consistent {
                frame.checkpoint = Some(cp);
                return true;
            }
            self.state.restore(cp).expect("fresh checkpoint");
        }
        false
    }
}

struct Candidate {
    score: f64,
    choice: Vec<usize>,
    last: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    /// Max-heap order: higher score first, then lexicographically smaller choice.
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.choice.cmp(&self.choice))
    }
}

/// Programs of a uniform tree by descending probability. The tree is a product
/// of independent hole choices, so the k-best combinations come from a heap over
/// choice vectors; each vector is generated once by only ever incrementing
/// positions at or after the last incremented one.
pub(crate) struct BestFirst<'c> {
    base: Node,
    holes: Vec<Vec<(usize, f64)>>,
    heap: BinaryHeap<Candidate>,
    constraints: &'c [Constraint],
    peeked: Option<Node>,
}

impl<'c> BestFirst<'c> {
    fn new(
        tree: &Node,
        constraints: &'c [Constraint],
        order: Order<'_>,
        log_prob: &dyn Fn(usize) -> f64,
    ) -> Self {
        let mut state = SolverState::new(tree, constraints);
        let mut heap = BinaryHeap::new();
        let mut base = state.tree();
        let mut holes = Vec::new();
        if state.propagate() == Propagation::Consistent {
            base = state.tree();
            base.walk(&mut |n| {
                if let Node::UniformHole { domain, .. } = n {
                    let mut ranked: Vec<(usize, f64)> = order(domain)
                        .into_iter()
                        .map(|r| (r, log_prob(r)))
                        .collect();
                    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
                    holes.push(ranked);
                }
            });
            heap.push(Candidate {
                score: holes.iter().map(|h| h[0].1).sum(),
                choice: vec![0; holes.len()],
                last: 0,
            });
        }
        BestFirst {
            base,
            holes,
            heap,
            constraints,
            peeked: None,
        }
    }

    fn peek(&mut self) -> Option<&Node> {
        while self.peeked.is_none() {
            let cand = self.heap.pop()?;
            for pos in cand.last..self.holes.len() {
                let i = cand.choice[pos];
                if i + 1 < self.holes[pos].len() {
                    let mut choice = cand.choice.clone();
                    choice[pos] += 1;
                    self.heap.push(Candidate {
                        score: cand.score - self.holes[pos][i].1 + self.holes[pos][i + 1].1,
                        choice,
                        last: pos,
                    });
                }
            }
            let mut k = 0;
            let program = self.fill(&self.base, &cand.choice, &mut k);
            if check_program(self.constraints, &program) {
                self.peeked = Some(program);
            }
        }
        self.peeked.as_ref()
    }

    fn fill(&self, node: &Node, choice: &[usize], k: &mut usize) -> Node {
        match node {
            Node::Rule { index, children } => Node::Rule {
                index: *index,
                children: children.iter().map(|c| self.fill(c, choice, k)).collect(),
            },
            Node::UniformHole { children, .. } => {
                let index = self.holes[*k][choice[*k]].0;
                *k += 1;
                Node::Rule {
                    index,
                    children: children.iter().map(|c| self.fill(c, choice, k)).collect(),
                }
            }
            Node::Hole { .. } => unreachable!("uniform trees contain no plain holes"),
        }
    }
}

//! Enumeration order: queue priorities and per-hole rule order.

use std::cmp::Ordering;
use std::fmt;

use crate::ast::Node;
use crate::domain::Domain;
use crate::grammar::Grammar;

use super::SearchError;

/// Queue priority; lower values dequeue first. Tuples compare lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub enum Priority {
    Scalar(f64),
    Tuple(Vec<f64>),
}

impl Priority {
    fn as_slice(&self) -> &[f64] {
        match self {
            Priority::Scalar(v) => std::slice::from_ref(v),
            Priority::Tuple(vs) => vs,
        }
    }

    /// The leading component.
    pub fn value(&self) -> f64 {
        self.as_slice().first().copied().unwrap_or(0.0)
    }

    pub fn total_cmp(&self, other: &Priority) -> Ordering {
        let (a, b) = (self.as_slice(), other.as_slice());
        for (x, y) in a.iter().zip(b) {
            match x.total_cmp(y) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        a.len().cmp(&b.len())
    }
}

impl fmt::Display for Priority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Priority::Scalar(v) => write!(f, "{v}"),
            Priority::Tuple(vs) => write!(f, "{vs:?}"),
        }
    }
}

impl From<f64> for Priority {
    fn from(v: f64) -> Self {
        Priority::Scalar(v)
    }
}

/// Log-probability of the most likely program a (partial) tree can still
/// become: rule nodes contribute their rule, holes the best rule of their
/// domain, summed over the tree.
pub fn max_rulenode_log_probability(node: &Node, grammar: &Grammar) -> Result<f64, SearchError> {
    let logs = grammar
        .log_probabilities()
        .ok_or(SearchError::MissingProbabilities)?;
    max_log_prob(node, logs)
}

fn max_log_prob(node: &Node, logs: &[f64]) -> Result<f64, SearchError> {
    let own = match node {
        Node::Rule { index, .. } => *logs
            .get(index.wrapping_sub(1))
            .ok_or(SearchError::UnknownRule(*index))?,
        Node::UniformHole { domain, .. } | Node::Hole { domain } => {
            let mut best: Option<f64> = None;
            for r in domain.iter() {
                let lp = *logs
                    .get(r.wrapping_sub(1))
                    .ok_or(SearchError::UnknownRule(r))?;
                best = Some(best.map_or(lp, |b| b.max(lp)));
            }
            best.ok_or(SearchError::EmptyDomain)?
        }
    };
    node.children()
        .iter()
        .try_fold(own, |acc, c| Ok(acc + max_log_prob(c, logs)?))
}

/// How a top-down search orders its queue and its hole assignments.
pub trait TopDownStrategy: fmt::Debug {
    /// Priority of `tree`, reached from an entry with priority `parent`.
    /// `requeued` is set when a uniform tree goes back on the queue after
    /// yielding a program; in best-first mode `tree` is then the tree's next
    /// program.
    fn priority_function(
        &self,
        grammar: &Grammar,
        tree: &Node,
        parent: &Priority,
        requeued: bool,
    ) -> Result<Priority, SearchError>;

    /// Order in which a hole's candidate rules are tried.
    fn derivation_heuristic(&self, grammar: &Grammar, domain: &Domain) -> Vec<usize>;

    /// Whether uniform trees yield programs in order of decreasing probability,
    /// with priorities that track each tree's next program.
    fn best_first(&self) -> bool {
        false
    }

    /// Checks that the grammar supports this strategy.
    fn validate(&self, _grammar: &Grammar) -> Result<(), SearchError> {
        Ok(())
    }
}

/// Breadth-first over shapes: fresh trees get `parent + 1`, requeued trees keep
/// their priority, and ties go first-in first-out.
#[derive(Debug, Clone, Copy, Default)]
pub struct Bfs;

/// Depth-first: fresh trees get `parent - 1`. A requeued uniform tree keeps its
/// parent's value, or with `over_shapes` also gets `parent - 1` so that each
/// uniform tree is exhausted before the search moves on.
#[derive(Debug, Clone, Copy, Default)]
pub struct Dfs {
    pub over_shapes: bool,
}

/// Most-likely-first: priority is the negated best log-probability.
#[derive(Debug, Clone, Copy, Default)]
pub struct Mlfs;

impl TopDownStrategy for Bfs {
    fn priority_function(
        &self,
        _: &Grammar,
        _: &Node,
        parent: &Priority,
        requeued: bool,
    ) -> Result<Priority, SearchError> {
        Ok(if requeued {
            parent.clone()
        } else {
            Priority::Scalar(parent.value() + 1.0)
        })
    }

    fn derivation_heuristic(&self, _: &Grammar, domain: &Domain) -> Vec<usize> {
        domain.iter().collect()
    }
}

impl TopDownStrategy for Dfs {
    fn priority_function(
        &self,
        _: &Grammar,
        _: &Node,
        parent: &Priority,
        requeued: bool,
    ) -> Result<Priority, SearchError> {
        Ok(if requeued && !self.over_shapes {
            parent.clone()
        } else {
            Priority::Scalar(parent.value() - 1.0)
        })
    }

    fn derivation_heuristic(&self, _: &Grammar, domain: &Domain) -> Vec<usize> {
        domain.iter().collect()
    }
}

impl TopDownStrategy for Mlfs {
    fn priority_function(
        &self,
        grammar: &Grammar,
        tree: &Node,
        _: &Priority,
        _: bool,
    ) -> Result<Priority, SearchError> {
        Ok(Priority::Scalar(-max_rulenode_log_probability(
            tree, grammar,
        )?))
    }

    /// Descending probability, ties by ascending index.
    fn derivation_heuristic(&self, grammar: &Grammar, domain: &Domain) -> Vec<usize> {
        let mut rules: Vec<usize> = domain.iter().collect();
        let lp = |r: usize| grammar.log_probability(r).unwrap_or(f64::NEG_INFINITY);
        rules.sort_by(|&a, &b| lp(b).total_cmp(&lp(a)).then(a.cmp(&b)));
        rules
    }

    fn best_first(&self) -> bool {
        true
    }

    fn validate(&self, grammar: &Grammar) -> Result<(), SearchError> {
        if grammar.has_probabilities() {
            Ok(())
        } else {
            Err(SearchError::MissingProbabilities)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::parse_node;
    use crate::grammar_text::parse_grammar;

    fn g0() -> Grammar {
        parse_grammar("Int = 1 | 2 | x\nInt = Int + Int\nInt = Int * Int").unwrap()
    }

    fn dom(rules: &[usize]) -> Domain {
        rules.iter().copied().collect()
    }

    const LN_02: f64 = -1.6094379124341003;

    #[test]
    fn dfs_priorities() {
        let g = g0();
        let t = Node::leaf(1);
        let dfs = Dfs { over_shapes: false };
        assert_eq!(
            dfs.priority_function(&g, &t, &0.0.into(), false).unwrap(),
            Priority::Scalar(-1.0)
        );
        assert_eq!(
            dfs.priority_function(&g, &t, &(-3.0).into(), true).unwrap(),
            Priority::Scalar(-3.0)
        );
        let shapes = Dfs { over_shapes: true };
        assert_eq!(
            shapes
                .priority_function(&g, &t, &(-3.0).into(), true)
                .unwrap(),
            Priority::Scalar(-4.0)
        );
    }

    #[test]
    fn bfs_priorities() {
        let g = g0();
        let t = Node::leaf(1);
        assert_eq!(
            Bfs.priority_function(&g, &t, &2.0.into(), false).unwrap(),
            Priority::Scalar(3.0)
        );
        assert_eq!(
            Bfs.priority_function(&g, &t, &2.0.into(), true).unwrap(),
            Priority::Scalar(2.0)
        );
    }

    #[test]
    fn mlfs_priority_of_solution() {
        let g = g0().set_uniform_probabilities();
        let p = Mlfs
            .priority_function(&g, &parse_node("4{3,4{1,3}}").unwrap(), &0.0.into(), false)
            .unwrap();
        assert!((p.value() - (-5.0 * LN_02)).abs() < 1e-12);
        assert!((p.value() - 8.047190).abs() < 1e-6);
    }

    #[test]
    fn mlfs_requires_probabilities() {
        let g = g0();
        assert_eq!(
            Mlfs.priority_function(&g, &Node::leaf(1), &0.0.into(), false),
            Err(SearchError::MissingProbabilities)
        );
        assert!(Mlfs.validate(&g).is_err());
    }

    #[test]
    fn max_log_probability_examples() {
        let g = g0().set_uniform_probabilities();
        let lp = max_rulenode_log_probability(&Node::leaf(3), &g).unwrap();
        assert!((lp - (-1.609438)).abs() < 1e-6);
        let all = dom(&[1, 2, 3, 4, 5]);
        let t = Node::UniformHole {
            domain: dom(&[4, 5]),
            children: vec![
                Node::Hole {
                    domain: all.clone(),
                },
                Node::Hole { domain: all },
            ],
        };
        let lp = max_rulenode_log_probability(&t, &g).unwrap();
        assert!((lp - (-4.828314)).abs() < 1e-6);
        let single = parse_grammar("S = x").unwrap().set_uniform_probabilities();
        assert_eq!(
            max_rulenode_log_probability(&Node::leaf(1), &single).unwrap(),
            0.0
        );
        assert_eq!(
            max_rulenode_log_probability(
                &Node::Hole {
                    domain: Domain::new()
                },
                &g
            ),
            Err(SearchError::EmptyDomain)
        );
    }

    #[test]
    fn hole_takes_best_rule() {
        let g = g0()
            .with_probabilities(&[0.4, 0.1, 0.3, 0.15, 0.05])
            .unwrap();
        let lp = max_rulenode_log_probability(
            &Node::Hole {
                domain: dom(&[2, 3, 5]),
            },
            &g,
        )
        .unwrap();
        assert!((lp - 0.3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn heuristics() {
        let g = g0();
        assert_eq!(
            Bfs.derivation_heuristic(&g, &dom(&[4, 5, 1])),
            vec![1, 4, 5]
        );
        let pg = parse_grammar("0.5 : S = a\n0.3 : S = b\n0.2 : S = c").unwrap();
        assert_eq!(
            Mlfs.derivation_heuristic(&pg, &dom(&[1, 2, 3])),
            vec![1, 2, 3]
        );
        let pg = parse_grammar("S = 0.2 : a | 0.3 : b | 0.2 : c | 0.3 : d").unwrap();
        assert_eq!(
            Mlfs.derivation_heuristic(&pg, &dom(&[1, 2, 3, 4])),
            vec![2, 4, 1, 3]
        );
        assert_eq!(Mlfs.derivation_heuristic(&pg, &dom(&[3])), vec![3]);
    }

    #[test]
    fn priority_ordering() {
        use std::cmp::Ordering::*;
        assert_eq!(
            Priority::Scalar(-1.0).total_cmp(&Priority::Scalar(0.0)),
            Less
        );
        assert_eq!(
            Priority::Tuple(vec![1.0, 2.0]).total_cmp(&Priority::Tuple(vec![1.0, 3.0])),
            Less
        );
        assert_eq!(
            Priority::Scalar(1.0).total_cmp(&Priority::Tuple(vec![1.0, 0.0])),
            Less
        );
    }
}

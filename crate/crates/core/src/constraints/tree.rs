//! Flat arena form of a partial program, used by matching and propagation.

use crate::ast::Node;
use crate::domain::Domain;

use super::{Constraint, Pattern};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kind {
    Decided,
    Uniform,
    Hole,
}

#[derive(Debug, Clone)]
pub(crate) struct Slot {
    pub kind: Kind,
    pub domain: Domain,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
}

/// Nodes stored in pre-order; id 0 is the root.
#[derive(Debug, Clone)]
pub(crate) struct Tree {
    pub slots: Vec<Slot>,
}

/// Three-valued match outcome, ordered `No < Maybe < Yes`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Tri {
    No,
    Maybe,
    Yes,
}

pub(crate) type Bindings<'p> = Vec<(&'p str, usize)>;

impl Tree {
    pub fn from_node(node: &Node) -> Tree {
        let mut tree = Tree { slots: Vec::new() };
        tree.push(node, None);
        tree
    }

    fn push(&mut self, node: &Node, parent: Option<usize>) -> usize {
        let id = self.slots.len();
        let (kind, domain) = match node {
            Node::Rule { index, .. } => (Kind::Decided, Domain::singleton(*index)),
            Node::UniformHole { domain, .. } => (Kind::Uniform, domain.clone()),
            Node::Hole { domain } => (Kind::Hole, domain.clone()),
        };
        self.slots.push(Slot {
            kind,
            domain,
            children: Vec::new(),
            parent,
        });
        let children: Vec<usize> = node
            .children()
            .iter()
            .map(|c| self.push(c, Some(id)))
            .collect();
        self.slots[id].children = children;
        id
    }

    pub fn to_node(&self, id: usize) -> Node {
        let slot = &self.slots[id];
        let children = || slot.children.iter().map(|&c| self.to_node(c)).collect();
        match slot.kind {
            Kind::Decided => Node::Rule {
                index: slot.domain.first().expect("decided node has a rule"),
                children: children(),
            },
            Kind::Uniform => Node::UniformHole {
                domain: slot.domain.clone(),
                children: children(),
            },
            Kind::Hole => Node::Hole {
                domain: slot.domain.clone(),
            },
        }
    }

    /// Rule at `id` if it is fixed, treating singleton uniform holes as fixed.
    fn fixed_rule(&self, id: usize) -> Option<usize> {
        let slot = &self.slots[id];
        match slot.kind {
            Kind::Decided | Kind::Uniform => slot.domain.single(),
            Kind::Hole => None,
        }
    }

    pub fn is_complete(&self, id: usize) -> bool {
        self.fixed_rule(id).is_some()
            && self.slots[id].children.iter().all(|&c| self.is_complete(c))
    }

    pub fn serialize(&self, id: usize, out: &mut String) {
        let slot = &self.slots[id];
        out.push_str(&slot.domain.first().unwrap_or(0).to_string());
        if !slot.children.is_empty() {
            out.push('{');
            for (i, &c) in slot.children.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                self.serialize(c, out);
            }
            out.push('}');
        }
    }

    pub fn match_at<'p>(&self, pattern: &'p Pattern, id: usize, binds: &mut Bindings<'p>) -> Tri {
        match pattern {
            Pattern::Var(name) => {
                if let Some(&(_, bound)) = binds.iter().find(|(n, _)| *n == name.as_str()) {
                    self.equal(bound, id)
                } else {
                    binds.push((name.as_str(), id));
                    Tri::Yes
                }
            }
            Pattern::Rule(rule, kids) => {
                let head = match self.fixed_rule(id) {
                    Some(r) if r == *rule => Tri::Yes,
                    Some(_) => Tri::No,
                    None if self.slots[id].domain.contains(*rule) => Tri::Maybe,
                    None => Tri::No,
                };
                self.match_children(kids, id, head, binds)
            }
            Pattern::Domain(set, kids) => {
                let domain = &self.slots[id].domain;
                let head = if domain.is_subset(set) {
                    Tri::Yes
                } else if domain.is_disjoint(set) {
                    Tri::No
                } else {
                    Tri::Maybe
                };
                self.match_children(kids, id, head, binds)
            }
        }
    }

    fn match_children<'p>(
        &self,
        kids: &'p [Pattern],
        id: usize,
        head: Tri,
        binds: &mut Bindings<'p>,
    ) -> Tri {
        if head == Tri::No || kids.is_empty() {
            return head;
        }
        let slot = &self.slots[id];
        if slot.kind == Kind::Hole {
            return Tri::Maybe;
        }
        if kids.len() != slot.children.len() {
            return Tri::No;
        }
        let mut acc = head;
        for (k, &c) in kids.iter().zip(&slot.children) {
            match self.match_at(k, c, binds) {
                Tri::No => return Tri::No,
                t => acc = acc.min(t),
            }
        }
        acc
    }

    /// Three-valued structural equality of two subtrees.
    pub fn equal(&self, a: usize, b: usize) -> Tri {
        if a == b {
            return Tri::Yes;
        }
        let (sa, sb) = (&self.slots[a], &self.slots[b]);
        let head = match (self.fixed_rule(a), self.fixed_rule(b)) {
            (Some(x), Some(y)) if x != y => return Tri::No,
            (Some(_), Some(_)) => Tri::Yes,
            _ if sa.domain.is_disjoint(&sb.domain) => return Tri::No,
            _ => Tri::Maybe,
        };
        if sa.kind == Kind::Hole || sb.kind == Kind::Hole {
            return Tri::Maybe;
        }
        if sa.children.len() != sb.children.len() {
            return Tri::No;
        }
        let mut acc = head;
        for (&x, &y) in sa.children.iter().zip(&sb.children) {
            match self.equal(x, y) {
                Tri::No => return Tri::No,
                t => acc = acc.min(t),
            }
        }
        acc
    }

    /// True when every completion of the subtree at `site` violates `constraint`
    /// there.
    pub fn violated_at(&self, constraint: &Constraint, site: usize) -> bool {
        let mut binds = Bindings::new();
        match constraint {
            Constraint::Forbidden(p) => self.match_at(p, site, &mut binds) == Tri::Yes,
            Constraint::Ordered(p, vars) => {
                if self.match_at(p, site, &mut binds) != Tri::Yes {
                    return false;
                }
                let bound: Vec<usize> = vars
                    .iter()
                    .filter_map(|v| binds.iter().find(|(n, _)| n == v).map(|&(_, id)| id))
                    .collect();
                if !bound.iter().all(|&id| self.is_complete(id)) {
                    return false;
                }
                let texts: Vec<String> = bound
                    .iter()
                    .map(|&id| {
                        let mut s = String::new();
                        self.serialize(id, &mut s);
                        s
                    })
                    .collect();
                texts.windows(2).any(|w| w[0] > w[1])
            }
        }
    }

    pub fn violated_anywhere(&self, constraint: &Constraint) -> bool {
        (0..self.slots.len()).any(|site| self.violated_at(constraint, site))
    }
}

//! Program ASTs: rule nodes, holes and uniform holes, plus the compact text form
//! `4{3,4{1,3}}`.

use std::fmt;

use thiserror::Error;

use crate::domain::Domain;
use crate::grammar::{Grammar, GrammarError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AstError {
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("rule {rule} expects {expected} children, got {got}")]
    ChildCount {
        rule: usize,
        expected: usize,
        got: usize,
    },
    #[error("child {position} of rule {rule} has type `{found}`, expected `{expected}`")]
    ChildType {
        rule: usize,
        position: usize,
        expected: String,
        found: String,
    },
    #[error("hole domain is empty")]
    EmptyDomain,
    #[error("hole domain {0} mixes left-hand sides")]
    MixedTypes(Domain),
    #[error("uniform hole domain {0} mixes rule shapes")]
    MixedShapes(Domain),
    #[error("cannot serialize a program containing holes")]
    ContainsHole,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

/// A (possibly partial) program.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    /// A decided node applying rule `index`.
    Rule { index: usize, children: Vec<Node> },
    /// An undecided node whose candidate rules all share one shape; the
    /// children are shared by every candidate.
    UniformHole { domain: Domain, children: Vec<Node> },
    /// An undecided node with no children yet.
    Hole { domain: Domain },
}

impl Node {
    /// Unchecked rule node without children.
    pub fn leaf(index: usize) -> Node {
        Node::Rule {
            index,
            children: Vec::new(),
        }
    }

    /// Unchecked rule node.
    #[allow(clippy::self_named_constructors)]
    pub fn node(index: usize, children: Vec<Node>) -> Node {
        Node::Rule { index, children }
    }

    /// Rule node, checked against the grammar's arity and child types.
    pub fn rule(grammar: &Grammar, index: usize, children: Vec<Node>) -> Result<Node, AstError> {
        let types = grammar.childtypes(index)?;
        check_children(grammar, index, types, &children)?;
        Ok(Node::Rule { index, children })
    }

    /// Hole, checked so that every rule in the domain has the same left-hand side.
    pub fn hole(grammar: &Grammar, domain: Domain) -> Result<Node, AstError> {
        domain_lhs(grammar, &domain)?;
        Ok(Node::Hole { domain })
    }

    /// Uniform hole, checked so that every rule in the domain has the same shape
    /// and the children fit that shape.
    pub fn uniform_hole(
        grammar: &Grammar,
        domain: Domain,
        children: Vec<Node>,
    ) -> Result<Node, AstError> {
        domain_lhs(grammar, &domain)?;
        let first = domain.first().ok_or(AstError::EmptyDomain)?;
        if domain.iter().any(|r| !grammar.same_shape(first, r)) {
            return Err(AstError::MixedShapes(domain));
        }
        check_children(grammar, first, grammar.childtypes(first)?, &children)?;
        Ok(Node::UniformHole { domain, children })
    }

    pub fn children(&self) -> &[Node] {
        match self {
            Node::Rule { children, .. } | Node::UniformHole { children, .. } => children,
            Node::Hole { .. } => &[],
        }
    }

    pub fn is_hole(&self) -> bool {
        !matches!(self, Node::Rule { .. })
    }

    /// Rule index if this is a decided node.
    pub fn rule_index(&self) -> Option<usize> {
        match self {
            Node::Rule { index, .. } => Some(*index),
            _ => None,
        }
    }

    /// Nonterminal this node derives.
    pub fn root_type<'g>(&self, grammar: &'g Grammar) -> Result<&'g str, AstError> {
        match self {
            Node::Rule { index, .. } => Ok(grammar.lhs(*index)?),
            Node::UniformHole { domain, .. } | Node::Hole { domain } => domain_lhs(grammar, domain),
        }
    }

    /// Tree depth; leaves (including holes) have depth 1.
    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(Node::depth).max().unwrap_or(0)
    }

    /// Node count; holes count as one node.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(Node::size).sum::<usize>()
    }

    /// True iff the tree contains no hole of either kind.
    pub fn is_complete(&self) -> bool {
        match self {
            Node::Rule { children, .. } => children.iter().all(Node::is_complete),
            _ => false,
        }
    }

    /// True iff the tree contains no non-uniform `Hole`.
    pub fn is_uniform(&self) -> bool {
        match self {
            Node::Hole { .. } => false,
            _ => self.children().iter().all(Node::is_uniform),
        }
    }

    /// Every rule index used by decided nodes, in pre-order.
    pub fn rules_used(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.walk(&mut |n| {
            if let Node::Rule { index, .. } = n {
                out.push(*index);
            }
        });
        out
    }

    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Node)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Compact text form; fails on trees that contain holes.
    pub fn serialize(&self) -> Result<String, AstError> {
        let mut out = String::new();
        self.write_serialized(&mut out)?;
        Ok(out)
    }

    fn write_serialized(&self, out: &mut String) -> Result<(), AstError> {
        match self {
            Node::Rule { index, children } => {
                out.push_str(&index.to_string());
                if !children.is_empty() {
                    out.push('{');
                    for (i, c) in children.iter().enumerate() {
                        if i > 0 {
                            out.push(',');
                        }
                        c.write_serialized(out)?;
                    }
                    out.push('}');
                }
                Ok(())
            }
            _ => Err(AstError::ContainsHole),
        }
    }
}

/// Renders complete trees exactly as [`Node::serialize`]; holes render as
/// `hole[..]` and `uniform[..]{..}`.
impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let children = match self {
            Node::Rule { index, children } => {
                write!(f, "{index}")?;
                children
            }
            Node::UniformHole { domain, children } => {
                write!(f, "uniform{domain}")?;
                children
            }
            Node::Hole { domain } => return write!(f, "hole{domain}"),
        };
        if !children.is_empty() {
            write!(f, "{{")?;
            for (i, c) in children.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, "}}")?;
        }
        Ok(())
    }
}

fn domain_lhs<'g>(grammar: &'g Grammar, domain: &Domain) -> Result<&'g str, AstError> {
    let mut lhs: Option<&str> = None;
    for r in domain.iter() {
        let l = grammar.lhs(r)?;
        match lhs {
            None => lhs = Some(l),
            Some(prev) if prev != l => return Err(AstError::MixedTypes(domain.clone())),
            _ => {}
        }
    }
    lhs.ok_or(AstError::EmptyDomain)
}

fn check_children(
    grammar: &Grammar,
    rule: usize,
    types: &[String],
    children: &[Node],
) -> Result<(), AstError> {
    if types.len() != children.len() {
        return Err(AstError::ChildCount {
            rule,
            expected: types.len(),
            got: children.len(),
        });
    }
    for (position, (ty, child)) in types.iter().zip(children).enumerate() {
        let found = child.root_type(grammar)?;
        if found != ty {
            return Err(AstError::ChildType {
                rule,
                position,
                expected: ty.clone(),
                found: found.to_owned(),
            });
        }
    }
    Ok(())
}

/// Parses the compact text form produced by [`Node::serialize`].
pub fn parse_node(text: &str) -> Result<Node, ParseError> {
    let bytes = text.as_bytes();
    let mut pos = 0;
    let node = parse_at(bytes, &mut pos)?;
    if pos != bytes.len() {
        return Err(ParseError {
            position: pos,
            message: format!("unexpected `{}`", bytes[pos] as char),
        });
    }
    Ok(node)
}

fn parse_at(bytes: &[u8], pos: &mut usize) -> Result<Node, ParseError> {
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err(ParseError {
            position: start,
            message: match bytes.get(start) {
                Some(&b) => format!("expected rule index, found `{}`", b as char),
                None => "expected rule index, found end of input".into(),
            },
        });
    }
    // digits are ASCII, so the slice is valid UTF-8
    let digits = std::str::from_utf8(&bytes[start..*pos]).unwrap();
    let index: usize = digits.parse().map_err(|_| ParseError {
        position: start,
        message: format!("rule index `{digits}` out of range"),
    })?;
    if index == 0 {
        return Err(ParseError {
            position: start,
            message: "rule indices start at 1".into(),
        });
    }
    let mut children = Vec::new();
    if bytes.get(*pos) == Some(&b'{') {
        *pos += 1;
        loop {
            children.push(parse_at(bytes, pos)?);
            match bytes.get(*pos) {
                Some(b',') => *pos += 1,
                Some(b'}') => {
                    *pos += 1;
                    break;
                }
                Some(&b) => {
                    return Err(ParseError {
                        position: *pos,
                        message: format!("expected `,` or `}}`, found `{}`", b as char),
                    })
                }
                None => {
                    return Err(ParseError {
                        position: *pos,
                        message: "unbalanced `{`".into(),
                    })
                }
            }
        }
    }
    Ok(Node::Rule { index, children })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar_text::parse_grammar;
    use proptest::prelude::*;

    fn g0() -> Grammar {
        parse_grammar("Int = 1 | 2 | x\nInt = Int + Int\nInt = Int * Int").unwrap()
    }

    fn solution() -> Node {
        Node::node(
            4,
            vec![
                Node::leaf(3),
                Node::node(4, vec![Node::leaf(1), Node::leaf(3)]),
            ],
        )
    }

    fn dom(rules: &[usize]) -> Domain {
        rules.iter().copied().collect()
    }

    #[test]
    fn depth_examples() {
        assert_eq!(Node::leaf(3).depth(), 1);
        assert_eq!(parse_node("4{3,4{1,3}}").unwrap().depth(), 3);
        assert_eq!(
            Node::Hole {
                domain: dom(&[1, 2, 3])
            }
            .depth(),
            1
        );
    }

    #[test]
    fn serialize_examples() {
        assert_eq!(Node::leaf(3).serialize().unwrap(), "3");
        assert_eq!(solution().serialize().unwrap(), "4{3,4{1,3}}");
        let n = Node::node(5, vec![Node::leaf(1), Node::leaf(2)]);
        assert_eq!(n.serialize().unwrap(), "5{1,2}");
        assert_eq!(n.to_string(), "5{1,2}");
    }

    #[test]
    fn serialize_rejects_holes() {
        let n = Node::node(4, vec![Node::leaf(3), Node::Hole { domain: dom(&[1]) }]);
        assert_eq!(n.serialize(), Err(AstError::ContainsHole));
    }

    #[test]
    fn parse_examples() {
        assert_eq!(parse_node("4{3,4{1,3}}").unwrap(), solution());
        assert_eq!(parse_node("3").unwrap(), Node::leaf(3));
        let err = parse_node("4{3,").unwrap_err();
        assert_eq!(err.position, 4);
        assert!(parse_node("").is_err());
        assert!(parse_node("4{3}}").is_err());
        assert!(parse_node("0").is_err());
        assert!(parse_node("4{}").is_err());
        assert!(parse_node("4 {3}").is_err());
    }

    #[test]
    fn completeness() {
        let g = g0();
        assert!(parse_node("4{3,4{1,3}}").unwrap().is_complete());
        // root *, left child a uniform hole over {+, *}
        let fig = Node::rule(
            &g,
            5,
            vec![
                Node::uniform_hole(&g, dom(&[4, 5]), vec![Node::leaf(3), Node::leaf(1)]).unwrap(),
                Node::leaf(2),
            ],
        )
        .unwrap();
        assert!(!fig.is_complete());
        assert!(fig.is_uniform());
        assert!(!Node::Hole {
            domain: dom(&[1, 2, 3])
        }
        .is_complete());
    }

    #[test]
    fn checked_constructors() {
        let g = g0();
        assert!(Node::rule(&g, 4, vec![Node::leaf(1)]).is_err());
        assert!(Node::rule(&g, 9, vec![]).is_err());
        assert!(matches!(
            Node::uniform_hole(&g, dom(&[1, 4]), vec![]),
            Err(AstError::MixedShapes(_))
        ));
        assert!(matches!(
            Node::hole(&g, Domain::new()),
            Err(AstError::EmptyDomain)
        ));
        assert!(Node::hole(&g, dom(&[1, 4])).is_ok());
        let mixed = parse_grammar("A = a | B\nB = b").unwrap();
        assert!(matches!(
            Node::hole(&mixed, dom(&[1, 3])),
            Err(AstError::MixedTypes(_))
        ));
        assert!(matches!(
            Node::rule(&mixed, 2, vec![Node::leaf(1)]),
            Err(AstError::ChildType { .. })
        ));
    }

    fn arb_tree(depth: u32) -> impl Strategy<Value = Node> {
        let leaf = (1usize..=3).prop_map(Node::leaf);
        leaf.prop_recursive(depth, 64, 2, |inner| {
            (4usize..=5, inner.clone(), inner).prop_map(|(r, a, b)| Node::node(r, vec![a, b]))
        })
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(n in arb_tree(5)) {
            let text = n.serialize().unwrap();
            prop_assert_eq!(parse_node(&text).unwrap(), n);
        }

        #[test]
        fn generated_trees_type_check(n in arb_tree(5)) {
            fn rebuild(g: &Grammar, n: &Node) -> Result<Node, AstError> {
                let kids = n.children().iter().map(|c| rebuild(g, c)).collect::<Result<Vec<_>, _>>()?;
                Node::rule(g, n.rule_index().unwrap(), kids)
            }
            let g = g0();
            prop_assert_eq!(rebuild(&g, &n).unwrap(), n);
        }
    }
}

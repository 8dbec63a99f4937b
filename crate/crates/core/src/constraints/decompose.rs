use crate::ast::Node;
use crate::domain::Domain;
use crate::grammar::Grammar;

/// Splits every `Hole` of `tree` into shape classes (rules with equal child
/// types). Each output fixes one class per hole: a uniform hole over the class,
/// with fresh full-domain holes for its children. Singleton classes become rule
/// nodes directly. Outputs denote pairwise disjoint program sets whose union is
/// the input's; a hole with an empty domain yields no outputs.
pub fn decompose(grammar: &Grammar, tree: &Node) -> Vec<Node> {
    match tree {
        Node::Rule { index, children } => product(grammar, children)
            .into_iter()
            .map(|children| Node::Rule {
                index: *index,
                children,
            })
            .collect(),
        Node::UniformHole { domain, children } => product(grammar, children)
            .into_iter()
            .map(|children| Node::UniformHole {
                domain: domain.clone(),
                children,
            })
            .collect(),
        Node::Hole { domain } => shape_classes(grammar, domain)
            .into_iter()
            .map(|class| {
                let first = class.first().expect("classes are non-empty");
                let children = grammar
                    .childtypes(first)
                    .expect("domain rules exist in grammar")
                    .iter()
                    .map(|ty| Node::Hole {
                        domain: grammar.domain_of(ty).expect("child types are nonterminals"),
                    })
                    .collect();
                match class.single() {
                    Some(index) => Node::Rule { index, children },
                    None => Node::UniformHole {
                        domain: class,
                        children,
                    },
                }
            })
            .collect(),
    }
}

/// Partition of `domain` by rule shape, ordered by each class's smallest rule.
pub fn shape_classes(grammar: &Grammar, domain: &Domain) -> Vec<Domain> {
    let mut classes: Vec<Domain> = Vec::new();
    for r in domain.iter() {
        match classes
            .iter_mut()
            .find(|c| grammar.same_shape(c.first().unwrap(), r))
        {
            Some(class) => {
                class.insert(r);
            }
            None => classes.push(Domain::singleton(r)),
        }
    }
    classes
}

fn product(grammar: &Grammar, children: &[Node]) -> Vec<Vec<Node>> {
    let mut combos: Vec<Vec<Node>> = vec![Vec::with_capacity(children.len())];
    for child in children {
        let options = decompose(grammar, child);
        if options.is_empty() {
            return Vec::new();
        }
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                options.iter().map(move |o| {
                    let mut v = prefix.clone();
                    v.push(o.clone());
                    v
                })
            })
            .collect();
    }
    combos
}

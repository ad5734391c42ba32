use std::collections::BTreeSet;
use std::fmt;

use super::primitive::{Aabb, Primitive, PrimitiveSet, Vec3};
use crate::error::{Error, Result};

/// Boolean expression tree over primitive ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CsgTree {
    Leaf(String),
    Union(Vec<CsgTree>),
    Intersection(Vec<CsgTree>),
    Complement(Box<CsgTree>),
}

/// Result of a point classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Inside,
    Outside,
}

impl Membership {
    pub fn is_inside(self) -> bool {
        self == Membership::Inside
    }
}

impl From<bool> for Membership {
    fn from(inside: bool) -> Self {
        if inside { Membership::Inside } else { Membership::Outside }
    }
}

impl CsgTree {
    pub fn leaf(id: impl Into<String>) -> Self {
        CsgTree::Leaf(id.into())
    }

    pub fn complement(child: CsgTree) -> Self {
        CsgTree::Complement(Box::new(child))
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            CsgTree::Leaf(_) => 1,
            CsgTree::Union(c) | CsgTree::Intersection(c) => c.iter().map(CsgTree::leaf_count).sum(),
            CsgTree::Complement(c) => c.leaf_count(),
        }
    }

    /// Distinct primitive ids referenced by the tree.
    pub fn primitive_ids(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_ids(&mut out);
        out
    }

    fn collect_ids<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            CsgTree::Leaf(id) => {
                out.insert(id);
            }
            CsgTree::Union(c) | CsgTree::Intersection(c) => c.iter().for_each(|t| t.collect_ids(out)),
            CsgTree::Complement(c) => c.collect_ids(out),
        }
    }

    /// Checks arity rules and that every leaf resolves in `set`.
    pub fn validate(&self, set: &PrimitiveSet) -> Result<()> {
        match self {
            CsgTree::Leaf(id) => set.index_of(id).map(|_| ()).ok_or_else(|| Error::UnresolvedId(id.clone())),
            CsgTree::Union(c) | CsgTree::Intersection(c) => {
                if c.len() < 2 {
                    return Err(Error::MalformedTree(format!(
                        "{} node needs at least 2 children, found {}",
                        if matches!(self, CsgTree::Union(_)) { "union" } else { "intersection" },
                        c.len()
                    )));
                }
                c.iter().try_for_each(|t| t.validate(set))
            }
            CsgTree::Complement(c) => c.validate(set),
        }
    }

    /// Whether the described solid is bounded, judged structurally.
    pub fn is_bounded(&self) -> bool {
        match self {
            CsgTree::Leaf(_) => true,
            CsgTree::Union(c) => c.iter().all(CsgTree::is_bounded),
            CsgTree::Intersection(c) => c.iter().any(CsgTree::is_bounded),
            CsgTree::Complement(_) => false,
        }
    }

    /// Boolean evaluation with leaf membership given by `inside`.
    pub fn evaluate(&self, inside: &impl Fn(&str) -> bool) -> bool {
        match self {
            CsgTree::Leaf(id) => inside(id),
            CsgTree::Union(c) => c.iter().any(|t| t.evaluate(inside)),
            CsgTree::Intersection(c) => c.iter().all(|t| t.evaluate(inside)),
            CsgTree::Complement(c) => !c.evaluate(inside),
        }
    }

    /// Resolves leaves against `set` into an owned evaluator.
    pub fn compile(&self, set: &PrimitiveSet) -> Result<Solid> {
        self.validate(set)?;
        Ok(Solid { root: self.compile_node(set) })
    }

    fn compile_node(&self, set: &PrimitiveSet) -> Node {
        match self {
            CsgTree::Leaf(id) => Node::Leaf(set.by_id(id).expect("validated").clone()),
            CsgTree::Union(c) => Node::Union(c.iter().map(|t| t.compile_node(set)).collect()),
            CsgTree::Intersection(c) => Node::Intersection(c.iter().map(|t| t.compile_node(set)).collect()),
            CsgTree::Complement(c) => Node::Complement(Box::new(c.compile_node(set))),
        }
    }
}

/// Classifies `point` against `tree` over `set`.
pub fn tree_membership(tree: &CsgTree, set: &PrimitiveSet, point: &Vec3) -> Result<Membership> {
    Ok(tree.compile(set)?.membership(point))
}

impl fmt::Display for CsgTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join(f: &mut fmt::Formatter<'_>, children: &[CsgTree], sep: &str, nested: bool) -> fmt::Result {
            for (i, c) in children.iter().enumerate() {
                if i > 0 {
                    f.write_str(sep)?;
                }
                let wrap = nested && matches!(c, CsgTree::Union(_) | CsgTree::Intersection(_));
                if wrap {
                    write!(f, "({c})")?;
                } else {
                    write!(f, "{c}")?;
                }
            }
            Ok(())
        }
        match self {
            CsgTree::Leaf(id) => f.write_str(id),
            CsgTree::Union(c) => join(f, c, " | ", true),
            CsgTree::Intersection(c) => join(f, c, " & ", true),
            CsgTree::Complement(c) => match c.as_ref() {
                CsgTree::Leaf(_) | CsgTree::Complement(_) => write!(f, "!{c}"),
                _ => write!(f, "!({c})"),
            },
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(Primitive),
    Union(Vec<Node>),
    Intersection(Vec<Node>),
    Complement(Box<Node>),
}

impl Node {
    fn value(&self, p: &Vec3) -> f64 {
        match self {
            Node::Leaf(prim) => prim.signed_distance(p),
            Node::Union(c) => c.iter().map(|n| n.value(p)).fold(f64::INFINITY, f64::min),
            Node::Intersection(c) => c.iter().map(|n| n.value(p)).fold(f64::NEG_INFINITY, f64::max),
            Node::Complement(c) => -c.value(p),
        }
    }

    fn bounds(&self) -> Option<Aabb> {
        match self {
            Node::Leaf(prim) => Some(prim.aabb()),
            Node::Union(c) => {
                let mut acc: Option<Aabb> = None;
                for n in c {
                    let b = n.bounds()?;
                    acc = Some(acc.map_or(b, |a| a.union(&b)));
                }
                acc
            }
            Node::Intersection(c) => c.iter().filter_map(Node::bounds).reduce(|a, b| a.intersection(&b)),
            Node::Complement(_) => None,
        }
    }

    fn leaves<'a>(&'a self, out: &mut Vec<&'a Primitive>) {
        match self {
            Node::Leaf(p) => {
                if !out.iter().any(|q| q.id() == p.id()) {
                    out.push(p);
                }
            }
            Node::Union(c) | Node::Intersection(c) => c.iter().for_each(|n| n.leaves(out)),
            Node::Complement(c) => c.leaves(out),
        }
    }
}

/// A tree with its leaves resolved, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Solid {
    root: Node,
}

impl Solid {
    /// Min/max/negation composition of the leaf signed distances.
    pub fn value(&self, p: &Vec3) -> f64 {
        self.root.value(p)
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.value(p) < 0.0
    }

    pub fn membership(&self, p: &Vec3) -> Membership {
        self.contains(p).into()
    }

    /// Conservative bounds; `None` when unbounded.
    pub fn bounds(&self) -> Option<Aabb> {
        self.root.bounds()
    }

    /// Distinct primitives referenced, in first-visit order.
    pub fn primitives(&self) -> Vec<&Primitive> {
        let mut out = Vec::new();
        self.root.leaves(&mut out);
        out
    }

    /// Central-difference gradient of [`Solid::value`].
    pub fn gradient(&self, p: &Vec3, step: f64) -> Vec3 {
        Vec3::from_fn(|i, _| {
            let mut e = Vec3::zeros();
            e[i] = step;
            (self.value(&(p + e)) - self.value(&(p - e))) / (2.0 * step)
        })
    }
}

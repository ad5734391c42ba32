use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::CsgTree;
use crate::graph::{Clique, IntersectionGraph};
use crate::products::{conjunction, ProductTable};

use super::{Candidate, CoverInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Literal {
    Pos,
    Neg,
}

/// A conjunction of primitive literals, sorted by primitive index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Conjunction(Vec<(usize, Literal)>);

impl Conjunction {
    pub fn new(mut literals: Vec<(usize, Literal)>) -> Self {
        literals.sort_unstable();
        literals.dedup_by_key(|(p, _)| *p);
        Conjunction(literals)
    }

    pub fn literals(&self) -> &[(usize, Literal)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn positives(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().filter(|(_, l)| *l == Literal::Pos).map(|(p, _)| *p)
    }

    pub fn literal(&self, primitive: usize) -> Option<Literal> {
        self.0.iter().find(|(p, _)| *p == primitive).map(|(_, l)| *l)
    }

    /// Whether the product with the given sorted positive set lies in this conjunction.
    pub fn admits(&self, positives: &[usize]) -> bool {
        self.0.iter().all(|&(p, lit)| (positives.binary_search(&p).is_ok()) == (lit == Literal::Pos))
    }

    pub fn to_tree(&self, ids: &[String]) -> CsgTree {
        conjunction(
            self.0
                .iter()
                .map(|&(p, lit)| match lit {
                    Literal::Pos => CsgTree::leaf(&ids[p]),
                    Literal::Neg => CsgTree::complement(CsgTree::leaf(&ids[p])),
                })
                .collect(),
        )
    }

    pub fn display<'a>(&'a self, ids: &'a [String]) -> impl fmt::Display + 'a {
        struct D<'a>(&'a Conjunction, &'a [String]);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                for (i, &(p, lit)) in self.0 .0.iter().enumerate() {
                    if i > 0 {
                        f.write_str("&")?;
                    }
                    if lit == Literal::Neg {
                        f.write_str("!")?;
                    }
                    f.write_str(&self.1[p])?;
                }
                Ok(())
            }
        }
        D(self, ids)
    }
}

/// Candidate pool construction strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Literal patterns per maximal clique, extended with complements of
    /// neighbouring primitives outside the clique.
    #[default]
    Partitioned,
    /// Literal patterns over all primitives.
    Global,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Partitioned => "partitioned",
            Mode::Global => "global",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "partitioned" => Ok(Mode::Partitioned),
            "global" => Ok(Mode::Global),
            _ => Err(Error::Parameter(format!("unknown mode `{s}` (expected partitioned|global)"))),
        }
    }
}

/// Largest number of free literal positions tried for one positive set.
const MAX_FREE_LITERALS: usize = 24;

struct Pool<'a> {
    table: &'a ProductTable,
    position: Vec<Option<usize>>,
    best: BTreeMap<Vec<usize>, (Conjunction, Option<usize>)>,
}

impl<'a> Pool<'a> {
    fn new(table: &'a ProductTable) -> Self {
        let mut position = vec![None; table.n_f()];
        for (k, u) in table.universe().into_iter().enumerate() {
            position[u] = Some(k);
        }
        Pool { table, position, best: BTreeMap::new() }
    }

    /// Keeps `conj` if it covers a non-empty set of inside products only; for
    /// each covered set the cheapest conjunction survives.
    fn offer(&mut self, conj: Conjunction, clique: Option<usize>) {
        let mut covers = Vec::new();
        for (i, p) in self.table.products().iter().enumerate() {
            if conj.admits(&p.positives) {
                match self.position[i] {
                    Some(k) => covers.push(k),
                    None => return,
                }
            }
        }
        if covers.is_empty() {
            return;
        }
        covers.sort_unstable();
        match self.best.entry(covers) {
            Entry::Vacant(e) => {
                e.insert((conj, clique));
            }
            Entry::Occupied(mut e) => {
                let (old, old_clique) = e.get();
                let new_key = (conj.len(), &conj, clique);
                if new_key < (old.len(), old, *old_clique) {
                    e.insert((conj, clique));
                }
            }
        }
    }

    /// Offers `positives` combined with every subset of `optional` as negatives.
    fn offer_extensions(&mut self, positives: &[usize], fixed_neg: &[usize], optional: &[usize], clique: Option<usize>) -> Result<()> {
        if optional.len() > MAX_FREE_LITERALS {
            return Err(Error::Parameter(format!(
                "{} optional complement literals for one pattern exceeds the limit of {MAX_FREE_LITERALS}",
                optional.len()
            )));
        }
        for mask in 0u64..(1u64 << optional.len()) {
            let lits = positives
                .iter()
                .map(|&p| (p, Literal::Pos))
                .chain(fixed_neg.iter().map(|&p| (p, Literal::Neg)))
                .chain(optional.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &p)| (p, Literal::Neg)))
                .collect();
            self.offer(Conjunction::new(lits), clique);
        }
        Ok(())
    }
}

/// Builds the candidate pool for the smallest exact cover of the inside
/// products.
///
/// Every candidate is a conjunction with at least one positive literal whose
/// region contains only inside products. When several conjunctions cover the
/// same product set, only the one with fewest literals is kept (ties: smaller
/// literal list, then earlier clique). Candidates are ordered by literal count,
/// then literal list.
pub fn generate_candidates(
    table: &ProductTable,
    cliques: &[Clique],
    graph: &IntersectionGraph,
    mode: Mode,
) -> Result<CoverInstance> {
    if table.primitive_ids() != graph.vertices() {
        return Err(Error::Input("product table and graph use different primitive sets".into()));
    }
    let mut pool = Pool::new(table);
    match mode {
        Mode::Global => {
            // A negative literal on a primitive that is not adjacent to every
            // positive one never changes the covered set, so only common
            // neighbours are enumerated.
            for positives in graph.all_cliques() {
                let common: Vec<usize> = (0..graph.vertex_count())
                    .filter(|v| !positives.contains(v) && positives.iter().all(|&u| graph.has_edge(u, *v)))
                    .collect();
                pool.offer_extensions(&positives, &[], &common, None)?;
            }
        }
        Mode::Partitioned => {
            for (j, clique) in cliques.iter().enumerate() {
                let members = clique.members();
                if members.len() > MAX_FREE_LITERALS {
                    return Err(Error::Parameter(format!("clique of size {} is too large to enumerate", members.len())));
                }
                // Each member is positive, negative or absent; at least one positive.
                let patterns = 3usize.pow(members.len() as u32);
                for code in 0..patterns {
                    let (mut pos, mut neg) = (Vec::new(), Vec::new());
                    let mut c = code;
                    for &m in members {
                        match c % 3 {
                            1 => pos.push(m),
                            2 => neg.push(m),
                            _ => {}
                        }
                        c /= 3;
                    }
                    if pos.is_empty() {
                        continue;
                    }
                    let mut outside: Vec<usize> = pos
                        .iter()
                        .flat_map(|&p| graph.neighbors(p).iter().copied())
                        .filter(|v| !clique.contains(*v))
                        .collect();
                    outside.sort_unstable();
                    outside.dedup();
                    pool.offer_extensions(&pos, &neg, &outside, Some(j))?;
                }
            }
        }
    }

    let universe_products = table.universe();
    let universe: Vec<String> = universe_products.iter().map(|&u| table.name(u)).collect();
    let ids = table.primitive_ids().to_vec();
    let mut entries: Vec<(Vec<usize>, Conjunction, Option<usize>)> =
        pool.best.into_iter().map(|(covers, (conj, clique))| (covers, conj, clique)).collect();
    entries.sort_by(|a, b| (a.1.len(), &a.1).cmp(&(b.1.len(), &b.1)));
    let candidates = entries
        .into_iter()
        .map(|(covers, conj, clique)| {
            let name = conj.display(&ids).to_string();
            Candidate { name, literal_count: conj.len(), covers, conjunction: Some(conj), source_clique: clique }
        })
        .collect();
    let instance = CoverInstance { universe, candidates, primitive_ids: ids };
    if let Some(&u) = instance.uncovered_elements().first() {
        return Err(Error::Infeasible(instance.universe[u].clone()));
    }
    Ok(instance)
}

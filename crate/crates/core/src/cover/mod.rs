//! Smallest exact cover of the inside products and CSG tree assembly.

mod candidates;
pub mod dlx;

pub use candidates::{generate_candidates, Conjunction, Literal, Mode};

use crate::error::{Error, Result};
use crate::geometry::CsgTree;
use dlx::{CollectAll, CoverVisitor, Dlx};

/// One subset of the universe offered to the cover.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub name: String,
    /// Sorted universe positions.
    pub covers: Vec<usize>,
    pub literal_count: usize,
    /// Literal form; absent for instances loaded without geometry.
    pub conjunction: Option<Conjunction>,
    /// Index of the clique this candidate was generated from (partitioned mode).
    pub source_clique: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverInstance {
    /// Element labels; candidates refer to positions in this list.
    pub universe: Vec<String>,
    pub candidates: Vec<Candidate>,
    /// Primitive ids used by candidate conjunctions.
    pub primitive_ids: Vec<String>,
}

impl CoverInstance {
    /// Instance without literal information, e.g. a plain set-system.
    pub fn from_sets(universe: Vec<String>, subsets: Vec<(String, Vec<usize>, usize)>) -> Result<Self> {
        let n = universe.len();
        let candidates = subsets
            .into_iter()
            .map(|(name, mut covers, literal_count)| {
                covers.sort_unstable();
                covers.dedup();
                if let Some(&bad) = covers.iter().find(|&&c| c >= n) {
                    return Err(Error::Input(format!("subset `{name}` covers unknown element index {bad}")));
                }
                Ok(Candidate { name, covers, literal_count, conjunction: None, source_clique: None })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CoverInstance { universe, candidates, primitive_ids: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Universe positions covered by no candidate.
    pub fn uncovered_elements(&self) -> Vec<usize> {
        let mut hit = vec![false; self.universe.len()];
        for c in &self.candidates {
            for &k in &c.covers {
                hit[k] = true;
            }
        }
        (0..hit.len()).filter(|&k| !hit[k]).collect()
    }

    pub fn check_feasible(&self) -> Result<()> {
        match self.uncovered_elements().first() {
            Some(&k) => Err(Error::Infeasible(self.universe[k].clone())),
            None => Ok(()),
        }
    }

    fn dlx(&self) -> Dlx {
        let rows: Vec<Vec<usize>> = self.candidates.iter().map(|c| c.covers.clone()).collect();
        Dlx::new(self.universe.len(), &rows)
    }

    pub fn solution(&self, mut selected: Vec<usize>) -> CoverSolution {
        selected.sort_unstable();
        selected.dedup();
        let total_literals = selected.iter().map(|&i| self.candidates[i].literal_count).sum();
        CoverSolution { subsets_used: selected.len(), total_literals, selected }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverSolution {
    /// Sorted candidate indices.
    pub selected: Vec<usize>,
    pub subsets_used: usize,
    pub total_literals: usize,
}

impl CoverSolution {
    /// Ordering key: fewest subsets, then fewest literals, then lexicographic indices.
    pub fn key(&self) -> (usize, usize, &[usize]) {
        (self.subsets_used, self.total_literals, &self.selected)
    }

    pub fn names<'a>(&self, instance: &'a CoverInstance) -> Vec<&'a str> {
        self.selected.iter().map(|&i| instance.candidates[i].name.as_str()).collect()
    }
}

struct Smallest<'a> {
    instance: &'a CoverInstance,
    best: Option<CoverSolution>,
}

impl CoverVisitor for Smallest<'_> {
    fn descend(&mut self, partial: &[usize]) -> bool {
        // Items remain, so at least one more subset is needed.
        self.best.as_ref().is_none_or(|b| partial.len() < b.subsets_used)
    }

    fn solution(&mut self, rows: &[usize]) {
        let s = self.instance.solution(rows.to_vec());
        if self.best.as_ref().is_none_or(|b| s.key() < b.key()) {
            self.best = Some(s);
        }
    }
}

/// Smallest exact cover by Dancing Links search with branch-and-bound on the
/// subset count.
pub fn solve_cover_dlx(instance: &CoverInstance) -> Result<CoverSolution> {
    instance.check_feasible().map_err(|_| Error::Unsatisfiable)?;
    let mut visitor = Smallest { instance, best: None };
    instance.dlx().search(&mut visitor);
    visitor.best.ok_or(Error::Unsatisfiable)
}

/// Every exact cover of the instance, each as sorted candidate indices.
pub fn enumerate_exact_covers(instance: &CoverInstance) -> Vec<Vec<usize>> {
    let mut all = CollectAll::default();
    instance.dlx().search(&mut all);
    all.covers.sort();
    all.covers
}

/// Union of the selected conjunctions.
pub fn assemble_tree(solution: &CoverSolution, instance: &CoverInstance) -> Result<CsgTree> {
    if solution.selected.is_empty() {
        return Err(Error::Input("cannot assemble a tree from an empty selection".into()));
    }
    let mut terms = solution
        .selected
        .iter()
        .map(|&i| {
            let c = instance
                .candidates
                .get(i)
                .ok_or_else(|| Error::Input(format!("candidate index {i} out of range")))?;
            c.conjunction
                .as_ref()
                .map(|conj| conj.to_tree(&instance.primitive_ids))
                .ok_or_else(|| Error::Input(format!("candidate `{}` has no literal form", c.name)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(if terms.len() == 1 { terms.pop().expect("one term") } else { CsgTree::Union(terms) })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Universe position.
    pub element: usize,
    pub label: String,
    /// How many selected candidates cover the element (0 = uncovered).
    pub times_covered: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoverCheck {
    Valid,
    Violations(Vec<Violation>),
}

impl CoverCheck {
    pub fn is_valid(&self) -> bool {
        matches!(self, CoverCheck::Valid)
    }
}

/// Reports each universe element not covered exactly once.
pub fn verify_cover(instance: &CoverInstance, selected: &[usize]) -> CoverCheck {
    let mut counts = vec![0usize; instance.universe.len()];
    for &i in selected {
        for &k in &instance.candidates[i].covers {
            counts[k] += 1;
        }
    }
    let violations: Vec<Violation> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 1)
        .map(|(k, &c)| Violation { element: k, label: instance.universe[k].clone(), times_covered: c })
        .collect();
    if violations.is_empty() { CoverCheck::Valid } else { CoverCheck::Violations(violations) }
}

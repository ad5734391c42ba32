//! Non-empty fundamental products, their classification against the target
//! solid, and candidate-count bounds.

use std::collections::HashSet;

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::geometry::{sample_region, CsgTree, PrimitiveSet, SolidOracle, Vec3};
use crate::graph::{Clique, IntersectionGraph};
use crate::seed;

pub const DEFAULT_SAMPLES_PER_REGION: usize = 2048;
pub const DEFAULT_TAU_IN: f64 = 0.95;
pub const DEFAULT_TAU_OUT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductLabel {
    Inside,
    Outside,
    Mixed,
}

impl ProductLabel {
    pub fn from_fraction(fraction: f64, tau_in: f64, tau_out: f64) -> Self {
        if fraction >= tau_in {
            ProductLabel::Inside
        } else if fraction <= tau_out {
            ProductLabel::Outside
        } else {
            ProductLabel::Mixed
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProductLabel::Inside => "inside",
            ProductLabel::Outside => "outside",
            ProductLabel::Mixed => "mixed",
        }
    }
}

/// A region `(∩ p, p ∈ positives) ∩ (∩ !p, p ∉ positives)`, identified by its
/// positive set.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalProduct {
    /// Sorted primitive indices carrying a positive literal.
    pub positives: Vec<usize>,
    /// Witness points; empty for products loaded from abstract instances.
    pub samples: Vec<Vec3>,
    pub inside_fraction: f64,
    pub label: ProductLabel,
}

impl FundamentalProduct {
    pub fn is_positive(&self, primitive: usize) -> bool {
        self.positives.binary_search(&primitive).is_ok()
    }

    pub fn is_inside(&self) -> bool {
        self.label == ProductLabel::Inside
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductConfig {
    pub samples_per_region: usize,
    pub seed: u64,
    pub tau_in: f64,
    pub tau_out: f64,
}

impl Default for ProductConfig {
    fn default() -> Self {
        ProductConfig {
            samples_per_region: DEFAULT_SAMPLES_PER_REGION,
            seed: 0,
            tau_in: DEFAULT_TAU_IN,
            tau_out: DEFAULT_TAU_OUT,
        }
    }
}

impl ProductConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_region == 0 {
            return Err(Error::Parameter("samples per region must be positive".into()));
        }
        if !(0.0 <= self.tau_out && self.tau_out < self.tau_in && self.tau_in <= 1.0) {
            return Err(Error::Parameter(format!(
                "thresholds must satisfy 0 <= tau_out < tau_in <= 1 (got {} / {})",
                self.tau_out, self.tau_in
            )));
        }
        Ok(())
    }
}

/// Table of non-empty fundamental products over a primitive set.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductTable {
    primitive_ids: Vec<String>,
    products: Vec<FundamentalProduct>,
    warnings: Vec<String>,
}

impl ProductTable {
    /// Builds a table from labelled positive sets; every positive set must be a
    /// clique of `graph` and appear once.
    pub fn from_labels(graph: &IntersectionGraph, labelled: Vec<(Vec<usize>, bool)>) -> Result<Self> {
        let products = labelled
            .into_iter()
            .map(|(mut positives, inside)| {
                positives.sort_unstable();
                positives.dedup();
                FundamentalProduct {
                    positives,
                    samples: Vec::new(),
                    inside_fraction: if inside { 1.0 } else { 0.0 },
                    label: if inside { ProductLabel::Inside } else { ProductLabel::Outside },
                }
            })
            .collect();
        Self::assemble(graph, products, Vec::new())
    }

    fn assemble(graph: &IntersectionGraph, mut products: Vec<FundamentalProduct>, warnings: Vec<String>) -> Result<Self> {
        let ids = graph.vertices().to_vec();
        let mut seen = HashSet::new();
        for p in &products {
            if p.positives.is_empty() {
                return Err(Error::Input("product with no positive primitive".into()));
            }
            if p.positives.iter().any(|&v| v >= ids.len()) {
                return Err(Error::Input(format!("product {:?} references a missing primitive", p.positives)));
            }
            if !graph.is_clique(&p.positives) {
                return Err(Error::Input(format!(
                    "product {} is not a clique of the intersection graph",
                    format_set(&ids, &p.positives)
                )));
            }
            if !seen.insert(p.positives.clone()) {
                return Err(Error::Input(format!("duplicate product {}", format_set(&ids, &p.positives))));
            }
        }
        products.sort_by(|a, b| {
            a.positives.len().cmp(&b.positives.len()).then_with(|| sorted_ids(&ids, &a.positives).cmp(&sorted_ids(&ids, &b.positives)))
        });
        Ok(ProductTable { primitive_ids: ids, products, warnings })
    }

    pub fn primitive_ids(&self) -> &[String] {
        &self.primitive_ids
    }

    pub fn products(&self) -> &[FundamentalProduct] {
        &self.products
    }

    pub fn get(&self, i: usize) -> &FundamentalProduct {
        &self.products[i]
    }

    /// Number of non-empty products.
    pub fn n_f(&self) -> usize {
        self.products.len()
    }

    /// Indices of inside-labelled products.
    pub fn universe(&self) -> Vec<usize> {
        (0..self.products.len()).filter(|&i| self.products[i].is_inside()).collect()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn find(&self, positives: &[usize]) -> Option<usize> {
        let mut key = positives.to_vec();
        key.sort_unstable();
        self.products.iter().position(|p| p.positives == key)
    }

    /// Looks a product up by the ids of its positive primitives.
    pub fn find_by_ids<S: AsRef<str>>(&self, ids: &[S]) -> Option<usize> {
        let idx = ids
            .iter()
            .map(|id| self.primitive_ids.iter().position(|p| p == id.as_ref()))
            .collect::<Option<Vec<_>>>()?;
        self.find(&idx)
    }

    /// `{A,B}`-style name of product `i`.
    pub fn name(&self, i: usize) -> String {
        format_set(&self.primitive_ids, &self.products[i].positives)
    }

    pub fn positive_ids(&self, i: usize) -> Vec<String> {
        sorted_ids(&self.primitive_ids, &self.products[i].positives)
    }
}

fn sorted_ids(ids: &[String], members: &[usize]) -> Vec<String> {
    let mut out: Vec<String> = members.iter().map(|&m| ids[m].clone()).collect();
    out.sort();
    out
}

pub(crate) fn format_set(ids: &[String], members: &[usize]) -> String {
    format!("{{{}}}", sorted_ids(ids, members).join(","))
}

/// Samples and classifies every non-empty fundamental product.
///
/// Candidate positive sets are the cliques of `graph`: a product whose positive
/// primitives are not pairwise overlapping is empty. The all-negative product is
/// never considered.
pub fn enumerate_products(
    set: &PrimitiveSet,
    graph: &IntersectionGraph,
    oracle: &SolidOracle,
    cfg: &ProductConfig,
) -> Result<ProductTable> {
    cfg.validate()?;
    if graph.vertices() != set.ids().as_slice() {
        return Err(Error::Input("intersection graph was built over a different primitive set".into()));
    }
    let prims = set.as_slice();
    let cliques = graph.all_cliques();

    let classify = |positives: &Vec<usize>| -> Option<FundamentalProduct> {
        let pos: Vec<_> = positives.iter().map(|&i| &prims[i]).collect();
        let neg: Vec<_> = (0..prims.len()).filter(|i| !positives.contains(i)).map(|i| &prims[i]).collect();
        let key: Vec<u64> = positives.iter().map(|&i| i as u64).collect();
        let samples = sample_region(&pos, &neg, cfg.samples_per_region, seed::derive(cfg.seed, &key));
        if samples.is_empty() {
            return None;
        }
        let inside = samples.iter().filter(|p| oracle.contains(p)).count();
        let inside_fraction = inside as f64 / samples.len() as f64;
        Some(FundamentalProduct {
            positives: positives.clone(),
            samples,
            inside_fraction,
            label: ProductLabel::from_fraction(inside_fraction, cfg.tau_in, cfg.tau_out),
        })
    };

    #[cfg(feature = "parallel")]
    let found: Vec<Option<FundamentalProduct>> = {
        use rayon::prelude::*;
        cliques.par_iter().map(classify).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let found: Vec<Option<FundamentalProduct>> = cliques.iter().map(classify).collect();

    let products: Vec<FundamentalProduct> = found.into_iter().flatten().collect();
    let ids = set.ids();
    let warnings = products
        .iter()
        .filter(|p| p.label == ProductLabel::Mixed)
        .map(|p| {
            format!(
                "product {} is mixed (inside fraction {:.3}); treated as outside",
                format_set(&ids, &p.positives),
                p.inside_fraction
            )
        })
        .collect();
    ProductTable::assemble(graph, products, warnings)
}

/// Upper bounds on the number of candidate subsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateBounds {
    /// `2^n_f - 1`.
    pub global_bound: BigUint,
    /// `sum_j (2^{n_f^j} - 1)` over the given cliques.
    pub partitioned_bound: Option<BigUint>,
    /// Products whose positive set lies inside clique `j`.
    pub per_clique_nf: Vec<usize>,
}

fn mersenne(n: usize) -> BigUint {
    (BigUint::from(1u8) << n) - 1u8
}

pub fn candidate_bounds(table: &ProductTable, cliques: Option<&[Clique]>) -> CandidateBounds {
    let global_bound = mersenne(table.n_f());
    let Some(cliques) = cliques else {
        return CandidateBounds { global_bound, partitioned_bound: None, per_clique_nf: Vec::new() };
    };
    let per_clique_nf: Vec<usize> = cliques
        .iter()
        .map(|c| table.products().iter().filter(|p| p.positives.iter().all(|&v| c.contains(v))).count())
        .collect();
    let partitioned = per_clique_nf.iter().map(|&n| mersenne(n)).sum();
    CandidateBounds { global_bound, partitioned_bound: Some(partitioned), per_clique_nf }
}

/// The union of inside products, each written with its positive literals and
/// complements of only those primitives adjacent to every positive one (other
/// primitives cannot overlap the product region).
pub fn two_level_tree(table: &ProductTable, graph: &IntersectionGraph) -> Option<CsgTree> {
    let terms: Vec<CsgTree> = table
        .universe()
        .into_iter()
        .map(|i| {
            let p = table.get(i);
            let literals: Vec<CsgTree> = (0..graph.vertex_count())
                .filter_map(|v| {
                    if p.is_positive(v) {
                        Some(CsgTree::leaf(graph.id(v)))
                    } else if p.positives.iter().all(|&u| graph.has_edge(u, v)) {
                        Some(CsgTree::complement(CsgTree::leaf(graph.id(v))))
                    } else {
                        None
                    }
                })
                .collect();
            conjunction(literals)
        })
        .collect();
    match terms.len() {
        0 => None,
        1 => terms.into_iter().next(),
        _ => Some(CsgTree::Union(terms)),
    }
}

pub(crate) fn conjunction(mut literals: Vec<CsgTree>) -> CsgTree {
    if literals.len() == 1 {
        literals.pop().expect("one literal")
    } else {
        CsgTree::Intersection(literals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Primitive;
    use crate::graph::{build_intersection_graph, maximal_cliques_bk, OverlapSampling};

    fn scene_graph() -> IntersectionGraph {
        let ids = ["A", "B", "C", "D", "E", "F"].map(String::from).to_vec();
        let e = [("A", "B"), ("B", "C"), ("B", "D"), ("C", "D"), ("B", "E"), ("D", "E"), ("E", "F")];
        IntersectionGraph::new(ids, e).unwrap()
    }

    #[test]
    fn single_sphere_is_one_inside_product() {
        let set = PrimitiveSet::new(vec![Primitive::sphere("A", [0.0; 3], 1.0).unwrap()]).unwrap();
        let graph = build_intersection_graph(&set, OverlapSampling::default());
        let oracle = SolidOracle::ground_truth(&CsgTree::leaf("A"), &set).unwrap();
        let table = enumerate_products(&set, &graph, &oracle, &ProductConfig::default()).unwrap();
        assert_eq!(table.n_f(), 1);
        assert_eq!(table.get(0).positives, vec![0]);
        assert_eq!(table.get(0).label, ProductLabel::Inside);
        assert_eq!(table.universe(), vec![0]);
    }

    #[test]
    fn nested_sphere_leaves_outer_singleton_only() {
        // B lies entirely inside A, so the product {B} (B without A) is empty.
        let set = PrimitiveSet::new(vec![
            Primitive::sphere("A", [0.0; 3], 2.0).unwrap(),
            Primitive::sphere("B", [0.0; 3], 0.5).unwrap(),
        ])
        .unwrap();
        let graph = build_intersection_graph(&set, OverlapSampling::default());
        let oracle = SolidOracle::ground_truth(&CsgTree::leaf("A"), &set).unwrap();
        let table = enumerate_products(&set, &graph, &oracle, &ProductConfig::default()).unwrap();
        let names: Vec<String> = (0..table.n_f()).map(|i| table.name(i)).collect();
        assert_eq!(names, vec!["{A}", "{A,B}"]);
        for p in table.products() {
            for x in &p.samples {
                for (v, prim) in set.iter().enumerate() {
                    assert_eq!(prim.contains(x), p.is_positive(v));
                }
            }
        }
    }

    #[test]
    fn mixed_products_warn() {
        // The target is the upper half-space slab H; sphere A straddles it.
        let set = PrimitiveSet::new(vec![
            Primitive::sphere("A", [0.0; 3], 1.0).unwrap(),
            Primitive::cuboid("H", [0.0, 0.0, 5.0], [5.0, 5.0, 5.0]).unwrap(),
        ])
        .unwrap();
        let oracle = SolidOracle::ground_truth(&CsgTree::leaf("H"), &set).unwrap();
        let only_a = PrimitiveSet::new(vec![set.get(0).clone()]).unwrap();
        let graph = IntersectionGraph::from_indices(only_a.ids(), []).unwrap();
        let table = enumerate_products(&only_a, &graph, &oracle, &ProductConfig::default()).unwrap();
        assert_eq!(table.get(0).label, ProductLabel::Mixed);
        assert!((table.get(0).inside_fraction - 0.5).abs() < 0.05);
        assert_eq!(table.warnings().len(), 1);
        assert!(table.universe().is_empty());
    }

    #[test]
    fn bounds() {
        let g = scene_graph();
        let labelled = g.all_cliques().into_iter().map(|c| (c, false)).collect();
        let table = ProductTable::from_labels(&g, labelled).unwrap();
        assert_eq!(table.n_f(), 15);
        let cliques = maximal_cliques_bk(&g);
        let b = candidate_bounds(&table, Some(&cliques));
        assert_eq!(b.global_bound, BigUint::from(32767u32));
        assert_eq!(b.per_clique_nf, vec![7, 7, 3, 3]);
        assert_eq!(b.partitioned_bound, Some(BigUint::from(268u32)));

        let one = ProductTable::from_labels(&g, vec![(vec![0], true)]).unwrap();
        assert_eq!(candidate_bounds(&one, None).global_bound, BigUint::from(1u8));
    }

    #[test]
    fn bounds_do_not_overflow() {
        let n = 70;
        let g = IntersectionGraph::from_indices((0..n).map(|i| format!("p{i}")).collect(), []).unwrap();
        let table = ProductTable::from_labels(&g, (0..n).map(|i| (vec![i], true)).collect()).unwrap();
        let b = candidate_bounds(&table, None);
        assert_eq!(b.global_bound.bits(), 70);
    }

    #[test]
    fn labels_must_be_cliques() {
        let g = scene_graph();
        assert!(ProductTable::from_labels(&g, vec![(vec![0, 2], true)]).is_err());
        assert!(ProductTable::from_labels(&g, vec![(vec![0], true), (vec![0], false)]).is_err());
    }
}

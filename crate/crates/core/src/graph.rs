//! Primitive intersection graph and maximal clique enumeration.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::geometry::{sample_region, PrimitiveSet};
use crate::seed;

/// Default number of samples drawn per primitive when probing overlaps.
pub const DEFAULT_OVERLAP_SAMPLES: usize = 4096;

/// Undirected simple graph over primitive ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntersectionGraph {
    vertices: Vec<String>,
    adjacency: Vec<BTreeSet<usize>>,
}

impl IntersectionGraph {
    /// Builds a graph from ids; edges are stored canonically and deduplicated.
    pub fn new<S: AsRef<str>>(vertices: Vec<String>, edges: impl IntoIterator<Item = (S, S)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.clone(), i).is_some() {
                return Err(Error::DuplicateId(v.clone()));
            }
        }
        let lookup = |id: &str| index.get(id).copied().ok_or_else(|| Error::UnresolvedId(id.to_string()));
        let pairs = edges
            .into_iter()
            .map(|(a, b)| Ok((lookup(a.as_ref())?, lookup(b.as_ref())?)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(vertices, pairs)
    }

    pub fn from_indices(vertices: Vec<String>, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let n = vertices.len();
        let mut adjacency = vec![BTreeSet::new(); n];
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!("edge ({a}, {b}) references a missing vertex")));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop on `{}`", vertices[a])));
            }
            adjacency[a].insert(b);
            adjacency[b].insert(a);
        }
        Ok(IntersectionGraph { vertices, adjacency })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn id(&self, v: usize) -> &str {
        &self.vertices[v]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == id)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].contains(&b)
    }

    pub fn neighbors(&self, v: usize) -> &BTreeSet<usize> {
        &self.adjacency[v]
    }

    /// Canonical `(i, j)` pairs with `i < j`, in ascending order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, ns)| ns.range(a + 1..).map(move |&b| (a, b)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// Edges as id pairs, each pair ordered lexicographically, sorted.
    pub fn edge_ids(&self) -> Vec<(String, String)> {
        let mut out: Vec<_> = self
            .edges()
            .into_iter()
            .map(|(a, b)| {
                let (x, y) = (self.vertices[a].clone(), self.vertices[b].clone());
                if x <= y { (x, y) } else { (y, x) }
            })
            .collect();
        out.sort();
        out
    }

    pub fn is_clique(&self, members: &[usize]) -> bool {
        members.iter().enumerate().all(|(i, &a)| members[i + 1..].iter().all(|&b| self.has_edge(a, b)))
    }

    /// All non-empty cliques (not only maximal ones), each sorted by vertex index,
    /// in depth-first order of the clique tree.
    pub fn all_cliques(&self) -> Vec<Vec<usize>> {
        fn walk(g: &IntersectionGraph, current: &mut Vec<usize>, candidates: &[usize], out: &mut Vec<Vec<usize>>) {
            for (k, &v) in candidates.iter().enumerate() {
                current.push(v);
                out.push(current.clone());
                let next: Vec<usize> = candidates[k + 1..].iter().copied().filter(|&w| g.has_edge(v, w)).collect();
                walk(g, current, &next, out);
                current.pop();
            }
        }
        let mut out = Vec::new();
        let all: Vec<usize> = (0..self.vertex_count()).collect();
        walk(self, &mut Vec::new(), &all, &mut out);
        out
    }
}

/// A set of pairwise adjacent vertices, stored as sorted vertex indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Clique {
    members: Vec<usize>,
}

impl Clique {
    /// Checks the clique invariant against `graph`.
    pub fn new(mut members: Vec<usize>, graph: &IntersectionGraph) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(Error::InvalidGraph("empty clique".into()));
        }
        if members.iter().any(|&v| v >= graph.vertex_count()) || !graph.is_clique(&members) {
            return Err(Error::InvalidGraph(format!("{members:?} is not a clique")));
        }
        Ok(Clique { members })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    /// Member ids, sorted lexicographically.
    pub fn ids(&self, graph: &IntersectionGraph) -> Vec<String> {
        let mut ids: Vec<String> = self.members.iter().map(|&v| graph.id(v).to_string()).collect();
        ids.sort();
        ids
    }

    pub fn is_maximal(&self, graph: &IntersectionGraph) -> bool {
        !(0..graph.vertex_count())
            .filter(|v| !self.contains(*v))
            .any(|v| self.members.iter().all(|&m| graph.has_edge(v, m)))
    }
}

/// Orders cliques by size (descending), then by their sorted member ids.
pub fn canonical_sort(cliques: &mut [Clique], graph: &IntersectionGraph) {
    cliques.sort_by(|a, b| compare_cliques(a, b, graph));
}

fn compare_cliques(a: &Clique, b: &Clique, graph: &IntersectionGraph) -> Ordering {
    b.len().cmp(&a.len()).then_with(|| a.ids(graph).cmp(&b.ids(graph)))
}

/// Enumerates every maximal clique with the pivoting Bron–Kerbosch recursion.
pub fn maximal_cliques_bk(graph: &IntersectionGraph) -> Vec<Clique> {
    let mut found = Vec::new();
    let candidates: BTreeSet<usize> = (0..graph.vertex_count()).collect();
    bron_kerbosch(graph, &mut Vec::new(), candidates, BTreeSet::new(), &mut found);
    let mut cliques: Vec<Clique> = found
        .into_iter()
        .map(|mut members| {
            members.sort_unstable();
            Clique { members }
        })
        .collect();
    canonical_sort(&mut cliques, graph);
    cliques
}

fn bron_kerbosch(
    graph: &IntersectionGraph,
    current: &mut Vec<usize>,
    mut candidates: BTreeSet<usize>,
    mut excluded: BTreeSet<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if candidates.is_empty() {
        if excluded.is_empty() {
            out.push(current.clone());
        }
        return;
    }
    // Pivot on the vertex with most neighbours among the candidates.
    let pivot = candidates
        .union(&excluded)
        .copied()
        .max_by_key(|&u| (graph.neighbors(u).intersection(&candidates).count(), std::cmp::Reverse(u)))
        .expect("non-empty");
    let branch: Vec<usize> = candidates.difference(graph.neighbors(pivot)).copied().collect();
    for v in branch {
        let ns = graph.neighbors(v);
        current.push(v);
        bron_kerbosch(
            graph,
            current,
            candidates.intersection(ns).copied().collect(),
            excluded.intersection(ns).copied().collect(),
            out,
        );
        current.pop();
        candidates.remove(&v);
        excluded.insert(v);
    }
}

/// Overlap probing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverlapSampling {
    pub count: usize,
    pub seed: u64,
}

impl Default for OverlapSampling {
    fn default() -> Self {
        OverlapSampling { count: DEFAULT_OVERLAP_SAMPLES, seed: 0 }
    }
}

/// Detects pairwise overlaps by sampling each primitive's interior and testing
/// the samples against every other primitive with an overlapping bounding box.
///
/// Thin overlaps may be missed when they hold fewer than roughly one sample;
/// raise `sampling.count` for scenes with slivers.
pub fn build_intersection_graph(set: &PrimitiveSet, sampling: OverlapSampling) -> IntersectionGraph {
    let prims = set.as_slice();
    let sample_one = |i: usize| sample_region(&[&prims[i]], &[], sampling.count, seed::derive(sampling.seed, &[i as u64]));
    #[cfg(feature = "parallel")]
    let samples: Vec<_> = {
        use rayon::prelude::*;
        (0..prims.len()).into_par_iter().map(sample_one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let samples: Vec<_> = (0..prims.len()).map(sample_one).collect();

    let boxes: Vec<_> = prims.iter().map(|p| p.aabb()).collect();
    let hits = |i: usize, j: usize| samples[i].iter().any(|x| prims[j].contains(x));
    let mut edges = Vec::new();
    for i in 0..prims.len() {
        for j in i + 1..prims.len() {
            if boxes[i].overlaps(&boxes[j]) && (hits(i, j) || hits(j, i)) {
                edges.push((i, j));
            }
        }
    }
    IntersectionGraph::from_indices(set.ids(), edges).expect("indices are in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Primitive;
    use proptest::prelude::*;

    fn ids(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn scene_graph() -> IntersectionGraph {
        let e = [("A", "B"), ("B", "C"), ("B", "D"), ("C", "D"), ("B", "E"), ("D", "E"), ("E", "F")];
        IntersectionGraph::new(ids(&["A", "B", "C", "D", "E", "F"]), e).unwrap()
    }

    fn clique_ids(g: &IntersectionGraph, cs: &[Clique]) -> Vec<Vec<String>> {
        cs.iter().map(|c| c.ids(g)).collect()
    }

    #[test]
    fn triangle_has_one_clique() {
        let g = IntersectionGraph::new(ids(&["a", "b", "c"]), [("a", "b"), ("b", "c"), ("a", "c")]).unwrap();
        assert_eq!(clique_ids(&g, &maximal_cliques_bk(&g)), vec![ids(&["a", "b", "c"])]);
    }

    #[test]
    fn isolated_vertices_are_maximal() {
        let g = IntersectionGraph::new(ids(&["a", "b", "c"]), Vec::<(&str, &str)>::new()).unwrap();
        assert_eq!(clique_ids(&g, &maximal_cliques_bk(&g)), vec![ids(&["a"]), ids(&["b"]), ids(&["c"])]);
    }

    #[test]
    fn scene_cliques() {
        let g = scene_graph();
        let expected = vec![ids(&["B", "C", "D"]), ids(&["B", "D", "E"]), ids(&["A", "B"]), ids(&["E", "F"])];
        assert_eq!(clique_ids(&g, &maximal_cliques_bk(&g)), expected);
        // 6 singletons + 7 edges + 2 triangles
        assert_eq!(g.all_cliques().len(), 15);
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(matches!(IntersectionGraph::new(ids(&["a"]), [("a", "a")]), Err(Error::InvalidGraph(_))));
        assert!(matches!(IntersectionGraph::new(ids(&["a"]), [("a", "z")]), Err(Error::UnresolvedId(_))));
    }

    #[test]
    fn overlapping_and_disjoint_spheres() {
        let near = PrimitiveSet::new(vec![
            Primitive::sphere("A", [0.0; 3], 1.0).unwrap(),
            Primitive::sphere("B", [1.0, 0.0, 0.0], 1.0).unwrap(),
        ])
        .unwrap();
        assert_eq!(build_intersection_graph(&near, OverlapSampling::default()).edge_count(), 1);
        let far = PrimitiveSet::new(vec![
            Primitive::sphere("A", [0.0; 3], 1.0).unwrap(),
            Primitive::sphere("B", [10.0, 0.0, 0.0], 1.0).unwrap(),
        ])
        .unwrap();
        assert_eq!(build_intersection_graph(&far, OverlapSampling::default()).edge_count(), 0);
    }

    fn brute_force_maximal(g: &IntersectionGraph) -> BTreeSet<Vec<usize>> {
        let n = g.vertex_count();
        let mut out = BTreeSet::new();
        for mask in 1u32..(1 << n) {
            let members: Vec<usize> = (0..n).filter(|v| mask & (1 << v) != 0).collect();
            if !g.is_clique(&members) {
                continue;
            }
            let extendable = (0..n).any(|v| mask & (1 << v) == 0 && members.iter().all(|&m| g.has_edge(v, m)));
            if !extendable {
                out.insert(members);
            }
        }
        out
    }

    fn random_graph() -> impl Strategy<Value = IntersectionGraph> {
        (1usize..=10).prop_flat_map(|n| {
            proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
                let pairs = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b)));
                let edges: Vec<_> = pairs.zip(bits).filter(|(_, keep)| *keep).map(|(p, _)| p).collect();
                IntersectionGraph::from_indices((0..n).map(|i| format!("v{i:02}")).collect(), edges).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn bk_matches_brute_force(g in random_graph()) {
            let cliques = maximal_cliques_bk(&g);
            for c in &cliques {
                prop_assert!(g.is_clique(c.members()));
                prop_assert!(c.is_maximal(&g));
            }
            let got: BTreeSet<Vec<usize>> = cliques.iter().map(|c| c.members().to_vec()).collect();
            prop_assert_eq!(got.len(), cliques.len());
            prop_assert_eq!(got, brute_force_maximal(&g));
            for v in 0..g.vertex_count() {
                prop_assert!(cliques.iter().any(|c| c.contains(v)));
            }
        }
    }
}

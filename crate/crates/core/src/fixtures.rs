//! Reference scenes and instances used by tests, the CLI and the demo.

use crate::cover::CoverInstance;
use crate::formats::{AbstractInstance, ProductRecord};
use crate::geometry::{CsgTree, Primitive, PrimitiveSet};

const SCENE_EDGES: [(&str, &str); 7] = [("A", "B"), ("B", "C"), ("B", "D"), ("B", "E"), ("C", "D"), ("D", "E"), ("E", "F")];

const SCENE_INSIDE: [&[&str]; 8] = [&["A"], &["A", "B"], &["B"], &["B", "E"], &["B", "C", "D"], &["B", "C"], &["C", "D"], &["E"]];

fn ids(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Six-primitive scene: intersection graph with edges A-B, B-C, B-D, C-D,
/// B-E, D-E, E-F and 15 non-empty products, 8 of them inside.
pub fn scene_abstract() -> AbstractInstance {
    let primitives = ids(&["A", "B", "C", "D", "E", "F"]);
    let graph = crate::graph::IntersectionGraph::new(primitives.clone(), SCENE_EDGES).expect("valid fixture graph");
    let products = graph
        .all_cliques()
        .into_iter()
        .map(|c| {
            let mut positives: Vec<String> = c.iter().map(|&v| graph.id(v).to_string()).collect();
            positives.sort();
            let inside = SCENE_INSIDE.iter().any(|u| ids(u) == positives);
            ProductRecord { positives, inside }
        })
        .collect();
    AbstractInstance {
        primitives,
        edges: SCENE_EDGES.iter().map(|(a, b)| [a.to_string(), b.to_string()]).collect(),
        products,
    }
}

/// Geometric realisation of [`scene_abstract`]: five slabs of height 2 and a
/// small sphere, laid out in the xy plane.
pub fn scene_primitives() -> PrimitiveSet {
    PrimitiveSet::new(vec![
        Primitive::cuboid("A", [-1.5, 0.0, 0.0], [0.8, 0.5, 1.0]).expect("valid"),
        Primitive::cylinder("B", [0.0, 0.0, 0.0], 1.0, 1.0).expect("valid"),
        Primitive::cylinder("C", [0.6, 1.0, 0.0], 0.8, 1.0).expect("valid"),
        Primitive::cylinder("D", [1.2, 0.0, 0.0], 1.0, 1.0).expect("valid"),
        Primitive::cylinder("E", [0.6, -1.0, 0.0], 0.8, 1.0).expect("valid"),
        Primitive::sphere("F", [0.6, -2.2, 0.0], 0.6).expect("valid"),
    ])
    .expect("distinct ids")
}

fn lit(id: &str) -> CsgTree {
    CsgTree::leaf(id)
}

fn not(id: &str) -> CsgTree {
    CsgTree::complement(lit(id))
}

/// Smallest known tree for the six-primitive scene (8 leaves); used as its
/// ground truth.
pub fn minimal_tree() -> CsgTree {
    CsgTree::Union(vec![
        lit("A"),
        CsgTree::Intersection(vec![lit("B"), not("D")]),
        CsgTree::Intersection(vec![lit("C"), lit("D")]),
        CsgTree::Intersection(vec![not("D"), lit("E"), not("F")]),
    ])
}

/// A 10-literal exact-cover tree for the six-primitive scene.
pub fn partitioned_tree() -> CsgTree {
    CsgTree::Union(vec![
        CsgTree::Intersection(vec![lit("A"), not("B")]),
        CsgTree::Intersection(vec![lit("B"), not("D")]),
        CsgTree::Intersection(vec![lit("C"), lit("D")]),
        CsgTree::Intersection(vec![not("B"), not("D"), lit("E"), not("F")]),
    ])
}

/// Exact cover over {1..5} with subsets V1..V7; its only exact cover is
/// {V1, V5, V7}.
pub fn exact_cover_example() -> CoverInstance {
    let sets: [(&str, &[usize]); 7] = [
        ("V1", &[1, 2, 4]),
        ("V2", &[1, 2, 5]),
        ("V3", &[1, 3, 4]),
        ("V4", &[2, 3]),
        ("V5", &[3]),
        ("V6", &[4, 5]),
        ("V7", &[5]),
    ];
    CoverInstance::from_sets(
        (1..=5).map(|e| e.to_string()).collect(),
        sets.iter().map(|(n, c)| (n.to_string(), c.iter().map(|e| e - 1).collect(), 0)).collect(),
    )
    .expect("valid fixture")
}

pub const CHAIN_LENGTH: usize = 12;

/// Unit spheres spaced 1.5 apart along x; consecutive spheres overlap, so
/// the intersection graph is a path.
pub fn chain_primitives() -> PrimitiveSet {
    PrimitiveSet::new(
        (0..CHAIN_LENGTH)
            .map(|i| Primitive::sphere(format!("S{i:02}"), [1.5 * i as f64, 0.0, 0.0], 1.0).expect("valid"))
            .collect(),
    )
    .expect("distinct ids")
}

/// Every even sphere minus its right neighbour.
pub fn chain_tree() -> CsgTree {
    CsgTree::Union(
        (0..CHAIN_LENGTH)
            .step_by(2)
            .map(|i| CsgTree::Intersection(vec![lit(&format!("S{i:02}")), not(&format!("S{:02}", i + 1))]))
            .collect(),
    )
}

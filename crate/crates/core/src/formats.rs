//! File formats: primitive sets, point clouds, graphs, abstract instances,
//! cover instances, trees and product tables.
//!
//! The QUBO text format lives in [`crate::qubo`].

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::cover::{CoverInstance, CoverSolution};
use crate::error::{Error, Result};
use crate::geometry::{CloudPoint, CsgTree, PointCloud, Primitive, PrimitiveSet, Shape, Vec3};
use crate::graph::{Clique, IntersectionGraph};
use crate::products::ProductTable;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PrimitiveRecord {
    id: String,
    kind: String,
    translation: [f64; 3],
    #[serde(default = "identity")]
    rotation: [f64; 4],
    params: Map<String, Value>,
}

fn identity() -> [f64; 4] {
    crate::geometry::IDENTITY
}

fn param_f64(params: &Map<String, Value>, id: &str, key: &str) -> Result<f64> {
    params.get(key).and_then(Value::as_f64).ok_or_else(|| Error::InvalidPrimitive {
        id: id.to_string(),
        reason: format!("missing numeric parameter `{key}`"),
    })
}

impl PrimitiveRecord {
    fn into_primitive(self) -> Result<Primitive> {
        let id = self.id.as_str();
        let shape = match self.kind.as_str() {
            "sphere" => Shape::Sphere { radius: param_f64(&self.params, id, "radius")? },
            "box" => {
                let he: [f64; 3] = self
                    .params
                    .get("half_extents")
                    .cloned()
                    .and_then(|v| serde_json::from_value(v).ok())
                    .ok_or_else(|| Error::InvalidPrimitive {
                        id: id.to_string(),
                        reason: "missing parameter `half_extents` ([x, y, z])".into(),
                    })?;
                Shape::Box { half_extents: Vec3::from(he) }
            }
            "cylinder" => Shape::Cylinder {
                radius: param_f64(&self.params, id, "radius")?,
                half_height: param_f64(&self.params, id, "half_height")?,
            },
            other => {
                return Err(Error::InvalidPrimitive { id: id.to_string(), reason: format!("unknown kind `{other}`") })
            }
        };
        Primitive::new(self.id, shape, Vec3::from(self.translation), self.rotation)
    }

    fn from_primitive(p: &Primitive) -> Self {
        let params = match p.shape() {
            Shape::Sphere { radius } => json!({ "radius": radius }),
            Shape::Box { half_extents } => json!({ "half_extents": [half_extents.x, half_extents.y, half_extents.z] }),
            Shape::Cylinder { radius, half_height } => json!({ "radius": radius, "half_height": half_height }),
        };
        let t = p.translation();
        PrimitiveRecord {
            id: p.id().to_string(),
            kind: p.shape().kind().to_string(),
            translation: [t.x, t.y, t.z],
            rotation: p.rotation(),
            params: params.as_object().cloned().unwrap_or_default(),
        }
    }
}

/// Parses a JSON array of primitive objects.
pub fn parse_primitives(text: &str) -> Result<PrimitiveSet> {
    let records: Vec<PrimitiveRecord> = serde_json::from_str(text)?;
    PrimitiveSet::new(records.into_iter().map(PrimitiveRecord::into_primitive).collect::<Result<_>>()?)
}

pub fn primitives_to_json(set: &PrimitiveSet) -> String {
    let records: Vec<PrimitiveRecord> = set.iter().map(PrimitiveRecord::from_primitive).collect();
    serde_json::to_string_pretty(&records).expect("primitive records serialize")
}

/// Parses `x y z [nx ny nz]` lines; blank lines and `#` comments are skipped.
pub fn parse_point_cloud(text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: i + 1, message };
        let values = line
            .split_whitespace()
            .map(|f| f.parse::<f64>().map_err(|_| parse_err(format!("`{f}` is not a number"))))
            .collect::<Result<Vec<_>>>()?;
        let point = match values.as_slice() {
            [x, y, z] => CloudPoint { position: Vec3::new(*x, *y, *z), normal: None },
            [x, y, z, nx, ny, nz] => CloudPoint { position: Vec3::new(*x, *y, *z), normal: Some(Vec3::new(*nx, *ny, *nz)) },
            v => return Err(parse_err(format!("expected 3 or 6 fields, found {}", v.len()))),
        };
        points.push(point);
    }
    PointCloud::new(points)
}

pub fn point_cloud_to_text(cloud: &PointCloud) -> String {
    let mut out = String::from("# x y z nx ny nz\n");
    for p in cloud.points() {
        let v = p.position;
        let _ = write!(out, "{:.17e} {:.17e} {:.17e}", v.x, v.y, v.z);
        if let Some(n) = p.normal {
            let _ = write!(out, " {:.17e} {:.17e} {:.17e}", n.x, n.y, n.z);
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphRecord {
    vertices: Vec<String>,
    edges: Vec<[String; 2]>,
}

pub fn parse_graph(text: &str) -> Result<IntersectionGraph> {
    let g: GraphRecord = serde_json::from_str(text)?;
    IntersectionGraph::new(g.vertices, g.edges.into_iter().map(|[a, b]| (a, b)))
}

pub fn graph_to_json(graph: &IntersectionGraph) -> String {
    let record = GraphRecord {
        vertices: graph.vertices().to_vec(),
        edges: graph.edge_ids().into_iter().map(|(a, b)| [a, b]).collect(),
    };
    serde_json::to_string_pretty(&record).expect("graph serializes")
}

pub fn cliques_to_json(cliques: &[Clique], graph: &IntersectionGraph) -> Value {
    json!({ "cliques": cliques.iter().map(|c| c.ids(graph)).collect::<Vec<_>>() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductRecord {
    pub positives: Vec<String>,
    pub inside: bool,
}

/// Combinatorial instance given directly by its graph and labelled products.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractInstance {
    pub primitives: Vec<String>,
    pub edges: Vec<[String; 2]>,
    pub products: Vec<ProductRecord>,
}

impl AbstractInstance {
    pub fn graph(&self) -> Result<IntersectionGraph> {
        IntersectionGraph::new(self.primitives.clone(), self.edges.iter().map(|[a, b]| (a.as_str(), b.as_str())))
    }

    pub fn into_parts(self) -> Result<(IntersectionGraph, ProductTable)> {
        let graph = self.graph()?;
        let labelled = self
            .products
            .iter()
            .map(|p| {
                let idx = p
                    .positives
                    .iter()
                    .map(|id| graph.index_of(id).ok_or_else(|| Error::UnresolvedId(id.clone())))
                    .collect::<Result<Vec<_>>>()?;
                Ok((idx, p.inside))
            })
            .collect::<Result<Vec<_>>>()?;
        let table = ProductTable::from_labels(&graph, labelled)?;
        Ok((graph, table))
    }
}

pub fn parse_abstract_instance(text: &str) -> Result<AbstractInstance> {
    Ok(serde_json::from_str(text)?)
}

/// Element ids in cover files may be strings or numbers.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ElementId {
    Text(String),
    Int(i64),
    Real(f64),
}

impl ElementId {
    fn label(&self) -> String {
        match self {
            ElementId::Text(s) => s.clone(),
            ElementId::Int(i) => i.to_string(),
            ElementId::Real(r) => r.to_string(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct SubsetRecord {
    name: String,
    covers: Vec<ElementId>,
    #[serde(default)]
    literals: Option<usize>,
}

#[derive(Debug, Deserialize)]
struct CoverRecord {
    universe: Vec<ElementId>,
    subsets: Vec<SubsetRecord>,
}

/// Parses a cover instance. Subsets keep file order; missing literal counts are 0.
pub fn parse_cover_instance(text: &str) -> Result<CoverInstance> {
    let rec: CoverRecord = serde_json::from_str(text)?;
    let universe: Vec<String> = rec.universe.iter().map(ElementId::label).collect();
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = universe.iter().find(|u| !seen.insert(u.as_str())) {
        return Err(Error::Input(format!("duplicate universe element `{dup}`")));
    }
    let subsets = rec
        .subsets
        .into_iter()
        .map(|s| {
            let covers = s
                .covers
                .iter()
                .map(|e| {
                    let label = e.label();
                    universe
                        .iter()
                        .position(|u| *u == label)
                        .ok_or_else(|| Error::Input(format!("subset `{}` covers unknown element `{label}`", s.name)))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((s.name, covers, s.literals.unwrap_or(0)))
        })
        .collect::<Result<Vec<_>>>()?;
    CoverInstance::from_sets(universe, subsets)
}

pub fn cover_instance_to_json(instance: &CoverInstance) -> Value {
    json!({
        "universe": instance.universe,
        "subsets": instance.candidates.iter().map(|c| json!({
            "name": c.name,
            "covers": c.covers.iter().map(|&k| &instance.universe[k]).collect::<Vec<_>>(),
            "literals": c.literal_count,
        })).collect::<Vec<_>>(),
    })
}

pub fn cover_solution_to_json(solution: &CoverSolution, instance: &CoverInstance) -> Value {
    json!({
        "selected": solution.names(instance),
        "indices": solution.selected,
        "subsets_used": solution.subsets_used,
        "total_literals": solution.total_literals,
    })
}

pub fn tree_to_value(tree: &CsgTree) -> Value {
    match tree {
        CsgTree::Leaf(id) => json!({ "op": "prim", "prim": id }),
        CsgTree::Union(c) => json!({ "op": "union", "children": c.iter().map(tree_to_value).collect::<Vec<_>>() }),
        CsgTree::Intersection(c) => json!({ "op": "inter", "children": c.iter().map(tree_to_value).collect::<Vec<_>>() }),
        CsgTree::Complement(c) => json!({ "op": "comp", "children": [tree_to_value(c)] }),
    }
}

pub fn tree_from_value(v: &Value) -> Result<CsgTree> {
    let bad = |m: &str| Error::MalformedTree(m.to_string());
    let op = v.get("op").and_then(Value::as_str).ok_or_else(|| bad("node without string `op`"))?;
    let children = || -> Result<Vec<CsgTree>> {
        v.get("children")
            .and_then(Value::as_array)
            .ok_or_else(|| bad(&format!("`{op}` node without `children` array")))?
            .iter()
            .map(tree_from_value)
            .collect()
    };
    let tree = match op {
        "prim" => CsgTree::Leaf(v.get("prim").and_then(Value::as_str).ok_or_else(|| bad("`prim` node without id"))?.to_string()),
        "union" => CsgTree::Union(children()?),
        "inter" => CsgTree::Intersection(children()?),
        "comp" => {
            let mut c = children()?;
            if c.len() != 1 {
                return Err(bad(&format!("complement takes one child, found {}", c.len())));
            }
            CsgTree::complement(c.pop().expect("one child"))
        }
        other => return Err(bad(&format!("unknown op `{other}`"))),
    };
    if let CsgTree::Union(c) | CsgTree::Intersection(c) = &tree {
        if c.len() < 2 {
            return Err(bad(&format!("`{op}` needs at least two children")));
        }
    }
    Ok(tree)
}

pub fn parse_tree(text: &str) -> Result<CsgTree> {
    tree_from_value(&serde_json::from_str(text)?)
}

pub fn product_table_to_json(table: &ProductTable) -> Value {
    json!({
        "primitives": table.primitive_ids(),
        "n_f": table.n_f(),
        "universe": table.universe().into_iter().map(|i| table.positive_ids(i)).collect::<Vec<_>>(),
        "products": table.products().iter().enumerate().map(|(i, p)| json!({
            "positives": table.positive_ids(i),
            "label": p.label.as_str(),
            "inside_fraction": p.inside_fraction,
            "samples": p.samples.len(),
        })).collect::<Vec<_>>(),
        "warnings": table.warnings(),
    })
}

/// Abstract instance equivalent to a labelled table, for re-running without geometry.
pub fn table_to_abstract(table: &ProductTable, graph: &IntersectionGraph) -> AbstractInstance {
    AbstractInstance {
        primitives: graph.vertices().to_vec(),
        edges: graph.edge_ids().into_iter().map(|(a, b)| [a, b]).collect(),
        products: (0..table.n_f())
            .map(|i| ProductRecord { positives: table.positive_ids(i), inside: table.get(i).is_inside() })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitive_round_trip() {
        let text = r#"[
            {"id":"A","kind":"sphere","translation":[0,0,0],"rotation":[1,0,0,0],"params":{"radius":1.5}},
            {"id":"B","kind":"box","translation":[1,2,3],"rotation":[0.7071067811865476,0.7071067811865476,0,0],"params":{"half_extents":[1,2,3]}},
            {"id":"C","kind":"cylinder","translation":[0,0,1],"params":{"radius":0.5,"half_height":2}}
        ]"#;
        let set = parse_primitives(text).unwrap();
        assert_eq!(set.ids(), vec!["A", "B", "C"]);
        let again = parse_primitives(&primitives_to_json(&set)).unwrap();
        assert_eq!(set.as_slice(), again.as_slice());
    }

    #[test]
    fn primitive_errors() {
        let missing = r#"[{"id":"A","kind":"sphere","translation":[0,0,0],"params":{}}]"#;
        assert!(matches!(parse_primitives(missing), Err(Error::InvalidPrimitive { .. })));
        let kind = r#"[{"id":"A","kind":"torus","translation":[0,0,0],"params":{}}]"#;
        assert!(matches!(parse_primitives(kind), Err(Error::InvalidPrimitive { .. })));
        let dup = r#"[{"id":"A","kind":"sphere","translation":[0,0,0],"params":{"radius":1}},
                      {"id":"A","kind":"sphere","translation":[1,0,0],"params":{"radius":1}}]"#;
        assert!(matches!(parse_primitives(dup), Err(Error::DuplicateId(_))));
        assert!(matches!(parse_primitives("{"), Err(Error::Json(_))));
    }

    #[test]
    fn point_cloud_text() {
        let cloud = parse_point_cloud("# header\n1 2 3\n\n0 0 1 0 0 1\n").unwrap();
        assert_eq!(cloud.len(), 2);
        assert!(!cloud.has_normals());
        let again = parse_point_cloud(&point_cloud_to_text(&cloud)).unwrap();
        assert_eq!(cloud, again);
        let err = parse_point_cloud("1 2 3\n1 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(matches!(parse_point_cloud("1 2 x"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn graph_round_trip() {
        let g = parse_graph(r#"{"vertices":["A","B","C"],"edges":[["B","A"],["B","C"]]}"#).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(parse_graph(&graph_to_json(&g)).unwrap(), g);
        assert!(parse_graph(r#"{"vertices":["A"],"edges":[["A","Z"]]}"#).is_err());
    }

    #[test]
    fn cover_instance_verbatim() {
        let text = r#"{"universe":[1,2,3,4,5],"subsets":[
            {"name":"V1","covers":[1,2,4]},{"name":"V2","covers":[1,2,5]},{"name":"V3","covers":[1,3,4]},
            {"name":"V4","covers":[2,3]},{"name":"V5","covers":[3]},{"name":"V6","covers":[4,5]},{"name":"V7","covers":[5]}]}"#;
        let inst = parse_cover_instance(text).unwrap();
        assert_eq!(inst, crate::fixtures::exact_cover_example());
        assert!(parse_cover_instance(r#"{"universe":["a"],"subsets":[{"name":"s","covers":["b"]}]}"#).is_err());
        assert!(parse_cover_instance(r#"{"universe":["a","a"],"subsets":[]}"#).is_err());
    }

    #[test]
    fn tree_json_round_trip() {
        let t = crate::fixtures::minimal_tree();
        let v = tree_to_value(&t);
        assert_eq!(tree_from_value(&v).unwrap(), t);
        assert_eq!(tree_to_value(&CsgTree::leaf("A")), json!({"op":"prim","prim":"A"}));
        for bad in [
            r#"{"op":"union","children":[{"op":"prim","prim":"A"}]}"#,
            r#"{"op":"comp","children":[]}"#,
            r#"{"op":"xor","children":[]}"#,
            r#"{"op":"prim"}"#,
        ] {
            assert!(matches!(parse_tree(bad), Err(Error::MalformedTree(_))), "{bad}");
        }
    }

    #[test]
    fn abstract_instance_round_trip() {
        let inst = crate::fixtures::scene_abstract();
        let (graph, table) = inst.clone().into_parts().unwrap();
        assert_eq!(table.n_f(), 15);
        let again = table_to_abstract(&table, &graph);
        let (g2, t2) = again.into_parts().unwrap();
        assert_eq!(g2, graph);
        assert_eq!(t2, table);
        let json = serde_json::to_string(&inst).unwrap();
        assert_eq!(parse_abstract_instance(&json).unwrap(), inst);
    }
}

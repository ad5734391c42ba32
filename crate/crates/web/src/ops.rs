use csg_compress::geometry::{Aabb, Vec3};
use csg_compress::pipeline::{self, CoverSolver, OracleSource, PipelineConfig};
use csg_compress::{fixtures, formats, Error, Result};
use serde_json::json;

pub const OUTSIDE: u8 = 0;
pub const BOTH: u8 = 1;
pub const TRUTH_ONLY: u8 = 2;
pub const TREE_ONLY: u8 = 3;

pub fn scene_primitives() -> String {
    formats::primitives_to_json(&fixtures::scene_primitives())
}

pub fn scene_truth() -> String {
    serde_json::to_string_pretty(&formats::tree_to_value(&fixtures::minimal_tree())).expect("tree serializes")
}

pub fn cover_example() -> String {
    serde_json::to_string_pretty(&formats::cover_instance_to_json(&fixtures::exact_cover_example())).expect("instance serializes")
}

pub fn compress(primitives: &str, truth: &str, seed: u64) -> Result<String> {
    let set = formats::parse_primitives(primitives)?;
    let source = OracleSource::GroundTruth(formats::parse_tree(truth)?);
    let mut cfg = PipelineConfig::with_seed(seed);
    cfg.agreement_samples = 4000;
    let report = pipeline::compress(&set, &source, &cfg)?;
    Ok(pipeline::report_json(&report))
}

/// `size * size` cells covering the padded bounding box of the primitives in
/// x and y, row-major from the top. Each cell holds one of the constants above.
pub fn slice(primitives: &str, truth: &str, tree: &str, z: f64, size: usize) -> Result<Vec<u8>> {
    if !(2..=1024).contains(&size) {
        return Err(Error::Parameter(format!("raster size {size} outside 2..=1024")));
    }
    let set = formats::parse_primitives(primitives)?;
    let truth = formats::parse_tree(truth)?;
    let tree = formats::parse_tree(tree)?;
    truth.validate(&set)?;
    tree.validate(&set)?;
    let bounds = set.bounds().ok_or_else(|| Error::Input("empty primitive set".into()))?;
    let Aabb { min, max } = bounds.expanded(0.05 * bounds.diagonal());
    let step = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * (i as f64 + 0.5) / size as f64;
    let mut cells = Vec::with_capacity(size * size);
    for row in 0..size {
        let y = step(max.y, min.y, row);
        for col in 0..size {
            let p = Vec3::new(step(min.x, max.x, col), y, z);
            let inside = |id: &str| set.by_id(id).is_some_and(|q| q.contains(&p));
            cells.push(match (truth.evaluate(&inside), tree.evaluate(&inside)) {
                (true, true) => BOTH,
                (true, false) => TRUTH_ONLY,
                (false, true) => TREE_ONLY,
                (false, false) => OUTSIDE,
            });
        }
    }
    Ok(cells)
}

pub fn solve_cover(instance: &str, solver: &str, seed: u64) -> Result<String> {
    let instance = formats::parse_cover_instance(instance)?;
    let mut cfg = PipelineConfig::with_seed(seed);
    cfg.cover_solver = solver.parse::<CoverSolver>()?;
    let (solution, info, warnings) = pipeline::solve_cover(&instance, &cfg)?;
    let mut value = formats::cover_solution_to_json(&solution, &instance);
    value["solver"] = json!(info.cover_solver);
    value["energy"] = json!(info.energy);
    value["warnings"] = json!(warnings);
    Ok(serde_json::to_string_pretty(&value).expect("value serializes"))
}

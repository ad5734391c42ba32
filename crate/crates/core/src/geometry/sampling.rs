use rand::Rng;

use super::cloud::{CloudPoint, PointCloud};
use super::primitive::{Primitive, PrimitiveSet, Vec3};
use super::tree::CsgTree;
use crate::error::{Error, Result};
use crate::seed;

/// Rejection attempts allowed per requested region sample.
pub const REGION_ATTEMPTS_PER_SAMPLE: usize = 64;
/// Rejection attempts allowed per requested surface sample.
pub const SURFACE_ATTEMPTS_PER_SAMPLE: usize = 1000;
/// A primitive-surface sample is on the solid boundary when the composed value is this close to zero.
const SURFACE_TOLERANCE: f64 = 1e-9;

/// Uniform rejection sampling of the region inside every `positive` primitive
/// and outside every `negative` one.
///
/// Candidates are drawn from the intersection of the positive bounding boxes;
/// at most `REGION_ATTEMPTS_PER_SAMPLE * count` are tried, so the result may be
/// shorter than `count` (or empty) when the region is small or empty.
pub fn sample_region(positive: &[&Primitive], negative: &[&Primitive], count: usize, seed: u64) -> Vec<Vec3> {
    let Some(bounds) = positive.iter().map(|p| p.aabb()).reduce(|a, b| a.intersection(&b)) else {
        return Vec::new();
    };
    if bounds.is_empty() || count == 0 {
        return Vec::new();
    }
    let mut rng = seed::rng(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..REGION_ATTEMPTS_PER_SAMPLE * count {
        let p = bounds.sample(&mut rng);
        if positive.iter().all(|q| q.contains(&p)) && !negative.iter().any(|q| q.contains(&p)) {
            out.push(p);
            if out.len() == count {
                break;
            }
        }
    }
    out
}

/// Samples `count` points on the boundary of the solid described by `tree`,
/// each carrying the outward unit normal of the solid.
pub fn sample_surface(tree: &CsgTree, set: &PrimitiveSet, count: usize, seed: u64) -> Result<PointCloud> {
    let solid = tree.compile(set)?;
    if !tree.is_bounded() {
        return Err(Error::Unbounded("surface sampling needs a bounded tree".into()));
    }
    let prims = solid.primitives();
    let areas: Vec<f64> = prims.iter().map(|p| p.surface_area()).collect();
    let total: f64 = areas.iter().sum();
    let scale = solid.bounds().map_or(1.0, |b| b.diagonal()).max(1e-12);
    let step = 1e-7 * scale;

    let mut rng = seed::rng(seed);
    let mut points = Vec::with_capacity(count);
    for _ in 0..SURFACE_ATTEMPTS_PER_SAMPLE * count.max(1) {
        if points.len() == count {
            break;
        }
        let mut pick = rng.random::<f64>() * total;
        let mut chosen = prims.len() - 1;
        for (i, a) in areas.iter().enumerate() {
            if pick < *a {
                chosen = i;
                break;
            }
            pick -= a;
        }
        let p = prims[chosen].sample_surface(&mut rng);
        if solid.value(&p).abs() > SURFACE_TOLERANCE * scale {
            continue;
        }
        let g = solid.gradient(&p, step);
        let norm = g.norm();
        if norm.is_nan() || norm <= 1e-6 {
            continue;
        }
        points.push(CloudPoint { position: p, normal: Some(g / norm) });
    }
    if points.len() < count {
        return Err(Error::Sampling(format!("only {} of {count} surface points found", points.len())));
    }
    PointCloud::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::cloud::CloudOracle;
    use crate::geometry::primitive::Aabb;

    fn sphere(id: &str, c: [f64; 3], r: f64) -> Primitive {
        Primitive::sphere(id, c, r).unwrap()
    }

    #[test]
    fn region_inside_single_sphere() {
        let a = sphere("A", [0.0; 3], 1.0);
        let pts = sample_region(&[&a], &[], 100, 3);
        assert_eq!(pts.len(), 100);
        assert!(pts.iter().all(|p| a.signed_distance(p) < 0.0));
    }

    #[test]
    fn contradictory_region_is_empty() {
        let a = sphere("A", [0.0; 3], 1.0);
        assert!(sample_region(&[&a], &[&a], 100, 3).is_empty());
    }

    #[test]
    fn lens_region() {
        let a = sphere("A", [0.0; 3], 1.0);
        let b = sphere("B", [1.0, 0.0, 0.0], 1.0);
        let pts = sample_region(&[&a, &b], &[], 200, 9);
        assert!(!pts.is_empty());
        assert!(pts.iter().all(|p| a.contains(p) && b.contains(p)));
    }

    #[test]
    fn disjoint_boxes_give_empty_list() {
        let a = sphere("A", [0.0; 3], 1.0);
        let b = sphere("B", [5.0, 0.0, 0.0], 1.0);
        assert!(sample_region(&[&a, &b], &[], 50, 1).is_empty());
    }

    #[test]
    fn region_sampling_is_reproducible() {
        let a = sphere("A", [0.0; 3], 1.0);
        let b = Primitive::cuboid("B", [0.5, 0.0, 0.0], [0.5, 0.5, 0.5]).unwrap();
        let x = sample_region(&[&a], &[&b], 300, 42);
        let y = sample_region(&[&a], &[&b], 300, 42);
        assert_eq!(x, y);
        assert_ne!(x, sample_region(&[&a], &[&b], 300, 43));
    }

    #[test]
    fn sphere_surface_samples() {
        let set = PrimitiveSet::new(vec![sphere("A", [0.0; 3], 1.0)]).unwrap();
        let cloud = sample_surface(&CsgTree::leaf("A"), &set, 1000, 5).unwrap();
        assert_eq!(cloud.len(), 1000);
        let a = set.get(0);
        for p in cloud.points() {
            assert!(a.signed_distance(&p.position).abs() < 1e-6);
            let n = p.normal.unwrap();
            assert!((n - p.position.normalize()).norm() < 1e-5);
        }
    }

    #[test]
    fn disjoint_union_samples_both_components() {
        let set = PrimitiveSet::new(vec![sphere("A", [0.0; 3], 1.0), sphere("B", [5.0, 0.0, 0.0], 1.0)]).unwrap();
        let tree = CsgTree::Union(vec![CsgTree::leaf("A"), CsgTree::leaf("B")]);
        let cloud = sample_surface(&tree, &set, 400, 5).unwrap();
        let near_a = cloud.points().iter().filter(|p| p.position.x < 2.5).count();
        assert!(near_a > 100 && near_a < 300);
    }

    #[test]
    fn top_level_complement_is_unbounded() {
        let set = PrimitiveSet::new(vec![sphere("A", [0.0; 3], 1.0)]).unwrap();
        let tree = CsgTree::complement(CsgTree::leaf("A"));
        assert!(matches!(sample_surface(&tree, &set, 10, 0), Err(Error::Unbounded(_))));
    }

    #[test]
    fn cloud_oracle_on_sampled_sphere() {
        let set = PrimitiveSet::new(vec![sphere("A", [0.0; 3], 1.0)]).unwrap();
        let cloud = sample_surface(&CsgTree::leaf("A"), &set, 2000, 8).unwrap();
        let oracle = CloudOracle::new(&cloud).unwrap();
        assert!(oracle.contains(&Vec3::zeros()));
        assert!(!oracle.contains(&Vec3::new(2.0, 0.0, 0.0)));
        let a = set.get(0);
        let mut rng = seed::rng(99);
        let region = Aabb::new(Vec3::repeat(-2.0), Vec3::repeat(2.0));
        for _ in 0..2000 {
            let p = region.sample(&mut rng);
            if a.signed_distance(&p).abs() > 0.2 {
                assert_eq!(oracle.contains(&p), a.contains(&p));
            }
        }
    }
}

//! Implicit primitives, CSG trees, and inside/outside oracles.

mod cloud;
mod primitive;
mod sampling;
mod tree;

pub use cloud::{cloud_membership, CloudOracle, CloudPoint, PointCloud};
pub use primitive::{Aabb, Primitive, PrimitiveSet, Shape, Vec3, IDENTITY};
pub use sampling::{sample_region, sample_surface, REGION_ATTEMPTS_PER_SAMPLE, SURFACE_ATTEMPTS_PER_SAMPLE};
pub use tree::{tree_membership, CsgTree, Membership, Solid};

/// Signed distance from `point` to `primitive`.
pub fn signed_distance(primitive: &Primitive, point: &Vec3) -> f64 {
    primitive.signed_distance(point)
}

pub fn leaf_count(tree: &CsgTree) -> usize {
    tree.leaf_count()
}

/// Source of truth for "inside the target solid".
#[derive(Debug)]
pub enum SolidOracle {
    GroundTruth(Solid),
    Cloud(CloudOracle),
}

impl SolidOracle {
    pub fn ground_truth(tree: &CsgTree, set: &PrimitiveSet) -> crate::Result<Self> {
        Ok(SolidOracle::GroundTruth(tree.compile(set)?))
    }

    pub fn cloud(cloud: &PointCloud) -> crate::Result<Self> {
        Ok(SolidOracle::Cloud(CloudOracle::new(cloud)?))
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        match self {
            SolidOracle::GroundTruth(s) => s.contains(p),
            SolidOracle::Cloud(c) => c.contains(p),
        }
    }

    pub fn membership(&self, p: &Vec3) -> Membership {
        self.contains(p).into()
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SolidOracle::GroundTruth(_) => "ground-truth-tree",
            SolidOracle::Cloud(_) => "point-cloud",
        }
    }
}

use rstar::primitives::GeomWithData;
use rstar::RTree;

use super::primitive::Vec3;
use super::tree::Membership;
use crate::error::{Error, Result};

const NORMAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CloudPoint {
    pub position: Vec3,
    pub normal: Option<Vec3>,
}

/// Sampled surface points, optionally with outward unit normals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    points: Vec<CloudPoint>,
}

impl PointCloud {
    pub fn new(points: Vec<CloudPoint>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if !p.position.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidCloud(format!("point {i} has a non-finite coordinate")));
            }
            if let Some(n) = p.normal {
                if (n.norm() - 1.0).abs() > NORMAL_TOLERANCE {
                    return Err(Error::InvalidCloud(format!("point {i} has a non-unit normal (norm {})", n.norm())));
                }
            }
        }
        Ok(PointCloud { points })
    }

    pub fn points(&self) -> &[CloudPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn has_normals(&self) -> bool {
        self.points.iter().all(|p| p.normal.is_some())
    }
}

/// Inside/outside oracle backed by an oriented point cloud: a query is inside
/// when it lies behind the tangent plane of its nearest cloud point.
#[derive(Debug)]
pub struct CloudOracle {
    tree: RTree<GeomWithData<[f64; 3], usize>>,
    positions: Vec<Vec3>,
    normals: Vec<Vec3>,
}

impl CloudOracle {
    pub fn new(cloud: &PointCloud) -> Result<Self> {
        if cloud.is_empty() {
            return Err(Error::UnsupportedOracle("point cloud is empty".into()));
        }
        let normals = cloud
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| p.normal.ok_or_else(|| Error::UnsupportedOracle(format!("point {i} has no normal"))))
            .collect::<Result<Vec<_>>>()?;
        let positions: Vec<Vec3> = cloud.points.iter().map(|p| p.position).collect();
        let entries = positions.iter().enumerate().map(|(i, p)| GeomWithData::new([p.x, p.y, p.z], i)).collect();
        let tree = RTree::bulk_load(entries);
        Ok(CloudOracle { tree, positions, normals })
    }

    /// Index of the nearest cloud point.
    pub fn nearest(&self, p: &Vec3) -> usize {
        self.tree.nearest_neighbor(&[p.x, p.y, p.z]).expect("cloud is non-empty").data
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        let i = self.nearest(p);
        (p - self.positions[i]).dot(&self.normals[i]) < 0.0
    }

    pub fn membership(&self, p: &Vec3) -> Membership {
        self.contains(p).into()
    }
}

/// Classifies `point` against an oriented cloud.
pub fn cloud_membership(cloud: &PointCloud, point: &Vec3) -> Result<Membership> {
    Ok(CloudOracle::new(cloud)?.membership(point))
}

use std::collections::HashMap;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use rand::Rng;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

const QUATERNION_TOLERANCE: f64 = 1e-9;

/// Canonical (local frame) shape of a primitive. Cylinders are aligned with local z.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Sphere { radius: f64 },
    Box { half_extents: Vec3 },
    Cylinder { radius: f64, half_height: f64 },
}

impl Shape {
    pub fn kind(&self) -> &'static str {
        match self {
            Shape::Sphere { .. } => "sphere",
            Shape::Box { .. } => "box",
            Shape::Cylinder { .. } => "cylinder",
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(format!("{name} must be strictly positive, got {v}"))
            }
        };
        match *self {
            Shape::Sphere { radius } => positive("radius", radius),
            Shape::Box { half_extents } => {
                for (axis, v) in ["x", "y", "z"].iter().zip(half_extents.iter()) {
                    positive(&format!("half extent {axis}"), *v)?;
                }
                Ok(())
            }
            Shape::Cylinder { radius, half_height } => {
                positive("radius", radius)?;
                positive("half height", half_height)
            }
        }
    }

    /// Signed distance in the local frame.
    pub fn local_distance(&self, p: &Vec3) -> f64 {
        match *self {
            Shape::Sphere { radius } => p.norm() - radius,
            Shape::Box { half_extents } => {
                let d = p.abs() - half_extents;
                let outside = Vec3::new(d.x.max(0.0), d.y.max(0.0), d.z.max(0.0)).norm();
                outside + d.max().min(0.0)
            }
            Shape::Cylinder { radius, half_height } => {
                let dr = p.xy().norm() - radius;
                let dz = p.z.abs() - half_height;
                let outside = (dr.max(0.0).powi(2) + dz.max(0.0).powi(2)).sqrt();
                outside + dr.max(dz).min(0.0)
            }
        }
    }

    fn local_half_extents(&self) -> Vec3 {
        match *self {
            Shape::Sphere { radius } => Vec3::repeat(radius),
            Shape::Box { half_extents } => half_extents,
            Shape::Cylinder { radius, half_height } => Vec3::new(radius, radius, half_height),
        }
    }

    pub fn surface_area(&self) -> f64 {
        use std::f64::consts::PI;
        match *self {
            Shape::Sphere { radius } => 4.0 * PI * radius * radius,
            Shape::Box { half_extents: h } => 8.0 * (h.x * h.y + h.y * h.z + h.x * h.z),
            Shape::Cylinder { radius, half_height } => {
                4.0 * PI * radius * half_height + 2.0 * PI * radius * radius
            }
        }
    }

    /// Uniform sample on the local-frame surface.
    pub fn sample_surface<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        use std::f64::consts::PI;
        match *self {
            Shape::Sphere { radius } => unit_direction(rng) * radius,
            Shape::Box { half_extents: h } => {
                let areas = [h.y * h.z, h.x * h.z, h.x * h.y];
                let total: f64 = areas.iter().sum();
                let mut pick = rng.random::<f64>() * total;
                let mut axis = 2;
                for (i, a) in areas.iter().enumerate() {
                    if pick < *a {
                        axis = i;
                        break;
                    }
                    pick -= a;
                }
                let mut p = Vec3::new(
                    (2.0 * rng.random::<f64>() - 1.0) * h.x,
                    (2.0 * rng.random::<f64>() - 1.0) * h.y,
                    (2.0 * rng.random::<f64>() - 1.0) * h.z,
                );
                p[axis] = if rng.random::<bool>() { h[axis] } else { -h[axis] };
                p
            }
            Shape::Cylinder { radius, half_height } => {
                let side = 4.0 * PI * radius * half_height;
                let cap = PI * radius * radius;
                let pick = rng.random::<f64>() * (side + 2.0 * cap);
                let angle = 2.0 * PI * rng.random::<f64>();
                if pick < side {
                    let z = (2.0 * rng.random::<f64>() - 1.0) * half_height;
                    Vec3::new(radius * angle.cos(), radius * angle.sin(), z)
                } else {
                    let r = radius * rng.random::<f64>().sqrt();
                    let z = if pick < side + cap { half_height } else { -half_height };
                    Vec3::new(r * angle.cos(), r * angle.sin(), z)
                }
            }
        }
    }
}

fn unit_direction<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    let z = 2.0 * rng.random::<f64>() - 1.0;
    let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    let s = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(s * phi.cos(), s * phi.sin(), z)
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Aabb { min, max }
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|i| self.min[i] >= self.max[i])
    }

    pub fn intersection(&self, other: &Aabb) -> Aabb {
        Aabb { min: self.min.sup(&other.min), max: self.max.inf(&other.max) }
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb { min: self.min.inf(&other.min), max: self.max.sup(&other.max) }
    }

    pub fn overlaps(&self, other: &Aabb) -> bool {
        !self.intersection(other).is_empty()
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    pub fn expanded(&self, margin: f64) -> Aabb {
        Aabb { min: self.min.add_scalar(-margin), max: self.max.add_scalar(margin) }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        let u = Vec3::new(rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>());
        self.min + (self.max - self.min).component_mul(&u)
    }
}

/// A posed implicit solid.
#[derive(Debug, Clone, PartialEq)]
pub struct Primitive {
    id: String,
    shape: Shape,
    translation: Vec3,
    rotation: UnitQuaternion<f64>,
}

impl Primitive {
    /// Builds a primitive from a translation and a `[w, x, y, z]` unit quaternion.
    pub fn new(id: impl Into<String>, shape: Shape, translation: Vec3, rotation: [f64; 4]) -> Result<Self> {
        let id = id.into();
        let invalid = |reason: String| Error::InvalidPrimitive { id: id.clone(), reason };
        shape.validate().map_err(invalid)?;
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(invalid("translation must be finite".into()));
        }
        let q = Quaternion::new(rotation[0], rotation[1], rotation[2], rotation[3]);
        if (q.norm() - 1.0).abs() > QUATERNION_TOLERANCE {
            return Err(invalid(format!("rotation quaternion has norm {}, expected 1", q.norm())));
        }
        Ok(Primitive { id, shape, translation, rotation: UnitQuaternion::new_unchecked(q) })
    }

    pub fn sphere(id: impl Into<String>, center: [f64; 3], radius: f64) -> Result<Self> {
        Self::new(id, Shape::Sphere { radius }, center.into(), IDENTITY)
    }

    pub fn cuboid(id: impl Into<String>, center: [f64; 3], half_extents: [f64; 3]) -> Result<Self> {
        Self::new(id, Shape::Box { half_extents: half_extents.into() }, center.into(), IDENTITY)
    }

    pub fn cylinder(id: impl Into<String>, center: [f64; 3], radius: f64, half_height: f64) -> Result<Self> {
        Self::new(id, Shape::Cylinder { radius, half_height }, center.into(), IDENTITY)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn translation(&self) -> Vec3 {
        self.translation
    }

    /// Rotation as `[w, x, y, z]`.
    pub fn rotation(&self) -> [f64; 4] {
        let q = self.rotation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    pub fn to_local(&self, p: &Vec3) -> Vec3 {
        self.rotation.inverse_transform_vector(&(p - self.translation))
    }

    pub fn to_world(&self, p: &Vec3) -> Vec3 {
        self.rotation.transform_vector(p) + self.translation
    }

    /// Negative strictly inside, zero on the surface, positive outside. Exact
    /// Euclidean distance outside; inside values of boxes and cylinders are
    /// pseudo-distances.
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.shape.local_distance(&self.to_local(p))
    }

    /// Open-set membership: surface points are outside.
    pub fn contains(&self, p: &Vec3) -> bool {
        self.signed_distance(p) < 0.0
    }

    /// Conservative world-space bounds.
    pub fn aabb(&self) -> Aabb {
        let h = self.shape.local_half_extents();
        if let Shape::Sphere { radius } = self.shape {
            return Aabb::new(self.translation.add_scalar(-radius), self.translation.add_scalar(radius));
        }
        let r = self.rotation.to_rotation_matrix();
        let m = r.matrix();
        let extent = Vec3::from_fn(|i, _| (0..3).map(|j| m[(i, j)].abs() * h[j]).sum());
        Aabb::new(self.translation - extent, self.translation + extent)
    }

    pub fn surface_area(&self) -> f64 {
        self.shape.surface_area()
    }

    pub fn sample_surface<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        self.to_world(&self.shape.sample_surface(rng))
    }
}

pub const IDENTITY: [f64; 4] = [1.0, 0.0, 0.0, 0.0];

/// An ordered set of primitives with unique ids.
#[derive(Debug, Clone, Default)]
pub struct PrimitiveSet {
    primitives: Vec<Primitive>,
    index: HashMap<String, usize>,
}

impl PrimitiveSet {
    pub fn new(primitives: Vec<Primitive>) -> Result<Self> {
        let mut index = HashMap::with_capacity(primitives.len());
        for (i, p) in primitives.iter().enumerate() {
            if index.insert(p.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(p.id.clone()));
            }
        }
        Ok(PrimitiveSet { primitives, index })
    }

    pub fn len(&self) -> usize {
        self.primitives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }

    pub fn get(&self, i: usize) -> &Primitive {
        &self.primitives[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn by_id(&self, id: &str) -> Option<&Primitive> {
        self.index_of(id).map(|i| &self.primitives[i])
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Primitive> {
        self.primitives.iter()
    }

    pub fn ids(&self) -> Vec<String> {
        self.primitives.iter().map(|p| p.id.clone()).collect()
    }

    pub fn as_slice(&self) -> &[Primitive] {
        &self.primitives
    }

    /// Union of all primitive bounds, `None` for an empty set.
    pub fn bounds(&self) -> Option<Aabb> {
        self.primitives.iter().map(Primitive::aabb).reduce(|a, b| a.union(&b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_sphere() -> Primitive {
        Primitive::sphere("A", [0.0; 3], 1.0).unwrap()
    }

    #[test]
    fn sphere_distances() {
        let s = unit_sphere();
        assert_abs_diff_eq!(s.signed_distance(&Vec3::zeros()), -1.0);
        assert_abs_diff_eq!(s.signed_distance(&Vec3::new(1.0, 0.0, 0.0)), 0.0);
        assert!(!s.contains(&Vec3::new(1.0, 0.0, 0.0)));
    }

    #[test]
    fn box_face_distance() {
        let b = Primitive::cuboid("B", [0.0; 3], [1.0; 3]).unwrap();
        assert_abs_diff_eq!(b.signed_distance(&Vec3::new(3.0, 0.0, 0.0)), 2.0);
        assert_abs_diff_eq!(b.signed_distance(&Vec3::new(2.0, 2.0, 1.0)), 2f64.sqrt(), epsilon = 1e-12);
        assert!(b.signed_distance(&Vec3::new(0.5, 0.0, 0.0)) < 0.0);
    }

    #[test]
    fn cylinder_distance() {
        let c = Primitive::cylinder("C", [0.0; 3], 1.0, 2.0).unwrap();
        assert_abs_diff_eq!(c.signed_distance(&Vec3::new(3.0, 0.0, 0.0)), 2.0);
        assert_abs_diff_eq!(c.signed_distance(&Vec3::new(0.0, 0.0, 5.0)), 3.0);
        assert_abs_diff_eq!(c.signed_distance(&Vec3::new(4.0, 0.0, 6.0)), 5.0, epsilon = 1e-12);
        assert!(c.contains(&Vec3::new(0.0, 0.5, 1.5)));
    }

    #[test]
    fn rotation_is_applied_inverse() {
        // 90 degrees about x maps local z onto world -y.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let c = Primitive::new(
            "C",
            Shape::Cylinder { radius: 0.5, half_height: 3.0 },
            Vec3::zeros(),
            [h, h, 0.0, 0.0],
        )
        .unwrap();
        assert!(c.contains(&Vec3::new(0.0, 2.5, 0.0)));
        assert!(!c.contains(&Vec3::new(0.0, 0.0, 2.5)));
        let bb = c.aabb();
        assert_abs_diff_eq!(bb.max.y, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(bb.max.z, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(Primitive::sphere("A", [0.0; 3], 0.0).is_err());
        assert!(Primitive::cuboid("A", [0.0; 3], [1.0, -1.0, 1.0]).is_err());
        let err = Primitive::new("A", Shape::Sphere { radius: 1.0 }, Vec3::zeros(), [1.0, 0.1, 0.0, 0.0]);
        assert!(matches!(err, Err(Error::InvalidPrimitive { .. })));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = PrimitiveSet::new(vec![unit_sphere(), unit_sphere()]).unwrap_err();
        assert!(matches!(err, Error::DuplicateId(id) if id == "A"));
    }

    #[test]
    fn surface_samples_lie_on_surface() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 0.5f64.sqrt();
        let prims = [
            unit_sphere(),
            Primitive::new("B", Shape::Box { half_extents: Vec3::new(1.0, 2.0, 0.5) }, Vec3::new(1.0, 2.0, 3.0), [h, 0.0, h, 0.0]).unwrap(),
            Primitive::cylinder("C", [0.0, 1.0, 0.0], 0.7, 1.3).unwrap(),
        ];
        for p in &prims {
            for _ in 0..500 {
                let x = p.sample_surface(&mut rng);
                assert!(p.signed_distance(&x).abs() < 1e-9, "{} off surface", p.id());
            }
        }
    }

    #[test]
    fn sign_matches_analytic_containment() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = Primitive::sphere("S", [0.3, -0.2, 0.1], 1.2).unwrap();
        let b = Primitive::cuboid("B", [0.0; 3], [1.0, 0.5, 0.25]).unwrap();
        let c = Primitive::cylinder("C", [0.0; 3], 0.8, 0.4).unwrap();
        let region = Aabb::new(Vec3::repeat(-2.0), Vec3::repeat(2.0));
        for _ in 0..10_000 {
            let p = region.sample(&mut rng);
            let ds = (p - s.translation()).norm() - 1.2;
            assert_eq!(s.signed_distance(&p) < 0.0, ds < 0.0);
            let in_box = p.x.abs() < 1.0 && p.y.abs() < 0.5 && p.z.abs() < 0.25;
            assert_eq!(b.contains(&p), in_box);
            let in_cyl = p.xy().norm() < 0.8 && p.z.abs() < 0.4;
            assert_eq!(c.contains(&p), in_cyl);
        }
    }
}

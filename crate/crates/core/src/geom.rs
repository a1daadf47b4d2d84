//! Rigid transforms and closed triangle-mesh geometry.
//!
//! Conventions: quaternions are stored `(w, x, y, z)`, rotations are active,
//! and a [`Pose`] maps a point `p` to `rotation * p + translation`.
//! `a.compose(&b)` applies `b` first, then `a`.

use std::collections::HashMap;

use nalgebra::{Quaternion, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

/// Default contact tolerance in meters.
pub const DEFAULT_EPS: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vec3,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn new(translation: Vec3, rotation: UnitQuaternion<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self::new(Vec3::new(x, y, z), UnitQuaternion::identity())
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        Self::new(
            Vec3::zeros(),
            UnitQuaternion::from_axis_angle(&Unit::new_normalize(axis), angle),
        )
    }

    /// Build from `(w, x, y, z)` components, normalizing.
    pub fn from_wxyz(t: [f64; 3], q: [f64; 4]) -> Self {
        Self::new(
            Vec3::new(t[0], t[1], t[2]),
            UnitQuaternion::new_normalize(Quaternion::new(q[0], q[1], q[2], q[3])),
        )
    }

    pub fn wxyz(&self) -> [f64; 4] {
        let q = self.rotation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    /// `self ∘ other`: applies `other`, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        let rotation = UnitQuaternion::new_normalize((self.rotation * other.rotation).into_inner());
        Pose {
            rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.rotation.inverse();
        Pose {
            rotation: inv,
            translation: -(inv * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    /// Same rotation, translation shifted by `d` in the parent frame.
    pub fn translated(&self, d: &Vec3) -> Pose {
        Pose {
            rotation: self.rotation,
            translation: self.translation + d,
        }
    }

    /// Translational distance and rotation angle to `other`.
    pub fn distance_to(&self, other: &Pose) -> (f64, f64) {
        let lin = (self.translation - other.translation).norm();
        let ang = self.rotation.angle_to(&other.rotation);
        (lin, ang)
    }

    pub fn approx_eq(&self, other: &Pose, lin_tol: f64, ang_tol: f64) -> bool {
        let (lin, ang) = self.distance_to(other);
        lin <= lin_tol && ang <= ang_tol
    }
}

pub fn pose_compose(a: &Pose, b: &Pose) -> Pose {
    a.compose(b)
}

pub fn pose_inverse(a: &Pose) -> Pose {
    a.inverse()
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    q: [f64; 4],
    t: [f64; 3],
}

impl Serialize for Pose {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PoseRepr {
            q: self.wxyz(),
            t: [self.translation.x, self.translation.y, self.translation.z],
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = PoseRepr::deserialize(d)?;
        let n = r.q.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !n.is_finite() || (n - 1.0).abs() > 1e-6 {
            return Err(serde::de::Error::custom(format!(
                "quaternion must be unit length, got norm {n}"
            )));
        }
        if r.t.iter().any(|c| !c.is_finite()) {
            return Err(serde::de::Error::custom("translation must be finite"));
        }
        Ok(Pose::from_wxyz(r.t, r.q))
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let mut b = Aabb::new(first, first);
        for p in it {
            b.min = b.min.inf(p);
            b.max = b.max.sup(p);
        }
        Some(b)
    }

    /// Touching counts as overlap.
    pub fn overlaps(&self, other: &Aabb) -> bool {
        (0..3).all(|i| self.min[i] <= other.max[i] && other.min[i] <= self.max[i])
    }

    /// Smallest per-axis interval overlap; negative when separated.
    pub fn penetration(&self, other: &Aabb) -> f64 {
        (0..3)
            .map(|i| self.max[i].min(other.max[i]) - self.min[i].max(other.min[i]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb::new(self.min.inf(&other.min), self.max.sup(&other.max))
    }

    pub fn inflated(&self, r: f64) -> Aabb {
        let d = Vec3::repeat(r);
        Aabb::new(self.min - d, self.max + d)
    }

    pub fn translated(&self, d: &Vec3) -> Aabb {
        Aabb::new(self.min + d, self.max + d)
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| self.min[i] <= p[i] && p[i] <= self.max[i])
    }
}

pub fn aabb_overlaps(a: &Aabb, b: &Aabb) -> bool {
    a.overlaps(b)
}

/// Closed, consistently wound triangle mesh in its own frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriMesh {
    /// Axis-aligned box spanning `min..max`.
    pub fn from_min_max(min: Vec3, max: Vec3) -> Self {
        let vertices = (0..8)
            .map(|i| {
                Vec3::new(
                    if i & 1 == 0 { min.x } else { max.x },
                    if i & 2 == 0 { min.y } else { max.y },
                    if i & 4 == 0 { min.z } else { max.z },
                )
            })
            .collect();
        let triangles = vec![
            [0, 2, 3],
            [0, 3, 1],
            [4, 5, 7],
            [4, 7, 6],
            [0, 1, 5],
            [0, 5, 4],
            [2, 6, 7],
            [2, 7, 3],
            [0, 4, 6],
            [0, 6, 2],
            [1, 3, 7],
            [1, 7, 5],
        ];
        Self { vertices, triangles }
    }

    /// Box centered on the origin with the given full extents.
    pub fn cuboid(size: Vec3) -> Self {
        Self::from_min_max(-size / 2.0, size / 2.0)
    }

    pub fn triangle(&self, i: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[i];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn signed_volume(&self) -> f64 {
        (0..self.triangles.len())
            .map(|i| {
                let [a, b, c] = self.triangle(i);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Bounds without validation; `None` for an empty vertex list.
    pub fn bounds(&self) -> Option<Aabb> {
        Aabb::from_points(&self.vertices)
    }

    /// Checks the closed-manifold contract: indices in range, non-degenerate
    /// triangles, every directed edge matched by exactly one reverse edge,
    /// and positive enclosed volume.
    pub fn validate(&self) -> Result<(), GeomError> {
        if self.vertices.is_empty() || self.triangles.is_empty() {
            return Err(GeomError::InvalidMesh("empty mesh".into()));
        }
        if self.vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(GeomError::InvalidMesh("non-finite vertex".into()));
        }
        let n = self.vertices.len() as u32;
        let mut edges: HashMap<(u32, u32), u32> = HashMap::new();
        for (ti, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                return Err(GeomError::InvalidMesh(format!(
                    "triangle {ti} has an index out of range"
                )));
            }
            let [a, b, c] = self.triangle(ti);
            if (b - a).cross(&(c - a)).norm() <= 1e-18 {
                return Err(GeomError::InvalidMesh(format!("triangle {ti} is degenerate")));
            }
            for k in 0..3 {
                let e = (tri[k], tri[(k + 1) % 3]);
                *edges.entry(e).or_insert(0) += 1;
            }
        }
        for (&(i, j), &count) in &edges {
            if count != 1 || edges.get(&(j, i)) != Some(&1) {
                return Err(GeomError::InvalidMesh(format!(
                    "edge ({i}, {j}) is not shared by exactly two consistently wound triangles (not closed)"
                )));
            }
        }
        if self.signed_volume() <= 0.0 {
            return Err(GeomError::InvalidMesh(
                "enclosed volume is not positive (inverted or flat shell)".into(),
            ));
        }
        Ok(())
    }

    pub fn transformed(&self, p: &Pose) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|v| p.transform_point(v)).collect(),
            triangles: self.triangles.clone(),
        }
    }
}

pub fn transform_mesh(m: &TriMesh, p: &Pose) -> TriMesh {
    m.transformed(p)
}

pub fn mesh_aabb(m: &TriMesh) -> Result<Aabb, GeomError> {
    m.validate()?;
    Ok(m.bounds().expect("validated mesh is non-empty"))
}

pub fn bbox_diagonal(m: &TriMesh) -> Result<f64, GeomError> {
    Ok(mesh_aabb(m)?.diagonal())
}

/// Positive-volume intersection test for two posed closed meshes.
pub fn solids_overlap_volume(a: &TriMesh, pa: &Pose, b: &TriMesh, pb: &Pose, eps: f64) -> Result<bool, GeomError> {
    a.validate()?;
    b.validate()?;
    let sa = PlacedMesh::new(a, pa);
    let sb = PlacedMesh::new(b, pb);
    Ok(sa.overlaps_volume(&sb, eps))
}

/// A mesh baked into world coordinates with per-triangle caches, for
/// repeated queries.
#[derive(Debug, Clone)]
pub struct PlacedMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    normals: Vec<Vec3>,
    tri_boxes: Vec<Aabb>,
    pub aabb: Aabb,
}

// Skewed directions so parity rays avoid the edges of axis-aligned geometry.
const RAY_DIRS: [[f64; 3]; 3] = [
    [0.318_7, 0.540_2, 0.778_9],
    [-0.613_3, 0.271_9, 0.741_6],
    [0.457_1, -0.803_7, 0.380_9],
];

impl PlacedMesh {
    pub fn new(m: &TriMesh, p: &Pose) -> Self {
        let vertices: Vec<Vec3> = m.vertices.iter().map(|v| p.transform_point(v)).collect();
        Self::from_world(vertices, m.triangles.clone())
    }

    fn from_world(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Self {
        let mut normals = Vec::with_capacity(triangles.len());
        let mut tri_boxes = Vec::with_capacity(triangles.len());
        for t in &triangles {
            let [a, b, c] = t.map(|i| vertices[i as usize]);
            normals.push((b - a).cross(&(c - a)).normalize());
            tri_boxes.push(Aabb::from_points([&a, &b, &c]).unwrap());
        }
        let aabb = Aabb::from_points(&vertices).unwrap_or(Aabb::new(Vec3::zeros(), Vec3::zeros()));
        Self {
            vertices,
            triangles,
            normals,
            tri_boxes,
            aabb,
        }
    }

    pub fn translated(&self, d: &Vec3) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| v + d).collect(),
            triangles: self.triangles.clone(),
            normals: self.normals.clone(),
            tri_boxes: self.tri_boxes.iter().map(|b| b.translated(d)).collect(),
            aabb: self.aabb.translated(d),
        }
    }

    pub fn tri(&self, i: usize) -> [Vec3; 3] {
        self.triangles[i].map(|k| self.vertices[k as usize])
    }

    /// Unsigned distance from `p` to the surface.
    pub fn surface_distance(&self, p: &Vec3) -> f64 {
        (0..self.triangles.len())
            .map(|i| {
                let [a, b, c] = self.tri(i);
                (closest_point_on_triangle(p, &a, &b, &c) - p).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Ray-parity containment, majority vote over three skewed rays.
    pub fn contains_point(&self, p: &Vec3) -> bool {
        if !self.aabb.contains(p) {
            return false;
        }
        let votes = RAY_DIRS
            .iter()
            .filter(|d| {
                let dir = Vec3::new(d[0], d[1], d[2]);
                let hits = (0..self.triangles.len())
                    .filter(|&i| {
                        let [a, b, c] = self.tri(i);
                        ray_triangle(p, &dir, &a, &b, &c).is_some_and(|t| t > 0.0)
                    })
                    .count();
                hits % 2 == 1
            })
            .count();
        votes >= 2
    }

    fn has_deep_vertex_in(&self, other: &PlacedMesh, eps: f64) -> bool {
        let probe = other.aabb.inflated(-eps);
        self.vertices
            .iter()
            .any(|v| probe.contains(v) && other.surface_distance(v) > eps && other.contains_point(v))
    }

    /// True iff the two solids share a volume deeper than `eps`; surface
    /// contact is not an overlap.
    pub fn overlaps_volume(&self, other: &PlacedMesh, eps: f64) -> bool {
        if self.aabb.penetration(&other.aabb) <= eps {
            return false;
        }
        if self.has_deep_vertex_in(other, eps) || other.has_deep_vertex_in(self, eps) {
            return true;
        }
        for i in 0..self.triangles.len() {
            if self.tri_boxes[i].penetration(&other.aabb) < -eps {
                continue;
            }
            for j in 0..other.triangles.len() {
                if self.tri_boxes[i].penetration(&other.tri_boxes[j]) < -eps {
                    continue;
                }
                if triangles_interpenetrate(&self.tri(i), &self.normals[i], &other.tri(j), &other.normals[j], eps) {
                    return true;
                }
            }
        }
        false
    }
}

/// Transversal crossing of the interiors, or same-facing coplanar overlap
/// wider than `eps`.
fn triangles_interpenetrate(t1: &[Vec3; 3], n1: &Vec3, t2: &[Vec3; 3], n2: &Vec3, eps: f64) -> bool {
    let d1 = t1.map(|v| n2.dot(&(v - t2[0])));
    let d2 = t2.map(|v| n1.dot(&(v - t1[0])));
    let cos = n1.dot(n2);
    if cos.abs() > 1.0 - 1e-12 {
        // parallel planes
        if cos > 0.0 && d1.iter().all(|d| d.abs() <= eps) {
            return coplanar_overlap_width(t1, t2, n1) > eps;
        }
        return false;
    }
    let straddles = |d: &[f64; 3]| {
        d.iter().cloned().fold(f64::NEG_INFINITY, f64::max) > eps
            && d.iter().cloned().fold(f64::INFINITY, f64::min) < -eps
    };
    if !straddles(&d1) || !straddles(&d2) {
        return false;
    }
    let dir = n1.cross(n2);
    let (a0, a1) = plane_cut_interval(t1, &d1, &dir);
    let (b0, b1) = plane_cut_interval(t2, &d2, &dir);
    let len = a1.min(b1) - a0.max(b0);
    len > eps * dir.norm()
}

/// Parameter interval (along `dir`) where a triangle crosses the zero set
/// of its signed distances.
fn plane_cut_interval(t: &[Vec3; 3], d: &[f64; 3], dir: &Vec3) -> (f64, f64) {
    let mut ts = Vec::with_capacity(3);
    for k in 0..3 {
        let (i, j) = (k, (k + 1) % 3);
        if (d[i] > 0.0) != (d[j] > 0.0) && d[i] != d[j] {
            let s = d[i] / (d[i] - d[j]);
            let p = t[i] + (t[j] - t[i]) * s;
            ts.push(dir.dot(&p));
        } else if d[i] == 0.0 {
            ts.push(dir.dot(&t[i]));
        }
    }
    let lo = ts.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Approximate width (`2 * area / perimeter`) of the intersection of two
/// coplanar triangles.
fn coplanar_overlap_width(t1: &[Vec3; 3], t2: &[Vec3; 3], n: &Vec3) -> f64 {
    let u = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = (u - n * n.dot(&u)).normalize();
    let v = n.cross(&u);
    let proj = |p: &Vec3| [p.dot(&u), p.dot(&v)];
    let mut poly: Vec<[f64; 2]> = t1.iter().map(proj).collect();
    let clip: Vec<[f64; 2]> = t2.iter().map(proj).collect();
    for k in 0..3 {
        let a = clip[k];
        let b = clip[(k + 1) % 3];
        let side = |p: &[f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        let mut out = Vec::with_capacity(poly.len() + 1);
        for i in 0..poly.len() {
            let p = poly[i];
            let q = poly[(i + 1) % poly.len()];
            let (sp, sq) = (side(&p), side(&q));
            if sp >= 0.0 {
                out.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                let s = sp / (sp - sq);
                out.push([p[0] + (q[0] - p[0]) * s, p[1] + (q[1] - p[1]) * s]);
            }
        }
        poly = out;
        if poly.len() < 3 {
            return 0.0;
        }
    }
    let mut area = 0.0;
    let mut perimeter = 0.0;
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        area += p[0] * q[1] - q[0] * p[1];
        perimeter += ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
    }
    if perimeter <= 0.0 {
        0.0
    } else {
        area.abs() / perimeter
    }
}

/// Möller–Trumbore; returns the ray parameter of a hit.
pub fn ray_triangle(origin: &Vec3, dir: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let h = dir.cross(&e2);
    let det = e1.dot(&h);
    if det.abs() < 1e-15 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - a;
    let u = inv * s.dot(&h);
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = inv * dir.dot(&q);
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some(inv * e2.dot(&q))
}

pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

/// Minimum distance between segments `p0p1` and `q0q1`.
pub fn segment_segment_distance(p0: &Vec3, p1: &Vec3, q0: &Vec3, q1: &Vec3) -> f64 {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    let (s, t);
    if a <= 1e-18 && e <= 1e-18 {
        return r.norm();
    }
    if a <= 1e-18 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= 1e-18 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 1e-18 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    ((p0 + d1 * s) - (q0 + d2 * t)).norm()
}

pub fn segment_triangle_distance(p0: &Vec3, p1: &Vec3, tri: &[Vec3; 3]) -> f64 {
    let dir = p1 - p0;
    if let Some(t) = ray_triangle(p0, &dir, &tri[0], &tri[1], &tri[2]) {
        if (0.0..=1.0).contains(&t) {
            return 0.0;
        }
    }
    let mut best = (closest_point_on_triangle(p0, &tri[0], &tri[1], &tri[2]) - p0)
        .norm()
        .min((closest_point_on_triangle(p1, &tri[0], &tri[1], &tri[2]) - p1).norm());
    for k in 0..3 {
        best = best.min(segment_segment_distance(p0, p1, &tri[k], &tri[(k + 1) % 3]));
    }
    best
}

/// A swept sphere around a segment, in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capsule {
    pub a: Vec3,
    pub b: Vec3,
    pub radius: f64,
}

impl Capsule {
    pub fn aabb(&self) -> Aabb {
        Aabb::from_points([&self.a, &self.b]).unwrap().inflated(self.radius)
    }

    pub fn intersects_capsule(&self, other: &Capsule) -> bool {
        segment_segment_distance(&self.a, &self.b, &other.a, &other.b) < self.radius + other.radius
    }

    pub fn intersects_mesh(&self, m: &PlacedMesh) -> bool {
        let bx = self.aabb();
        if !bx.overlaps(&m.aabb) {
            return false;
        }
        for i in 0..m.triangles.len() {
            if !bx.overlaps(&m.tri_boxes[i]) {
                continue;
            }
            if segment_triangle_distance(&self.a, &self.b, &m.tri(i)) < self.radius {
                return true;
            }
        }
        m.contains_point(&self.a)
    }
}

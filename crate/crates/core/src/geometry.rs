//! Fixed-dimension vectors and obstacle shapes.
//!
//! Every world picks a dimension of 2 or 3 up front. [`Vector`] stores three
//! components and remembers how many of them are live, so the same code paths
//! serve planar and volumetric scenarios without heap allocation.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::de::{self, SeqAccess, Visitor};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Copy, PartialEq)]
pub struct Vector {
    c: [f64; 3],
    dim: u8,
}

impl Vector {
    pub const fn new2(x: f64, y: f64) -> Self {
        Self {
            c: [x, y, 0.0],
            dim: 2,
        }
    }

    pub const fn new3(x: f64, y: f64, z: f64) -> Self {
        Self {
            c: [x, y, z],
            dim: 3,
        }
    }

    pub const fn zeros(dim: u8) -> Self {
        Self {
            c: [0.0; 3],
            dim,
        }
    }

    /// Builds a vector from 2 or 3 components.
    pub fn from_slice(components: &[f64]) -> Option<Self> {
        match *components {
            [x, y] => Some(Self::new2(x, y)),
            [x, y, z] => Some(Self::new3(x, y, z)),
            _ => None,
        }
    }

    pub fn dim(&self) -> u8 {
        self.dim
    }

    pub fn x(&self) -> f64 {
        self.c[0]
    }

    pub fn y(&self) -> f64 {
        self.c[1]
    }

    pub fn z(&self) -> f64 {
        self.c[2]
    }

    pub fn components(&self) -> &[f64] {
        &self.c[..self.dim as usize]
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.c[0] * other.c[0] + self.c[1] * other.c[1] + self.c[2] * other.c[2]
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(&self, other: &Vector) -> f64 {
        (*self - *other).norm()
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn unit(&self) -> Option<Vector> {
        let n = self.norm();
        (n > 0.0).then(|| *self * (1.0 / n))
    }

    /// Rescales the vector so its length does not exceed `max_len`.
    pub fn clamp_norm(&self, max_len: f64) -> Vector {
        let n = self.norm();
        if n > max_len && n > 0.0 {
            *self * (max_len / n)
        } else {
            *self
        }
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|v| v.is_finite())
    }

    /// Mirror image across the plane `axis = 0`.
    pub fn mirrored(&self, axis: usize) -> Vector {
        let mut out = *self;
        out.c[axis] = -out.c[axis];
        out
    }

    pub fn with_component(&self, axis: usize, value: f64) -> Vector {
        let mut out = *self;
        out.c[axis] = value;
        out
    }

    pub(crate) fn map2(&self, other: &Vector, f: impl Fn(f64, f64) -> f64) -> Vector {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for i in 0..self.dim as usize {
            out.c[i] = f(self.c[i], other.c[i]);
        }
        out
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.components()).finish()
    }
}

impl Add for Vector {
    type Output = Vector;
    fn add(self, rhs: Vector) -> Vector {
        self.map2(&rhs, |a, b| a + b)
    }
}

impl AddAssign for Vector {
    fn add_assign(&mut self, rhs: Vector) {
        *self = *self + rhs;
    }
}

impl Sub for Vector {
    type Output = Vector;
    fn sub(self, rhs: Vector) -> Vector {
        self.map2(&rhs, |a, b| a - b)
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    fn mul(self, k: f64) -> Vector {
        let mut out = self;
        for v in out.c.iter_mut() {
            *v *= k;
        }
        out
    }
}

impl Neg for Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self * -1.0
    }
}

impl Serialize for Vector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.dim as usize))?;
        for v in self.components() {
            seq.serialize_element(v)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Vector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct VectorVisitor;

        impl<'de> Visitor<'de> for VectorVisitor {
            type Value = Vector;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an array of 2 or 3 numbers")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Vector, A::Error> {
                let mut buf = Vec::with_capacity(3);
                while let Some(v) = seq.next_element::<f64>()? {
                    buf.push(v);
                }
                Vector::from_slice(&buf).ok_or_else(|| de::Error::invalid_length(buf.len(), &self))
            }
        }

        deserializer.deserialize_seq(VectorVisitor)
    }
}

/// Static obstacle. Circles in 2-D worlds and spheres in 3-D worlds share the
/// `sphere` shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Obstacle {
    #[serde(alias = "circle")]
    Sphere {
        center: Vector,
        radius_m: f64,
    },
    Box {
        min: Vector,
        max: Vector,
    },
}

impl Obstacle {
    pub fn sphere(center: Vector, radius: f64) -> Self {
        Obstacle::Sphere {
            center,
            radius_m: radius,
        }
    }

    pub fn aabb(min: Vector, max: Vector) -> Self {
        Obstacle::Box { min, max }
    }

    pub fn dim(&self) -> u8 {
        match self {
            Obstacle::Sphere { center, .. } => center.dim(),
            Obstacle::Box { min, .. } => min.dim(),
        }
    }

    /// Signed distance from `p` to the surface: positive outside, negative inside.
    pub fn signed_distance(&self, p: &Vector) -> f64 {
        match self {
            Obstacle::Sphere { center, radius_m } => p.distance(center) - radius_m,
            Obstacle::Box { min, max } => {
                let mut outside = 0.0;
                let mut inside = f64::INFINITY;
                for i in 0..p.dim() as usize {
                    let v = p.components()[i];
                    let lo = min.components()[i];
                    let hi = max.components()[i];
                    let d = (lo - v).max(v - hi);
                    if d > 0.0 {
                        outside += d * d;
                    }
                    inside = inside.min(v - lo).min(hi - v);
                }
                if outside > 0.0 {
                    outside.sqrt()
                } else {
                    -inside
                }
            }
        }
    }

    /// Direction pointing away from the obstacle at `p` (gradient of the signed
    /// distance). Falls back to the first axis when `p` sits exactly on the
    /// sphere center.
    pub fn outward_normal(&self, p: &Vector) -> Vector {
        match self {
            Obstacle::Sphere { center, .. } => (*p - *center)
                .unit()
                .unwrap_or_else(|| Vector::zeros(p.dim()).with_component(0, 1.0)),
            Obstacle::Box { min, max } => {
                let clamped = p.map2(min, f64::max).map2(max, f64::min);
                if let Some(u) = (*p - clamped).unit() {
                    return u;
                }
                // Inside: push through the nearest face.
                let mut best_axis = 0;
                let mut best_sign = -1.0;
                let mut best = f64::INFINITY;
                for i in 0..p.dim() as usize {
                    let v = p.components()[i];
                    let to_lo = v - min.components()[i];
                    let to_hi = max.components()[i] - v;
                    if to_lo < best {
                        best = to_lo;
                        best_axis = i;
                        best_sign = -1.0;
                    }
                    if to_hi < best {
                        best = to_hi;
                        best_axis = i;
                        best_sign = 1.0;
                    }
                }
                Vector::zeros(p.dim()).with_component(best_axis, best_sign)
            }
        }
    }

    pub fn mirrored(&self, axis: usize) -> Obstacle {
        match *self {
            Obstacle::Sphere { center, radius_m } => Obstacle::Sphere {
                center: center.mirrored(axis),
                radius_m,
            },
            Obstacle::Box { min, max } => {
                let a = min.mirrored(axis);
                let b = max.mirrored(axis);
                Obstacle::Box {
                    min: a.map2(&b, f64::min),
                    max: a.map2(&b, f64::max),
                }
            }
        }
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        match self {
            Obstacle::Sphere { center, radius_m } => {
                if !(*radius_m > 0.0) || !center.is_finite() {
                    return Err(format!("obstacle radius must be > 0 (got {radius_m})"));
                }
            }
            Obstacle::Box { min, max } => {
                if min.dim() != max.dim() {
                    return Err("box corners differ in dimension".into());
                }
                if min
                    .components()
                    .iter()
                    .zip(max.components())
                    .any(|(a, b)| !(a < b))
                {
                    return Err("box min must be < max componentwise".into());
                }
            }
        }
        Ok(())
    }
}

/// Closest point to `p` on the segment `a`–`b`.
pub fn closest_point_on_segment(a: &Vector, b: &Vector, p: &Vector) -> Vector {
    let ab = *b - *a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return *a;
    }
    let t = ((*p - *a).dot(&ab) / len2).clamp(0.0, 1.0);
    *a + ab * t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_distance_matches_geometry() {
        let o = Obstacle::sphere(Vector::new2(3.0, 0.0), 1.0);
        assert_eq!(o.signed_distance(&Vector::new2(0.0, 0.0)), 2.0);
        assert_eq!(o.signed_distance(&Vector::new2(3.0, 0.0)), -1.0);
    }

    #[test]
    fn box_distance_inside_and_out() {
        let o = Obstacle::aabb(Vector::new2(0.0, 0.0), Vector::new2(2.0, 1.0));
        assert!((o.signed_distance(&Vector::new2(3.0, 2.0)) - 2f64.sqrt()).abs() < 1e-12);
        assert!((o.signed_distance(&Vector::new2(1.0, 0.25)) + 0.25).abs() < 1e-12);
        assert_eq!(o.outward_normal(&Vector::new2(1.0, 0.25)), Vector::new2(0.0, -1.0));
    }

    #[test]
    fn vector_json_round_trip_keeps_dimension() {
        let v = Vector::new3(1.0, -2.5, 0.125);
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, "[1.0,-2.5,0.125]");
        let back: Vector = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        assert!(serde_json::from_str::<Vector>("[1.0]").is_err());
    }
}

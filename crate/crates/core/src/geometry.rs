//! Vectors, obstacles and scenes.
//!
//! Everything here is generic in the dimension `n`; the scenario tooling
//! fixes `n = 2`. Obstacles are convex: a disc/ball around a center, or a
//! capsule around a line segment. Each exposes an *anchor*, the closest point
//! of its core (center or segment) to a query point, and a *surface offset*
//! (radius or half thickness), so that the signed surface distance is
//! `‖x − anchor‖ − offset`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Fixed-dimension real vector (positions in m, velocities in m/s).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(SmallVec<[f64; 3]>);

impl Vector {
    pub fn new(components: &[f64]) -> Self {
        Vector(SmallVec::from_slice(components))
    }

    pub fn xy(x: f64, y: f64) -> Self {
        Vector(SmallVec::from_slice(&[x, y]))
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(SmallVec::from_elem(0.0, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn y(&self) -> f64 {
        self.0[1]
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dot of vectors with different dimension");
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| *c == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn scaled(&self, s: f64) -> Vector {
        Vector(self.0.iter().map(|c| c * s).collect())
    }

    /// Unit vector in the same direction, `None` for the zero vector.
    pub fn normalized(&self) -> Option<Vector> {
        let n = self.norm();
        (n > 0.0).then(|| self.scaled(1.0 / n))
    }

    /// Scales the vector down so that its norm does not exceed `max_norm`.
    /// Vectors already inside the ball are returned unchanged.
    pub fn saturated(&self, max_norm: f64) -> Vector {
        let n = self.norm();
        if n > max_norm {
            self.scaled(max_norm / n)
        } else {
            self.clone()
        }
    }

    pub fn distance(&self, other: &Vector) -> f64 {
        (self - other).norm()
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                actual: self.dim(),
            })
        }
    }

    /// Planar rotation about the origin (first two components).
    pub fn rotated(&self, angle: f64) -> Vector {
        let (s, c) = angle.sin_cos();
        let mut out = self.clone();
        out.0[0] = c * self.0[0] - s * self.0[1];
        out.0[1] = s * self.0[0] + c * self.0[1];
        out
    }
}

impl From<[f64; 2]> for Vector {
    fn from(v: [f64; 2]) -> Self {
        Vector::new(&v)
    }
}

impl From<[f64; 3]> for Vector {
    fn from(v: [f64; 3]) -> Self {
        Vector::new(&v)
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(SmallVec::from_vec(v))
    }
}

macro_rules! elementwise {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&Vector> for &Vector {
            type Output = Vector;
            fn $method(self, rhs: &Vector) -> Vector {
                assert_eq!(self.dim(), rhs.dim(), "vector dimension mismatch");
                Vector(self.0.iter().zip(rhs.0.iter()).map(|(a, b)| a $op b).collect())
            }
        }
        impl $trait<Vector> for Vector {
            type Output = Vector;
            fn $method(self, rhs: Vector) -> Vector {
                &self $op &rhs
            }
        }
        impl $trait<&Vector> for Vector {
            type Output = Vector;
            fn $method(self, rhs: &Vector) -> Vector {
                &self $op rhs
            }
        }
        impl $trait<Vector> for &Vector {
            type Output = Vector;
            fn $method(self, rhs: Vector) -> Vector {
                self $op &rhs
            }
        }
    };
}

elementwise!(Add, add, +);
elementwise!(Sub, sub, -);

impl AddAssign<&Vector> for Vector {
    fn add_assign(&mut self, rhs: &Vector) {
        assert_eq!(self.dim(), rhs.dim(), "vector dimension mismatch");
        for (a, b) in self.0.iter_mut().zip(rhs.0.iter()) {
            *a += b;
        }
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self.scaled(-1.0)
    }
}

impl Neg for Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self.scaled(-1.0)
    }
}

impl Mul<f64> for &Vector {
    type Output = Vector;
    fn mul(self, rhs: f64) -> Vector {
        self.scaled(rhs)
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    fn mul(self, rhs: f64) -> Vector {
        self.scaled(rhs)
    }
}

/// A convex obstacle. `thickness` of a segment is its full width, so the
/// surface lies `thickness / 2` from the centerline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Obstacle {
    Circle {
        center: Vector,
        radius: f64,
    },
    Segment {
        a: Vector,
        b: Vector,
        #[serde(default)]
        thickness: f64,
    },
}

impl Obstacle {
    pub fn circle(center: impl Into<Vector>, radius: f64) -> Self {
        Obstacle::Circle {
            center: center.into(),
            radius,
        }
    }

    pub fn segment(a: impl Into<Vector>, b: impl Into<Vector>, thickness: f64) -> Self {
        Obstacle::Segment {
            a: a.into(),
            b: b.into(),
            thickness,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Obstacle::Circle { center, .. } => center.dim(),
            Obstacle::Segment { a, .. } => a.dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Obstacle::Circle { center, radius } => {
                if !(radius.is_finite() && *radius >= 0.0) {
                    return Err(Error::invalid("radius", format!("must be finite and >= 0, got {radius}")));
                }
                if !center.is_finite() {
                    return Err(Error::invalid("center", "must be finite"));
                }
            }
            Obstacle::Segment { a, b, thickness } => {
                b.check_dim(a.dim())?;
                if !(thickness.is_finite() && *thickness >= 0.0) {
                    return Err(Error::invalid(
                        "thickness",
                        format!("must be finite and >= 0, got {thickness}"),
                    ));
                }
                if !(a.is_finite() && b.is_finite()) {
                    return Err(Error::invalid("segment endpoint", "must be finite"));
                }
                if a == b {
                    return Err(Error::invalid("segment", "endpoints must be distinct"));
                }
            }
        }
        Ok(())
    }

    /// Closest point of the obstacle core (center or centerline) to `x`.
    pub fn anchor(&self, x: &Vector) -> Vector {
        match self {
            Obstacle::Circle { center, .. } => center.clone(),
            Obstacle::Segment { a, b, .. } => {
                let ab = b - a;
                let t = ((x - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
                a + ab.scaled(t)
            }
        }
    }

    /// Distance from the core to the surface.
    pub fn surface_offset(&self) -> f64 {
        match self {
            Obstacle::Circle { radius, .. } => *radius,
            Obstacle::Segment { thickness, .. } => 0.5 * thickness,
        }
    }

    /// Signed distance from `x` to the surface, negative inside.
    pub fn distance(&self, x: &Vector) -> Result<f64> {
        x.check_dim(self.dim())?;
        Ok(self.signed_distance(x))
    }

    pub(crate) fn signed_distance(&self, x: &Vector) -> f64 {
        x.distance(&self.anchor(x)) - self.surface_offset()
    }

    /// Mirror image about the line through `origin` with unit direction `axis`.
    pub fn reflected(&self, origin: &Vector, axis: &Vector) -> Obstacle {
        let r = |p: &Vector| reflect(p, origin, axis);
        match self {
            Obstacle::Circle { center, radius } => Obstacle::Circle {
                center: r(center),
                radius: *radius,
            },
            Obstacle::Segment { a, b, thickness } => Obstacle::Segment {
                a: r(a),
                b: r(b),
                thickness: *thickness,
            },
        }
    }
}

/// Reflects a planar point about the line `origin + s·axis` (`axis` unit).
pub fn reflect(p: &Vector, origin: &Vector, axis: &Vector) -> Vector {
    let d = p - origin;
    let along = axis.scaled(d.dot(axis));
    let across = &d - &along;
    origin + along - across
}

/// Axis-aligned box used for rendering and for terminating LIDAR rays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub min: Vector,
    pub max: Vector,
}

impl Bounds {
    pub fn new(min: impl Into<Vector>, max: impl Into<Vector>) -> Self {
        Bounds {
            min: min.into(),
            max: max.into(),
        }
    }

    pub fn contains(&self, x: &Vector) -> bool {
        x.as_slice()
            .iter()
            .zip(self.min.as_slice().iter().zip(self.max.as_slice()))
            .all(|(c, (lo, hi))| *lo <= *c && *c <= *hi)
    }

    /// Distance along the unit ray `origin + s·dir` until it leaves the box,
    /// `0` if the origin is outside.
    pub fn exit_distance(&self, origin: &Vector, dir: &Vector) -> f64 {
        if !self.contains(origin) {
            return 0.0;
        }
        let mut s_exit = f64::INFINITY;
        for i in 0..origin.dim() {
            let (o, d) = (origin.as_slice()[i], dir.as_slice()[i]);
            if d > 0.0 {
                s_exit = s_exit.min((self.max.as_slice()[i] - o) / d);
            } else if d < 0.0 {
                s_exit = s_exit.min((self.min.as_slice()[i] - o) / d);
            }
        }
        s_exit
    }
}

/// Goal plus the obstacles defining the unsafe region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub goal: Vector,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    pub bounds: Bounds,
}

impl Scene {
    pub fn new(goal: impl Into<Vector>, obstacles: Vec<Obstacle>, bounds: Bounds) -> Result<Self> {
        let scene = Scene {
            goal: goal.into(),
            obstacles,
            bounds,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn dim(&self) -> usize {
        self.goal.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        self.bounds.min.check_dim(n)?;
        self.bounds.max.check_dim(n)?;
        for obs in &self.obstacles {
            obs.validate()?;
            if obs.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: obs.dim(),
                });
            }
        }
        let clearance = self.clearance(&self.goal);
        if clearance <= 0.0 {
            return Err(Error::invalid(
                "goal",
                format!("must lie strictly outside every obstacle (clearance {clearance})"),
            ));
        }
        Ok(())
    }

    /// Minimum signed surface distance over all obstacles, `+inf` without any.
    pub fn clearance(&self, x: &Vector) -> f64 {
        self.obstacles
            .iter()
            .map(|o| o.signed_distance(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Mirror image of the scene about the line through `origin` along `axis`.
    pub fn reflected(&self, origin: &Vector, axis: &Vector) -> Scene {
        let r1 = reflect(&self.bounds.min, origin, axis);
        let r2 = reflect(&self.bounds.max, origin, axis);
        let min: Vec<f64> = r1.as_slice().iter().zip(r2.as_slice()).map(|(a, b)| a.min(*b)).collect();
        let max: Vec<f64> = r1.as_slice().iter().zip(r2.as_slice()).map(|(a, b)| a.max(*b)).collect();
        Scene {
            goal: reflect(&self.goal, origin, axis),
            obstacles: self.obstacles.iter().map(|o| o.reflected(origin, axis)).collect(),
            bounds: Bounds::new(min, max),
        }
    }
}

pub fn distance_to_obstacle(x: &Vector, obstacle: &Obstacle) -> Result<f64> {
    obstacle.distance(x)
}

/// Index and distance of the nearest obstacle; ties go to the lowest index.
pub fn closest_obstacle(x: &Vector, scene: &Scene) -> Result<(usize, f64)> {
    x.check_dim(scene.dim())?;
    let mut best: Option<(usize, f64)> = None;
    for (i, obs) in scene.obstacles.iter().enumerate() {
        let d = obs.signed_distance(x);
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.ok_or(Error::EmptyScene)
}

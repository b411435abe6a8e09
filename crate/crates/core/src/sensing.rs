//! Simulated planar LIDAR.
//!
//! Beams are cast analytically: a quadratic for discs and parametric
//! intersections for segments. A segment with thickness is a capsule, whose
//! first entry point is the nearest entry into either end disc or either side
//! of its rectangle. Rays are terminated by the scene bounds as well as by the
//! sensor's maximum range; a ray that terminates without hitting anything is
//! reported as a miss at `max_range`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::apf::Repulsor;
use crate::cbf::{min_distance_barrier, BarrierEval};
use crate::error::{Error, Result};
use crate::geometry::{Obstacle, Scene, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarSpec {
    pub beam_count: usize,
    /// Field of view (rad), centered on the heading.
    pub fov: f64,
    pub max_range: f64,
    /// Sensor yaw relative to the vehicle heading (rad).
    pub mount_yaw: f64,
    /// Half-width of uniform additive range noise (m). Zero disables noise.
    pub range_noise: f64,
}

impl Default for LidarSpec {
    fn default() -> Self {
        LidarSpec {
            beam_count: 1080,
            fov: 1.5 * PI,
            max_range: 10.0,
            mount_yaw: 0.0,
            range_noise: 0.0,
        }
    }
}

impl LidarSpec {
    pub fn validate(&self) -> Result<()> {
        if self.beam_count == 0 {
            return Err(Error::invalid("beam_count", "must be > 0"));
        }
        if !(self.fov > 0.0 && self.fov <= 2.0 * PI) {
            return Err(Error::invalid("fov", format!("must lie in (0, 2π], got {}", self.fov)));
        }
        if !(self.max_range.is_finite() && self.max_range > 0.0) {
            return Err(Error::invalid("max_range", format!("must be finite and > 0, got {}", self.max_range)));
        }
        if !(self.range_noise.is_finite() && self.range_noise >= 0.0) {
            return Err(Error::invalid("range_noise", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// World-frame beam angles: `beam_count` evenly spaced beams, each at the
    /// center of its `fov / beam_count` sector.
    pub fn beam_angles(&self, heading: f64) -> impl Iterator<Item = f64> + '_ {
        let step = self.fov / self.beam_count as f64;
        let start = heading + self.mount_yaw - 0.5 * self.fov;
        (0..self.beam_count).map(move |i| start + (i as f64 + 0.5) * step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    pub angle: f64,
    pub range: f64,
    pub hit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub origin: Vector,
    pub beams: Vec<Beam>,
}

impl Scan {
    /// Hit points `x_Oi` in world coordinates.
    pub fn hits(&self) -> impl Iterator<Item = Vector> + '_ {
        self.beams.iter().filter(|b| b.hit).map(move |b| {
            Vector::xy(
                self.origin.x() + b.range * b.angle.cos(),
                self.origin.y() + b.range * b.angle.sin(),
            )
        })
    }

    pub fn hit_count(&self) -> usize {
        self.beams.iter().filter(|b| b.hit).count()
    }

    pub fn repulsors(&self) -> Vec<Repulsor> {
        self.hits().map(|point| Repulsor { point, offset: 0.0 }).collect()
    }

    /// Ranges of every `k`-th beam.
    pub fn decimated_ranges(&self, k: usize) -> Vec<f64> {
        self.beams.iter().step_by(k.max(1)).map(|b| b.range).collect()
    }

    /// Smallest hit range, `None` without hits.
    pub fn min_range(&self) -> Option<f64> {
        self.beams.iter().filter(|b| b.hit).map(|b| b.range).reduce(f64::min)
    }
}

fn cross(a: &Vector, b: &Vector) -> f64 {
    a.x() * b.y() - a.y() * b.x()
}

/// First positive intersection of the unit ray with a disc boundary.
fn ray_circle(origin: &Vector, dir: &Vector, center: &Vector, radius: f64) -> Option<f64> {
    if radius <= 0.0 {
        return None;
    }
    let f = origin - center;
    let b = f.dot(dir);
    let c = f.norm_squared() - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let near = -b - sq;
    if near > 0.0 {
        return Some(near);
    }
    let far = -b + sq;
    (far > 0.0 && c < 0.0).then_some(far)
}

fn ray_segment(origin: &Vector, dir: &Vector, a: &Vector, b: &Vector) -> Option<f64> {
    let e = b - a;
    let denom = cross(dir, &e);
    if denom.abs() < 1e-15 {
        return None;
    }
    let ao = a - origin;
    let s = cross(&ao, &e) / denom;
    let t = cross(&ao, dir) / denom;
    (s > 0.0 && (0.0..=1.0).contains(&t)).then_some(s)
}

fn ray_obstacle(origin: &Vector, dir: &Vector, obstacle: &Obstacle) -> Option<f64> {
    match obstacle {
        Obstacle::Circle { center, radius } => ray_circle(origin, dir, center, *radius),
        Obstacle::Segment { a, b, thickness } => {
            if *thickness <= 0.0 {
                return ray_segment(origin, dir, a, b);
            }
            let r = 0.5 * thickness;
            let e = b - a;
            let normal = Vector::xy(-e.y(), e.x()).scaled(r / e.norm());
            [
                ray_circle(origin, dir, a, r),
                ray_circle(origin, dir, b, r),
                ray_segment(origin, dir, &(a + &normal), &(b + &normal)),
                ray_segment(origin, dir, &(a - &normal), &(b - &normal)),
            ]
            .into_iter()
            .flatten()
            .reduce(f64::min)
        }
    }
}

fn check_origin(origin: &Vector, scene: &Scene, spec: &LidarSpec) -> Result<()> {
    origin.check_dim(2)?;
    spec.validate()?;
    if scene.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: scene.dim(),
        });
    }
    let clearance = scene.clearance(origin);
    if clearance <= 0.0 {
        return Err(Error::InsideObstacle { rho: clearance });
    }
    Ok(())
}

fn cast(origin: &Vector, angle: f64, scene: &Scene, spec: &LidarSpec) -> Beam {
    let dir = Vector::xy(angle.cos(), angle.sin());
    let limit = if scene.bounds.contains(origin) {
        spec.max_range.min(scene.bounds.exit_distance(origin, &dir))
    } else {
        spec.max_range
    };
    let nearest = scene
        .obstacles
        .iter()
        .filter_map(|o| ray_obstacle(origin, &dir, o))
        .filter(|s| *s <= limit)
        .reduce(f64::min);
    match nearest {
        Some(range) => Beam { angle, range, hit: true },
        None => Beam {
            angle,
            range: spec.max_range,
            hit: false,
        },
    }
}

/// Noise-free scan from `origin` with the vehicle facing `heading`.
pub fn scan(origin: &Vector, heading: f64, scene: &Scene, spec: &LidarSpec) -> Result<Scan> {
    check_origin(origin, scene, spec)?;
    let beams = spec.beam_angles(heading).map(|a| cast(origin, a, scene, spec)).collect();
    Ok(Scan {
        origin: origin.clone(),
        beams,
    })
}

/// Scan with uniform additive range noise on hits, drawn from `rng`.
pub fn scan_with_noise(origin: &Vector, heading: f64, scene: &Scene, spec: &LidarSpec, rng: &mut impl Rng) -> Result<Scan> {
    let mut out = scan(origin, heading, scene, spec)?;
    if spec.range_noise > 0.0 {
        for beam in out.beams.iter_mut().filter(|b| b.hit) {
            let noisy = beam.range + rng.gen_range(-spec.range_noise..=spec.range_noise);
            beam.range = noisy.clamp(f64::MIN_POSITIVE, spec.max_range);
        }
    }
    Ok(out)
}

/// Min-distance barrier over the scan's hit points.
pub fn scan_barrier(scan: &Scan, d_obs: f64) -> Result<BarrierEval> {
    match min_distance_barrier(&scan.origin, &scan.repulsors(), d_obs) {
        Err(Error::EmptyScene) => Err(Error::NoObstacleInView),
        other => other,
    }
}

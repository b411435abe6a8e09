//! Artificial potential fields.
//!
//! The attractive potential is the quadratic bowl `½·K_att·‖x − goal‖²`. Two
//! repulsive fields are provided: the Khatib potential, which is zero beyond
//! the region of influence `ρ₀` and blows up as the distance margin `ρ` goes
//! to zero, and a Gaussian force field that is applied per scan point.
//!
//! Repulsion from several sources is superposed (summed).

use serde::{Deserialize, Serialize};

use crate::config::ControllerConfig;
use crate::error::{Error, Result};
use crate::geometry::{Scene, Vector};

/// A repelling point with the distance from it to the surface it stands for.
///
/// For a scene obstacle this is the closest point of the obstacle core and the
/// radius (or half thickness); for a scan hit it is the hit point itself with
/// a zero offset.
#[derive(Debug, Clone, PartialEq)]
pub struct Repulsor {
    pub point: Vector,
    pub offset: f64,
}

impl Scene {
    /// One repulsor per obstacle, anchored at the obstacle point nearest `x`.
    pub fn repulsors(&self, x: &Vector) -> Vec<Repulsor> {
        self.obstacles
            .iter()
            .map(|o| Repulsor {
                point: o.anchor(x),
                offset: o.surface_offset(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttractivePotential {
    pub goal: Vector,
    pub k_att: f64,
}

impl AttractivePotential {
    pub fn new(goal: Vector, k_att: f64) -> Self {
        AttractivePotential { goal, k_att }
    }

    pub fn value(&self, x: &Vector) -> Result<f64> {
        x.check_dim(self.goal.dim())?;
        Ok(0.5 * self.k_att * (x - &self.goal).norm_squared())
    }

    /// `K_att·(x − goal)`; the desired velocity is its negation.
    pub fn gradient(&self, x: &Vector) -> Result<Vector> {
        x.check_dim(self.goal.dim())?;
        Ok((x - &self.goal).scaled(self.k_att))
    }

    /// Constants of the quadratic sandwich `c̲‖x − goal‖² ≤ U ≤ c̄‖x − goal‖²`.
    /// Both equal `K_att / 2` for this potential.
    pub fn quadratic_bounds(&self) -> (f64, f64) {
        (0.5 * self.k_att, 0.5 * self.k_att)
    }
}

/// Khatib repulsive potential as a function of the distance margin `ρ`.
pub fn repulsive_value_khatib(rho: f64, k_rep: f64, rho0: f64) -> Result<f64> {
    if rho <= 0.0 {
        return Err(Error::InsideObstacle { rho });
    }
    if rho > rho0 {
        return Ok(0.0);
    }
    let s = 1.0 / rho - 1.0 / rho0;
    Ok(0.5 * k_rep * s * s)
}

/// Gradient of the Khatib potential with respect to `x`, given the margin
/// `ρ(x) = ‖x − x_obs‖ − D` already evaluated by the caller.
pub fn repulsive_gradient_khatib(x: &Vector, x_obs: &Vector, rho: f64, k_rep: f64, rho0: f64) -> Result<Vector> {
    x_obs.check_dim(x.dim())?;
    if rho <= 0.0 {
        return Err(Error::InsideObstacle { rho });
    }
    if rho > rho0 {
        return Ok(Vector::zeros(x.dim()));
    }
    let dir = (x - x_obs).normalized().ok_or(Error::DegenerateDirection)?;
    let s = 1.0 / rho - 1.0 / rho0;
    Ok(dir.scaled(-k_rep * s / (rho * rho)))
}

/// Gaussian repulsive force `(x − x_o)·K_rep·exp(−ρ²/ρ₀)` with `ρ = ‖x − x_o‖`.
pub fn repulsive_force_gaussian(x: &Vector, x_o: &Vector, k_rep: f64, rho0: f64) -> Vector {
    let d = x - x_o;
    let rho_sq = d.norm_squared();
    d.scaled(k_rep * (-rho_sq / rho0).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepulsiveKind {
    Khatib,
    Gaussian,
}

/// A repulsive field bound to its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RepulsivePotential {
    Khatib { k_rep: f64, rho0: f64, d_obs: f64 },
    /// Force field only; no scalar potential is exposed.
    Gaussian { k_rep: f64, rho0: f64 },
}

impl RepulsivePotential {
    pub fn from_config(kind: RepulsiveKind, cfg: &ControllerConfig) -> Self {
        match kind {
            RepulsiveKind::Khatib => RepulsivePotential::Khatib {
                k_rep: cfg.k_rep,
                rho0: cfg.rho0,
                d_obs: cfg.d_obs,
            },
            RepulsiveKind::Gaussian => RepulsivePotential::Gaussian {
                k_rep: cfg.k_rep,
                rho0: cfg.rho0,
            },
        }
    }

    /// Summed Khatib potential and its gradient over `repulsors`.
    /// Returns `None` for the Gaussian field.
    pub fn potential(&self, x: &Vector, repulsors: &[Repulsor]) -> Result<Option<(f64, Vector)>> {
        let RepulsivePotential::Khatib { k_rep, rho0, d_obs } = *self else {
            return Ok(None);
        };
        let mut value = 0.0;
        let mut gradient = Vector::zeros(x.dim());
        for r in repulsors {
            let rho = x.distance(&r.point) - r.offset - d_obs;
            value += repulsive_value_khatib(rho, k_rep, rho0)?;
            gradient += &repulsive_gradient_khatib(x, &r.point, rho, k_rep, rho0)?;
        }
        Ok(Some((value, gradient)))
    }

    /// Summed repulsive force (the negated potential gradient for Khatib).
    pub fn force(&self, x: &Vector, repulsors: &[Repulsor]) -> Result<Vector> {
        match *self {
            RepulsivePotential::Khatib { .. } => {
                let (_, gradient) = self.potential(x, repulsors)?.expect("khatib has a potential");
                Ok(-gradient)
            }
            RepulsivePotential::Gaussian { k_rep, rho0 } => {
                let mut force = Vector::zeros(x.dim());
                for r in repulsors {
                    force += &repulsive_force_gaussian(x, &r.point, k_rep, rho0);
                }
                Ok(force)
            }
        }
    }
}

/// Output of the potential-field controller before and after repulsion.
#[derive(Debug, Clone, PartialEq)]
pub struct ApfCommand {
    /// `−∇U_att`, unsaturated.
    pub attractive: Vector,
    /// Full field `−∇U_att − Σ∇U_rep`, saturated.
    pub velocity: Vector,
    /// Whether any repulsion was active.
    pub repelled: bool,
}

/// Potential-field velocity for an arbitrary set of repulsors.
pub fn apf_command(
    x: &Vector,
    goal: &Vector,
    repulsors: &[Repulsor],
    field: RepulsivePotential,
    cfg: &ControllerConfig,
) -> Result<ApfCommand> {
    let attractive = -AttractivePotential::new(goal.clone(), cfg.k_att).gradient(x)?;
    let repulsion = field.force(x, repulsors)?;
    let velocity = (&attractive + &repulsion).saturated(cfg.v_max);
    Ok(ApfCommand {
        attractive,
        velocity,
        repelled: !repulsion.is_zero(),
    })
}

/// Classical Khatib potential-field controller over the scene geometry.
pub fn apf_velocity(x: &Vector, scene: &Scene, cfg: &ControllerConfig) -> Result<Vector> {
    x.check_dim(scene.dim())?;
    let field = RepulsivePotential::from_config(RepulsiveKind::Khatib, cfg);
    Ok(apf_command(x, &scene.goal, &scene.repulsors(x), field, cfg)?.velocity)
}

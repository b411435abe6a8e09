//! Control barrier functions and the min-norm safety filter.
//!
//! Every filter here solves a quadratic program with a single affine
//! constraint,
//!
//! ```text
//!   minimize ‖u − u_des‖²   subject to   L_f h + L_g h·u ≥ −α(h),
//! ```
//!
//! whose solution is the projection of `u_des` onto a halfspace. With the
//! constraint slack `Ψ = L_f h + L_g h·u_des + α(h)`, the nominal input is
//! returned untouched when `Ψ ≥ 0` and otherwise moved along `L_g hᵀ` until
//! the constraint is active.

use serde::{Deserialize, Serialize};

use crate::apf::{AttractivePotential, RepulsiveKind, RepulsivePotential, Repulsor};
use crate::config::ControllerConfig;
use crate::error::{Error, Result};
use crate::geometry::{Scene, Vector};

/// Barrier value and gradient at a state.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierEval {
    pub h: f64,
    pub grad: Vector,
}

impl BarrierEval {
    pub fn is_safe(&self) -> bool {
        self.h >= 0.0
    }
}

/// Extended class-K function. Only the linear form is implemented.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum ClassK {
    Linear { gain: f64 },
}

impl ClassK {
    pub fn linear(gain: f64) -> Self {
        ClassK::Linear { gain }
    }

    pub fn eval(&self, h: f64) -> f64 {
        match *self {
            ClassK::Linear { gain } => gain * h,
        }
    }
}

/// Result of a safety filter.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtered {
    pub command: Vector,
    pub intervened: bool,
}

/// Min-distance barrier `h = min_i ‖x − p_i‖ − offset_i − d_obs` over a set
/// of repulsors, with the gradient of the closest one (lowest index on ties).
pub fn min_distance_barrier(x: &Vector, repulsors: &[Repulsor], d_obs: f64) -> Result<BarrierEval> {
    let mut best: Option<(f64, &Repulsor)> = None;
    for r in repulsors {
        r.point.check_dim(x.dim())?;
        let h = x.distance(&r.point) - r.offset - d_obs;
        if best.map_or(true, |(bh, _)| h < bh) {
            best = Some((h, r));
        }
    }
    let (h, closest) = best.ok_or(Error::EmptyScene)?;
    let grad = (x - &closest.point).normalized().ok_or(Error::DegenerateDirection)?;
    Ok(BarrierEval { h, grad })
}

/// Distance barrier over the scene obstacles: signed surface distance of the
/// closest obstacle minus the extra margin `d_obs`.
pub fn distance_barrier(x: &Vector, scene: &Scene, d_obs: f64) -> Result<BarrierEval> {
    x.check_dim(scene.dim())?;
    min_distance_barrier(x, &scene.repulsors(x), d_obs)
}

/// Barrier `h = 1/(1 + U) − δ` built from a repulsive potential value `U`
/// and its gradient.
pub fn barrier_from_apf(u_rep: f64, u_rep_gradient: &Vector, delta: f64) -> Result<BarrierEval> {
    if !(u_rep >= 0.0) {
        return Err(Error::NegativePotential(u_rep));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta", format!("must lie in (0, 1), got {delta}")));
    }
    let denom = 1.0 + u_rep;
    Ok(BarrierEval {
        h: 1.0 / denom - delta,
        grad: u_rep_gradient.scaled(-1.0 / (denom * denom)),
    })
}

/// Min-norm filter for the single integrator `ẋ = v`.
pub fn filter_single_integrator(v_des: &Vector, barrier: &BarrierEval, alpha: ClassK) -> Result<Filtered> {
    v_des.check_dim(barrier.grad.dim())?;
    let gg = barrier.grad.norm_squared();
    if gg == 0.0 {
        return Err(Error::DegenerateDirection);
    }
    let psi = barrier.grad.dot(v_des) + alpha.eval(barrier.h);
    if psi >= 0.0 {
        return Ok(Filtered {
            command: v_des.clone(),
            intervened: false,
        });
    }
    Ok(Filtered {
        command: v_des - barrier.grad.scaled(psi / gg),
        intervened: true,
    })
}

/// Control-affine plant `ẋ = f(x) + g(x)·u`.
pub trait AffinePlant {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn drift(&self, x: &Vector) -> Vector;
    /// Columns of `g(x)`, one per input, each of length `state_dim`.
    fn actuation(&self, x: &Vector) -> Vec<Vector>;
}

/// `f = 0`, `g = I`.
#[derive(Debug, Clone, Copy)]
pub struct SingleIntegratorPlant {
    pub dim: usize,
}

impl AffinePlant for SingleIntegratorPlant {
    fn state_dim(&self) -> usize {
        self.dim
    }

    fn input_dim(&self) -> usize {
        self.dim
    }

    fn drift(&self, _x: &Vector) -> Vector {
        Vector::zeros(self.dim)
    }

    fn actuation(&self, _x: &Vector) -> Vec<Vector> {
        (0..self.dim)
            .map(|j| {
                let mut e = vec![0.0; self.dim];
                e[j] = 1.0;
                Vector::from(e)
            })
            .collect()
    }
}

/// Plant defined by a pair of closures.
pub struct FnPlant<F, G> {
    pub state_dim: usize,
    pub input_dim: usize,
    pub drift: F,
    pub actuation: G,
}

impl<F, G> AffinePlant for FnPlant<F, G>
where
    F: Fn(&Vector) -> Vector,
    G: Fn(&Vector) -> Vec<Vector>,
{
    fn state_dim(&self) -> usize {
        self.state_dim
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn drift(&self, x: &Vector) -> Vector {
        (self.drift)(x)
    }

    fn actuation(&self, x: &Vector) -> Vec<Vector> {
        (self.actuation)(x)
    }
}

/// Lie derivatives `(L_f h, L_g h)` of a barrier along a plant.
pub fn lie_derivatives(plant: &dyn AffinePlant, x: &Vector, barrier: &BarrierEval) -> Result<(f64, Vector)> {
    let n = plant.state_dim();
    x.check_dim(n)?;
    barrier.grad.check_dim(n)?;
    let f = plant.drift(x);
    f.check_dim(n)?;
    let columns = plant.actuation(x);
    if columns.len() != plant.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: plant.input_dim(),
            actual: columns.len(),
        });
    }
    let mut lg = Vec::with_capacity(columns.len());
    for g in &columns {
        g.check_dim(n)?;
        lg.push(barrier.grad.dot(g));
    }
    Ok((barrier.grad.dot(&f), Vector::from(lg)))
}

/// Min-norm filter for a control-affine plant.
pub fn filter_affine(
    u_des: &Vector,
    plant: &dyn AffinePlant,
    x: &Vector,
    barrier: &BarrierEval,
    alpha: ClassK,
) -> Result<Filtered> {
    u_des.check_dim(plant.input_dim())?;
    let (lf, lg) = lie_derivatives(plant, x, barrier)?;
    let psi = lf + lg.dot(u_des) + alpha.eval(barrier.h);
    if psi >= 0.0 {
        return Ok(Filtered {
            command: u_des.clone(),
            intervened: false,
        });
    }
    let lg_sq = lg.norm_squared();
    if lg_sq == 0.0 {
        return Err(Error::InfeasibleConstraint {
            slack: lf + alpha.eval(barrier.h),
        });
    }
    Ok(Filtered {
        command: u_des - lg.scaled(psi / lg_sq),
        intervened: true,
    })
}

/// One evaluation of a barrier-filtered velocity controller.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyCommand {
    pub v_des: Vector,
    pub v_star: Vector,
    pub h: f64,
    pub intervened: bool,
}

/// Filters `v_des` through `barrier`, then saturates to `v_max`.
///
/// A zero barrier gradient with `α(h) ≥ 0` leaves the constraint `0 ≥ −α(h)`
/// satisfied, so the nominal command passes through.
pub fn safety_command(v_des: Vector, barrier: &BarrierEval, cfg: &ControllerConfig) -> Result<SafetyCommand> {
    let alpha = ClassK::linear(cfg.alpha);
    let filtered = if barrier.grad.is_zero() && alpha.eval(barrier.h) >= 0.0 {
        Filtered {
            command: v_des.clone(),
            intervened: false,
        }
    } else {
        filter_single_integrator(&v_des, barrier, alpha)?
    };
    Ok(SafetyCommand {
        v_star: filtered.command.saturated(cfg.v_max),
        v_des,
        h: barrier.h,
        intervened: filtered.intervened,
    })
}

/// Barrier built from the summed Khatib potential of `repulsors`.
///
/// Whenever `h ≤ 0`, some repulsor must lie within `ρ₀ + d_obs` of `x`
/// (its surface offset excluded); otherwise `δ` is too large for the zero
/// level set to sit inside the region of influence.
pub fn apf_barrier(x: &Vector, repulsors: &[Repulsor], cfg: &ControllerConfig) -> Result<BarrierEval> {
    let field = RepulsivePotential::from_config(RepulsiveKind::Khatib, cfg);
    let (u, grad_u) = field.potential(x, repulsors)?.expect("khatib has a potential");
    let barrier = barrier_from_apf(u, &grad_u, cfg.delta)?;
    if barrier.h <= 0.0 {
        let nearest = repulsors
            .iter()
            .map(|r| x.distance(&r.point) - r.offset)
            .fold(f64::INFINITY, f64::min);
        if nearest > cfg.rho0 + cfg.d_obs {
            return Err(Error::DeltaTooLarge);
        }
    }
    Ok(barrier)
}

/// Potential-derived barrier controller: the attractive field is the desired
/// velocity and the repulsive potential shapes the barrier.
pub fn apf_cbf_command(x: &Vector, goal: &Vector, repulsors: &[Repulsor], cfg: &ControllerConfig) -> Result<SafetyCommand> {
    let v_des = -AttractivePotential::new(goal.clone(), cfg.k_att).gradient(x)?;
    let barrier = apf_barrier(x, repulsors, cfg)?;
    safety_command(v_des, &barrier, cfg)
}

pub fn apf_cbf_velocity(x: &Vector, scene: &Scene, cfg: &ControllerConfig) -> Result<Vector> {
    x.check_dim(scene.dim())?;
    Ok(apf_cbf_command(x, &scene.goal, &scene.repulsors(x), cfg)?.v_star)
}

/// Distance-barrier controller with the proportional desired velocity
/// `−K_att·(x − goal)`.
pub fn cbf_command(x: &Vector, goal: &Vector, barrier: &BarrierEval, cfg: &ControllerConfig) -> Result<SafetyCommand> {
    let v_des = -AttractivePotential::new(goal.clone(), cfg.k_att).gradient(x)?;
    safety_command(v_des, barrier, cfg)
}

//! Plants that close the loop around velocity commands.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vector;

pub const DEFAULT_VELOCITY_CAP: f64 = 5.0;
pub const DEFAULT_ACCEL_LIMIT: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub position: Vector,
    /// For the single integrator this is the last applied command.
    pub velocity: Vector,
}

impl PlantState {
    pub fn at_rest(position: Vector) -> Self {
        let velocity = Vector::zeros(position.dim());
        PlantState { position, velocity }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantKind {
    /// `ẋ = v`, commands applied exactly.
    SingleIntegrator,
    /// `ẋ = v, v̇ = u` with `u = −K·(v − v_cmd)`; `K` comes from the
    /// controller's `tracking_gain`.
    DoubleIntegrator {
        #[serde(default = "default_accel_limit")]
        a_max: f64,
    },
    /// First-order velocity lag standing in for a quadrotor velocity loop.
    VelocityLag {
        time_constant: f64,
        #[serde(default = "default_accel_limit")]
        a_max: f64,
    },
}

fn default_accel_limit() -> f64 {
    DEFAULT_ACCEL_LIMIT
}

fn default_velocity_cap() -> f64 {
    DEFAULT_VELOCITY_CAP
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantModel {
    pub kind: PlantKind,
    /// Hard cap on `‖velocity‖` applied after every step (m/s).
    #[serde(default = "default_velocity_cap")]
    pub velocity_cap: f64,
}

impl PlantModel {
    pub fn single_integrator() -> Self {
        PlantModel {
            kind: PlantKind::SingleIntegrator,
            velocity_cap: DEFAULT_VELOCITY_CAP,
        }
    }

    pub fn double_integrator() -> Self {
        PlantModel {
            kind: PlantKind::DoubleIntegrator { a_max: DEFAULT_ACCEL_LIMIT },
            velocity_cap: DEFAULT_VELOCITY_CAP,
        }
    }

    pub fn velocity_lag(time_constant: f64) -> Self {
        PlantModel {
            kind: PlantKind::VelocityLag {
                time_constant,
                a_max: DEFAULT_ACCEL_LIMIT,
            },
            velocity_cap: DEFAULT_VELOCITY_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be finite and > 0, got {v}")))
            }
        };
        positive("velocity_cap", self.velocity_cap)?;
        match self.kind {
            PlantKind::SingleIntegrator => Ok(()),
            PlantKind::DoubleIntegrator { a_max } => positive("a_max", a_max),
            PlantKind::VelocityLag { time_constant, a_max } => {
                positive("time_constant", time_constant)?;
                positive("a_max", a_max)
            }
        }
    }
}

/// Advances the plant by `dt` under a constant velocity command.
///
/// Second-order models use semi-implicit Euler: the velocity is updated
/// first and the position integrates the new velocity.
pub fn step(
    state: &PlantState,
    v_command: &Vector,
    model: &PlantModel,
    tracking_gain: f64,
    dt: f64,
) -> Result<PlantState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", format!("must be finite and > 0, got {dt}")));
    }
    let n = state.position.dim();
    state.velocity.check_dim(n)?;
    v_command.check_dim(n)?;

    let velocity = match model.kind {
        PlantKind::SingleIntegrator => v_command.clone(),
        PlantKind::DoubleIntegrator { a_max } => {
            let u = (&state.velocity - v_command).scaled(-tracking_gain).saturated(a_max);
            &state.velocity + u.scaled(dt)
        }
        PlantKind::VelocityLag { time_constant, a_max } => {
            let dv = (v_command - &state.velocity).scaled(dt / time_constant);
            &state.velocity + dv.saturated(a_max * dt)
        }
    }
    .saturated(model.velocity_cap);

    Ok(PlantState {
        position: &state.position + velocity.scaled(dt),
        velocity,
    })
}

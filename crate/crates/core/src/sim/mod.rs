//! Deterministic fixed-step scenario runner.
//!
//! Each tick observes the state (optionally through the simulated LIDAR),
//! evaluates the controller, logs one row, checks the terminal conditions and
//! then advances the plant. Identical specs produce identical logs.

mod csv_log;
mod metrics;
mod scenarios;

pub use csv_log::{csv_string, read_csv, write_csv, CSV_HEADER};
pub use metrics::{compute_metrics, oscillation_index, reversal_count, Metrics};
pub use scenarios::{bundled, bundled_scenarios, canonical_scenarios, example1, BundledScenario};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::apf::{apf_command, RepulsiveKind, RepulsivePotential, Repulsor};
use crate::cbf::{apf_cbf_command, cbf_command, distance_barrier, min_distance_barrier, SafetyCommand};
use crate::config::ControllerConfig;
use crate::dynamics::{step, PlantModel, PlantState};
use crate::error::{Error, Result};
use crate::geometry::{Scene, Vector};
use crate::sensing::{scan, scan_barrier, LidarSpec, Scan};

/// `‖v_star‖` below which the vehicle counts as stopped (m/s).
pub const STUCK_SPEED: f64 = 0.01;
/// How long the vehicle must stay stopped short of the goal to be stuck (s).
pub const STUCK_DURATION: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControllerKind {
    Apf(RepulsiveKind),
    Cbf,
    ApfCbf,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 4] = [
        ControllerKind::Apf(RepulsiveKind::Khatib),
        ControllerKind::Apf(RepulsiveKind::Gaussian),
        ControllerKind::Cbf,
        ControllerKind::ApfCbf,
    ];

    pub fn is_apf(&self) -> bool {
        matches!(self, ControllerKind::Apf(_))
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControllerKind::Apf(RepulsiveKind::Khatib) => "apf",
            ControllerKind::Apf(RepulsiveKind::Gaussian) => "apf-gaussian",
            ControllerKind::Cbf => "cbf",
            ControllerKind::ApfCbf => "apf-cbf",
        })
    }
}

impl FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "apf" => Ok(ControllerKind::Apf(RepulsiveKind::Khatib)),
            "apf-gaussian" => Ok(ControllerKind::Apf(RepulsiveKind::Gaussian)),
            "cbf" => Ok(ControllerKind::Cbf),
            "apf-cbf" => Ok(ControllerKind::ApfCbf),
            other => Err(Error::invalid(
                "controller",
                format!("unknown controller {other:?} (expected apf, apf-gaussian, cbf or apf-cbf)"),
            )),
        }
    }
}

impl Serialize for ControllerKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ControllerKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Everything needed to reproduce one closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub scene: Scene,
    pub start: Vector,
    /// Fixed vehicle yaw used to orient the LIDAR. Defaults to the direction
    /// from the start to the goal.
    pub heading: Option<f64>,
    pub plant: PlantModel,
    pub controller: ControllerKind,
    pub cfg: ControllerConfig,
    /// Scan-based barrier and repulsion when present, scene geometry otherwise.
    pub lidar: Option<LidarSpec>,
    pub dt: f64,
    pub horizon: f64,
    pub goal_tolerance: f64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.start.check_dim(self.scene.dim())?;
        self.cfg.validate()?;
        self.plant.validate()?;
        if let Some(lidar) = &self.lidar {
            lidar.validate()?;
            if self.scene.dim() != 2 {
                return Err(Error::invalid("lidar", "the simulated LIDAR is planar; scene must be 2-D"));
            }
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", format!("must be finite and > 0, got {}", self.dt)));
        }
        if !(self.horizon > self.dt && self.horizon.is_finite()) {
            return Err(Error::invalid("horizon", format!("must be finite and > dt, got {}", self.horizon)));
        }
        if !(self.goal_tolerance > 0.0) {
            return Err(Error::invalid("goal_tolerance", "must be > 0"));
        }
        let clearance = self.scene.clearance(&self.start);
        if !(clearance > self.cfg.d_obs) {
            return Err(Error::invalid(
                "start",
                format!("must be strictly safe: clearance {clearance} <= d_obs {}", self.cfg.d_obs),
            ));
        }
        Ok(())
    }

    pub fn heading(&self) -> f64 {
        self.heading.unwrap_or_else(|| {
            let d = &self.scene.goal - &self.start;
            d.y().atan2(d.x())
        })
    }

    pub fn with_controller(&self, controller: ControllerKind) -> Self {
        ScenarioSpec {
            controller,
            ..self.clone()
        }
    }

    pub fn with_param(&self, key: &str, value: f64) -> Result<Self> {
        let mut out = self.clone();
        out.cfg.set(key, value)?;
        Ok(out)
    }

    /// Mirror image about the start–goal axis.
    pub fn reflected(&self) -> Self {
        let axis = (&self.scene.goal - &self.start).normalized().expect("start and goal differ");
        let heading = self.heading.map(|h| {
            let theta = axis.y().atan2(axis.x());
            2.0 * theta - h
        });
        ScenarioSpec {
            scene: self.scene.reflected(&self.start, &axis),
            heading,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub position: Vector,
    pub velocity: Vector,
    pub v_des: Vector,
    pub v_star: Vector,
    pub h: f64,
    /// Minimum signed surface distance over all obstacles (m).
    pub clearance: f64,
    pub intervened: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Terminal {
    ReachedGoal { t: f64 },
    Stuck { t: f64 },
    HorizonExpired,
    Collision { t: f64 },
    /// The controller could not produce a command (e.g. the potential field
    /// is undefined inside the minimum-distance shell).
    Fault { t: f64, reason: String },
}

impl Terminal {
    pub fn is_collision(&self) -> bool {
        matches!(self, Terminal::Collision { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Terminal::ReachedGoal { .. } => "reached_goal",
            Terminal::Stuck { .. } => "stuck",
            Terminal::HorizonExpired => "horizon_expired",
            Terminal::Collision { .. } => "collision",
            Terminal::Fault { .. } => "fault",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub rows: Vec<LogRow>,
    pub terminal: Terminal,
}

impl TrajectoryLog {
    pub fn min_h(&self) -> f64 {
        self.rows.iter().map(|r| r.h).fold(f64::INFINITY, f64::min)
    }

    pub fn min_clearance(&self) -> f64 {
        self.rows.iter().map(|r| r.clearance).fold(f64::INFINITY, f64::min)
    }

    pub fn interventions(&self) -> usize {
        self.rows.iter().filter(|r| r.intervened).count()
    }

    pub fn final_position(&self) -> Option<&Vector> {
        self.rows.last().map(|r| &r.position)
    }
}

/// What the controller sees of the world on one tick.
pub enum Observation<'a> {
    Geometry(&'a Scene),
    Scan(&'a Scan),
}

impl Observation<'_> {
    fn repulsors(&self, x: &Vector) -> Vec<Repulsor> {
        match self {
            Observation::Geometry(scene) => scene.repulsors(x),
            Observation::Scan(scan) => scan.repulsors(),
        }
    }
}

/// Evaluates one controller at `x`. Returns the desired and filtered
/// velocities, the barrier value used for logging and whether the safety
/// mechanism altered the desired velocity.
///
/// With no obstacle in view the distance barrier is undefined; its value is
/// reported as `+inf` and the desired velocity passes through.
pub fn evaluate_controller(
    controller: ControllerKind,
    x: &Vector,
    goal: &Vector,
    observation: &Observation<'_>,
    cfg: &ControllerConfig,
) -> Result<SafetyCommand> {
    let distance = |x: &Vector| match observation {
        Observation::Geometry(scene) => distance_barrier(x, scene, cfg.d_obs),
        Observation::Scan(scan) => scan_barrier(scan, cfg.d_obs),
    };
    match controller {
        ControllerKind::Cbf => match distance(x) {
            Ok(barrier) => cbf_command(x, goal, &barrier, cfg),
            Err(Error::EmptyScene | Error::NoObstacleInView) => {
                let v_des = (goal - x).scaled(cfg.k_att);
                Ok(SafetyCommand {
                    v_star: v_des.saturated(cfg.v_max),
                    v_des,
                    h: f64::INFINITY,
                    intervened: false,
                })
            }
            Err(e) => Err(e),
        },
        ControllerKind::ApfCbf => apf_cbf_command(x, goal, &observation.repulsors(x), cfg),
        ControllerKind::Apf(kind) => {
            let repulsors = observation.repulsors(x);
            let cmd = apf_command(x, goal, &repulsors, RepulsivePotential::from_config(kind, cfg), cfg)?;
            let h = match min_distance_barrier(x, &repulsors, cfg.d_obs) {
                Ok(b) => b.h,
                Err(Error::EmptyScene) => f64::INFINITY,
                // sitting exactly on a repulsor: its margin is still well defined
                Err(Error::DegenerateDirection) => repulsors
                    .iter()
                    .map(|r| x.distance(&r.point) - r.offset - cfg.d_obs)
                    .fold(f64::INFINITY, f64::min),
                Err(e) => return Err(e),
            };
            Ok(SafetyCommand {
                v_des: cmd.attractive,
                v_star: cmd.velocity,
                h,
                intervened: cmd.repelled,
            })
        }
    }
}

/// Runs a scenario to its first terminal condition. Never panics on
/// controller errors; those end the run as a collision or fault.
pub fn run(spec: &ScenarioSpec) -> Result<TrajectoryLog> {
    spec.validate()?;
    let n = spec.scene.dim();
    let heading = spec.heading();
    let ticks = (spec.horizon / spec.dt).round() as u64;
    let mut state = PlantState::at_rest(spec.start.clone());
    let mut rows = Vec::with_capacity(ticks as usize + 1);
    let mut stopped_for = 0.0;

    for k in 0..=ticks {
        let t = k as f64 * spec.dt;
        let x = &state.position;
        let clearance = spec.scene.clearance(x);

        let halted_row = |state: &PlantState| LogRow {
            t,
            position: state.position.clone(),
            velocity: state.velocity.clone(),
            v_des: Vector::zeros(n),
            v_star: Vector::zeros(n),
            h: clearance - spec.cfg.d_obs,
            clearance,
            intervened: false,
        };

        if clearance < 0.0 {
            rows.push(halted_row(&state));
            return Ok(TrajectoryLog {
                rows,
                terminal: Terminal::Collision { t },
            });
        }

        let command = match &spec.lidar {
            Some(lidar) => scan(x, heading, &spec.scene, lidar).and_then(|s| {
                evaluate_controller(spec.controller, x, &spec.scene.goal, &Observation::Scan(&s), &spec.cfg)
            }),
            None => evaluate_controller(
                spec.controller,
                x,
                &spec.scene.goal,
                &Observation::Geometry(&spec.scene),
                &spec.cfg,
            ),
        };
        let command = match command {
            Ok(c) => c,
            Err(e) => {
                rows.push(halted_row(&state));
                return Ok(TrajectoryLog {
                    rows,
                    terminal: Terminal::Fault { t, reason: e.to_string() },
                });
            }
        };

        rows.push(LogRow {
            t,
            position: state.position.clone(),
            velocity: state.velocity.clone(),
            v_des: command.v_des,
            v_star: command.v_star.clone(),
            h: command.h,
            clearance,
            intervened: command.intervened,
        });

        if state.position.distance(&spec.scene.goal) <= spec.goal_tolerance {
            return Ok(TrajectoryLog {
                rows,
                terminal: Terminal::ReachedGoal { t },
            });
        }

        if command.v_star.norm() < STUCK_SPEED {
            stopped_for += spec.dt;
        } else {
            stopped_for = 0.0;
        }
        if stopped_for >= STUCK_DURATION - 1e-9 {
            return Ok(TrajectoryLog {
                rows,
                terminal: Terminal::Stuck { t },
            });
        }

        if k == ticks {
            break;
        }
        state = step(&state, &command.v_star, &spec.plant, spec.cfg.tracking_gain, spec.dt)?;
    }

    Ok(TrajectoryLog {
        rows,
        terminal: Terminal::HorizonExpired,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Bounds, Obstacle};

    fn spec(obstacles: Vec<Obstacle>, controller: ControllerKind) -> ScenarioSpec {
        ScenarioSpec {
            name: "unit".into(),
            scene: Scene::new([3.0, 5.0], obstacles, Bounds::new([-1.0, -1.0], [5.0, 6.0])).unwrap(),
            start: Vector::xy(0.0, 0.0),
            heading: None,
            plant: PlantModel::single_integrator(),
            controller,
            cfg: ControllerConfig::default(),
            lidar: None,
            dt: 0.01,
            horizon: 30.0,
            goal_tolerance: 0.05,
        }
    }

    #[test]
    fn empty_scene_reaches_goal_without_interventions() {
        for controller in ControllerKind::ALL {
            let log = run(&spec(vec![], controller)).unwrap();
            assert!(matches!(log.terminal, Terminal::ReachedGoal { .. }), "{controller}: {:?}", log.terminal);
            assert_eq!(log.interventions(), 0);
        }
    }

    #[test]
    fn rows_are_evenly_spaced() {
        let log = run(&spec(vec![Obstacle::circle([1.0, 2.0], 0.5)], ControllerKind::Cbf)).unwrap();
        for (k, row) in log.rows.iter().enumerate() {
            assert_eq!(row.t, k as f64 * 0.01);
        }
    }

    #[test]
    fn controller_names_roundtrip() {
        for c in ControllerKind::ALL {
            assert_eq!(c.to_string().parse::<ControllerKind>().unwrap(), c);
        }
        assert!("pid".parse::<ControllerKind>().is_err());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = spec(vec![Obstacle::circle([0.0, 0.0], 0.5)], ControllerKind::Cbf);
        assert!(run(&s).is_err());
        s.scene.obstacles.clear();
        s.horizon = 0.001;
        assert!(run(&s).is_err());
    }

    #[test]
    fn horizon_expiry() {
        let mut s = spec(vec![], ControllerKind::Cbf);
        s.horizon = 0.5;
        let log = run(&s).unwrap();
        assert_eq!(log.terminal, Terminal::HorizonExpired);
        assert_eq!(log.rows.len(), 51);
    }

    #[test]
    fn collision_is_logged_with_negative_clearance() {
        // velocity-lag plant overshoots into a disc placed right in the way
        let mut s = spec(vec![Obstacle::circle([1.5, 2.5], 0.4)], ControllerKind::Apf(RepulsiveKind::Gaussian));
        s.cfg.k_rep = 1e-6;
        s.plant = PlantModel::velocity_lag(0.2);
        let log = run(&s).unwrap();
        assert!(log.terminal.is_collision());
        assert!(log.rows.last().unwrap().clearance < 0.0);
        assert!(log.rows[..log.rows.len() - 1].iter().all(|r| r.clearance >= 0.0));
    }
}

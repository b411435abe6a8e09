//! Scenario files.
//!
//! A scenario is a TOML document with top-level `name`, `dt`, `horizon` and
//! `goal_tolerance` keys and the tables `[scene]`, `[start]`, `[plant]`,
//! `[controller]` and the optional `[lidar]`:
//!
//! ```toml
//! name = "example1"
//! dt = 0.01
//! horizon = 30.0
//!
//! [scene]
//! goal = [3.0, 5.0]
//! bounds = { min = [-1.0, -1.0], max = [5.0, 6.5] }
//! obstacles = [
//!     { kind = "circle", center = [1.0, 2.0], radius = 0.5 },
//!     { kind = "segment", a = [4.0, 0.0], b = [4.0, 2.0], thickness = 0.1 },
//! ]
//!
//! [start]
//! position = [0.0, 0.0]
//!
//! [plant]
//! kind = "single_integrator"   # or double_integrator, velocity_lag
//!
//! [controller]
//! kind = "apf"                 # apf, apf-gaussian, cbf, apf-cbf
//! rho0 = 1.0
//! ```
//!
//! Every key of [`ControllerConfig`] may appear in `[controller]`; missing
//! keys take their defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::ControllerConfig;
use crate::dynamics::{PlantKind, PlantModel, DEFAULT_ACCEL_LIMIT, DEFAULT_VELOCITY_CAP};
use crate::error::Error;
use crate::geometry::{Scene, Vector};
use crate::sensing::LidarSpec;
use crate::sim::{ControllerKind, ScenarioSpec};

pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_GOAL_TOLERANCE: f64 = 0.05;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Syntax(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(#[from] Error),
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_goal_tolerance() -> f64 {
    DEFAULT_GOAL_TOLERANCE
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    #[serde(default = "default_dt")]
    dt: f64,
    horizon: f64,
    #[serde(default = "default_goal_tolerance")]
    goal_tolerance: f64,
    scene: Scene,
    start: StartTable,
    plant: PlantTable,
    controller: ControllerTable,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lidar: Option<LidarSpec>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StartTable {
    position: Vector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    heading: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum PlantName {
    SingleIntegrator,
    DoubleIntegrator,
    VelocityLag,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlantTable {
    kind: PlantName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    time_constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    velocity_cap: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ControllerTable {
    kind: ControllerKind,
    #[serde(flatten)]
    cfg: ControllerConfig,
}

// `flatten` would swallow unknown keys, so the table is split by hand.
impl<'de> Deserialize<'de> for ControllerTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let mut table = toml::Table::deserialize(d)?;
        let kind = table.remove("kind").ok_or_else(|| D::Error::missing_field("kind"))?;
        Ok(ControllerTable {
            kind: kind.try_into().map_err(D::Error::custom)?,
            cfg: toml::Value::Table(table).try_into().map_err(D::Error::custom)?,
        })
    }
}

impl PlantTable {
    fn into_model(self) -> Result<PlantModel, Error> {
        let a_max = self.a_max.unwrap_or(DEFAULT_ACCEL_LIMIT);
        let kind = match self.kind {
            PlantName::SingleIntegrator => PlantKind::SingleIntegrator,
            PlantName::DoubleIntegrator => PlantKind::DoubleIntegrator { a_max },
            PlantName::VelocityLag => PlantKind::VelocityLag {
                time_constant: self
                    .time_constant
                    .ok_or_else(|| Error::invalid("plant.time_constant", "required for velocity_lag"))?,
                a_max,
            },
        };
        Ok(PlantModel {
            kind,
            velocity_cap: self.velocity_cap.unwrap_or(DEFAULT_VELOCITY_CAP),
        })
    }

    fn from_model(model: &PlantModel) -> Self {
        let (kind, time_constant, a_max) = match model.kind {
            PlantKind::SingleIntegrator => (PlantName::SingleIntegrator, None, None),
            PlantKind::DoubleIntegrator { a_max } => (PlantName::DoubleIntegrator, None, Some(a_max)),
            PlantKind::VelocityLag { time_constant, a_max } => (PlantName::VelocityLag, Some(time_constant), Some(a_max)),
        };
        PlantTable {
            kind,
            time_constant,
            a_max,
            velocity_cap: Some(model.velocity_cap),
        }
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioSpec, LoadError> {
    let file: ScenarioFile = toml::from_str(text)?;
    let spec = ScenarioSpec {
        name: file.name,
        scene: file.scene,
        start: file.start.position,
        heading: file.start.heading,
        plant: file.plant.into_model()?,
        controller: file.controller.kind,
        cfg: file.controller.cfg,
        lidar: file.lidar,
        dt: file.dt,
        horizon: file.horizon,
        goal_tolerance: file.goal_tolerance,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioSpec, LoadError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

/// Canonical TOML text of a spec. Parsing it yields an equal spec.
pub fn to_toml(spec: &ScenarioSpec) -> String {
    let file = ScenarioFile {
        name: spec.name.clone(),
        description: None,
        dt: spec.dt,
        horizon: spec.horizon,
        goal_tolerance: spec.goal_tolerance,
        scene: spec.scene.clone(),
        start: StartTable {
            position: spec.start.clone(),
            heading: spec.heading,
        },
        plant: PlantTable::from_model(&spec.plant),
        controller: ControllerTable {
            kind: spec.controller,
            cfg: spec.cfg.clone(),
        },
        lidar: spec.lidar.clone(),
    };
    toml::to_string(&file).expect("scenario serializes to TOML")
}

/// SHA-256 of the canonical TOML text, hex encoded.
pub fn content_hash(spec: &ScenarioSpec) -> String {
    hex::encode(Sha256::digest(to_toml(spec).as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
name = "doc"
horizon = 30.0

[scene]
goal = [3.0, 5.0]
bounds = { min = [-1.0, -1.0], max = [5.0, 6.5] }
obstacles = [
    { kind = "circle", center = [1.0, 2.0], radius = 0.5 },
    { kind = "segment", a = [4.0, 0.0], b = [4.0, 2.0], thickness = 0.1 },
]

[start]
position = [0.0, 0.0]

[plant]
kind = "velocity_lag"
time_constant = 0.3

[controller]
kind = "apf"
rho0 = 0.5
"#;

    #[test]
    fn parses_documented_example() {
        let spec = parse_scenario(EXAMPLE).unwrap();
        assert_eq!(spec.dt, DEFAULT_DT);
        assert_eq!(spec.goal_tolerance, DEFAULT_GOAL_TOLERANCE);
        assert_eq!(spec.cfg.rho0, 0.5);
        assert_eq!(spec.cfg.k_att, ControllerConfig::default().k_att);
        assert_eq!(spec.scene.obstacles.len(), 2);
        assert_eq!(spec.plant, PlantModel::velocity_lag(0.3));
        assert!(spec.lidar.is_none());
    }

    #[test]
    fn canonical_text_roundtrips() {
        let spec = parse_scenario(EXAMPLE).unwrap();
        let again = parse_scenario(&to_toml(&spec)).unwrap();
        assert_eq!(spec, again);
        assert_eq!(content_hash(&spec), content_hash(&again));
        let tweaked = spec.with_param("rho0", 0.25).unwrap();
        assert_ne!(content_hash(&spec), content_hash(&tweaked));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let broken = EXAMPLE.replace("rho0 = 0.5", "rho0 = ");
        let msg = parse_scenario(&broken).unwrap_err().to_string();
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let typo = EXAMPLE.replace("rho0 = 0.5", "rh0 = 0.5");
        let msg = parse_scenario(&typo).unwrap_err().to_string();
        assert!(msg.contains("rh0"), "{msg}");
        assert!(parse_scenario(&EXAMPLE.replace("[start]", "[start]\nspeed = 1")).is_err());
    }

    #[test]
    fn validation_errors_name_the_field() {
        let bad = EXAMPLE.replace("rho0 = 0.5", "rho0 = -1.0");
        let msg = parse_scenario(&bad).unwrap_err().to_string();
        assert!(msg.contains("rho0"), "{msg}");
        let lagless = EXAMPLE.replace("time_constant = 0.3\n", "");
        assert!(parse_scenario(&lagless).unwrap_err().to_string().contains("time_constant"));
    }

    #[test]
    fn missing_file_is_an_io_error() {
        assert!(matches!(load_scenario("/nonexistent/scenario.toml"), Err(LoadError::Io { .. })));
    }
}

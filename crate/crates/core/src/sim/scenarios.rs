use super::ScenarioSpec;
use crate::scenario_file::parse_scenario;

#[derive(Debug, Clone, Copy)]
pub struct BundledScenario {
    pub name: &'static str,
    pub file_name: &'static str,
    pub toml: &'static str,
}

impl BundledScenario {
    pub fn spec(&self) -> ScenarioSpec {
        parse_scenario(self.toml).unwrap_or_else(|e| panic!("bundled scenario {} is invalid: {e}", self.file_name))
    }
}

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        &[$(BundledScenario {
            name: $name,
            file_name: concat!($name, ".toml"),
            toml: include_str!(concat!("../../scenarios/", $name, ".toml")),
        }),*]
    };
}

const BUNDLED: &[BundledScenario] = bundled![
    "example1",
    "example1_double_integrator",
    "scenario1_offset_pillars",
    "scenario2_edge_on_path",
    "scenario3_doorway_1m",
    "scenario4_doorway_0p7m",
    "scenario5_wall",
    "teleop_course",
];

pub fn bundled_scenarios() -> &'static [BundledScenario] {
    BUNDLED
}

/// Looks a bundled scenario up by name or file name.
pub fn bundled(name: &str) -> Option<&'static BundledScenario> {
    BUNDLED.iter().find(|b| b.name == name || b.file_name == name)
}

/// The five obstacle courses with a waypoint 5 m ahead, in order: offset
/// pillars, pillar edge on the path, 1.0 m doorway, 0.7 m doorway, wall.
pub fn canonical_scenarios() -> Vec<ScenarioSpec> {
    BUNDLED
        .iter()
        .filter(|b| b.name.starts_with("scenario"))
        .map(BundledScenario::spec)
        .collect()
}

pub fn example1() -> ScenarioSpec {
    bundled("example1").expect("example1 is bundled").spec()
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use safefilter::ControllerKind;

#[derive(Debug, Parser)]
#[command(name = "safefilter", version, about = "Run, sweep and compare potential-field and barrier-function controllers")]
pub struct Cli {
    /// Directory for CSV, SVG and report files.
    #[arg(long, global = true, env = "SAFEFILTER_OUT", default_value = "out")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write `<out>/<name>.csv` and `<out>/<name>.svg`.
    Run {
        /// Scenario file, or the name of a bundled scenario.
        scenario: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run one scenario per parameter value.
    Sweep {
        scenario: String,
        /// Controller parameter to vary.
        param: String,
        #[arg(required = true, num_args = 1.., allow_negative_numbers = true)]
        values: Vec<f64>,
        #[command(flatten)]
        opts: RunOpts,
        /// Worker threads (default: one per core).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run the potential field and the distance barrier on the same scene.
    Compare {
        scenario: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// List or export the bundled scenarios.
    Scenarios {
        #[command(subcommand)]
        action: Option<ScenarioAction>,
    },
    /// Serve a scenario over a websocket for manual driving.
    Teleop {
        #[arg(default_value = "teleop_course")]
        scenario: String,
        /// Listening port (default: $SAFEFILTER_TELEOP_PORT, else 8090).
        #[arg(long)]
        port: Option<u16>,
        #[arg(long, default_value_t = 50.0)]
        tick_hz: f64,
        /// Listen on all interfaces instead of localhost.
        #[arg(long)]
        public: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum ScenarioAction {
    List,
    /// Write a bundled scenario's TOML to `<out>/<file>` (or stdout with `-`).
    Export {
        name: String,
        #[arg(long)]
        stdout: bool,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunOpts {
    /// apf, apf-gaussian, cbf or apf-cbf.
    #[arg(long)]
    pub controller: Option<ControllerKind>,
    /// Controller parameter override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_assignment)]
    pub set: Vec<(String, f64)>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Reserved: every run is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (key, value) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got {s:?}"))?;
    let value: f64 = value.trim().parse().map_err(|_| format!("{value:?} is not a number"))?;
    Ok((key.trim().to_string(), value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignments() {
        assert_eq!(parse_assignment("rho0=0.5"), Ok(("rho0".into(), 0.5)));
        assert_eq!(parse_assignment(" alpha = 2 "), Ok(("alpha".into(), 2.0)));
        assert!(parse_assignment("rho0").is_err());
        assert!(parse_assignment("rho0=big").is_err());
    }

    #[test]
    fn parses_a_sweep() {
        let cli = Cli::try_parse_from([
            "safefilter", "sweep", "example1", "rho0", "1", "0.5", "--controller", "apf", "--set", "k_rep=2",
        ])
        .unwrap();
        let Command::Sweep { param, values, opts, .. } = cli.command else {
            panic!()
        };
        assert_eq!(param, "rho0");
        assert_eq!(values, [1.0, 0.5]);
        assert_eq!(opts.set, [("k_rep".to_string(), 2.0)]);
        assert!(Cli::try_parse_from(["safefilter", "sweep", "example1", "rho0"]).is_err());
    }

    #[test]
    fn verify_clap_definition() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}

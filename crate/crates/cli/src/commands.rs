use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use rayon::prelude::*;

use safefilter::apf::RepulsiveKind;
use safefilter::scenario_file::{content_hash, load_scenario, LoadError};
use safefilter::sim::{bundled, bundled_scenarios, compute_metrics, write_csv};
use safefilter::{run, ControllerKind, ScenarioSpec, TrajectoryLog};
use safefilter_teleop::{default_port, Bridge, BridgeConfig, TeleopSession};

use crate::args::{Cli, Command, RunOpts, ScenarioAction};
use crate::report::{diff_table, metrics_record, RunReport, METRICS_HEADER};
use crate::svg::{render, Series};

/// Anything that ends the program with exit code 2.
#[derive(Debug)]
pub struct Failure(pub String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<ExitCode, Failure>;

pub const EXIT_COLLISION: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

pub fn execute(cli: Cli) -> ExitCode {
    match dispatch(cli) {
        Ok(code) => code,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn dispatch(cli: Cli) -> Outcome {
    let out = cli.out;
    match cli.command {
        Command::Run { scenario, opts } => run_one(&out, &scenario, &opts),
        Command::Sweep {
            scenario,
            param,
            values,
            opts,
            jobs,
        } => sweep(&out, &scenario, &param, &values, &opts, jobs),
        Command::Compare { scenario, opts } => compare(&out, &scenario, &opts),
        Command::Scenarios { action } => scenarios(&out, action),
        Command::Teleop {
            scenario,
            port,
            tick_hz,
            public,
        } => teleop(&out, &scenario, port, tick_hz, public),
    }
}

/// A file on disk, or a bundled scenario by name or file name.
pub fn resolve_scenario(arg: &str) -> Result<ScenarioSpec, Failure> {
    let path = Path::new(arg);
    match load_scenario(path) {
        Ok(spec) => Ok(spec),
        Err(LoadError::Io { source, .. }) if source.kind() == io::ErrorKind::NotFound => {
            let key = path.file_name().and_then(|n| n.to_str()).unwrap_or(arg);
            bundled(key)
                .map(|b| b.spec())
                .ok_or_else(|| Failure(format!("no scenario file {arg:?} and no bundled scenario of that name")))
        }
        Err(e) => Err(Failure(format!("{arg}: {e}"))),
    }
}

fn effective(mut spec: ScenarioSpec, opts: &RunOpts) -> Result<ScenarioSpec, Failure> {
    if let Some(kind) = opts.controller {
        spec.controller = kind;
    }
    for (key, value) in &opts.set {
        spec.cfg.set(key, *value)?;
    }
    if let Some(dt) = opts.dt {
        spec.dt = dt;
    }
    spec.validate()?;
    Ok(spec)
}

struct Finished {
    spec: ScenarioSpec,
    log: TrajectoryLog,
    report: RunReport,
}

fn simulate(spec: ScenarioSpec, stem: &str, out: &Path, seed: Option<u64>) -> Result<Finished, Failure> {
    let log = run(&spec)?;
    let csv = out.join(format!("{stem}.csv"));
    let file = File::create(&csv).map_err(|e| Failure(format!("{}: {e}", csv.display())))?;
    let mut w = BufWriter::new(file);
    write_csv(&log.rows, &mut w)?;
    w.flush()?;
    let report = RunReport {
        name: spec.name.clone(),
        hash: content_hash(&spec),
        controller: spec.controller.to_string(),
        terminal: log.terminal.label().to_string(),
        metrics: compute_metrics(&log, &spec),
        seed,
        csv,
        svg: out.join(format!("{stem}.svg")),
    };
    Ok(Finished { spec, log, report })
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn prepare(out: &Path) -> Result<(), Failure> {
    fs::create_dir_all(out).map_err(|e| Failure(format!("cannot create {}: {e}", out.display())))
}

fn exit_for<'a>(reports: impl IntoIterator<Item = &'a RunReport>) -> ExitCode {
    if reports.into_iter().any(|r| r.metrics.collision) {
        ExitCode::from(EXIT_COLLISION)
    } else {
        ExitCode::SUCCESS
    }
}

fn run_one(out: &Path, scenario: &str, opts: &RunOpts) -> Outcome {
    let spec = effective(resolve_scenario(scenario)?, opts)?;
    prepare(out)?;
    let stem = spec.name.clone();
    let done = simulate(spec, &stem, out, opts.seed)?;
    let title = format!("{} ({})", done.spec.name, done.report.controller);
    let series = [Series {
        label: done.report.controller.clone(),
        log: &done.log,
    }];
    write_text(&done.report.svg, &render(&title, &done.spec.scene, done.spec.cfg.d_obs, &series))?;
    write_text(&out.join(format!("{stem}.json")), &serde_json::to_string_pretty(&done.report)?)?;
    println!("{}", done.report.summary());
    Ok(exit_for([&done.report]))
}

fn sweep(out: &Path, scenario: &str, param: &str, values: &[f64], opts: &RunOpts, jobs: Option<usize>) -> Outcome {
    if values.is_empty() {
        return Err(Failure("sweep needs at least one value".into()));
    }
    let base = effective(resolve_scenario(scenario)?, opts)?;
    let specs = values
        .iter()
        .map(|&v| {
            let spec = base.with_param(param, v)?;
            spec.validate()?;
            Ok((v, spec))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    prepare(out)?;

    let stem = format!("{}_sweep_{param}", base.name);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    let runs = pool.install(|| {
        specs
            .into_par_iter()
            .map(|(v, spec)| {
                let mut done = simulate(spec, &format!("{}_{param}_{v}", base.name), out, opts.seed)?;
                done.report.svg = out.join(format!("{stem}.svg"));
                Ok((v, done))
            })
            .collect::<Result<Vec<_>, Failure>>()
    })?;

    let table = out.join(format!("{stem}.csv"));
    let mut w = csv::Writer::from_path(&table).map_err(|e| Failure(format!("{}: {e}", table.display())))?;
    let mut header = vec![param];
    header.extend(METRICS_HEADER);
    w.write_record(&header)?;
    for (v, done) in &runs {
        let mut record = vec![v.to_string()];
        record.extend(metrics_record(&done.report));
        w.write_record(&record)?;
    }
    w.flush()?;

    let series: Vec<Series<'_>> = runs
        .iter()
        .map(|(v, done)| Series {
            label: format!("{param} = {v}"),
            log: &done.log,
        })
        .collect();
    let title = format!("{} ({}), sweep over {param}", base.name, base.controller);
    write_text(&out.join(format!("{stem}.svg")), &render(&title, &base.scene, base.cfg.d_obs, &series))?;

    for (_, done) in &runs {
        println!("{}", done.report.summary());
    }
    println!("metrics -> {}", table.display());
    Ok(exit_for(runs.iter().map(|(_, d)| &d.report)))
}

/// The potential-field controller to set against the barrier filter.
pub fn apf_variant(spec: &ScenarioSpec) -> ControllerKind {
    match spec.controller {
        kind @ ControllerKind::Apf(_) => kind,
        _ if spec.lidar.is_some() => ControllerKind::Apf(RepulsiveKind::Gaussian),
        _ => ControllerKind::Apf(RepulsiveKind::Khatib),
    }
}

fn compare(out: &Path, scenario: &str, opts: &RunOpts) -> Outcome {
    let base = effective(resolve_scenario(scenario)?, opts)?;
    prepare(out)?;
    let apf = base.with_controller(apf_variant(&base));
    let cbf = base.with_controller(ControllerKind::Cbf);
    let (a, b) = rayon::join(
        || simulate(apf, &format!("{}_apf", base.name), out, opts.seed),
        || simulate(cbf, &format!("{}_cbf", base.name), out, opts.seed),
    );
    let (mut a, mut b) = (a?, b?);
    let svg = out.join(format!("{}_compare.svg", base.name));
    a.report.svg = svg.clone();
    b.report.svg = svg.clone();

    let series = [
        Series {
            label: a.report.controller.clone(),
            log: &a.log,
        },
        Series {
            label: b.report.controller.clone(),
            log: &b.log,
        },
    ];
    let title = format!("{}: {} vs {}", base.name, a.report.controller, b.report.controller);
    write_text(&svg, &render(&title, &base.scene, base.cfg.d_obs, &series))?;
    write_text(
        &out.join(format!("{}_compare.json", base.name)),
        &serde_json::to_string_pretty(&[&a.report, &b.report])?,
    )?;
    println!("{}", a.report.summary());
    println!("{}", b.report.summary());
    print!("{}", diff_table(&a.report, &b.report));
    Ok(exit_for([&a.report, &b.report]))
}

fn scenarios(out: &Path, action: Option<ScenarioAction>) -> Outcome {
    match action.unwrap_or(ScenarioAction::List) {
        ScenarioAction::List => {
            for b in bundled_scenarios() {
                let spec = b.spec();
                println!(
                    "{:<28} {:<13} {:>2} obstacles  {}",
                    b.name,
                    spec.controller,
                    spec.scene.obstacles.len(),
                    &content_hash(&spec)[..12]
                );
            }
        }
        ScenarioAction::Export { name, stdout } => {
            let b = bundled(&name).ok_or_else(|| Failure(format!("no bundled scenario {name:?}")))?;
            if stdout {
                print!("{}", b.toml);
            } else {
                prepare(out)?;
                let path = out.join(b.file_name);
                write_text(&path, b.toml)?;
                println!("{}", path.display());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn teleop(out: &Path, scenario: &str, port: Option<u16>, tick_hz: f64, public: bool) -> Outcome {
    let spec = resolve_scenario(scenario)?;
    let port = match port {
        Some(p) => p,
        None => default_port()?,
    };
    let mut config = BridgeConfig {
        tick_hz,
        ..BridgeConfig::localhost(port)
    };
    if public {
        config.addr.set_ip([0, 0, 0, 0].into());
    }
    prepare(out)?;
    let log_path: PathBuf = out.join(format!("{}_teleop.csv", spec.name));
    let session = TeleopSession::new(spec)?;

    let runtime = tokio::runtime::Runtime::new()?;
    let (stats, session) = runtime.block_on(async {
        let bridge = Bridge::bind(session, config).await?;
        eprintln!("listening on ws://{} (ctrl-c to stop)", bridge.local_addr());
        bridge
            .run(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    })?;

    let file = File::create(&log_path).map_err(|e| Failure(format!("{}: {e}", log_path.display())))?;
    let mut w = BufWriter::new(file);
    write_csv(session.log(), &mut w)?;
    w.flush()?;
    println!(
        "{} ticks, {} commands ({} stale, {} malformed), {} clients, min h {:.3}, worst jitter {:.0}% -> {}",
        stats.ticks,
        stats.accepted,
        stats.stale,
        stats.malformed,
        stats.clients,
        stats.min_h,
        100.0 * stats.max_jitter,
        log_path.display()
    );
    let collided = session.log().iter().any(|r| r.clearance < 0.0);
    Ok(if collided {
        ExitCode::from(EXIT_COLLISION)
    } else {
        ExitCode::SUCCESS
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use safefilter::sim::example1;

    #[test]
    fn bundled_names_and_paths_resolve() {
        let a = resolve_scenario("example1").unwrap();
        let b = resolve_scenario("scenarios/example1.toml").unwrap();
        assert_eq!(a, b);
        assert!(resolve_scenario("nowhere/nothing.toml").is_err());
    }

    #[test]
    fn overrides_apply_in_order() {
        let opts = RunOpts {
            controller: Some(ControllerKind::Cbf),
            set: vec![("alpha".into(), 3.0), ("alpha".into(), 2.0)],
            dt: Some(0.005),
            seed: None,
        };
        let spec = effective(example1(), &opts).unwrap();
        assert_eq!(spec.controller, ControllerKind::Cbf);
        assert_eq!(spec.cfg.alpha, 2.0);
        assert_eq!(spec.dt, 0.005);

        let bad = RunOpts {
            set: vec![("alpha".into(), -1.0)],
            ..opts
        };
        assert!(effective(example1(), &bad).is_err());
    }

    #[test]
    fn compare_keeps_a_potential_field_controller() {
        let spec = example1().with_controller(ControllerKind::Apf(RepulsiveKind::Gaussian));
        assert_eq!(apf_variant(&spec), spec.controller);
        let cbf = example1().with_controller(ControllerKind::Cbf);
        let expected = if cbf.lidar.is_some() {
            RepulsiveKind::Gaussian
        } else {
            RepulsiveKind::Khatib
        };
        assert_eq!(apf_variant(&cbf), ControllerKind::Apf(expected));
    }
}

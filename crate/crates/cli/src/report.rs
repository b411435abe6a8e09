use std::path::PathBuf;

use serde::Serialize;

use safefilter::sim::Metrics;

/// What one run produced.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub name: String,
    /// SHA-256 of the effective scenario's canonical text.
    pub hash: String,
    pub controller: String,
    pub terminal: String,
    pub metrics: Metrics,
    /// Recorded only: runs are deterministic.
    pub seed: Option<u64>,
    pub csv: PathBuf,
    pub svg: PathBuf,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.2}"))
}

impl RunReport {
    pub fn summary(&self) -> String {
        let m = &self.metrics;
        format!(
            "{} [{}] {} {} t_goal={} min_clearance={:.3} min_h={:.3} osc={:.3} reversals={} interventions={} stuck={} -> {} {}",
            self.name,
            self.controller,
            &self.hash[..12],
            self.terminal,
            opt(m.time_to_goal),
            m.min_clearance,
            m.min_h,
            m.oscillation_index,
            m.reversal_count,
            m.interventions,
            m.stuck,
            self.csv.display(),
            self.svg.display(),
        )
    }
}

pub const METRICS_HEADER: [&str; 14] = [
    "name",
    "controller",
    "hash",
    "terminal",
    "reached",
    "time_to_goal",
    "min_clearance",
    "min_h",
    "path_length",
    "oscillation_index",
    "reversal_count",
    "interventions",
    "stuck",
    "collision",
];

pub fn metrics_record(r: &RunReport) -> Vec<String> {
    let m = &r.metrics;
    vec![
        r.name.clone(),
        r.controller.clone(),
        r.hash.clone(),
        r.terminal.clone(),
        m.reached.to_string(),
        m.time_to_goal.map_or_else(String::new, |t| t.to_string()),
        m.min_clearance.to_string(),
        m.min_h.to_string(),
        m.path_length.to_string(),
        m.oscillation_index.to_string(),
        m.reversal_count.to_string(),
        m.interventions.to_string(),
        m.stuck.to_string(),
        m.collision.to_string(),
    ]
}

/// Side-by-side metrics of two runs with the difference `b − a`.
pub fn diff_table(a: &RunReport, b: &RunReport) -> String {
    let rows: [(&str, f64, f64); 6] = [
        ("min_clearance", a.metrics.min_clearance, b.metrics.min_clearance),
        ("min_h", a.metrics.min_h, b.metrics.min_h),
        ("path_length", a.metrics.path_length, b.metrics.path_length),
        ("oscillation_index", a.metrics.oscillation_index, b.metrics.oscillation_index),
        ("reversal_count", a.metrics.reversal_count as f64, b.metrics.reversal_count as f64),
        ("interventions", a.metrics.interventions as f64, b.metrics.interventions as f64),
    ];
    let mut out = format!("{:<18} {:>14} {:>14} {:>12}\n", "metric", a.controller, b.controller, "diff");
    out += &format!("{:<18} {:>14} {:>14}\n", "terminal", a.terminal, b.terminal);
    out += &format!(
        "{:<18} {:>14} {:>14}\n",
        "time_to_goal",
        opt(a.metrics.time_to_goal),
        opt(b.metrics.time_to_goal)
    );
    for (name, x, y) in rows {
        out += &format!("{name:<18} {x:>14.4} {y:>14.4} {:>12.4}\n", y - x);
    }
    out
}

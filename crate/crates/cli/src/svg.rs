//! Hand-built SVG plots: the arena with one trajectory per run on top, speed
//! over time underneath.

use std::fmt::Write;

use safefilter::sim::TrajectoryLog;
use safefilter::{Obstacle, Scene};

const WIDTH: f64 = 720.0;
const MARGIN: f64 = 40.0;
const SPEED_HEIGHT: f64 = 180.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

pub struct Series<'a> {
    pub label: String,
    pub log: &'a TrajectoryLog,
}

/// World to canvas, equal aspect, y up.
struct Frame {
    x0: f64,
    y1: f64,
    scale: f64,
    top: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) * self.scale
    }

    fn py(&self, y: f64) -> f64 {
        self.top + (self.y1 - y) * self.scale
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render(title: &str, scene: &Scene, d_obs: f64, runs: &[Series<'_>]) -> String {
    let (min, max) = (&scene.bounds.min, &scene.bounds.max);
    let inner = WIDTH - 2.0 * MARGIN;
    let scale = inner / (max.x() - min.x());
    let frame = Frame {
        x0: min.x(),
        y1: max.y(),
        scale,
        top: MARGIN,
    };
    let arena_h = (max.y() - min.y()) * scale;
    let speed_top = MARGIN + arena_h + 2.0 * MARGIN;
    let height = speed_top + SPEED_HEIGHT + MARGIN;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height:.0}" viewBox="0 0 {WIDTH} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="24" font-size="14">{}</text>"#, escape(title));
    let _ = writeln!(
        s,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{inner:.2}" height="{arena_h:.2}" fill="none" stroke="#999"/>"##
    );

    for o in &scene.obstacles {
        obstacle(&mut s, &frame, o, d_obs);
    }

    let (gx, gy) = (frame.px(scene.goal.x()), frame.py(scene.goal.y()));
    let _ = writeln!(
        s,
        r#"<path d="M{:.2} {:.2} l6 6 m0 -6 l-6 6" stroke="black" stroke-width="2" class="goal"/>"#,
        gx - 3.0,
        gy - 3.0
    );

    for (i, run) in runs.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = run
            .log
            .rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", frame.px(r.position.x()), frame.py(r.position.y())))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="trajectory" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            points.join(" ")
        );
        if let Some(first) = run.log.rows.first() {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                frame.px(first.position.x()),
                frame.py(first.position.y())
            );
        }
        let ly = MARGIN + 16.0 * (i as f64 + 1.0);
        let lx = WIDTH - MARGIN - 200.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/><text x="{}" y="{}">{}</text>"#,
            lx + 18.0,
            lx + 24.0,
            ly + 4.0,
            escape(&run.label)
        );
    }

    speed_panel(&mut s, speed_top, inner, runs);
    s.push_str("</svg>\n");
    s
}

fn obstacle(s: &mut String, f: &Frame, o: &Obstacle, d_obs: f64) {
    match o {
        Obstacle::Circle { center, radius } => {
            let (cx, cy) = (f.px(center.x()), f.py(center.y()));
            if d_obs > 0.0 {
                let _ = writeln!(
                    s,
                    r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="none" stroke="#bbb" stroke-dasharray="4 3"/>"##,
                    (radius + d_obs) * f.scale
                );
            }
            let _ = writeln!(
                s,
                r##"<circle class="obstacle" cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="#555"/>"##,
                radius * f.scale
            );
        }
        Obstacle::Segment { a, b, thickness } => {
            let line = |width: f64, style: &str| {
                format!(
                    r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke-linecap="round" stroke-width="{:.2}" {style}/>"#,
                    f.px(a.x()),
                    f.py(a.y()),
                    f.px(b.x()),
                    f.py(b.y()),
                    width.max(1.0)
                )
            };
            if d_obs > 0.0 {
                let _ = writeln!(s, "{}", line((thickness + 2.0 * d_obs) * f.scale, r##"stroke="#eee""##));
            }
            let _ = writeln!(s, "{}", line(thickness * f.scale, r##"class="obstacle" stroke="#555""##));
        }
    }
}

fn speed_panel(s: &mut String, top: f64, inner: f64, runs: &[Series<'_>]) {
    let t_max = runs
        .iter()
        .filter_map(|r| r.log.rows.last().map(|row| row.t))
        .fold(0.0, f64::max)
        .max(1e-9);
    let v_max = runs
        .iter()
        .flat_map(|r| r.log.rows.iter().map(|row| row.velocity.norm()))
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
        .max(1e-9);
    let _ = writeln!(
        s,
        r##"<rect x="{MARGIN}" y="{top:.2}" width="{inner:.2}" height="{SPEED_HEIGHT}" fill="none" stroke="#999"/>"##
    );
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="{:.2}">speed (m/s), max {v_max:.2}</text>"#, top - 6.0);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="end">t = {t_max:.1} s</text>"#,
        MARGIN + inner,
        top + SPEED_HEIGHT + 16.0
    );
    for (i, run) in runs.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = run
            .log
            .rows
            .iter()
            .map(|r| {
                let x = MARGIN + r.t / t_max * inner;
                let y = top + SPEED_HEIGHT * (1.0 - r.velocity.norm() / v_max);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="speed" points="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#,
            points.join(" ")
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use safefilter::sim::{bundled, run};

    #[test]
    fn one_trajectory_per_run_and_every_obstacle_drawn() {
        let spec = bundled("scenario3_doorway_1m").unwrap().spec();
        let log = run(&spec.with_param("k_att", 1.0).unwrap()).unwrap();
        let runs = [
            Series { label: "a <b>".into(), log: &log },
            Series { label: "c".into(), log: &log },
        ];
        let svg = render("doorway & co", &spec.scene, spec.cfg.d_obs, &runs);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches(r#"class="trajectory""#).count(), 2);
        assert_eq!(svg.matches(r#"class="speed""#).count(), 2);
        assert_eq!(svg.matches(r#"class="obstacle""#).count(), spec.scene.obstacles.len());
        assert!(svg.contains("a &lt;b&gt;") && svg.contains("doorway &amp; co"));
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }
}

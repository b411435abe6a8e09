use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ScenarioSpec, Terminal, TrajectoryLog, STUCK_DURATION, STUCK_SPEED};
use crate::geometry::Vector;

/// Speed below which a heading is not considered defined (m/s).
pub const HEADING_MIN_SPEED: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub reached: bool,
    pub time_to_goal: Option<f64>,
    pub min_clearance: f64,
    pub min_h: f64,
    pub path_length: f64,
    /// Excess turning: total absolute heading change minus net heading change (rad).
    pub oscillation_index: f64,
    pub reversal_count: usize,
    pub interventions: usize,
    pub stuck: bool,
    pub collision: bool,
}

fn wrap_angle(a: f64) -> f64 {
    // (−π, π]
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Heading changes this close to π are reversals, whose turning direction
/// is decided by rounding noise alone.
const REVERSAL_TOLERANCE: f64 = 1e-6;

/// `Σ|Δθ| − |ΣΔθ|` over consecutive samples moving faster than
/// [`HEADING_MIN_SPEED`], with `Δθ` wrapped to (−π, π].
///
/// A reversal counts as a turn of π in the direction opposite to the
/// previous reversal, so straight back-and-forth motion is excess turning
/// rather than net rotation.
pub fn oscillation_index<'a>(velocities: impl IntoIterator<Item = &'a Vector>) -> f64 {
    let mut previous: Option<f64> = None;
    let mut reversal_sign = -1.0;
    let (mut total, mut net) = (0.0, 0.0);
    for v in velocities {
        if v.norm() <= HEADING_MIN_SPEED {
            continue;
        }
        let theta = v.y().atan2(v.x());
        if let Some(p) = previous {
            let mut d = wrap_angle(theta - p);
            if d.abs() >= PI - REVERSAL_TOLERANCE {
                reversal_sign = -reversal_sign;
                d = reversal_sign * PI;
            }
            total += d.abs();
            net += d;
        }
        previous = Some(theta);
    }
    (total - net.abs()).max(0.0)
}

/// Number of consecutive velocity pairs with a negative dot product.
pub fn reversal_count<'a>(velocities: impl IntoIterator<Item = &'a Vector>) -> usize {
    let v: Vec<&Vector> = velocities.into_iter().collect();
    v.windows(2).filter(|w| w[0].dot(w[1]) < 0.0).count()
}

pub fn compute_metrics(log: &TrajectoryLog, spec: &ScenarioSpec) -> Metrics {
    let reached = matches!(log.terminal, Terminal::ReachedGoal { .. });
    let time_to_goal = match log.terminal {
        Terminal::ReachedGoal { t } => Some(t),
        _ => None,
    };
    let path_length = log
        .rows
        .windows(2)
        .map(|w| w[0].position.distance(&w[1].position))
        .sum();

    let mut stopped_for: f64 = 0.0;
    let mut longest_stop: f64 = 0.0;
    for row in &log.rows {
        if row.v_star.norm() < STUCK_SPEED {
            stopped_for += spec.dt;
            longest_stop = longest_stop.max(stopped_for);
        } else {
            stopped_for = 0.0;
        }
    }

    Metrics {
        reached,
        time_to_goal,
        min_clearance: log.min_clearance(),
        min_h: log.min_h(),
        path_length,
        oscillation_index: oscillation_index(log.rows.iter().map(|r| &r.velocity)),
        reversal_count: reversal_count(log.rows.iter().map(|r| &r.velocity)),
        interventions: log.interventions(),
        stuck: !reached && longest_stop >= STUCK_DURATION - 1e-9,
        collision: log.terminal.is_collision(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_line_has_no_oscillation() {
        let v: Vec<Vector> = (0..50).map(|k| Vector::xy(1.0 + 0.01 * k as f64, 0.5)).collect();
        assert_eq!(oscillation_index(&v), 0.0);
        assert_eq!(reversal_count(&v), 0);
    }

    #[test]
    fn alternating_velocity_reverses_every_tick() {
        let v: Vec<Vector> = (0..10)
            .map(|k| if k % 2 == 0 { Vector::xy(1.0, 0.0) } else { Vector::xy(-1.0, 0.0) })
            .collect();
        assert_eq!(reversal_count(&v), 9);
    }

    #[test]
    fn quarter_arc_is_all_net_turning() {
        let n = 200;
        let v: Vec<Vector> = (0..=n)
            .map(|k| {
                let a = 0.5 * PI * k as f64 / n as f64;
                Vector::xy(a.cos(), a.sin())
            })
            .collect();
        assert!(oscillation_index(&v).abs() < 1e-12);
    }

    #[test]
    fn zigzag_accumulates_excess_turning() {
        let v: Vec<Vector> = (0..11)
            .map(|k| if k % 2 == 0 { Vector::xy(1.0, 0.2) } else { Vector::xy(1.0, -0.2) })
            .collect();
        let swing = 2.0 * 0.2f64.atan();
        // ten swings of alternating sign; net turning is zero
        assert!((oscillation_index(&v) - 10.0 * swing).abs() < 1e-12);
    }

    #[test]
    fn straight_bounces_are_excess_turning() {
        // rounding noise in the lateral component must not decide the result
        let v: Vec<Vector> = (0..9)
            .map(|k| {
                let noise = if k % 3 == 0 { 1e-15 } else { -1e-15 };
                Vector::xy(if k % 2 == 0 { 1.0 } else { -1.0 }, noise)
            })
            .collect();
        assert!((oscillation_index(&v) - 8.0 * PI).abs() < 1e-9);
        let one_way = [Vector::xy(1.0, 0.0), Vector::xy(-1.0, 0.0)];
        assert!((oscillation_index(&one_way) - 0.0).abs() < 1e-12);
    }

    #[test]
    fn slow_samples_are_skipped() {
        let v = vec![Vector::xy(1.0, 0.0), Vector::xy(0.0, 0.01), Vector::xy(1.0, 0.0)];
        assert_eq!(oscillation_index(&v), 0.0);
    }

    #[test]
    fn wrap_is_half_open() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
    }
}

use safefilter::cbf::{safety_command, SafetyCommand};
use safefilter::dynamics::{step, PlantState};
use safefilter::sensing::{scan, scan_barrier, LidarSpec};
use safefilter::sim::LogRow;
use safefilter::{Error, Result, ScenarioSpec, Vector};

use crate::wire::{CommandMsg, SceneMsg, StateMsg};

/// Every `SCAN_STRIDE`-th beam is reported in [`StateMsg::scan`].
pub const SCAN_STRIDE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Submission {
    Accepted,
    /// `seq` was not greater than the last accepted one.
    Stale,
}

/// One simulated vehicle driven by pilot commands through the scan-based
/// CBF filter. Owned by a single ticking task.
pub struct TeleopSession {
    spec: ScenarioSpec,
    lidar: LidarSpec,
    state: PlantState,
    t: f64,
    command: Vector,
    last_seq: Option<u64>,
    log: Vec<LogRow>,
    record: bool,
}

impl TeleopSession {
    /// Scenarios without a `[lidar]` table get the default sensor.
    pub fn new(spec: ScenarioSpec) -> Result<Self> {
        spec.validate()?;
        if spec.scene.dim() != 2 {
            return Err(Error::invalid("scene", "the teleop bridge is planar"));
        }
        Ok(TeleopSession {
            lidar: spec.lidar.clone().unwrap_or_default(),
            state: PlantState::at_rest(spec.start.clone()),
            t: 0.0,
            command: Vector::zeros(2),
            last_seq: None,
            log: Vec::new(),
            record: true,
            spec,
        })
    }

    /// Stops keeping rows for [`TeleopSession::log`].
    pub fn without_recording(mut self) -> Self {
        self.record = false;
        self
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn position(&self) -> &Vector {
        &self.state.position
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn log(&self) -> &[LogRow] {
        &self.log
    }

    /// The pilot command held until the next accepted one, saturated to `v_max`.
    pub fn command(&self) -> &Vector {
        &self.command
    }

    pub fn submit(&mut self, cmd: &CommandMsg) -> Submission {
        if self.last_seq.is_some_and(|last| cmd.seq <= last) {
            return Submission::Stale;
        }
        self.last_seq = Some(cmd.seq);
        self.command = Vector::xy(cmd.vx, cmd.vy).saturated(self.spec.cfg.v_max);
        Submission::Accepted
    }

    pub fn scene_msg(&self, tick_hz: f64) -> SceneMsg {
        let heading = self.spec.heading();
        SceneMsg {
            name: self.spec.name.clone(),
            goal: self.spec.scene.goal.clone(),
            bounds: self.spec.scene.bounds.clone(),
            obstacles: self.spec.scene.obstacles.clone(),
            start: self.spec.start.clone(),
            d_obs: self.spec.cfg.d_obs,
            v_max: self.spec.cfg.v_max,
            tick_hz,
            scan_angles: self.lidar.beam_angles(heading).step_by(SCAN_STRIDE).collect(),
            max_range: self.lidar.max_range,
        }
    }

    /// Scans, filters the held command, advances the plant by one `dt` and
    /// reports the tick.
    ///
    /// With nothing in range the barrier is at least `max_range − d_obs`,
    /// which is reported as `h`; the command passes through.
    pub fn tick(&mut self) -> Result<StateMsg> {
        let x = self.state.position.clone();
        let s = scan(&x, self.spec.heading(), &self.spec.scene, &self.lidar)?;
        let cfg = &self.spec.cfg;
        let command = match scan_barrier(&s, cfg.d_obs) {
            Ok(barrier) => safety_command(self.command.clone(), &barrier, cfg)?,
            Err(Error::NoObstacleInView) => SafetyCommand {
                v_des: self.command.clone(),
                v_star: self.command.clone(),
                h: self.lidar.max_range - cfg.d_obs,
                intervened: false,
            },
            Err(e) => return Err(e),
        };
        let msg = StateMsg {
            t: self.t,
            x: x.x(),
            y: x.y(),
            vx: command.v_star.x(),
            vy: command.v_star.y(),
            vdes_x: command.v_des.x(),
            vdes_y: command.v_des.y(),
            h: command.h,
            intervened: command.intervened,
            scan: Some(s.decimated_ranges(SCAN_STRIDE)),
        };
        if self.record {
            self.log.push(LogRow {
                t: self.t,
                position: x,
                velocity: self.state.velocity.clone(),
                v_des: command.v_des,
                v_star: command.v_star.clone(),
                h: command.h,
                clearance: self.spec.scene.clearance(&self.state.position),
                intervened: command.intervened,
            });
        }
        self.state = step(&self.state, &command.v_star, &self.spec.plant, cfg.tracking_gain, self.spec.dt)?;
        self.t += self.spec.dt;
        Ok(msg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use safefilter::sim::bundled;

    fn course() -> TeleopSession {
        TeleopSession::new(bundled("teleop_course").unwrap().spec()).unwrap()
    }

    fn cmd(vx: f64, vy: f64, seq: u64) -> CommandMsg {
        CommandMsg { vx, vy, seq }
    }

    #[test]
    fn holds_position_without_commands() {
        let mut s = course();
        let start = s.position().clone();
        for _ in 0..100 {
            let msg = s.tick().unwrap();
            assert_eq!((msg.vx, msg.vy), (0.0, 0.0));
        }
        assert_eq!(s.position(), &start);
    }

    #[test]
    fn stale_commands_are_ignored() {
        let mut s = course();
        assert_eq!(s.submit(&cmd(0.5, 0.0, 3)), Submission::Accepted);
        assert_eq!(s.submit(&cmd(0.0, 0.5, 3)), Submission::Stale);
        assert_eq!(s.submit(&cmd(0.0, 0.5, 2)), Submission::Stale);
        assert_eq!(s.command(), &Vector::xy(0.5, 0.0));
        assert_eq!(s.submit(&cmd(0.0, 0.5, 4)), Submission::Accepted);
        assert_eq!(s.command(), &Vector::xy(0.0, 0.5));
    }

    #[test]
    fn commands_are_saturated() {
        let mut s = course();
        s.submit(&cmd(30.0, 40.0, 0));
        let v_max = s.spec().cfg.v_max;
        assert!((s.command().norm() - v_max).abs() < 1e-12);
        let msg = s.tick().unwrap();
        assert!((msg.vdes_x.hypot(msg.vdes_y) - v_max).abs() < 1e-12);
    }

    #[test]
    fn scene_message_matches_the_scan() {
        let mut s = course();
        let scene = s.scene_msg(50.0);
        let msg = s.tick().unwrap();
        assert_eq!(scene.scan_angles.len(), msg.scan.unwrap().len());
        assert_eq!(scene.obstacles.len(), s.spec().scene.obstacles.len());
    }

    /// Drives the held command for `seconds`; returns the `h` of the first
    /// intervention and the smallest `h`.
    fn drive(s: &mut TeleopSession, vx: f64, vy: f64, seconds: f64) -> (Option<f64>, f64) {
        s.submit(&cmd(vx, vy, 1));
        let ticks = (seconds / s.spec().dt).round() as usize;
        let mut first = None;
        let mut min_h = f64::INFINITY;
        for _ in 0..ticks {
            let msg = s.tick().unwrap();
            if msg.intervened && first.is_none() {
                first = Some(msg.h);
            }
            min_h = min_h.min(msg.h);
        }
        (first, min_h)
    }

    fn wall_spec() -> ScenarioSpec {
        let mut spec = bundled("teleop_course").unwrap().spec();
        spec.name = "wall".into();
        spec.scene = safefilter::Scene::new(
            [-3.0, 0.0],
            vec![safefilter::Obstacle::segment([3.0, -3.0], [3.0, 3.0], 0.2)],
            safefilter::Bounds::new([-4.0, -4.0], [4.0, 4.0]),
        )
        .unwrap();
        spec
    }

    #[test]
    fn full_speed_at_a_wall_is_stopped() {
        let mut s = TeleopSession::new(wall_spec()).unwrap();
        let (first, min_h) = drive(&mut s, 10.0, 0.0, 10.0);
        let h_at_first = first.expect("the filter must act");
        assert!(h_at_first >= 0.1, "intervened first at h = {h_at_first}");
        assert!(min_h >= -1e-3, "min h {min_h}");
        // it ends up parked on the boundary
        assert!(s.log().last().unwrap().h.abs() < 1e-3);
    }

    #[test]
    fn sliding_off_a_pillar_into_a_wall_overshoots() {
        // East from the start threads the doorway, slides round the pillar at
        // (6.3, 0) and meets the far wall while the pillar is still the
        // closest obstacle. The wall's constraint takes over at h ≈ 0.1 with
        // the vehicle near full speed, and the lagging plant overshoots.
        let mut s = course();
        let (_, min_h) = drive(&mut s, 10.0, 0.0, 10.0);
        assert!(min_h < -1e-3 && min_h > -0.05, "min h {min_h}");
        assert!(s.log().iter().all(|r| r.clearance > 0.0));
        // and recovers once the filter catches up
        assert!(s.log().last().unwrap().h > min_h);
    }
}

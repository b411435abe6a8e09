//! Websocket wire contract.
//!
//! Every message is one JSON object on its own line, tagged by `type`.
//! Clients send `cmd`; the bridge sends one `scene` on connect and then a
//! `state` per tick. Field names and types are frozen.

use serde::{Deserialize, Serialize};

use safefilter::{Bounds, Obstacle, Vector};

/// Desired world-frame velocity from the pilot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandMsg {
    pub vx: f64,
    pub vy: f64,
    pub seq: u64,
}

/// One tick of the bridge.
///
/// `vx, vy` echo the filtered command sent to the plant and `vdes_x, vdes_y`
/// the saturated pilot command; the two are equal unless `intervened`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateMsg {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub vdes_x: f64,
    pub vdes_y: f64,
    pub h: f64,
    pub intervened: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<Vec<f64>>,
}

/// Static arena description, sent once when a client connects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneMsg {
    pub name: String,
    pub goal: Vector,
    pub bounds: Bounds,
    pub obstacles: Vec<Obstacle>,
    pub start: Vector,
    pub d_obs: f64,
    pub v_max: f64,
    pub tick_hz: f64,
    /// World-frame angle of each reported scan range, in order.
    pub scan_angles: Vec<f64>,
    pub max_range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ClientMsg {
    Cmd(CommandMsg),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ServerMsg {
    Scene(SceneMsg),
    State(StateMsg),
}

#[derive(Debug, thiserror::Error)]
pub enum WireError {
    #[error("malformed message: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("non-finite velocity in command {seq}")]
    NonFinite { seq: u64 },
}

pub fn parse_command(line: &str) -> Result<CommandMsg, WireError> {
    let ClientMsg::Cmd(cmd) = serde_json::from_str(line)?;
    if !(cmd.vx.is_finite() && cmd.vy.is_finite()) {
        return Err(WireError::NonFinite { seq: cmd.seq });
    }
    Ok(cmd)
}

/// Splits a frame into its non-empty lines and parses each one.
pub fn parse_frame(frame: &str) -> impl Iterator<Item = Result<CommandMsg, WireError>> + '_ {
    frame.lines().map(str::trim).filter(|l| !l.is_empty()).map(parse_command)
}

/// One line of JSON, newline terminated.
pub fn encode(msg: &ServerMsg) -> String {
    let mut line = serde_json::to_string(msg).expect("server messages are finite");
    line.push('\n');
    line
}

pub fn encode_command(cmd: &CommandMsg) -> String {
    let mut line = serde_json::to_string(&ClientMsg::Cmd(*cmd)).expect("finite command");
    line.push('\n');
    line
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn keys(v: &Value) -> Vec<&str> {
        let mut k: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        k.sort_unstable();
        k
    }

    #[test]
    fn command_parses() {
        let cmd = parse_command(r#"{"type":"cmd","vx":1.5,"vy":-0.5,"seq":7}"#).unwrap();
        assert_eq!(cmd, CommandMsg { vx: 1.5, vy: -0.5, seq: 7 });
        assert_eq!(parse_command(encode_command(&cmd).trim()).unwrap(), cmd);
    }

    #[test]
    fn malformed_commands_are_rejected() {
        for bad in [
            "",
            "not json",
            r#"{"vx":1,"vy":0,"seq":1}"#,
            r#"{"type":"state","vx":1,"vy":0,"seq":1}"#,
            r#"{"type":"cmd","vx":"fast","vy":0,"seq":1}"#,
            r#"{"type":"cmd","vx":1,"vy":0,"seq":-1}"#,
            r#"{"type":"cmd","vx":1,"vy":0}"#,
            r#"{"type":"cmd","vx":1,"vy":0,"seq":1,"extra":true}"#,
            r#"{"type":"cmd","vx":1e999,"vy":0,"seq":1}"#,
        ] {
            assert!(parse_command(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn frames_may_carry_several_lines() {
        let frame = "{\"type\":\"cmd\",\"vx\":1,\"vy\":0,\"seq\":1}\n\n{\"type\":\"cmd\",\"vx\":0,\"vy\":1,\"seq\":2}\n";
        let cmds: Vec<_> = parse_frame(frame).collect::<Result<_, _>>().unwrap();
        assert_eq!(cmds.len(), 2);
        assert_eq!(cmds[1].seq, 2);
    }

    #[test]
    fn state_field_names_are_frozen() {
        let msg = ServerMsg::State(StateMsg {
            t: 0.5,
            x: 1.0,
            y: 2.0,
            vx: 0.1,
            vy: 0.2,
            vdes_x: 0.3,
            vdes_y: 0.4,
            h: 0.7,
            intervened: true,
            scan: Some(vec![1.0, 2.0]),
        });
        let line = encode(&msg);
        assert!(line.ends_with('\n') && !line.trim_end().contains('\n'));
        let v: Value = serde_json::from_str(&line).unwrap();
        assert_eq!(
            keys(&v),
            ["h", "intervened", "scan", "t", "type", "vdes_x", "vdes_y", "vx", "vy", "x", "y"]
        );
        assert_eq!(v["type"], "state");
        assert_eq!(serde_json::from_value::<ServerMsg>(v).unwrap(), msg);
    }

    #[test]
    fn scene_message_is_tagged() {
        let msg = ServerMsg::Scene(SceneMsg {
            name: "s".into(),
            goal: Vector::xy(1.0, 2.0),
            bounds: Bounds::new([0.0, 0.0], [3.0, 3.0]),
            obstacles: vec![Obstacle::circle([1.0, 1.0], 0.2)],
            start: Vector::xy(0.5, 0.5),
            d_obs: 0.3,
            v_max: 1.5,
            tick_hz: 50.0,
            scan_angles: vec![0.0],
            max_range: 10.0,
        });
        let v: Value = serde_json::from_str(&encode(&msg)).unwrap();
        assert_eq!(v["type"], "scene");
        assert_eq!(v["goal"], serde_json::json!([1.0, 2.0]));
        assert_eq!(v["obstacles"][0]["kind"], "circle");
    }
}

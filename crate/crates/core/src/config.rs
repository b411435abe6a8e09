use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gains and shaping parameters shared by every controller.
///
/// Field names double as the keys accepted by `--set key=value` on the
/// command line and in the `[controller]` table of scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    /// Attractive gain (1/s when used as a velocity field).
    pub k_att: f64,
    /// Repulsive gain.
    pub k_rep: f64,
    /// Region of influence of the repulsive potential (m).
    pub rho0: f64,
    /// Minimum distance margin added to obstacle surfaces (m).
    pub d_obs: f64,
    /// Gain of the linear class-K function `alpha(h) = alpha * h` (1/s).
    pub alpha: f64,
    /// Offset of the potential-derived barrier, in (0, 1).
    pub delta: f64,
    /// Velocity tracking gain of the double integrator (1/s).
    pub tracking_gain: f64,
    /// Saturation applied to every commanded velocity (m/s).
    pub v_max: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            k_att: 1.0,
            k_rep: 1.0,
            rho0: 1.0,
            d_obs: 0.0,
            alpha: 1.0,
            delta: 0.001,
            tracking_gain: 4.0,
            v_max: 2.0,
        }
    }
}

impl ControllerConfig {
    pub const KEYS: [&'static str; 8] = [
        "k_att",
        "k_rep",
        "rho0",
        "d_obs",
        "alpha",
        "delta",
        "tracking_gain",
        "v_max",
    ];

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("k_att", self.k_att),
            ("k_rep", self.k_rep),
            ("rho0", self.rho0),
            ("alpha", self.alpha),
            ("tracking_gain", self.tracking_gain),
            ("v_max", self.v_max),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {value}")));
            }
        }
        if !(self.d_obs.is_finite() && self.d_obs >= 0.0) {
            return Err(Error::invalid("d_obs", format!("must be finite and >= 0, got {}", self.d_obs)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid("delta", format!("must lie in (0, 1), got {}", self.delta)));
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "k_att" => self.k_att,
            "k_rep" => self.k_rep,
            "rho0" => self.rho0,
            "d_obs" => self.d_obs,
            "alpha" => self.alpha,
            "delta" => self.delta,
            "tracking_gain" => self.tracking_gain,
            "v_max" => self.v_max,
            _ => return None,
        })
    }

    /// Sets a field by name. Unknown keys are an error; the value is not
    /// range-checked until [`validate`](Self::validate).
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let slot = match key {
            "k_att" => &mut self.k_att,
            "k_rep" => &mut self.k_rep,
            "rho0" => &mut self.rho0,
            "d_obs" => &mut self.d_obs,
            "alpha" => &mut self.alpha,
            "delta" => &mut self.delta,
            "tracking_gain" => &mut self.tracking_gain,
            "v_max" => &mut self.v_max,
            _ => {
                return Err(Error::invalid(
                    key,
                    format!("unknown controller parameter (expected one of {})", Self::KEYS.join(", ")),
                ))
            }
        };
        *slot = value;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ControllerConfig::default().validate().unwrap();
    }

    #[test]
    fn set_and_get_roundtrip_every_key() {
        let mut cfg = ControllerConfig::default();
        for (i, key) in ControllerConfig::KEYS.iter().enumerate() {
            let v = 0.1 + i as f64 * 0.01;
            cfg.set(key, v).unwrap();
            assert_eq!(cfg.get(key), Some(v));
        }
        assert!(cfg.set("gamma", 1.0).is_err());
        assert_eq!(cfg.get("gamma"), None);
    }

    #[test]
    fn rejects_out_of_range_values() {
        let mut cfg = ControllerConfig::default();
        cfg.delta = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ControllerConfig::default();
        cfg.rho0 = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ControllerConfig::default();
        cfg.d_obs = -0.1;
        assert!(cfg.validate().is_err());
    }
}

//! Deterministic world description: home position, spherical obstacles, a
//! battery model, and scripted sensor/processing outcomes. Serialized as
//! JSON (see README for the schema).

use serde::{Deserialize, Serialize};
use thiserror::Error;

fn default_reserve() -> f64 {
    0.15
}

fn default_tick() -> f64 {
    0.1
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct Obstacle {
    pub center: [f64; 3],
    pub radius: f64,
}

/// Scripted output rule: matched by action name, optionally restricted to
/// the nth invocation (1-based) and/or an XY region `[x0, y0, x1, y1]`
/// containing the vehicle. Rules are tried in order; the first match wins.
#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct ScriptRule {
    pub action: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nth: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<[f64; 4]>,
    pub output: serde_json::Value,
}

impl ScriptRule {
    pub fn matches(&self, action: &str, invocation: u64, x: f64, y: f64) -> bool {
        if self.action != action {
            return false;
        }
        if let Some(n) = self.nth {
            if n != invocation {
                return false;
            }
        }
        if let Some([x0, y0, x1, y1]) = self.region {
            if x < x0 || x > x1 || y < y0 || y > y1 {
                return false;
            }
        }
        true
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct Scenario {
    pub home: [f64; 3],
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    pub battery_capacity_s: f64,
    #[serde(default = "default_reserve")]
    pub reserve: f64,
    #[serde(default = "default_tick")]
    pub tick_s: f64,
    #[serde(default)]
    pub script: Vec<ScriptRule>,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("tick_s must be positive")]
    NonPositiveTick,
    #[error("battery_capacity_s must be positive")]
    NonPositiveCapacity,
    #[error("reserve must lie strictly between 0 and 1")]
    ReserveOutOfRange,
    #[error("obstacle radius must be non-negative")]
    NegativeObstacleRadius,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        // negated comparisons are deliberate: they reject NaN as well
        #![allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(self.tick_s > 0.0) {
            return Err(ScenarioError::NonPositiveTick);
        }
        if !(self.battery_capacity_s > 0.0) {
            return Err(ScenarioError::NonPositiveCapacity);
        }
        if !(self.reserve > 0.0 && self.reserve < 1.0) {
            return Err(ScenarioError::ReserveOutOfRange);
        }
        if self.obstacles.iter().any(|o| o.radius < 0.0) {
            return Err(ScenarioError::NegativeObstacleRadius);
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Scenario, String> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| e.to_string())?;
        s.validate().map_err(|e| e.to_string())?;
        Ok(s)
    }

    /// Bare scenario with a generous battery; useful in tests.
    pub fn basic() -> Scenario {
        Scenario {
            home: [0.0, 0.0, 0.0],
            obstacles: Vec::new(),
            battery_capacity_s: 3600.0,
            reserve: default_reserve(),
            tick_s: default_tick(),
            script: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_matching_order_of_guards() {
        let r = ScriptRule {
            action: "read_sensor".into(),
            nth: Some(2),
            region: Some([0.0, 0.0, 10.0, 10.0]),
            output: serde_json::json!(42.0),
        };
        assert!(r.matches("read_sensor", 2, 5.0, 5.0));
        assert!(!r.matches("read_sensor", 1, 5.0, 5.0));
        assert!(!r.matches("read_sensor", 2, 11.0, 5.0));
        assert!(!r.matches("scan_wifi", 2, 5.0, 5.0));
    }

    #[test]
    fn validation_rejects_bad_fields() {
        let mut s = Scenario::basic();
        s.tick_s = 0.0;
        assert_eq!(s.validate(), Err(ScenarioError::NonPositiveTick));
        let mut s = Scenario::basic();
        s.reserve = 1.0;
        assert_eq!(s.validate(), Err(ScenarioError::ReserveOutOfRange));
    }

    #[test]
    fn json_defaults() {
        let s = Scenario::from_json(r#"{"home":[0,0,0],"battery_capacity_s":600}"#).unwrap();
        assert_eq!(s.tick_s, 0.1);
        assert_eq!(s.reserve, 0.15);
        assert!(s.obstacles.is_empty());
    }
}

//! Tick-by-tick record of simulated state and discrete events, written as
//! JSON Lines: one record per tick interleaved with event records, with the
//! outcome record last.

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub pos: [f64; 3],
    pub speed: f64,
    pub battery: f64,
    pub node: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "event", content = "payload")]
pub enum EventKind {
    ActionFired {
        action: String,
        label: Option<String>,
        invocation: u64,
    },
    BranchTaken {
        source: String,
        result: bool,
    },
    ParallelEntered {
        name: String,
    },
    ParallelExited {
        name: String,
    },
    FilterClamped {
        name: String,
    },
    AbortTriggered {
        reason: String,
    },
    NodeEntered {
        id: String,
    },
    NodeCompleted {
        id: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "outcome", content = "reason")]
pub enum Outcome {
    Completed,
    Aborted(String),
    Error(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    pub outcome: Outcome,
}

impl Trace {
    /// Full JSONL serialization: samples and events merged by time (sample
    /// first at equal timestamps), outcome record last.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut si = 0;
        let mut ei = 0;
        while si < self.samples.len() || ei < self.events.len() {
            let take_sample = match (self.samples.get(si), self.events.get(ei)) {
                (Some(s), Some(e)) => s.t <= e.t,
                (Some(_), None) => true,
                _ => false,
            };
            if take_sample {
                out.push_str(&serde_json::to_string(&self.samples[si]).unwrap());
                si += 1;
            } else {
                out.push_str(&serde_json::to_string(&self.events[ei]).unwrap());
                ei += 1;
            }
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&self.outcome).unwrap());
        out.push('\n');
        out
    }

    /// Canonical serialization of the event sequence only (one JSON object
    /// per line). Used for differential comparison of execution paths.
    pub fn events_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).unwrap());
            out.push('\n');
        }
        out
    }

    pub fn events_of_kind(&self, pred: impl Fn(&EventKind) -> bool) -> Vec<&Event> {
        self.events.iter().filter(|e| pred(&e.kind)).collect()
    }

    pub fn find_event(&self, pred: impl Fn(&EventKind) -> bool) -> Option<&Event> {
        self.events.iter().find(|e| pred(&e.kind))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_orders_sample_before_event_at_equal_time() {
        let trace = Trace {
            samples: vec![Sample {
                t: 0.0,
                pos: [0.0; 3],
                speed: 0.0,
                battery: 1.0,
                node: "t".into(),
            }],
            events: vec![Event {
                t: 0.0,
                kind: EventKind::NodeEntered { id: "t".into() },
            }],
            outcome: Outcome::Completed,
        };
        let jsonl = trace.to_jsonl();
        let lines: Vec<&str> = jsonl.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].contains("\"node\""));
        assert!(lines[1].contains("NodeEntered"));
        assert_eq!(lines[2], r#"{"outcome":"Completed"}"#);
    }

    #[test]
    fn aborted_outcome_carries_reason() {
        let o = Outcome::Aborted("battery".into());
        assert_eq!(
            serde_json::to_string(&o).unwrap(),
            r#"{"outcome":"Aborted","reason":"battery"}"#
        );
    }
}

//! Deterministic discrete-time mission execution against a scripted world.
//!
//! The simulation is logically concurrent (main flow alongside parallel
//! blocks) but driven by a single deterministic tick scheduler, so two runs
//! with identical inputs produce byte-identical traces.

mod engine;
mod scenario;
mod trace;
mod value;

pub use engine::{evaluate_condition, run, SimConfig};
pub use scenario::{Obstacle, Scenario, ScriptRule};
pub use trace::{Event, EventKind, Outcome, Sample, Trace};
pub use value::Value;

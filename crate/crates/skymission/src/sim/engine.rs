//! The tick scheduler: kinematics, battery, filters, parallel blocks,
//! branching, and abort handling.
//!
//! Per-tick order: (1) fire due parallel actions, (2) evaluate the `until`
//! conditions of parallels that fired, (3) advance the current routing
//! element's motion through its filter, (4) drain battery, (5) check the
//! battery reserve, (6) on routing completion take the outgoing edge.

use crate::geom::{clamp_speed, remove_approach};
use crate::model::{
    ActionInstance, Condition, EdgeLabel, FilterDecl, Literal, Mission, Node, NodeKind,
};
use crate::registry::{Registry, ValueType};
use crate::sim::scenario::Scenario;
use crate::sim::trace::{Event, EventKind, Outcome, Sample, Trace};
use crate::sim::value::{compare, Value};
use crate::Point;
use std::collections::BTreeMap;

const EPS: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub max_sim_time: f64,
    pub cruise_speed: f64,
    pub climb_rate: f64,
    pub v_max: f64,
    pub arrival_tol: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            max_sim_time: 3600.0,
            cruise_speed: 2.0,
            climb_rate: 1.0,
            v_max: 5.0,
            arrival_tol: 0.05,
        }
    }
}

/// First-order point-mass motion of the current routing element.
#[derive(Clone, Debug)]
enum Motion {
    Waypoints {
        points: Vec<Point>,
        idx: usize,
        speed: f64,
    },
    Hover {
        remaining: f64,
    },
}

impl Motion {
    fn desired_velocity(&self, pos: Point, tick: f64) -> Point {
        match self {
            Motion::Waypoints { points, idx, speed } => {
                let Some(&wp) = points.get(*idx) else {
                    return Point::zero();
                };
                let to = wp - pos;
                let dist = to.norm();
                if dist <= EPS {
                    Point::zero()
                } else if dist < speed * tick {
                    to * (1.0 / tick)
                } else {
                    to.normalized() * *speed
                }
            }
            Motion::Hover { .. } => Point::zero(),
        }
    }

    fn after_move(&mut self, pos: Point, tick: f64, tol: f64) {
        match self {
            Motion::Waypoints { points, idx, .. } => {
                while *idx < points.len() && pos.distance(points[*idx]) <= tol {
                    *idx += 1;
                }
            }
            Motion::Hover { remaining } => {
                *remaining -= tick;
            }
        }
    }

    fn complete(&self) -> bool {
        match self {
            Motion::Waypoints { points, idx, .. } => *idx >= points.len(),
            Motion::Hover { remaining } => *remaining <= EPS,
        }
    }
}

/// Waypoint list for a routing node starting at `pos`.
fn routing_waypoints(node: &Node, pos: Point, home: Point, cfg: &SimConfig) -> Motion {
    let num = |name: &str, fallback: f64| {
        node.params
            .get(name)
            .and_then(Literal::as_number)
            .unwrap_or(fallback)
    };
    match node.kind {
        NodeKind::TakeOff => Motion::Waypoints {
            points: vec![Point::new(pos.x, pos.y, num("altitude", 10.0))],
            idx: 0,
            speed: cfg.climb_rate,
        },
        NodeKind::TouchDown => Motion::Waypoints {
            points: vec![Point::new(pos.x, pos.y, 0.0)],
            idx: 0,
            speed: cfg.climb_rate,
        },
        NodeKind::FlyTo => {
            let target = match node.params.get("target") {
                Some(Literal::Point(p)) => Point::from_array(*p),
                _ => pos,
            };
            Motion::Waypoints {
                points: vec![target],
                idx: 0,
                speed: cfg.cruise_speed,
            }
        }
        NodeKind::FlyHome => Motion::Waypoints {
            points: vec![Point::new(home.x, home.y, pos.z)],
            idx: 0,
            speed: cfg.cruise_speed,
        },
        NodeKind::FlyInArea => {
            let rect = match node.params.get("area") {
                Some(Literal::Rect(r)) => *r,
                _ => [pos.x, pos.y, pos.x, pos.y],
            };
            let spacing = num("spacing", 1.0).max(EPS);
            Motion::Waypoints {
                points: sweep_waypoints(rect, spacing, pos.z),
                idx: 0,
                speed: cfg.cruise_speed,
            }
        }
        NodeKind::Hover => Motion::Hover {
            remaining: num("duration_s", 0.0),
        },
        NodeKind::Branch => Motion::Hover { remaining: 0.0 },
    }
}

/// Lawnmower sweep over `[x0, y0, x1, y1]` with the given row spacing, at a
/// fixed altitude. Rows run along x, serpentine.
fn sweep_waypoints(rect: [f64; 4], spacing: f64, z: f64) -> Vec<Point> {
    let [x0, y0, x1, y1] = rect;
    let mut points = Vec::new();
    let mut y = y0;
    let mut row = 0usize;
    while y <= y1 + EPS {
        let (xs, xe) = if row.is_multiple_of(2) { (x0, x1) } else { (x1, x0) };
        points.push(Point::new(xs, y, z));
        points.push(Point::new(xe, y, z));
        y += spacing;
        row += 1;
    }
    // drop consecutive duplicates (degenerate rects)
    points.dedup_by(|a, b| a.distance(*b) <= EPS);
    points
}

/// Applies a filter's actions to a desired velocity. Actions are applied
/// lowest-priority first; the first-listed (highest priority) applies last
/// and therefore overrides. Returns the constrained velocity and the names
/// of actions that changed it.
pub fn apply_filters(
    decl: &FilterDecl,
    desired: Point,
    pos: Point,
    reg: &Registry,
    scenario: &Scenario,
    cfg: &SimConfig,
    tick: f64,
) -> (Point, Vec<String>) {
    let mut v = desired;
    let mut clamped = Vec::new();
    for inst in decl.actions.iter().rev() {
        let before = v;
        let Some(def) = reg.lookup(&inst.action_name) else {
            continue;
        };
        let param = |name: &str| {
            Registry::effective_param(inst, def, name)
                .and_then(Literal::as_number)
                .unwrap_or(0.0)
        };
        match def.behavior.as_str() {
            "maintain_speed" => {
                v = clamp_speed(v, param("limit"));
            }
            "avoid_obstacles" => {
                let clearance = param("clearance");
                for ob in &scenario.obstacles {
                    let center = Point::from_array(ob.center);
                    let rel = center - pos;
                    let surface_dist = rel.norm() - ob.radius;
                    let dir = rel.normalized();
                    let approach = v.dot(dir);
                    if approach > 0.0 && surface_dist - approach * tick < clearance {
                        v = remove_approach(v, dir);
                    }
                }
            }
            "max_altitude" => {
                let limit = param("limit");
                let max_vz = (limit - pos.z) / tick;
                if v.z > max_vz {
                    v = Point::new(v.x, v.y, max_vz.max(0.0));
                }
            }
            // unknown filter hooks act as identity
            _ => {}
        }
        if (v - before).norm() > EPS {
            clamped.push(inst.action_name.clone());
        }
    }
    (clamp_speed(v, cfg.v_max), clamped)
}

/// Invocation counters per action name, shared between embedded firings and
/// processing evaluations.
type Invocations = BTreeMap<String, u64>;

fn next_invocation(invocations: &mut Invocations, action: &str) -> u64 {
    let n = invocations.entry(action.to_string()).or_insert(0);
    *n += 1;
    *n
}

fn scripted_or_default(
    scenario: &Scenario,
    name: &str,
    output: ValueType,
    invocation: u64,
    pos: Point,
) -> Value {
    let p = pos.to_array();
    for rule in &scenario.script {
        if rule.matches(name, invocation, pos.x, pos.y) {
            return Value::from_script(&rule.output, output, name, p, invocation);
        }
    }
    Value::default_for(output, name, p, invocation)
}

/// Applies one processing action to an input value: scripted outputs first,
/// then the behavior hook, then the type default.
fn apply_processing(
    inst: &ActionInstance,
    input: &Value,
    reg: &Registry,
    scenario: &Scenario,
    invocations: &mut Invocations,
    pos: Point,
) -> Result<Value, String> {
    let def = reg
        .lookup(&inst.action_name)
        .ok_or_else(|| format!("unknown processing action `{}`", inst.action_name))?;
    let invocation = next_invocation(invocations, &inst.action_name);
    let p = pos.to_array();
    for rule in &scenario.script {
        if rule.matches(&inst.action_name, invocation, pos.x, pos.y) {
            return Ok(Value::from_script(
                &rule.output,
                def.output_type,
                &inst.action_name,
                p,
                invocation,
            ));
        }
    }
    if def.behavior == "threshold" {
        let limit = Registry::effective_param(inst, def, "limit")
            .and_then(Literal::as_number)
            .unwrap_or(0.0);
        let value = input
            .as_number()
            .ok_or_else(|| format!("`{}` expects a Number input", inst.action_name))?;
        return Ok(Value::Bool(value > limit));
    }
    Ok(Value::default_for(
        def.output_type,
        &inst.action_name,
        p,
        invocation,
    ))
}

/// Evaluates a condition against stored results, consuming invocation
/// indices for its processing actions.
pub fn evaluate_condition(
    c: &Condition,
    store: &BTreeMap<String, Value>,
    reg: &Registry,
    scenario: &Scenario,
    invocations: &mut Invocations,
    pos: Point,
) -> Result<bool, String> {
    let mut value = store
        .get(&c.result_ref)
        .cloned()
        .ok_or_else(|| format!("missing result `{}`", c.result_ref))?;
    for step in &c.processing_chain {
        value = apply_processing(step, &value, reg, scenario, invocations, pos)?;
    }
    Ok(compare(&value, c.comparator, &c.reference_value))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Cursor {
    Node(usize),
    AbortHome,
    AbortTouchdown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Running,
    Aborting,
}

struct ActiveParallel {
    name: String,
    next_fire: Option<f64>,
}

struct Engine<'a> {
    mission: &'a Mission,
    scenario: &'a Scenario,
    reg: &'a Registry,
    cfg: &'a SimConfig,
    tick_count: u64,
    pos: Point,
    battery: f64,
    cursor: Cursor,
    motion: Motion,
    phase: Phase,
    abort_reason: String,
    abort_filter: Option<String>,
    active: Vec<ActiveParallel>,
    store: BTreeMap<String, Value>,
    invocations: Invocations,
    samples: Vec<Sample>,
    events: Vec<Event>,
    fatal: Option<String>,
    outcome: Option<Outcome>,
}

pub fn run(mission: &Mission, scenario: &Scenario, reg: &Registry, cfg: &SimConfig) -> Trace {
    if let Err(e) = scenario.validate() {
        return Trace {
            samples: vec![],
            events: vec![],
            outcome: Outcome::Error(e.to_string()),
        };
    }
    let home = Point::from_array(scenario.home);
    let takeoff_idx = mission
        .nodes
        .iter()
        .position(|n| n.kind == NodeKind::TakeOff);
    let Some(takeoff_idx) = takeoff_idx else {
        return Trace {
            samples: vec![],
            events: vec![],
            outcome: Outcome::Error("mission has no takeoff node".into()),
        };
    };

    let mut engine = Engine {
        mission,
        scenario,
        reg,
        cfg,
        tick_count: 0,
        pos: Point::new(home.x, home.y, 0.0),
        battery: 1.0,
        cursor: Cursor::Node(takeoff_idx),
        motion: Motion::Hover { remaining: 0.0 },
        phase: Phase::Running,
        abort_reason: String::new(),
        abort_filter: None,
        active: Vec::new(),
        store: BTreeMap::new(),
        invocations: BTreeMap::new(),
        samples: Vec::new(),
        events: Vec::new(),
        fatal: None,
        outcome: None,
    };
    engine.enter(Cursor::Node(takeoff_idx));
    engine.run_loop();

    let outcome = match engine.fatal {
        Some(msg) => Outcome::Error(msg),
        None => engine.outcome.unwrap_or(Outcome::Aborted("timeout".into())),
    };
    Trace {
        samples: engine.samples,
        events: engine.events,
        outcome,
    }
}

impl<'a> Engine<'a> {
    fn time(&self) -> f64 {
        self.tick_count as f64 * self.scenario.tick_s
    }

    fn event(&mut self, kind: EventKind) {
        self.events.push(Event {
            t: self.time(),
            kind,
        });
    }

    fn node_id(&self, cursor: Cursor) -> String {
        match cursor {
            Cursor::Node(i) => self.mission.nodes[i].id.clone(),
            Cursor::AbortHome => "_abort_fly_home".to_string(),
            Cursor::AbortTouchdown => "_abort_touchdown".to_string(),
        }
    }

    fn current_node(&self) -> Option<&'a Node> {
        match self.cursor {
            Cursor::Node(i) => Some(&self.mission.nodes[i]),
            _ => None,
        }
    }

    fn current_filter(&self) -> Option<&'a FilterDecl> {
        let name = match self.cursor {
            Cursor::Node(i) => self.mission.nodes[i].filter_ref.as_deref(),
            // the filter active at abort time keeps applying on the way home
            Cursor::AbortHome | Cursor::AbortTouchdown => self.abort_filter.as_deref(),
        }?;
        self.mission.filter(name)
    }

    fn run_loop(&mut self) {
        loop {
            if self.outcome.is_some() || self.fatal.is_some() {
                break;
            }
            if self.time() > self.cfg.max_sim_time {
                self.outcome = Some(Outcome::Aborted("timeout".into()));
                break;
            }
            self.step();
        }
    }

    /// One tick.
    fn step(&mut self) {
        let tick = self.scenario.tick_s;
        let t = self.time();
        let pos_before = self.pos;
        let node_before = self.node_id(self.cursor);

        // (1) fire due parallel actions
        let mut fired: Vec<String> = Vec::new();
        for i in 0..self.active.len() {
            loop {
                let due = matches!(self.active[i].next_fire, Some(nf) if nf <= t + EPS);
                if !due {
                    break;
                }
                let name = self.active[i].name.clone();
                let period = self
                    .mission
                    .parallel(&name)
                    .and_then(|p| p.period_s);
                self.active[i].next_fire = match period {
                    Some(p) => Some(self.active[i].next_fire.unwrap() + p),
                    None => None,
                };
                self.fire_parallel(&name);
                if !fired.contains(&name) {
                    fired.push(name);
                }
            }
        }

        // (2) until conditions of parallels that fired this tick; while the
        // condition is false, control stays with the current routing element.
        let mut transferred = false;
        for name in &fired {
            let Some(decl) = self.mission.parallel(name) else {
                continue;
            };
            let Some((cond, target)) = decl.until.clone() else {
                continue;
            };
            let result = match evaluate_condition(
                &cond,
                &self.store,
                self.reg,
                self.scenario,
                &mut self.invocations,
                self.pos,
            ) {
                Ok(r) => r,
                Err(e) => {
                    self.fatal = Some(e);
                    return;
                }
            };
            self.event(EventKind::BranchTaken {
                source: name.clone(),
                result,
            });
            if result {
                let current = self.node_id(self.cursor);
                self.event(EventKind::NodeCompleted { id: current });
                self.goto_id(&target);
                transferred = true;
                break;
            }
        }

        // (3) motion through filters
        let mut speed = 0.0;
        if !transferred && self.fatal.is_none() {
            let desired = self.motion.desired_velocity(self.pos, tick);
            let (v, clamped) = match self.current_filter() {
                Some(decl) => apply_filters(
                    decl,
                    desired,
                    self.pos,
                    self.reg,
                    self.scenario,
                    self.cfg,
                    tick,
                ),
                None => (clamp_speed(desired, self.cfg.v_max), Vec::new()),
            };
            for name in clamped {
                self.event(EventKind::FilterClamped { name });
            }
            self.pos = self.pos + v * tick;
            speed = v.norm();
            self.motion.after_move(self.pos, tick, self.cfg.arrival_tol);
        }

        // (4) battery drain: hover cost + motion cost
        let drain = (0.5 + 0.25 * speed) / self.scenario.battery_capacity_s * tick;
        self.battery = (self.battery - drain).max(0.0);

        // (5) reserve check
        if self.phase == Phase::Running && self.battery <= self.scenario.reserve {
            self.event(EventKind::AbortTriggered {
                reason: "battery".into(),
            });
            self.phase = Phase::Aborting;
            self.abort_reason = "battery".into();
            self.abort_filter = self
                .current_node()
                .and_then(|n| n.filter_ref.clone());
            let current = self.node_id(self.cursor);
            self.event(EventKind::NodeCompleted { id: current });
            self.deactivate_all();
            self.enter(Cursor::AbortHome);
            transferred = true;
        }

        // (6) routing completion
        if !transferred && self.fatal.is_none() && self.motion.complete() {
            let current = self.node_id(self.cursor);
            self.event(EventKind::NodeCompleted { id: current });
            match self.cursor {
                Cursor::AbortHome => self.enter(Cursor::AbortTouchdown),
                Cursor::AbortTouchdown => {
                    self.outcome = Some(Outcome::Aborted(self.abort_reason.clone()));
                }
                Cursor::Node(i) => {
                    let node = &self.mission.nodes[i];
                    if node.kind == NodeKind::TouchDown {
                        self.outcome = Some(match self.phase {
                            Phase::Running => Outcome::Completed,
                            Phase::Aborting => Outcome::Aborted(self.abort_reason.clone()),
                        });
                    } else {
                        match self.mission.next_of(&node.id) {
                            Some(next) => {
                                let next = next.to_string();
                                self.goto_id(&next);
                            }
                            None => {
                                self.fatal =
                                    Some(format!("node `{}` has no successor", node.id));
                            }
                        }
                    }
                }
            }
        }

        self.samples.push(Sample {
            t,
            pos: pos_before.to_array(),
            speed,
            battery: self.battery,
            node: node_before,
        });
        self.tick_count += 1;
    }

    /// Transfers control to a node id, resolving any chain of branch nodes.
    fn goto_id(&mut self, id: &str) {
        let mut target = id.to_string();
        for _ in 0..10_000 {
            let Some(idx) = self.mission.nodes.iter().position(|n| n.id == target) else {
                self.fatal = Some(format!("jump to unknown node `{target}`"));
                return;
            };
            let node = &self.mission.nodes[idx];
            if node.kind != NodeKind::Branch {
                self.enter(Cursor::Node(idx));
                return;
            }
            self.event(EventKind::NodeEntered {
                id: node.id.clone(),
            });
            let cond = node.condition.clone().expect("branch carries a condition");
            let result = match evaluate_condition(
                &cond,
                &self.store,
                self.reg,
                self.scenario,
                &mut self.invocations,
                self.pos,
            ) {
                Ok(r) => r,
                Err(e) => {
                    self.fatal = Some(e);
                    return;
                }
            };
            self.event(EventKind::BranchTaken {
                source: node.id.clone(),
                result,
            });
            self.event(EventKind::NodeCompleted {
                id: node.id.clone(),
            });
            let wanted = if result { EdgeLabel::True } else { EdgeLabel::False };
            let next = self
                .mission
                .successors(&node.id)
                .ok()
                .and_then(|succ| {
                    succ.into_iter()
                        .find(|(l, _)| *l == wanted)
                        .map(|(_, id)| id.to_string())
                });
            match next {
                Some(n) => target = n,
                None => {
                    self.fatal = Some(format!("branch `{}` has no {wanted:?} edge", node.id));
                    return;
                }
            }
        }
        self.fatal = Some("branch cycle without a routing element".into());
    }

    /// Enters a routing element: fires embedded actions, resets motion, and
    /// reconciles active parallel blocks.
    fn enter(&mut self, cursor: Cursor) {
        self.cursor = cursor;
        let id = self.node_id(cursor);
        self.event(EventKind::NodeEntered { id });

        let home = Point::from_array(self.scenario.home);
        match cursor {
            Cursor::Node(i) => {
                let node = &self.mission.nodes[i];
                self.motion = routing_waypoints(node, self.pos, home, self.cfg);
                let embedded = node.embedded_actions.clone();
                for inst in &embedded {
                    self.fire_action(inst);
                }
                let refs = node.parallel_refs.clone();
                self.reconcile_parallels(&refs);
            }
            Cursor::AbortHome => {
                let synthetic = Node::routing("_abort_fly_home", NodeKind::FlyHome);
                self.motion = routing_waypoints(&synthetic, self.pos, home, self.cfg);
            }
            Cursor::AbortTouchdown => {
                let synthetic = Node::routing("_abort_touchdown", NodeKind::TouchDown);
                self.motion = routing_waypoints(&synthetic, self.pos, home, self.cfg);
            }
        }
    }

    /// A parallel block is active during exactly the ticks in which the
    /// current node lists it; re-activation resets the firing phase.
    fn reconcile_parallels(&mut self, refs: &[String]) {
        let t = self.time();
        let mut kept = Vec::new();
        let mut exited = Vec::new();
        for ap in self.active.drain(..) {
            if refs.contains(&ap.name) {
                kept.push(ap);
            } else {
                exited.push(ap.name);
            }
        }
        for name in exited {
            self.event(EventKind::ParallelExited { name });
        }
        self.active = kept;
        for name in refs {
            if self.active.iter().any(|a| &a.name == name) {
                continue;
            }
            self.event(EventKind::ParallelEntered { name: name.clone() });
            self.active.push(ActiveParallel {
                name: name.clone(),
                next_fire: Some(t),
            });
        }
    }

    fn deactivate_all(&mut self) {
        let names: Vec<String> = self.active.drain(..).map(|a| a.name).collect();
        for name in names {
            self.event(EventKind::ParallelExited { name });
        }
    }

    fn fire_parallel(&mut self, name: &str) {
        let Some(decl) = self.mission.parallel(name) else {
            return;
        };
        let actions = decl.actions.clone();
        for inst in &actions {
            self.fire_action(inst);
        }
    }

    fn fire_action(&mut self, inst: &ActionInstance) {
        let Some(def) = self.reg.lookup(&inst.action_name) else {
            self.fatal = Some(format!("unknown action `{}`", inst.action_name));
            return;
        };
        let invocation = next_invocation(&mut self.invocations, &inst.action_name);
        let value = scripted_or_default(
            self.scenario,
            &inst.action_name,
            def.output_type,
            invocation,
            self.pos,
        );
        self.event(EventKind::ActionFired {
            action: inst.action_name.clone(),
            label: inst.result_label.clone(),
            invocation,
        });
        if let Some(label) = &inst.result_label {
            self.store.insert(label.clone(), value);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;
    use crate::registry::builtin_catalog;

    fn run_src(src: &str, scenario: &Scenario) -> Trace {
        let m = parse(src).unwrap();
        let reg = builtin_catalog();
        let report = crate::analyzer::analyze(&m, &reg);
        assert!(!report.has_errors(), "{:?}", report.diagnostics);
        run(&m, scenario, &reg, &SimConfig::default())
    }

    const MINIMAL: &str = r#"mission "m" { flow { takeoff(altitude=10.0) touchdown() } }"#;

    #[test]
    fn minimal_mission_timing() {
        let trace = run_src(MINIMAL, &Scenario::basic());
        assert_eq!(trace.outcome, Outcome::Completed);
        // 10 m up + 10 m down at 1 m/s
        let end = trace.samples.last().unwrap().t;
        assert!((end - 20.0).abs() <= 0.2, "ended at {end}");
    }

    #[test]
    fn hover_holds_position() {
        let src = r#"
mission "m" {
  flow {
    takeoff(altitude=2.0)
    hover(duration_s=3.0)
    touchdown()
  }
}"#;
        let trace = run_src(src, &Scenario::basic());
        assert_eq!(trace.outcome, Outcome::Completed);
        for s in &trace.samples {
            assert!((s.pos[0]).abs() < EPS && (s.pos[1]).abs() < EPS);
        }
        let end = trace.samples.last().unwrap().t;
        assert!((end - 7.0).abs() <= 0.3, "ended at {end}");
    }

    #[test]
    fn hover_zero_duration_completes_immediately() {
        let src = r#"
mission "m" {
  flow {
    takeoff(altitude=1.0)
    hover(duration_s=0.0)
    touchdown()
  }
}"#;
        let trace = run_src(src, &Scenario::basic());
        assert_eq!(trace.outcome, Outcome::Completed);
        let entered = trace
            .find_event(|k| matches!(k, EventKind::NodeEntered { id } if id == "_2"))
            .unwrap()
            .t;
        let completed = trace
            .find_event(|k| matches!(k, EventKind::NodeCompleted { id } if id == "_2"))
            .unwrap()
            .t;
        assert!(completed - entered <= 0.1 + EPS);
    }

    #[test]
    fn fly_to_345_timing() {
        let src = r#"
mission "m" {
  flow {
    takeoff(altitude=10.0)
    leg: fly_to(target=point(30.0, 40.0, 10.0))
    touchdown()
  }
}"#;
        let trace = run_src(src, &Scenario::basic());
        assert_eq!(trace.outcome, Outcome::Completed);
        let entered = trace
            .find_event(|k| matches!(k, EventKind::NodeEntered { id } if id == "leg"))
            .unwrap()
            .t;
        let completed = trace
            .find_event(|k| matches!(k, EventKind::NodeCompleted { id } if id == "leg"))
            .unwrap()
            .t;
        // 50 m at 2 m/s
        assert!(
            (completed - entered - 25.0).abs() <= 0.1 + EPS,
            "leg took {}",
            completed - entered
        );
    }

    #[test]
    fn battery_monotonic_and_positive_drain() {
        let trace = run_src(MINIMAL, &Scenario::basic());
        let mut prev = 1.0;
        for s in &trace.samples {
            assert!(s.battery <= prev + EPS);
            prev = s.battery;
        }
        assert!(prev < 1.0);
    }

    #[test]
    fn timeout_aborts() {
        let src = r#"
mission "m" {
  flow {
    takeoff(altitude=1.0)
    hover(duration_s=10000.0)
    touchdown()
  }
}"#;
        let m = parse(src).unwrap();
        let reg = builtin_catalog();
        let cfg = SimConfig {
            max_sim_time: 5.0,
            ..SimConfig::default()
        };
        let trace = run(&m, &Scenario::basic(), &reg, &cfg);
        assert_eq!(trace.outcome, Outcome::Aborted("timeout".into()));
    }

    #[test]
    fn maintain_speed_clamps_exactly() {
        let decl = FilterDecl {
            name: "f".into(),
            actions: vec![
                ActionInstance::new("maintain_speed").with_param("limit", Literal::Number(2.0)),
            ],
            span: Default::default(),
        };
        let reg = builtin_catalog();
        let (v, clamped) = apply_filters(
            &decl,
            Point::new(5.0, 0.0, 0.0),
            Point::zero(),
            &reg,
            &Scenario::basic(),
            &SimConfig::default(),
            0.1,
        );
        assert!((v.norm() - 2.0).abs() < EPS);
        assert!((v.normalized().x - 1.0).abs() < EPS);
        assert_eq!(clamped, vec!["maintain_speed".to_string()]);
    }

    #[test]
    fn avoid_obstacles_zeroes_forward_component() {
        let mut scenario = Scenario::basic();
        scenario.obstacles.push(crate::sim::Obstacle {
            center: [2.0, 0.0, 0.0],
            radius: 0.5,
        });
        // surface is 1.5 - 0.7 = 0.8 m ahead... position at 0.7 toward it
        let pos = Point::new(0.7, 0.0, 0.0); // surface 0.8 m ahead
        let decl = FilterDecl {
            name: "f".into(),
            actions: vec![
                ActionInstance::new("avoid_obstacles").with_param("clearance", Literal::Number(1.0)),
            ],
            span: Default::default(),
        };
        let reg = builtin_catalog();
        let (v, _) = apply_filters(
            &decl,
            Point::new(2.0, 0.0, 0.0),
            pos,
            &reg,
            &scenario,
            &SimConfig::default(),
            0.1,
        );
        assert!(v.norm() < EPS, "forward motion should be blocked: {v:?}");
        // tangential motion is preserved
        let (v, _) = apply_filters(
            &decl,
            Point::new(2.0, 1.0, 0.0),
            pos,
            &reg,
            &scenario,
            &SimConfig::default(),
            0.1,
        );
        assert!(v.x.abs() < EPS && (v.y - 1.0).abs() < EPS);
    }

    #[test]
    fn threshold_hook_uses_stored_number() {
        let reg = builtin_catalog();
        let scenario = Scenario::basic();
        let mut invocations = BTreeMap::new();
        let mut store = BTreeMap::new();
        store.insert("level".to_string(), Value::Number(25.0));
        let cond = Condition {
            result_ref: "level".into(),
            processing_chain: vec![
                ActionInstance::new("threshold_exceeded").with_param("limit", Literal::Number(30.0)),
            ],
            comparator: crate::model::Comparator::Eq,
            reference_value: Literal::Bool(true),
            span: Default::default(),
        };
        let r = evaluate_condition(&cond, &store, &reg, &scenario, &mut invocations, Point::zero())
            .unwrap();
        assert!(!r, "25 does not exceed 30");
    }

    #[test]
    fn periodic_parallel_fires_on_schedule() {
        let src = r#"
mission "m" {
  parallel p every 1.0s { v: scan_wifi() }
  flow {
    takeoff(altitude=1.0)
    hover(duration_s=3.5) parallel p
    touchdown()
  }
}"#;
        let trace = run_src(src, &Scenario::basic());
        assert_eq!(trace.outcome, Outcome::Completed);
        let fires = trace.events_of_kind(
            |k| matches!(k, EventKind::ActionFired { action, .. } if action == "scan_wifi"),
        );
        // active for 3.5 s with period 1 s: floor(3.5/1) + 1 = 4 firings
        assert_eq!(fires.len(), 4, "{:?}", fires);
    }

    #[test]
    fn until_false_keeps_current_node() {
        let src = r#"
mission "m" {
  parallel p every 1.0s { v: read_sensor(name="gas") } until v > 10.0 -> out
  flow {
    takeoff(altitude=1.0)
    watch: hover(duration_s=100.0) parallel p
    out: touchdown()
  }
}"#;
        let mut scenario = Scenario::basic();
        scenario.script.push(crate::sim::ScriptRule {
            action: "read_sensor".into(),
            nth: Some(3),
            region: None,
            output: serde_json::json!(50.0),
        });
        let trace = run_src(src, &scenario);
        assert_eq!(trace.outcome, Outcome::Completed);
        let evals = trace.events_of_kind(
            |k| matches!(k, EventKind::BranchTaken { source, .. } if source == "p"),
        );
        assert_eq!(evals.len(), 3);
        assert!(matches!(
            evals[0].kind,
            EventKind::BranchTaken { result: false, .. }
        ));
        assert!(matches!(
            evals[2].kind,
            EventKind::BranchTaken { result: true, .. }
        ));
        // while false, the node never changed
        let watch_ticks: Vec<&Sample> = trace
            .samples
            .iter()
            .filter(|s| s.t > evals[0].t && s.t < evals[2].t)
            .collect();
        assert!(watch_ticks.iter().all(|s| s.node == "watch"));
    }

    #[test]
    fn battery_abort_returns_home() {
        let src = r#"
mission "m" {
  flow {
    takeoff(altitude=5.0)
    fly_to(target=point(100.0, 0.0, 5.0))
    touchdown()
  }
}"#;
        let mut scenario = Scenario::basic();
        scenario.battery_capacity_s = 30.0;
        let trace = run_src(src, &scenario);
        assert_eq!(trace.outcome, Outcome::Aborted("battery".into()));
        let abort_t = trace
            .find_event(|k| matches!(k, EventKind::AbortTriggered { .. }))
            .unwrap()
            .t;
        let home_t = trace
            .find_event(|k| matches!(k, EventKind::NodeEntered { id } if id == "_abort_fly_home"))
            .unwrap()
            .t;
        assert!(abort_t <= home_t);
        let end = trace.samples.last().unwrap();
        assert!(end.pos[0].abs() <= 0.06 && end.pos[1].abs() <= 0.06);
    }
}

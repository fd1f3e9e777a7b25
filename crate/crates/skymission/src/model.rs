//! In-memory mission representation: a directed graph of routing elements
//! with labeled edges, plus filter and parallel-block declarations.

use crate::diag::SourceSpan;
use crate::registry::{Registry, ValueType};
use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq)]
pub enum Literal {
    Bool(bool),
    Number(f64),
    Text(String),
    Point([f64; 3]),
    Rect([f64; 4]),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LiteralKind {
    Bool,
    Number,
    Text,
    Point,
    Rect,
}

impl Literal {
    pub fn kind(&self) -> LiteralKind {
        match self {
            Literal::Bool(_) => LiteralKind::Bool,
            Literal::Number(_) => LiteralKind::Number,
            Literal::Text(_) => LiteralKind::Text,
            Literal::Point(_) => LiteralKind::Point,
            Literal::Rect(_) => LiteralKind::Rect,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Literal::Number(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Literal::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for LiteralKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LiteralKind::Bool => "bool",
            LiteralKind::Number => "number",
            LiteralKind::Text => "text",
            LiteralKind::Point => "point",
            LiteralKind::Rect => "rect",
        };
        f.write_str(s)
    }
}

/// Ordered name/value parameter map. Order is preserved for printing;
/// key uniqueness is enforced at insertion.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamMap {
    entries: Vec<(String, Literal)>,
}

impl ParamMap {
    pub fn new() -> Self {
        ParamMap::default()
    }

    /// Returns false (and leaves the map unchanged) if the key already exists.
    pub fn insert(&mut self, key: String, value: Literal) -> bool {
        if self.get(&key).is_some() {
            return false;
        }
        self.entries.push((key, value));
        true
    }

    pub fn get(&self, key: &str) -> Option<&Literal> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Literal)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl FromIterator<(String, Literal)> for ParamMap {
    fn from_iter<I: IntoIterator<Item = (String, Literal)>>(iter: I) -> Self {
        let mut m = ParamMap::new();
        for (k, v) in iter {
            m.insert(k, v);
        }
        m
    }
}

/// A configured use of a registered action, optionally labeled so later
/// conditions can reference its result.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionInstance {
    pub result_label: Option<String>,
    pub action_name: String,
    pub params: ParamMap,
    pub span: SourceSpan,
}

impl ActionInstance {
    pub fn new(action_name: &str) -> Self {
        ActionInstance {
            result_label: None,
            action_name: action_name.to_string(),
            params: ParamMap::new(),
            span: SourceSpan::default(),
        }
    }

    pub fn labeled(label: &str, action_name: &str) -> Self {
        ActionInstance {
            result_label: Some(label.to_string()),
            ..ActionInstance::new(action_name)
        }
    }

    pub fn with_param(mut self, key: &str, value: Literal) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparator {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparator {
    pub fn is_ordering(self) -> bool {
        matches!(
            self,
            Comparator::Lt | Comparator::Le | Comparator::Gt | Comparator::Ge
        )
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Eq => "==",
            Comparator::Ne => "!=",
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
        }
    }
}

/// Reference to one prior action result, run through a chain of processing
/// actions (innermost first) and compared against a literal.
#[derive(Clone, Debug, PartialEq)]
pub struct Condition {
    pub result_ref: String,
    pub processing_chain: Vec<ActionInstance>,
    pub comparator: Comparator,
    pub reference_value: Literal,
    pub span: SourceSpan,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    TakeOff,
    TouchDown,
    FlyTo,
    FlyInArea,
    FlyHome,
    Hover,
    Branch,
}

impl NodeKind {
    pub fn is_routing(self) -> bool {
        self != NodeKind::Branch
    }

    pub fn keyword(self) -> &'static str {
        match self {
            NodeKind::TakeOff => "takeoff",
            NodeKind::TouchDown => "touchdown",
            NodeKind::FlyTo => "fly_to",
            NodeKind::FlyInArea => "fly_in_area",
            NodeKind::FlyHome => "fly_home",
            NodeKind::Hover => "hover",
            NodeKind::Branch => "branch",
        }
    }

    pub fn from_keyword(kw: &str) -> Option<NodeKind> {
        Some(match kw {
            "takeoff" => NodeKind::TakeOff,
            "touchdown" => NodeKind::TouchDown,
            "fly_to" => NodeKind::FlyTo,
            "fly_in_area" => NodeKind::FlyInArea,
            "fly_home" => NodeKind::FlyHome,
            "hover" => NodeKind::Hover,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    pub params: ParamMap,
    pub embedded_actions: Vec<ActionInstance>,
    pub filter_ref: Option<String>,
    pub parallel_refs: Vec<String>,
    pub condition: Option<Condition>,
    pub span: SourceSpan,
}

impl Node {
    pub fn routing(id: &str, kind: NodeKind) -> Self {
        Node {
            id: id.to_string(),
            kind,
            params: ParamMap::new(),
            embedded_actions: Vec::new(),
            filter_ref: None,
            parallel_refs: Vec::new(),
            condition: None,
            span: SourceSpan::default(),
        }
    }

    pub fn branch(id: &str, condition: Condition) -> Self {
        Node {
            condition: Some(condition),
            ..Node::routing(id, NodeKind::Branch)
        }
    }

    pub fn with_param(mut self, key: &str, value: Literal) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeLabel {
    Next,
    True,
    False,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub label: EdgeLabel,
}

impl Edge {
    pub fn new(from: &str, to: &str, label: EdgeLabel) -> Self {
        Edge {
            from: from.to_string(),
            to: to.to_string(),
            label,
        }
    }
}

/// Named, priority-ordered list of filter actions; first = highest priority.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterDecl {
    pub name: String,
    pub actions: Vec<ActionInstance>,
    pub span: SourceSpan,
}

/// Named action set running concurrently with the routing elements that
/// reference it, optionally periodic and optionally carrying an `until`
/// condition whose True case jumps to `target`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParallelDecl {
    pub name: String,
    pub period_s: Option<f64>,
    pub actions: Vec<ActionInstance>,
    pub until: Option<(Condition, String)>,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mission {
    pub name: String,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub filters: Vec<FilterDecl>,
    pub parallels: Vec<ParallelDecl>,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),
    #[error("edge references unknown node `{0}`")]
    DanglingEdge(String),
    #[error("mission must contain exactly one takeoff node (found {0})")]
    MissingTakeOff(usize),
    #[error("mission must contain exactly one touchdown node (found {0})")]
    MissingTouchDown(usize),
    #[error("node `{0}` references undeclared filter `{1}`")]
    UnknownFilter(String, String),
    #[error("node `{0}` references undeclared parallel `{1}`")]
    UnknownParallel(String, String),
    #[error("parallel `{0}` until-target `{1}` is not a routing node")]
    BadUntilTarget(String, String),
    #[error("branch `{0}` must have exactly one True and one False outgoing edge")]
    BadBranchEdges(String),
    #[error("node `{0}` must have exactly one outgoing Next edge")]
    BadNextEdges(String),
    #[error("takeoff node `{0}` must not have an incoming main-flow edge")]
    TakeOffHasIncoming(String),
    #[error("node `{0}` carries a condition but is not a branch")]
    ConditionOnRouting(String),
    #[error("branch `{0}` is missing its condition")]
    BranchWithoutCondition(String),
    #[error("branch `{0}` cannot embed actions")]
    EmbeddedOnBranch(String),
    #[error("duplicate result label `{0}`")]
    DuplicateResultLabel(String),
    #[error("filter `{0}` has no actions")]
    EmptyFilter(String),
    #[error("parallel `{0}` has no actions")]
    EmptyParallel(String),
    #[error("parallel `{0}` period must be positive")]
    BadPeriod(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
}

impl ModelError {
    /// Stable diagnostic code for this error class (see docs/diagnostics.md).
    pub fn code(&self) -> &'static str {
        use ModelError::*;
        match self {
            DuplicateId(_) | DuplicateResultLabel(_) => "M001",
            DanglingEdge(_) | BadUntilTarget(_, _) => "M002",
            MissingTakeOff(_) | TakeOffHasIncoming(_) => "M003",
            MissingTouchDown(_) => "M004",
            UnknownFilter(_, _) => "M005",
            UnknownParallel(_, _) => "M006",
            BadBranchEdges(_) | BadNextEdges(_) => "M007",
            ConditionOnRouting(_) | BranchWithoutCondition(_) | EmbeddedOnBranch(_) => "M008",
            EmptyFilter(_) | EmptyParallel(_) | BadPeriod(_) => "M009",
            UnknownNode(_) => "M010",
        }
    }
}

impl Mission {
    /// Validates all structural invariants and returns the mission, with
    /// branch edges canonicalized True-then-False. Node order is preserved.
    pub fn build(
        name: &str,
        nodes: Vec<Node>,
        edges: Vec<Edge>,
        filters: Vec<FilterDecl>,
        parallels: Vec<ParallelDecl>,
    ) -> Result<Mission, Vec<ModelError>> {
        let mut errors = Vec::new();

        let mut ids = HashSet::new();
        for n in &nodes {
            if !ids.insert(n.id.clone()) {
                errors.push(ModelError::DuplicateId(n.id.clone()));
            }
        }
        let mut decl_names = HashSet::new();
        for f in &filters {
            if !decl_names.insert(f.name.clone()) {
                errors.push(ModelError::DuplicateId(f.name.clone()));
            }
            if f.actions.is_empty() {
                errors.push(ModelError::EmptyFilter(f.name.clone()));
            }
        }
        for p in &parallels {
            if !decl_names.insert(p.name.clone()) {
                errors.push(ModelError::DuplicateId(p.name.clone()));
            }
            if p.actions.is_empty() {
                errors.push(ModelError::EmptyParallel(p.name.clone()));
            }
            if let Some(period) = p.period_s {
                // negated comparison is deliberate: it rejects NaN as well
                #[allow(clippy::neg_cmp_op_on_partial_ord)]
                if !(period > 0.0) {
                    errors.push(ModelError::BadPeriod(p.name.clone()));
                }
            }
        }

        for e in &edges {
            for endpoint in [&e.from, &e.to] {
                if !ids.contains(endpoint) {
                    errors.push(ModelError::DanglingEdge(endpoint.clone()));
                }
            }
        }

        let takeoffs = nodes.iter().filter(|n| n.kind == NodeKind::TakeOff).count();
        if takeoffs != 1 {
            errors.push(ModelError::MissingTakeOff(takeoffs));
        }
        let touchdowns = nodes
            .iter()
            .filter(|n| n.kind == NodeKind::TouchDown)
            .count();
        if touchdowns != 1 {
            errors.push(ModelError::MissingTouchDown(touchdowns));
        }

        // Edge cardinality per node kind.
        for n in &nodes {
            let outgoing: Vec<&Edge> = edges.iter().filter(|e| e.from == n.id).collect();
            match n.kind {
                NodeKind::Branch => {
                    let t = outgoing.iter().filter(|e| e.label == EdgeLabel::True).count();
                    let f = outgoing
                        .iter()
                        .filter(|e| e.label == EdgeLabel::False)
                        .count();
                    if t != 1 || f != 1 || outgoing.len() != 2 {
                        errors.push(ModelError::BadBranchEdges(n.id.clone()));
                    }
                    if n.condition.is_none() {
                        errors.push(ModelError::BranchWithoutCondition(n.id.clone()));
                    }
                    if !n.embedded_actions.is_empty() {
                        errors.push(ModelError::EmbeddedOnBranch(n.id.clone()));
                    }
                }
                NodeKind::TouchDown => {
                    if !outgoing.is_empty() {
                        errors.push(ModelError::BadNextEdges(n.id.clone()));
                    }
                    if n.condition.is_some() {
                        errors.push(ModelError::ConditionOnRouting(n.id.clone()));
                    }
                }
                _ => {
                    let next = outgoing.iter().filter(|e| e.label == EdgeLabel::Next).count();
                    if next != 1 || outgoing.len() != 1 {
                        errors.push(ModelError::BadNextEdges(n.id.clone()));
                    }
                    if n.condition.is_some() {
                        errors.push(ModelError::ConditionOnRouting(n.id.clone()));
                    }
                }
            }
            if n.kind == NodeKind::TakeOff && edges.iter().any(|e| e.to == n.id) {
                errors.push(ModelError::TakeOffHasIncoming(n.id.clone()));
            }
        }

        // Declaration references and labels.
        let filter_names: HashSet<&str> = filters.iter().map(|f| f.name.as_str()).collect();
        let parallel_names: HashSet<&str> = parallels.iter().map(|p| p.name.as_str()).collect();
        for n in &nodes {
            if let Some(f) = &n.filter_ref {
                if !filter_names.contains(f.as_str()) {
                    errors.push(ModelError::UnknownFilter(n.id.clone(), f.clone()));
                }
            }
            for p in &n.parallel_refs {
                if !parallel_names.contains(p.as_str()) {
                    errors.push(ModelError::UnknownParallel(n.id.clone(), p.clone()));
                }
            }
        }
        for p in &parallels {
            if let Some((_, target)) = &p.until {
                let ok = nodes
                    .iter()
                    .any(|n| &n.id == target && n.kind.is_routing());
                if !ok {
                    errors.push(ModelError::BadUntilTarget(p.name.clone(), target.clone()));
                }
            }
        }

        // Result labels are unique mission-wide.
        let mut labels = HashSet::new();
        let all_instances = nodes
            .iter()
            .flat_map(|n| n.embedded_actions.iter())
            .chain(parallels.iter().flat_map(|p| p.actions.iter()))
            .chain(filters.iter().flat_map(|f| f.actions.iter()));
        for inst in all_instances {
            if let Some(l) = &inst.result_label {
                if !labels.insert(l.clone()) {
                    errors.push(ModelError::DuplicateResultLabel(l.clone()));
                }
            }
        }

        if !errors.is_empty() {
            return Err(errors);
        }

        // Canonicalize branch edge order: True before False, preserving the
        // relative order of everything else.
        let mut edges = edges;
        let branch_ids: HashSet<&str> = nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Branch)
            .map(|n| n.id.as_str())
            .collect();
        edges.sort_by_key(|e| {
            if branch_ids.contains(e.from.as_str()) && e.label == EdgeLabel::False {
                1
            } else {
                0
            }
        });

        Ok(Mission {
            name: name.to_string(),
            nodes,
            edges,
            filters,
            parallels,
        })
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn filter(&self, name: &str) -> Option<&FilterDecl> {
        self.filters.iter().find(|f| f.name == name)
    }

    pub fn parallel(&self, name: &str) -> Option<&ParallelDecl> {
        self.parallels.iter().find(|p| p.name == name)
    }

    pub fn takeoff(&self) -> &Node {
        self.nodes
            .iter()
            .find(|n| n.kind == NodeKind::TakeOff)
            .expect("valid mission has a takeoff node")
    }

    pub fn touchdown(&self) -> &Node {
        self.nodes
            .iter()
            .find(|n| n.kind == NodeKind::TouchDown)
            .expect("valid mission has a touchdown node")
    }

    /// Outgoing edges of `id` in (canonicalized) declaration order.
    pub fn successors(&self, id: &str) -> Result<Vec<(EdgeLabel, &str)>, ModelError> {
        if self.node(id).is_none() {
            return Err(ModelError::UnknownNode(id.to_string()));
        }
        Ok(self
            .edges
            .iter()
            .filter(|e| e.from == id)
            .map(|e| (e.label, e.to.as_str()))
            .collect())
    }

    /// The unique Next successor of a routing node, if any.
    pub fn next_of(&self, id: &str) -> Option<&str> {
        self.edges
            .iter()
            .find(|e| e.from == id && e.label == EdgeLabel::Next)
            .map(|e| e.to.as_str())
    }

    /// The immediately preceding routing element on the main flow: the source
    /// of the first incoming edge (in edge order) that is a routing node.
    pub fn main_flow_predecessor(&self, id: &str) -> Option<&Node> {
        self.edges
            .iter()
            .filter(|e| e.to == id)
            .filter_map(|e| self.node(&e.from))
            .find(|n| n.kind.is_routing())
    }

    /// Result labels visible to a condition evaluated at node `at`: the
    /// labels of actions embedded in the immediately preceding routing
    /// element, plus those of parallel blocks attached to it. Nothing older.
    pub fn visible_result_instances(
        &self,
        at: &str,
    ) -> Result<Vec<(&str, &ActionInstance)>, ModelError> {
        if self.node(at).is_none() {
            return Err(ModelError::UnknownNode(at.to_string()));
        }
        let mut out = Vec::new();
        if let Some(prev) = self.main_flow_predecessor(at) {
            for inst in &prev.embedded_actions {
                if let Some(l) = &inst.result_label {
                    out.push((l.as_str(), inst));
                }
            }
            for pname in &prev.parallel_refs {
                if let Some(p) = self.parallel(pname) {
                    for inst in &p.actions {
                        if let Some(l) = &inst.result_label {
                            out.push((l.as_str(), inst));
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Typed view of [`visible_result_instances`]; labels whose action is
    /// unknown to the registry are skipped (the analyzer reports them).
    pub fn visible_results(
        &self,
        at: &str,
        reg: &Registry,
    ) -> Result<Vec<(String, ValueType)>, ModelError> {
        Ok(self
            .visible_result_instances(at)?
            .into_iter()
            .filter_map(|(label, inst)| {
                reg.lookup(&inst.action_name)
                    .map(|def| (label.to_string(), def.output_type))
            })
            .collect())
    }

    /// Result labels visible to a parallel block's own `until` condition:
    /// its own actions plus actions embedded in every attaching node.
    pub fn until_scope_instances<'a>(
        &'a self,
        parallel: &'a ParallelDecl,
    ) -> Vec<(&'a str, &'a ActionInstance)> {
        let mut out = Vec::new();
        for inst in &parallel.actions {
            if let Some(l) = &inst.result_label {
                out.push((l.as_str(), inst));
            }
        }
        for n in &self.nodes {
            if n.parallel_refs.iter().any(|p| p == &parallel.name) {
                for inst in &n.embedded_actions {
                    if let Some(l) = &inst.result_label {
                        out.push((l.as_str(), inst));
                    }
                }
            }
        }
        out
    }

    /// All nodes reachable from the takeoff node following any edge label.
    pub fn reachable(&self) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let Some(start) = self.nodes.iter().find(|n| n.kind == NodeKind::TakeOff) else {
            return seen;
        };
        let mut queue = VecDeque::new();
        queue.push_back(start.id.clone());
        seen.insert(start.id.clone());
        while let Some(id) = queue.pop_front() {
            for e in self.edges.iter().filter(|e| e.from == id) {
                if seen.insert(e.to.clone()) {
                    queue.push_back(e.to.clone());
                }
            }
        }
        seen
    }

    /// Nodes from which the touchdown node is reachable.
    pub fn reaches_touchdown(&self) -> BTreeSet<String> {
        let mut incoming: HashMap<&str, Vec<&str>> = HashMap::new();
        for e in &self.edges {
            incoming.entry(e.to.as_str()).or_default().push(e.from.as_str());
        }
        let mut seen = BTreeSet::new();
        let Some(end) = self.nodes.iter().find(|n| n.kind == NodeKind::TouchDown) else {
            return seen;
        };
        let mut queue = VecDeque::new();
        queue.push_back(end.id.as_str());
        seen.insert(end.id.to_string());
        while let Some(id) = queue.pop_front() {
            if let Some(preds) = incoming.get(id) {
                for p in preds {
                    if seen.insert(p.to_string()) {
                        queue.push_back(p);
                    }
                }
            }
        }
        seen
    }

    /// All action instances in the mission with the scope they appear in.
    pub fn all_labeled_instances(&self) -> Vec<&ActionInstance> {
        self.nodes
            .iter()
            .flat_map(|n| n.embedded_actions.iter())
            .chain(self.parallels.iter().flat_map(|p| p.actions.iter()))
            .chain(self.filters.iter().flat_map(|f| f.actions.iter()))
            .filter(|i| i.result_label.is_some())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_nodes() -> (Vec<Node>, Vec<Edge>) {
        let takeoff = Node::routing("t", NodeKind::TakeOff).with_param("altitude", Literal::Number(10.0));
        let touchdown = Node::routing("d", NodeKind::TouchDown);
        let edges = vec![Edge::new("t", "d", EdgeLabel::Next)];
        (vec![takeoff, touchdown], edges)
    }

    #[test]
    fn minimal_mission_builds() {
        let (nodes, edges) = minimal_nodes();
        let m = Mission::build("m", nodes, edges, vec![], vec![]).unwrap();
        assert_eq!(m.nodes.len(), 2);
        assert_eq!(m.edges.len(), 1);
        assert_eq!(m.edges[0].label, EdgeLabel::Next);
    }

    #[test]
    fn two_takeoffs_rejected() {
        let (mut nodes, mut edges) = minimal_nodes();
        nodes.insert(1, Node::routing("t2", NodeKind::TakeOff));
        edges[0].from = "t2".into();
        edges.push(Edge::new("t", "t2", EdgeLabel::Next));
        let errs = Mission::build("m", nodes, edges, vec![], vec![]).unwrap_err();
        assert!(errs.iter().any(|e| matches!(e, ModelError::MissingTakeOff(2))));
    }

    #[test]
    fn dangling_edge_rejected() {
        let (nodes, mut edges) = minimal_nodes();
        edges.push(Edge::new("t", "nowhere", EdgeLabel::Next));
        let errs = Mission::build("m", nodes, edges, vec![], vec![]).unwrap_err();
        assert!(errs
            .iter()
            .any(|e| matches!(e, ModelError::DanglingEdge(id) if id == "nowhere")));
    }

    #[test]
    fn successors_of_sink_is_empty() {
        let (nodes, edges) = minimal_nodes();
        let m = Mission::build("m", nodes, edges, vec![], vec![]).unwrap();
        assert!(m.successors("d").unwrap().is_empty());
        assert!(matches!(m.successors("zzz"), Err(ModelError::UnknownNode(_))));
    }

    #[test]
    fn reachable_excludes_orphan() {
        // t -> d plus an orphan hover with its own edge to d's... not allowed:
        // hover needs an outgoing Next edge, so point it at the touchdown.
        let (mut nodes, mut edges) = minimal_nodes();
        nodes.push(
            Node::routing("orphan", NodeKind::Hover).with_param("duration_s", Literal::Number(1.0)),
        );
        edges.push(Edge::new("orphan", "d", EdgeLabel::Next));
        let m = Mission::build("m", nodes, edges, vec![], vec![]).unwrap();
        let r = m.reachable();
        assert!(r.contains("t") && r.contains("d"));
        assert!(!r.contains("orphan"));
    }

    #[test]
    fn branch_edges_canonicalized_true_first() {
        let (mut nodes, mut edges) = minimal_nodes();
        let cond = Condition {
            result_ref: "x".into(),
            processing_chain: vec![],
            comparator: Comparator::Eq,
            reference_value: Literal::Bool(true),
            span: SourceSpan::default(),
        };
        nodes[0].embedded_actions.push(ActionInstance::labeled("x", "scan_wifi"));
        nodes.insert(1, Node::branch("b", cond));
        nodes.insert(
            2,
            Node::routing("h", NodeKind::Hover).with_param("duration_s", Literal::Number(1.0)),
        );
        edges.clear();
        edges.push(Edge::new("t", "b", EdgeLabel::Next));
        edges.push(Edge::new("b", "h", EdgeLabel::False));
        edges.push(Edge::new("b", "d", EdgeLabel::True));
        edges.push(Edge::new("h", "d", EdgeLabel::Next));
        let m = Mission::build("m", nodes, edges, vec![], vec![]).unwrap();
        let succ = m.successors("b").unwrap();
        assert_eq!(succ, vec![(EdgeLabel::True, "d"), (EdgeLabel::False, "h")]);
    }

    #[test]
    fn visible_results_stops_one_element_back() {
        // t(with label a) -> hover(with label b) -> branch; only b visible.
        let mut t = Node::routing("t", NodeKind::TakeOff);
        t.embedded_actions.push(ActionInstance::labeled("a", "take_picture"));
        let mut h = Node::routing("h", NodeKind::Hover);
        h.params.insert("duration_s".into(), Literal::Number(1.0));
        h.embedded_actions.push(ActionInstance::labeled("b", "take_picture"));
        let cond = Condition {
            result_ref: "b".into(),
            processing_chain: vec![],
            comparator: Comparator::Ne,
            reference_value: Literal::Text("".into()),
            span: SourceSpan::default(),
        };
        let b = Node::branch("br", cond);
        let d = Node::routing("d", NodeKind::TouchDown);
        let edges = vec![
            Edge::new("t", "h", EdgeLabel::Next),
            Edge::new("h", "br", EdgeLabel::Next),
            Edge::new("br", "d", EdgeLabel::True),
            Edge::new("br", "h", EdgeLabel::False),
        ];
        let m = Mission::build("m", vec![t, h, b, d], edges, vec![], vec![]).unwrap();
        let vis: Vec<&str> = m
            .visible_result_instances("br")
            .unwrap()
            .into_iter()
            .map(|(l, _)| l)
            .collect();
        assert_eq!(vis, vec!["b"]);
    }

    #[test]
    fn duplicate_result_label_rejected() {
        let (mut nodes, edges) = minimal_nodes();
        nodes[0]
            .embedded_actions
            .push(ActionInstance::labeled("x", "take_picture"));
        nodes[0]
            .embedded_actions
            .push(ActionInstance::labeled("x", "take_picture"));
        let errs = Mission::build("m", nodes, edges, vec![], vec![]).unwrap_err();
        assert!(errs
            .iter()
            .any(|e| matches!(e, ModelError::DuplicateResultLabel(l) if l == "x")));
    }
}

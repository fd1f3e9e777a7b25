//! Whole-mission semantic validation: structure (S-series), reference
//! resolution (R-series) and type consistency (T-series). Every violation is
//! reported; nothing aborts. Codes are listed in `docs/diagnostics.md`.

use crate::diag::{sort_diagnostics, Diagnostic, SourceSpan};
use crate::model::{ActionInstance, Condition, Literal, LiteralKind, Mission, Node, NodeKind};
use crate::registry::{Category, Registry, ValueType};
use std::collections::BTreeMap;

#[derive(Clone, Debug)]
pub struct AnalysisReport {
    pub diagnostics: Vec<Diagnostic>,
    pub resolved_types: BTreeMap<String, ValueType>,
}

impl AnalysisReport {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(|d| d.is_error())
    }

    pub fn error_count(&self) -> usize {
        self.diagnostics.iter().filter(|d| d.is_error()).count()
    }
}

/// Parameter schema for routing elements, validated with the same machinery
/// as registry actions.
fn routing_schema(kind: NodeKind) -> &'static [(&'static str, LiteralKind, bool)] {
    match kind {
        NodeKind::TakeOff => &[("altitude", LiteralKind::Number, true)],
        NodeKind::TouchDown | NodeKind::FlyHome | NodeKind::Branch => &[],
        NodeKind::FlyTo => &[("target", LiteralKind::Point, true)],
        NodeKind::FlyInArea => &[
            ("area", LiteralKind::Rect, true),
            ("spacing", LiteralKind::Number, true),
        ],
        NodeKind::Hover => &[("duration_s", LiteralKind::Number, true)],
    }
}

fn literal_value_type(lit: &Literal) -> Option<ValueType> {
    match lit.kind() {
        LiteralKind::Bool => Some(ValueType::Bool),
        LiteralKind::Number => Some(ValueType::Number),
        LiteralKind::Text => Some(ValueType::Text),
        LiteralKind::Point | LiteralKind::Rect => None,
    }
}

/// Folds a condition's processing chain innermost-out and returns the final
/// value type. `scope` maps visible result labels to their types.
pub fn condition_type(
    c: &Condition,
    reg: &Registry,
    scope: &BTreeMap<String, ValueType>,
) -> Result<ValueType, Diagnostic> {
    let mut current = *scope.get(&c.result_ref).ok_or_else(|| {
        Diagnostic::error(
            "R002",
            format!("result `{}` is not in scope here", c.result_ref),
            c.span,
        )
    })?;
    for (pos, step) in c.processing_chain.iter().enumerate() {
        let def = reg.lookup(&step.action_name).ok_or_else(|| {
            Diagnostic::error(
                "R003",
                format!("unknown processing action `{}`", step.action_name),
                step.span,
            )
        })?;
        if def.category != Category::Processing {
            return Err(Diagnostic::error(
                "T007",
                format!("action `{}` is not a processing action", def.name),
                step.span,
            ));
        }
        let wants = def.input_type.expect("processing actions have input types");
        if wants != current {
            return Err(Diagnostic::error(
                "T001",
                format!(
                    "type mismatch at chain position {}: `{}` expects {} but receives {}",
                    pos + 1,
                    def.name,
                    wants,
                    current
                ),
                step.span,
            ));
        }
        current = def.output_type;
    }
    Ok(current)
}

struct Analysis<'a> {
    mission: &'a Mission,
    reg: &'a Registry,
    diagnostics: Vec<Diagnostic>,
    resolved_types: BTreeMap<String, ValueType>,
}

pub fn analyze(m: &Mission, reg: &Registry) -> AnalysisReport {
    let mut a = Analysis {
        mission: m,
        reg,
        diagnostics: Vec::new(),
        resolved_types: BTreeMap::new(),
    };
    a.structure();
    a.instances();
    a.conditions();
    sort_diagnostics(&mut a.diagnostics);
    AnalysisReport {
        diagnostics: a.diagnostics,
        resolved_types: a.resolved_types,
    }
}

impl<'a> Analysis<'a> {
    fn err(&mut self, code: &str, msg: String, span: SourceSpan) {
        self.diagnostics.push(Diagnostic::error(code, msg, span));
    }

    fn structure(&mut self) {
        let reachable = self.mission.reachable();
        let reaches_end = self.mission.reaches_touchdown();
        for n in &self.mission.nodes {
            if !reachable.contains(&n.id) {
                // dead code is an error, not a warning
                self.err(
                    "S001",
                    format!("node `{}` is unreachable from takeoff", n.id),
                    n.span,
                );
            } else if !reaches_end.contains(&n.id) {
                self.err(
                    "S002",
                    format!("touchdown is unreachable from node `{}`", n.id),
                    n.span,
                );
            }
        }
    }

    fn check_instance(&mut self, inst: &ActionInstance, expected: Category, context: &str) {
        let Some(def) = self.reg.lookup(&inst.action_name) else {
            self.err(
                "R001",
                format!("unknown action `{}`", inst.action_name),
                inst.span,
            );
            return;
        };
        if def.category != expected {
            let kind = match expected {
                Category::Regular => "a regular action",
                Category::Processing => "a processing action",
                Category::Filter => "a filter action",
            };
            self.err(
                "T007",
                format!("`{}` is not {kind} (used in {context})", def.name),
                inst.span,
            );
        }
        self.diagnostics
            .extend(Registry::validate_instance(inst, def));
        if let Some(label) = &inst.result_label {
            self.resolved_types.insert(label.clone(), def.output_type);
        }
    }

    fn check_routing_params(&mut self, n: &Node) {
        let schema = routing_schema(n.kind);
        for (key, value) in n.params.iter() {
            match schema.iter().find(|(name, _, _)| *name == key) {
                None => self.err(
                    "T004",
                    format!("unknown parameter `{}` for `{}`", key, n.kind.keyword()),
                    n.span,
                ),
                Some((_, kind, _)) if *kind != value.kind() => self.err(
                    "T006",
                    format!(
                        "parameter `{}` of `{}` expects {} but got {}",
                        key,
                        n.kind.keyword(),
                        kind,
                        value.kind()
                    ),
                    n.span,
                ),
                Some(_) => {}
            }
        }
        for (name, _, required) in schema {
            if *required && n.params.get(name).is_none() {
                self.err(
                    "T005",
                    format!(
                        "missing required parameter `{}` for `{}`",
                        name,
                        n.kind.keyword()
                    ),
                    n.span,
                );
            }
        }
    }

    fn instances(&mut self) {
        for n in &self.mission.nodes {
            self.check_routing_params(n);
            for inst in &n.embedded_actions {
                self.check_instance(inst, Category::Regular, "an embedded action block");
            }
        }
        for p in &self.mission.parallels {
            for inst in &p.actions {
                self.check_instance(inst, Category::Regular, "a parallel block");
            }
        }
        for f in &self.mission.filters {
            for inst in &f.actions {
                self.check_instance(inst, Category::Filter, "a filter declaration");
            }
        }
    }

    fn scope_types(&self, instances: &[(&str, &ActionInstance)]) -> BTreeMap<String, ValueType> {
        instances
            .iter()
            .filter_map(|(label, inst)| {
                self.reg
                    .lookup(&inst.action_name)
                    .map(|def| (label.to_string(), def.output_type))
            })
            .collect()
    }

    fn check_condition(&mut self, c: &Condition, scope: &BTreeMap<String, ValueType>) {
        let final_type = match condition_type(c, self.reg, scope) {
            Ok(t) => t,
            Err(d) => {
                self.diagnostics.push(d);
                return;
            }
        };
        if c.comparator.is_ordering() {
            if final_type != ValueType::Number {
                self.err(
                    "T003",
                    format!(
                        "ordering comparator `{}` requires Number, got {}",
                        c.comparator.symbol(),
                        final_type
                    ),
                    c.span,
                );
                return;
            }
            if c.reference_value.kind() != LiteralKind::Number {
                self.err(
                    "T002",
                    format!(
                        "comparator `{}` requires a number literal, got {}",
                        c.comparator.symbol(),
                        c.reference_value.kind()
                    ),
                    c.span,
                );
            }
            return;
        }
        match literal_value_type(&c.reference_value) {
            Some(lit_type) if lit_type == final_type => {}
            Some(lit_type) => self.err(
                "T002",
                format!("cannot compare {final_type} with a {lit_type} literal"),
                c.span,
            ),
            None => self.err(
                "T002",
                format!(
                    "{} literals cannot appear in comparisons",
                    c.reference_value.kind()
                ),
                c.span,
            ),
        }
        if matches!(final_type, ValueType::Unit) {
            self.err("T002", "cannot compare Unit values".into(), c.span);
        }
    }

    fn conditions(&mut self) {
        for n in &self.mission.nodes {
            if let Some(c) = &n.condition {
                let scope = match self.mission.visible_result_instances(&n.id) {
                    Ok(insts) => self.scope_types(&insts),
                    Err(_) => BTreeMap::new(),
                };
                self.check_condition(c, &scope);
            }
        }
        let parallels = self.mission.parallels.clone();
        for p in &parallels {
            if let Some((c, _)) = &p.until {
                let insts = self.mission.until_scope_instances(p);
                let scope = self.scope_types(&insts);
                self.check_condition(c, &scope);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Comparator;
    use crate::parser::parse;
    use crate::registry::builtin_catalog;

    fn analyze_src(src: &str) -> AnalysisReport {
        let m = parse(src).unwrap();
        analyze(&m, &builtin_catalog())
    }

    #[test]
    fn ordering_on_text_is_t003() {
        let report = analyze_src(
            r#"
mission "m" {
  flow {
    takeoff(altitude=2.0) { shot: take_picture() }
    if recognize_image(shot) < 3.0 -> done else -> done
    done: touchdown()
  }
}"#,
        );
        assert!(report.diagnostics.iter().any(|d| d.code == "T003"));
    }

    #[test]
    fn out_of_scope_reference_is_r002() {
        // `old` is defined two routing elements before the branch.
        let report = analyze_src(
            r#"
mission "m" {
  flow {
    takeoff(altitude=2.0) { old: take_picture() }
    hover(duration_s=1.0)
    if recognize_image(old) == "x" -> done else -> done
    done: touchdown()
  }
}"#,
        );
        assert!(report.diagnostics.iter().any(|d| d.code == "R002"));
    }

    #[test]
    fn chain_type_mismatch_reports_position() {
        let report = analyze_src(
            r#"
mission "m" {
  flow {
    takeoff(altitude=2.0) { shot: take_picture() }
    if recognize_image(recognize_image(shot)) == "x" -> done else -> done
    done: touchdown()
  }
}"#,
        );
        let d = report
            .diagnostics
            .iter()
            .find(|d| d.code == "T001")
            .expect("T001 expected");
        assert!(d.message.contains("position 2"), "{}", d.message);
    }

    #[test]
    fn empty_chain_over_bool_result() {
        let reg = builtin_catalog();
        let mut scope = BTreeMap::new();
        scope.insert("flag".to_string(), ValueType::Bool);
        let c = Condition {
            result_ref: "flag".into(),
            processing_chain: vec![],
            comparator: Comparator::Eq,
            reference_value: Literal::Bool(true),
            span: SourceSpan::default(),
        };
        assert_eq!(condition_type(&c, &reg, &scope).unwrap(), ValueType::Bool);
    }

    #[test]
    fn unreachable_node_is_s001() {
        let report = analyze_src(
            r#"
mission "m" {
  flow {
    takeoff(altitude=2.0) { x: scan_wifi() }
    if x > 1.0 -> done else -> done
    dead: hover(duration_s=1.0)
    done: touchdown()
  }
}"#,
        );
        assert!(report.diagnostics.iter().any(|d| d.code == "S001"));
    }

    #[test]
    fn inescapable_cycle_is_s002() {
        let report = analyze_src(
            r#"
mission "m" {
  flow {
    takeoff(altitude=2.0)
    loop: hover(duration_s=1.0) { x: scan_wifi() }
    if x > 1.0 -> loop else -> loop
    touchdown()
  }
}"#,
        );
        assert!(report.diagnostics.iter().any(|d| d.code == "S002"));
    }

    #[test]
    fn clean_mission_resolves_types() {
        let report = analyze_src(
            r#"
mission "m" {
  parallel p every 5.0s { shot: take_infrared_picture() }
  flow {
    takeoff(altitude=2.0)
    scan: hover(duration_s=20.0) parallel p
    if recognize_image(shot) == "hit" -> done else -> scan
    done: touchdown()
  }
}"#,
        );
        assert!(!report.has_errors(), "{:?}", report.diagnostics);
        assert_eq!(report.resolved_types.get("shot"), Some(&ValueType::Image));
    }

    #[test]
    fn deterministic_diagnostics() {
        let src = r#"
mission "m" {
  flow {
    takeoff(altitude=2.0) { a: bogus_one() b: bogus_two() }
    if recognize_image(a) < 1.0 -> done else -> done
    done: touchdown()
  }
}"#;
        let r1 = analyze_src(src);
        let r2 = analyze_src(src);
        assert_eq!(r1.diagnostics, r2.diagnostics);
        assert!(r1.diagnostics.len() >= 2);
    }
}

//! Target code generation: a line-oriented flight script for the onboard
//! interpreter (see `script`) and Graphviz DOT for visual inspection.
//!
//! Flight script statements, one per line:
//!
//! ```text
//! MISSION "name"
//! FILTER f / ACT ... / ENDFILTER
//! PAR p [EVERY n] / ACT ... / [UNTIL cond -> label] / ENDPAR
//! LABEL id                      -- starts a flow node
//! TAKEOFF n | GOTO x y z | SWEEP x0 y0 x1 y1 spacing | HOME
//! HOVER n | TOUCHDOWN | BR cond -> t ELSE -> f
//! ACT [label:] action(args)     -- embedded in the current node
//! USEFILTER f / USEPAR p
//! ```
//!
//! The script preserves every node id, declaration, and condition, so the
//! interpreter rebuilds the exact mission graph and replays it bit-for-bit.

use crate::model::{EdgeLabel, Literal, Mission, Node, NodeKind};
use crate::printer::{format_condition, format_number};
use std::fmt::Write;

fn script_params(inst: &crate::model::ActionInstance) -> String {
    let args = inst
        .params
        .iter()
        .map(|(k, v)| format!("{k} = {}", crate::printer::format_literal(v)))
        .collect::<Vec<_>>()
        .join(", ");
    match &inst.result_label {
        Some(l) => format!("{l}: {}({args})", inst.action_name),
        None => format!("{}({args})", inst.action_name),
    }
}

fn motion_line(n: &Node, m: &Mission, out: &mut String) {
    match n.kind {
        NodeKind::TakeOff => {
            let alt = n.params.get("altitude").and_then(Literal::as_number).unwrap_or(10.0);
            writeln!(out, "TAKEOFF {}", format_number(alt)).unwrap();
        }
        NodeKind::TouchDown => writeln!(out, "TOUCHDOWN").unwrap(),
        NodeKind::FlyHome => writeln!(out, "HOME").unwrap(),
        NodeKind::FlyTo => {
            let p = match n.params.get("target") {
                Some(Literal::Point(p)) => *p,
                _ => [0.0; 3],
            };
            writeln!(
                out,
                "GOTO {} {} {}",
                format_number(p[0]),
                format_number(p[1]),
                format_number(p[2])
            )
            .unwrap();
        }
        NodeKind::FlyInArea => {
            let r = match n.params.get("area") {
                Some(Literal::Rect(r)) => *r,
                _ => [0.0; 4],
            };
            let s = n.params.get("spacing").and_then(Literal::as_number).unwrap_or(1.0);
            writeln!(
                out,
                "SWEEP {} {} {} {} {}",
                format_number(r[0]),
                format_number(r[1]),
                format_number(r[2]),
                format_number(r[3]),
                format_number(s)
            )
            .unwrap();
        }
        NodeKind::Hover => {
            let d = n.params.get("duration_s").and_then(Literal::as_number).unwrap_or(0.0);
            writeln!(out, "HOVER {}", format_number(d)).unwrap();
        }
        NodeKind::Branch => {
            let succ = m.successors(&n.id).unwrap_or_default();
            let t = succ
                .iter()
                .find(|(l, _)| *l == EdgeLabel::True)
                .map(|(_, id)| *id)
                .unwrap_or("?");
            let f = succ
                .iter()
                .find(|(l, _)| *l == EdgeLabel::False)
                .map(|(_, id)| *id)
                .unwrap_or("?");
            let cond = n.condition.as_ref().expect("branch carries a condition");
            writeln!(out, "BR {} -> {} ELSE -> {}", format_condition(cond), t, f).unwrap();
        }
    }
}

/// Serializes a mission as an executable flight script.
pub fn gen_flightscript(m: &Mission) -> String {
    let mut out = String::new();
    writeln!(out, "# generated flight script").unwrap();
    writeln!(out, "MISSION \"{}\"", m.name).unwrap();
    for f in &m.filters {
        writeln!(out, "FILTER {}", f.name).unwrap();
        for inst in &f.actions {
            writeln!(out, "ACT {}", script_params(inst)).unwrap();
        }
        writeln!(out, "ENDFILTER").unwrap();
    }
    for p in &m.parallels {
        match p.period_s {
            Some(n) => writeln!(out, "PAR {} EVERY {}", p.name, format_number(n)).unwrap(),
            None => writeln!(out, "PAR {}", p.name).unwrap(),
        }
        for inst in &p.actions {
            writeln!(out, "ACT {}", script_params(inst)).unwrap();
        }
        if let Some((cond, target)) = &p.until {
            writeln!(out, "UNTIL {} -> {}", format_condition(cond), target).unwrap();
        }
        writeln!(out, "ENDPAR").unwrap();
    }
    for n in &m.nodes {
        writeln!(out, "LABEL {}", n.id).unwrap();
        motion_line(n, m, &mut out);
        for inst in &n.embedded_actions {
            writeln!(out, "ACT {}", script_params(inst)).unwrap();
        }
        if let Some(f) = &n.filter_ref {
            writeln!(out, "USEFILTER {f}").unwrap();
        }
        for p in &n.parallel_refs {
            writeln!(out, "USEPAR {p}").unwrap();
        }
    }
    out
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn node_label(n: &Node) -> String {
    let mut lines = vec![n.id.clone(), n.kind.keyword().to_string()];
    for (k, v) in n.params.iter() {
        lines.push(format!("{k} = {}", crate::printer::format_literal(v)));
    }
    for inst in &n.embedded_actions {
        lines.push(script_params(inst));
    }
    lines.join("\\n")
}

/// Graphviz DOT rendering of the mission graph. Branches are diamonds with
/// green True / red False edges; parallel blocks and filters are satellite
/// nodes attached by dotted edges; each `until` jump is one dashed edge.
pub fn gen_dot(m: &Mission) -> String {
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", dot_escape(&m.name)).unwrap();
    writeln!(out, "  rankdir=TB;").unwrap();
    writeln!(out, "  node [fontname=\"Helvetica\"];").unwrap();
    for n in &m.nodes {
        let shape = match n.kind {
            NodeKind::Branch => "diamond",
            NodeKind::TakeOff | NodeKind::TouchDown => "ellipse",
            _ => "box",
        };
        let label = if n.kind == NodeKind::Branch {
            let cond = n.condition.as_ref().expect("branch carries a condition");
            format!("{}\\n{}", n.id, dot_escape(&format_condition(cond)))
        } else {
            dot_escape(&node_label(n))
        };
        writeln!(out, "  \"{}\" [shape={shape}, label=\"{label}\"];", dot_escape(&n.id)).unwrap();
    }
    for f in &m.filters {
        let acts: Vec<String> = f.actions.iter().map(script_params).collect();
        writeln!(
            out,
            "  \"filter {}\" [shape=note, label=\"filter {}\\n{}\"];",
            dot_escape(&f.name),
            dot_escape(&f.name),
            dot_escape(&acts.join("\\n"))
        )
        .unwrap();
    }
    for p in &m.parallels {
        let mut lines = vec![match p.period_s {
            Some(n) => format!("parallel {} every {}s", p.name, format_number(n)),
            None => format!("parallel {}", p.name),
        }];
        lines.extend(p.actions.iter().map(script_params));
        writeln!(
            out,
            "  \"parallel {}\" [shape=component, label=\"{}\"];",
            dot_escape(&p.name),
            dot_escape(&lines.join("\\n"))
        )
        .unwrap();
    }
    for e in &m.edges {
        let attrs = match e.label {
            EdgeLabel::Next => String::new(),
            EdgeLabel::True => " [color=green, label=\"true\"]".to_string(),
            EdgeLabel::False => " [color=red, label=\"false\"]".to_string(),
        };
        writeln!(
            out,
            "  \"{}\" -> \"{}\"{attrs};",
            dot_escape(&e.from),
            dot_escape(&e.to)
        )
        .unwrap();
    }
    for n in &m.nodes {
        if let Some(f) = &n.filter_ref {
            writeln!(
                out,
                "  \"{}\" -> \"filter {}\" [style=dotted, arrowhead=none];",
                dot_escape(&n.id),
                dot_escape(f)
            )
            .unwrap();
        }
        for p in &n.parallel_refs {
            writeln!(
                out,
                "  \"{}\" -> \"parallel {}\" [style=dotted, arrowhead=none];",
                dot_escape(&n.id),
                dot_escape(p)
            )
            .unwrap();
        }
    }
    for p in &m.parallels {
        if let Some((cond, target)) = &p.until {
            writeln!(
                out,
                "  \"parallel {}\" -> \"{}\" [style=dashed, label=\"until {}\"];",
                dot_escape(&p.name),
                dot_escape(target),
                dot_escape(&format_condition(cond))
            )
            .unwrap();
        }
    }
    writeln!(out, "}}").unwrap();
    out
}

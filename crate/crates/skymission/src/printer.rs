//! Canonical pretty-printer. `parse(format(m))` is structurally equal to `m`
//! and `format` is idempotent over `parse`.

use crate::model::{
    ActionInstance, Condition, EdgeLabel, Literal, Mission, Node, NodeKind, ParamMap,
};
use std::fmt::Write;

/// Canonical number form: minimal digits, always with a decimal point.
pub fn format_number(n: f64) -> String {
    if n.is_finite() && n == n.trunc() && n.abs() < 1e15 {
        format!("{n:.1}")
    } else {
        format!("{n}")
    }
}

pub fn format_literal(lit: &Literal) -> String {
    match lit {
        Literal::Bool(b) => b.to_string(),
        Literal::Number(n) => format_number(*n),
        Literal::Text(s) => format!("\"{s}\""),
        Literal::Point(p) => format!(
            "point({}, {}, {})",
            format_number(p[0]),
            format_number(p[1]),
            format_number(p[2])
        ),
        Literal::Rect(r) => format!(
            "rect({}, {}, {}, {})",
            format_number(r[0]),
            format_number(r[1]),
            format_number(r[2]),
            format_number(r[3])
        ),
    }
}

fn format_params(params: &ParamMap) -> String {
    params
        .iter()
        .map(|(k, v)| format!("{k} = {}", format_literal(v)))
        .collect::<Vec<_>>()
        .join(", ")
}

fn format_instance(inst: &ActionInstance) -> String {
    let mut s = String::new();
    if let Some(l) = &inst.result_label {
        write!(s, "{l}: ").unwrap();
    }
    write!(s, "{}({})", inst.action_name, format_params(&inst.params)).unwrap();
    s
}

pub fn format_condition(c: &Condition) -> String {
    let mut expr = c.result_ref.clone();
    for step in &c.processing_chain {
        expr = format!("{}({})", step.action_name, expr);
    }
    format!(
        "{} {} {}",
        expr,
        c.comparator.symbol(),
        format_literal(&c.reference_value)
    )
}

/// Auto-generated ids (`_1`, `_2`, ...) are positional; they are not printed
/// and re-appear identically on reparse.
fn is_auto_id(id: &str) -> bool {
    id.strip_prefix('_')
        .is_some_and(|rest| !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()))
}

fn format_step(n: &Node, mission: &Mission, out: &mut String) {
    out.push_str("    ");
    if !is_auto_id(&n.id) {
        write!(out, "{}: ", n.id).unwrap();
    }
    if n.kind == NodeKind::Branch {
        let succ = mission.successors(&n.id).unwrap_or_default();
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
        writeln!(out, "if {} -> {} else -> {}", format_condition(cond), t, f).unwrap();
        return;
    }
    write!(out, "{}({})", n.kind.keyword(), format_params(&n.params)).unwrap();
    if !n.embedded_actions.is_empty() {
        out.push_str(" {\n");
        for inst in &n.embedded_actions {
            writeln!(out, "      {}", format_instance(inst)).unwrap();
        }
        out.push_str("    }");
    }
    if let Some(f) = &n.filter_ref {
        write!(out, " with filter {f}").unwrap();
    }
    if !n.parallel_refs.is_empty() {
        write!(out, " parallel {}", n.parallel_refs.join(", ")).unwrap();
    }
    out.push('\n');
}

pub fn format(m: &Mission) -> String {
    let mut out = String::new();
    writeln!(out, "mission \"{}\" {{", m.name).unwrap();
    for f in &m.filters {
        writeln!(out, "  filter {} {{", f.name).unwrap();
        for inst in &f.actions {
            writeln!(out, "    {}", format_instance(inst)).unwrap();
        }
        writeln!(out, "  }}").unwrap();
    }
    for p in &m.parallels {
        write!(out, "  parallel {}", p.name).unwrap();
        if let Some(period) = p.period_s {
            write!(out, " every {}s", format_number(period)).unwrap();
        }
        out.push_str(" {\n");
        for inst in &p.actions {
            writeln!(out, "    {}", format_instance(inst)).unwrap();
        }
        out.push_str("  }");
        if let Some((cond, target)) = &p.until {
            write!(out, " until {} -> {}", format_condition(cond), target).unwrap();
        }
        out.push('\n');
    }
    writeln!(out, "  flow {{").unwrap();
    for n in &m.nodes {
        format_step(n, m, &mut out);
    }
    writeln!(out, "  }}").unwrap();
    writeln!(out, "}}").unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    #[test]
    fn minimal_roundtrip() {
        let src = r#"mission "m" { flow { takeoff(altitude=10.0) touchdown() } }"#;
        let m = parse(src).unwrap();
        let text = format(&m);
        assert_eq!(
            text,
            "mission \"m\" {\n  flow {\n    takeoff(altitude = 10.0)\n    touchdown()\n  }\n}\n"
        );
        let m2 = parse(&text).unwrap();
        assert_eq!(format(&m2), text);
    }

    #[test]
    fn period_printed_canonically() {
        let src = r#"
mission "m" {
  parallel p every 60 s { v: scan_wifi() }
  flow {
    takeoff(altitude=1.0)
    hover(duration_s=1.0) parallel p
    touchdown()
  }
}"#;
        let m = parse(src).unwrap();
        assert!(format(&m).contains("every 60.0s"), "{}", format(&m));
    }

    #[test]
    fn numbers_minimal_digits() {
        assert_eq!(format_number(60.0), "60.0");
        assert_eq!(format_number(2.5), "2.5");
        assert_eq!(format_number(-3.0), "-3.0");
        assert_eq!(format_number(0.1), "0.1");
    }

    #[test]
    fn format_is_idempotent_on_branchy_mission() {
        let src = r#"
mission "m" {
  filter f { maintain_speed(limit=2.0) }
  parallel p every 10.0s { v: scan_wifi() } until v > 3.0 -> out
  flow {
    takeoff(altitude=10.0) { x: take_picture() }
    loop: hover(duration_s=5.0) with filter f parallel p
    if recognize_image(x) == "ok" -> out else -> loop
    out: touchdown()
  }
}"#;
        let m = parse(src).unwrap();
        let once = format(&m);
        let twice = format(&parse(&once).unwrap());
        assert_eq!(once, twice);
    }
}

//! Flight-script loader: parses the output of `codegen::gen_flightscript`
//! back into a mission graph so the execution engine can replay it. Because
//! the script preserves ids, declarations, and conditions exactly, a replay
//! produces the same event stream as running the source mission.

use crate::lexer::{lex, Tok, Token};
use crate::model::{
    ActionInstance, Comparator, Condition, Edge, EdgeLabel, FilterDecl, Literal, Mission, Node,
    NodeKind, ParallelDecl, ParamMap,
};

#[derive(Debug, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct ScriptError {
    pub line: u32,
    pub msg: String,
}

type SResult<T> = Result<T, ScriptError>;

/// Strips `#` comments (outside string literals) so the mission lexer can
/// tokenize the rest.
fn strip_comments(source: &str) -> String {
    let mut out = String::with_capacity(source.len());
    for line in source.lines() {
        let mut in_string = false;
        for c in line.chars() {
            match c {
                '"' => in_string = !in_string,
                '#' if !in_string => break,
                _ => {}
            }
            out.push(c);
        }
        out.push('\n');
    }
    out
}

pub fn parse_script(source: &str) -> Result<Mission, ScriptError> {
    let mut p = ScriptParser {
        tokens: lex(&strip_comments(source)),
        pos: 0,
    };
    p.file()
}

struct ScriptParser {
    tokens: Vec<Token>,
    pos: usize,
}

/// Flow statement kinds, before edges are attached.
enum Stmt {
    Motion(NodeKind, ParamMap),
    Branch(Condition, String, String),
}

impl ScriptParser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> SResult<T> {
        Err(ScriptError {
            line: self.peek().span.start_line,
            msg: msg.into(),
        })
    }

    fn at_mnemonic(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn expect_mnemonic(&mut self, kw: &str) -> SResult<()> {
        if self.at_mnemonic(kw) {
            self.bump();
            Ok(())
        } else {
            self.err(format!(
                "expected `{kw}`, found {}",
                self.peek().tok.describe()
            ))
        }
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> SResult<()> {
        if self.peek().tok == tok {
            self.bump();
            Ok(())
        } else {
            self.err(format!(
                "expected {wanted}, found {}",
                self.peek().tok.describe()
            ))
        }
    }

    fn ident(&mut self, wanted: &str) -> SResult<String> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.err(format!(
                "expected {wanted}, found {}",
                self.peek().tok.describe()
            )),
        }
    }

    fn number(&mut self, wanted: &str) -> SResult<f64> {
        match self.peek().tok {
            Tok::Number(n) => {
                self.bump();
                Ok(n)
            }
            _ => self.err(format!(
                "expected {wanted}, found {}",
                self.peek().tok.describe()
            )),
        }
    }

    fn file(&mut self) -> SResult<Mission> {
        self.expect_mnemonic("MISSION")?;
        let name = match &self.peek().tok {
            Tok::Str(s) => {
                let s = s.clone();
                self.bump();
                s
            }
            _ => return self.err("expected mission name string"),
        };

        let mut filters = Vec::new();
        let mut parallels = Vec::new();
        loop {
            if self.at_mnemonic("FILTER") {
                filters.push(self.filter_block()?);
            } else if self.at_mnemonic("PAR") {
                parallels.push(self.par_block()?);
            } else {
                break;
            }
        }

        // flow: LABEL id, one motion/branch statement, then embedded
        // ACT/USEFILTER/USEPAR lines until the next LABEL or EOF.
        let mut labeled: Vec<(String, Stmt, Node)> = Vec::new();
        while self.at_mnemonic("LABEL") {
            self.bump();
            let id = self.ident("node id")?;
            let stmt = self.statement()?;
            let mut node = match &stmt {
                Stmt::Motion(kind, params) => {
                    let mut n = Node::routing(&id, *kind);
                    n.params = params.clone();
                    n
                }
                Stmt::Branch(cond, _, _) => Node::branch(&id, cond.clone()),
            };
            loop {
                if self.at_mnemonic("ACT") {
                    self.bump();
                    node.embedded_actions.push(self.action_line()?);
                } else if self.at_mnemonic("USEFILTER") {
                    self.bump();
                    node.filter_ref = Some(self.ident("filter name")?);
                } else if self.at_mnemonic("USEPAR") {
                    self.bump();
                    node.parallel_refs.push(self.ident("parallel name")?);
                } else {
                    break;
                }
            }
            labeled.push((id, stmt, node));
        }
        if self.peek().tok != Tok::Eof {
            return self.err(format!(
                "expected `LABEL` or end of script, found {}",
                self.peek().tok.describe()
            ));
        }
        if labeled.is_empty() {
            return self.err("script has no flow statements");
        }
        if !matches!(labeled.first(), Some((_, Stmt::Motion(NodeKind::TakeOff, _), _))) {
            return self.err("flight script must start with TAKEOFF");
        }
        if !matches!(labeled.last(), Some((_, Stmt::Motion(NodeKind::TouchDown, _), _))) {
            return self.err("flight script must end with TOUCHDOWN");
        }

        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        for (i, (id, stmt, node)) in labeled.iter().enumerate() {
            match stmt {
                Stmt::Motion(kind, _) => {
                    if *kind != NodeKind::TouchDown {
                        let next = &labeled[i + 1].0;
                        edges.push(Edge::new(id, next, EdgeLabel::Next));
                    }
                }
                Stmt::Branch(_, t, f) => {
                    edges.push(Edge::new(id, t, EdgeLabel::True));
                    edges.push(Edge::new(id, f, EdgeLabel::False));
                }
            }
            nodes.push(node.clone());
        }

        Mission::build(&name, nodes, edges, filters, parallels).map_err(|errs| ScriptError {
            line: 1,
            msg: errs
                .iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join("; "),
        })
    }

    fn filter_block(&mut self) -> SResult<FilterDecl> {
        let span = self.peek().span;
        self.bump(); // FILTER
        let name = self.ident("filter name")?;
        let mut actions = Vec::new();
        while self.at_mnemonic("ACT") {
            self.bump();
            actions.push(self.action_line()?);
        }
        self.expect_mnemonic("ENDFILTER")?;
        Ok(FilterDecl {
            name,
            actions,
            span,
        })
    }

    fn par_block(&mut self) -> SResult<ParallelDecl> {
        let span = self.peek().span;
        self.bump(); // PAR
        let name = self.ident("parallel name")?;
        let mut period_s = None;
        if self.at_mnemonic("EVERY") {
            self.bump();
            period_s = Some(self.number("period in seconds")?);
        }
        let mut actions = Vec::new();
        while self.at_mnemonic("ACT") {
            self.bump();
            actions.push(self.action_line()?);
        }
        let mut until = None;
        if self.at_mnemonic("UNTIL") {
            self.bump();
            let cond = self.condition()?;
            self.expect(Tok::Arrow, "`->`")?;
            let target = self.ident("until target")?;
            until = Some((cond, target));
        }
        self.expect_mnemonic("ENDPAR")?;
        Ok(ParallelDecl {
            name,
            period_s,
            actions,
            until,
            span,
        })
    }

    fn statement(&mut self) -> SResult<Stmt> {
        let mnemonic = self.ident("a flight statement")?;
        let mut params = ParamMap::new();
        let kind = match mnemonic.as_str() {
            "TAKEOFF" => {
                params.insert("altitude".into(), Literal::Number(self.number("altitude")?));
                NodeKind::TakeOff
            }
            "TOUCHDOWN" => NodeKind::TouchDown,
            "HOME" => NodeKind::FlyHome,
            "HOVER" => {
                params.insert(
                    "duration_s".into(),
                    Literal::Number(self.number("duration")?),
                );
                NodeKind::Hover
            }
            "GOTO" => {
                let x = self.number("x")?;
                let y = self.number("y")?;
                let z = self.number("z")?;
                params.insert("target".into(), Literal::Point([x, y, z]));
                NodeKind::FlyTo
            }
            "SWEEP" => {
                let x0 = self.number("x0")?;
                let y0 = self.number("y0")?;
                let x1 = self.number("x1")?;
                let y1 = self.number("y1")?;
                let s = self.number("spacing")?;
                params.insert("area".into(), Literal::Rect([x0, y0, x1, y1]));
                params.insert("spacing".into(), Literal::Number(s));
                NodeKind::FlyInArea
            }
            "BR" => {
                let cond = self.condition()?;
                self.expect(Tok::Arrow, "`->`")?;
                let t = self.ident("true target")?;
                self.expect_mnemonic("ELSE")?;
                self.expect(Tok::Arrow, "`->`")?;
                let f = self.ident("false target")?;
                return Ok(Stmt::Branch(cond, t, f));
            }
            other => return self.err(format!("unknown flight statement `{other}`")),
        };
        Ok(Stmt::Motion(kind, params))
    }

    fn action_line(&mut self) -> SResult<ActionInstance> {
        let span = self.peek().span;
        let first = self.ident("action name")?;
        let (result_label, action_name) = if self.peek().tok == Tok::Colon {
            self.bump();
            (Some(first), self.ident("action name")?)
        } else {
            (None, first)
        };
        self.expect(Tok::LParen, "`(`")?;
        let params = self.args()?;
        self.expect(Tok::RParen, "`)`")?;
        Ok(ActionInstance {
            result_label,
            action_name,
            params,
            span,
        })
    }

    fn args(&mut self) -> SResult<ParamMap> {
        let mut params = ParamMap::new();
        if self.peek().tok == Tok::RParen {
            return Ok(params);
        }
        loop {
            let key = self.ident("parameter name")?;
            self.expect(Tok::Assign, "`=`")?;
            let value = self.literal()?;
            if !params.insert(key.clone(), value) {
                return self.err(format!("duplicate parameter `{key}`"));
            }
            if self.peek().tok == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        Ok(params)
    }

    fn literal(&mut self) -> SResult<Literal> {
        match self.peek().tok.clone() {
            Tok::Number(n) => {
                self.bump();
                Ok(Literal::Number(n))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Literal::Text(s))
            }
            Tok::Ident(id) => match id.as_str() {
                "true" => {
                    self.bump();
                    Ok(Literal::Bool(true))
                }
                "false" => {
                    self.bump();
                    Ok(Literal::Bool(false))
                }
                "point" => {
                    self.bump();
                    let ns = self.number_tuple(3)?;
                    Ok(Literal::Point([ns[0], ns[1], ns[2]]))
                }
                "rect" => {
                    self.bump();
                    let ns = self.number_tuple(4)?;
                    Ok(Literal::Rect([ns[0], ns[1], ns[2], ns[3]]))
                }
                _ => self.err("expected a literal value"),
            },
            _ => self.err("expected a literal value"),
        }
    }

    fn number_tuple(&mut self, n: usize) -> SResult<Vec<f64>> {
        self.expect(Tok::LParen, "`(`")?;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            if i > 0 {
                self.expect(Tok::Comma, "`,`")?;
            }
            out.push(self.number("a number")?);
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(out)
    }

    fn condition(&mut self) -> SResult<Condition> {
        let span = self.peek().span;
        let (result_ref, chain) = self.chain()?;
        let comparator = match self.peek().tok {
            Tok::EqEq => Comparator::Eq,
            Tok::NotEq => Comparator::Ne,
            Tok::Lt => Comparator::Lt,
            Tok::Le => Comparator::Le,
            Tok::Gt => Comparator::Gt,
            Tok::Ge => Comparator::Ge,
            _ => return self.err("expected a comparison operator"),
        };
        self.bump();
        let reference_value = self.literal()?;
        Ok(Condition {
            result_ref,
            processing_chain: chain,
            comparator,
            reference_value,
            span,
        })
    }

    fn chain(&mut self) -> SResult<(String, Vec<ActionInstance>)> {
        let span = self.peek().span;
        let name = self.ident("a result label or processing action")?;
        if self.peek().tok != Tok::LParen {
            return Ok((name, Vec::new()));
        }
        self.bump();
        let (result_ref, mut inner) = self.chain()?;
        self.expect(Tok::RParen, "`)`")?;
        inner.push(ActionInstance {
            result_label: None,
            action_name: name,
            params: ParamMap::new(),
            span,
        });
        Ok((result_ref, inner))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::gen_flightscript;
    use crate::parser::parse;

    const BRANCHY: &str = r#"
mission "m" {
  filter f { maintain_speed(limit=2.0) }
  parallel p every 10.0s { v: scan_wifi() } until v > 3.0 -> out
  flow {
    takeoff(altitude=10.0) { x: take_picture(resolution="800x600") }
    loop: hover(duration_s=5.0) with filter f parallel p
    if recognize_image(x) == "ok" -> out else -> loop
    out: touchdown()
  }
}"#;

    #[test]
    fn script_roundtrip_is_structurally_equal() {
        let m = parse(BRANCHY).unwrap();
        let script = gen_flightscript(&m);
        let m2 = parse_script(&script).unwrap();
        // spans differ between surface syntaxes; compare span-free views
        assert_eq!(gen_flightscript(&m2), script);
        assert_eq!(m2.name, m.name);
        assert_eq!(m2.edges, m.edges);
        let ids: Vec<&str> = m2.nodes.iter().map(|n| n.id.as_str()).collect();
        assert_eq!(ids, vec!["_1", "loop", "_3", "out"]);
    }

    #[test]
    fn script_missing_takeoff_rejected() {
        let script = "MISSION \"m\"\nLABEL a\nHOVER 1.0\nLABEL b\nTOUCHDOWN\n";
        let err = parse_script(script).unwrap_err();
        assert!(err.msg.contains("TAKEOFF"), "{err}");
    }

    #[test]
    fn script_unknown_statement_rejected() {
        let script = "MISSION \"m\"\nLABEL a\nWARP 1.0\n";
        let err = parse_script(script).unwrap_err();
        assert!(err.msg.contains("WARP"), "{err}");
        assert_eq!(err.line, 3);
    }

    #[test]
    fn script_branch_targets_checked() {
        let script = "MISSION \"m\"\nLABEL a\nTAKEOFF 1.0\nACT x: scan_wifi()\nLABEL b\nBR x > 1.0 -> nowhere ELSE -> c\nLABEL c\nTOUCHDOWN\n";
        let err = parse_script(script).unwrap_err();
        assert!(err.msg.contains("nowhere"), "{err}");
    }
}

//! Recursive-descent parser for the textual mission language.
//!
//! ```text
//! mission      := "mission" STRING "{" decl* "flow" "{" step+ "}" "}"
//! decl         := filterDecl | parallelDecl
//! filterDecl   := "filter" ID "{" actionInst+ "}"
//! parallelDecl := "parallel" ID ("every" NUMBER "s")? "{" actionInst+ "}"
//!                 ("until" cond "->" ID)?
//! step         := label? ( routing | branch )
//! routing      := ID "(" args? ")" embedded? ("with" "filter" ID)?
//!                 ("parallel" ID ("," ID)*)?
//! branch       := "if" cond "->" ID "else" "->" ID
//! actionInst   := (ID ":")? ID "(" args? ")"
//! cond         := chain cmp literal
//! chain        := ID "(" (chain | ID) ")" | ID
//! ```

use crate::diag::{sort_diagnostics, Diagnostic, SourceSpan};
use crate::lexer::{lex, Tok, Token};
use crate::model::{
    ActionInstance, Comparator, Condition, Edge, EdgeLabel, Literal, Mission, Node, NodeKind,
    ParamMap,
};

pub fn parse(source: &str) -> Result<Mission, Vec<Diagnostic>> {
    let tokens = lex(source);
    let mut p = Parser {
        tokens,
        pos: 0,
        diags: Vec::new(),
    };
    match p.mission() {
        Ok(m) if p.diags.iter().all(|d| !d.is_error()) => Ok(m),
        _ => {
            if p.diags.is_empty() {
                // should not happen, but never return failure without a diagnostic
                p.diags
                    .push(Diagnostic::error("P001", "malformed mission", SourceSpan::default()));
            }
            sort_diagnostics(&mut p.diags);
            Err(p.diags)
        }
    }
}

struct ParseAbort;

type PResult<T> = Result<T, ParseAbort>;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
}

struct Step {
    label: Option<String>,
    kind: StepKind,
    span: SourceSpan,
}

enum StepKind {
    Routing {
        kind: NodeKind,
        params: ParamMap,
        embedded: Vec<ActionInstance>,
        filter_ref: Option<String>,
        parallel_refs: Vec<String>,
    },
    Branch {
        condition: Condition,
        true_target: String,
        false_target: String,
    },
}

impl Parser {
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

    fn at_ident(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn error(&mut self, code: &str, msg: String, span: SourceSpan) -> ParseAbort {
        self.diags.push(Diagnostic::error(code, msg, span));
        ParseAbort
    }

    fn unexpected(&mut self, wanted: &str) -> ParseAbort {
        let t = self.peek().clone();
        let (code, msg) = match &t.tok {
            Tok::Eof => ("P003", format!("unexpected end of input, expected {wanted}")),
            Tok::Error(m) => ("P001", m.clone()),
            other => ("P001", format!("expected {wanted}, found {}", other.describe())),
        };
        self.error(code, msg, t.span)
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> PResult<Token> {
        if self.peek().tok == tok {
            Ok(self.bump())
        } else {
            Err(self.unexpected(wanted))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<Token> {
        if self.at_ident(kw) {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn ident(&mut self, wanted: &str) -> PResult<(String, SourceSpan)> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                let t = self.bump();
                Ok((s, t.span))
            }
            _ => Err(self.unexpected(wanted)),
        }
    }

    fn mission(&mut self) -> PResult<Mission> {
        self.expect_keyword("mission")?;
        let name = match &self.peek().tok {
            Tok::Str(s) => {
                let s = s.clone();
                self.bump();
                s
            }
            _ => return Err(self.unexpected("mission name string")),
        };
        self.expect(Tok::LBrace, "`{`")?;

        let mut filters = Vec::new();
        let mut parallels = Vec::new();
        loop {
            if self.at_ident("filter") {
                filters.push(self.filter_decl()?);
            } else if self.at_ident("parallel") {
                parallels.push(self.parallel_decl()?);
            } else if self.at_ident("flow") {
                break;
            } else if let Tok::Ident(kw) = &self.peek().tok {
                let kw = kw.clone();
                let span = self.peek().span;
                return Err(self.error(
                    "P002",
                    format!("unknown keyword `{kw}`, expected `filter`, `parallel` or `flow`"),
                    span,
                ));
            } else {
                return Err(self.unexpected("`filter`, `parallel` or `flow`"));
            }
        }

        self.expect_keyword("flow")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut steps = Vec::new();
        let flow_close;
        loop {
            if self.peek().tok == Tok::RBrace {
                flow_close = self.bump().span;
                break;
            }
            if self.peek().tok == Tok::Eof {
                return Err(self.unexpected("`}` closing the flow block"));
            }
            steps.push(self.step()?);
        }
        self.expect(Tok::RBrace, "`}` closing the mission block")?;

        self.assemble(&name, steps, filters, parallels, flow_close)
    }

    fn filter_decl(&mut self) -> PResult<crate::model::FilterDecl> {
        let start = self.bump().span; // `filter`
        let (name, _) = self.ident("filter name")?;
        self.expect(Tok::LBrace, "`{`")?;
        let actions = self.action_block()?;
        let end = self.expect(Tok::RBrace, "`}` closing the filter block")?.span;
        Ok(crate::model::FilterDecl {
            name,
            actions,
            span: start.join(end),
        })
    }

    fn parallel_decl(&mut self) -> PResult<crate::model::ParallelDecl> {
        let start = self.bump().span; // `parallel`
        let (name, _) = self.ident("parallel name")?;
        let mut period_s = None;
        if self.at_ident("every") {
            self.bump();
            period_s = Some(self.number("period in seconds")?);
            self.expect_keyword("s")?;
        }
        self.expect(Tok::LBrace, "`{`")?;
        let actions = self.action_block()?;
        let mut end = self.expect(Tok::RBrace, "`}` closing the parallel block")?.span;
        let mut until = None;
        if self.at_ident("until") {
            self.bump();
            let cond = self.condition()?;
            self.expect(Tok::Arrow, "`->`")?;
            let (target, tspan) = self.ident("until target label")?;
            end = tspan;
            until = Some((cond, target));
        }
        Ok(crate::model::ParallelDecl {
            name,
            period_s,
            actions,
            until,
            span: start.join(end),
        })
    }

    fn number(&mut self, wanted: &str) -> PResult<f64> {
        match self.peek().tok {
            Tok::Number(n) => {
                self.bump();
                Ok(n)
            }
            _ => Err(self.unexpected(wanted)),
        }
    }

    fn action_block(&mut self) -> PResult<Vec<ActionInstance>> {
        let mut out = Vec::new();
        loop {
            match &self.peek().tok {
                Tok::Ident(_) => out.push(self.action_instance()?),
                Tok::RBrace => break,
                Tok::Eof => return Err(self.unexpected("`}` closing the block")),
                _ => return Err(self.unexpected("an action or `}`")),
            }
        }
        Ok(out)
    }

    fn action_instance(&mut self) -> PResult<ActionInstance> {
        let (first, start) = self.ident("action name")?;
        let (result_label, action_name) = if self.peek().tok == Tok::Colon {
            self.bump();
            let (name, _) = self.ident("action name")?;
            (Some(first), name)
        } else {
            (None, first)
        };
        self.expect(Tok::LParen, "`(`")?;
        let params = self.args()?;
        let end = self.expect(Tok::RParen, "`)`")?.span;
        Ok(ActionInstance {
            result_label,
            action_name,
            params,
            span: start.join(end),
        })
    }

    fn args(&mut self) -> PResult<ParamMap> {
        let mut params = ParamMap::new();
        if self.peek().tok == Tok::RParen {
            return Ok(params);
        }
        loop {
            let (key, kspan) = self.ident("parameter name")?;
            self.expect(Tok::Assign, "`=`")?;
            let value = self.literal()?;
            if !params.insert(key.clone(), value) {
                self.diags.push(Diagnostic::error(
                    "M001",
                    format!("duplicate parameter `{key}`"),
                    kspan,
                ));
            }
            if self.peek().tok == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        Ok(params)
    }

    fn literal(&mut self) -> PResult<Literal> {
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
                _ => Err(self.unexpected("a literal value")),
            },
            _ => Err(self.unexpected("a literal value")),
        }
    }

    fn number_tuple(&mut self, n: usize) -> PResult<Vec<f64>> {
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

    fn condition(&mut self) -> PResult<Condition> {
        let start = self.peek().span;
        let (result_ref, chain) = self.chain()?;
        let comparator = match self.peek().tok {
            Tok::EqEq => Comparator::Eq,
            Tok::NotEq => Comparator::Ne,
            Tok::Lt => Comparator::Lt,
            Tok::Le => Comparator::Le,
            Tok::Gt => Comparator::Gt,
            Tok::Ge => Comparator::Ge,
            _ => return Err(self.unexpected("a comparison operator")),
        };
        self.bump();
        let reference_value = self.literal()?;
        let end = self.tokens[self.pos.saturating_sub(1)].span;
        Ok(Condition {
            result_ref,
            processing_chain: chain,
            comparator,
            reference_value,
            span: start.join(end),
        })
    }

    /// Parses `f(g(x))`-style chains. Returns the innermost result label and
    /// the processing actions innermost-first (`[g, f]` for the example).
    fn chain(&mut self) -> PResult<(String, Vec<ActionInstance>)> {
        let (name, span) = self.ident("a result label or processing action")?;
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

    fn step(&mut self) -> PResult<Step> {
        let start = self.peek().span;
        let (first, first_span) = self.ident("a routing element or `if`")?;

        let (label, keyword, kw_span) = if self.peek().tok == Tok::Colon && first != "if" {
            self.bump();
            let (kw, kspan) = self.ident("a routing element or `if`")?;
            (Some(first), kw, kspan)
        } else {
            (None, first, first_span)
        };

        if keyword == "if" {
            let condition = self.condition()?;
            self.expect(Tok::Arrow, "`->`")?;
            let (true_target, _) = self.ident("true target label")?;
            self.expect_keyword("else")?;
            self.expect(Tok::Arrow, "`->`")?;
            let (false_target, end) = self.ident("false target label")?;
            return Ok(Step {
                label,
                kind: StepKind::Branch {
                    condition,
                    true_target,
                    false_target,
                },
                span: start.join(end),
            });
        }

        let Some(kind) = NodeKind::from_keyword(&keyword) else {
            return Err(self.error(
                "P002",
                format!("unknown routing element `{keyword}`"),
                kw_span,
            ));
        };
        self.expect(Tok::LParen, "`(`")?;
        let params = self.args()?;
        let mut end = self.expect(Tok::RParen, "`)`")?.span;

        let mut embedded = Vec::new();
        if self.peek().tok == Tok::LBrace {
            self.bump();
            embedded = self.action_block()?;
            end = self.expect(Tok::RBrace, "`}` closing the action block")?.span;
        }

        let mut filter_ref = None;
        if self.at_ident("with") {
            self.bump();
            self.expect_keyword("filter")?;
            let (f, fspan) = self.ident("filter name")?;
            filter_ref = Some(f);
            end = fspan;
        }

        let mut parallel_refs = Vec::new();
        if self.at_ident("parallel") {
            self.bump();
            loop {
                let (p, pspan) = self.ident("parallel name")?;
                parallel_refs.push(p);
                end = pspan;
                if self.peek().tok == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }

        Ok(Step {
            label,
            kind: StepKind::Routing {
                kind,
                params,
                embedded,
                filter_ref,
                parallel_refs,
            },
            span: start.join(end),
        })
    }

    fn assemble(
        &mut self,
        name: &str,
        steps: Vec<Step>,
        filters: Vec<crate::model::FilterDecl>,
        parallels: Vec<crate::model::ParallelDecl>,
        flow_close: SourceSpan,
    ) -> PResult<Mission> {
        // The flow must be bracketed by exactly takeoff ... touchdown.
        let first_ok = matches!(
            steps.first(),
            Some(Step {
                kind: StepKind::Routing {
                    kind: NodeKind::TakeOff,
                    ..
                },
                ..
            })
        );
        let last_ok = matches!(
            steps.last(),
            Some(Step {
                kind: StepKind::Routing {
                    kind: NodeKind::TouchDown,
                    ..
                },
                ..
            })
        );
        if !first_ok || !last_ok {
            return Err(self.error(
                "P004",
                "flow must start with takeoff and end with touchdown".into(),
                flow_close,
            ));
        }

        // Assign ids: explicit label or positional `_k`.
        let ids: Vec<String> = steps
            .iter()
            .enumerate()
            .map(|(i, s)| s.label.clone().unwrap_or_else(|| format!("_{}", i + 1)))
            .collect();
        let known: std::collections::HashSet<&str> = ids.iter().map(|s| s.as_str()).collect();

        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        for (i, step) in steps.iter().enumerate() {
            let id = ids[i].clone();
            match &step.kind {
                StepKind::Routing {
                    kind,
                    params,
                    embedded,
                    filter_ref,
                    parallel_refs,
                } => {
                    nodes.push(Node {
                        id: id.clone(),
                        kind: *kind,
                        params: params.clone(),
                        embedded_actions: embedded.clone(),
                        filter_ref: filter_ref.clone(),
                        parallel_refs: parallel_refs.clone(),
                        condition: None,
                        span: step.span,
                    });
                    if *kind != NodeKind::TouchDown {
                        // touchdown is always last, so i + 1 exists here
                        edges.push(Edge::new(&id, &ids[i + 1], EdgeLabel::Next));
                    }
                }
                StepKind::Branch {
                    condition,
                    true_target,
                    false_target,
                } => {
                    for target in [true_target, false_target] {
                        if !known.contains(target.as_str()) {
                            self.diags.push(Diagnostic::error(
                                "M002",
                                format!("branch target `{target}` is not a step label"),
                                step.span,
                            ));
                        }
                    }
                    nodes.push(Node {
                        id: id.clone(),
                        kind: NodeKind::Branch,
                        params: ParamMap::new(),
                        embedded_actions: Vec::new(),
                        filter_ref: None,
                        parallel_refs: Vec::new(),
                        condition: Some(condition.clone()),
                        span: step.span,
                    });
                    edges.push(Edge::new(&id, true_target, EdgeLabel::True));
                    edges.push(Edge::new(&id, false_target, EdgeLabel::False));
                }
            }
        }

        for p in &parallels {
            if let Some((_, target)) = &p.until {
                if !known.contains(target.as_str()) {
                    self.diags.push(Diagnostic::error(
                        "M002",
                        format!("until target `{target}` is not a step label"),
                        p.span,
                    ));
                }
            }
        }

        if self.diags.iter().any(|d| d.is_error()) {
            return Err(ParseAbort);
        }

        match Mission::build(name, nodes, edges, filters, parallels) {
            Ok(m) => Ok(m),
            Err(errs) => {
                for e in errs {
                    let span = self
                        .span_for_model_error(&e, &steps, &ids)
                        .unwrap_or(flow_close);
                    self.diags
                        .push(Diagnostic::error(e.code(), e.to_string(), span));
                }
                Err(ParseAbort)
            }
        }
    }

    /// Best-effort source position for a structural error, by offending id.
    fn span_for_model_error(
        &self,
        err: &crate::model::ModelError,
        steps: &[Step],
        ids: &[String],
    ) -> Option<SourceSpan> {
        use crate::model::ModelError::*;
        let id = match err {
            DuplicateId(id) | DanglingEdge(id) | UnknownNode(id) | BadBranchEdges(id)
            | BadNextEdges(id) | TakeOffHasIncoming(id) | ConditionOnRouting(id)
            | BranchWithoutCondition(id) | EmbeddedOnBranch(id) | DuplicateResultLabel(id)
            | EmptyFilter(id) | EmptyParallel(id) | BadPeriod(id) => id.clone(),
            UnknownFilter(id, _) | UnknownParallel(id, _) | BadUntilTarget(id, _) => id.clone(),
            MissingTakeOff(_) | MissingTouchDown(_) => return None,
        };
        ids.iter()
            .position(|i| *i == id)
            .map(|idx| steps[idx].span)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NodeKind;

    const MINIMAL: &str = r#"mission "m" { flow { takeoff(altitude=10.0) touchdown() } }"#;

    #[test]
    fn minimal_mission_parses() {
        let m = parse(MINIMAL).unwrap();
        assert_eq!(m.nodes.len(), 2);
        assert_eq!(m.edges.len(), 1);
        assert_eq!(m.nodes[0].kind, NodeKind::TakeOff);
        assert_eq!(m.nodes[1].kind, NodeKind::TouchDown);
    }

    #[test]
    fn missing_touchdown_is_p004() {
        let src = r#"mission "m" { flow { takeoff(altitude=10.0) } }"#;
        let diags = parse(src).unwrap_err();
        assert_eq!(diags[0].code, "P004");
        assert!(diags[0].line >= 1 && diags[0].column >= 1);
    }

    #[test]
    fn unknown_routing_is_p002() {
        let src = r#"mission "m" { flow { takeoff(altitude=10.0) teleport() touchdown() } }"#;
        let diags = parse(src).unwrap_err();
        assert!(diags.iter().any(|d| d.code == "P002"), "{diags:?}");
    }

    #[test]
    fn unterminated_block_is_p003() {
        let src = r#"mission "m" { flow { takeoff(altitude=10.0) touchdown() "#;
        let diags = parse(src).unwrap_err();
        assert!(diags.iter().any(|d| d.code == "P003"), "{diags:?}");
    }

    #[test]
    fn branch_and_condition_chain() {
        let src = r#"
mission "m" {
  flow {
    takeoff(altitude=2.0) { x: take_picture() }
    if recognize_image(x) == "ok" -> done else -> done
    done: touchdown()
  }
}"#;
        let m = parse(src).unwrap();
        let branch = m.nodes.iter().find(|n| n.kind == NodeKind::Branch).unwrap();
        let c = branch.condition.as_ref().unwrap();
        assert_eq!(c.result_ref, "x");
        assert_eq!(c.processing_chain.len(), 1);
        assert_eq!(c.processing_chain[0].action_name, "recognize_image");
        assert_eq!(c.comparator, Comparator::Eq);
        assert_eq!(c.reference_value, Literal::Text("ok".into()));
    }

    #[test]
    fn unknown_branch_target_is_m002() {
        let src = r#"
mission "m" {
  flow {
    takeoff(altitude=2.0) { x: scan_wifi() }
    if x > 1.0 -> nowhere else -> done
    done: touchdown()
  }
}"#;
        let diags = parse(src).unwrap_err();
        assert!(diags.iter().any(|d| d.code == "M002"), "{diags:?}");
    }

    #[test]
    fn nodes_carry_spans() {
        let m = parse(MINIMAL).unwrap();
        for n in &m.nodes {
            assert!(n.span.start_line >= 1);
            assert!(n.span.start_col > 1);
        }
    }

    #[test]
    fn parallel_decl_with_period_and_until() {
        let src = r#"
mission "m" {
  parallel watch every 5.0s {
    v: scan_wifi()
  } until v > 3.0 -> out
  flow {
    takeoff(altitude=2.0)
    hover(duration_s=60.0) parallel watch
    out: touchdown()
  }
}"#;
        let m = parse(src).unwrap();
        let p = m.parallel("watch").unwrap();
        assert_eq!(p.period_s, Some(5.0));
        let (cond, target) = p.until.as_ref().unwrap();
        assert_eq!(cond.result_ref, "v");
        assert_eq!(target, "out");
        assert_eq!(m.nodes[1].parallel_refs, vec!["watch".to_string()]);
    }
}

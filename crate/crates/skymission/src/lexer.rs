//! Tokenizer for the mission language. Whitespace is insignificant and `//`
//! comments run to end of line. The lexer never fails hard; malformed input
//! becomes `Error` tokens the parser turns into positioned diagnostics.

use crate::diag::SourceSpan;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Colon,
    Assign,
    Arrow,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    /// Malformed input; the payload describes the problem.
    Error(String),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(n) => format!("number `{n}`"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Assign => "`=`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::EqEq => "`==`".into(),
            Tok::NotEq => "`!=`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Error(m) => m.clone(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Cursor {
            chars: src.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub fn lex(src: &str) -> Vec<Token> {
    let mut cur = Cursor::new(src);
    let mut out = Vec::new();

    loop {
        // skip whitespace and comments
        loop {
            match cur.peek() {
                Some(c) if c.is_whitespace() => {
                    cur.bump();
                }
                Some('/') => {
                    let mut lookahead = cur.chars.clone();
                    lookahead.next();
                    if lookahead.peek() == Some(&'/') {
                        while let Some(c) = cur.peek() {
                            if c == '\n' {
                                break;
                            }
                            cur.bump();
                        }
                    } else {
                        break;
                    }
                }
                _ => break,
            }
        }

        let (line, col) = (cur.line, cur.col);
        let span_from = |cur: &Cursor| SourceSpan {
            start_line: line,
            start_col: col,
            end_line: cur.line,
            end_col: cur.col,
        };

        let Some(c) = cur.peek() else {
            out.push(Token {
                tok: Tok::Eof,
                span: SourceSpan::point(line, col),
            });
            break;
        };

        let tok = if is_ident_start(c) {
            let mut s = String::new();
            while let Some(c) = cur.peek() {
                if is_ident_continue(c) {
                    s.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            // keyword vs identifier is decided by the parser
            Tok::Ident(s)
        } else if c.is_ascii_digit() {
            lex_number(&mut cur, false)
        } else {
            cur.bump();
            match c {
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                ':' => Tok::Colon,
                '=' => {
                    if cur.peek() == Some('=') {
                        cur.bump();
                        Tok::EqEq
                    } else {
                        Tok::Assign
                    }
                }
                '!' => {
                    if cur.peek() == Some('=') {
                        cur.bump();
                        Tok::NotEq
                    } else {
                        Tok::Error("unexpected character `!`".into())
                    }
                }
                '<' => {
                    if cur.peek() == Some('=') {
                        cur.bump();
                        Tok::Le
                    } else {
                        Tok::Lt
                    }
                }
                '>' => {
                    if cur.peek() == Some('=') {
                        cur.bump();
                        Tok::Ge
                    } else {
                        Tok::Gt
                    }
                }
                '-' => {
                    if cur.peek() == Some('>') {
                        cur.bump();
                        Tok::Arrow
                    } else if cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                        lex_number(&mut cur, true)
                    } else {
                        Tok::Error("unexpected character `-`".into())
                    }
                }
                '"' => {
                    let mut s = String::new();
                    loop {
                        match cur.bump() {
                            Some('"') => break Tok::Str(s),
                            Some('\n') | None => {
                                break Tok::Error("unterminated string literal".into())
                            }
                            Some(c) => s.push(c),
                        }
                    }
                }
                other => Tok::Error(format!("unexpected character `{other}`")),
            }
        };

        let span = span_from(&cur);
        let done = tok == Tok::Eof;
        out.push(Token { tok, span });
        if done {
            break;
        }
    }
    out
}

fn lex_number(cur: &mut Cursor, negative: bool) -> Tok {
    let mut s = String::new();
    if negative {
        s.push('-');
    }
    while let Some(c) = cur.peek() {
        if c.is_ascii_digit() {
            s.push(c);
            cur.bump();
        } else {
            break;
        }
    }
    if cur.peek() == Some('.') {
        // only consume the dot if digits follow
        let mut lookahead = cur.chars.clone();
        lookahead.next();
        if lookahead.peek().is_some_and(|c| c.is_ascii_digit()) {
            s.push('.');
            cur.bump();
            while let Some(c) = cur.peek() {
                if c.is_ascii_digit() {
                    s.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
        }
    }
    match s.parse::<f64>() {
        Ok(n) => Tok::Number(n),
        Err(_) => Tok::Error(format!("malformed number `{s}`")),
    }
}

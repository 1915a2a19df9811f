//! Recursive-descent parser for protocol declarations.
//!
//! ```text
//! file     := decl*
//! decl     := "protocol" IDENT "{" root "}"
//! root     := ("cbegin" | "sbegin") ("." seq)?
//! seq      := "end" | action ("." seq)?
//! action   := "!<" msg ">" | "?(" msg ")"
//!           | "![" seq? "]*" | "?[" seq? "]*"
//!           | "!{" branches "}" | "?{" branches "}"
//! msg      := IDENT | "end" | seq
//! branches := IDENT ":" seq? ("," IDENT ":" seq?)* ","?
//! ```
//!
//! `//` starts a comment running to the end of the line. A choice must be the
//! last action of its sequence.

use std::fmt;

use thiserror::Error;

use super::{Branches, MessageType, SessionType, Side, TypeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    DuplicateLabel(String),
    BeginNotRoot,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(m) => write!(f, "syntax error: {m}"),
            ParseErrorKind::DuplicateLabel(l) => write!(f, "duplicate branch label `{l}`"),
            ParseErrorKind::BeginNotRoot => f.write_str("cbegin/sbegin may only appear at the root"),
        }
    }
}

/// A named protocol declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Protocol {
    pub name: String,
    pub ty: SessionType,
}

/// Parse every `protocol` declaration in a file.
pub fn parse_file(text: &str) -> Result<Vec<Protocol>, ParseError> {
    let mut p = Parser::new(text)?;
    let mut out = Vec::new();
    while !p.at(&Tok::Eof) {
        out.push(p.decl()?);
    }
    Ok(out)
}

/// Parse a source text holding exactly one protocol declaration.
pub fn parse_protocol(text: &str) -> Result<SessionType, ParseError> {
    let mut decls = parse_file(text)?;
    match decls.len() {
        1 => Ok(decls.remove(0).ty),
        n => Err(ParseError {
            line: 1,
            col: 1,
            kind: ParseErrorKind::Syntax(format!("expected one protocol declaration, found {n}")),
        }),
    }
}

/// Parse a bare type: either a root (`cbegin. ...`) or a remaining-session type.
pub fn parse_type(text: &str) -> Result<SessionType, ParseError> {
    let mut p = Parser::new(text)?;
    let t = if p.at_keyword("cbegin") || p.at_keyword("sbegin") { p.root()? } else { p.seq_opt()? };
    p.expect(&Tok::Eof)?;
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Bang,
    Query,
    LAngle,
    RAngle,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Star,
    LBrace,
    RBrace,
    Dot,
    Colon,
    Comma,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(i) => return write!(f, "`{i}`"),
            Tok::Bang => "`!`",
            Tok::Query => "`?`",
            Tok::LAngle => "`<`",
            Tok::RAngle => "`>`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBrack => "`[`",
            Tok::RBrack => "`]`",
            Tok::Star => "`*`",
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::Dot => "`.`",
            Tok::Colon => "`:`",
            Tok::Comma => "`,`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    while let Some(&c) = chars.peek() {
        let (l0, c0) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars<'_>>| {
            let ch = chars.next();
            if ch == Some('\n') {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            ch
        };
        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        if c == '/' {
            bump(&mut chars);
            if chars.peek() == Some(&'/') {
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    bump(&mut chars);
                }
                continue;
            }
            return Err(ParseError { line: l0, col: c0, kind: ParseErrorKind::Syntax("unexpected `/`".into()) });
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut ident = String::new();
            while let Some(&n) = chars.peek() {
                if n.is_ascii_alphanumeric() || n == '_' {
                    ident.push(n);
                    bump(&mut chars);
                } else {
                    break;
                }
            }
            out.push(Spanned { tok: Tok::Ident(ident), line: l0, col: c0 });
            continue;
        }
        let tok = match c {
            '!' => Tok::Bang,
            '?' => Tok::Query,
            '<' => Tok::LAngle,
            '>' => Tok::RAngle,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBrack,
            ']' => Tok::RBrack,
            '*' => Tok::Star,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '.' => Tok::Dot,
            ':' => Tok::Colon,
            ',' => Tok::Comma,
            other => {
                return Err(ParseError {
                    line: l0,
                    col: c0,
                    kind: ParseErrorKind::Syntax(format!("unexpected character `{other}`")),
                })
            }
        };
        bump(&mut chars);
        out.push(Spanned { tok, line: l0, col: c0 });
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

const KEYWORDS: [&str; 4] = ["protocol", "cbegin", "sbegin", "end"];

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        Ok(Parser { toks: lex(text)?, pos: 0 })
    }

    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn at(&self, t: &Tok) -> bool {
        &self.peek().tok == t
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(i) if i == kw)
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, kind: ParseErrorKind) -> ParseError {
        let s = self.peek();
        ParseError { line: s.line, col: s.col, kind }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let found = self.peek().tok.to_string();
        self.err_here(ParseErrorKind::Syntax(format!("expected {wanted}, found {found}")))
    }

    fn expect(&mut self, t: &Tok) -> Result<(), ParseError> {
        if self.at(t) {
            self.next();
            Ok(())
        } else {
            Err(self.unexpected(&t.to_string()))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match &self.peek().tok {
            Tok::Ident(i) if !KEYWORDS.contains(&i.as_str()) => {
                let i = i.clone();
                self.next();
                Ok(i)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn decl(&mut self) -> Result<Protocol, ParseError> {
        if !self.at_keyword("protocol") {
            return Err(self.unexpected("`protocol`"));
        }
        self.next();
        let name = self.ident("protocol name")?;
        self.expect(&Tok::LBrace)?;
        let ty = self.root()?;
        self.expect(&Tok::RBrace)?;
        Ok(Protocol { name, ty })
    }

    fn root(&mut self) -> Result<SessionType, ParseError> {
        let side = if self.at_keyword("cbegin") {
            Side::Client
        } else if self.at_keyword("sbegin") {
            Side::Server
        } else {
            return Err(self.unexpected("`cbegin` or `sbegin`"));
        };
        self.next();
        let body = if self.at(&Tok::Dot) {
            self.next();
            self.seq()?
        } else {
            SessionType::End
        };
        Ok(SessionType::begin(side, body))
    }

    fn at_seq_closer(&self) -> bool {
        matches!(self.peek().tok, Tok::RBrack | Tok::RBrace | Tok::Comma | Tok::RAngle | Tok::RParen | Tok::Eof)
    }

    fn seq_opt(&mut self) -> Result<SessionType, ParseError> {
        if self.at_seq_closer() {
            Ok(SessionType::End)
        } else {
            self.seq()
        }
    }

    fn seq(&mut self) -> Result<SessionType, ParseError> {
        if self.at_keyword("end") {
            self.next();
            return Ok(SessionType::End);
        }
        if self.at_keyword("cbegin") || self.at_keyword("sbegin") {
            return Err(self.err_here(ParseErrorKind::BeginNotRoot));
        }
        let polarity_out = match self.peek().tok {
            Tok::Bang => true,
            Tok::Query => false,
            _ => return Err(self.unexpected("`!`, `?` or `end`")),
        };
        self.next();
        match self.peek().tok {
            Tok::LAngle | Tok::LParen => {
                let (open, close) = if polarity_out { (Tok::LAngle, Tok::RAngle) } else { (Tok::LParen, Tok::RParen) };
                self.expect(&open)?;
                let msg = self.msg()?;
                self.expect(&close)?;
                let cont = self.cont()?;
                Ok(if polarity_out { SessionType::send(msg, cont) } else { SessionType::recv(msg, cont) })
            }
            Tok::LBrack => {
                self.next();
                let body = self.seq_opt()?;
                self.expect(&Tok::RBrack)?;
                self.expect(&Tok::Star)?;
                let cont = self.cont()?;
                Ok(if polarity_out { SessionType::out_iter(body, cont) } else { SessionType::in_iter(body, cont) })
            }
            Tok::LBrace => {
                self.next();
                let branches = self.branches()?;
                self.expect(&Tok::RBrace)?;
                if self.at(&Tok::Dot) {
                    return Err(self
                        .err_here(ParseErrorKind::Syntax("a choice must be the last action of its sequence".into())));
                }
                Ok(if polarity_out { SessionType::Select(branches) } else { SessionType::Offer(branches) })
            }
            _ => Err(self.unexpected("`<`, `(`, `[` or `{`")),
        }
    }

    fn cont(&mut self) -> Result<SessionType, ParseError> {
        if self.at(&Tok::Dot) {
            self.next();
            self.seq()
        } else {
            Ok(SessionType::End)
        }
    }

    fn msg(&mut self) -> Result<MessageType, ParseError> {
        match &self.peek().tok {
            Tok::Ident(i) if i == "end" => {
                self.next();
                Ok(MessageType::session(SessionType::End))
            }
            Tok::Ident(i) if i == "cbegin" || i == "sbegin" => Err(self.err_here(ParseErrorKind::BeginNotRoot)),
            Tok::Ident(_) => Ok(MessageType::Base(self.ident("message type")?)),
            Tok::Bang | Tok::Query => Ok(MessageType::session(self.seq()?)),
            _ => Err(self.unexpected("message type")),
        }
    }

    fn branches(&mut self) -> Result<Branches, ParseError> {
        let start = self.peek().clone();
        let mut out: Vec<(String, SessionType)> = Vec::new();
        loop {
            if self.at(&Tok::RBrace) && !out.is_empty() {
                break;
            }
            let label_pos = self.peek().clone();
            let label = self.ident("branch label")?;
            if out.iter().any(|(l, _)| *l == label) {
                return Err(ParseError {
                    line: label_pos.line,
                    col: label_pos.col,
                    kind: ParseErrorKind::DuplicateLabel(label),
                });
            }
            self.expect(&Tok::Colon)?;
            let body = self.seq_opt()?;
            out.push((label, body));
            if self.at(&Tok::Comma) {
                self.next();
            } else {
                break;
            }
        }
        Branches::new(out).map_err(|e| ParseError {
            line: start.line,
            col: start.col,
            kind: match e {
                TypeError::DuplicateLabel(l) => ParseErrorKind::DuplicateLabel(l),
                other => ParseErrorKind::Syntax(other.to_string()),
            },
        })
    }
}

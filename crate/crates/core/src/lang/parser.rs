//! Hand-written lexer and recursive-descent parser for the While language.
//!
//! `;` is right-associative, one-armed conditionals desugar to an `else skip`
//! branch, and `#` starts a comment running to the end of the line. Fixed
//! variables `x@T` are accepted only when the caller asks for fixed mode.

use std::collections::BTreeSet;

use super::ast::{BinOp, Command, Expr, VarRef};
use crate::error::{Error, Result};

const KEYWORDS: [&str; 7] = ["skip", "if", "then", "else", "end", "while", "do"];

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Op(BinOp),
    Assign,
    Semi,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    At,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let mut push = |tok, len: usize, i: &mut usize, col: &mut usize| {
            out.push(Token { tok, line: tl, col: tc });
            *i += len;
            *col += len;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                col += i - start;
                out.push(Token { tok: Tok::Ident(word), line: tl, col: tc });
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                col += i - start;
                let n = digits.parse::<i64>().map_err(|_| Error::Syntax {
                    line: tl,
                    col: tc,
                    msg: format!("integer literal `{digits}` out of range"),
                })?;
                out.push(Token { tok: Tok::Int(n), line: tl, col: tc });
            }
            _ => {
                let next = chars.get(i + 1).copied();
                match (c, next) {
                    (':', Some('=')) => push(Tok::Assign, 2, &mut i, &mut col),
                    ('=', Some('=')) => push(Tok::Op(BinOp::Eq), 2, &mut i, &mut col),
                    ('!', Some('=')) => push(Tok::Op(BinOp::Ne), 2, &mut i, &mut col),
                    ('<', Some('=')) => push(Tok::Op(BinOp::Le), 2, &mut i, &mut col),
                    ('<', _) => push(Tok::Op(BinOp::Lt), 1, &mut i, &mut col),
                    ('+', _) => push(Tok::Op(BinOp::Add), 1, &mut i, &mut col),
                    ('-', _) => push(Tok::Op(BinOp::Sub), 1, &mut i, &mut col),
                    ('*', _) => push(Tok::Op(BinOp::Mul), 1, &mut i, &mut col),
                    (';', _) => push(Tok::Semi, 1, &mut i, &mut col),
                    ('(', _) => push(Tok::LParen, 1, &mut i, &mut col),
                    (')', _) => push(Tok::RParen, 1, &mut i, &mut col),
                    ('{', _) => push(Tok::LBrace, 1, &mut i, &mut col),
                    ('}', _) => push(Tok::RBrace, 1, &mut i, &mut col),
                    (',', _) => push(Tok::Comma, 1, &mut i, &mut col),
                    ('@', _) => push(Tok::At, 1, &mut i, &mut col),
                    _ => {
                        let mut op = c.to_string();
                        if let Some(n) = next.filter(|n| "=<>&|".contains(*n)) {
                            op.push(n);
                        }
                        return Err(Error::UnknownOperator { line: tl, col: tc, op });
                    }
                }
            }
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    allow_fixed: bool,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T> {
        let t = self.peek();
        Err(Error::Syntax {
            line: t.line,
            col: t.col,
            msg: msg.into(),
        })
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Op(op) => format!("`{}`", op.symbol()),
            Tok::Assign => "`:=`".into(),
            Tok::Semi => "`;`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::At => "`@`".into(),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<()> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            let found = Self::describe(&self.peek().tok);
            self.error(format!("expected `{kw}`, found {found}"))
        }
    }

    fn program(&mut self) -> Result<Command> {
        let c = self.command()?;
        if self.peek().tok != Tok::Eof {
            let found = Self::describe(&self.peek().tok);
            return self.error(format!("expected `;` or end of input, found {found}"));
        }
        Ok(c)
    }

    fn command(&mut self) -> Result<Command> {
        let first = self.simple()?;
        if self.peek().tok == Tok::Semi {
            self.bump();
            let rest = self.command()?;
            Ok(Command::seq(first, rest))
        } else {
            Ok(first)
        }
    }

    fn simple(&mut self) -> Result<Command> {
        if self.is_keyword("skip") {
            self.bump();
            return Ok(Command::Skip);
        }
        if self.is_keyword("if") {
            self.bump();
            let cond = self.expr()?;
            self.expect_keyword("then")?;
            let then = self.command()?;
            let els = if self.is_keyword("else") {
                self.bump();
                self.command()?
            } else {
                Command::Skip
            };
            self.expect_keyword("end")?;
            return Ok(Command::if_(cond, then, els));
        }
        if self.is_keyword("while") {
            self.bump();
            let cond = self.expr()?;
            self.expect_keyword("do")?;
            let body = self.command()?;
            self.expect_keyword("end")?;
            return Ok(Command::while_(cond, body));
        }
        match &self.peek().tok {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let target = self.var_ref()?;
                if self.peek().tok != Tok::Assign {
                    let found = Self::describe(&self.peek().tok);
                    return self.error(format!("expected `:=`, found {found}"));
                }
                self.bump();
                let rhs = self.expr()?;
                Ok(Command::Assign(target, rhs))
            }
            other => {
                let found = Self::describe(other);
                self.error(format!("expected a command, found {found}"))
            }
        }
    }

    fn var_ref(&mut self) -> Result<VarRef> {
        let t = self.bump();
        let Tok::Ident(name) = t.tok else {
            unreachable!("var_ref called on a non-identifier")
        };
        if self.peek().tok != Tok::At {
            return Ok(VarRef::Floating(name));
        }
        let at = self.bump();
        if !self.allow_fixed {
            return Err(Error::FixedNotAllowed {
                line: at.line,
                col: at.col,
                name,
            });
        }
        let level = self.level(&at)?;
        Ok(VarRef::Fixed { name, level })
    }

    /// A lattice element name: an identifier, or a `{a,b}` set literal for
    /// powerset lattices (rendered canonically).
    fn level(&mut self, at: &Token) -> Result<String> {
        let malformed = |t: &Token, msg: String| Error::MalformedFixedIndex {
            line: t.line,
            col: t.col,
            msg,
        };
        let t = self.bump();
        match t.tok {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => Ok(s),
            Tok::LBrace => {
                let mut members = BTreeSet::new();
                if self.peek().tok == Tok::RBrace {
                    self.bump();
                    return Ok("{}".into());
                }
                loop {
                    let t = self.bump();
                    match &t.tok {
                        Tok::Ident(s) => {
                            members.insert(s.clone());
                        }
                        other => {
                            return Err(malformed(&t, format!("expected a variable name in set, found {}", Self::describe(other))))
                        }
                    }
                    let t = self.bump();
                    match &t.tok {
                        Tok::Comma => continue,
                        Tok::RBrace => break,
                        other => return Err(malformed(&t, format!("expected `,` or `}}`, found {}", Self::describe(other)))),
                    }
                }
                Ok(crate::lattice::render_set(members.iter().map(String::as_str)))
            }
            other => Err(malformed(at, format!("expected a lattice element after `@`, found {}", Self::describe(&other)))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        self.binary(1)
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr> {
        if min_prec > 3 {
            return self.atom();
        }
        let mut lhs = self.binary(min_prec + 1)?;
        while let Tok::Op(op) = self.peek().tok {
            if op.precedence() != min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(min_prec + 1)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().tok.clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Lit(n))
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => Ok(Expr::Var(self.var_ref()?)),
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                if self.peek().tok != Tok::RParen {
                    let found = Self::describe(&self.peek().tok);
                    return self.error(format!("expected `)`, found {found}"));
                }
                self.bump();
                Ok(e)
            }
            other => {
                let found = Self::describe(&other);
                self.error(format!("expected an expression, found {found}"))
            }
        }
    }
}

/// Parses a floating-variable program; `x@T` syntax is rejected.
pub fn parse_program(text: &str) -> Result<Command> {
    parse_program_with(text, false)
}

/// Parses a program in the extended language with fixed variables `x@T`.
pub fn parse_fixed_program(text: &str) -> Result<Command> {
    parse_program_with(text, true)
}

pub fn parse_program_with(text: &str, allow_fixed: bool) -> Result<Command> {
    let toks = lex(text)?;
    Parser { toks, pos: 0, allow_fixed }.program()
}

/// Parses a standalone expression (used by tests and tools).
pub fn parse_expr(text: &str, allow_fixed: bool) -> Result<Expr> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, allow_fixed };
    let e = p.expr()?;
    if p.peek().tok != Tok::Eof {
        let found = Parser::describe(&p.peek().tok);
        return p.error(format!("unexpected {found} after expression"));
    }
    Ok(e)
}

//! Parser for the Python-style surface syntax produced by the renderer.
//!
//! Catalog files store their fragments in this syntax, and whole programs can
//! be read back from rendered text.

use std::fmt;

use crate::program::{BinOp, Expr, LoopBound, Predicate, RelOp, Stmt, Var};
use crate::render::FUNCTION_NAME;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
        }
    }
}

const SYMBOLS: [&str; 16] = [
    "==", "!=", ">=", "<=", "&&", "||", ">", "<", "+", "-", "*", "%", "=", "(", ")", ",",
];

fn tokenize(src: &str, line: usize, col_offset: usize) -> Result<Vec<(Tok, usize)>, SyntaxError> {
    let mut toks = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    'outer: while i < bytes.len() {
        let c = bytes[i] as char;
        let column = col_offset + i + 1;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            break;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n = src[start..i].parse::<i64>().map_err(|_| SyntaxError {
                line,
                column,
                message: format!("integer literal `{}` out of range", &src[start..i]),
            })?;
            toks.push((Tok::Int(n), column));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            toks.push((Tok::Ident(src[start..i].to_string()), column));
            continue;
        }
        for sym in SYMBOLS {
            if src[i..].starts_with(sym) {
                toks.push((Tok::Sym(sym), column));
                i += sym.len();
                continue 'outer;
            }
        }
        if c == ':' {
            toks.push((Tok::Sym(":"), column));
            i += 1;
            continue;
        }
        return Err(SyntaxError {
            line,
            column,
            message: format!("unexpected character `{c}`"),
        });
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    end_column: usize,
}

impl Parser {
    fn new(src: &str, line: usize, col_offset: usize) -> Result<Parser, SyntaxError> {
        Ok(Parser {
            toks: tokenize(src, line, col_offset)?,
            pos: 0,
            line,
            end_column: col_offset + src.trim_end().len() + 1,
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn column(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|(_, c)| *c)
            .unwrap_or(self.end_column)
    }

    fn error(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            line: self.line,
            column: self.column(),
            message: message.into(),
        }
    }

    fn unexpected(&self, wanted: &str) -> SyntaxError {
        match self.peek() {
            Some(t) => self.error(format!("expected {wanted}, found {t}")),
            None => self.error(format!("expected {wanted}, found end of input")),
        }
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(s)) if *s == sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_word(&mut self, word: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == word) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, sym: &str) -> Result<(), SyntaxError> {
        if self.eat_sym(sym) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{sym}`")))
        }
    }

    fn expect_end(&self) -> Result<(), SyntaxError> {
        match self.peek() {
            None => Ok(()),
            Some(_) => Err(self.unexpected("end of input")),
        }
    }

    fn var(&mut self) -> Result<Var, SyntaxError> {
        match self.peek() {
            Some(Tok::Ident(name)) => match Var::from_name(name) {
                Some(v) => {
                    self.pos += 1;
                    Ok(v)
                }
                None => Err(self.error(format!("unknown variable `{name}` (only x and y)"))),
            },
            _ => Err(self.unexpected("a variable")),
        }
    }

    fn int(&mut self) -> Result<i64, SyntaxError> {
        match self.peek() {
            Some(Tok::Int(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.unexpected("an integer")),
        }
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat_sym("+") {
                BinOp::Add
            } else if self.eat_sym("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat_sym("*") {
                BinOp::Mul
            } else if self.eat_sym("%") {
                BinOp::Rem
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        if self.eat_sym("-") {
            return Ok(Expr::lit(-self.int()?));
        }
        if self.eat_sym("(") {
            let e = self.expr()?;
            self.expect_sym(")")?;
            return Ok(e);
        }
        match self.peek() {
            Some(Tok::Int(_)) => Ok(Expr::lit(self.int()?)),
            Some(Tok::Ident(_)) => Ok(Expr::var(self.var()?)),
            _ => Err(self.unexpected("an expression")),
        }
    }

    fn relop(&mut self) -> Option<RelOp> {
        let op = match self.peek() {
            Some(Tok::Sym("==")) => RelOp::Eq,
            Some(Tok::Sym("!=")) => RelOp::Ne,
            Some(Tok::Sym(">")) => RelOp::Gt,
            Some(Tok::Sym("<")) => RelOp::Lt,
            Some(Tok::Sym(">=")) => RelOp::Ge,
            Some(Tok::Sym("<=")) => RelOp::Le,
            _ => return None,
        };
        self.pos += 1;
        Some(op)
    }

    fn predicate(&mut self) -> Result<Predicate, SyntaxError> {
        let mut lhs = self.conjunction()?;
        while self.eat_word("or") || self.eat_sym("||") {
            let rhs = self.conjunction()?;
            lhs = Predicate::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Predicate, SyntaxError> {
        let mut lhs = self.atom()?;
        while self.eat_word("and") || self.eat_sym("&&") {
            let rhs = self.atom()?;
            lhs = Predicate::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<Predicate, SyntaxError> {
        let start = self.pos;
        // A leading `(` may open either a grouped predicate or an expression.
        let as_compare = self.expr().and_then(|lhs| match self.relop() {
            Some(op) => Ok(Predicate::cmp(lhs, op, self.expr()?)),
            None => Err(self.unexpected("a comparison operator")),
        });
        match as_compare {
            Ok(p) => Ok(p),
            Err(compare_err) => {
                self.pos = start;
                if self.eat_sym("(") {
                    let p = self.predicate()?;
                    self.expect_sym(")")?;
                    return Ok(p);
                }
                if let Ok(v) = self.var() {
                    if !matches!(self.peek(), Some(Tok::Sym(s)) if *s != ")") {
                        return Ok(Predicate::Flag(v));
                    }
                    self.pos = start;
                }
                Err(compare_err)
            }
        }
    }
}

pub fn parse_expr(src: &str) -> Result<Expr, SyntaxError> {
    let mut p = Parser::new(src, 1, 0)?;
    let e = p.expr()?;
    p.expect_end()?;
    Ok(e)
}

pub fn parse_predicate(src: &str) -> Result<Predicate, SyntaxError> {
    parse_predicate_at(src, 1, 0)
}

pub(crate) fn parse_predicate_at(
    src: &str,
    line: usize,
    col: usize,
) -> Result<Predicate, SyntaxError> {
    let mut p = Parser::new(src, line, col)?;
    let pred = p.predicate()?;
    p.expect_end()?;
    Ok(pred)
}

/// `x = <expr>`
pub fn parse_assignment(src: &str) -> Result<(Var, Expr), SyntaxError> {
    parse_assignment_at(src, 1, 0)
}

pub(crate) fn parse_assignment_at(
    src: &str,
    line: usize,
    col: usize,
) -> Result<(Var, Expr), SyntaxError> {
    let mut p = Parser::new(src.trim_end_matches(';'), line, col)?;
    let target = p.var()?;
    p.expect_sym("=")?;
    let e = p.expr()?;
    p.expect_end()?;
    Ok((target, e))
}

/// `range(<n>)` or a bare positive integer.
pub fn parse_counted_bound(src: &str) -> Result<u32, SyntaxError> {
    parse_counted_bound_at(src, 1, 0)
}

pub(crate) fn parse_counted_bound_at(
    src: &str,
    line: usize,
    col: usize,
) -> Result<u32, SyntaxError> {
    let mut p = Parser::new(src, line, col)?;
    let wrapped = p.eat_word("range");
    if wrapped {
        p.expect_sym("(")?;
    }
    let n = p.int()?;
    if wrapped {
        p.expect_sym(")")?;
    }
    p.expect_end()?;
    u32::try_from(n)
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| SyntaxError {
            line,
            column: col + 1,
            message: format!("loop count must be a positive integer, got {n}"),
        })
}

struct Line<'a> {
    number: usize,
    indent: usize,
    text: &'a str,
}

/// Parses a Python-style `def compute(...)` function.
pub fn parse_program(src: &str) -> Result<(Vec<Var>, Vec<Stmt>), SyntaxError> {
    let lines: Vec<Line> = src
        .lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let trimmed = raw.trim_start();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                return None;
            }
            Some(Line {
                number: i + 1,
                indent: raw.len() - trimmed.len(),
                text: trimmed.trim_end(),
            })
        })
        .collect();
    let Some(header) = lines.first() else {
        return Err(SyntaxError {
            line: 1,
            column: 1,
            message: "empty program".into(),
        });
    };
    let params = parse_header(header)?;
    let mut pos = 1;
    let body = parse_block(&lines, &mut pos, header.indent)?;
    if let Some(extra) = lines.get(pos) {
        return Err(SyntaxError {
            line: extra.number,
            column: extra.indent + 1,
            message: "unexpected dedent".into(),
        });
    }
    Ok((params, body))
}

fn parse_header(line: &Line) -> Result<Vec<Var>, SyntaxError> {
    let mut p = Parser::new(line.text, line.number, line.indent)?;
    if !p.eat_word("def") {
        return Err(p.unexpected("`def`"));
    }
    if !p.eat_word(FUNCTION_NAME) {
        return Err(p.unexpected(&format!("`{FUNCTION_NAME}`")));
    }
    p.expect_sym("(")?;
    let mut params = Vec::new();
    if !p.eat_sym(")") {
        loop {
            params.push(p.var()?);
            if p.eat_sym(")") {
                break;
            }
            p.expect_sym(",")?;
        }
    }
    p.expect_sym(":")?;
    p.expect_end()?;
    Ok(params)
}

fn header_body<'a>(line: &'a Line, keyword: &str) -> Option<&'a str> {
    let rest = line.text.strip_prefix(keyword)?;
    if !rest.starts_with([' ', '(']) && !rest.is_empty() {
        return None;
    }
    rest.strip_suffix(':').map(str::trim)
}

fn parse_block(
    lines: &[Line],
    pos: &mut usize,
    parent_indent: usize,
) -> Result<Vec<Stmt>, SyntaxError> {
    let Some(first) = lines.get(*pos).filter(|l| l.indent > parent_indent) else {
        let (line, column) = lines
            .get(*pos)
            .map(|l| (l.number, l.indent + 1))
            .unwrap_or((lines.last().map(|l| l.number + 1).unwrap_or(1), 1));
        return Err(SyntaxError {
            line,
            column,
            message: "expected an indented block".into(),
        });
    };
    let indent = first.indent;
    let mut out = Vec::new();
    while let Some(line) = lines.get(*pos) {
        if line.indent < indent {
            if line.indent > parent_indent {
                return Err(SyntaxError {
                    line: line.number,
                    column: line.indent + 1,
                    message: "inconsistent dedent".into(),
                });
            }
            break;
        }
        if line.indent > indent {
            return Err(SyntaxError {
                line: line.number,
                column: line.indent + 1,
                message: "unexpected indent".into(),
            });
        }
        *pos += 1;
        let col = line.indent;
        if let Some(cond) = header_body(line, "if") {
            let offset = col + line.text.find(cond).unwrap_or(0);
            let cond = parse_predicate_at(cond, line.number, offset)?;
            let then_body = parse_block(lines, pos, indent)?;
            let else_body = match lines.get(*pos) {
                Some(l) if l.indent == indent && l.text == "else:" => {
                    *pos += 1;
                    Some(parse_block(lines, pos, indent)?)
                }
                _ => None,
            };
            out.push(Stmt::If {
                cond,
                then_body,
                else_body,
            });
        } else if let Some(cond) = header_body(line, "while") {
            let offset = col + line.text.find(cond).unwrap_or(0);
            let cond = parse_predicate_at(cond, line.number, offset)?;
            let body = parse_block(lines, pos, indent)?;
            out.push(Stmt::while_loop(cond, body));
        } else if let Some(spec) = header_body(line, "for") {
            let (_, range) = spec.split_once(" in ").ok_or_else(|| SyntaxError {
                line: line.number,
                column: col + 1,
                message: "expected `for <name> in range(<n>):`".into(),
            })?;
            let offset = col + line.text.find(range).unwrap_or(0);
            let n = parse_counted_bound_at(range.trim(), line.number, offset)?;
            let body = parse_block(lines, pos, indent)?;
            out.push(Stmt::Loop {
                bound: LoopBound::Counted(n),
                body,
            });
        } else if let Some(rest) = line.text.strip_prefix("return ") {
            let mut p = Parser::new(rest, line.number, col + 7)?;
            let v = p.var()?;
            p.expect_end()?;
            out.push(Stmt::Return(v));
        } else if line.text == "else:" {
            return Err(SyntaxError {
                line: line.number,
                column: col + 1,
                message: "`else` without `if`".into(),
            });
        } else {
            let (target, value) = parse_assignment_at(line.text, line.number, col)?;
            out.push(Stmt::assign(target, value));
        }
    }
    Ok(out)
}

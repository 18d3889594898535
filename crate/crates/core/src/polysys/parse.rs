//! Parser and printer for the system DSL.
//!
//! ```text
//! # comment
//! var x1 x2;
//! par p1 p2;
//! eq x1^2 - x2^2 - p1;
//! eq 2*x1*x2 - p2;
//! ```
//!
//! Expressions use `+ - * ^` with parentheses, integer or decimal literals and
//! the imaginary unit `i`. Exponents must be nonnegative integer literals.

use std::fmt::Write as _;

use num_complex::Complex64;

use super::{PolyError, PolySystem, Polynomial};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Int(u32),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    Semi,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, PolyError> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let ch = chars[i];
            let (line_no, col) = (li + 1, i + 1);
            let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, line: line_no, col });
            match ch {
                '#' => break,
                c if c.is_whitespace() => i += 1,
                '+' => {
                    push(&mut out, Tok::Plus);
                    i += 1
                }
                '-' => {
                    push(&mut out, Tok::Minus);
                    i += 1
                }
                '*' => {
                    push(&mut out, Tok::Star);
                    i += 1
                }
                '^' => {
                    push(&mut out, Tok::Caret);
                    i += 1
                }
                '(' => {
                    push(&mut out, Tok::LParen);
                    i += 1
                }
                ')' => {
                    push(&mut out, Tok::RParen);
                    i += 1
                }
                ';' => {
                    push(&mut out, Tok::Semi);
                    i += 1
                }
                c if c.is_ascii_digit() || c == '.' => {
                    let start = i;
                    while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                        i += 1;
                    }
                    let s: String = chars[start..i].iter().collect();
                    let tok = if s.contains('.') {
                        Tok::Num(s.parse().map_err(|_| PolyError::Syntax { line: line_no, col, msg: format!("malformed number `{s}`") })?)
                    } else {
                        match s.parse::<u32>() {
                            Ok(v) => Tok::Int(v),
                            Err(_) => Tok::Num(s.parse().map_err(|_| PolyError::Syntax {
                                line: line_no,
                                col,
                                msg: format!("malformed number `{s}`"),
                            })?),
                        }
                    };
                    push(&mut out, tok);
                }
                c if c.is_alphabetic() || c == '_' => {
                    let start = i;
                    while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                        i += 1;
                    }
                    push(&mut out, Tok::Ident(chars[start..i].iter().collect()));
                }
                other => return Err(PolyError::Syntax { line: line_no, col, msg: format!("unexpected character `{other}`") }),
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    names: Vec<String>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn err_here(&self, msg: impl Into<String>) -> PolyError {
        let (line, col) = match self.peek().or_else(|| self.toks.last()) {
            Some(t) => (t.line, t.col),
            None => (1, 1),
        };
        PolyError::Syntax { line, col, msg: msg.into() }
    }

    fn eat(&mut self, want: &Tok) -> bool {
        if self.peek().map(|t| &t.tok) == Some(want) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<(), PolyError> {
        if self.eat(want) {
            Ok(())
        } else {
            Err(self.err_here(format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(&Tok::Plus) {
                acc = &acc + &self.term()?;
            } else if self.eat(&Tok::Minus) {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.unary()?;
        while self.eat(&Tok::Star) {
            acc = &acc * &self.unary()?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Polynomial, PolyError> {
        if self.eat(&Tok::Minus) {
            return Ok(-&self.unary()?);
        }
        if self.eat(&Tok::Plus) {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Polynomial, PolyError> {
        let base = self.atom()?;
        if self.eat(&Tok::Caret) {
            match self.peek().map(|t| t.tok.clone()) {
                Some(Tok::Int(e)) => {
                    self.pos += 1;
                    Ok(base.pow(e))
                }
                _ => Err(self.err_here("exponent must be a nonnegative integer literal")),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Polynomial, PolyError> {
        let arity = self.names.len();
        let Some(tok) = self.peek().cloned() else {
            return Err(self.err_here("unexpected end of input"));
        };
        self.pos += 1;
        match tok.tok {
            Tok::Int(v) => Ok(Polynomial::real(arity, v as f64)),
            Tok::Num(v) => Ok(Polynomial::real(arity, v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) if name == "i" => Ok(Polynomial::constant(arity, Complex64::new(0.0, 1.0))),
            Tok::Ident(name) => match self.names.iter().position(|n| *n == name) {
                Some(k) => Ok(Polynomial::indeterminate(arity, k)),
                None => Err(PolyError::Undeclared { line: tok.line, col: tok.col, name }),
            },
            _ => {
                self.pos -= 1;
                Err(self.err_here("expected a number, identifier or `(`"))
            }
        }
    }
}

fn is_keyword(t: &Token, kw: &str) -> bool {
    matches!(&t.tok, Tok::Ident(s) if s == kw)
}

/// Parses DSL text into a system.
pub fn parse_system(text: &str) -> Result<PolySystem, PolyError> {
    let toks = lex(text)?;
    let mut vars: Option<Vec<String>> = None;
    let mut pars: Option<Vec<String>> = None;
    let mut eq_spans: Vec<(usize, usize)> = Vec::new();
    let mut pos = 0;
    // First pass: declarations and statement boundaries.
    while pos < toks.len() {
        let head = &toks[pos];
        let end = toks[pos..].iter().position(|t| t.tok == Tok::Semi).map(|k| pos + k).ok_or(PolyError::Syntax {
            line: head.line,
            col: head.col,
            msg: "missing `;`".into(),
        })?;
        if is_keyword(head, "var") || is_keyword(head, "par") {
            let mut ids = Vec::new();
            for t in &toks[pos + 1..end] {
                match &t.tok {
                    Tok::Ident(s) if s == "i" || s == "var" || s == "par" || s == "eq" => {
                        return Err(PolyError::Syntax { line: t.line, col: t.col, msg: format!("reserved name `{s}`") })
                    }
                    Tok::Ident(s) => ids.push(s.clone()),
                    _ => return Err(PolyError::Syntax { line: t.line, col: t.col, msg: "expected identifier".into() }),
                }
            }
            if ids.is_empty() {
                return Err(PolyError::Syntax { line: head.line, col: head.col, msg: "empty declaration".into() });
            }
            let slot = if is_keyword(head, "var") { &mut vars } else { &mut pars };
            if slot.is_some() {
                return Err(PolyError::Syntax { line: head.line, col: head.col, msg: "duplicate declaration line".into() });
            }
            *slot = Some(ids);
        } else if is_keyword(head, "eq") {
            if vars.is_none() || pars.is_none() {
                return Err(PolyError::Syntax { line: head.line, col: head.col, msg: "`var` and `par` must precede equations".into() });
            }
            eq_spans.push((pos + 1, end));
        } else {
            return Err(PolyError::Syntax { line: head.line, col: head.col, msg: "expected `var`, `par` or `eq`".into() });
        }
        pos = end + 1;
    }
    let vars = vars.ok_or(PolyError::Syntax { line: 1, col: 1, msg: "missing `var` line".into() })?;
    let pars = pars.ok_or(PolyError::Syntax { line: 1, col: 1, msg: "missing `par` line".into() })?;
    let names: Vec<String> = vars.iter().chain(pars.iter()).cloned().collect();
    for (k, n) in names.iter().enumerate() {
        if names[..k].contains(n) {
            return Err(PolyError::Syntax { line: 1, col: 1, msg: format!("`{n}` declared twice") });
        }
    }
    let mut equations = Vec::new();
    for (start, end) in eq_spans {
        let mut p = Parser { toks: &toks[..end], pos: start, names: names.clone() };
        let poly = p.expr()?;
        if p.pos != end {
            return Err(p.err_here("unexpected token"));
        }
        if poly.is_zero() {
            let t = &toks[start.min(end.saturating_sub(1))];
            return Err(PolyError::ZeroEquation { line: t.line });
        }
        equations.push(poly);
    }
    PolySystem::new(vars, pars, equations)
}

fn fmt_real(v: f64) -> String {
    // Display is the shortest round-trip decimal and never uses exponents.
    let s = format!("{}", v.abs());
    if s.contains('.') {
        s
    } else {
        format!("{s}.0")
    }
}

/// Renders a system back into DSL text that parses to the same monomials.
pub fn print_system(sys: &PolySystem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "var {};", sys.var_names().join(" "));
    let _ = writeln!(out, "par {};", sys.param_names().join(" "));
    let names: Vec<&String> = sys.var_names().iter().chain(sys.param_names()).collect();
    for eq in sys.equations() {
        let mut line = String::from("eq");
        for (k, t) in eq.terms().iter().enumerate() {
            let c = t.coefficient;
            let coeff = if c.im == 0.0 {
                let sign = if c.re < 0.0 { "-" } else { "+" };
                format!("{sign} {}", fmt_real(c.re))
            } else if c.re == 0.0 {
                let sign = if c.im < 0.0 { "-" } else { "+" };
                format!("{sign} {}*i", fmt_real(c.im))
            } else {
                let re_sign = if c.re < 0.0 { "-" } else { "" };
                let im_sign = if c.im < 0.0 { "-" } else { "+" };
                format!("+ ({re_sign}{} {im_sign} {}*i)", fmt_real(c.re), fmt_real(c.im))
            };
            let coeff = if k == 0 { coeff.trim_start_matches("+ ").to_string() } else { coeff };
            line.push(' ');
            line.push_str(&coeff);
            for (v, &e) in t.exponents.iter().enumerate() {
                match e {
                    0 => {}
                    1 => {
                        let _ = write!(line, "*{}", names[v]);
                    }
                    _ => {
                        let _ = write!(line, "*{}^{e}", names[v]);
                    }
                }
            }
        }
        line.push(';');
        out.push_str(&line);
        out.push('\n');
    }
    out
}

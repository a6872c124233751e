//! Text format for polynomial ODE systems.
//!
//! ```text
//! # comment
//! vars x y
//! param l = 2
//! dx/dt = l*y + x^2
//! dy/dt = -l*x
//! equilibrium 0 0          # optional
//! basis 1 0 0 1            # optional, row-major n*n
//! ```
//!
//! Statements are separated by newlines or `;`. Expressions use `+ - * /`,
//! `^` with non-negative integer exponents, parentheses, numeric literals and
//! parameter names. Everything is expanded to canonical polynomials at parse
//! time; division is only allowed by constants.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::error::{Error, ParseError, Position, Result};
use crate::poly::{PolyMap, Polynomial};

/// Maximum distance of a supplied equilibrium from a true zero of the field.
pub const EQUILIBRIUM_TOL: f64 = 1e-9;

const MAX_EXPONENT: f64 = 64.0;

#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    pub variables: Vec<String>,
    pub parameters: Vec<(String, f64)>,
    /// One component per variable, over the declared variable order.
    pub field: PolyMap,
    pub equilibrium: Option<Vec<f64>>,
    /// Basis matrix override, columns centre-first.
    pub basis: Option<DMatrix<f64>>,
}

pub fn parse_system(text: &str) -> Result<SystemSpec> {
    Parser::default().run(text).map_err(Error::from)
}

/// Re-expands the field about `point` and checks that the new origin is an
/// equilibrium.
pub fn shift_equilibrium(spec: &SystemSpec, point: &[f64]) -> Result<SystemSpec> {
    let shifted = spec.shifted(point)?;
    let residuals = shifted.field.constants();
    if residuals.iter().any(|r| r.abs() > EQUILIBRIUM_TOL) {
        return Err(Error::NotEquilibrium { residuals });
    }
    Ok(shifted)
}

impl SystemSpec {
    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    /// The field in coordinates `x' = x - point`, without any equilibrium
    /// check. The `equilibrium` entry is moved along with the origin.
    pub fn shifted(&self, point: &[f64]) -> Result<SystemSpec> {
        let n = self.dim();
        if point.len() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: point.len(),
            });
        }
        let subs: Vec<Polynomial> = (0..n)
            .map(|i| &Polynomial::var(n, i) + &Polynomial::constant(n, point[i]))
            .collect();
        let field = self.field.compose(&subs, None)?;
        let equilibrium = self
            .equilibrium
            .as_ref()
            .map(|e| e.iter().zip(point).map(|(a, b)| a - b).collect());
        Ok(SystemSpec {
            variables: self.variables.clone(),
            parameters: self.parameters.clone(),
            field,
            equilibrium,
            basis: self.basis.clone(),
        })
    }

    /// Canonical text; parsing it reproduces `self`.
    pub fn render(&self) -> String {
        self.to_string()
    }

    /// Hex SHA-256 of the canonical rendering.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.render().as_bytes()))
    }
}

impl FromStr for SystemSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_system(s)
    }
}

impl fmt::Display for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vars {}", self.variables.join(" "))?;
        for (name, value) in &self.parameters {
            writeln!(f, "param {name} = {value}")?;
        }
        for (name, p) in self.variables.iter().zip(self.field.components()) {
            writeln!(f, "d{name}/dt = {}", p.display(&self.variables))?;
        }
        if let Some(eq) = &self.equilibrium {
            let parts: Vec<String> = eq.iter().map(|v| v.to_string()).collect();
            writeln!(f, "equilibrium {}", parts.join(" "))?;
        }
        if let Some(b) = &self.basis {
            let mut parts = Vec::new();
            for i in 0..b.nrows() {
                for j in 0..b.ncols() {
                    parts.push(b[(i, j)].to_string());
                }
            }
            writeln!(f, "basis {}", parts.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eq,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Slash => f.write_str("`/`"),
            Tok::Caret => f.write_str("`^`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Eq => f.write_str("`=`"),
        }
    }
}

fn syntax(at: Position, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        at,
        message: message.into(),
    }
}

fn tokenize(src: &str, line: usize, col0: usize) -> Result<Vec<(Tok, Position)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let at = Position {
            line,
            column: col0 + i,
        };
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '=' => Some(Tok::Eq),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, at));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| syntax(at, format!("malformed number `{text}`")))?;
            out.push((Tok::Num(v), at));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), at));
            continue;
        }
        return Err(syntax(at, format!("unexpected character `{c}`")));
    }
    Ok(out)
}

/// Names visible to an expression.
struct Scope<'a> {
    vars: &'a [String],
    params: &'a HashMap<String, f64>,
    allow_vars: bool,
}

struct ExprParser<'a> {
    toks: &'a [(Tok, Position)],
    pos: usize,
    end: Position,
    scope: &'a Scope<'a>,
}

impl<'a> ExprParser<'a> {
    fn nvars(&self) -> usize {
        if self.scope.allow_vars {
            self.scope.vars.len()
        } else {
            0
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> Position {
        self.toks.get(self.pos).map_or(self.end, |(_, p)| *p)
    }

    fn bump(&mut self) -> Option<(Tok, Position)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.toks.get(self.pos) {
            None => Ok(()),
            Some((t, at)) => Err(syntax(*at, format!("unexpected {t}"))),
        }
    }

    fn expr(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    acc = &acc + &self.term()?;
                }
                Some(Tok::Minus) => {
                    self.bump();
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    acc = &acc * &self.unary()?;
                }
                Some(Tok::Slash) => {
                    let at = self.here();
                    self.bump();
                    let den = self.unary()?;
                    if den.degree().unwrap_or(0) > 0 {
                        return Err(ParseError::NonPolynomial {
                            at,
                            what: "division by an expression containing variables".into(),
                        });
                    }
                    let c = den.coeff(&vec![0; den.nvars()]);
                    if c == 0.0 {
                        return Err(syntax(at, "division by zero"));
                    }
                    acc = acc.scale(1.0 / c);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Polynomial, ParseError> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.bump();
                Ok(-&self.unary()?)
            }
            Some(Tok::Plus) => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial, ParseError> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        let at = self.here();
        self.bump();
        let exp = self.exponent()?;
        if exp < 0.0 {
            return Err(ParseError::NonPolynomial {
                at,
                what: format!("negative exponent {exp}"),
            });
        }
        if exp.fract() != 0.0 || exp > MAX_EXPONENT {
            return Err(ParseError::NonPolynomial {
                at,
                what: format!("exponent {exp} is not a small non-negative integer"),
            });
        }
        Ok(base.pow(exp as u32, None))
    }

    /// Exponents are constant: a signed literal or a parenthesized constant.
    fn exponent(&mut self) -> Result<f64, ParseError> {
        let at = self.here();
        let p = self.unary()?;
        if p.degree().unwrap_or(0) > 0 {
            return Err(ParseError::NonPolynomial {
                at,
                what: "exponent depends on a variable".into(),
            });
        }
        Ok(p.coeff(&vec![0; p.nvars()]))
    }

    fn atom(&mut self) -> Result<Polynomial, ParseError> {
        let n = self.nvars();
        match self.bump() {
            Some((Tok::Num(v), _)) => Ok(Polynomial::constant(n, v)),
            Some((Tok::LParen, _)) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some((Tok::RParen, _)) => Ok(inner),
                    Some((t, at)) => Err(syntax(at, format!("expected `)`, found {t}"))),
                    None => Err(syntax(self.end, "expected `)`, found end of statement")),
                }
            }
            Some((Tok::Ident(name), at)) => {
                if self.peek() == Some(&Tok::LParen) {
                    return Err(ParseError::NonPolynomial {
                        at,
                        what: format!("function call `{name}(...)`"),
                    });
                }
                if let Some(i) = self.scope.vars.iter().position(|v| *v == name) {
                    if !self.scope.allow_vars {
                        return Err(ParseError::Declaration {
                            at,
                            message: format!("variable `{name}` not allowed in a constant"),
                        });
                    }
                    return Ok(Polynomial::var(n, i));
                }
                match self.scope.params.get(&name) {
                    Some(&v) => Ok(Polynomial::constant(n, v)),
                    None => Err(ParseError::Undeclared { at, name }),
                }
            }
            Some((t, at)) => Err(syntax(at, format!("unexpected {t}"))),
            None => Err(syntax(self.end, "unexpected end of statement")),
        }
    }
}

fn parse_expr(
    toks: &[(Tok, Position)],
    end: Position,
    scope: &Scope<'_>,
) -> Result<Polynomial, ParseError> {
    if toks.is_empty() {
        return Err(syntax(end, "empty expression"));
    }
    let mut p = ExprParser {
        toks,
        pos: 0,
        end,
        scope,
    };
    let out = p.expr()?;
    p.finish()?;
    Ok(out)
}

/// One `;`/newline separated statement with the position of its first char.
struct Statement<'a> {
    text: &'a str,
    at: Position,
}

impl Statement<'_> {
    fn end(&self) -> Position {
        Position {
            line: self.at.line,
            column: self.at.column + self.text.chars().count(),
        }
    }

    fn keyword(&self) -> (&str, &str, usize) {
        let kw_len = self
            .text
            .find(|c: char| c.is_whitespace())
            .unwrap_or(self.text.len());
        let (kw, rest) = self.text.split_at(kw_len);
        (kw, rest, kw.chars().count())
    }

    fn tokens_after(&self, skip_chars: usize) -> Result<Vec<(Tok, Position)>, ParseError> {
        let rest: String = self.text.chars().skip(skip_chars).collect();
        tokenize(&rest, self.at.line, self.at.column + skip_chars)
    }
}

fn statements(text: &str) -> Vec<Statement<'_>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        };
        let mut offset = 0;
        for piece in line.split(';') {
            let lead = piece.len() - piece.trim_start().len();
            let trimmed = piece.trim();
            if !trimmed.is_empty() {
                out.push(Statement {
                    text: trimmed,
                    at: Position {
                        line: ln + 1,
                        column: line[..offset + lead].chars().count() + 1,
                    },
                });
            }
            offset += piece.len() + 1;
        }
    }
    out
}

/// Splits constant-list statements (`equilibrium`, `basis`) on whitespace
/// outside parentheses.
fn split_entries(tokens: Vec<(Tok, Position)>) -> Vec<Vec<(Tok, Position)>> {
    // Entries are separated where a value-ending token is followed by a
    // value-starting one, e.g. `1 -2` or `b 1`; binary operators join.
    let mut out: Vec<Vec<(Tok, Position)>> = Vec::new();
    let mut depth = 0i32;
    let mut prev_ends_value = false;
    for (t, at) in tokens {
        let starts_value = matches!(
            t,
            Tok::Num(_) | Tok::Ident(_) | Tok::LParen | Tok::Minus | Tok::Plus
        );
        if depth == 0 && prev_ends_value && starts_value {
            out.push(Vec::new());
        }
        if out.is_empty() {
            out.push(Vec::new());
        }
        match t {
            Tok::LParen => depth += 1,
            Tok::RParen => depth -= 1,
            _ => {}
        }
        prev_ends_value = matches!(t, Tok::Num(_) | Tok::Ident(_) | Tok::RParen);
        out.last_mut().unwrap().push((t, at));
    }
    out
}

#[derive(Default)]
struct Parser {
    vars: Option<Vec<String>>,
    params: Vec<(String, f64)>,
    param_map: HashMap<String, f64>,
}

impl Parser {
    fn run(mut self, text: &str) -> Result<SystemSpec, ParseError> {
        let stmts = statements(text);
        let mut deferred = Vec::new();
        for st in &stmts {
            let (kw, _, kw_len) = st.keyword();
            match kw {
                "vars" => self.declare_vars(st, kw_len)?,
                "param" => self.declare_param(st, kw_len)?,
                _ => deferred.push(st),
            }
        }
        let vars = self.vars.clone().ok_or_else(|| {
            syntax(
                Position { line: 1, column: 1 },
                "missing `vars` declaration",
            )
        })?;
        let n = vars.len();
        let mut field: Vec<Option<Polynomial>> = vec![None; n];
        let mut equilibrium = None;
        let mut basis = None;
        for st in deferred {
            let (kw, _, kw_len) = st.keyword();
            match kw {
                "equilibrium" => {
                    if equilibrium.is_some() {
                        return Err(decl(st.at, "duplicate `equilibrium` statement"));
                    }
                    let values = self.constants(st, kw_len, &vars)?;
                    if values.len() != n {
                        return Err(decl(
                            st.at,
                            format!("equilibrium has {} entries, expected {n}", values.len()),
                        ));
                    }
                    equilibrium = Some(values);
                }
                "basis" => {
                    if basis.is_some() {
                        return Err(decl(st.at, "duplicate `basis` statement"));
                    }
                    let values = self.constants(st, kw_len, &vars)?;
                    if values.len() != n * n {
                        return Err(decl(
                            st.at,
                            format!("basis has {} entries, expected {}", values.len(), n * n),
                        ));
                    }
                    basis = Some(DMatrix::from_row_slice(n, n, &values));
                }
                _ => {
                    let (i, p) = self.equation(st, &vars)?;
                    if field[i].is_some() {
                        return Err(decl(st.at, format!("duplicate equation for `{}`", vars[i])));
                    }
                    field[i] = Some(p);
                }
            }
        }
        let components = field
            .into_iter()
            .zip(&vars)
            .map(|(p, name)| p.ok_or_else(|| ParseError::MissingEquation(name.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let field = PolyMap::new(n, components).expect("components share the declared space");
        Ok(SystemSpec {
            variables: vars,
            parameters: self.params,
            field,
            equilibrium,
            basis,
        })
    }

    fn declare_vars(&mut self, st: &Statement<'_>, kw_len: usize) -> Result<(), ParseError> {
        if self.vars.is_some() {
            return Err(decl(st.at, "duplicate `vars` statement"));
        }
        let toks = st.tokens_after(kw_len)?;
        let mut names = Vec::new();
        for (t, at) in toks {
            match t {
                Tok::Ident(name) => {
                    if names.contains(&name) {
                        return Err(decl(at, format!("variable `{name}` declared twice")));
                    }
                    if self.param_map.contains_key(&name) {
                        return Err(decl(at, format!("`{name}` is already a parameter")));
                    }
                    names.push(name);
                }
                other => {
                    return Err(syntax(
                        at,
                        format!("expected a variable name, found {other}"),
                    ))
                }
            }
        }
        if names.is_empty() {
            return Err(decl(st.at, "`vars` needs at least one name"));
        }
        self.vars = Some(names);
        Ok(())
    }

    fn declare_param(&mut self, st: &Statement<'_>, kw_len: usize) -> Result<(), ParseError> {
        let toks = st.tokens_after(kw_len)?;
        let (name, at) = match toks.first() {
            Some((Tok::Ident(name), at)) => (name.clone(), *at),
            Some((t, at)) => {
                return Err(syntax(*at, format!("expected a parameter name, found {t}")))
            }
            None => return Err(syntax(st.end(), "expected a parameter name")),
        };
        match toks.get(1) {
            Some((Tok::Eq, _)) => {}
            Some((t, at)) => return Err(syntax(*at, format!("expected `=`, found {t}"))),
            None => return Err(syntax(st.end(), "expected `=`")),
        }
        if self.param_map.contains_key(&name) {
            return Err(decl(at, format!("parameter `{name}` declared twice")));
        }
        let vars = self.vars.clone().unwrap_or_default();
        if vars.contains(&name) {
            return Err(decl(at, format!("`{name}` is already a variable")));
        }
        let scope = Scope {
            vars: &vars,
            params: &self.param_map,
            allow_vars: false,
        };
        let value = parse_expr(&toks[2..], st.end(), &scope)?;
        let value = value.coeff(&[]);
        self.param_map.insert(name.clone(), value);
        self.params.push((name, value));
        Ok(())
    }

    fn constants(
        &self,
        st: &Statement<'_>,
        kw_len: usize,
        vars: &[String],
    ) -> Result<Vec<f64>, ParseError> {
        let toks = st.tokens_after(kw_len)?;
        let scope = Scope {
            vars,
            params: &self.param_map,
            allow_vars: false,
        };
        split_entries(toks)
            .into_iter()
            .map(|entry| {
                let end = entry.last().map_or(st.end(), |(_, p)| *p);
                parse_expr(&entry, end, &scope).map(|p| p.coeff(&[]))
            })
            .collect()
    }

    fn equation(
        &self,
        st: &Statement<'_>,
        vars: &[String],
    ) -> Result<(usize, Polynomial), ParseError> {
        let toks = st.tokens_after(0)?;
        let bad_lhs = |at: Position| syntax(at, "expected `d<var>/dt = <expression>` or a keyword");
        let (dname, at) = match toks.first() {
            Some((Tok::Ident(s), at)) => (s.clone(), *at),
            _ => return Err(bad_lhs(st.at)),
        };
        match (toks.get(1), toks.get(2), toks.get(3)) {
            (Some((Tok::Slash, _)), Some((Tok::Ident(dt), _)), Some((Tok::Eq, _)))
                if dt == "dt" => {}
            _ => return Err(bad_lhs(st.at)),
        }
        let var = dname.strip_prefix('d').ok_or_else(|| bad_lhs(at))?;
        let index = vars
            .iter()
            .position(|v| v == var)
            .ok_or_else(|| ParseError::Undeclared {
                at,
                name: var.to_string(),
            })?;
        let scope = Scope {
            vars,
            params: &self.param_map,
            allow_vars: true,
        };
        let p = parse_expr(&toks[4..], st.end(), &scope)?;
        Ok((index, p))
    }
}

fn decl(at: Position, message: impl Into<String>) -> ParseError {
    ParseError::Declaration {
        at,
        message: message.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn poly(n: usize, terms: &[(&[u32], f64)]) -> Polynomial {
        Polynomial::from_terms(n, terms.iter().map(|(e, c)| (e.to_vec(), *c)))
    }

    #[test]
    fn parses_inline_statements() {
        let spec = parse_system("vars x y; param l=2; dx/dt = l*y + x^2; dy/dt = -l*x").unwrap();
        assert_eq!(spec.variables, vec!["x", "y"]);
        assert_eq!(spec.parameters, vec![("l".to_string(), 2.0)]);
        assert_eq!(
            spec.field.component(0),
            &poly(2, &[(&[0, 1], 2.0), (&[2, 0], 1.0)])
        );
        assert_eq!(spec.field.component(1), &poly(2, &[(&[1, 0], -2.0)]));
        assert!(spec.equilibrium.is_none());
    }

    #[test]
    fn parses_generic_three_dimensional_case() {
        let spec = parse_system(crate::cases::GENERIC3D).unwrap();
        let ones: Vec<(&[u32], f64)> = vec![
            (&[2, 0, 0], 1.0),
            (&[0, 2, 0], 1.0),
            (&[0, 0, 2], 1.0),
            (&[1, 1, 0], 1.0),
            (&[0, 1, 1], 1.0),
            (&[1, 0, 1], 1.0),
        ];
        let with = |lin: (&'static [u32], f64)| {
            let mut t = ones.clone();
            t.push(lin);
            poly(3, &t)
        };
        assert_eq!(spec.field.component(0), &with((&[0, 1, 0], 1.0)));
        assert_eq!(spec.field.component(1), &with((&[1, 0, 0], -1.0)));
        assert_eq!(spec.field.component(2), &with((&[0, 0, 1], -1.0)));
    }

    #[test]
    fn rejects_non_polynomial_constructs() {
        let err = parse_system("vars x y\ndx/dt = x/y\ndy/dt = 0").unwrap_err();
        match err {
            Error::Parse(ParseError::NonPolynomial { at, .. }) => {
                assert_eq!(
                    at,
                    Position {
                        line: 2,
                        column: 10
                    }
                );
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_system("vars x\ndx/dt = sin(x)"),
            Err(Error::Parse(ParseError::NonPolynomial { .. }))
        ));
        assert!(matches!(
            parse_system("vars x\ndx/dt = x^-1"),
            Err(Error::Parse(ParseError::NonPolynomial { .. }))
        ));
        assert!(matches!(
            parse_system("vars x\ndx/dt = x^1.5"),
            Err(Error::Parse(ParseError::NonPolynomial { .. }))
        ));
    }

    #[test]
    fn reports_positions_and_undeclared_names() {
        let err = parse_system("vars x\n  dx/dt = x + q").unwrap_err();
        match err {
            Error::Parse(ParseError::Undeclared { at, name }) => {
                assert_eq!(name, "q");
                assert_eq!(
                    at,
                    Position {
                        line: 2,
                        column: 15
                    }
                );
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_system("vars x\ndx/dt = (x + 1").unwrap_err();
        assert!(
            matches!(err, Error::Parse(ParseError::Syntax { .. })),
            "{err}"
        );
        let err = parse_system("vars x\ndx/dt = x $ 1").unwrap_err();
        assert!(err.to_string().contains("line 2, column 11"), "{err}");
        assert!(matches!(
            parse_system("vars x y\ndx/dt = y"),
            Err(Error::Parse(ParseError::MissingEquation(v))) if v == "y"
        ));
        assert!(parse_system("vars x\ndz/dt = x").is_err());
        assert!(parse_system("vars x\ndx/dt = x\ndx/dt = x").is_err());
    }

    #[test]
    fn constant_division_and_scientific_literals() {
        let spec = parse_system("vars x\nparam k = 2.5e-1\ndx/dt = x^2/(2*k) - .5*x").unwrap();
        assert_eq!(
            spec.field.component(0),
            &poly(1, &[(&[2], 2.0), (&[1], -0.5)])
        );
    }

    #[test]
    fn basis_and_equilibrium_accept_constant_expressions() {
        let spec = parse_system(crate::cases::PROTEIN).unwrap();
        let b = spec.basis.unwrap();
        assert_eq!(b, DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -2.0, 0.0]));
        assert_eq!(spec.equilibrium, Some(vec![0.0, 0.0]));
        let spec =
            parse_system("vars x y\nparam a = 3\ndx/dt = 0\ndy/dt = 0\nequilibrium -a (a - 1)")
                .unwrap();
        assert_eq!(spec.equilibrium, Some(vec![-3.0, 2.0]));
    }

    #[test]
    fn shift_moves_equilibrium_to_origin() {
        let spec = parse_system("vars x\ndx/dt = x^2 - 1").unwrap();
        let s = shift_equilibrium(&spec, &[1.0]).unwrap();
        assert_eq!(s.field.component(0), &poly(1, &[(&[2], 1.0), (&[1], 2.0)]));

        let err = shift_equilibrium(&spec, &[0.5]).unwrap_err();
        match err {
            Error::NotEquilibrium { residuals } => assert_eq!(residuals, vec![-0.75]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_shift_is_identity() {
        let spec = parse_system(crate::cases::PROTEIN).unwrap();
        let s = shift_equilibrium(&spec, &[0.0, 0.0]).unwrap();
        assert_eq!(s.field, spec.field);
        assert_eq!(s.field.constants(), vec![0.0, 0.0]);
    }

    fn arb_spec() -> impl Strategy<Value = SystemSpec> {
        (1usize..=3).prop_flat_map(|n| {
            let comp =
                prop::collection::vec((prop::collection::vec(0u32..3, n), -5.0f64..5.0), 0..5);
            (
                prop::collection::vec(comp, n),
                prop::collection::vec(-3.0f64..3.0, 0..3),
                prop::option::of(prop::collection::vec(-2.0f64..2.0, n)),
                prop::option::of(prop::collection::vec(-2.0f64..2.0, n * n)),
            )
                .prop_map(move |(comps, params, eq, basis)| {
                    let variables: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
                    let components = comps
                        .into_iter()
                        .map(|terms| Polynomial::from_terms(n, terms))
                        .collect();
                    SystemSpec {
                        variables,
                        parameters: params
                            .into_iter()
                            .enumerate()
                            .map(|(i, v)| (format!("p{i}"), v))
                            .collect(),
                        field: PolyMap::new(n, components).unwrap(),
                        equilibrium: eq,
                        basis: basis.map(|b| DMatrix::from_row_slice(n, n, &b)),
                    }
                })
        })
    }

    proptest! {
        #[test]
        fn render_round_trips(spec in arb_spec()) {
            let text = spec.render();
            let back = parse_system(&text).unwrap();
            prop_assert_eq!(back, spec);
        }

        #[test]
        fn shift_and_unshift_restores(spec in arb_spec(), p in prop::collection::vec(-1.0f64..1.0, 3)) {
            let p = &p[..spec.dim()];
            let neg: Vec<f64> = p.iter().map(|v| -v).collect();
            let back = spec.shifted(p).unwrap().shifted(&neg).unwrap();
            prop_assert!(back.field.max_abs_diff(&spec.field) <= 1e-12);
        }
    }
}

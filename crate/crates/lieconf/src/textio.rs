//! The definition-file format and the textual polynomial syntax.
//!
//! Polynomials use the variables `D` (∂) and `L` (λ), rational literals
//! like `3/2`, the operators `+ - * /` and `^` for powers. An algebra file
//! looks like
//!
//! ```text
//! algebra M
//! generator e torsion D
//! generator u
//! generator n
//! bracket u n = 1 * n
//! ```
//!
//! Bracket entries omitted from a file default to the skew-completion of
//! their mirror entry; pairs with neither direction given default to zero
//! with a warning. Vertex algebras use `vertex <name>`, optional
//! `vacuum <g>`, and `product <g1> <g2> <n> = <element>` lines.

use crate::conformal::{ConformalAlgebra, LambdaElement};
use crate::module::{format_element, ModuleElement, PresentedModule};
use crate::poly::{BiPoly, Rat, RatPoly};
use crate::vertex::VertexAlgebra;
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// A positioned syntax or semantic error.
#[derive(Debug, Clone)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

/// Result of parsing a definition file.
#[derive(Debug)]
pub enum Definition {
    Conformal { name: String, algebra: ConformalAlgebra, warnings: Vec<String> },
    Vertex { name: String, algebra: VertexAlgebra, warnings: Vec<String> },
}

impl Definition {
    pub fn name(&self) -> &str {
        match self {
            Definition::Conformal { name, .. } | Definition::Vertex { name, .. } => name,
        }
    }

    pub fn warnings(&self) -> &[String] {
        match self {
            Definition::Conformal { warnings, .. } | Definition::Vertex { warnings, .. } => warnings,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eq,
}

fn lex_line(line: &str, lineno: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut out = vec![];
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            ' ' | '\t' | '\r' => {
                i += 1;
            }
            '#' => break,
            '+' => {
                out.push((Tok::Plus, col));
                i += 1;
            }
            '-' => {
                out.push((Tok::Minus, col));
                i += 1;
            }
            '*' => {
                out.push((Tok::Star, col));
                i += 1;
            }
            '/' => {
                out.push((Tok::Slash, col));
                i += 1;
            }
            '^' => {
                out.push((Tok::Caret, col));
                i += 1;
            }
            '(' => {
                out.push((Tok::LParen, col));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, col));
                i += 1;
            }
            '=' => {
                out.push((Tok::Eq, col));
                i += 1;
            }
            _ if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                out.push((Tok::Int(text.parse().unwrap()), start + 1));
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), start + 1));
            }
            _ => {
                return Err(ParseError {
                    line: lineno,
                    col,
                    message: format!("unexpected character '{c}'"),
                })
            }
        }
    }
    Ok(out)
}

/// A linear combination of generators with coefficients in `Q[L, D]`;
/// the scalar part must stay zero in element contexts.
#[derive(Clone, Debug)]
struct LinComb {
    scalar: BiPoly,
    gens: BTreeMap<usize, BiPoly>,
}

impl LinComb {
    fn scalar(p: BiPoly) -> Self {
        LinComb { scalar: p, gens: BTreeMap::new() }
    }

    fn gen(i: usize) -> Self {
        let mut gens = BTreeMap::new();
        gens.insert(i, BiPoly::one());
        LinComb { scalar: BiPoly::zero(), gens }
    }

    fn add(&self, other: &LinComb) -> LinComb {
        let mut gens = self.gens.clone();
        for (&g, p) in &other.gens {
            let e = gens.entry(g).or_insert_with(BiPoly::zero);
            *e = &*e + p;
        }
        gens.retain(|_, p| !p.is_zero());
        LinComb { scalar: &self.scalar + &other.scalar, gens }
    }

    fn neg(&self) -> LinComb {
        LinComb {
            scalar: -&self.scalar,
            gens: self.gens.iter().map(|(&g, p)| (g, -p)).collect(),
        }
    }

    fn is_pure_scalar(&self) -> bool {
        self.gens.is_empty()
    }
}

struct ExprParser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    line: usize,
    gen_index: &'a dyn Fn(&str) -> Option<usize>,
    allow_lambda: bool,
}

impl ExprParser<'_> {
    fn error(&self, message: impl Into<String>) -> ParseError {
        let col = self
            .toks
            .get(self.pos)
            .map(|(_, c)| *c)
            .or_else(|| self.toks.last().map(|(_, c)| c + 1))
            .unwrap_or(1);
        ParseError { line: self.line, col, message: message.into() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<LinComb, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = acc.add(&t);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = acc.add(&t.neg());
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<LinComb, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    acc = self.multiply(acc, rhs)?;
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    if !rhs.is_pure_scalar() {
                        return Err(self.error("division by a generator term"));
                    }
                    let Some(c) = rhs.scalar.try_into_y_poly().filter(|p| p.is_constant()) else {
                        return Err(self.error("division is only defined by rational constants"));
                    };
                    let c = c.constant_term();
                    if c.is_zero() {
                        return Err(self.error("division by zero"));
                    }
                    let inv = Rat::one() / c;
                    acc = LinComb {
                        scalar: acc.scalar.scale(&inv),
                        gens: acc.gens.iter().map(|(&g, p)| (g, p.scale(&inv))).collect(),
                    };
                }
                _ => return Ok(acc),
            }
        }
    }

    fn multiply(&self, a: LinComb, b: LinComb) -> Result<LinComb, ParseError> {
        match (a.is_pure_scalar(), b.is_pure_scalar()) {
            (true, _) => Ok(LinComb {
                scalar: &a.scalar * &b.scalar,
                gens: b.gens.iter().map(|(&g, p)| (g, &a.scalar * p)).collect(),
            }),
            (_, true) => Ok(LinComb {
                scalar: &a.scalar * &b.scalar,
                gens: a.gens.iter().map(|(&g, p)| (g, p * &b.scalar)).collect(),
            }),
            _ => Err(self.error("products of generators are not polynomial expressions")),
        }
    }

    fn factor(&mut self) -> Result<LinComb, ParseError> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.pos += 1;
            let Some(Tok::Int(e)) = self.next() else {
                return Err(self.error("exponent must be a nonnegative integer"));
            };
            if !base.is_pure_scalar() {
                return Err(self.error("generators cannot be raised to powers"));
            }
            let e: u32 = e
                .try_into()
                .map_err(|_| self.error("exponent out of range"))?;
            let mut acc = BiPoly::one();
            for _ in 0..e {
                acc = &acc * &base.scalar;
            }
            return Ok(LinComb::scalar(acc));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<LinComb, ParseError> {
        match self.next() {
            Some(Tok::Int(v)) => Ok(LinComb::scalar(BiPoly::constant(Rat::from_integer(v)))),
            Some(Tok::Minus) => Ok(self.factor()?.neg()),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                match self.next() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => Err(self.error("expected ')'")),
                }
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "D" => Ok(LinComb::scalar(BiPoly::var_y())),
                "L" if self.allow_lambda => Ok(LinComb::scalar(BiPoly::var_x())),
                "L" => Err(self.error("the variable L is not allowed here")),
                _ => match (self.gen_index)(&name) {
                    Some(i) => Ok(LinComb::gen(i)),
                    None => Err(self.error(format!("unknown generator '{name}'"))),
                },
            },
            _ => Err(self.error("expected an expression")),
        }
    }
}

fn parse_expression(
    toks: &[(Tok, usize)],
    line: usize,
    gen_index: &dyn Fn(&str) -> Option<usize>,
    allow_lambda: bool,
) -> Result<LinComb, ParseError> {
    let mut p = ExprParser { toks, pos: 0, line, gen_index, allow_lambda };
    let e = p.expr()?;
    if p.pos != toks.len() {
        return Err(p.error("trailing input after expression"));
    }
    Ok(e)
}

/// Parse a polynomial in a single variable (`D` by convention; `L` with
/// `allow_lambda`). Used for torsion annotations and weight arguments.
pub fn parse_poly(text: &str, allow_lambda: bool) -> Result<RatPoly, ParseError> {
    let toks = lex_line(text, 1)?;
    let none = |_: &str| None;
    let lc = parse_expression(&toks, 1, &none, allow_lambda)?;
    if !lc.is_pure_scalar() {
        return Err(ParseError { line: 1, col: 1, message: "expected a polynomial".into() });
    }
    // a single-variable polynomial lives in either slot
    let p = &lc.scalar;
    if allow_lambda {
        if p.y_degree().unwrap_or(0) > 0 {
            return Err(ParseError { line: 1, col: 1, message: "expected a polynomial in L only".into() });
        }
        return Ok(p.y_slice(0));
    }
    if p.x_degree().unwrap_or(0) > 0 {
        return Err(ParseError { line: 1, col: 1, message: "expected a polynomial in D only".into() });
    }
    Ok(bipoly_to_d_poly(p))
}

/// Parse an element expression over the generators of a module
/// (coefficients are polynomials in `D`).
pub fn parse_element(text: &str, module: &Arc<PresentedModule>) -> Result<ModuleElement, ParseError> {
    let toks = lex_line(text, 1)?;
    let lookup = |name: &str| module.labels().iter().position(|l| l == name);
    let lc = parse_expression(&toks, 1, &lookup, false)?;
    if !lc.scalar.is_zero() {
        return Err(ParseError {
            line: 1,
            col: 1,
            message: "an element expression needs a generator in every term".into(),
        });
    }
    let mut coords = vec![RatPoly::zero(); module.generator_count()];
    for (g, p) in &lc.gens {
        // no λ allowed, so the coefficient is a polynomial in D
        coords[*g] = bipoly_to_d_poly(p);
    }
    Ok(module.element(coords))
}

/// Collapse a BiPoly without x-part into a univariate polynomial in D.
fn bipoly_to_d_poly(p: &BiPoly) -> RatPoly {
    let mut out = RatPoly::zero();
    for (&(x, y), c) in p.terms() {
        debug_assert_eq!(x, 0);
        out = &out + &RatPoly::monomial(c.clone(), y as usize);
    }
    out
}

/// Parse a full definition file.
pub fn parse_definition(text: &str) -> Result<Definition, ParseError> {
    let mut kind: Option<(bool, String)> = None; // (is_vertex, name)
    let mut gens: Vec<(String, Option<RatPoly>)> = vec![];
    let mut bracket_lines: Vec<(usize, String, String, Vec<(Tok, usize)>)> = vec![];
    let mut product_lines: Vec<(usize, String, String, i64, Vec<(Tok, usize)>)> = vec![];
    let mut vacuum: Option<(usize, String)> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let toks = lex_line(raw, lineno)?;
        if toks.is_empty() {
            continue;
        }
        let err = |col: usize, message: String| ParseError { line: lineno, col, message };
        let head = match &toks[0].0 {
            Tok::Ident(h) => h.clone(),
            _ => return Err(err(toks[0].1, "expected a keyword".into())),
        };
        match head.as_str() {
            "algebra" | "vertex" => {
                let name = match toks.get(1) {
                    Some((Tok::Ident(n), _)) => n.clone(),
                    _ => return Err(err(toks[0].1, format!("'{head}' needs a name"))),
                };
                if kind.is_some() {
                    return Err(err(toks[0].1, "only one algebra per file".into()));
                }
                kind = Some((head == "vertex", name));
            }
            "generator" => {
                let name = match toks.get(1) {
                    Some((Tok::Ident(n), _)) => n.clone(),
                    _ => return Err(err(toks[0].1, "'generator' needs a name".into())),
                };
                if gens.iter().any(|(g, _)| *g == name) {
                    return Err(err(toks[1].1, format!("duplicate generator '{name}'")));
                }
                let torsion = match toks.get(2) {
                    None => None,
                    Some((Tok::Ident(t), _)) if t == "torsion" => {
                        let none = |_: &str| None;
                        let lc = parse_expression(&toks[3..], lineno, &none, false)?;
                        if !lc.is_pure_scalar() {
                            return Err(err(toks[2].1, "torsion must be a polynomial in D".into()));
                        }
                        Some(bipoly_to_d_poly(&lc.scalar))
                    }
                    Some((_, c)) => return Err(err(*c, "expected 'torsion' or end of line".into())),
                };
                gens.push((name, torsion));
            }
            "bracket" => {
                let g1 = match toks.get(1) {
                    Some((Tok::Ident(n), _)) => n.clone(),
                    _ => return Err(err(toks[0].1, "'bracket' needs two generators".into())),
                };
                let g2 = match toks.get(2) {
                    Some((Tok::Ident(n), _)) => n.clone(),
                    _ => return Err(err(toks[0].1, "'bracket' needs two generators".into())),
                };
                match toks.get(3) {
                    Some((Tok::Eq, _)) => {}
                    _ => return Err(err(toks[0].1, "expected '=' after the bracket pair".into())),
                }
                bracket_lines.push((lineno, g1, g2, toks[4..].to_vec()));
            }
            "product" => {
                let g1 = match toks.get(1) {
                    Some((Tok::Ident(n), _)) => n.clone(),
                    _ => return Err(err(toks[0].1, "'product' needs two generators".into())),
                };
                let g2 = match toks.get(2) {
                    Some((Tok::Ident(n), _)) => n.clone(),
                    _ => return Err(err(toks[0].1, "'product' needs two generators".into())),
                };
                let (negated, idx_pos) = match toks.get(3) {
                    Some((Tok::Minus, _)) => (true, 4),
                    _ => (false, 3),
                };
                let n = match toks.get(idx_pos) {
                    Some((Tok::Int(v), c)) => {
                        let v: i64 = v
                            .try_into()
                            .map_err(|_| err(*c, "product index out of range".into()))?;
                        if negated {
                            -v
                        } else {
                            v
                        }
                    }
                    _ => return Err(err(toks[0].1, "'product' needs an integer index".into())),
                };
                match toks.get(idx_pos + 1) {
                    Some((Tok::Eq, _)) => {}
                    _ => return Err(err(toks[0].1, "expected '=' after the product index".into())),
                }
                product_lines.push((lineno, g1, g2, n, toks[idx_pos + 2..].to_vec()));
            }
            "vacuum" => {
                let name = match toks.get(1) {
                    Some((Tok::Ident(n), _)) => n.clone(),
                    _ => return Err(err(toks[0].1, "'vacuum' needs a generator name".into())),
                };
                vacuum = Some((lineno, name));
            }
            other => return Err(err(toks[0].1, format!("unknown keyword '{other}'"))),
        }
    }

    let Some((is_vertex, name)) = kind else {
        return Err(ParseError { line: 1, col: 1, message: "no algebra declared".into() });
    };
    if gens.is_empty() {
        return Err(ParseError { line: 1, col: 1, message: "no generators declared".into() });
    }

    let labels: Vec<String> = gens.iter().map(|(g, _)| g.clone()).collect();
    let mut relations = vec![];
    for (i, (_, t)) in gens.iter().enumerate() {
        if let Some(p) = t {
            let mut row = vec![RatPoly::zero(); labels.len()];
            row[i] = p.clone();
            relations.push(row);
        }
    }
    let carrier = PresentedModule::new(labels.clone(), relations);
    let lookup = |name: &str| labels.iter().position(|l| l == name);

    let to_element = |lc: &LinComb, lineno: usize| -> Result<ModuleElement, ParseError> {
        let mut coords = vec![RatPoly::zero(); carrier.generator_count()];
        for (g, p) in &lc.gens {
            if p.x_degree().unwrap_or(0) > 0 {
                return Err(ParseError {
                    line: lineno,
                    col: 1,
                    message: "λ is not allowed in product values".into(),
                });
            }
            coords[*g] = bipoly_to_d_poly(p);
        }
        Ok(carrier.element(coords))
    };

    if is_vertex {
        if !bracket_lines.is_empty() {
            let l = bracket_lines[0].0;
            return Err(ParseError {
                line: l,
                col: 1,
                message: "vertex algebras use 'product' lines, not 'bracket'".into(),
            });
        }
        let vac = match vacuum {
            Some((l, ref v)) => lookup(v).ok_or_else(|| ParseError {
                line: l,
                col: 1,
                message: format!("unknown generator '{v}'"),
            })?,
            None => 0,
        };
        let mut products = BTreeMap::new();
        for (lineno, g1, g2, n, toks) in &product_lines {
            let i = lookup(g1).ok_or_else(|| ParseError {
                line: *lineno,
                col: 1,
                message: format!("unknown generator '{g1}'"),
            })?;
            let j = lookup(g2).ok_or_else(|| ParseError {
                line: *lineno,
                col: 1,
                message: format!("unknown generator '{g2}'"),
            })?;
            let lc = parse_expression(toks, *lineno, &lookup, false)?;
            if !lc.scalar.is_zero() {
                return Err(ParseError {
                    line: *lineno,
                    col: 1,
                    message: "a product value needs a generator in every term".into(),
                });
            }
            let e = to_element(&lc, *lineno)?;
            if !e.is_zero() {
                products.insert((i, j, *n), e);
            }
        }
        let algebra = VertexAlgebra::from_table(carrier, vac, products).map_err(|e| ParseError {
            line: 1,
            col: 1,
            message: e.to_string(),
        })?;
        return Ok(Definition::Vertex { name, algebra, warnings: vec![] });
    }

    if !product_lines.is_empty() {
        let l = product_lines[0].0;
        return Err(ParseError {
            line: l,
            col: 1,
            message: "conformal algebras use 'bracket' lines, not 'product'".into(),
        });
    }
    let mut entries: BTreeMap<(usize, usize), LambdaElement> = BTreeMap::new();
    for (lineno, g1, g2, toks) in &bracket_lines {
        let i = lookup(g1).ok_or_else(|| ParseError {
            line: *lineno,
            col: 1,
            message: format!("unknown generator '{g1}'"),
        })?;
        let j = lookup(g2).ok_or_else(|| ParseError {
            line: *lineno,
            col: 1,
            message: format!("unknown generator '{g2}'"),
        })?;
        let lc = parse_expression(toks, *lineno, &lookup, true)?;
        if !lc.scalar.is_zero() {
            return Err(ParseError {
                line: *lineno,
                col: 1,
                message: "a bracket value needs a generator in every term".into(),
            });
        }
        let mut e = LambdaElement::zero();
        for (g, p) in &lc.gens {
            e = e.add(&LambdaElement::from_ld_poly(p, &carrier.generator(*g)));
        }
        entries.insert((i, j), e);
    }
    let (algebra, warnings) = ConformalAlgebra::from_upper_table(carrier, entries);
    Ok(Definition::Conformal { name, algebra, warnings })
}

/// Canonical textual form of a conformal algebra definition.
pub fn serialize_conformal(name: &str, algebra: &ConformalAlgebra) -> String {
    let carrier = algebra.carrier();
    let mut out = format!("algebra {name}\n");
    serialize_generators(carrier, &mut out);
    let k = carrier.generator_count();
    for i in 0..k {
        for j in 0..k {
            let e = algebra.table_entry(i, j);
            if e.is_zero() {
                continue;
            }
            if j < i {
                // only write the lower entry when it is not the
                // skew-completion of its mirror (a non-skew table)
                let mirror = algebra
                    .table_entry(j, i)
                    .substitute_minus_lambda_minus_del()
                    .neg();
                if mirror == e {
                    continue;
                }
            }
            out.push_str(&format!(
                "bracket {} {} = {}\n",
                carrier.label(i),
                carrier.label(j),
                format_ld_element(&e, carrier)
            ));
        }
    }
    out
}

/// Canonical textual form of a vertex algebra definition (table-backed
/// algebras list their table; the built-in example lists its generator
/// products on the window needed to reconstruct it).
pub fn serialize_vertex(name: &str, algebra: &VertexAlgebra) -> String {
    let carrier = algebra.carrier();
    let mut out = format!("vertex {name}\n");
    serialize_generators(carrier, &mut out);
    out.push_str(&format!("vacuum {}\n", carrier.label(algebra.vacuum_index())));
    let (lo, hi) = algebra.window().unwrap_or((-6, 2));
    let k = carrier.generator_count();
    for i in 0..k {
        for j in 0..k {
            if i == algebra.vacuum_index() || j == algebra.vacuum_index() {
                continue; // vacuum products are implied by the axioms
            }
            for n in lo..=hi {
                let Ok(p) = algebra.nth_product(&carrier.generator(i), &carrier.generator(j), n)
                else {
                    continue;
                };
                if p.is_zero() {
                    continue;
                }
                out.push_str(&format!(
                    "product {} {} {} = {}\n",
                    carrier.label(i),
                    carrier.label(j),
                    n,
                    format_element(p.coords(), carrier.labels())
                ));
            }
        }
    }
    out
}

fn serialize_generators(carrier: &Arc<PresentedModule>, out: &mut String) {
    for (i, label) in carrier.labels().iter().enumerate() {
        let torsion: Vec<&Vec<RatPoly>> = carrier
            .relations()
            .iter()
            .filter(|row| !row[i].is_zero())
            .collect();
        if let Some(row) = torsion.first() {
            out.push_str(&format!("generator {label} torsion {}\n", row[i].display("D")));
        } else {
            out.push_str(&format!("generator {label}\n"));
        }
    }
}

/// Render a λ-element in the bracket-entry syntax.
pub fn format_ld_element(e: &LambdaElement, carrier: &Arc<PresentedModule>) -> String {
    if e.is_zero() {
        return "0".to_string();
    }
    let mut parts = vec![];
    for (g, p) in e.to_ld_parts() {
        let label = carrier.label(g);
        let single = p.terms().count() == 1;
        let text = format!("{}", p.display("L", "D"));
        if text == "1" {
            parts.push(format!("1 * {label}"));
        } else if single && !text.starts_with('-') {
            parts.push(format!("{text} * {label}"));
        } else {
            parts.push(format!("({text}) * {label}"));
        }
    }
    parts.join(" + ")
}

//! Sparse multivariate polynomials and the text grammar for systems of them.
//!
//! Grammar: variables `x1..xn`, nonnegative integer literals, `+ - * ^`,
//! parentheses, and `;` between polynomials. Integer literals must already
//! be residues mod p.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::ffield::{Field, FieldElem};

const MAX_EXPONENT: u32 = 255;

#[derive(Clone, PartialEq, Eq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, FieldElem>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mut s = format!("[{}]", c.index());
                for (v, &k) in e.iter().enumerate() {
                    if k > 0 {
                        s.push_str(&format!("*x{}^{}", v + 1, k));
                    }
                }
                s
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

impl Poly {
    pub fn zero(nvars: usize) -> Poly {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: FieldElem) -> Poly {
        let mut p = Poly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    /// The variable `x_{i+1}` (0-based `i`).
    pub fn var(nvars: usize, i: usize) -> Poly {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Poly::zero(nvars);
        p.terms.insert(e, FieldElem::ONE);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Monomials with nonzero coefficients in lexicographic exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (&[u32], FieldElem)> {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    fn insert_add(&mut self, field: &Field, e: Vec<u32>, c: FieldElem) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(e);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = field.add(*o.get(), c);
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, field: &Field, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, &c) in &other.terms {
            out.insert_add(field, e.clone(), c);
        }
        out
    }

    pub fn scale(&self, field: &Field, c: FieldElem) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, &a) in &self.terms {
            out.insert_add(field, e.clone(), field.mul(a, c));
        }
        out
    }

    pub fn neg(&self, field: &Field) -> Poly {
        self.scale(field, field.from_int(-1))
    }

    pub fn sub(&self, field: &Field, other: &Poly) -> Poly {
        self.add(field, &other.neg(field))
    }

    pub fn mul(&self, field: &Field, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e1, &c1) in &self.terms {
            for (e2, &c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.insert_add(field, e, field.mul(c1, c2));
            }
        }
        out
    }

    pub fn pow(&self, field: &Field, k: u32) -> Poly {
        let mut out = Poly::constant(self.nvars, FieldElem::ONE);
        for _ in 0..k {
            out = out.mul(field, self);
        }
        out
    }

    /// Formal partial derivative; in characteristic p the factor `e` is
    /// reduced mod p, so `d/dx x^p = 0`.
    pub fn derivative(&self, field: &Field, var: usize) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, &c) in &self.terms {
            if e[var] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[var] -= 1;
            out.insert_add(field, d, field.mul(c, field.from_int(e[var] as i64)));
        }
        out
    }

    /// Evaluates at a point of `field`, which must contain this polynomial's
    /// coefficient field.
    pub fn eval(&self, field: &Field, point: &[FieldElem]) -> FieldElem {
        let mut acc = FieldElem::ZERO;
        for (e, &c) in &self.terms {
            let mut m = c;
            for (&x, &k) in point.iter().zip(e) {
                if k > 0 {
                    m = field.mul(m, field.pow(x, k as u64));
                }
            }
            acc = field.add(acc, m);
        }
        acc
    }
}

/// A list of polynomials in `x1..xn` over one field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolySystem {
    pub field: Field,
    pub nvars: usize,
    pub polys: Vec<Poly>,
}

impl PolySystem {
    pub fn new(field: &Field, nvars: usize, polys: Vec<Poly>) -> Result<PolySystem> {
        if polys.iter().any(|p| p.nvars != nvars) {
            return Err(Error::DimensionMismatch("polynomial arity".into()));
        }
        Ok(PolySystem {
            field: field.clone(),
            nvars,
            polys,
        })
    }

    pub fn maxdeg(&self) -> u32 {
        self.polys.iter().map(Poly::degree).max().unwrap_or(0)
    }

    pub fn push(&mut self, p: Poly) {
        assert_eq!(p.nvars, self.nvars);
        self.polys.push(p);
    }

    /// Whether every polynomial vanishes at `point` (coordinates in `field`).
    pub fn vanishes_at(&self, field: &Field, point: &[FieldElem]) -> bool {
        self.polys.iter().all(|p| p.eval(field, point).is_zero())
    }

    /// An evaluator specialised to one target field.
    pub fn compile(&self, field: &Field) -> Result<CompiledSystem> {
        if !self.field.can_embed_into(field) {
            return Err(Error::FieldMismatch);
        }
        let maxdeg = self.maxdeg() as usize;
        let q = field.order() as usize;
        let mut powtab = vec![FieldElem::ZERO; q * (maxdeg + 1)];
        for a in field.elements() {
            let mut x = FieldElem::ONE;
            for e in 0..=maxdeg {
                powtab[a.index() * (maxdeg + 1) + e] = x;
                x = field.mul(x, a);
            }
        }
        let polys = self
            .polys
            .iter()
            .map(|p| {
                p.terms()
                    .map(|(e, c)| {
                        let factors = e
                            .iter()
                            .enumerate()
                            .filter(|(_, &k)| k > 0)
                            .map(|(v, &k)| (v, k as usize))
                            .collect();
                        (c, factors)
                    })
                    .collect()
            })
            .collect();
        Ok(CompiledSystem {
            field: field.clone(),
            stride: maxdeg + 1,
            powtab,
            polys,
        })
    }
}

type CompiledTerm = (FieldElem, Vec<(usize, usize)>);

pub struct CompiledSystem {
    field: Field,
    stride: usize,
    powtab: Vec<FieldElem>,
    polys: Vec<Vec<CompiledTerm>>,
}

impl CompiledSystem {
    #[inline]
    pub fn vanishes_at(&self, point: &[FieldElem]) -> bool {
        let f = &self.field;
        self.polys.iter().all(|terms| {
            let mut acc = FieldElem::ZERO;
            for (c, factors) in terms {
                let mut m = *c;
                for &(v, k) in factors {
                    m = f.mul(m, self.powtab[point[v].index() * self.stride + k]);
                }
                acc = f.add(acc, m);
            }
            acc.is_zero()
        })
    }
}

// --- parser -----------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(String),
    Var(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    Semi,
    End,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut line, mut col) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ';' => Some(Tok::Semi),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token { tok, line: tl, column: tc });
            i += 1;
            col += 1;
        } else if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
        } else if c.is_whitespace() {
            i += 1;
            col += 1;
        } else if c.is_ascii_digit() {
            let s: String = chars[i..].iter().take_while(|c| c.is_ascii_digit()).collect();
            i += s.len();
            col += s.len();
            out.push(Token { tok: Tok::Num(s), line: tl, column: tc });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let s: String = chars[i..]
                .iter()
                .take_while(|c| c.is_ascii_alphanumeric() || **c == '_')
                .collect();
            i += s.len();
            col += s.len();
            out.push(Token { tok: Tok::Var(s), line: tl, column: tc });
        } else {
            return Err(Error::Syntax {
                line: tl,
                column: tc,
                message: format!("unexpected character {c:?}"),
            });
        }
    }
    out.push(Token { tok: Tok::End, line, column: col });
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    field: &'a Field,
    nvars: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax(&self, t: &Token, message: impl Into<String>) -> Error {
        Error::Syntax {
            line: t.line,
            column: t.column,
            message: message.into(),
        }
    }

    fn sum(&mut self) -> Result<Poly> {
        let mut acc = self.product()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.bump();
                    let rhs = self.product()?;
                    acc = acc.add(self.field, &rhs);
                }
                Tok::Minus => {
                    self.bump();
                    let rhs = self.product()?;
                    acc = acc.sub(self.field, &rhs);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn product(&mut self) -> Result<Poly> {
        let mut acc = self.unary()?;
        while self.peek().tok == Tok::Star {
            self.bump();
            let rhs = self.unary()?;
            acc = acc.mul(self.field, &rhs);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Poly> {
        if self.peek().tok == Tok::Minus {
            self.bump();
            return Ok(self.unary()?.neg(self.field));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Poly> {
        let base = self.primary()?;
        if self.peek().tok != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let t = self.bump();
        match &t.tok {
            Tok::Num(s) => {
                let e: u32 = s
                    .parse()
                    .ok()
                    .filter(|&e| e <= MAX_EXPONENT)
                    .ok_or_else(|| self.syntax(&t, format!("exponent {s} is too large")))?;
                Ok(base.pow(self.field, e))
            }
            _ => Err(self.syntax(&t, "expected an integer exponent")),
        }
    }

    fn primary(&mut self) -> Result<Poly> {
        let t = self.bump();
        match &t.tok {
            Tok::Num(s) => {
                let p = self.field.p();
                match s.parse::<u64>() {
                    Ok(v) if v < p as u64 => Ok(Poly::constant(self.nvars, self.field.from_int(v as i64))),
                    _ => Err(Error::CoefficientOutOfField {
                        value: s.clone(),
                        p,
                        line: t.line,
                        column: t.column,
                    }),
                }
            }
            Tok::Var(name) => {
                let idx = name
                    .strip_prefix('x')
                    .filter(|d| !d.is_empty() && d.chars().all(|c| c.is_ascii_digit()) && !d.starts_with('0'))
                    .and_then(|d| d.parse::<usize>().ok())
                    .filter(|&i| i >= 1 && i <= self.nvars);
                match idx {
                    Some(i) => Ok(Poly::var(self.nvars, i - 1)),
                    None => Err(Error::UnknownVariable {
                        name: name.clone(),
                        line: t.line,
                        column: t.column,
                    }),
                }
            }
            Tok::LParen => {
                let inner = self.sum()?;
                let close = self.bump();
                if close.tok != Tok::RParen {
                    return Err(self.syntax(&close, "expected `)`"));
                }
                Ok(inner)
            }
            Tok::End => Err(self.syntax(&t, "unexpected end of input")),
            other => Err(self.syntax(&t, format!("unexpected token {other:?}"))),
        }
    }
}

/// Parses `;`-separated polynomials in `x1..x{nvars}`. Empty segments are
/// skipped, so an empty text is the empty system.
pub fn parse_poly_system(text: &str, field: &Field, nvars: usize) -> Result<PolySystem> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        field,
        nvars,
    };
    let mut polys = Vec::new();
    loop {
        match p.peek().tok {
            Tok::End => break,
            Tok::Semi => {
                p.bump();
                continue;
            }
            _ => {}
        }
        polys.push(p.sum()?);
        let t = p.peek().clone();
        match t.tok {
            Tok::Semi => {
                p.bump();
            }
            Tok::End => {}
            _ => return Err(p.syntax(&t, "expected `;` or end of input")),
        }
    }
    PolySystem::new(field, nvars, polys)
}

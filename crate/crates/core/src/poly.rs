//! Sparse multivariate polynomials with exact coefficients.
//!
//! Terms are kept in a map keyed by exponent vectors under graded
//! lexicographic order. Zero coefficients are never stored.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::{Coeff, GaussRat, QSqrt3, Ring, RingTag, Sqrt3Field};

/// Exponent vector ordered by total degree, then lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiPoly<C> {
    vars: Vec<String>,
    terms: BTreeMap<Monomial, C>,
}

pub fn var_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

impl<C: Coeff> MultiPoly<C> {
    pub fn zero(vars: &[String]) -> Self {
        Self { vars: vars.to_vec(), terms: BTreeMap::new() }
    }

    pub fn constant(vars: &[String], c: C) -> Self {
        let mut p = Self::zero(vars);
        p.add_term(vec![0; vars.len()], c);
        p
    }

    pub fn one(vars: &[String]) -> Self {
        Self::constant(vars, C::one())
    }

    /// The `i`-th variable (0-based).
    pub fn var(vars: &[String], i: usize) -> Self {
        let mut e = vec![0; vars.len()];
        e[i] = 1;
        Self::monomial(vars, e, C::one())
    }

    pub fn monomial(vars: &[String], exps: Vec<u32>, c: C) -> Self {
        let mut p = Self::zero(vars);
        p.add_term(exps, c);
        p
    }

    pub fn from_terms(vars: &[String], terms: impl IntoIterator<Item = (Vec<u32>, C)>) -> Result<Self> {
        let mut p = Self::zero(vars);
        for (e, c) in terms {
            if e.len() != vars.len() {
                return Err(Error::Mismatch(format!(
                    "exponent vector of length {} for {} variables",
                    e.len(),
                    vars.len()
                )));
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    /// Accumulate `c * x^e`, dropping the term if it cancels.
    pub fn add_term(&mut self, exps: Vec<u32>, c: C) {
        debug_assert_eq!(exps.len(), self.vars.len());
        if c.is_zero() {
            return;
        }
        let key = Monomial(exps);
        match self.terms.get_mut(&key) {
            Some(v) => {
                let s = v.add_ref(&c);
                if s.is_zero() {
                    self.terms.remove(&key);
                } else {
                    *v = s;
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in descending graded-lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &C)> {
        self.terms.iter().rev().map(|(m, c)| (m.0.as_slice(), c))
    }

    pub fn coeff(&self, exps: &[u32]) -> Option<&C> {
        self.terms.get(&Monomial(exps.to_vec()))
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().next_back().map(Monomial::degree)
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut it = self.terms.keys().map(Monomial::degree);
        match it.next() {
            Some(d) => it.all(|e| e == d),
            None => true,
        }
    }

    /// Homogeneous component of the given degree.
    pub fn homogeneous_part(&self, degree: u32) -> Self {
        let mut p = Self::zero(&self.vars);
        for (m, c) in &self.terms {
            if m.degree() == degree {
                p.terms.insert(m.clone(), c.clone());
            }
        }
        p
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.vars != other.vars {
            return Err(Error::Mismatch(format!(
                "variable lists differ: {:?} vs {:?}",
                self.vars, other.vars
            )));
        }
        Ok(())
    }

    pub fn arith(&self, other: &Self, op: ArithOp) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(match op {
            ArithOp::Add => self.add_ref(other),
            ArithOp::Sub => self.sub_ref(other),
            ArithOp::Mul => self.mul_ref(other),
        })
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut p = Self::zero(&self.vars);
        for (m, v) in &self.terms {
            let s = v.mul_ref(c);
            if !s.is_zero() {
                p.terms.insert(m.clone(), s);
            }
        }
        p
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(&self.vars);
        for _ in 0..k {
            acc = acc.mul_ref(self);
        }
        acc
    }

    pub fn derivative(&self, var: usize) -> Self {
        let mut p = Self::zero(&self.vars);
        for (m, c) in &self.terms {
            let e = m.0[var];
            if e == 0 {
                continue;
            }
            let mut exps = m.0.clone();
            exps[var] -= 1;
            p.add_term(exps, c.scale_int(e as i64));
        }
        p
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> MultiPoly<D> {
        let mut p = MultiPoly::zero(&self.vars);
        for (m, c) in &self.terms {
            p.add_term(m.0.clone(), f(c));
        }
        p
    }

    /// Rename variables without touching the terms.
    pub fn with_vars(&self, vars: &[String]) -> Result<Self> {
        if vars.len() != self.vars.len() {
            return Err(Error::Mismatch("variable count differs".into()));
        }
        Ok(Self { vars: vars.to_vec(), terms: self.terms.clone() })
    }

    /// Permute variables: variable `i` of the result carries the exponent of
    /// variable `perm[i]` of `self`.
    pub fn permute_vars(&self, perm: &[usize]) -> Self {
        let mut p = Self::zero(&self.vars);
        for (m, c) in &self.terms {
            let exps = perm.iter().map(|&j| m.0[j]).collect();
            p.add_term(exps, c.clone());
        }
        p
    }

    /// Evaluate in any ring, converting coefficients with `conv`.
    pub fn eval_with<R: Ring>(&self, point: &[R], zero: R, conv: impl Fn(&C) -> R) -> Result<R> {
        if point.len() != self.vars.len() {
            return Err(Error::Mismatch(format!(
                "point has {} coordinates, polynomial has {} variables",
                point.len(),
                self.vars.len()
            )));
        }
        let maxdeg = self.terms.keys().map(|m| *m.0.iter().max().unwrap_or(&0)).max().unwrap_or(0);
        // powers[v][e] = point[v]^e
        let powers: Vec<Vec<R>> = point
            .iter()
            .map(|x| {
                let mut row = vec![conv(&C::one())];
                for e in 1..=maxdeg as usize {
                    let next = row[e - 1].mul_ref(x);
                    row.push(next);
                }
                row
            })
            .collect();
        let mut sum = zero;
        for (m, c) in &self.terms {
            let mut t = conv(c);
            for (v, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    t = t.mul_ref(&powers[v][e as usize]);
                }
            }
            sum = sum.add_ref(&t);
        }
        Ok(sum)
    }

    pub fn eval_exact(&self, point: &[C]) -> Result<C> {
        self.eval_with(point, C::zero(), |c| c.clone())
    }

    pub fn eval_complex(&self, point: &[Complex64]) -> Result<Complex64> {
        self.eval_with(point, Complex64::new(0.0, 0.0), |c| c.to_complex())
    }

    pub fn eval_f64(&self, point: &[f64]) -> Result<Complex64> {
        let pt: Vec<Complex64> = point.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.eval_complex(&pt)
    }
}

impl<C: Coeff> Ring for MultiPoly<C> {
    fn ring_zero_like(&self) -> Self {
        Self::zero(&self.vars)
    }

    fn add_ref(&self, other: &Self) -> Self {
        assert_eq!(self.vars, other.vars, "variable lists differ");
        let mut p = self.clone();
        for (m, c) in &other.terms {
            p.add_term(m.0.clone(), c.clone());
        }
        p
    }

    fn sub_ref(&self, other: &Self) -> Self {
        self.add_ref(&other.neg_ref())
    }

    fn mul_ref(&self, other: &Self) -> Self {
        assert_eq!(self.vars, other.vars, "variable lists differ");
        let (a, b) = if self.len() >= other.len() { (self, other) } else { (other, self) };
        let a_terms: Vec<(&Monomial, &C)> = a.terms.iter().collect();
        let multiply_block = |block: &[(&Monomial, &C)]| {
            let mut acc = Self::zero(&self.vars);
            for (ma, ca) in block {
                for (mb, cb) in &b.terms {
                    let exps = ma.0.iter().zip(&mb.0).map(|(x, y)| x + y).collect();
                    acc.add_term(exps, ca.mul_ref(cb));
                }
            }
            acc
        };
        if a.len() * b.len() < 4096 {
            return multiply_block(&a_terms);
        }
        let partials: Vec<Self> = a_terms.par_chunks(16).map(multiply_block).collect();
        let mut acc = Self::zero(&self.vars);
        for part in partials {
            for (m, c) in part.terms {
                acc.add_term(m.0, c);
            }
        }
        acc
    }

    fn neg_ref(&self) -> Self {
        let mut p = self.clone();
        for c in p.terms.values_mut() {
            *c = c.neg_ref();
        }
        p
    }

    fn scale_int(&self, k: i64) -> Self {
        self.scale(&C::from_int(k))
    }
}

impl MultiPoly<GaussRat> {
    /// Split into real and imaginary parts, treating every variable as real.
    pub fn split_re_im(&self) -> (MultiPoly<GaussRat>, MultiPoly<GaussRat>) {
        let re = self.map_coeffs(|c| GaussRat::from_rational(c.re.clone()));
        let im = self.map_coeffs(|c| GaussRat::from_rational(c.im.clone()));
        (re, im)
    }

    /// Convert to integer coefficients, failing on any non-integer coefficient.
    pub fn to_int(&self) -> Result<MultiPoly<BigInt>> {
        let mut p = MultiPoly::zero(&self.vars);
        for (m, c) in &self.terms {
            if !c.im.is_zero() || !c.re.denom().is_one() {
                return Err(Error::NotRepresentable(format!(
                    "coefficient {:?} of monomial {:?} is not an integer",
                    c.to_strings(),
                    m.0
                )));
            }
            p.add_term(m.0.clone(), c.re.numer().clone());
        }
        Ok(p)
    }

    pub fn to_sqrt3(&self) -> MultiPoly<Sqrt3Field> {
        self.map_coeffs(Sqrt3Field::from_gauss)
    }

    /// Evaluate at a point with coordinates in `Q(sqrt 3)`.
    pub fn eval_sqrt3(&self, point: &[QSqrt3]) -> Result<Sqrt3Field> {
        let pt: Vec<Sqrt3Field> = point.iter().cloned().map(Sqrt3Field::real).collect();
        self.eval_with(&pt, <Sqrt3Field as Coeff>::zero(), Sqrt3Field::from_gauss)
    }
}

impl MultiPoly<BigInt> {
    pub fn to_gauss(&self) -> MultiPoly<GaussRat> {
        self.map_coeffs(|c| GaussRat::from_rational(BigRational::from_integer(c.clone())))
    }

    /// Maximum absolute value of any coefficient, as `f64`.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.to_complex().re.abs()).fold(0.0, f64::max)
    }
}

// --- serialization --------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum CoeffDoc {
    Single(String),
    Multi(Vec<String>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TermDoc {
    exps: Vec<u32>,
    coeff: CoeffDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PolyDoc {
    vars: Vec<String>,
    ring: RingTag,
    terms: Vec<TermDoc>,
}

impl<C: Coeff> MultiPoly<C> {
    pub fn to_json(&self) -> String {
        let terms = self
            .terms()
            .map(|(e, c)| {
                let mut parts = c.to_strings();
                let coeff = if parts.len() == 1 {
                    CoeffDoc::Single(parts.remove(0))
                } else {
                    CoeffDoc::Multi(parts)
                };
                TermDoc { exps: e.to_vec(), coeff }
            })
            .collect();
        let doc = PolyDoc { vars: self.vars.clone(), ring: C::TAG, terms };
        serde_json::to_string_pretty(&doc).expect("polynomial document serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: PolyDoc = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        if doc.ring != C::TAG {
            return Err(Error::Mismatch(format!("expected ring {}, found {}", C::TAG, doc.ring)));
        }
        let mut p = Self::zero(&doc.vars);
        for t in doc.terms {
            if t.exps.len() != doc.vars.len() {
                return Err(Error::Parse(format!(
                    "term {:?} does not match {} variables",
                    t.exps,
                    doc.vars.len()
                )));
            }
            let parts = match t.coeff {
                CoeffDoc::Single(s) => vec![s],
                CoeffDoc::Multi(v) => v,
            };
            let c = C::from_strings(&parts)?;
            if c.is_zero() {
                return Err(Error::Parse(format!("stored zero coefficient at {:?}", t.exps)));
            }
            let key = Monomial(t.exps);
            if p.terms.contains_key(&key) {
                return Err(Error::Parse(format!("duplicate monomial {:?}", key.0)));
            }
            p.terms.insert(key, c);
        }
        Ok(p)
    }
}

impl<C: Coeff> fmt::Display for MultiPoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (n, (e, c)) in self.terms().enumerate() {
            if n > 0 {
                f.write_str(" + ")?;
            }
            let parts = c.to_strings();
            if parts.len() == 1 {
                write!(f, "{}", parts[0])?;
            } else {
                write!(f, "({})", parts.join(", "))?;
            }
            for (v, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "*{}", self.vars[v])?,
                    _ => write!(f, "*{}^{}", self.vars[v], k)?,
                }
            }
        }
        Ok(())
    }
}

// --- text parser ----------------------------------------------------------

/// Parse an expression such as `z1*z4^2 + (2 - 3i)*z2^3` over `Q(i)`.
///
/// Supports `+ - *`, non-negative integer powers `^`, parentheses, integer
/// and `p/q` literals, the imaginary unit `i`, and the given variable names.
pub fn parse_gauss_poly(src: &str, vars: &[String]) -> Result<MultiPoly<GaussRat>> {
    let tokens = tokenize(src)?;
    let mut parser = Parser { tokens, pos: 0, vars };
    let p = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(Error::Parse(format!("unexpected token {:?}", parser.tokens[parser.pos])));
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push(Tok::Num(s.parse().map_err(|_| Error::Parse(format!("bad number {s}")))?));
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(ch) {
            out.push(Tok::Op(ch));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character `{ch}`")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Tok>,
    pos: usize,
    vars: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<MultiPoly<GaussRat>> {
        let mut acc = if self.eat('-') { self.term()?.neg_ref() } else {
            self.eat('+');
            self.term()?
        };
        loop {
            if self.eat('+') {
                acc = acc.add_ref(&self.term()?);
            } else if self.eat('-') {
                acc = acc.sub_ref(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<MultiPoly<GaussRat>> {
        let mut acc = self.power()?;
        loop {
            if self.eat('*') {
                acc = acc.mul_ref(&self.power()?);
            } else if self.eat('/') {
                let d = match self.peek() {
                    Some(Tok::Num(n)) if !Zero::is_zero(n) => n.clone(),
                    _ => return Err(Error::Parse("division only by a nonzero integer literal".into())),
                };
                self.pos += 1;
                let inv = GaussRat::from_rational(BigRational::new(<BigInt as One>::one(), d));
                acc = acc.scale(&inv);
            } else {
                return Ok(acc);
            }
        }
    }

    fn power(&mut self) -> Result<MultiPoly<GaussRat>> {
        let base = self.atom()?;
        if self.eat('^') {
            match self.peek() {
                Some(Tok::Num(n)) => {
                    let k: u32 = n
                        .to_string()
                        .parse()
                        .map_err(|_| Error::Parse("exponent too large".into()))?;
                    self.pos += 1;
                    Ok(base.pow(k))
                }
                _ => Err(Error::Parse("expected integer exponent".into())),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<MultiPoly<GaussRat>> {
        let tok = self.peek().cloned().ok_or_else(|| Error::Parse("unexpected end of input".into()))?;
        self.pos += 1;
        match tok {
            Tok::Num(n) => Ok(MultiPoly::constant(
                self.vars,
                GaussRat::from_rational(BigRational::from_integer(n)),
            )),
            Tok::Ident(name) if name == "i" => Ok(MultiPoly::constant(self.vars, GaussRat::i())),
            Tok::Ident(name) => match self.vars.iter().position(|v| *v == name) {
                Some(k) => Ok(MultiPoly::var(self.vars, k)),
                None => Err(Error::Parse(format!("unknown variable `{name}`"))),
            },
            Tok::Op('(') => {
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(Error::Parse("missing `)`".into()));
                }
                Ok(e)
            }
            Tok::Op('-') => Ok(self.power()?.neg_ref()),
            Tok::Op(c) => Err(Error::Parse(format!("unexpected `{c}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xs() -> Vec<String> {
        var_names("x", 4)
    }

    fn g(re: i64, im: i64) -> GaussRat {
        GaussRat::from_ints(re, im)
    }

    #[test]
    fn difference_of_squares() {
        let v = xs();
        let x1 = MultiPoly::<BigInt>::var(&v, 0);
        let one = MultiPoly::one(&v);
        let p = x1.add_ref(&one).mul_ref(&x1.sub_ref(&one));
        let expect = MultiPoly::from_terms(&v, [(vec![2, 0, 0, 0], BigInt::from(1)), (vec![0; 4], BigInt::from(-1))]).unwrap();
        assert_eq!(p, expect);
        assert_eq!(p.arith(&MultiPoly::zero(&v), ArithOp::Add).unwrap(), p);
    }

    #[test]
    fn gaussian_conjugate_pair() {
        let v = xs();
        let x1 = MultiPoly::<GaussRat>::var(&v, 0);
        let ix2 = MultiPoly::var(&v, 1).scale(&g(0, 1));
        let p = x1.add_ref(&ix2).mul_ref(&x1.sub_ref(&ix2));
        assert_eq!(p, parse_gauss_poly("x1^2 + x2^2", &v).unwrap());
    }

    #[test]
    fn mismatched_variables_rejected() {
        let a = MultiPoly::<BigInt>::var(&xs(), 0);
        let b = MultiPoly::<BigInt>::var(&var_names("y", 4), 0);
        assert!(a.arith(&b, ArithOp::Mul).is_err());
        assert!(a.eval_exact(&[BigInt::from(1)]).is_err());
    }

    #[test]
    fn evaluation() {
        let v = xs();
        let p = parse_gauss_poly("x1^2 + x2^2", &v).unwrap();
        let val = p.eval_f64(&[3.0, 4.0, 0.0, 0.0]).unwrap();
        assert_eq!(val, Complex64::new(25.0, 0.0));
        let seven = MultiPoly::constant(&v, g(7, 0));
        assert_eq!(seven.eval_exact(&[g(1, 1), g(2, 0), g(0, 0), g(5, -3)]).unwrap(), g(7, 0));
    }

    #[test]
    fn grlex_order_and_json_round_trip() {
        let v = xs();
        let p = parse_gauss_poly("x4^3 + 2*x1*x2 - (3/2 + i)*x1^2 + 5", &v).unwrap();
        let degs: Vec<u32> = p.terms().map(|(e, _)| e.iter().sum()).collect();
        assert_eq!(degs, vec![3, 2, 2, 0]);
        let first_quadratic: Vec<u32> = p.terms().nth(1).unwrap().0.to_vec();
        assert_eq!(first_quadratic, vec![2, 0, 0, 0]);
        let s = p.to_json();
        let back = MultiPoly::<GaussRat>::from_json(&s).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.to_json(), s);
        assert!(MultiPoly::<BigInt>::from_json(&s).is_err());
    }

    #[test]
    fn derivative_and_parser_errors() {
        let v = xs();
        let p = parse_gauss_poly("x1^3*x2 - x2", &v).unwrap();
        assert_eq!(p.derivative(0), parse_gauss_poly("3*x1^2*x2", &v).unwrap());
        assert!(parse_gauss_poly("x1 +* x2", &v).is_err());
        assert!(parse_gauss_poly("x9", &v).is_err());
        assert!(parse_gauss_poly("(x1", &v).is_err());
    }
}

//! Rational multivariate polynomials on R^d and truncated power series in a
//! formal parameter.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Exponent vector of a monomial, one entry per variable.
pub type Exponent = Vec<u32>;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn factorial(n: usize) -> Rational {
    (1..=n as i64).fold(Rational::one(), |acc, k| acc * int(k))
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Graded lexicographic comparison: total degree first, then lexicographic.
/// Exponent vectors of all monomials of total degree `deg` in `dim` variables.
pub fn monomials(dim: usize, deg: u32) -> Vec<Exponent> {
    if dim == 0 {
        return if deg == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = vec![];
    for first in 0..=deg {
        for mut rest in monomials(dim - 1, deg - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

pub fn grlex(a: &[u32], b: &[u32]) -> Ordering {
    let da: u32 = a.iter().sum();
    let db: u32 = b.iter().sum();
    da.cmp(&db).then_with(|| b.cmp(a))
}

/// A polynomial with exact rational coefficients in `dim` variables.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Poly {
    dim: usize,
    terms: BTreeMap<Exponent, Rational>,
}

impl Poly {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: Rational) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(vec![0; dim], c);
        p
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, Rational::one())
    }

    pub fn var(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        Self::monomial(e, Rational::one())
    }

    pub fn monomial(exp: Exponent, c: Rational) -> Self {
        let mut p = Self::zero(exp.len());
        p.add_term(exp, c);
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Exponent, Rational)>>(dim: usize, it: I) -> Self {
        let mut p = Self::zero(dim);
        for (e, c) in it {
            assert_eq!(e.len(), dim, "exponent length must equal dim");
            p.add_term(e, c);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &Rational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exp: &[u32]) -> Rational {
        self.terms.get(exp).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    /// Adds `c * x^exp` in place, pruning a cancelled term.
    pub fn add_term(&mut self, exp: Exponent, c: Rational) {
        if c.is_zero() {
            return;
        }
        debug_assert_eq!(exp.len(), self.dim);
        match self.terms.entry(exp) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn check_dim(&self, other: &Poly) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Poly) -> Result<Poly> {
        self.check_dim(other)?;
        let mut out = self.clone();
        out.add_assign_ref(other);
        Ok(out)
    }

    pub fn try_sub(&self, other: &Poly) -> Result<Poly> {
        self.check_dim(other)?;
        let mut out = self.clone();
        out.add_scaled(other, &-Rational::one());
        Ok(out)
    }

    pub fn try_mul(&self, other: &Poly) -> Result<Poly> {
        self.check_dim(other)?;
        let mut out = Poly::zero(self.dim);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Exponent = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                out.add_term(e, ca * cb);
            }
        }
        Ok(out)
    }

    pub fn add_assign_ref(&mut self, other: &Poly) {
        for (e, c) in &other.terms {
            self.add_term(e.clone(), c.clone());
        }
    }

    /// `self += s * other`
    pub fn add_scaled(&mut self, other: &Poly, s: &Rational) {
        if s.is_zero() {
            return;
        }
        for (e, c) in &other.terms {
            self.add_term(e.clone(), c * s);
        }
    }

    pub fn scale(&self, s: &Rational) -> Poly {
        if s.is_zero() {
            return Poly::zero(self.dim);
        }
        Poly {
            dim: self.dim,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect(),
        }
    }

    /// Exact partial derivative with respect to `x_i`.
    pub fn partial(&self, i: usize) -> Result<Poly> {
        if i >= self.dim {
            return Err(Error::IndexOutOfRange { index: i, dim: self.dim });
        }
        let mut out = Poly::zero(self.dim);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut e2 = e.clone();
                e2[i] -= 1;
                out.add_term(e2, c * int(e[i] as i64));
            }
        }
        Ok(out)
    }

    /// Mixed partial derivative `∂^alpha`.
    pub fn derivative(&self, alpha: &[u32]) -> Poly {
        assert_eq!(alpha.len(), self.dim);
        let mut out = Poly::zero(self.dim);
        'terms: for (e, c) in &self.terms {
            let mut k = c.clone();
            let mut e2 = e.clone();
            for (j, &a) in alpha.iter().enumerate() {
                if e[j] < a {
                    continue 'terms;
                }
                for t in 0..a {
                    k *= int((e[j] - t) as i64);
                }
                e2[j] -= a;
            }
            out.add_term(e2, k);
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut out = Poly::one(self.dim);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                rational_to_f64(c)
                    * e.iter().zip(x).map(|(&k, &v)| v.powi(k as i32)).product::<f64>()
            })
            .sum()
    }

    /// Substitutes `x_i -> images[i]` (all images share a target dimension).
    pub fn substitute(&self, images: &[Poly]) -> Poly {
        assert_eq!(images.len(), self.dim);
        let target = images.first().map(|p| p.dim).unwrap_or(0);
        let mut out = Poly::zero(target);
        for (e, c) in &self.terms {
            let mut t = Poly::constant(target, c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = &t * &images[i].pow(k);
                }
            }
            out.add_assign_ref(&t);
        }
        out
    }

    /// Terms in ascending graded-lex order.
    pub fn sorted_terms(&self) -> Vec<(&Exponent, &Rational)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|a, b| grlex(a.0, b.0));
        v
    }

    pub fn parse(dim: usize, s: &str) -> Result<Poly> {
        let mut p = Parser { src: s.as_bytes(), pos: 0, dim };
        let out = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("trailing input"));
        }
        Ok(out)
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly[{}]({})", self.dim, self)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (e, c)) in self.sorted_terms().into_iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            let vars: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0)
                .map(|(i, &p)| if p == 1 { format!("x{i}") } else { format!("x{i}^{p}") })
                .collect();
            if vars.is_empty() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{a}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}

macro_rules! poly_binop {
    ($tr:ident, $m:ident, $f:ident) => {
        impl $tr<&Poly> for &Poly {
            type Output = Poly;
            fn $m(self, rhs: &Poly) -> Poly {
                self.$f(rhs).expect("polynomial dimension mismatch")
            }
        }
        impl $tr<Poly> for Poly {
            type Output = Poly;
            fn $m(self, rhs: Poly) -> Poly {
                (&self).$f(&rhs).expect("polynomial dimension mismatch")
            }
        }
    };
}
poly_binop!(Add, add, try_add);
poly_binop!(Sub, sub, try_sub);
poly_binop!(Mul, mul, try_mul);

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(&-Rational::one())
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        (&self).neg()
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Poly> {
        let mut acc = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                b'-' => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Poly> {
        let mut acc = self.power()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            acc = &acc * &self.power()?;
        }
        Ok(acc)
    }

    fn power(&mut self) -> Result<Poly> {
        let base = self.unary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let k = self.uint()?;
            let k: u32 = k.try_into().map_err(|_| self.err("exponent too large"))?;
            return Ok(base.pow(k));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Poly> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(-self.unary()?);
        }
        self.atom()
    }

    fn uint(&mut self) -> Result<BigInt> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected integer"));
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        Ok(s.parse().unwrap())
    }

    fn atom(&mut self) -> Result<Poly> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(b'x') => {
                self.pos += 1;
                let i = self.uint()?;
                let i: usize = i.try_into().map_err(|_| self.err("variable index"))?;
                if i >= self.dim {
                    return Err(self.err(&format!("variable x{i} out of range for dim {}", self.dim)));
                }
                Ok(Poly::var(self.dim, i))
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.uint()?;
                let mut r = Rational::from_integer(n);
                // `a/b` is only accepted as a literal rational.
                if self.peek() == Some(b'/') {
                    self.pos += 1;
                    self.skip_ws();
                    let d = self.uint()?;
                    if d.is_zero() {
                        return Err(self.err("zero denominator"));
                    }
                    r /= Rational::from_integer(d);
                }
                Ok(Poly::constant(self.dim, r))
            }
            _ => Err(self.err("unexpected token")),
        }
    }
}

/// Values that can populate a truncated series.
pub trait SeriesCarrier: Clone {
    fn zero_like(&self) -> Self;
    fn add_ref(&self, other: &Self) -> Self;
    fn scale_by(&self, s: &Rational) -> Self;
    fn is_zero_value(&self) -> bool;
}

impl SeriesCarrier for Poly {
    fn zero_like(&self) -> Self {
        Poly::zero(self.dim)
    }
    fn add_ref(&self, other: &Self) -> Self {
        self + other
    }
    fn scale_by(&self, s: &Rational) -> Self {
        self.scale(s)
    }
    fn is_zero_value(&self) -> bool {
        self.is_zero()
    }
}

/// A power series in ħ truncated after `order` (inclusive).
#[derive(Clone, Debug, PartialEq)]
pub struct FormalSeries<T> {
    coeffs: Vec<T>,
}

impl<T: SeriesCarrier> FormalSeries<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least the constant term");
        Self { coeffs }
    }

    /// The constant series `c` at the given order.
    pub fn constant(c: T, order: usize) -> Self {
        let z = c.zero_like();
        let mut coeffs = vec![c];
        coeffs.resize(order + 1, z);
        Self { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> &T {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.order() != other.order() {
            return Err(Error::OrderMismatch(self.order(), other.order()));
        }
        Ok(Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.add_ref(b)).collect(),
        })
    }

    pub fn scale(&self, s: &Rational) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c.scale_by(s)).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero_value())
    }

    /// Cauchy product truncated at the common order, for any bilinear `prod`.
    pub fn mul_with<U, V, F>(&self, other: &FormalSeries<U>, prod: F) -> Result<FormalSeries<V>>
    where
        U: SeriesCarrier,
        V: SeriesCarrier,
        F: Fn(&T, &U) -> V,
    {
        if self.order() != other.order() {
            return Err(Error::OrderMismatch(self.order(), other.order()));
        }
        let n = self.order();
        let mut out: Vec<Option<V>> = vec![None; n + 1];
        for i in 0..=n {
            for j in 0..=(n - i) {
                let p = prod(&self.coeffs[i], &other.coeffs[j]);
                out[i + j] = Some(match out[i + j].take() {
                    None => p,
                    Some(acc) => acc.add_ref(&p),
                });
            }
        }
        Ok(FormalSeries { coeffs: out.into_iter().map(|v| v.unwrap()).collect() })
    }
}

impl FormalSeries<Poly> {
    pub fn series_mul(&self, other: &Self) -> Result<Self> {
        if let (Some(a), Some(b)) = (self.coeffs.first(), other.coeffs.first()) {
            if a.dim() != b.dim() {
                return Err(Error::DimensionMismatch(a.dim(), b.dim()));
            }
        }
        self.mul_with(other, |a, b| a * b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Poly {
        Poly::parse(2, s).unwrap()
    }

    #[test]
    fn arithmetic_examples() {
        assert_eq!(&p("x0") * &p("x1"), p("x0*x1"));
        assert!((&p("x0") + &p("-x0")).is_zero());
        assert_eq!(p("(1+x0)^2"), p("1 + 2*x0 + x0^2"));
        assert!(p("x0").try_add(&Poly::var(3, 0)).is_err());
    }

    #[test]
    fn partial_examples() {
        assert_eq!(p("x0^2*x1").partial(0).unwrap(), p("2*x0*x1"));
        assert!(p("x1").partial(0).unwrap().is_zero());
        let c = p("x0^3");
        assert_eq!(c.partial(0).unwrap().partial(0).unwrap(), p("6*x0"));
        assert!(c.partial(2).is_err());
        assert_eq!(c.derivative(&[2, 0]), p("6*x0"));
    }

    #[test]
    fn print_parse_roundtrip() {
        let q = Poly::parse(3, "-1/2*x0*x2^3 + 7 - x1 + 3/4*x0^2").unwrap();
        assert_eq!(q.to_string(), "7 - x1 + 3/4*x0^2 - 1/2*x0*x2^3");
        assert_eq!(Poly::parse(3, &q.to_string()).unwrap(), q);
        assert_eq!(Poly::zero(2).to_string(), "0");
    }

    #[test]
    fn parse_errors() {
        assert!(Poly::parse(2, "x2").is_err());
        assert!(Poly::parse(2, "1/0").is_err());
        assert!(Poly::parse(2, "x0 +").is_err());
        assert!(Poly::parse(2, "(x0").is_err());
    }

    #[test]
    fn series_examples() {
        let one = Poly::one(1);
        let x = Poly::var(1, 0);
        let a = FormalSeries::new(vec![one.clone(), x.clone()]);
        let b = FormalSeries::new(vec![one.clone(), -&x]);
        assert_eq!(a.series_mul(&b).unwrap(), FormalSeries::constant(one.clone(), 1));

        let h = FormalSeries::new(vec![Poly::zero(1), one.clone()]);
        assert!(h.series_mul(&h).unwrap().is_zero());

        let c = FormalSeries::constant(Poly::constant(1, int(3)), 2);
        let s = FormalSeries::new(vec![x.clone(), one.clone(), x.pow(2)]);
        assert_eq!(c.series_mul(&s).unwrap(), s.scale(&int(3)));

        let t = FormalSeries::constant(one, 2);
        assert!(a.series_mul(&t).is_err());
    }
}

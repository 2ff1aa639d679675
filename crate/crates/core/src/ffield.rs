//! Finite fields `F_{p^k}` with table-driven arithmetic.
//!
//! Elements are stored as packed indices `c_0 + c_1 p + ... + c_{k-1} p^{k-1}`
//! where `c_i` are the coordinates in the power basis of the modulus. The
//! observable representation is the coefficient vector ([`Field::coeffs`]);
//! the packing is an internal fast path. Base-field residues `c < p` have the
//! same index in every extension built on top of the prime field, which is
//! the only embedding the crate needs.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest field order accepted by [`Field::new`].
pub const DEFAULT_MAX_ORDER: u32 = 729;
/// Largest supported extension degree.
pub const MAX_DEGREE: u32 = 6;

/// An element of some [`Field`], as a packed coefficient index
/// `sum c_i p^i`. Serialised as that index.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldElem(u16);

impl FieldElem {
    pub const ZERO: FieldElem = FieldElem(0);
    pub const ONE: FieldElem = FieldElem(1);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub(crate) fn from_index(i: usize) -> FieldElem {
        FieldElem(i as u16)
    }
}

/// Field designation `p^k` as written in file headers and CLI flags.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldDesignation {
    pub p: u32,
    pub k: u32,
}

impl FromStr for FieldDesignation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::BadParams(format!("bad field designation {s:?}, expected p^k"));
        let s = s.trim();
        let (p, k) = match s.split_once('^') {
            Some((p, k)) => (p.trim(), k.trim()),
            None => (s, "1"),
        };
        Ok(FieldDesignation {
            p: p.parse().map_err(|_| bad())?,
            k: k.parse().map_err(|_| bad())?,
        })
    }
}

impl fmt::Display for FieldDesignation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.p, self.k)
    }
}

/// Field operations accepted by [`Field::apply`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Neg,
    Mul,
    Inv,
}

struct FieldData {
    p: u32,
    k: u32,
    q: u32,
    modulus: Vec<u32>,
    add: Vec<u16>,
    mul: Vec<u16>,
    neg: Vec<u16>,
    inv: Vec<u16>,
    trace: Vec<u16>,
}

/// A finite field `F_{p^k}`. Cheap to clone and safe to share across threads.
#[derive(Clone)]
pub struct Field(Arc<FieldData>);

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.0.p == other.0.p && self.0.k == other.0.k && self.0.modulus == other.0.modulus
    }
}

impl Eq for Field {}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}^{}", self.0.p, self.0.k)
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.0.p, self.0.k)
    }
}

static FIELD_CACHE: Lazy<Mutex<HashMap<(u32, u32), Field>>> = Lazy::new(Default::default);

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn checked_order(p: u32, k: u32, max_order: u32) -> Result<u32> {
    let out = || Error::DegreeOutOfBudget { p, k, max_order };
    if k == 0 || k > MAX_DEGREE {
        return Err(out());
    }
    let mut q: u64 = 1;
    for _ in 0..k {
        q *= p as u64;
        if q > max_order as u64 {
            return Err(out());
        }
    }
    Ok(q as u32)
}

impl Field {
    /// `F_{p^k}` with the default order budget.
    pub fn new(p: u32, k: u32) -> Result<Field> {
        Field::with_budget(p, k, DEFAULT_MAX_ORDER)
    }

    pub fn prime(p: u32) -> Result<Field> {
        Field::new(p, 1)
    }

    /// `F_{p^k}` with a caller-chosen order budget. The modulus is the
    /// lexicographically least monic irreducible of degree `k`, ordering
    /// candidates by their packed coefficient index.
    pub fn with_budget(p: u32, k: u32, max_order: u32) -> Result<Field> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        checked_order(p, k, max_order.min(u16::MAX as u32))?;
        if let Some(f) = FIELD_CACHE.lock().unwrap().get(&(p, k)) {
            return Ok(f.clone());
        }
        let modulus = if k == 1 {
            vec![0, 1]
        } else {
            least_irreducible(p, k)
        };
        let field = Field(Arc::new(FieldData::build(p, k, modulus)));
        FIELD_CACHE
            .lock()
            .unwrap()
            .entry((p, k))
            .or_insert_with(|| field.clone());
        Ok(field)
    }

    /// Validates a user-supplied modulus (monic, low-to-high coefficients).
    /// Only the lex-least modulus is cached; other moduli build a fresh field.
    pub fn with_modulus(p: u32, modulus: &[u32]) -> Result<Field> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        let k = modulus.len().saturating_sub(1) as u32;
        checked_order(p, k, DEFAULT_MAX_ORDER)?;
        if modulus.last() != Some(&1) || modulus.iter().any(|&c| c >= p) {
            return Err(Error::ReducibleModulus(k));
        }
        if k > 1 && !is_irreducible(p, modulus) {
            return Err(Error::ReducibleModulus(k));
        }
        let modulus = if k == 1 { vec![0, 1] } else { modulus.to_vec() };
        Ok(Field(Arc::new(FieldData::build(p, k, modulus))))
    }

    pub fn from_designation(d: FieldDesignation) -> Result<Field> {
        Field::new(d.p, d.k)
    }

    pub fn designation(&self) -> FieldDesignation {
        FieldDesignation {
            p: self.0.p,
            k: self.0.k,
        }
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.0.p
    }

    #[inline]
    pub fn degree(&self) -> u32 {
        self.0.k
    }

    /// Cardinality `p^k`.
    #[inline]
    pub fn order(&self) -> u32 {
        self.0.q
    }

    pub fn modulus(&self) -> &[u32] {
        &self.0.modulus
    }

    pub fn is_prime_field(&self) -> bool {
        self.0.k == 1
    }

    /// The degree-`k` extension of this field. Only prime fields can be
    /// extended: base-field scalars are the only embedding supported.
    pub fn extension(&self, k: u32) -> Result<Field> {
        if k == 1 {
            return Ok(self.clone());
        }
        if !self.is_prime_field() {
            return Err(Error::UnsupportedEmbedding {
                p: self.0.p,
                j: self.0.k,
            });
        }
        Field::new(self.0.p, k)
    }

    /// Maps an element of `self` into `target`. Succeeds when the fields are
    /// equal or `self` is the prime subfield of `target`.
    pub fn embed_into(&self, target: &Field, a: FieldElem) -> Result<FieldElem> {
        if self == target || (self.is_prime_field() && self.0.p == target.0.p) {
            Ok(a)
        } else if self.0.p != target.0.p {
            Err(Error::FieldMismatch)
        } else {
            Err(Error::UnsupportedEmbedding {
                p: self.0.p,
                j: self.0.k,
            })
        }
    }

    pub fn can_embed_into(&self, target: &Field) -> bool {
        self.embed_into(target, FieldElem::ZERO).is_ok()
    }

    pub fn contains(&self, a: FieldElem) -> bool {
        a.index() < self.0.q as usize
    }

    pub fn check(&self, a: FieldElem) -> Result<FieldElem> {
        if self.contains(a) {
            Ok(a)
        } else {
            Err(Error::FieldMismatch)
        }
    }

    /// Element with the given power-basis coordinates (low-to-high). Missing
    /// trailing coordinates are zero.
    pub fn from_coeffs(&self, coeffs: &[u32]) -> Result<FieldElem> {
        if coeffs.len() > self.0.k as usize {
            return Err(Error::FieldMismatch);
        }
        let mut idx = 0usize;
        for &c in coeffs.iter().rev() {
            if c >= self.0.p {
                return Err(Error::FieldMismatch);
            }
            idx = idx * self.0.p as usize + c as usize;
        }
        Ok(FieldElem::from_index(idx))
    }

    pub fn coeffs(&self, a: FieldElem) -> Vec<u32> {
        let p = self.0.p as usize;
        let mut i = a.index();
        (0..self.0.k)
            .map(|_| {
                let c = i % p;
                i /= p;
                c as u32
            })
            .collect()
    }

    /// The image of an integer in the prime subfield.
    pub fn from_int(&self, n: i64) -> FieldElem {
        FieldElem::from_index(n.rem_euclid(self.0.p as i64) as usize)
    }

    /// Element by packed index, panicking when out of range.
    pub fn elem(&self, index: usize) -> FieldElem {
        assert!(index < self.0.q as usize, "index {index} outside {self}");
        FieldElem::from_index(index)
    }

    /// All `q` elements in lexicographic coefficient order, zero first.
    pub fn elements(&self) -> impl Iterator<Item = FieldElem> + Clone {
        (0..self.0.q as usize).map(FieldElem::from_index)
    }

    /// Full enumeration with the default enumeration budget.
    pub fn enumerate(&self, budget: u128) -> Result<Vec<FieldElem>> {
        if self.0.q as u128 > budget {
            return Err(Error::BudgetExceeded {
                needed: self.0.q as u128,
                budget,
            });
        }
        Ok(self.elements().collect())
    }

    #[inline]
    fn idx2(&self, a: FieldElem, b: FieldElem) -> usize {
        a.index() * self.0.q as usize + b.index()
    }

    #[inline]
    pub fn add(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        FieldElem(self.0.add[self.idx2(a, b)])
    }

    #[inline]
    pub fn sub(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn neg(&self, a: FieldElem) -> FieldElem {
        FieldElem(self.0.neg[a.index()])
    }

    #[inline]
    pub fn mul(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        FieldElem(self.0.mul[self.idx2(a, b)])
    }

    /// `acc + a * b`.
    #[inline]
    pub fn mul_add(&self, acc: FieldElem, a: FieldElem, b: FieldElem) -> FieldElem {
        self.add(acc, self.mul(a, b))
    }

    pub fn inv(&self, a: FieldElem) -> Result<FieldElem> {
        if a.is_zero() {
            Err(Error::DivisionByZero)
        } else {
            Ok(FieldElem(self.0.inv[a.index()]))
        }
    }

    pub fn div(&self, a: FieldElem, b: FieldElem) -> Result<FieldElem> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: FieldElem, mut e: u64) -> FieldElem {
        let mut base = a;
        let mut acc = FieldElem::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Checked dispatch over the four primitive operations.
    pub fn apply(&self, op: ArithOp, a: FieldElem, b: Option<FieldElem>) -> Result<FieldElem> {
        let a = self.check(a)?;
        let b = b.map(|b| self.check(b)).transpose()?;
        match (op, b) {
            (ArithOp::Add, Some(b)) => Ok(self.add(a, b)),
            (ArithOp::Mul, Some(b)) => Ok(self.mul(a, b)),
            (ArithOp::Neg, None) => Ok(self.neg(a)),
            (ArithOp::Inv, None) => self.inv(a),
            _ => Err(Error::BadParams(format!("wrong operand count for {op:?}"))),
        }
    }

    /// Absolute trace `a + a^p + ... + a^(p^(k-1))`, as a residue mod `p`.
    #[inline]
    pub fn trace(&self, a: FieldElem) -> u32 {
        self.0.trace[a.index()] as u32
    }

    /// Exponent of the canonical additive character: `chi(a) = w^e` with
    /// `w = exp(2 pi i / p)` and `e = trace(a)`.
    #[inline]
    pub fn char_exponent(&self, a: FieldElem) -> u32 {
        self.trace(a)
    }

    pub fn char_eval(&self, a: FieldElem) -> Complex64 {
        root_of_unity(self.0.p, self.char_exponent(a))
    }
}

fn root_of_unity(p: u32, e: u32) -> Complex64 {
    Complex64::from_polar(1.0, TAU * e as f64 / p as f64)
}

/// Accumulates a character sum as exact residue counts; floats appear only
/// in [`CharacterSum::value`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharacterSum {
    p: u32,
    counts: Vec<u64>,
}

impl CharacterSum {
    pub fn new(field: &Field) -> Self {
        CharacterSum {
            p: field.p(),
            counts: vec![0; field.p() as usize],
        }
    }

    #[inline]
    pub fn push_exponent(&mut self, e: u32) {
        self.counts[e as usize] += 1;
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn value(&self) -> Complex64 {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(e, &c)| root_of_unity(self.p, e as u32) * c as f64)
            .sum()
    }
}

// --- construction helpers ---------------------------------------------------

fn digits(mut v: usize, p: usize, len: usize) -> Vec<u32> {
    (0..len)
        .map(|_| {
            let d = v % p;
            v /= p;
            d as u32
        })
        .collect()
}

/// Remainder of `a` modulo monic `m` over `F_p` (low-to-high coefficients).
fn poly_rem(p: u32, a: &[u32], m: &[u32]) -> Vec<u32> {
    let mut r: Vec<u32> = a.to_vec();
    let dm = m.len() - 1;
    while r.len() > dm {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - dm;
        if lead != 0 {
            for (i, &c) in m.iter().enumerate() {
                let t = (lead as u64 * c as u64 % p as u64) as u32;
                r[shift + i] = (r[shift + i] + p - t) % p;
            }
        }
        r.pop();
    }
    r
}

fn is_irreducible(p: u32, m: &[u32]) -> bool {
    let k = m.len() - 1;
    let p = p as usize;
    for d in 1..=k / 2 {
        for v in 0..p.pow(d as u32) {
            let mut divisor = digits(v, p, d);
            divisor.push(1);
            if poly_rem(p as u32, m, &divisor).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

fn least_irreducible(p: u32, k: u32) -> Vec<u32> {
    let pu = p as usize;
    for v in 0..pu.pow(k) {
        let mut m = digits(v, pu, k as usize);
        m.push(1);
        if is_irreducible(p, &m) {
            return m;
        }
    }
    unreachable!("an irreducible polynomial of every degree exists")
}

impl FieldData {
    fn build(p: u32, k: u32, modulus: Vec<u32>) -> FieldData {
        let q = p.pow(k);
        let qs = q as usize;
        let ps = p as usize;
        let ks = k as usize;
        let pack = |c: &[u32]| c.iter().rev().fold(0usize, |acc, &d| acc * ps + d as usize);
        let coords: Vec<Vec<u32>> = (0..qs).map(|i| digits(i, ps, ks)).collect();

        let mut add = vec![0u16; qs * qs];
        let mut mul = vec![0u16; qs * qs];
        let mut prod = vec![0u32; 2 * ks];
        for a in 0..qs {
            for b in 0..qs {
                let s: Vec<u32> = coords[a]
                    .iter()
                    .zip(&coords[b])
                    .map(|(x, y)| (x + y) % p)
                    .collect();
                add[a * qs + b] = pack(&s) as u16;

                prod.iter_mut().for_each(|c| *c = 0);
                for (i, &x) in coords[a].iter().enumerate() {
                    if x == 0 {
                        continue;
                    }
                    for (j, &y) in coords[b].iter().enumerate() {
                        prod[i + j] = ((prod[i + j] as u64 + x as u64 * y as u64) % p as u64) as u32;
                    }
                }
                let r = if ks == 1 {
                    vec![prod[0]]
                } else {
                    poly_rem(p, &prod[..2 * ks - 1], &modulus)
                };
                mul[a * qs + b] = pack(&r) as u16;
            }
        }
        let neg: Vec<u16> = (0..qs)
            .map(|a| pack(&coords[a].iter().map(|&c| (p - c) % p).collect::<Vec<_>>()) as u16)
            .collect();
        let mut inv = vec![0u16; qs];
        for a in 1..qs {
            for b in 1..qs {
                if mul[a * qs + b] == 1 {
                    inv[a] = b as u16;
                    break;
                }
            }
        }
        let mut trace = vec![0u16; qs];
        for (a, t) in trace.iter_mut().enumerate() {
            // a^(p^i) by repeated p-th powers
            let mut acc = 0usize;
            let mut cur = a;
            for _ in 0..k {
                acc = add[acc * qs + cur] as usize;
                let mut pw = 1usize;
                for _ in 0..p {
                    pw = mul[pw * qs + cur] as usize;
                }
                cur = pw;
            }
            debug_assert!(acc < ps, "trace must land in the prime field");
            *t = acc as u16;
        }
        FieldData {
            p,
            k,
            q,
            modulus,
            add,
            mul,
            neg,
            inv,
            trace,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_field_construction() {
        let f = Field::new(3, 1).unwrap();
        assert_eq!(f.order(), 3);
        assert_eq!(f.modulus(), &[0, 1]);
        assert_eq!(Field::new(4, 1).unwrap_err(), Error::NotPrime(4));
        assert!(matches!(
            Field::new(3, 7),
            Err(Error::DegreeOutOfBudget { .. })
        ));
        assert!(matches!(
            Field::new(5, 5),
            Err(Error::DegreeOutOfBudget { .. })
        ));
    }

    #[test]
    fn f9_modulus_is_t2_plus_1() {
        // exhaustive scan: the monic quadratics over F_3 in packed order
        // are t^2 (reducible) then t^2+1 (no roots mod 3)
        let f = Field::new(3, 2).unwrap();
        assert_eq!(f.modulus(), &[1, 0, 1]);
        let roots = |m: &[u32]| (0..3u32).filter(|&x| (m[0] + m[1] * x + m[2] * x * x) % 3 == 0).count();
        assert_eq!(roots(&[1, 0, 1]), 0);
        assert!(roots(&[0, 0, 1]) > 0);
    }

    #[test]
    fn f27_modulus() {
        assert_eq!(Field::new(3, 3).unwrap().modulus(), &[1, 2, 0, 1]);
    }

    #[test]
    fn arithmetic_examples() {
        let f3 = Field::new(3, 1).unwrap();
        assert_eq!(f3.mul(f3.elem(2), f3.elem(2)), f3.elem(1));
        let f9 = Field::new(3, 2).unwrap();
        let t = f9.from_coeffs(&[0, 1]).unwrap();
        assert_eq!(f9.coeffs(f9.mul(t, t)), vec![2, 0]);
        assert_eq!(f9.inv(FieldElem::ZERO), Err(Error::DivisionByZero));
        assert_eq!(
            f9.apply(ArithOp::Inv, FieldElem::ZERO, None),
            Err(Error::DivisionByZero)
        );
        assert_eq!(
            f3.apply(ArithOp::Add, f9.elem(8), Some(FieldElem::ONE)),
            Err(Error::FieldMismatch)
        );
    }

    #[test]
    fn enumeration() {
        let f3 = Field::new(3, 1).unwrap();
        let e: Vec<u32> = f3.elements().map(|a| a.index() as u32).collect();
        assert_eq!(e, vec![0, 1, 2]);
        let f27 = Field::new(3, 3).unwrap();
        let all = f27.enumerate(1000).unwrap();
        assert_eq!(all.len(), 27);
        assert_eq!(all[0], FieldElem::ZERO);
        let sum = all.iter().fold(FieldElem::ZERO, |acc, &a| f27.add(acc, a));
        assert_eq!(sum, FieldElem::ZERO);
        assert!(matches!(
            f27.enumerate(10),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn trace_examples() {
        let f9 = Field::new(3, 2).unwrap();
        assert_eq!(f9.trace(FieldElem::ONE), 2);
        assert_eq!(f9.trace(f9.from_coeffs(&[0, 1]).unwrap()), 0);
        assert_eq!(f9.trace(FieldElem::ZERO), 0);
    }

    #[test]
    fn character_examples() {
        let f3 = Field::new(3, 1).unwrap();
        assert!((f3.char_eval(FieldElem::ZERO) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let w = Complex64::from_polar(1.0, TAU / 3.0);
        assert!((f3.char_eval(FieldElem::ONE) - w).norm() < 1e-15);
        let f9 = Field::new(3, 2).unwrap();
        let mut s = CharacterSum::new(&f9);
        f9.elements().for_each(|a| s.push_exponent(f9.char_exponent(a)));
        assert!(s.value().norm() < 1e-12);
    }

    #[test]
    fn user_modulus_must_be_irreducible() {
        assert!(Field::with_modulus(3, &[1, 0, 1]).is_ok());
        assert_eq!(
            Field::with_modulus(3, &[2, 0, 1]).unwrap_err(),
            Error::ReducibleModulus(2)
        );
        // the non-lex-least modulus t^2+t+2 still gives a field of order 9
        let f = Field::with_modulus(3, &[2, 1, 1]).unwrap();
        let t = f.from_coeffs(&[0, 1]).unwrap();
        assert_eq!(f.pow(t, 8), FieldElem::ONE);
    }

    #[test]
    fn designation_parse() {
        let d: FieldDesignation = "3^2".parse().unwrap();
        assert_eq!(d, FieldDesignation { p: 3, k: 2 });
        assert_eq!(d.to_string(), "3^2");
        assert_eq!("5".parse::<FieldDesignation>().unwrap().k, 1);
        assert!("x^2".parse::<FieldDesignation>().is_err());
    }
}

//! Analytic rank, bias and min-entropy by exhaustive counting.

use std::io::Write;

use num_bigint::BigUint;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Budget;
use crate::enumerate::{for_each_point, par_fold, space_size};
use crate::error::{Error, Result};
use crate::ffield::{CharacterSum, Field, FieldElem};
use crate::linalg;
use crate::tensor::Tensor3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ARValue {
    /// Number of pairs `(x, y)` with `f(x, y) = 0`.
    pub zero_count: u128,
    pub q: u32,
    /// `n1 + n2`; the domain has `q^domain_exp` pairs.
    pub domain_exp: u32,
    pub value: f64,
}

impl ARValue {
    pub fn from_count(q: u32, domain_exp: u32, zero_count: u128) -> ARValue {
        let value = if zero_count == 0 {
            f64::INFINITY
        } else {
            (domain_exp as f64 - (zero_count as f64).ln() / (q as f64).ln()).max(0.0)
        };
        ARValue {
            zero_count,
            q,
            domain_exp,
            value,
        }
    }

    pub fn domain_size(&self) -> u128 {
        space_size(self.q, self.domain_exp as usize).unwrap_or(u128::MAX)
    }

    /// Smallest integer `m` with `m >= AR`, decided on integers:
    /// `q^(N - m) <= Z`.
    pub fn ceil(&self) -> u32 {
        let z = BigUint::from(self.zero_count);
        let q = BigUint::from(self.q);
        (0..=self.domain_exp)
            .find(|&m| q.pow(self.domain_exp - m) <= z)
            .unwrap_or(self.domain_exp)
    }

    /// `AR <= bound` with a small tolerance for the logarithm.
    pub fn at_most(&self, bound: f64) -> bool {
        self.value <= bound + 1e-12
    }
}

fn check_budget(needed: Option<u128>, budget: &Budget) -> Result<u128> {
    let needed = needed.unwrap_or(u128::MAX);
    if needed > budget.exact {
        return Err(Error::BudgetExceeded {
            needed,
            budget: budget.exact,
        });
    }
    Ok(needed)
}

/// Calls `visit(x, M_x)` for every `x` in `F^{n1}` in parallel and folds.
fn fold_contractions<A, I, S, M>(t: &Tensor3, init: I, step: S, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    S: Fn(&mut A, &[FieldElem], &[FieldElem]) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    let f = t.field();
    let [n1, n2, n3] = t.dims();
    let slices: Vec<&[FieldElem]> = (0..n1).map(|i| &t.entries()[i * n2 * n3..(i + 1) * n2 * n3]).collect();
    par_fold(
        f.order() as usize,
        n1,
        || (init(), vec![FieldElem::ZERO; n2 * n3]),
        |(acc, m), x| {
            m.iter_mut().for_each(|e| *e = FieldElem::ZERO);
            for (&xi, s) in x.iter().zip(&slices) {
                if xi.is_zero() {
                    continue;
                }
                for (o, &a) in m.iter_mut().zip(*s) {
                    *o = f.mul_add(*o, xi, a);
                }
            }
            step(acc, x, m);
        },
        |(a, m), (b, _)| (merge(a, b), m),
    )
    .0
}

/// `b = y^T M` for an `n2 x n3` matrix stored row-major.
#[inline]
fn left_apply(f: &Field, y: &[FieldElem], m: &[FieldElem], n3: usize, out: &mut [FieldElem]) {
    out.iter_mut().for_each(|e| *e = FieldElem::ZERO);
    for (j, &yj) in y.iter().enumerate() {
        if yj.is_zero() {
            continue;
        }
        for (o, &a) in out.iter_mut().zip(&m[j * n3..(j + 1) * n3]) {
            *o = f.mul_add(*o, yj, a);
        }
    }
}

/// Exact analytic rank from the number of zeros of the bilinear map. Every
/// pair `(x, y)` is accounted for: for fixed `x` the zeros in `y` form the
/// left kernel of `M_x`, which has `q^(n2 - rank M_x)` points.
pub fn analytic_rank(t: &Tensor3, budget: &Budget) -> Result<ARValue> {
    let f = t.field();
    let q = f.order();
    let [n1, n2, n3] = t.dims();
    check_budget(space_size(q, n1 + n2), budget)?;
    let z = fold_contractions(
        t,
        || (0u128, vec![FieldElem::ZERO; n2 * n3]),
        |(acc, scratch), _, m| {
            scratch.copy_from_slice(m);
            let r = linalg::rank_in_place(f, scratch, n2, n3);
            *acc += (q as u128).pow((n2 - r) as u32);
        },
        |(a, s), (b, _)| (a + b, s),
    )
    .0;
    Ok(ARValue::from_count(q, (n1 + n2) as u32, z))
}

/// Number of zeros of `f` found by visiting every pair `(x, y)`.
pub fn zero_count_pairs(t: &Tensor3, budget: &Budget) -> Result<u128> {
    let f = t.field();
    let q = f.order() as usize;
    let [n1, n2, n3] = t.dims();
    check_budget(space_size(q as u32, n1 + n2), budget)?;
    Ok(fold_contractions(
        t,
        || 0u128,
        |acc, _, m| {
            let mut b = vec![FieldElem::ZERO; n3];
            for_each_point(q, n2, |y| {
                left_apply(f, y, m, n3, &mut b);
                if b.iter().all(|e| e.is_zero()) {
                    *acc += 1;
                }
            });
        },
        |a, b| a + b,
    ))
}

/// `E_{x,y,z} chi(T(x, y, z))`. The average over `z` factors over the
/// coordinates of `b = f(x, y)`; each factor is a character sum over the
/// field, evaluated term by term.
pub fn bias_char_sum(t: &Tensor3, budget: &Budget) -> Result<Complex64> {
    let f = t.field();
    let q = f.order() as usize;
    let [n1, n2, n3] = t.dims();
    check_budget(space_size(q as u32, n1 + n2), budget)?;
    let inner: Vec<Complex64> = f
        .elements()
        .map(|b| {
            let mut s = CharacterSum::new(f);
            for z in f.elements() {
                s.push_exponent(f.char_exponent(f.mul(b, z)));
            }
            s.value() / q as f64
        })
        .collect();
    let total = fold_contractions(
        t,
        || Complex64::new(0.0, 0.0),
        |acc, _, m| {
            let mut b = vec![FieldElem::ZERO; n3];
            for_each_point(q, n2, |y| {
                left_apply(f, y, m, n3, &mut b);
                *acc += b.iter().fold(Complex64::new(1.0, 0.0), |p, e| p * inner[e.index()]);
            });
        },
        |a, b| a + b,
    );
    let dom = (q as f64).powi((n1 + n2) as i32);
    Ok(total / dom)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub q: u32,
    pub n3: usize,
    /// Count of each output `b`, indexed by `sum_k b_k q^k` with `b_k` the
    /// packed element index.
    pub histogram: Vec<u128>,
    pub total: u128,
    pub max_count: u128,
    pub argmax_is_zero: bool,
    /// `-log2(max_count / total)`.
    pub me: f64,
}

impl EntropyReport {
    /// Decodes a histogram index into the output vector.
    pub fn output(&self, index: usize) -> Vec<FieldElem> {
        let q = self.q as usize;
        let mut i = index;
        (0..self.n3)
            .map(|_| {
                let e = FieldElem::from_index(i % q);
                i /= q;
                e
            })
            .collect()
    }

    /// Writes `b_vector,count` rows, `b_vector` as space-separated element
    /// indices.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "b_vector,count")?;
        for (i, &c) in self.histogram.iter().enumerate() {
            let b: Vec<String> = self.output(i).iter().map(|e| e.index().to_string()).collect();
            writeln!(w, "{},{c}", b.join(" "))?;
        }
        Ok(())
    }
}

pub fn min_entropy(t: &Tensor3, budget: &Budget) -> Result<EntropyReport> {
    let f = t.field();
    let q = f.order() as usize;
    let [n1, n2, n3] = t.dims();
    check_budget(space_size(q as u32, n1 + n2), budget)?;
    let buckets = check_budget(space_size(q as u32, n3), budget)? as usize;
    let histogram = fold_contractions(
        t,
        || vec![0u128; buckets],
        |hist, _, m| {
            let mut b = vec![FieldElem::ZERO; n3];
            for_each_point(q, n2, |y| {
                left_apply(f, y, m, n3, &mut b);
                let idx = b.iter().rev().fold(0usize, |acc, e| acc * q + e.index());
                hist[idx] += 1;
            });
        },
        |mut a, b| {
            a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            a
        },
    );
    let total: u128 = histogram.iter().sum();
    let max_count = *histogram.iter().max().unwrap();
    let me = (total as f64).log2() - (max_count as f64).log2();
    Ok(EntropyReport {
        q: q as u32,
        n3,
        argmax_is_zero: histogram[0] == max_count,
        histogram,
        total,
        max_count,
        me: me.max(0.0),
    })
}

//! Bias, closeness and complexity experiments built on the rank functions.

use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::analytic::{analytic_rank, min_entropy, ARValue, EntropyReport};
use crate::config::Budget;
use crate::error::{Error, Result};
use crate::ffield::{Field, FieldElem};
use crate::slicerank::{slice_rank, Check, SRResult, SR_AR_CONST};
use crate::tensor::Tensor3;

/// Exact nonnegative rational in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u128,
    pub den: u128,
}

impl Ratio {
    pub fn new(num: u128, den: u128) -> Ratio {
        assert!(den != 0, "zero denominator");
        let g = num.gcd(&den);
        Ratio {
            num: num / g,
            den: den / g,
        }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// `Pr[f(x, y) = g(x, y)]` over uniform `(x, y)`, as the zero count of
/// `f - g`.
pub fn closeness(f: &Tensor3, g: &Tensor3, budget: &Budget) -> Result<(Ratio, ARValue)> {
    if f.dims() != g.dims() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            f.dims(),
            g.dims()
        )));
    }
    let d = f.sub(g)?;
    let ar = analytic_rank(&d, budget)?;
    Ok((Ratio::new(ar.zero_count, ar.domain_size()), ar))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosenessReport {
    pub delta: Ratio,
    /// `log_q(1/delta)`, which is `AR(f - g)`.
    pub log_term: f64,
    pub ar_diff: ARValue,
    pub sr_f: SRResult,
    pub sr_g: SRResult,
    pub sr_diff: SRResult,
    /// `|SR(f) - SR(g)| <= SR(f - g)`.
    pub holds_subadditive: Check,
    /// `SR(f - g) <= 8.13 AR(f - g)`.
    pub holds_diff_ar: Check,
    pub bound_holds: bool,
}

fn subadditive_check(f: &SRResult, g: &SRResult, d: &SRResult) -> Check {
    let widest = f.hi.saturating_sub(g.lo).max(g.hi.saturating_sub(f.lo));
    let narrowest = f.lo.saturating_sub(g.hi).max(g.lo.saturating_sub(f.hi));
    if widest <= d.lo {
        Check::Pass
    } else if narrowest > d.hi {
        Check::Fail
    } else {
        Check::Undetermined
    }
}

pub fn closeness_report(f: &Tensor3, g: &Tensor3, budget: &Budget) -> Result<ClosenessReport> {
    let (delta, ar_diff) = closeness(f, g, budget)?;
    let ar_f = analytic_rank(f, budget)?;
    let ar_g = analytic_rank(g, budget)?;
    let sr_f = slice_rank(f, budget, Some(&ar_f), None)?;
    let sr_g = slice_rank(g, budget, Some(&ar_g), None)?;
    let sr_diff = slice_rank(&f.sub(g)?, budget, Some(&ar_diff), None)?;

    let holds_subadditive = subadditive_check(&sr_f, &sr_g, &sr_diff);
    let holds_diff_ar = if ar_diff.q == 2 {
        Check::Skipped
    } else {
        let rhs = SR_AR_CONST * ar_diff.value + 1e-9;
        if sr_diff.hi as f64 <= rhs {
            Check::Pass
        } else if sr_diff.lo as f64 > rhs {
            Check::Fail
        } else {
            Check::Undetermined
        }
    };
    let ok = |c: Check| c == Check::Pass || c == Check::Skipped;
    Ok(ClosenessReport {
        delta,
        log_term: ar_diff.value,
        bound_holds: ok(holds_subadditive) && ok(holds_diff_ar),
        ar_diff,
        sr_f,
        sr_g,
        sr_diff,
        holds_subadditive,
        holds_diff_ar,
    })
}

/// Upper bound `n * SR(T)` on the number of non-scalar multiplications
/// needed for the bilinear map, next to its min-entropy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityBound {
    /// Largest of the three dimensions.
    pub n: usize,
    pub sr: SRResult,
    /// `n * SR` when SR is exact.
    pub bound: Option<usize>,
    /// `n * SR_hi`; always a valid upper bound.
    pub bound_hi: usize,
    pub ar: ARValue,
    pub me: EntropyReport,
    /// The largest output bucket is the zero bucket, so `ME = AR log2 q`.
    pub me_identity: bool,
}

pub fn complexity_bound(t: &Tensor3, budget: &Budget) -> Result<ComplexityBound> {
    let n = t.dims().into_iter().max().unwrap_or(0);
    let ar = analytic_rank(t, budget)?;
    let sr = slice_rank(t, budget, Some(&ar), None)?;
    let me = min_entropy(t, budget)?;
    let me_identity = me.max_count == ar.zero_count && me.total == ar.domain_size();
    Ok(ComplexityBound {
        n,
        bound: sr.exact().map(|s| n * s),
        bound_hi: n * sr.hi,
        sr,
        ar,
        me,
        me_identity,
    })
}

/// `f = sum_{i <= r} x_i y_i e_i` and `g` the same sum over
/// `r < i <= r + t`, both `n x n x n`.
pub fn extremal_pair(field: &Field, r: usize, t: usize, n: usize) -> Result<(Tensor3, Tensor3)> {
    if r == 0 || t == 0 || n < r + t {
        return Err(Error::BadParams(format!(
            "extremal pair needs r, t >= 1 and n >= r + t, got r={r} t={t} n={n}"
        )));
    }
    let diag = |lo: usize, hi: usize| {
        Tensor3::from_fn(field, [n, n, n], |i, j, k| {
            if i == j && j == k && (lo..hi).contains(&i) {
                FieldElem::ONE
            } else {
                FieldElem::ZERO
            }
        })
    };
    Ok((diag(0, r), diag(r, r + t)))
}

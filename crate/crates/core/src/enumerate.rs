//! Parallel exhaustive enumeration of `F^n` with exact integer reduction.

use rayon::prelude::*;

use crate::ffield::FieldElem;

const CHUNKS: u64 = 512;

/// Folds `step` over every point of `F^n` where `|F| = q`, splitting the
/// index range into fixed chunks so the result does not depend on scheduling
/// as long as `merge` is associative and commutative.
pub(crate) fn par_fold<A, I, S, M>(q: usize, n: usize, init: I, step: S, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    S: Fn(&mut A, &[FieldElem]) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    let total = (q as u64).checked_pow(n as u32).expect("enumeration size overflows u64");
    let chunks = total.clamp(1, CHUNKS);
    let per = total.div_ceil(chunks);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * per;
            let end = ((c + 1) * per).min(total);
            let mut acc = init();
            if start >= end {
                return acc;
            }
            let mut digits = vec![0usize; n];
            let mut s = start;
            for d in digits.iter_mut() {
                *d = (s % q as u64) as usize;
                s /= q as u64;
            }
            let mut point: Vec<FieldElem> = digits.iter().map(|&d| FieldElem::from_index(d)).collect();
            for _ in start..end {
                step(&mut acc, &point);
                for pos in 0..n {
                    digits[pos] += 1;
                    if digits[pos] < q {
                        point[pos] = FieldElem::from_index(digits[pos]);
                        break;
                    }
                    digits[pos] = 0;
                    point[pos] = FieldElem::ZERO;
                }
            }
            acc
        })
        .reduce(&init, &merge)
}

/// Counts points of `F^n` satisfying `pred`.
pub(crate) fn par_count<P>(q: usize, n: usize, pred: P) -> u64
where
    P: Fn(&[FieldElem]) -> bool + Sync + Send,
{
    par_fold(
        q,
        n,
        || 0u64,
        |acc, x| {
            if pred(x) {
                *acc += 1
            }
        },
        |a, b| a + b,
    )
}

/// Folds over one representative per line of `F^n \ {0}`: the points whose
/// first nonzero coordinate is 1. `step` receives the index of that
/// coordinate and the free coordinates after it.
pub(crate) fn par_fold_projective<A, I, S, M>(q: usize, n: usize, init: I, step: S, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    S: Fn(&mut A, usize, &[FieldElem]) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    let mut acc = init();
    for lead in 0..n {
        let part = par_fold(q, n - 1 - lead, &init, |a, tail| step(a, lead, tail), &merge);
        acc = merge(acc, part);
    }
    acc
}

/// Number of projective representatives, `(q^n - 1) / (q - 1)`.
pub(crate) fn projective_size(q: u32, n: usize) -> Option<u128> {
    Some((space_size(q, n)? - 1) / (q as u128 - 1))
}

/// Sequential visit of every point of `F^n`, first coordinate fastest.
pub(crate) fn for_each_point(q: usize, n: usize, mut f: impl FnMut(&[FieldElem])) {
    let mut digits = vec![0usize; n];
    let mut point = vec![FieldElem::ZERO; n];
    loop {
        f(&point);
        let mut pos = 0;
        loop {
            if pos == n {
                return;
            }
            digits[pos] += 1;
            if digits[pos] < q {
                point[pos] = FieldElem::from_index(digits[pos]);
                break;
            }
            digits[pos] = 0;
            point[pos] = FieldElem::ZERO;
            pos += 1;
        }
    }
}

/// `q^n` as u128, or `None` on overflow.
pub(crate) fn space_size(q: u32, n: usize) -> Option<u128> {
    (q as u128).checked_pow(u32::try_from(n).ok()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn visits_every_point_once() {
        let sum = par_fold(
            3,
            4,
            || (0u64, 0u64),
            |a, x| {
                a.0 += 1;
                a.1 += x.iter().map(|e| e.index() as u64).sum::<u64>();
            },
            |a, b| (a.0 + b.0, a.1 + b.1),
        );
        assert_eq!(sum, (81, 81 * 4));
        assert_eq!(par_count(5, 0, |_| true), 1);
        assert_eq!(par_count(2, 10, |x| x[9].is_zero()), 512);
    }

    #[test]
    fn projective_and_sequential() {
        let reps = par_fold_projective(3, 3, || 0u64, |a, _, _| *a += 1, |a, b| a + b);
        assert_eq!(reps as u128, projective_size(3, 3).unwrap());
        assert_eq!(reps, 13);
        let mut n = 0;
        for_each_point(5, 2, |_| n += 1);
        assert_eq!(n, 25);
        let mut m = 0;
        for_each_point(5, 0, |_| m += 1);
        assert_eq!(m, 1);
    }
}

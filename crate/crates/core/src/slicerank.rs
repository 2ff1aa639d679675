//! Slice rank: exact search over annihilating subspace triples, bounds,
//! vertex covers of antichain supports, and the rank inequality chain.
//!
//! `SR(T) <= c1 + c2 + c3` exactly when `T` vanishes on some `V1 x V2 x V3`
//! with `codim V_i = c_i`. For fixed `V1, V2` the largest admissible `V3` is
//! the annihilator of `W = span{T(b1, b2, .)}`, so the search runs over pairs
//! `(V1, V2)` and scores `codim V1 + codim V2 + dim W`.

use std::cmp::Ordering;
use std::collections::HashMap;

use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{analytic_rank, ARValue};
use crate::config::Budget;
use crate::error::{Error, Result};
use crate::ffield::{Field, FieldElem};
use crate::geometric::{geometric_rank_with, GRReport, GrOptions};
use crate::linalg::{self, Matrix, Vector};
use crate::tensor::{Axis, Tensor3};
use crate::variety::combinations;

pub const SR_GR_CONST: f64 = 3.0;
pub const GR_AR_CONST: f64 = 2.71;
pub const SR_AR_CONST: f64 = 8.13;

/// Limit on `|U1|! * |U2|!` summed over support components in
/// [`vertex_cover_sr`].
pub const ORDERING_SEARCH_LIMIT: u64 = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SrMethod {
    AnnihilatorExact,
    VertexCover,
    BoundsOnly,
}

/// Bases of an annihilating triple.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub v1: Vec<Vector>,
    pub v2: Vec<Vector>,
    pub v3: Vec<Vector>,
}

impl Witness {
    /// Checks that `T` vanishes on all basis triples and returns the
    /// codimension sum.
    pub fn check(&self, t: &Tensor3) -> Option<usize> {
        let [n1, n2, n3] = t.dims();
        let f = t.field();
        for a in &self.v1 {
            let m = t.contract_x(a).ok()?;
            for b in &self.v2 {
                for c in &self.v3 {
                    if !m.bilinear(f, b, c).is_zero() {
                        return None;
                    }
                }
            }
        }
        let dim = |vs: &[Vector], n| linalg::span_basis(f, vs, n).len();
        Some((n1 - dim(&self.v1, n1)) + (n2 - dim(&self.v2, n2)) + (n3 - dim(&self.v3, n3)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SRResult {
    pub lo: usize,
    pub hi: usize,
    pub method: SrMethod,
    pub witness: Option<Witness>,
    /// `3 * GR` when a stable geometric rank was supplied. Recorded next to
    /// the interval, never used to narrow it.
    pub gr_bound_hi: Option<usize>,
}

impl SRResult {
    pub fn exact(&self) -> Option<usize> {
        (self.lo == self.hi).then_some(self.lo)
    }

    fn exact_value(v: usize, method: SrMethod, witness: Option<Witness>) -> SRResult {
        SRResult {
            lo: v,
            hi: v,
            method,
            witness,
            gr_bound_hi: None,
        }
    }
}

/// Every subspace of `F^n` as a reduced row echelon basis, ordered by
/// decreasing dimension, then pivot columns, then free entries.
pub fn subspaces(field: &Field, n: usize) -> Vec<Vec<Vector>> {
    let q = field.order() as usize;
    let mut out = Vec::new();
    for d in (0..=n).rev() {
        for pivots in combinations(n, d) {
            let free: Vec<(usize, usize)> = pivots
                .iter()
                .enumerate()
                .flat_map(|(row, &p)| ((p + 1)..n).filter(|c| !pivots.contains(c)).map(move |c| (row, c)))
                .collect();
            let total = q.pow(free.len() as u32);
            for code in 0..total {
                let mut rows: Vec<Vector> = pivots
                    .iter()
                    .map(|&p| {
                        let mut v = vec![FieldElem::ZERO; n];
                        v[p] = FieldElem::ONE;
                        v
                    })
                    .collect();
                let mut c = code;
                for &(row, col) in &free {
                    rows[row][col] = field.elem(c % q);
                    c /= q;
                }
                out.push(rows);
            }
        }
    }
    out
}

pub fn in_exact_scope(t: &Tensor3, budget: &Budget) -> bool {
    t.dims().iter().all(|&d| d <= budget.sr_max_dim) && t.field().order() <= budget.sr_max_q
}

/// Smallest dimension of a slice span over the three axes.
pub fn dimension_bound(t: &Tensor3) -> usize {
    Axis::ALL.iter().map(|&a| t.slice_space(a).dim()).min().unwrap()
}

/// Exact slice rank with an annihilating triple as witness.
pub fn slice_rank_exact(t: &Tensor3, budget: &Budget) -> Result<SRResult> {
    if !in_exact_scope(t, budget) {
        return Err(Error::OutOfExactScope {
            dims: t.dims(),
            q: t.field().order(),
        });
    }
    let f = t.field();
    let [n1, n2, n3] = t.dims();
    let s1 = subspaces(f, n1);
    let s2 = subspaces(f, n2);
    let hi = dimension_bound(t);

    // rank of W for a pair, with the contracted slices of V1 precomputed
    let w_rows = |m1: &[Matrix], v2: &[Vector]| -> Vec<Vector> {
        let mut rows = Vec::with_capacity(m1.len() * v2.len());
        for m in m1 {
            let mt = m.transpose();
            for b in v2 {
                rows.push(mt.apply(f, b));
            }
        }
        rows
    };

    let best = s1
        .par_iter()
        .enumerate()
        .filter_map(|(i1, v1)| {
            let c1 = n1 - v1.len();
            if c1 > hi {
                return None;
            }
            let m1: Vec<Matrix> = v1.iter().map(|a| t.contract_x(a).unwrap()).collect();
            let mut local: Option<(usize, usize, usize)> = None;
            let mut bound = hi;
            for (i2, v2) in s2.iter().enumerate() {
                let c2 = n2 - v2.len();
                if c1 + c2 > bound {
                    continue;
                }
                let rows = w_rows(&m1, v2);
                let mut flat: Vec<FieldElem> = rows.concat();
                let r = linalg::rank_in_place(f, &mut flat, rows.len(), n3);
                let v = c1 + c2 + r;
                if local.is_none_or(|(b, _, _)| v < b) {
                    local = Some((v, i1, i2));
                    bound = bound.min(v);
                }
            }
            local
        })
        .min()
        .expect("the full triple always annihilates a tensor up to the dimension bound");

    let (value, i1, i2) = best;
    let v1 = s1[i1].clone();
    let v2 = s2[i2].clone();
    let m1: Vec<Matrix> = v1.iter().map(|a| t.contract_x(a).unwrap()).collect();
    let rows = w_rows(&m1, &v2);
    let w = if rows.is_empty() {
        Matrix::zeros(0, n3)
    } else {
        Matrix::from_rows(&rows)?
    };
    let v3 = linalg::null_space(f, &w);
    Ok(SRResult::exact_value(value, SrMethod::AnnihilatorExact, Some(Witness { v1, v2, v3 })))
}

/// Interval from the easy lower bounds and the dimension bound.
pub fn slice_rank_bounds(t: &Tensor3, ar: Option<&ARValue>, gr: Option<&GRReport>) -> SRResult {
    let mut lo = 0;
    if let Some(a) = ar {
        lo = lo.max(a.ceil() as usize);
    }
    let mut gr_bound_hi = None;
    if let Some(g) = gr.filter(|g| g.stable) {
        lo = lo.max(g.gr);
        gr_bound_hi = Some(3 * g.gr);
    }
    SRResult {
        lo,
        hi: dimension_bound(t),
        method: SrMethod::BoundsOnly,
        witness: None,
        gr_bound_hi,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexCover {
    Cover(usize),
    NotAntichain,
    SearchTooLarge,
}

fn components(support: &[[usize; 3]]) -> Vec<Vec<[usize; 3]>> {
    let n = support.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut owner: HashMap<(usize, usize), usize> = HashMap::new();
    for (i, pt) in support.iter().enumerate() {
        for a in 0..3 {
            if let Some(&j) = owner.get(&(a, pt[a])) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            } else {
                owner.insert((a, pt[a]), i);
            }
        }
    }
    let mut groups: Vec<(usize, Vec<[usize; 3]>)> = Vec::new();
    for (i, pt) in support.iter().enumerate() {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|(g, _)| *g == r) {
            Some((_, v)) => v.push(*pt),
            None => groups.push((r, vec![*pt])),
        }
    }
    groups.into_iter().map(|(_, v)| v).collect()
}

fn distinct(points: &[[usize; 3]], axis: usize) -> Vec<usize> {
    let mut v: Vec<usize> = points.iter().map(|p| p[axis]).collect();
    v.sort_unstable();
    v.dedup();
    v
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).try_fold(1u64, |a, b| a.checked_mul(b)).unwrap_or(u64::MAX)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                go(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Whether some total orders on the three index sets make `points` an
/// antichain in the product order. Orders on the first two axes are
/// enumerated; the third is then constrained and checked for a cycle.
fn antichain_orderable(points: &[[usize; 3]]) -> bool {
    let u: Vec<Vec<usize>> = (0..3).map(|a| distinct(points, a)).collect();
    let pos = |a: usize, v: usize| u[a].binary_search(&v).unwrap();
    let pts: Vec<[usize; 3]> = points.iter().map(|p| [pos(0, p[0]), pos(1, p[1]), pos(2, p[2])]).collect();
    let perms1 = permutations(u[0].len());
    let perms2 = permutations(u[1].len());
    let n3 = u[2].len();
    for s1 in &perms1 {
        'next: for s2 in &perms2 {
            // edges c -> d meaning c must precede d on the third axis
            let mut succ = vec![Vec::new(); n3];
            let mut indeg = vec![0usize; n3];
            for p in &pts {
                for q in &pts {
                    if p == q {
                        continue;
                    }
                    if s1[p[0]] <= s1[q[0]] && s2[p[1]] <= s2[q[1]] {
                        if p[2] == q[2] {
                            continue 'next;
                        }
                        succ[q[2]].push(p[2]);
                        indeg[p[2]] += 1;
                    }
                }
            }
            let mut stack: Vec<usize> = (0..n3).filter(|&v| indeg[v] == 0).collect();
            let mut seen = 0;
            while let Some(v) = stack.pop() {
                seen += 1;
                for &w in &succ[v] {
                    indeg[w] -= 1;
                    if indeg[w] == 0 {
                        stack.push(w);
                    }
                }
            }
            if seen == n3 {
                return true;
            }
        }
    }
    false
}

/// Minimum number of index values `(axis, value)` meeting every point.
fn min_cover(points: &[[usize; 3]]) -> usize {
    fn go(points: &[[usize; 3]], chosen: &mut Vec<(usize, usize)>, best: &mut usize) {
        let uncovered: Vec<&[usize; 3]> = points
            .iter()
            .filter(|p| !chosen.iter().any(|&(a, v)| p[a] == v))
            .collect();
        if uncovered.is_empty() {
            *best = (*best).min(chosen.len());
            return;
        }
        // disjoint uncovered points each need their own vertex
        let mut packed: Vec<&[usize; 3]> = Vec::new();
        for p in &uncovered {
            if packed.iter().all(|q| (0..3).all(|a| p[a] != q[a])) {
                packed.push(p);
            }
        }
        if chosen.len() + packed.len() >= *best {
            return;
        }
        let p = uncovered[0];
        for a in 0..3 {
            chosen.push((a, p[a]));
            go(points, chosen, best);
            chosen.pop();
        }
    }
    let mut best = points.len();
    go(points, &mut Vec::new(), &mut best);
    best
}

/// Slice rank of a tensor whose support can be made an antichain by
/// reordering each axis: it equals the minimum vertex cover of the support
/// viewed as a 3-partite 3-uniform hypergraph.
pub fn vertex_cover_sr(t: &Tensor3) -> VertexCover {
    vertex_cover_sr_with(t, ORDERING_SEARCH_LIMIT)
}

pub fn vertex_cover_sr_with(t: &Tensor3, limit: u64) -> VertexCover {
    let comps = components(&t.support());
    let work: u64 = comps
        .iter()
        .map(|c| factorial(distinct(c, 0).len()).saturating_mul(factorial(distinct(c, 1).len())))
        .fold(0u64, |a, b| a.saturating_add(b));
    if work > limit {
        return VertexCover::SearchTooLarge;
    }
    if !comps.iter().all(|c| antichain_orderable(c)) {
        return VertexCover::NotAntichain;
    }
    VertexCover::Cover(comps.iter().map(|c| min_cover(c)).sum())
}

/// Exact when the tensor is in the exact scope or has an orderable antichain
/// support, otherwise the interval of [`slice_rank_bounds`].
pub fn slice_rank(t: &Tensor3, budget: &Budget, ar: Option<&ARValue>, gr: Option<&GRReport>) -> Result<SRResult> {
    let gr_bound_hi = gr.filter(|g| g.stable).map(|g| 3 * g.gr);
    let mut res = if in_exact_scope(t, budget) {
        slice_rank_exact(t, budget)?
    } else if let VertexCover::Cover(n) = vertex_cover_sr(t) {
        SRResult::exact_value(n, SrMethod::VertexCover, None)
    } else {
        slice_rank_bounds(t, ar, gr)
    };
    res.gr_bound_hi = gr_bound_hi;
    Ok(res)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Pass,
    Fail,
    /// Not asserted (AR-side checks over F_2).
    Skipped,
    /// Interval or unstable inputs leave the outcome open.
    Undetermined,
}

impl Check {
    pub fn is_fail(self) -> bool {
        self == Check::Fail
    }

    /// `lhs <= rhs` where `lhs` lies in `[lo, hi]`.
    fn interval_le(lo: f64, hi: f64, rhs: f64) -> Check {
        const EPS: f64 = 1e-9;
        if hi <= rhs + EPS {
            Check::Pass
        } else if lo > rhs + EPS {
            Check::Fail
        } else {
            Check::Undetermined
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub sr: SRResult,
    pub gr: GRReport,
    pub ar: ARValue,
    pub holds_sr_3gr: Check,
    pub holds_gr_271ar: Check,
    pub holds_sr_813ar: Check,
    pub holds_ar_le_sr: Check,
    pub holds_gr_le_sr: Check,
    /// `sr / gr` in lowest terms when both are known exactly and `gr > 0`.
    pub ratio_sr_gr: Option<(u64, u64)>,
}

impl ChainReport {
    pub fn any_failed(&self) -> bool {
        [
            self.holds_sr_3gr,
            self.holds_gr_271ar,
            self.holds_sr_813ar,
            self.holds_ar_le_sr,
            self.holds_gr_le_sr,
        ]
        .iter()
        .any(|c| c.is_fail())
    }

    pub fn all_passed(&self) -> bool {
        [
            self.holds_sr_3gr,
            self.holds_gr_271ar,
            self.holds_sr_813ar,
            self.holds_ar_le_sr,
            self.holds_gr_le_sr,
        ]
        .iter()
        .all(|&c| c == Check::Pass || c == Check::Skipped)
    }
}

/// Evaluates the chain from already computed ranks.
pub fn evaluate_chain(sr: SRResult, gr: GRReport, ar: ARValue) -> ChainReport {
    let (lo, hi) = (sr.lo as f64, sr.hi as f64);
    let g = gr.gr as f64;
    let a = ar.value;
    let ar_side = ar.q != 2;
    let gr_ok = gr.stable;
    let gated = |ok: bool, c: Check| if ok { c } else { Check::Undetermined };

    let holds_sr_3gr = gated(gr_ok, Check::interval_le(lo, hi, SR_GR_CONST * g));
    let holds_gr_271ar = if ar_side {
        gated(gr_ok, Check::interval_le(g, g, GR_AR_CONST * a))
    } else {
        Check::Skipped
    };
    let holds_sr_813ar = if ar_side {
        Check::interval_le(lo, hi, SR_AR_CONST * a)
    } else {
        Check::Skipped
    };
    // AR <= SR, decided with the integer ceiling of AR
    let ceil = ar.ceil() as usize;
    let holds_ar_le_sr = if ceil <= sr.lo {
        Check::Pass
    } else if ceil > sr.hi {
        Check::Fail
    } else {
        Check::Undetermined
    };
    let holds_gr_le_sr = gated(
        gr_ok,
        if gr.gr <= sr.lo {
            Check::Pass
        } else if gr.gr > sr.hi {
            Check::Fail
        } else {
            Check::Undetermined
        },
    );
    let ratio_sr_gr = match (sr.exact(), gr.gr) {
        (Some(s), g) if g > 0 && gr.stable => {
            let d = (s as u64).gcd(&(g as u64));
            Some((s as u64 / d, g as u64 / d))
        }
        _ => None,
    };
    ChainReport {
        sr,
        gr,
        ar,
        holds_sr_3gr,
        holds_gr_271ar,
        holds_sr_813ar,
        holds_ar_le_sr,
        holds_gr_le_sr,
        ratio_sr_gr,
    }
}

/// Computes AR, GR and SR and checks `SR <= 3 GR <= 8.13 AR` together with
/// `GR <= 2.71 AR`, `AR <= SR` and `GR <= SR`.
pub fn verify_rank_chain(t: &Tensor3, kmax: u32, budget: &Budget, seed: u64) -> Result<ChainReport> {
    let ar = analytic_rank(t, budget)?;
    let gr = geometric_rank_with(
        t,
        &GrOptions {
            kmax,
            seed,
            budget: budget.clone(),
            ..GrOptions::default()
        },
    )?;
    let sr = slice_rank(t, budget, Some(&ar), Some(&gr))?;
    Ok(evaluate_chain(sr, gr, ar))
}

/// Compares ratios `a/b` and `c/d` exactly.
pub fn cmp_ratio(a: (u64, u64), b: (u64, u64)) -> Ordering {
    (a.0 as u128 * b.1 as u128).cmp(&(b.0 as u128 * a.1 as u128))
}

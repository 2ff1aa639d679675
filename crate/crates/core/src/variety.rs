//! Point counts over an extension tower, dimension estimates from count
//! slopes, the variety form of Schwartz-Zippel, and Jacobian tangent spaces.

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Budget;
use crate::enumerate::{par_count, space_size};
use crate::error::{Error, Result};
use crate::ffield::{Field, FieldElem};
use crate::linalg::{self, Matrix, Vector};
use crate::poly::{Poly, PolySystem};

/// Largest distance from an integer a slope may have in a stable estimate.
pub const SLOPE_MARGIN: f64 = 0.35;

/// Largest codimension for which sampled counts may be called stable.
pub const SAMPLED_STABLE_CODIM: i64 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointCount {
    Exact(u128),
    Sampled { hits: u64, samples: u64, space: u128 },
}

impl PointCount {
    pub fn estimate(&self) -> f64 {
        match *self {
            PointCount::Exact(n) => n as f64,
            PointCount::Sampled { hits, samples, space } => hits as f64 / samples as f64 * space as f64,
        }
    }

    pub fn exact(&self) -> Option<u128> {
        match *self {
            PointCount::Exact(n) => Some(n),
            PointCount::Sampled { .. } => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.exact().is_some()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerCount {
    pub k: u32,
    pub count: PointCount,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimStatus {
    Stable,
    Unstable,
    Empty,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMethod {
    ExactEnumeration,
    MonteCarlo,
    /// Dimension read off a linear kernel, no estimation involved.
    LinearAlgebra,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimEstimate {
    pub nvars: usize,
    /// -1 for the empty variety.
    pub dim: i64,
    pub codim: Option<i64>,
    pub counts: Vec<TowerCount>,
    pub slopes: Vec<f64>,
    pub status: DimStatus,
    pub method: CountMethod,
}

impl DimEstimate {
    /// Builds an estimate from counts over `F_{q^k}` for increasing `k`.
    ///
    /// Slopes are taken between consecutive levels. When that does not
    /// stabilise and the tower has at least six consecutive levels, odd and
    /// even `k` are also examined separately: top components defined only
    /// over `F_{q^2}` make consecutive slopes oscillate.
    pub fn from_counts(q: u32, nvars: usize, counts: Vec<TowerCount>) -> DimEstimate {
        let method = if counts.iter().all(|c| c.count.is_exact()) {
            CountMethod::ExactEnumeration
        } else {
            CountMethod::MonteCarlo
        };
        let mut est = DimEstimate {
            nvars,
            dim: -1,
            codim: None,
            counts: Vec::new(),
            slopes: Vec::new(),
            status: DimStatus::Empty,
            method,
        };
        if counts.iter().all(|c| c.count.estimate() == 0.0) {
            est.counts = counts;
            return est;
        }
        let (dim, slopes, stable) = slope_rule(q, nvars, &counts);
        est.dim = dim;
        est.slopes = slopes;
        est.status = if stable { DimStatus::Stable } else { DimStatus::Unstable };
        if !stable && counts.len() >= 6 && counts.windows(2).all(|w| w[1].k == w[0].k + 1) {
            let classes: Vec<Vec<TowerCount>> = (0..2)
                .map(|par| counts.iter().filter(|c| c.k % 2 == par).copied().collect())
                .collect();
            let mut dims = Vec::new();
            for class in &classes {
                if class.iter().all(|c| c.count.estimate() == 0.0) {
                    dims.push(Some(-1));
                    continue;
                }
                let (d, _, st) = slope_rule(q, nvars, class);
                dims.push(st.then_some(d));
            }
            if dims.iter().all(Option::is_some) {
                est.dim = dims.iter().map(|d| d.unwrap()).max().unwrap();
                est.status = DimStatus::Stable;
            }
        }
        est.codim = Some(nvars as i64 - est.dim);
        est.counts = counts;
        est
    }

    /// An exactly known dimension, e.g. of a linear subspace.
    pub fn exact_linear(nvars: usize, dim: usize, counts: Vec<TowerCount>) -> DimEstimate {
        DimEstimate {
            nvars,
            dim: dim as i64,
            codim: Some((nvars - dim) as i64),
            counts,
            slopes: Vec::new(),
            status: DimStatus::Stable,
            method: CountMethod::LinearAlgebra,
        }
    }

    pub fn is_stable(&self) -> bool {
        self.status != DimStatus::Unstable
    }

    pub fn is_empty(&self) -> bool {
        self.status == DimStatus::Empty
    }

    pub fn count_at(&self, k: u32) -> Option<PointCount> {
        self.counts.iter().find(|c| c.k == k).map(|c| c.count)
    }
}

/// Dimension, slopes and stability from counts at increasing `k`, which
/// must not all be zero.
fn slope_rule(q: u32, nvars: usize, counts: &[TowerCount]) -> (i64, Vec<f64>, bool) {
    let lq = (q as f64).ln();
    let mut slopes = Vec::new();
    let mut sampled = Vec::new();
    for w in counts.windows(2) {
        let (a, b) = (w[0].count.estimate(), w[1].count.estimate());
        if a > 0.0 && b > 0.0 {
            slopes.push((b / a).ln() / lq / (w[1].k - w[0].k) as f64);
            sampled.push(!(w[0].count.is_exact() && w[1].count.is_exact()));
        } else {
            slopes.clear();
            sampled.clear();
        }
    }
    let raw = match slopes.last() {
        Some(&s) => s,
        None => {
            let last = counts.iter().rev().find(|c| c.count.estimate() > 0.0).unwrap();
            last.count.estimate().ln() / lq / last.k as f64
        }
    };
    let dim = (raw.round() as i64).clamp(0, nvars as i64);
    let n = slopes.len();
    let mut stable = n >= 2 && {
        let (s1, s2) = (slopes[n - 2], slopes[n - 1]);
        s1.round() == s2.round() && (s1 - s1.round()).abs() <= SLOPE_MARGIN && (s2 - s2.round()).abs() <= SLOPE_MARGIN
    };
    if stable && sampled[n - 2..].iter().any(|&s| s) && nvars as i64 - dim > SAMPLED_STABLE_CODIM {
        stable = false;
    }
    (dim, slopes, stable)
}

/// `F_{q^k}` over the field of `base`.
pub fn tower_field(base: &Field, k: u32) -> Result<Field> {
    if k == 0 {
        return Err(Error::BadParams("extension degree must be at least 1".into()));
    }
    base.extension(k)
}

/// Number of common zeros in `F_{q^k}^n`, exact when `q^{kn}` fits the
/// budget and sampled otherwise.
pub fn count_points(s: &PolySystem, k: u32, budget: &Budget, seed: u64) -> Result<PointCount> {
    let field = tower_field(&s.field, k)?;
    let q = field.order();
    let space = space_size(q, s.nvars).unwrap_or(u128::MAX);
    if s.polys.iter().all(Poly::is_zero) {
        if space == u128::MAX {
            return Err(Error::BudgetExceeded {
                needed: space,
                budget: budget.exact,
            });
        }
        return Ok(PointCount::Exact(space));
    }
    let sys = s.compile(&field)?;
    if space <= budget.exact {
        return Ok(PointCount::Exact(par_count(q as usize, s.nvars, |x| sys.vanishes_at(x)) as u128));
    }
    let samples = budget.samples.max(1);
    let hits = sample_count(q, s.nvars, samples, seed, |x| sys.vanishes_at(x));
    Ok(PointCount::Sampled { hits, samples, space })
}

/// Exact count or `BudgetExceeded`.
pub fn count_points_exact(s: &PolySystem, k: u32, budget: &Budget) -> Result<u128> {
    let field = tower_field(&s.field, k)?;
    let needed = space_size(field.order(), s.nvars).unwrap_or(u128::MAX);
    if needed > budget.exact && !s.polys.iter().all(Poly::is_zero) {
        return Err(Error::BudgetExceeded {
            needed,
            budget: budget.exact,
        });
    }
    Ok(count_points(s, k, budget, 0)?.exact().expect("within budget"))
}

const SAMPLE_CHUNKS: u64 = 64;

/// Seeded uniform sampling split into fixed chunks, each with its own stream.
pub(crate) fn sample_count<P>(q: u32, n: usize, samples: u64, seed: u64, pred: P) -> u64
where
    P: Fn(&[FieldElem]) -> bool + Sync + Send,
{
    let per = samples.div_ceil(SAMPLE_CHUNKS);
    (0..SAMPLE_CHUNKS)
        .into_par_iter()
        .map(|c| {
            let lo = c * per;
            let hi = ((c + 1) * per).min(samples);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let mut x = vec![FieldElem::ZERO; n];
            let mut hits = 0;
            for _ in lo..hi {
                for xi in x.iter_mut() {
                    *xi = FieldElem::from_index(rng.gen_range(0..q as usize));
                }
                if pred(&x) {
                    hits += 1;
                }
            }
            hits
        })
        .sum()
}

/// Counts over `F_{q^k}` for `k = 1..=kmax` and the slope-based estimate.
pub fn estimate_dim(s: &PolySystem, kmax: u32, budget: &Budget, seed: u64) -> Result<DimEstimate> {
    if kmax < 2 {
        return Err(Error::BadParams("kmax must be at least 2".into()));
    }
    let mut counts = Vec::new();
    for k in 1..=kmax {
        let count = count_points(s, k, budget, seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))?;
        counts.push(TowerCount { k, count });
    }
    Ok(DimEstimate::from_counts(s.field.order(), s.nvars, counts))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SzReport {
    pub holds: bool,
    /// `d >= q`, where the bound says nothing.
    pub vacuous: bool,
    pub degree: u32,
    pub q: u32,
    pub codim: Option<i64>,
    /// Exact number of points over the base field.
    pub count: u128,
    pub space: u128,
    pub lhs: f64,
    pub rhs: f64,
}

/// Checks `|V(F)| / |F|^n <= (d / |F|)^codim` with exact integers.
pub fn sz_check(s: &PolySystem, est: &DimEstimate, budget: &Budget) -> Result<SzReport> {
    if est.status == DimStatus::Unstable {
        return Err(Error::UnstableEstimate);
    }
    let count = match est.count_at(1).and_then(|c| c.exact()) {
        Some(n) => n,
        None => count_points_exact(s, 1, budget)?,
    };
    let q = s.field.order();
    let space = space_size(q, s.nvars).unwrap_or(u128::MAX);
    let d = s.maxdeg();
    let lhs = count as f64 / space as f64;
    let Some(c) = est.codim else {
        return Ok(SzReport {
            holds: count == 0,
            vacuous: false,
            degree: d,
            q,
            codim: None,
            count,
            space,
            lhs,
            rhs: 0.0,
        });
    };
    let rhs = (d as f64 / q as f64).powi(c as i32);
    let vacuous = d >= q;
    // count * q^c <= d^c * q^n
    let c = c as u32;
    let left = BigUint::from(count) * BigUint::from(q).pow(c);
    let right = BigUint::from(d).pow(c) * BigUint::from(q).pow(s.nvars as u32);
    Ok(SzReport {
        holds: left <= right,
        vacuous,
        degree: d,
        q,
        codim: Some(c as i64),
        count,
        space,
        lhs,
        rhs,
    })
}

/// Kernel of the Jacobian of the given generators at `point`.
pub fn jacobian_tangent(s: &PolySystem, field: &Field, point: &[FieldElem]) -> Result<Vec<Vector>> {
    if !s.field.can_embed_into(field) {
        return Err(Error::FieldMismatch);
    }
    if point.len() != s.nvars {
        return Err(Error::DimensionMismatch(format!(
            "point has {} coordinates, system has {} variables",
            point.len(),
            s.nvars
        )));
    }
    if point.iter().any(|&a| !field.contains(a)) {
        return Err(Error::FieldMismatch);
    }
    if !s.vanishes_at(field, point) {
        return Err(Error::NotOnVariety);
    }
    let rows: Vec<Vector> = s
        .polys
        .iter()
        .map(|p| (0..s.nvars).map(|v| p.derivative(&s.field, v).eval(field, point)).collect())
        .collect();
    let j = if rows.is_empty() {
        Matrix::zeros(0, s.nvars)
    } else {
        Matrix::from_rows(&rows)?
    };
    Ok(linalg::null_space(field, &j))
}

pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

fn det_poly(field: &Field, m: &[Vec<Poly>]) -> Poly {
    let n = m.len();
    let nvars = m[0][0].nvars();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = Poly::zero(nvars);
    for c in 0..n {
        if m[0][c].is_zero() {
            continue;
        }
        let minor: Vec<Vec<Poly>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, p)| p.clone()).collect())
            .collect();
        let term = m[0][c].mul(field, &det_poly(field, &minor));
        acc = if c % 2 == 0 { acc.add(field, &term) } else { acc.sub(field, &term) };
    }
    acc
}

/// All `(r+1) x (r+1)` minors of the generic `m x n` matrix whose entry
/// `(a, b)` is the variable `x_{a*n + b + 1}`.
pub fn minors_system(field: &Field, m: usize, n: usize, r: usize) -> PolySystem {
    let nvars = m * n;
    let x: Vec<Vec<Poly>> = (0..m)
        .map(|a| (0..n).map(|b| Poly::var(nvars, a * n + b)).collect())
        .collect();
    let mut polys = Vec::new();
    if r < m.min(n) {
        for rows in combinations(m, r + 1) {
            for cols in combinations(n, r + 1) {
                let sub: Vec<Vec<Poly>> = rows
                    .iter()
                    .map(|&a| cols.iter().map(|&b| x[a][b].clone()).collect())
                    .collect();
                polys.push(det_poly(field, &sub));
            }
        }
    }
    PolySystem::new(field, nvars, polys).unwrap()
}

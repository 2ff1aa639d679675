//! Geometric rank from rank strata `X_r = {x : rank(sum x_i A_i) <= r}`,
//! `GR = min_r (r + codim X_r)`, and from the codimension of the kernel
//! variety `{(x, y) : f(x, y) = 0}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Budget;
use crate::enumerate::{par_fold_projective, projective_size, space_size};
use crate::error::{Error, Result};
use crate::ffield::{Field, FieldElem};
use crate::linalg;
use crate::tensor::{Axis, Tensor3};
use crate::variety::{tower_field, DimEstimate, PointCount, TowerCount};

/// Strata sizes over one field of the tower.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrataCounts {
    pub k: u32,
    /// Order of `F_{q^k}`.
    pub order: u32,
    /// `|X_r|` for `r = 0..=min(n2, n3)`.
    pub cumulative: Vec<PointCount>,
    /// Number of `x` with rank exactly `r`, when enumerated exactly.
    pub exact_ranks: Option<Vec<u128>>,
}

impl StrataCounts {
    /// Exact size of the kernel variety `{(x, y) : y^T M_x = 0}` from the
    /// rank distribution.
    pub fn kernel_count(&self, n2: usize) -> Option<u128> {
        let ranks = self.exact_ranks.as_ref()?;
        let q = self.order as u128;
        Some(ranks.iter().enumerate().map(|(r, &c)| c * q.pow((n2 - r) as u32)).sum())
    }
}

fn slices_flat(t: &Tensor3) -> Vec<Vec<FieldElem>> {
    let [n1, n2, n3] = t.dims();
    (0..n1)
        .map(|i| t.entries()[i * n2 * n3..(i + 1) * n2 * n3].to_vec())
        .collect()
}

/// `|X_r(F_{q^k})|` for every `r`, along the x axis. Exact when the number of
/// projective representatives fits the budget, sampled otherwise.
pub fn rank_strata_counts(t: &Tensor3, k: u32, budget: &Budget, seed: u64) -> Result<StrataCounts> {
    let field = tower_field(t.field(), k)?;
    let order = field.order();
    let [n1, n2, n3] = t.dims();
    let m = n2.min(n3);
    let slices = slices_flat(t);
    let reps = if n1 == 0 { Some(0) } else { projective_size(order, n1) };

    if reps.is_some_and(|r| r <= budget.exact) {
        let hist = par_fold_projective(
            order as usize,
            n1,
            || (vec![0u128; m + 1], vec![FieldElem::ZERO; n2 * n3]),
            |(hist, scratch), lead, tail| {
                scratch.copy_from_slice(&slices[lead]);
                for (&c, s) in tail.iter().zip(&slices[lead + 1..]) {
                    if c.is_zero() {
                        continue;
                    }
                    for (o, &a) in scratch.iter_mut().zip(s) {
                        *o = field.mul_add(*o, c, a);
                    }
                }
                hist[linalg::rank_in_place(&field, scratch, n2, n3)] += 1;
            },
            |(mut a, s), (b, _)| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                (a, s)
            },
        )
        .0;
        let mut exact: Vec<u128> = hist.iter().map(|&h| h * (order as u128 - 1)).collect();
        exact[0] += 1;
        let mut acc = 0;
        let cumulative = exact
            .iter()
            .map(|&c| {
                acc += c;
                PointCount::Exact(acc)
            })
            .collect();
        return Ok(StrataCounts {
            k,
            order,
            cumulative,
            exact_ranks: Some(exact),
        });
    }

    let space = space_size(order, n1).unwrap_or(u128::MAX);
    let samples = budget.samples.max(1);
    let hist = sample_ranks(&field, &slices, [n1, n2, n3], samples, seed);
    let mut acc = 0;
    let cumulative = hist
        .iter()
        .map(|&h| {
            acc += h;
            PointCount::Sampled {
                hits: acc,
                samples,
                space,
            }
        })
        .collect();
    Ok(StrataCounts {
        k,
        order,
        cumulative,
        exact_ranks: None,
    })
}

const SAMPLE_CHUNKS: u64 = 64;

fn sample_ranks(field: &Field, slices: &[Vec<FieldElem>], dims: [usize; 3], samples: u64, seed: u64) -> Vec<u64> {
    let [n1, n2, n3] = dims;
    let q = field.order() as usize;
    let per = samples.div_ceil(SAMPLE_CHUNKS);
    (0..SAMPLE_CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let mut hist = vec![0u64; n2.min(n3) + 1];
            let mut m = vec![FieldElem::ZERO; n2 * n3];
            for _ in c * per..((c + 1) * per).min(samples) {
                m.iter_mut().for_each(|e| *e = FieldElem::ZERO);
                for s in slices.iter().take(n1) {
                    let xi = FieldElem::from_index(rng.gen_range(0..q));
                    if xi.is_zero() {
                        continue;
                    }
                    for (o, &a) in m.iter_mut().zip(s) {
                        *o = field.mul_add(*o, xi, a);
                    }
                }
                hist[linalg::rank_in_place(field, &mut m, n2, n3)] += 1;
            }
            hist
        })
        .reduce(
            || vec![0u64; n2.min(n3) + 1],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

/// Sampled fraction of pairs `(x, y)` with `y^T M_x = 0`.
fn sample_kernel(t: &Tensor3, field: &Field, samples: u64, seed: u64) -> u64 {
    let [n1, n2, n3] = t.dims();
    let slices = slices_flat(t);
    let q = field.order() as usize;
    let per = samples.div_ceil(SAMPLE_CHUNKS);
    (0..SAMPLE_CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f6b);
            rng.set_stream(c);
            let mut m = vec![FieldElem::ZERO; n2 * n3];
            let mut hits = 0;
            for _ in c * per..((c + 1) * per).min(samples) {
                m.iter_mut().for_each(|e| *e = FieldElem::ZERO);
                for s in slices.iter().take(n1) {
                    let xi = FieldElem::from_index(rng.gen_range(0..q));
                    for (o, &a) in m.iter_mut().zip(s) {
                        *o = field.mul_add(*o, xi, a);
                    }
                }
                let y: Vec<FieldElem> = (0..n2).map(|_| FieldElem::from_index(rng.gen_range(0..q))).collect();
                let zero = (0..n3).all(|kk| {
                    (0..n2)
                        .fold(FieldElem::ZERO, |acc, j| field.mul_add(acc, y[j], m[j * n3 + kk]))
                        .is_zero()
                });
                if zero {
                    hits += 1;
                }
            }
            hits
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub r: usize,
    pub estimate: DimEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GRReport {
    pub axis: Axis,
    pub gr: usize,
    pub argmin_r: usize,
    /// Every stratum that could lower the minimum has a stable estimate.
    pub stable: bool,
    pub strata: Vec<Stratum>,
    pub kernel_codim: Option<DimEstimate>,
    /// Stratification and kernel codimension agree; `None` unless both are
    /// stable.
    pub consistent: Option<bool>,
    pub kmax: u32,
    /// Deepest tower level used, at least `kmax`.
    pub k_reached: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrOptions {
    pub kmax: u32,
    pub axis: Axis,
    pub cross_check: bool,
    /// Go past `kmax` while a relevant stratum is unstable.
    pub deepen: bool,
    pub seed: u64,
    pub budget: Budget,
}

impl Default for GrOptions {
    fn default() -> Self {
        GrOptions {
            kmax: 3,
            axis: Axis::X,
            cross_check: true,
            deepen: true,
            seed: 0,
            budget: Budget::default(),
        }
    }
}

fn level_seed(seed: u64, k: u32) -> u64 {
    seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn level_available(t: &Tensor3, k: u32) -> bool {
    tower_field(t.field(), k).is_ok()
}

fn strata_estimates(t: &Tensor3, levels: &[StrataCounts]) -> Vec<Stratum> {
    let [n1, n2, n3] = t.dims();
    let m = n2.min(n3);
    let q = t.field().order();
    let ker_dim = n1 - t.slice_space(Axis::X).dim();
    (0..=m)
        .map(|r| {
            let counts: Vec<TowerCount> = levels
                .iter()
                .map(|l| TowerCount {
                    k: l.k,
                    count: l.cumulative[r],
                })
                .collect();
            let estimate = if r == 0 {
                let counts = levels
                    .iter()
                    .map(|l| TowerCount {
                        k: l.k,
                        count: PointCount::Exact((l.order as u128).pow(ker_dim as u32)),
                    })
                    .collect();
                DimEstimate::exact_linear(n1, ker_dim, counts)
            } else if r == m {
                DimEstimate::exact_linear(n1, n1, counts)
            } else {
                DimEstimate::from_counts(q, n1, counts)
            };
            Stratum { r, estimate }
        })
        .collect()
}

fn minimise(strata: &[Stratum]) -> (usize, usize, bool) {
    let mut best = (usize::MAX, 0);
    for s in strata {
        if let Some(c) = s.estimate.codim {
            let v = s.r + c as usize;
            if v < best.0 {
                best = (v, s.r);
            }
        }
    }
    let (gr, argmin) = best;
    let stable = strata[argmin].estimate.is_stable() && strata.iter().filter(|s| s.r < gr).all(|s| s.estimate.is_stable());
    (gr, argmin, stable)
}

/// Geometric rank along `opts.axis`.
pub fn geometric_rank_with(t: &Tensor3, opts: &GrOptions) -> Result<GRReport> {
    if opts.kmax < 2 {
        return Err(Error::BadParams("kmax must be at least 2".into()));
    }
    let t = t.rotate_to_front(opts.axis);
    let b = &opts.budget;
    let mut levels = Vec::new();
    for k in 1..=opts.kmax {
        levels.push(rank_strata_counts(&t, k, b, level_seed(opts.seed, k))?);
    }
    let mut strata = strata_estimates(&t, &levels);
    let (mut gr, mut argmin, mut stable) = minimise(&strata);
    let mut k = opts.kmax;
    while opts.deepen && !stable && k < b.k_limit && level_available(&t, k + 1) {
        k += 1;
        levels.push(rank_strata_counts(&t, k, b, level_seed(opts.seed, k))?);
        strata = strata_estimates(&t, &levels);
        (gr, argmin, stable) = minimise(&strata);
    }

    let (kernel_codim, consistent) = if opts.cross_check {
        let ker = kernel_from_levels(&t, &levels, opts.seed)?;
        let consistent = (stable && ker.is_stable()).then(|| ker.codim == Some(gr as i64));
        (Some(ker), consistent)
    } else {
        (None, None)
    };

    Ok(GRReport {
        axis: opts.axis,
        gr,
        argmin_r: argmin,
        stable,
        strata,
        kernel_codim,
        consistent,
        kmax: opts.kmax,
        k_reached: k,
    })
}

pub fn geometric_rank(t: &Tensor3, kmax: u32, budget: &Budget, seed: u64) -> Result<GRReport> {
    geometric_rank_with(
        t,
        &GrOptions {
            kmax,
            seed,
            budget: budget.clone(),
            ..GrOptions::default()
        },
    )
}

fn kernel_from_levels(t: &Tensor3, levels: &[StrataCounts], seed: u64) -> Result<DimEstimate> {
    let [n1, n2, _] = t.dims();
    let mut counts = Vec::new();
    for l in levels {
        let count = match l.kernel_count(n2) {
            Some(n) => PointCount::Exact(n),
            None => {
                let field = tower_field(t.field(), l.k)?;
                let samples = 1_000_000;
                PointCount::Sampled {
                    hits: sample_kernel(t, &field, samples, level_seed(seed, l.k)),
                    samples,
                    space: space_size(l.order, n1 + n2).unwrap_or(u128::MAX),
                }
            }
        };
        counts.push(TowerCount { k: l.k, count });
    }
    Ok(DimEstimate::from_counts(t.field().order(), n1 + n2, counts))
}

/// Dimension estimate of `{(x, y) : f(x, y) = 0}` in `n1 + n2` variables;
/// its codimension is the geometric rank.
pub fn kernel_codim(t: &Tensor3, kmax: u32, budget: &Budget, seed: u64) -> Result<DimEstimate> {
    if kmax < 2 {
        return Err(Error::BadParams("kmax must be at least 2".into()));
    }
    let mut levels = Vec::new();
    for k in 1..=kmax {
        levels.push(rank_strata_counts(t, k, budget, level_seed(seed, k))?);
    }
    let mut est = kernel_from_levels(t, &levels, seed)?;
    let mut k = kmax;
    while !est.is_stable() && k < budget.k_limit && level_available(t, k + 1) {
        k += 1;
        levels.push(rank_strata_counts(t, k, budget, level_seed(seed, k))?);
        est = kernel_from_levels(t, &levels, seed)?;
    }
    Ok(est)
}

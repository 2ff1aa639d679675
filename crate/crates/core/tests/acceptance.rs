//! Acceptance suite: one line per criterion, nonzero exit if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trirank::analytic::{analytic_rank, min_entropy};
use trirank::biascx::{closeness_report, extremal_pair, Ratio};
use trirank::decomp::{slice_decompose, tangent_space_at, verify_decomposition, DecomposeOptions};
use trirank::geometric::{geometric_rank, rank_strata_counts};
use trirank::slicerank::{dimension_bound, slice_rank_exact, verify_rank_chain, Check};
use trirank::variety::{estimate_dim, jacobian_tangent, minors_system, sz_check};
use trirank::{Axis, Budget, DimStatus, Field, Matrix, Poly, PolySystem, SrMethod, Tensor3};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn field(p: u32) -> Field {
    Field::new(p, 1).unwrap()
}

fn log_base(q: f64, x: f64) -> f64 {
    x.ln() / q.ln()
}

fn levi_civita() -> Outcome {
    let start = Instant::now();
    let f = field(3);
    let t = Tensor3::levi_civita(&f);
    let budget = Budget::default();
    let z = common::zero_count(&t);
    ensure(z == 105, || format!("oracle zero count {z}"))?;
    let ar = analytic_rank(&t, &budget).map_err(|e| e.to_string())?;
    ensure(ar.zero_count == z, || format!("zero count {} vs oracle {z}", ar.zero_count))?;
    let expect = log_base(3.0, 729.0 / 105.0);
    ensure((ar.value - expect).abs() < 1e-9, || format!("AR {} vs {expect}", ar.value))?;
    let sr = slice_rank_exact(&t, &budget).map_err(|e| e.to_string())?;
    ensure(sr.exact() == Some(3), || format!("exact SR {:?}", sr.exact()))?;
    let chain = verify_rank_chain(&t, 3, &budget, 7).map_err(|e| e.to_string())?;
    ensure(chain.gr.gr == 2 && chain.gr.stable, || format!("GR {} stable {}", chain.gr.gr, chain.gr.stable))?;
    ensure(chain.all_passed(), || format!("chain {chain:?}"))?;
    let el = start.elapsed();
    ensure(el < Duration::from_secs(10), || format!("took {el:?}"))?;
    Ok(format!("AR {:.9}, GR 2 stable, SR 3, chain holds, {el:.2?}", ar.value))
}

fn double_levi_civita() -> Outcome {
    let start = Instant::now();
    let f = field(3);
    let t = Tensor3::levi_civita(&f).direct_sum(&Tensor3::levi_civita(&f)).unwrap();
    let chain = verify_rank_chain(&t, 3, &Budget::default(), 7).map_err(|e| e.to_string())?;
    ensure(chain.gr.gr == 4 && chain.gr.stable, || format!("GR {} stable {}", chain.gr.gr, chain.gr.stable))?;
    ensure(chain.sr.exact() == Some(6), || format!("SR [{}, {}]", chain.sr.lo, chain.sr.hi))?;
    ensure(chain.ratio_sr_gr == Some((3, 2)), || format!("ratio {:?}", chain.ratio_sr_gr))?;
    ensure(chain.all_passed(), || "chain check failed".into())?;
    let el = start.elapsed();
    ensure(el < Duration::from_secs(120), || format!("took {el:?}"))?;
    Ok(format!("GR 4 stable (k reached {}), SR 6, ratio 3/2, {el:.2?}", chain.gr.k_reached))
}

fn identity_family() -> Outcome {
    let budget = Budget::default();
    for q in [3u32, 5] {
        let f = field(q);
        for n in 1..=4usize {
            let t = Tensor3::identity(&f, n);
            let gr = geometric_rank(&t, 3, &budget, 1).map_err(|e| e.to_string())?;
            ensure(gr.gr == n && gr.stable, || format!("I_{n}/F_{q}: GR {} stable {}", gr.gr, gr.stable))?;
            let sr = trirank::slicerank::slice_rank(&t, &budget, None, None).map_err(|e| e.to_string())?;
            ensure(sr.exact() == Some(n), || format!("I_{n}/F_{q}: SR [{}, {}]", sr.lo, sr.hi))?;
            let ar = analytic_rank(&t, &budget).map_err(|e| e.to_string())?;
            let count = (2 * q as u128 - 1).pow(n as u32);
            ensure(ar.zero_count == count, || format!("I_{n}/F_{q}: count {} vs {count}", ar.zero_count))?;
            if q == 3 && n <= 3 {
                ensure(common::zero_count(&t) == count, || "oracle disagrees with closed form".into())?;
            }
            let closed = n as f64 * (2.0 - log_base(q as f64, (2 * q - 1) as f64));
            ensure((ar.value - closed).abs() < 1e-9, || format!("I_{n}/F_{q}: AR {} vs {closed}", ar.value))?;
        }
    }
    let per_n: Vec<f64> = [3u32, 5, 7]
        .iter()
        .map(|&q| analytic_rank(&Tensor3::identity(&field(q), 2), &budget).unwrap().value / 2.0)
        .collect();
    ensure(per_n.windows(2).all(|w| w[0] < w[1]), || format!("AR/n not increasing: {per_n:?}"))?;
    Ok(format!("SR = GR = n, AR closed form; AR/n at n=2: {per_n:.4?}"))
}

fn decomposition_soundness() -> Outcome {
    let f = field(3);
    let budget = Budget::default();
    let (mut bounded, mut retried, mut at_argmin) = (0, 0, 0);
    for seed in 0..50u64 {
        let t = Tensor3::random(&f, [3, 3, 3], seed);
        let gr = geometric_rank(&t, 3, &budget, seed).map_err(|e| e.to_string())?;
        let opts = DecomposeOptions {
            k_work: 3,
            seed,
            kmax: 3,
            budget: budget.clone(),
        };
        let d = slice_decompose(&t, &opts, Some(&gr)).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(verify_decomposition(&t, &d), || format!("seed {seed}: does not verify"))?;
        if d.retries > 0 {
            retried += 1;
        }
        if d.r_used == gr.argmin_r {
            at_argmin += 1;
            ensure(d.len() <= 2 * gr.gr, || format!("seed {seed}: {} terms > 2 GR = {}", d.len(), 2 * gr.gr))?;
            bounded += 1;
        }
        if gr.stable {
            ensure(d.len() >= gr.gr, || format!("seed {seed}: {} terms < GR {}", d.len(), gr.gr))?;
        }
    }
    ensure(retried * 20 < 50, || format!("{retried} of 50 needed resampling"))?;
    Ok(format!("50/50 verified, {bounded}/{at_argmin} argmin runs within 2 GR, {retried} retried"))
}

fn random_poly(f: &Field, nvars: usize, rng: &mut ChaCha8Rng) -> Poly {
    let q = f.order() as i64;
    let mut p = Poly::zero(nvars);
    for _ in 0..rng.gen_range(1..=4) {
        let c = f.from_int(rng.gen_range(1..q));
        let mut m = Poly::constant(nvars, c);
        for _ in 0..rng.gen_range(0..=2) {
            m = m.mul(f, &Poly::var(nvars, rng.gen_range(0..nvars)));
        }
        p = p.add(f, &m);
    }
    p
}

/// Points of `F_p^n` where every polynomial vanishes, evaluated on residues.
fn oracle_points(s: &PolySystem) -> u128 {
    let p = s.field.p() as i64;
    let polys: Vec<Vec<(i64, Vec<u32>)>> = s
        .polys
        .iter()
        .map(|poly| poly.terms().map(|(e, c)| (s.field.coeffs(c)[0] as i64, e.to_vec())).collect())
        .collect();
    common::vectors(p, s.nvars)
        .into_iter()
        .filter(|x| {
            polys.iter().all(|terms| {
                terms
                    .iter()
                    .map(|(c, e)| e.iter().zip(x).fold(*c, |acc, (&k, &xi)| acc * xi.pow(k) % p))
                    .sum::<i64>()
                    .rem_euclid(p)
                    == 0
            })
        })
        .count() as u128
}

fn schwartz_zippel() -> Outcome {
    let budget = Budget::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut stable, mut vacuous) = (0, 0);
    for trial in 0..200 {
        let q = if trial % 2 == 0 { 3 } else { 5 };
        let f = field(q);
        let n = rng.gen_range(1..=4);
        let m = rng.gen_range(1..=3);
        let polys = (0..m).map(|_| random_poly(&f, n, &mut rng)).collect();
        let s = PolySystem::new(&f, n, polys).unwrap();
        let est = estimate_dim(&s, 3, &budget, trial).map_err(|e| e.to_string())?;
        if est.status == DimStatus::Unstable {
            continue;
        }
        stable += 1;
        let sz = sz_check(&s, &est, &budget).map_err(|e| e.to_string())?;
        ensure(sz.count == oracle_points(&s), || format!("trial {trial}: count {} vs oracle", sz.count))?;
        ensure(sz.holds, || format!("trial {trial}: bound fails {sz:?}"))?;
        if sz.vacuous {
            vacuous += 1;
        }
    }
    ensure(stable >= 100, || format!("only {stable} of 200 estimates stable"))?;
    // one nonzero polynomial of degree d < q has at most d q^(n-1) zeros
    for trial in 0..200 {
        let q = if trial % 2 == 0 { 3u32 } else { 5 };
        let f = field(q);
        let n = rng.gen_range(1..=4);
        let p = loop {
            let p = random_poly(&f, n, &mut rng);
            if !p.is_zero() {
                break p;
            }
        };
        let d = p.degree() as u128;
        let s = PolySystem::new(&f, n, vec![p]).unwrap();
        let count = oracle_points(&s);
        ensure(count <= d * (q as u128).pow(n as u32 - 1), || format!("classical trial {trial}: {count} zeros, degree {d}"))?;
    }
    Ok(format!("{stable}/200 stable systems all hold ({vacuous} vacuous); 200/200 single polynomials hold"))
}

fn min_entropy_identity() -> Outcome {
    let f = field(3);
    let budget = Budget::default();
    for seed in 0..100u64 {
        let t = Tensor3::random(&f, [3, 3, 3], 1000 + seed);
        let me = min_entropy(&t, &budget).map_err(|e| e.to_string())?;
        let ar = analytic_rank(&t, &budget).map_err(|e| e.to_string())?;
        let hist = common::histogram(&t);
        let oracle_max = *hist.values().max().unwrap();
        let oracle_zero = hist[&vec![0i64; 3]];
        ensure(oracle_max == oracle_zero, || format!("seed {seed}: oracle max bucket is not zero"))?;
        ensure(me.max_count == oracle_max && ar.zero_count == oracle_zero, || format!("seed {seed}: counts differ from oracle"))?;
        ensure(me.argmax_is_zero, || format!("seed {seed}: argmax not zero"))?;
        let lhs = me.me;
        let rhs = ar.value * 3f64.log2();
        ensure((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0), || format!("seed {seed}: ME {lhs} vs {rhs}"))?;
    }
    Ok("100/100 maps: max bucket = zero count, ME = AR log2 q".into())
}

fn closeness_tradeoff() -> Outcome {
    let f = field(3);
    let budget = Budget::default();
    for r in 1..=2usize {
        for t in 1..=2usize {
            let n = r + t;
            let (a, b) = extremal_pair(&f, r, t, n).map_err(|e| e.to_string())?;
            let rep = closeness_report(&a, &b, &budget).map_err(|e| e.to_string())?;
            let s = (r + t) as u32;
            let closed = Ratio::new(5u128.pow(s), 9u128.pow(s));
            ensure(rep.delta == closed, || format!("({r},{t}): delta {} vs {closed}", rep.delta))?;
            let z = common::zero_count(&a.sub(&b).unwrap());
            ensure(Ratio::new(z, 9u128.pow(n as u32)) == closed, || format!("({r},{t}): oracle {z}"))?;
            let (sf, sg, sd) = (rep.sr_f.exact(), rep.sr_g.exact(), rep.sr_diff.exact());
            ensure(sf == Some(r) && sg == Some(t) && sd == Some(r + t), || format!("({r},{t}): SR {sf:?} {sg:?} {sd:?}"))?;
            ensure(rep.holds_subadditive == Check::Pass && rep.holds_diff_ar == Check::Pass, || format!("({r},{t}): checks {rep:?}"))?;
        }
    }
    Ok("4/4 pairs: delta closed form, SR r, t, r+t, both inequalities hold".into())
}

fn to_matrix(f: &Field, m: &[Vec<i64>]) -> Matrix {
    Matrix::from_fn(m.len(), m[0].len(), |i, j| f.from_int(m[i][j]))
}

fn random_action(t: &Tensor3, rng: &mut ChaCha8Rng) -> Tensor3 {
    let f = t.field().clone();
    let p = f.p() as i64;
    let mut out = t.clone();
    for axis in Axis::ALL {
        let g = common::random_invertible(p, t.dims()[axis.index()], rng);
        out = out.gl_act(axis, &to_matrix(&f, &g)).unwrap();
    }
    out
}

fn span_equal(a: &[Vec<i64>], b: &[Vec<i64>], p: i64) -> bool {
    let ra = if a.is_empty() { 0 } else { common::rank_mod(a, p) };
    let rb = if b.is_empty() { 0 } else { common::rank_mod(b, p) };
    let mut both = a.to_vec();
    both.extend_from_slice(b);
    let rab = if both.is_empty() { 0 } else { common::rank_mod(&both, p) };
    ra == rb && ra == rab
}

fn structural_suite() -> Outcome {
    let f = field(3);
    let budget = Budget::default();
    let mut rng = ChaCha8Rng::seed_from_u64(88);

    // invariance under GL actions on all three axes
    let mut corpus = vec![
        Tensor3::levi_civita(&f),
        Tensor3::identity(&f, 2),
        Tensor3::identity(&f, 3),
        Tensor3::random(&f, [3, 3, 3], 5),
        Tensor3::random(&f, [2, 3, 4], 6),
    ];
    corpus.push(corpus[0].direct_sum(&corpus[0]).unwrap());
    let mut actions = 0;
    for t in &corpus {
        let ar = analytic_rank(t, &budget).unwrap().zero_count;
        let small = t.dims().iter().all(|&d| d <= 4);
        let sr = if small { slice_rank_exact(t, &budget).unwrap().exact() } else { None };
        let ks: &[u32] = if small { &[1, 2] } else { &[1] };
        let strata: Vec<_> = ks.iter().map(|&k| rank_strata_counts(t, k, &budget, 0).unwrap().exact_ranks).collect();
        for _ in 0..20 {
            let u = random_action(t, &mut rng);
            ensure(analytic_rank(&u, &budget).unwrap().zero_count == ar, || "AR count changed".into())?;
            if small {
                ensure(slice_rank_exact(&u, &budget).unwrap().exact() == sr, || "exact SR changed".into())?;
            }
            for (i, &k) in ks.iter().enumerate() {
                let s = rank_strata_counts(&u, k, &budget, 0).unwrap().exact_ranks;
                ensure(s.is_some() && s == strata[i], || format!("strata at k={k} changed"))?;
            }
            actions += 1;
        }
    }

    // subadditivity and dimension bound on exact-scope pairs
    let mut pool = vec![Tensor3::levi_civita(&f), Tensor3::identity(&f, 3)];
    pool.extend((0..6).map(|s| Tensor3::random(&f, [3, 3, 3], 40 + s)));
    pool.push(Tensor3::from_fn(&f, [3, 3, 3], |i, j, k| f.from_int((i == j && k == 0) as i64)));
    let srs: Vec<usize> = pool
        .iter()
        .map(|t| slice_rank_exact(t, &budget).unwrap().exact().unwrap())
        .collect();
    let mut pairs = 0;
    for i in 0..pool.len() {
        ensure(srs[i] <= dimension_bound(&pool[i]), || "dimension bound".into())?;
        for j in i..pool.len() {
            let (a, b) = (&pool[i], &pool[j]);
            let sum = Tensor3::from_fn(&f, [3, 3, 3], |x, y, z| f.add(a.get(x, y, z), b.get(x, y, z)));
            let s = slice_rank_exact(&sum, &budget).unwrap();
            ensure(s.method == SrMethod::AnnihilatorExact, || "not exact".into())?;
            ensure(s.exact().unwrap() <= srs[i] + srs[j], || format!("pair ({i},{j}) not subadditive"))?;
            pairs += 1;
        }
    }

    // tangent space by the explicit formula against the Jacobian kernel
    let mut matrices = 0;
    for m in 1..=3usize {
        for n in 1..=3usize {
            let len = m * n;
            for entries in common::vectors(3, len) {
                let rows: Vec<Vec<i64>> = entries.chunks(n).map(<[i64]>::to_vec).collect();
                let r = common::rank_mod(&rows, 3);
                if r == 0 || r > 2 {
                    continue;
                }
                let a = to_matrix(&f, &rows);
                let tangent: Vec<Vec<i64>> = tangent_space_at(&f, &a)
                    .basis()
                    .iter()
                    .map(|b| b.data().iter().map(|&e| f.coeffs(e)[0] as i64).collect())
                    .collect();
                let jac: Vec<Vec<i64>> = jacobian_tangent(&minors_system(&f, m, n, r), &f, a.data())
                    .unwrap()
                    .into_iter()
                    .map(|v| v.iter().map(|&e| f.coeffs(e)[0] as i64).collect())
                    .collect();
                ensure(span_equal(&tangent, &jac, 3), || format!("tangent mismatch at {rows:?}"))?;
                let expect = len - (m - r) * (n - r);
                ensure(tangent_space_at(&f, &a).dim() == expect, || format!("dimension at {rows:?}"))?;
                matrices += 1;
            }
        }
    }

    // dimension formula on seeded samples up to 4 x 4
    let mut samples = 0;
    for q in [3u32, 5] {
        let fq = field(q);
        for m in 1..=4usize {
            for n in 1..=4usize {
                for _ in 0..50 {
                    let k = rng.gen_range(0..=m.min(n));
                    let l: Vec<Vec<i64>> = (0..m).map(|_| (0..k).map(|_| rng.gen_range(0..q as i64)).collect()).collect();
                    let rr: Vec<Vec<i64>> = (0..k).map(|_| (0..n).map(|_| rng.gen_range(0..q as i64)).collect()).collect();
                    let prod: Vec<Vec<i64>> = (0..m)
                        .map(|i| (0..n).map(|j| (0..k).map(|t| l[i][t] * rr[t][j]).sum::<i64>().rem_euclid(q as i64)).collect())
                        .collect();
                    let r = common::rank_mod(&prod, q as i64);
                    let dim = tangent_space_at(&fq, &to_matrix(&fq, &prod)).dim();
                    ensure(dim == m * n - (m - r) * (n - r), || format!("dim {dim} for rank {r} {m}x{n}"))?;
                    samples += 1;
                }
            }
        }
    }
    Ok(format!(
        "{actions} GL actions invariant, {pairs} pairs subadditive, {matrices} matrices tangent = Jacobian, {samples} dimension samples"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("Levi-Civita over F_3", levi_civita),
        ("T_2 = eps + eps over F_3", double_levi_civita),
        ("identity family", identity_family),
        ("decomposition soundness", decomposition_soundness),
        ("Schwartz-Zippel for varieties", schwartz_zippel),
        ("min-entropy identity", min_entropy_identity),
        ("closeness trade-off", closeness_tradeoff),
        ("structural properties", structural_suite),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let el = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {} [{name}]: PASS ({detail}) [{el:.2?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} [{name}]: FAIL ({why}) [{el:.2?}]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

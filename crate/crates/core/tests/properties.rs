mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use trirank::analytic::analytic_rank;
use trirank::decomp::{
    rank_factorize, slice_decompose, sylvester_solve, tangent_space_at, verify_decomposition, DecomposeOptions,
};
use trirank::linalg::rank;
use trirank::slicerank::{dimension_bound, slice_rank_exact};
use trirank::{parse_tensor, write_tensor, Axis, Budget, Field, Matrix, Tensor3};

fn fields() -> Vec<Field> {
    [(2, 1), (2, 3), (3, 1), (3, 2), (5, 1), (7, 2)]
        .iter()
        .map(|&(p, k)| Field::new(p, k).unwrap())
        .collect()
}

fn small_field() -> impl Strategy<Value = Field> {
    prop::sample::select(fields())
}

fn tensor_over(primes: &'static [u32], max_dim: usize) -> impl Strategy<Value = Tensor3> {
    (prop::sample::select(primes), 1..=max_dim, 1..=max_dim, 1..=max_dim, any::<u64>()).prop_map(|(p, a, b, c, seed)| {
        Tensor3::random(&Field::new(p, 1).unwrap(), [a, b, c], seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_axioms(f in small_field(), a in any::<usize>(), b in any::<usize>(), c in any::<usize>()) {
        let q = f.order() as usize;
        let (a, b, c) = (f.elem(a % q), f.elem(b % q), f.elem(c % q));
        prop_assert_eq!(f.add(a, b), f.add(b, a));
        prop_assert_eq!(f.mul(a, b), f.mul(b, a));
        prop_assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
        prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
        prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
        prop_assert_eq!(f.add(a, f.neg(a)), f.elem(0));
        if !a.is_zero() {
            prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), f.elem(1));
            prop_assert_eq!(f.pow(a, f.order() as u64 - 1), f.elem(1));
        }
        prop_assert_eq!(f.pow(a, f.order() as u64), a);
    }

    #[test]
    fn prime_subfield_embeds(p in prop::sample::select(vec![2u32, 3, 5]), k in 2u32..=3, a in 0i64..5, b in 0i64..5) {
        let base = Field::new(p, 1).unwrap();
        let ext = base.extension(k).unwrap();
        let (x, y) = (base.from_int(a), base.from_int(b));
        let (ex, ey) = (base.embed_into(&ext, x).unwrap(), base.embed_into(&ext, y).unwrap());
        prop_assert_eq!(base.embed_into(&ext, base.mul(x, y)).unwrap(), ext.mul(ex, ey));
        prop_assert_eq!(base.embed_into(&ext, base.add(x, y)).unwrap(), ext.add(ex, ey));
        prop_assert_eq!(ext.trace(ex) as i64, (a * k as i64).rem_euclid(p as i64));
    }

    #[test]
    fn matrix_rank_matches_oracle(p in prop::sample::select(vec![2i64, 3, 5, 7]), m in 1usize..6, n in 1usize..6, seed in any::<u64>()) {
        let f = Field::new(p as u32, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<i64>> = (0..m).map(|_| (0..n).map(|_| rand::Rng::gen_range(&mut rng, 0..p)).collect()).collect();
        let a = Matrix::from_fn(m, n, |i, j| f.from_int(rows[i][j]));
        prop_assert_eq!(rank(&f, &a), common::rank_mod(&rows, p));
    }

    #[test]
    fn zero_count_matches_oracle(t in tensor_over(&[2, 3, 5], 3)) {
        let ar = analytic_rank(&t, &Budget::default()).unwrap();
        prop_assert_eq!(ar.zero_count, common::zero_count(&t));
        let n = (t.dims()[0] + t.dims()[1]) as u32;
        prop_assert!(ar.value >= -1e-12 && ar.value <= n as f64);
    }

    #[test]
    fn direct_sum_multiplies_zero_counts(a in tensor_over(&[3], 3), seed in any::<u64>()) {
        let b = Tensor3::random(a.field(), [2, 2, 1], seed);
        let budget = Budget::default();
        let za = analytic_rank(&a, &budget).unwrap();
        let zb = analytic_rank(&b, &budget).unwrap();
        let zs = analytic_rank(&a.direct_sum(&b).unwrap(), &budget).unwrap();
        prop_assert_eq!(zs.zero_count, za.zero_count * zb.zero_count);
        prop_assert!((zs.value - za.value - zb.value).abs() < 1e-9);
    }

    #[test]
    fn analytic_rank_is_gl_invariant(t in tensor_over(&[3, 5], 3), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = t.field().clone();
        let p = f.p() as i64;
        let mut u = t.clone();
        for axis in Axis::ALL {
            let g = common::random_invertible(p, t.dims()[axis.index()], &mut rng);
            u = u.gl_act(axis, &Matrix::from_fn(g.len(), g.len(), |i, j| f.from_int(g[i][j]))).unwrap();
        }
        let budget = Budget::default();
        prop_assert_eq!(analytic_rank(&t, &budget).unwrap().zero_count, analytic_rank(&u, &budget).unwrap().zero_count);
    }

    #[test]
    fn text_round_trip(f in small_field(), a in 1usize..4, b in 1usize..4, c in 1usize..4, seed in any::<u64>()) {
        let t = Tensor3::random(&f, [a, b, c], seed);
        prop_assert_eq!(parse_tensor(&write_tensor(&t)).unwrap(), t);
    }

    #[test]
    fn exact_slice_rank_has_a_witness(t in tensor_over(&[2, 3], 3)) {
        let sr = slice_rank_exact(&t, &Budget::default()).unwrap();
        let s = sr.exact().unwrap();
        prop_assert!(s <= dimension_bound(&t));
        let w = sr.witness.as_ref().unwrap();
        prop_assert_eq!(w.check(&t), Some(s));
    }

    #[test]
    fn factorization_reconstructs(f in small_field(), m in 1usize..5, n in 1usize..5, seed in any::<u64>()) {
        let a = Tensor3::random(&f, [1, m, n], seed).slice(0);
        let r = rank_factorize(&f, &a);
        prop_assert_eq!(r.r, rank(&f, &a));
        prop_assert_eq!(r.reconstruct(&f, m, n), a);
    }

    #[test]
    fn sylvester_solution_reconstructs(f in small_field(), m in 1usize..4, n in 1usize..4, seed in any::<u64>()) {
        let t = Tensor3::random(&f, [4, m, n], seed);
        let a = t.slice(0);
        let c = Tensor3::random(&f, [1, m, m], seed ^ 1).slice(0);
        let cp = Tensor3::random(&f, [1, n, n], seed ^ 2).slice(0);
        let b = c.mul(&f, &a).unwrap().add(&f, &a.mul(&f, &cp).unwrap()).unwrap();
        prop_assert!(tangent_space_at(&f, &a).contains(&b));
        let s = sylvester_solve(&f, &b, &a).unwrap();
        let back = s.c.mul(&f, &a).unwrap().add(&f, &a.mul(&f, &s.cp).unwrap()).unwrap();
        prop_assert_eq!(back, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn decompositions_verify(t in tensor_over(&[2, 3], 3), seed in any::<u64>()) {
        let opts = DecomposeOptions { k_work: 2, seed, ..DecomposeOptions::default() };
        let d = slice_decompose(&t, &opts, None).unwrap();
        prop_assert!(verify_decomposition(&t, &d));
        if let Some(g) = d.gr {
            prop_assert!(d.len() >= g);
        }
    }
}

//! Brute-force reference computations over prime fields, written against
//! plain integers so they share no code with the library.

#![allow(dead_code)]

use trirank::{Field, FieldElem, Tensor3};

/// Entries of a prime-field tensor as residues, indexed `[i][j][k]`.
pub fn residues(t: &Tensor3) -> Vec<Vec<Vec<i64>>> {
    let f = t.field();
    assert!(f.is_prime_field());
    let [n1, n2, n3] = t.dims();
    (0..n1)
        .map(|i| {
            (0..n2)
                .map(|j| (0..n3).map(|k| f.coeffs(t.get(i, j, k))[0] as i64).collect())
                .collect()
        })
        .collect()
}

/// All vectors of `F_p^n`, first coordinate fastest.
pub fn vectors(p: i64, n: usize) -> Vec<Vec<i64>> {
    let total = (p as usize).pow(n as u32);
    (0..total)
        .map(|mut idx| {
            (0..n)
                .map(|_| {
                    let d = (idx % p as usize) as i64;
                    idx /= p as usize;
                    d
                })
                .collect()
        })
        .collect()
}

/// `f(x, y)_k = sum_ij a_ijk x_i y_j mod p`.
pub fn bilinear(a: &[Vec<Vec<i64>>], p: i64, x: &[i64], y: &[i64], n3: usize) -> Vec<i64> {
    let mut out = vec![0i64; n3];
    for (i, xi) in x.iter().enumerate() {
        for (j, yj) in y.iter().enumerate() {
            for (k, o) in out.iter_mut().enumerate() {
                *o = (*o + a[i][j][k] * xi * yj).rem_euclid(p);
            }
        }
    }
    out
}

/// Pairs `(x, y)` with `f(x, y) = 0`.
pub fn zero_count(t: &Tensor3) -> u128 {
    let p = t.field().p() as i64;
    let [n1, n2, n3] = t.dims();
    let a = residues(t);
    let ys = vectors(p, n2);
    let mut z = 0u128;
    for x in vectors(p, n1) {
        for y in &ys {
            if bilinear(&a, p, &x, y, n3).iter().all(|&v| v == 0) {
                z += 1;
            }
        }
    }
    z
}

/// Output distribution of `f`, keyed by the output vector.
pub fn histogram(t: &Tensor3) -> std::collections::BTreeMap<Vec<i64>, u128> {
    let p = t.field().p() as i64;
    let [n1, n2, n3] = t.dims();
    let a = residues(t);
    let ys = vectors(p, n2);
    let mut h = std::collections::BTreeMap::new();
    for x in vectors(p, n1) {
        for y in &ys {
            *h.entry(bilinear(&a, p, &x, y, n3)).or_insert(0) += 1;
        }
    }
    h
}

pub fn inv_mod(a: i64, p: i64) -> i64 {
    let mut r = 1;
    let mut b = a.rem_euclid(p);
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

/// Rank mod `p` by Gaussian elimination on a row-major matrix.
pub fn rank_mod(rows: &[Vec<i64>], p: i64) -> usize {
    let mut m: Vec<Vec<i64>> = rows.iter().map(|r| r.iter().map(|v| v.rem_euclid(p)).collect()).collect();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..m.len()).find(|&r| m[r][c] != 0) else {
            continue;
        };
        m.swap(rank, piv);
        let inv = inv_mod(m[rank][c], p);
        for v in m[rank].iter_mut() {
            *v = *v * inv % p;
        }
        for r in 0..m.len() {
            if r != rank && m[r][c] != 0 {
                let factor = m[r][c];
                for cc in 0..cols {
                    m[r][cc] = (m[r][cc] - factor * m[rank][cc]).rem_euclid(p);
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Elements of a prime field from residues.
pub fn elems(f: &Field, xs: &[i64]) -> Vec<FieldElem> {
    xs.iter().map(|&x| f.from_int(x)).collect()
}

/// Random invertible `n x n` matrix over `F_p` as residues.
pub fn random_invertible<R: rand::Rng>(p: i64, n: usize, rng: &mut R) -> Vec<Vec<i64>> {
    loop {
        let m: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(0..p)).collect()).collect();
        if rank_mod(&m, p) == n {
            return m;
        }
    }
}

//! Explicit slice-rank decompositions through tangent spaces of
//! determinantal varieties.
//!
//! Write the x-slices as `A_i = sum_j l_j[i] B_j` for a basis `B_1..B_d` of
//! their span `L`, chosen so that `B_1..B_p` span `P = L ∩ T_A M_r` for a
//! rank-`r` point `A = sum_i f_i g_i^T` of `L`. Each `B_j = C_j A + A C'_j`
//! with `j <= p` splits as
//!
//! ```text
//! y^T B_j z = sum_i (g_i . z)(y^T C_j f_i) + sum_i (f_i . y)((C'_j^T g_i) . z)
//! ```
//!
//! so `T = sum_j l_j(x) y^T B_j z` is the sum of `r` terms linear in `z`,
//! `r` terms linear in `y`, and one term linear in `x` per `B_j` with
//! `j > p`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Budget;
use crate::error::{Error, Result};
use crate::ffield::{Field, FieldDesignation, FieldElem};
use crate::geometric::{geometric_rank, GRReport};
use crate::linalg::{self, Matrix, MatrixSpace, Vector};
use crate::tensor::{Axis, SliceTerm, Tensor3};
use crate::variety::tower_field;

/// Resampling rounds when a decomposition exceeds `2 * GR` terms.
pub const MAX_RETRIES: u32 = 5;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankFactorization {
    pub r: usize,
    pub left: Vec<Vector>,
    pub right: Vec<Vector>,
}

impl RankFactorization {
    pub fn reconstruct(&self, field: &Field, rows: usize, cols: usize) -> Matrix {
        let mut m = Matrix::zeros(rows, cols);
        for (f, g) in self.left.iter().zip(&self.right) {
            m.add_scaled(field, FieldElem::ONE, &Matrix::outer(field, f, g));
        }
        m
    }
}

/// `A = sum_i f_i g_i^T` with `f_i` the rows of the reduced echelon form
/// of `A^T` and `g_i` the rows of `A` at its pivot columns.
pub fn rank_factorize(field: &Field, a: &Matrix) -> RankFactorization {
    let mut at = a.transpose();
    let pivots = linalg::rref(field, &mut at);
    let left = (0..pivots.len()).map(|i| at.row(i).to_vec()).collect();
    let right = pivots.iter().map(|&p| a.row(p).to_vec()).collect();
    RankFactorization {
        r: pivots.len(),
        left,
        right,
    }
}

/// `{C A + A C'}`: the tangent space at `A` to the variety of matrices of
/// rank at most `rank(A)`.
pub fn tangent_space_at(field: &Field, a: &Matrix) -> MatrixSpace {
    let (m, n) = a.shape();
    let mut gens = Vec::with_capacity(m * m + n * n);
    for i in 0..m {
        for j in 0..m {
            gens.push(Matrix::unit(m, m, i, j).mul(field, a).unwrap());
        }
    }
    for i in 0..n {
        for j in 0..n {
            gens.push(a.mul(field, &Matrix::unit(n, n, i, j)).unwrap());
        }
    }
    MatrixSpace::span(field, (m, n), &gens).unwrap()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CongruencePair {
    pub c: Matrix,
    pub cp: Matrix,
}

/// Lexicographically first `(C, C')` with `B = C A + A C'`, unknowns ordered
/// as the entries of `C` then of `C'`, row by row.
pub fn sylvester_solve(field: &Field, b: &Matrix, a: &Matrix) -> Result<CongruencePair> {
    let (m, n) = a.shape();
    if b.shape() != (m, n) {
        return Err(Error::DimensionMismatch("target and point shapes differ".into()));
    }
    let mut cols: Vec<Matrix> = Vec::with_capacity(m * m + n * n);
    for i in 0..m {
        for j in 0..m {
            cols.push(Matrix::unit(m, m, i, j).mul(field, a)?);
        }
    }
    for i in 0..n {
        for j in 0..n {
            cols.push(a.mul(field, &Matrix::unit(n, n, i, j))?);
        }
    }
    let sys = Matrix::from_fn(m * n, cols.len(), |row, col| cols[col].data()[row]);
    let x = linalg::solve_lex_first(field, &sys, b.data()).ok_or(Error::NotInTangentSpace)?;
    Ok(CongruencePair {
        c: Matrix::from_vec(m, m, x[..m * m].to_vec())?,
        cp: Matrix::from_vec(n, n, x[m * m..].to_vec())?,
    })
}

/// Rejection sampling for a member of `L` of rank exactly `r`.
pub fn sample_rank_point<R: Rng>(l: &MatrixSpace, r: usize, attempts: u64, rng: &mut R) -> Result<Matrix> {
    let (m, n) = l.shape();
    let f = l.field();
    if r == 0 {
        return Ok(Matrix::zeros(m, n));
    }
    if r > m.min(n) || l.dim() == 0 {
        return Err(Error::NoPointFound { rank: r, attempts: 0 });
    }
    let q = f.order() as usize;
    for _ in 0..attempts {
        let coeffs: Vector = (0..l.dim()).map(|_| f.elem(rng.gen_range(0..q))).collect();
        let a = l.combine(&coeffs);
        if linalg::rank(f, &a) == r {
            return Ok(a);
        }
    }
    Err(Error::NoPointFound { rank: r, attempts })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermSource {
    /// Linear in z, from the `C A` half of a tangent vector.
    TangentLeft,
    /// Linear in y, from the `A C'` half.
    TangentRight,
    /// Linear in x, one per slice outside the tangent space.
    Complement,
    /// Linear in x, one per slice of the plain slice decomposition.
    Base,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SliceDecomposition {
    pub working_field: Field,
    pub dims: [usize; 3],
    pub terms: Vec<SliceTerm>,
    pub sources: Vec<TermSource>,
    /// Rank asked for, from the minimising stratum.
    pub r_target: usize,
    /// Rank of the sampled point actually used.
    pub r_used: usize,
    pub sampled_point: Option<Matrix>,
    /// `dim P`.
    pub tangent_dim: usize,
    /// Resampling rounds used beyond the first.
    pub retries: u32,
    pub gr: Option<usize>,
    /// `terms <= 2 GR`, when a stable GR was available.
    pub within_bound: Option<bool>,
}

impl SliceDecomposition {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// The decomposition into one x-term per slice.
pub fn trivial_decomposition(t: &Tensor3) -> SliceDecomposition {
    let [n1, _, _] = t.dims();
    let mut terms = Vec::new();
    for i in 0..n1 {
        let a = t.slice(i);
        if a.is_zero() {
            continue;
        }
        let mut l = vec![FieldElem::ZERO; n1];
        l[i] = FieldElem::ONE;
        terms.push(SliceTerm {
            direction: Axis::X,
            linear: l,
            bilinear: a,
        });
    }
    SliceDecomposition {
        working_field: t.field().clone(),
        dims: t.dims(),
        sources: vec![TermSource::Base; terms.len()],
        terms,
        r_target: 0,
        r_used: 0,
        sampled_point: None,
        tangent_dim: 0,
        retries: 0,
        gr: None,
        within_bound: None,
    }
}

/// Exact check that the terms sum to `T` over the decomposition's field.
pub fn verify_decomposition(t: &Tensor3, d: &SliceDecomposition) -> bool {
    if t.dims() != d.dims || d.terms.len() != d.sources.len() {
        return false;
    }
    let Ok(target) = t.lift(&d.working_field) else {
        return false;
    };
    let f = &d.working_field;
    let mut sum = Tensor3::zeros(f, d.dims);
    for term in &d.terms {
        if term.linear.iter().chain(term.bilinear.data()).any(|&a| !f.contains(a)) {
            return false;
        }
        let Ok(tt) = term.to_tensor(f, d.dims) else {
            return false;
        };
        sum = Tensor3::from_fn(f, d.dims, |i, j, k| f.add(sum.get(i, j, k), tt.get(i, j, k)));
    }
    sum == target
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecomposeOptions {
    pub k_work: u32,
    pub seed: u64,
    /// Tower depth for the geometric rank, when it is not supplied.
    pub kmax: u32,
    pub budget: Budget,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            k_work: 3,
            seed: 0,
            kmax: 3,
            budget: Budget::default(),
        }
    }
}

/// One pass of the construction at a given sampled point.
fn decompose_at(t: &Tensor3, l: &MatrixSpace, a: &Matrix) -> Result<(Vec<SliceTerm>, Vec<TermSource>, usize)> {
    let f = l.field();
    let [n1, n2, n3] = t.dims();
    let fac = rank_factorize(f, a);
    let p = l.intersect(&tangent_space_at(f, a))?;
    let complement = p.complement_in(l);
    let mut basis: Vec<Matrix> = p.basis().to_vec();
    basis.extend(complement.iter().cloned());
    let full = MatrixSpace::span(f, (n2, n3), &basis)?;
    debug_assert_eq!(full.dim(), l.dim());

    // ell[j][i]: coefficient of B_j in slice A_i
    let mut ell = vec![vec![FieldElem::ZERO; n1]; basis.len()];
    for i in 0..n1 {
        let c = full.coordinates(&t.slice(i)).ok_or(Error::VerificationFailed)?;
        for (j, v) in c.into_iter().enumerate() {
            ell[j][i] = v;
        }
    }

    let pairs: Vec<CongruencePair> = p
        .basis()
        .iter()
        .map(|b| sylvester_solve(f, b, a))
        .collect::<Result<_>>()?;

    let mut terms = Vec::new();
    let mut sources = Vec::new();
    for (fi, gi) in fac.left.iter().zip(&fac.right) {
        // z-term: linear g_i, bilinear H_i(x, y) = sum_j l_j(x) (C_j f_i . y)
        let mut h = Matrix::zeros(n1, n2);
        for (j, pair) in pairs.iter().enumerate() {
            let cf = pair.c.apply(f, fi);
            h.add_scaled(f, FieldElem::ONE, &Matrix::outer(f, &ell[j], &cf));
        }
        terms.push(SliceTerm {
            direction: Axis::Z,
            linear: gi.clone(),
            bilinear: h,
        });
        sources.push(TermSource::TangentLeft);
    }
    for (fi, gi) in fac.left.iter().zip(&fac.right) {
        // y-term: linear f_i, bilinear H'_i(x, z) = sum_j l_j(x) (C'_j^T g_i . z)
        let mut h = Matrix::zeros(n1, n3);
        for (j, pair) in pairs.iter().enumerate() {
            let cg = pair.cp.transpose().apply(f, gi);
            h.add_scaled(f, FieldElem::ONE, &Matrix::outer(f, &ell[j], &cg));
        }
        terms.push(SliceTerm {
            direction: Axis::Y,
            linear: fi.clone(),
            bilinear: h,
        });
        sources.push(TermSource::TangentRight);
    }
    for (j, b) in complement.iter().enumerate() {
        terms.push(SliceTerm {
            direction: Axis::X,
            linear: ell[p.dim() + j].clone(),
            bilinear: b.clone(),
        });
        sources.push(TermSource::Complement);
    }
    // zero terms can appear when a factor pairs only with zero C_j f_i
    let keep: Vec<bool> = terms.iter().map(|t| !t.bilinear.is_zero() && t.linear.iter().any(|a| !a.is_zero())).collect();
    let terms: Vec<SliceTerm> = terms.into_iter().zip(&keep).filter(|(_, &k)| k).map(|(t, _)| t).collect();
    let sources: Vec<TermSource> = sources.into_iter().zip(&keep).filter(|(_, &k)| k).map(|(s, _)| s).collect();
    Ok((terms, sources, p.dim()))
}

/// Decomposition over `F_{q^k_work}` with at most `2r + codim_L P` terms,
/// where `r` minimises `r + codim X_r`.
pub fn slice_decompose(t: &Tensor3, opts: &DecomposeOptions, gr: Option<&GRReport>) -> Result<SliceDecomposition> {
    let owned;
    let gr = match gr {
        Some(g) => g,
        None => {
            owned = geometric_rank(t, opts.kmax, &opts.budget, opts.seed)?;
            &owned
        }
    };
    let wf = tower_field(t.field(), opts.k_work)?;
    let tw = t.lift(&wf)?;
    let l = tw.slice_space(Axis::X);
    let [_, n2, n3] = t.dims();
    let gr_value = gr.stable.then_some(gr.gr);

    let mut best: Option<SliceDecomposition> = None;
    for retry in 0..=MAX_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(retry as u64);
        let mut r = gr.argmin_r.min(n2.min(n3));
        let a = loop {
            match sample_rank_point(&l, r, opts.budget.sample_attempts, &mut rng) {
                Ok(a) => break a,
                Err(Error::NoPointFound { .. }) if r > 0 => r -= 1,
                Err(e) => return Err(e),
            }
        };
        let (terms, sources, tangent_dim) = decompose_at(&tw, &l, &a)?;
        let within_bound = gr_value.map(|g| terms.len() <= 2 * g);
        let d = SliceDecomposition {
            working_field: wf.clone(),
            dims: t.dims(),
            terms,
            sources,
            r_target: gr.argmin_r,
            r_used: r,
            sampled_point: Some(a),
            tangent_dim,
            retries: retry,
            gr: gr_value,
            within_bound,
        };
        if !verify_decomposition(t, &d) {
            return Err(Error::VerificationFailed);
        }
        let done = within_bound != Some(false);
        if best.as_ref().is_none_or(|b| d.len() < b.len()) {
            best = Some(d);
        }
        if done {
            break;
        }
    }
    let mut out = best.unwrap();
    out.retries = out.retries.max(if out.within_bound == Some(false) { MAX_RETRIES } else { 0 });
    Ok(out)
}

/// Serialisable form: elements as power-basis coefficient lists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionDoc {
    pub schema: u32,
    pub field: String,
    pub modulus: Vec<u32>,
    pub dims: [usize; 3],
    pub terms: Vec<TermDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermDoc {
    pub direction: Axis,
    pub source: TermSource,
    pub linear: Vec<Vec<u32>>,
    pub bilinear: Vec<Vec<Vec<u32>>>,
}

impl DecompositionDoc {
    pub fn from_decomposition(d: &SliceDecomposition) -> DecompositionDoc {
        let f = &d.working_field;
        DecompositionDoc {
            schema: 1,
            field: f.designation().to_string(),
            modulus: f.modulus().to_vec(),
            dims: d.dims,
            terms: d
                .terms
                .iter()
                .zip(&d.sources)
                .map(|(t, &s)| TermDoc {
                    direction: t.direction,
                    source: s,
                    linear: t.linear.iter().map(|&a| f.coeffs(a)).collect(),
                    bilinear: (0..t.bilinear.rows())
                        .map(|i| t.bilinear.row(i).iter().map(|&a| f.coeffs(a)).collect())
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn to_decomposition(&self) -> Result<SliceDecomposition> {
        let desig: FieldDesignation = self.field.parse()?;
        let f = Field::from_designation(desig)?;
        if f.modulus() != self.modulus.as_slice() {
            return Err(Error::Parse {
                line: 0,
                message: format!("modulus {:?} differs from the field's {:?}", self.modulus, f.modulus()),
            });
        }
        let elem = |c: &Vec<u32>| f.from_coeffs(c);
        let mut terms = Vec::new();
        let mut sources = Vec::new();
        for t in &self.terms {
            let linear = t.linear.iter().map(elem).collect::<Result<Vector>>()?;
            let rows = t
                .bilinear
                .iter()
                .map(|row| row.iter().map(elem).collect::<Result<Vector>>())
                .collect::<Result<Vec<Vector>>>()?;
            let cols = rows.first().map_or(0, Vec::len);
            if rows.iter().any(|r| r.len() != cols) {
                return Err(Error::DimensionMismatch("ragged bilinear matrix".into()));
            }
            let bilinear = Matrix::from_vec(rows.len(), cols, rows.concat())?;
            let term = SliceTerm {
                direction: t.direction,
                linear,
                bilinear,
            };
            if !term.check_shape(self.dims) {
                return Err(Error::DimensionMismatch("term shape does not match dims".into()));
            }
            terms.push(term);
            sources.push(t.source);
        }
        Ok(SliceDecomposition {
            working_field: f,
            dims: self.dims,
            terms,
            sources,
            r_target: 0,
            r_used: 0,
            sampled_point: None,
            tangent_dim: 0,
            retries: 0,
            gr: None,
            within_bound: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f3() -> Field {
        Field::new(3, 1).unwrap()
    }

    #[test]
    fn factorization_examples() {
        let f = f3();
        let e11 = Matrix::unit(2, 2, 0, 0);
        let r = rank_factorize(&f, &e11);
        assert_eq!(r.r, 1);
        assert_eq!(r.left, vec![vec![FieldElem::ONE, FieldElem::ZERO]]);
        assert_eq!(r.right, vec![vec![FieldElem::ONE, FieldElem::ZERO]]);

        let cross = Matrix::from_ints(&f, &[&[0, 0, 0], &[0, 0, 1], &[0, 2, 0]]);
        let r = rank_factorize(&f, &cross);
        assert_eq!(r.r, 2);
        let v = |xs: &[i64]| xs.iter().map(|&x| f.from_int(x)).collect::<Vector>();
        assert_eq!(r.left, vec![v(&[0, 1, 0]), v(&[0, 0, 1])]);
        assert_eq!(r.right, vec![v(&[0, 0, 1]), v(&[0, 2, 0])]);
        assert_eq!(r.reconstruct(&f, 3, 3), cross);
        assert_eq!(rank_factorize(&f, &Matrix::zeros(2, 3)).r, 0);
    }

    #[test]
    fn tangent_examples() {
        let f = f3();
        let t = tangent_space_at(&f, &Matrix::unit(2, 2, 0, 0));
        assert_eq!(t.dim(), 3);
        assert!(t.basis().iter().all(|m| m.get(1, 1).is_zero()));
        let full = Matrix::from_ints(&f, &[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]);
        assert_eq!(tangent_space_at(&f, &full).dim(), 9);
        assert_eq!(tangent_space_at(&f, &Matrix::zeros(3, 3)).dim(), 0);
    }

    #[test]
    fn sylvester_examples() {
        let f = f3();
        let a = Matrix::unit(2, 2, 0, 0);
        let s = sylvester_solve(&f, &Matrix::unit(2, 2, 0, 1), &a).unwrap();
        assert_eq!((s.c.clone(), s.cp.clone()), (Matrix::zeros(2, 2), Matrix::unit(2, 2, 0, 1)));
        assert_eq!(
            sylvester_solve(&f, &Matrix::unit(2, 2, 1, 1), &a),
            Err(Error::NotInTangentSpace)
        );
        // B = A: the lexicographically first pair puts everything in C'
        let s = sylvester_solve(&f, &a, &a).unwrap();
        let back = s.c.mul(&f, &a).unwrap().add(&f, &a.mul(&f, &s.cp).unwrap()).unwrap();
        assert_eq!(back, a);
        assert_eq!((s.c, s.cp), (Matrix::zeros(2, 2), Matrix::unit(2, 2, 0, 0)));
    }

    #[test]
    fn sampling_examples() {
        let f = f3();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let l = Tensor3::levi_civita(&f).slice_space(Axis::X);
        assert_eq!(linalg::rank(&f, &sample_rank_point(&l, 2, 100, &mut rng).unwrap()), 2);
        let l = Tensor3::identity(&f, 3).slice_space(Axis::X);
        assert_eq!(linalg::rank(&f, &sample_rank_point(&l, 3, 1000, &mut rng).unwrap()), 3);
        assert!(matches!(
            sample_rank_point(&l, 4, 100, &mut rng),
            Err(Error::NoPointFound { rank: 4, .. })
        ));
    }

    #[test]
    fn decompose_examples() {
        let f = f3();
        let opts = DecomposeOptions::default();
        let z = Tensor3::zeros(&f, [2, 2, 2]);
        assert!(slice_decompose(&z, &opts, None).unwrap().is_empty());
        let i1 = Tensor3::identity(&f, 1);
        assert_eq!(slice_decompose(&i1, &opts, None).unwrap().len(), 1);
        let eps = Tensor3::levi_civita(&f);
        let d = slice_decompose(&eps, &opts, None).unwrap();
        assert!(verify_decomposition(&eps, &d));
        assert!(d.len() <= 4);
        assert_eq!(d.within_bound, Some(true));
        assert_eq!(d.working_field.order(), 27);
    }

    #[test]
    fn verify_examples() {
        let f = f3();
        let t = Tensor3::random(&f, [3, 2, 4], 5);
        assert!(verify_decomposition(&t, &trivial_decomposition(&t)));
        let bigger = t.direct_sum(&Tensor3::zeros(&f, [1, 1, 1])).unwrap();
        assert!(!verify_decomposition(&bigger, &trivial_decomposition(&t)));
        let mut d = trivial_decomposition(&t);
        d.terms.pop();
        d.sources.pop();
        assert!(!verify_decomposition(&t, &d));
    }

    #[test]
    fn doc_round_trip() {
        let f = f3();
        let eps = Tensor3::levi_civita(&f);
        let d = slice_decompose(&eps, &DecomposeOptions::default(), None).unwrap();
        let doc = DecompositionDoc::from_decomposition(&d);
        let back = doc.to_decomposition().unwrap();
        assert_eq!(back.terms, d.terms);
        assert!(verify_decomposition(&eps, &back));
    }
}

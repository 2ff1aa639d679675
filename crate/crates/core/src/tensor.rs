//! 3-tensors and their three faces: the trilinear form
//! `T(x, y, z) = sum a_ijk x_i y_j z_k`, the bilinear map
//! `f(x, y)_k = sum_ij a_ijk x_i y_j`, and the space spanned by the slices.
//!
//! Slices along the x axis are the `n2 x n3` matrices `A_i = (a_ijk)_jk`, so
//! `y^T (sum_i x_i A_i) z = T(x, y, z)`. Other axes are handled by rotating
//! the tensor so that axis comes first.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ffield::{Field, FieldElem};
use crate::linalg::{self, Matrix, MatrixSpace, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Axis> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            _ => Err(Error::BadParams(format!("unknown axis {s:?}"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// A dense `n1 x n2 x n3` tensor over a finite field.
#[derive(Clone, PartialEq, Eq)]
pub struct Tensor3 {
    field: Field,
    dims: [usize; 3],
    entries: Vec<FieldElem>,
}

impl fmt::Debug for Tensor3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor3({:?}, {:?}, support {:?})", self.field, self.dims, self.support())
    }
}

fn check_vec(field: &Field, v: &[FieldElem], len: usize, what: &str) -> Result<()> {
    if v.len() != len {
        return Err(Error::DimensionMismatch(format!(
            "{what} has length {}, expected {len}",
            v.len()
        )));
    }
    if v.iter().any(|&a| !field.contains(a)) {
        return Err(Error::FieldMismatch);
    }
    Ok(())
}

impl Tensor3 {
    pub fn zeros(field: &Field, dims: [usize; 3]) -> Tensor3 {
        Tensor3 {
            field: field.clone(),
            dims,
            entries: vec![FieldElem::ZERO; dims.iter().product()],
        }
    }

    pub fn from_entries(field: &Field, dims: [usize; 3], entries: Vec<FieldElem>) -> Result<Tensor3> {
        if entries.len() != dims.iter().product::<usize>() {
            return Err(Error::DimensionMismatch("entry count".into()));
        }
        if entries.iter().any(|&a| !field.contains(a)) {
            return Err(Error::FieldMismatch);
        }
        Ok(Tensor3 {
            field: field.clone(),
            dims,
            entries,
        })
    }

    pub fn from_fn(field: &Field, dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> FieldElem) -> Tensor3 {
        let mut t = Tensor3::zeros(field, dims);
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                for k in 0..dims[2] {
                    let v = f(i, j, k);
                    t.set(i, j, k, v);
                }
            }
        }
        t
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn entries(&self) -> &[FieldElem] {
        &self.entries
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> FieldElem {
        self.entries[self.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: FieldElem) {
        let o = self.offset(i, j, k);
        self.entries[o] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|a| a.is_zero())
    }

    /// Index triples of nonzero entries in lexicographic order.
    pub fn support(&self) -> Vec<[usize; 3]> {
        let [n1, n2, n3] = self.dims;
        let mut s = Vec::new();
        for i in 0..n1 {
            for j in 0..n2 {
                for k in 0..n3 {
                    if !self.get(i, j, k).is_zero() {
                        s.push([i, j, k]);
                    }
                }
            }
        }
        s
    }

    /// `T(x, y, z)` with vectors over the tensor's field.
    pub fn eval_trilinear(&self, x: &[FieldElem], y: &[FieldElem], z: &[FieldElem]) -> Result<FieldElem> {
        let f = self.field.clone();
        self.eval_trilinear_in(&f, x, y, z)
    }

    /// `T(x, y, z)` with vectors over `field`, which must contain the
    /// tensor's field.
    pub fn eval_trilinear_in(&self, field: &Field, x: &[FieldElem], y: &[FieldElem], z: &[FieldElem]) -> Result<FieldElem> {
        if !self.field.can_embed_into(field) {
            return Err(Error::FieldMismatch);
        }
        check_vec(field, z, self.dims[2], "z")?;
        let m = self.contract_x_in(field, x)?;
        check_vec(field, y, self.dims[1], "y")?;
        Ok(m.bilinear(field, y, z))
    }

    /// `sum_i x_i A_i`, an `n2 x n3` matrix.
    pub fn contract_x(&self, x: &[FieldElem]) -> Result<Matrix> {
        let f = self.field.clone();
        self.contract_x_in(&f, x)
    }

    pub fn contract_x_in(&self, field: &Field, x: &[FieldElem]) -> Result<Matrix> {
        if !self.field.can_embed_into(field) {
            return Err(Error::FieldMismatch);
        }
        check_vec(field, x, self.dims[0], "x")?;
        let [n1, n2, n3] = self.dims;
        let mut out = vec![FieldElem::ZERO; n2 * n3];
        for (i, &xi) in x.iter().enumerate().take(n1) {
            if xi.is_zero() {
                continue;
            }
            let block = &self.entries[i * n2 * n3..(i + 1) * n2 * n3];
            for (o, &a) in out.iter_mut().zip(block) {
                *o = field.mul_add(*o, xi, a);
            }
        }
        Matrix::from_vec(n2, n3, out)
    }

    /// The x-axis slice `A_i`.
    pub fn slice(&self, i: usize) -> Matrix {
        let [_, n2, n3] = self.dims;
        Matrix::from_vec(n2, n3, self.entries[i * n2 * n3..(i + 1) * n2 * n3].to_vec()).unwrap()
    }

    pub fn slices(&self) -> Vec<Matrix> {
        (0..self.dims[0]).map(|i| self.slice(i)).collect()
    }

    /// Reorders axes so that new axis `a` is old axis `perm[a]`.
    pub fn permute(&self, perm: [usize; 3]) -> Tensor3 {
        let mut sorted = perm;
        sorted.sort_unstable();
        assert_eq!(sorted, [0, 1, 2], "not a permutation: {perm:?}");
        let dims = [self.dims[perm[0]], self.dims[perm[1]], self.dims[perm[2]]];
        Tensor3::from_fn(&self.field, dims, |a, b, c| {
            let mut old = [0; 3];
            old[perm[0]] = a;
            old[perm[1]] = b;
            old[perm[2]] = c;
            self.get(old[0], old[1], old[2])
        })
    }

    /// Cyclic rotation bringing `axis` to the front: y gives `(y, z, x)` and
    /// z gives `(z, x, y)`.
    pub fn rotate_to_front(&self, axis: Axis) -> Tensor3 {
        match axis {
            Axis::X => self.clone(),
            Axis::Y => self.permute([1, 2, 0]),
            Axis::Z => self.permute([2, 0, 1]),
        }
    }

    /// Span of the slices along `axis`, keeping independent slices in order.
    pub fn slice_space(&self, axis: Axis) -> MatrixSpace {
        let t = self.rotate_to_front(axis);
        MatrixSpace::span(&t.field, (t.dims[1], t.dims[2]), &t.slices()).expect("slice shapes agree")
    }

    /// Acts with an invertible `M` on one axis: for the x axis the result
    /// satisfies `T'(x, y, z) = T(M^T x, y, z)`, i.e. `A'_i = sum_l M_il A_l`.
    pub fn gl_act(&self, axis: Axis, m: &Matrix) -> Result<Tensor3> {
        let n = self.dims[axis.index()];
        if m.rows() != n || m.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix on an axis of length {n}",
                m.rows(),
                m.cols()
            )));
        }
        if m.data().iter().any(|&a| !self.field.contains(a)) {
            return Err(Error::FieldMismatch);
        }
        if linalg::rank(&self.field, m) < n {
            return Err(Error::SingularMatrix);
        }
        let f = &self.field;
        Ok(Tensor3::from_fn(f, self.dims, |i, j, k| {
            let idx = [i, j, k];
            let a = axis.index();
            (0..n).fold(FieldElem::ZERO, |acc, l| {
                let mut src = idx;
                src[a] = l;
                f.mul_add(acc, m.get(idx[a], l), self.get(src[0], src[1], src[2]))
            })
        }))
    }

    /// Block-diagonal sum.
    pub fn direct_sum(&self, other: &Tensor3) -> Result<Tensor3> {
        if self.field != other.field {
            return Err(Error::FieldMismatch);
        }
        let [a1, a2, a3] = self.dims;
        let [b1, b2, b3] = other.dims;
        let mut t = Tensor3::zeros(&self.field, [a1 + b1, a2 + b2, a3 + b3]);
        for i in 0..a1 {
            for j in 0..a2 {
                for k in 0..a3 {
                    t.set(i, j, k, self.get(i, j, k));
                }
            }
        }
        for i in 0..b1 {
            for j in 0..b2 {
                for k in 0..b3 {
                    t.set(a1 + i, a2 + j, a3 + k, other.get(i, j, k));
                }
            }
        }
        Ok(t)
    }

    /// Entrywise `self - other`.
    pub fn sub(&self, other: &Tensor3) -> Result<Tensor3> {
        if self.field != other.field {
            return Err(Error::FieldMismatch);
        }
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch("tensor difference".into()));
        }
        let f = &self.field;
        Ok(Tensor3 {
            field: f.clone(),
            dims: self.dims,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| f.sub(a, b))
                .collect(),
        })
    }

    /// The same tensor viewed over an extension of its (prime) field.
    pub fn lift(&self, target: &Field) -> Result<Tensor3> {
        if !self.field.can_embed_into(target) {
            return Err(Error::FieldMismatch);
        }
        Ok(Tensor3 {
            field: target.clone(),
            dims: self.dims,
            entries: self.entries.clone(),
        })
    }

    /// Sets every entry of the x-axis slice `i` to zero.
    pub fn zero_slice(&self, axis: Axis, index: usize) -> Tensor3 {
        let mut t = self.clone();
        let [n1, n2, n3] = self.dims;
        for i in 0..n1 {
            for j in 0..n2 {
                for k in 0..n3 {
                    if [i, j, k][axis.index()] == index {
                        t.set(i, j, k, FieldElem::ZERO);
                    }
                }
            }
        }
        t
    }

    // --- generators ---------------------------------------------------------

    /// The identity tensor `I_n`: `a_iii = 1`.
    pub fn identity(field: &Field, n: usize) -> Tensor3 {
        Tensor3::diagonal(field, &vec![FieldElem::ONE; n])
    }

    pub fn diagonal(field: &Field, values: &[FieldElem]) -> Tensor3 {
        let n = values.len();
        let mut t = Tensor3::zeros(field, [n, n, n]);
        for (i, &v) in values.iter().enumerate() {
            t.set(i, i, i, v);
        }
        t
    }

    /// The 3x3x3 Levi-Civita tensor, whose trilinear form is the 3x3
    /// determinant and whose bilinear map is the cross product.
    pub fn levi_civita(field: &Field) -> Tensor3 {
        Tensor3::from_fn(field, [3, 3, 3], |i, j, k| {
            if i == j || j == k || i == k {
                FieldElem::ZERO
            } else if (j + 3 - i) % 3 == 1 {
                FieldElem::ONE
            } else {
                field.from_int(-1)
            }
        })
    }

    /// `T_k`, the k-fold direct sum of the Levi-Civita tensor.
    pub fn tk_family(field: &Field, k: usize) -> Tensor3 {
        let eps = Tensor3::levi_civita(field);
        (0..k).fold(Tensor3::zeros(field, [0, 0, 0]), |acc, _| acc.direct_sum(&eps).unwrap())
    }

    /// Uniformly random entries from a seeded ChaCha8 stream.
    pub fn random(field: &Field, dims: [usize; 3], seed: u64) -> Tensor3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor3::random_with(field, dims, &mut rng)
    }

    pub fn random_with<R: Rng>(field: &Field, dims: [usize; 3], rng: &mut R) -> Tensor3 {
        let q = field.order() as usize;
        let n: usize = dims.iter().product();
        let entries = (0..n).map(|_| field.elem(rng.gen_range(0..q))).collect();
        Tensor3 {
            field: field.clone(),
            dims,
            entries,
        }
    }
}

/// Named tensor families.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Generator {
    Identity { n: usize },
    LeviCivita,
    Diagonal { values: Vec<i64> },
    Random { dims: [usize; 3], seed: u64 },
    TkFamily { k: usize },
}

impl Generator {
    pub fn build(&self, field: &Field) -> Result<Tensor3> {
        match self {
            Generator::Identity { n } => Ok(Tensor3::identity(field, *n)),
            Generator::LeviCivita => Ok(Tensor3::levi_civita(field)),
            Generator::Diagonal { values } => {
                let v: Vector = values.iter().map(|&x| field.from_int(x)).collect();
                Ok(Tensor3::diagonal(field, &v))
            }
            Generator::Random { dims, seed } => {
                if dims.iter().any(|&d| d > 8) {
                    return Err(Error::BadParams("random tensors are limited to 8 per axis".into()));
                }
                Ok(Tensor3::random(field, *dims, *seed))
            }
            Generator::TkFamily { k } => {
                if *k == 0 {
                    return Err(Error::BadParams("tk_family needs k >= 1".into()));
                }
                Ok(Tensor3::tk_family(field, *k))
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Generator::Identity { n } => format!("identity_{n}"),
            Generator::LeviCivita => "levi_civita".into(),
            Generator::Diagonal { values } => format!(
                "diagonal_{}",
                values.iter().map(i64::to_string).collect::<Vec<_>>().join("_")
            ),
            Generator::Random { dims, seed } => format!("random_{}x{}x{}_{seed}", dims[0], dims[1], dims[2]),
            Generator::TkFamily { k } => format!("t_{k}"),
        }
    }
}

/// One slice-rank-one summand: `linear(u) * bilinear(v, w)` where `u` is the
/// `direction` variable group and `(v, w)` are the remaining two in order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SliceTerm {
    pub direction: Axis,
    pub linear: Vector,
    pub bilinear: Matrix,
}

impl SliceTerm {
    pub fn check_shape(&self, dims: [usize; 3]) -> bool {
        let [n1, n2, n3] = dims;
        let (len, shape) = match self.direction {
            Axis::X => (n1, (n2, n3)),
            Axis::Y => (n2, (n1, n3)),
            Axis::Z => (n3, (n1, n2)),
        };
        self.linear.len() == len && self.bilinear.shape() == shape
    }

    /// Coefficient tensor of the term.
    pub fn to_tensor(&self, field: &Field, dims: [usize; 3]) -> Result<Tensor3> {
        if !self.check_shape(dims) {
            return Err(Error::DimensionMismatch("slice term shape".into()));
        }
        let (l, b) = (&self.linear, &self.bilinear);
        Ok(Tensor3::from_fn(field, dims, |i, j, k| match self.direction {
            Axis::X => field.mul(l[i], b.get(j, k)),
            Axis::Y => field.mul(l[j], b.get(i, k)),
            Axis::Z => field.mul(l[k], b.get(i, j)),
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f3() -> Field {
        Field::new(3, 1).unwrap()
    }

    fn v(f: &Field, xs: &[i64]) -> Vector {
        xs.iter().map(|&x| f.from_int(x)).collect()
    }

    #[test]
    fn levi_civita_eval() {
        let f = f3();
        let eps = Tensor3::levi_civita(&f);
        let e = |i| {
            let mut x = vec![FieldElem::ZERO; 3];
            x[i] = FieldElem::ONE;
            x
        };
        assert_eq!(eps.eval_trilinear(&e(0), &e(1), &e(2)).unwrap(), FieldElem::ONE);
        assert_eq!(eps.support().len(), 6);
        // det [[1,1,0],[0,1,1],[1,0,1]] = 1*(1-0) - 1*(0-1) + 0 = 2
        let val = eps
            .eval_trilinear(&v(&f, &[1, 1, 0]), &v(&f, &[0, 1, 1]), &v(&f, &[1, 0, 1]))
            .unwrap();
        assert_eq!(val, f.from_int(2));
        let zero = vec![FieldElem::ZERO; 3];
        assert!(eps.eval_trilinear(&zero, &e(1), &e(2)).unwrap().is_zero());
    }

    #[test]
    fn contraction_examples() {
        let f = f3();
        let eps = Tensor3::levi_civita(&f);
        let m = eps.contract_x(&v(&f, &[1, 0, 0])).unwrap();
        assert_eq!(m, Matrix::from_ints(&f, &[&[0, 0, 0], &[0, 0, 1], &[0, 2, 0]]));
        let i3 = Tensor3::identity(&f, 3);
        assert_eq!(
            i3.contract_x(&v(&f, &[1, 2, 0])).unwrap(),
            Matrix::from_ints(&f, &[&[1, 0, 0], &[0, 2, 0], &[0, 0, 0]])
        );
        assert!(eps.contract_x(&v(&f, &[0, 0, 0])).unwrap().is_zero());
        assert!(matches!(eps.contract_x(&v(&f, &[1, 0])), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn slice_space_examples() {
        let f = f3();
        assert_eq!(Tensor3::identity(&f, 3).slice_space(Axis::X).dim(), 3);
        assert_eq!(Tensor3::zeros(&f, [2, 3, 4]).slice_space(Axis::Y).dim(), 0);
        let eps = Tensor3::levi_civita(&f);
        let l = eps.slice_space(Axis::X);
        assert_eq!(l.dim(), 3);
        assert!(l.basis().iter().all(|m| m.transpose() == m.scale(&f, f.from_int(-1))));
    }

    #[test]
    fn gl_action_examples() {
        let f = f3();
        let i2 = Tensor3::identity(&f, 2);
        assert_eq!(i2.gl_act(Axis::X, &Matrix::identity(2)).unwrap(), i2);
        let swap = Matrix::from_ints(&f, &[&[0, 1], &[1, 0]]);
        let t = i2.gl_act(Axis::X, &swap).unwrap();
        assert_eq!(t.support(), vec![[0, 1, 1], [1, 0, 0]]);
        let sing = Matrix::from_ints(&f, &[&[1, 1], &[1, 1]]);
        assert_eq!(i2.gl_act(Axis::Y, &sing), Err(Error::SingularMatrix));
    }

    #[test]
    fn direct_sums() {
        let f = f3();
        let eps = Tensor3::levi_civita(&f);
        assert_eq!(eps.direct_sum(&Tensor3::zeros(&f, [0, 0, 0])).unwrap(), eps);
        let t2 = eps.direct_sum(&eps).unwrap();
        assert_eq!(t2.dims(), [6, 6, 6]);
        assert_eq!(t2, Tensor3::tk_family(&f, 2));
        let i5 = Tensor3::identity(&f, 2).direct_sum(&Tensor3::identity(&f, 3)).unwrap();
        assert_eq!(i5, Tensor3::identity(&f, 5));
        let f5 = Field::new(5, 1).unwrap();
        assert_eq!(eps.direct_sum(&Tensor3::identity(&f5, 1)), Err(Error::FieldMismatch));
    }

    #[test]
    fn generators() {
        let f = f3();
        assert_eq!(Generator::Identity { n: 3 }.build(&f).unwrap().support().len(), 3);
        assert_eq!(Generator::TkFamily { k: 2 }.build(&f).unwrap().dims(), [6, 6, 6]);
        assert!(Generator::TkFamily { k: 0 }.build(&f).is_err());
        let a = Generator::Random { dims: [3, 3, 3], seed: 9 }.build(&f).unwrap();
        let b = Tensor3::random(&f, [3, 3, 3], 9);
        assert_eq!(a, b);
        let g: Generator = serde_json::from_str(r#"{"name":"levi_civita"}"#).unwrap();
        assert_eq!(g, Generator::LeviCivita);
    }

    #[test]
    fn slice_term_tensor() {
        let f = f3();
        let term = SliceTerm {
            direction: Axis::Y,
            linear: v(&f, &[1, 2]),
            bilinear: Matrix::from_ints(&f, &[&[1, 0], &[0, 1]]),
        };
        let t = term.to_tensor(&f, [2, 2, 2]).unwrap();
        assert_eq!(t.get(0, 1, 0), f.from_int(2));
        assert_eq!(t.get(1, 0, 1), f.from_int(1));
        assert!(term.to_tensor(&f, [2, 3, 2]).is_err());
    }
}

//! Dense linear algebra over a [`Field`]: matrices, elimination, kernels,
//! and linear spaces of matrices.

use crate::error::{Error, Result};
use crate::ffield::{Field, FieldElem};

pub type Vector = Vec<FieldElem>;

/// A dense row-major matrix. The field is passed to each operation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<FieldElem>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![FieldElem::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Matrix {
        Matrix::from_fn(n, n, |i, j| if i == j { FieldElem::ONE } else { FieldElem::ZERO })
    }

    /// The elementary matrix `E_ab`.
    pub fn unit(rows: usize, cols: usize, a: usize, b: usize) -> Matrix {
        let mut m = Matrix::zeros(rows, cols);
        m.set(a, b, FieldElem::ONE);
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> FieldElem) -> Matrix {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<FieldElem>) -> Result<Matrix> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vector]) -> Result<Matrix> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    /// Convenience constructor from small integers reduced into `field`.
    pub fn from_ints(field: &Field, rows: &[&[i64]]) -> Matrix {
        let r: Vec<Vector> = rows
            .iter()
            .map(|row| row.iter().map(|&v| field.from_int(v)).collect())
            .collect();
        Matrix::from_rows(&r).expect("rectangular literal")
    }

    /// `u v^T`.
    pub fn outer(field: &Field, u: &[FieldElem], v: &[FieldElem]) -> Matrix {
        Matrix::from_fn(u.len(), v.len(), |i, j| field.mul(u[i], v[j]))
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> FieldElem {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: FieldElem) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[FieldElem] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vector {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn data(&self) -> &[FieldElem] {
        &self.data
    }

    pub fn into_data(self) -> Vec<FieldElem> {
        self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|a| a.is_zero())
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn mul(&self, field: &Field, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Matrix::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).fold(FieldElem::ZERO, |acc, t| {
                field.mul_add(acc, self.get(i, t), other.get(t, j))
            })
        }))
    }

    pub fn add(&self, field: &Field, other: &Matrix) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch("matrix sum".into()));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| field.add(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, field: &Field, c: FieldElem) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| field.mul(c, a)).collect(),
        }
    }

    /// `self += c * other`, shapes assumed equal.
    pub fn add_scaled(&mut self, field: &Field, c: FieldElem, other: &Matrix) {
        debug_assert_eq!(self.shape(), other.shape());
        if c.is_zero() {
            return;
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = field.mul_add(*a, c, b);
        }
    }

    /// `M v`.
    pub fn apply(&self, field: &Field, v: &[FieldElem]) -> Vector {
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(FieldElem::ZERO, |acc, (&a, &b)| field.mul_add(acc, a, b))
            })
            .collect()
    }

    /// `u^T M v`.
    pub fn bilinear(&self, field: &Field, u: &[FieldElem], v: &[FieldElem]) -> FieldElem {
        dot(field, u, &self.apply(field, v))
    }
}

pub fn dot(field: &Field, u: &[FieldElem], v: &[FieldElem]) -> FieldElem {
    u.iter()
        .zip(v)
        .fold(FieldElem::ZERO, |acc, (&a, &b)| field.mul_add(acc, a, b))
}

/// Reduces `m` to reduced row echelon form in place; returns pivot columns.
pub fn rref(field: &Field, m: &mut Matrix) -> Vec<usize> {
    let (rows, cols) = m.shape();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(pr) = (r..rows).find(|&i| !m.get(i, c).is_zero()) else {
            continue;
        };
        if pr != r {
            for j in 0..cols {
                m.data.swap(pr * cols + j, r * cols + j);
            }
        }
        let inv = field.inv(m.get(r, c)).expect("pivot is nonzero");
        for j in c..cols {
            let v = field.mul(inv, m.get(r, j));
            m.set(r, j, v);
        }
        for i in 0..rows {
            if i == r {
                continue;
            }
            let f = m.get(i, c);
            if f.is_zero() {
                continue;
            }
            let nf = field.neg(f);
            for j in c..cols {
                let v = field.mul_add(m.get(i, j), nf, m.get(r, j));
                m.set(i, j, v);
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Rank of a row-major `rows x cols` buffer, destroying it. This is the hot
/// path of the stratum counters, so it avoids back-substitution.
pub fn rank_in_place(field: &Field, data: &mut [FieldElem], rows: usize, cols: usize) -> usize {
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(pr) = (r..rows).find(|&i| !data[i * cols + c].is_zero()) else {
            continue;
        };
        if pr != r {
            for j in c..cols {
                data.swap(pr * cols + j, r * cols + j);
            }
        }
        let ninv = field.neg(field.inv(data[r * cols + c]).expect("nonzero pivot"));
        for i in r + 1..rows {
            let f = data[i * cols + c];
            if f.is_zero() {
                continue;
            }
            let s = field.mul(f, ninv);
            for j in c..cols {
                data[i * cols + j] = field.mul_add(data[i * cols + j], s, data[r * cols + j]);
            }
        }
        r += 1;
    }
    r
}

pub fn rank(field: &Field, m: &Matrix) -> usize {
    let mut buf = m.data.clone();
    rank_in_place(field, &mut buf, m.rows, m.cols)
}

/// Basis of the right kernel `{v : M v = 0}`, one vector per free column.
pub fn null_space(field: &Field, m: &Matrix) -> Vec<Vector> {
    let mut r = m.clone();
    let pivots = rref(field, &mut r);
    let free: Vec<usize> = (0..m.cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![FieldElem::ZERO; m.cols];
            v[f] = FieldElem::ONE;
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = field.neg(r.get(row, f));
            }
            v
        })
        .collect()
}

/// The lexicographically least solution of `A x = b` (elements ordered by
/// packed index), or `None` when the system is inconsistent.
///
/// Eliminating with the columns reversed expresses every pivot unknown in
/// terms of earlier free unknowns, so setting all free unknowns to zero picks
/// the smallest feasible value coordinate by coordinate.
pub fn solve_lex_first(field: &Field, a: &Matrix, b: &[FieldElem]) -> Option<Vector> {
    let n = a.cols;
    let mut aug = Matrix::from_fn(a.rows, n + 1, |i, j| {
        if j < n {
            a.get(i, n - 1 - j)
        } else {
            b[i]
        }
    });
    let pivots = rref(field, &mut aug);
    if pivots.last() == Some(&n) {
        return None;
    }
    let mut x = vec![FieldElem::ZERO; n];
    for (row, &pc) in pivots.iter().enumerate() {
        x[n - 1 - pc] = aug.get(row, n);
    }
    Some(x)
}

pub fn inverse(field: &Field, m: &Matrix) -> Result<Matrix> {
    if m.rows != m.cols {
        return Err(Error::DimensionMismatch("inverse of a non-square matrix".into()));
    }
    let n = m.rows;
    let mut aug = Matrix::from_fn(n, 2 * n, |i, j| {
        if j < n {
            m.get(i, j)
        } else if j - n == i {
            FieldElem::ONE
        } else {
            FieldElem::ZERO
        }
    });
    let pivots = rref(field, &mut aug);
    if pivots.len() < n || pivots[n - 1] >= n {
        return Err(Error::SingularMatrix);
    }
    Ok(Matrix::from_fn(n, n, |i, j| aug.get(i, n + j)))
}

/// Incremental row echelon form for independence tests and coordinates.
#[derive(Clone, Debug)]
pub struct Echelon {
    len: usize,
    rows: Vec<(usize, Vector)>,
}

impl Echelon {
    pub fn new(len: usize) -> Self {
        Echelon { len, rows: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, field: &Field, mut v: Vector) -> Vector {
        for (p, row) in &self.rows {
            let f = v[*p];
            if !f.is_zero() {
                let nf = field.neg(f);
                for (a, &b) in v.iter_mut().zip(row) {
                    *a = field.mul_add(*a, nf, b);
                }
            }
        }
        v
    }

    pub fn contains(&self, field: &Field, v: &[FieldElem]) -> bool {
        self.reduce(field, v.to_vec()).iter().all(|a| a.is_zero())
    }

    /// Adds `v` if it is independent of the current rows.
    pub fn insert(&mut self, field: &Field, v: &[FieldElem]) -> bool {
        debug_assert_eq!(v.len(), self.len);
        let mut v = self.reduce(field, v.to_vec());
        let Some(p) = v.iter().position(|a| !a.is_zero()) else {
            return false;
        };
        let inv = field.inv(v[p]).unwrap();
        v.iter_mut().for_each(|a| *a = field.mul(inv, *a));
        // keep existing rows reduced at the new pivot
        let nv = v.clone();
        for (_, row) in &mut self.rows {
            let f = row[p];
            if !f.is_zero() {
                let nf = field.neg(f);
                for (a, &b) in row.iter_mut().zip(&nv) {
                    *a = field.mul_add(*a, nf, b);
                }
            }
        }
        self.rows.push((p, v));
        true
    }

    pub fn basis(&self) -> Vec<Vector> {
        let mut rows = self.rows.clone();
        rows.sort_by_key(|(p, _)| *p);
        rows.into_iter().map(|(_, v)| v).collect()
    }
}

/// Reduced echelon basis of the span of `vectors` in `F^len`.
pub fn span_basis(field: &Field, vectors: &[Vector], len: usize) -> Vec<Vector> {
    let mut e = Echelon::new(len);
    for v in vectors {
        e.insert(field, v);
    }
    e.basis()
}

/// Basis of `span(a) ∩ span(b)`; inputs must be independent families.
pub fn intersect(field: &Field, a: &[Vector], b: &[Vector], len: usize) -> Vec<Vector> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    // columns: a_1..a_s, -b_1..-b_t ; kernel vectors give sum alpha_i a_i
    let s = a.len();
    let m = Matrix::from_fn(len, s + b.len(), |i, j| {
        if j < s {
            a[j][i]
        } else {
            field.neg(b[j - s][i])
        }
    });
    let combos: Vec<Vector> = null_space(field, &m)
        .into_iter()
        .map(|k| {
            let mut v = vec![FieldElem::ZERO; len];
            for (alpha, vec) in k[..s].iter().zip(a) {
                for (x, &y) in v.iter_mut().zip(vec) {
                    *x = field.mul_add(*x, *alpha, y);
                }
            }
            v
        })
        .collect();
    span_basis(field, &combos, len)
}

/// A linear subspace of `m x n` matrices with an independent basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixSpace {
    field: Field,
    shape: (usize, usize),
    basis: Vec<Matrix>,
}

impl MatrixSpace {
    /// Span of `mats`, keeping the first independent members in order.
    pub fn span(field: &Field, shape: (usize, usize), mats: &[Matrix]) -> Result<MatrixSpace> {
        let mut e = Echelon::new(shape.0 * shape.1);
        let mut basis = Vec::new();
        for m in mats {
            if m.shape() != shape {
                return Err(Error::DimensionMismatch("matrix space member shape".into()));
            }
            if e.insert(field, m.data()) {
                basis.push(m.clone());
            }
        }
        Ok(MatrixSpace {
            field: field.clone(),
            shape,
            basis,
        })
    }

    pub fn zero(field: &Field, shape: (usize, usize)) -> MatrixSpace {
        MatrixSpace {
            field: field.clone(),
            shape,
            basis: Vec::new(),
        }
    }

    pub fn full(field: &Field, shape: (usize, usize)) -> MatrixSpace {
        let (m, n) = shape;
        let basis = (0..m * n).map(|t| Matrix::unit(m, n, t / n, t % n)).collect();
        MatrixSpace {
            field: field.clone(),
            shape,
            basis,
        }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Matrix] {
        &self.basis
    }

    fn echelon(&self) -> Echelon {
        let mut e = Echelon::new(self.shape.0 * self.shape.1);
        for b in &self.basis {
            e.insert(&self.field, b.data());
        }
        e
    }

    pub fn contains(&self, m: &Matrix) -> bool {
        m.shape() == self.shape && self.echelon().contains(&self.field, m.data())
    }

    /// Coordinates of `m` in this space's basis, if `m` lies in it.
    pub fn coordinates(&self, m: &Matrix) -> Option<Vector> {
        if m.shape() != self.shape {
            return None;
        }
        let len = self.shape.0 * self.shape.1;
        let a = Matrix::from_fn(len, self.dim(), |i, j| self.basis[j].data()[i]);
        solve_lex_first(&self.field, &a, m.data())
    }

    /// The matrix `sum c_j B_j`.
    pub fn combine(&self, coeffs: &[FieldElem]) -> Matrix {
        let mut out = Matrix::zeros(self.shape.0, self.shape.1);
        for (c, b) in coeffs.iter().zip(&self.basis) {
            out.add_scaled(&self.field, *c, b);
        }
        out
    }

    pub fn intersect(&self, other: &MatrixSpace) -> Result<MatrixSpace> {
        if self.shape != other.shape || self.field != other.field {
            return Err(Error::DimensionMismatch("intersecting unlike spaces".into()));
        }
        let len = self.shape.0 * self.shape.1;
        let a: Vec<Vector> = self.basis.iter().map(|m| m.data().to_vec()).collect();
        let b: Vec<Vector> = other.basis.iter().map(|m| m.data().to_vec()).collect();
        let mats: Vec<Matrix> = intersect(&self.field, &a, &b, len)
            .into_iter()
            .map(|v| Matrix::from_vec(self.shape.0, self.shape.1, v).unwrap())
            .collect();
        MatrixSpace::span(&self.field, self.shape, &mats)
    }

    /// Members of `sup`'s basis, in order, that extend this space's basis to
    /// a basis of `sup`. `self` must be contained in `sup`.
    pub fn complement_in(&self, sup: &MatrixSpace) -> Vec<Matrix> {
        let mut e = self.echelon();
        sup.basis
            .iter()
            .filter(|b| e.insert(&self.field, b.data()))
            .cloned()
            .collect()
    }

    pub fn same_space(&self, other: &MatrixSpace) -> bool {
        self.shape == other.shape
            && self.dim() == other.dim()
            && other.basis.iter().all(|b| self.contains(b))
    }

    /// The same span over an extension field.
    pub fn lift(&self, target: &Field) -> Result<MatrixSpace> {
        if !self.field.can_embed_into(target) {
            return Err(Error::FieldMismatch);
        }
        Ok(MatrixSpace {
            field: target.clone(),
            shape: self.shape,
            basis: self.basis.clone(),
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
    fn rank_and_rref() {
        let f = f3();
        let m = Matrix::from_ints(&f, &[&[1, 2, 0], &[2, 1, 0], &[0, 0, 1]]);
        // rows 1 and 2 are proportional mod 3
        assert_eq!(rank(&f, &m), 2);
        let mut r = m.clone();
        assert_eq!(rref(&f, &mut r), vec![0, 2]);
    }

    #[test]
    fn inverse_roundtrip() {
        let f = f3();
        let m = Matrix::from_ints(&f, &[&[1, 1], &[0, 2]]);
        let inv = inverse(&f, &m).unwrap();
        assert_eq!(m.mul(&f, &inv).unwrap(), Matrix::identity(2));
        let s = Matrix::from_ints(&f, &[&[1, 2], &[2, 1]]);
        assert_eq!(inverse(&f, &s), Err(Error::SingularMatrix));
    }

    #[test]
    fn null_space_is_kernel() {
        let f = f3();
        let m = Matrix::from_ints(&f, &[&[1, 1, 1], &[0, 1, 2]]);
        let ns = null_space(&f, &m);
        assert_eq!(ns.len(), 1);
        assert!(m.apply(&f, &ns[0]).iter().all(|a| a.is_zero()));
    }

    #[test]
    fn lex_first_solution() {
        let f = f3();
        // x0 + x1 = 1: lex-least solution is (0, 1)
        let a = Matrix::from_ints(&f, &[&[1, 1]]);
        assert_eq!(solve_lex_first(&f, &a, &[FieldElem::ONE]), Some(vec![FieldElem::ZERO, FieldElem::ONE]));
        let a = Matrix::from_ints(&f, &[&[1, 0], &[1, 0]]);
        assert_eq!(solve_lex_first(&f, &a, &[FieldElem::ONE, FieldElem::ZERO]), None);
    }

    #[test]
    fn intersection_of_planes() {
        let f = f3();
        let e = |v: &[i64]| v.iter().map(|&x| f.from_int(x)).collect::<Vector>();
        let a = vec![e(&[1, 0, 0]), e(&[0, 1, 0])];
        let b = vec![e(&[0, 1, 0]), e(&[0, 0, 1])];
        let i = intersect(&f, &a, &b, 3);
        assert_eq!(i, vec![e(&[0, 1, 0])]);
    }

    #[test]
    fn matrix_space_ops() {
        let f = f3();
        let full = MatrixSpace::full(&f, (2, 2));
        let diag = MatrixSpace::span(
            &f,
            (2, 2),
            &[Matrix::unit(2, 2, 0, 0), Matrix::unit(2, 2, 1, 1), Matrix::identity(2)],
        )
        .unwrap();
        assert_eq!(diag.dim(), 2);
        assert!(diag.contains(&Matrix::identity(2)));
        assert!(!diag.contains(&Matrix::unit(2, 2, 0, 1)));
        assert_eq!(diag.complement_in(&full).len(), 2);
        let c = diag.coordinates(&Matrix::from_ints(&f, &[&[2, 0], &[0, 1]])).unwrap();
        assert_eq!(c, vec![f.from_int(2), f.from_int(1)]);
        assert_eq!(diag.intersect(&full).unwrap().dim(), 2);
    }
}

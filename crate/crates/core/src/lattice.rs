//! Exact integer lattice arithmetic.
//!
//! Everything here is arbitrary precision. Matrices are row-major and a
//! lattice is always the row span of a matrix.

use std::fmt;
use std::ops::{Add, Index, Neg, Sub};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// A vector of a lattice `Z^n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntegerVector(Vec<BigInt>);

impl IntegerVector {
    pub fn new(entries: Vec<BigInt>) -> Self {
        IntegerVector(entries)
    }

    pub fn from_i64s(entries: &[i64]) -> Self {
        IntegerVector(entries.iter().map(|&e| BigInt::from(e)).collect())
    }

    pub fn zero(rank: usize) -> Self {
        IntegerVector(vec![BigInt::zero(); rank])
    }

    /// The `i`-th standard basis vector (0-based).
    pub fn unit(rank: usize, i: usize) -> Self {
        let mut v = Self::zero(rank);
        v.0[i] = BigInt::one();
        v
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.0
    }

    pub fn into_entries(self) -> Vec<BigInt> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn dot(&self, other: &IntegerVector) -> BigInt {
        debug_assert_eq!(self.rank(), other.rank());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&self, k: &BigInt) -> IntegerVector {
        IntegerVector(self.0.iter().map(|e| e * k).collect())
    }

    /// Gcd of the entries; zero for the zero vector.
    pub fn content(&self) -> BigInt {
        self.0.iter().fold(BigInt::zero(), |g, e| g.gcd(e))
    }

    pub fn is_primitive(&self) -> bool {
        self.content().is_one()
    }
}

impl Index<usize> for IntegerVector {
    type Output = BigInt;
    fn index(&self, i: usize) -> &BigInt {
        &self.0[i]
    }
}

impl Add for &IntegerVector {
    type Output = IntegerVector;
    fn add(self, rhs: &IntegerVector) -> IntegerVector {
        IntegerVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &IntegerVector {
    type Output = IntegerVector;
    fn sub(self, rhs: &IntegerVector) -> IntegerVector {
        IntegerVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &IntegerVector {
    type Output = IntegerVector;
    fn neg(self) -> IntegerVector {
        IntegerVector(self.0.iter().map(|a| -a).collect())
    }
}

impl fmt::Display for IntegerVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// A rectangular integer matrix stored as rows.
#[derive(Clone, Debug)]
pub struct IntegerMatrix {
    rows: Vec<IntegerVector>,
    ncols: usize,
    rank: OnceLock<usize>,
}

impl PartialEq for IntegerMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.ncols == other.ncols && self.rows == other.rows
    }
}

impl Eq for IntegerMatrix {}

impl IntegerMatrix {
    /// Builds a matrix from rows of equal length. `ncols` is only consulted
    /// when `rows` is empty.
    pub fn from_rows(rows: Vec<IntegerVector>, ncols: usize) -> Result<Self> {
        let ncols = rows.first().map_or(ncols, IntegerVector::rank);
        if rows.iter().any(|r| r.rank() != ncols) {
            return Err(Error::Dimension("rows of unequal length".into()));
        }
        Ok(IntegerMatrix {
            rows,
            ncols,
            rank: OnceLock::new(),
        })
    }

    pub fn from_i64s(rows: &[&[i64]]) -> Result<Self> {
        let ncols = rows.first().map_or(0, |r| r.len());
        Self::from_rows(rows.iter().map(|r| IntegerVector::from_i64s(r)).collect(), ncols)
    }

    fn from_raw(raw: Vec<Vec<BigInt>>, ncols: usize) -> Self {
        IntegerMatrix {
            rows: raw.into_iter().map(IntegerVector).collect(),
            ncols,
            rank: OnceLock::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_raw(
            (0..n).map(|i| IntegerVector::unit(n, i).0).collect(),
            n,
        )
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols
    }

    pub fn rows(&self) -> &[IntegerVector] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &IntegerVector {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.rows[i].0[j]
    }

    fn raw(&self) -> Vec<Vec<BigInt>> {
        self.rows.iter().map(|r| r.0.clone()).collect()
    }

    pub fn transpose(&self) -> IntegerMatrix {
        let raw = (0..self.ncols)
            .map(|j| self.rows.iter().map(|r| r.0[j].clone()).collect())
            .collect();
        Self::from_raw(raw, self.nrows())
    }

    pub fn mul(&self, other: &IntegerMatrix) -> Result<IntegerMatrix> {
        if self.ncols != other.nrows() {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.nrows(),
                self.ncols,
                other.nrows(),
                other.ncols
            )));
        }
        let raw = self
            .rows
            .iter()
            .map(|r| {
                (0..other.ncols)
                    .map(|j| {
                        r.0.iter()
                            .zip(&other.rows)
                            .map(|(a, orow)| a * &orow.0[j])
                            .sum()
                    })
                    .collect()
            })
            .collect();
        Ok(Self::from_raw(raw, other.ncols))
    }

    /// Row vector times matrix.
    pub fn left_mul_vector(&self, v: &IntegerVector) -> IntegerVector {
        debug_assert_eq!(v.rank(), self.nrows());
        let mut out = IntegerVector::zero(self.ncols);
        for (c, row) in v.0.iter().zip(&self.rows) {
            for (o, e) in out.0.iter_mut().zip(&row.0) {
                *o += c * e;
            }
        }
        out
    }

    /// Rank of the row lattice, computed on first use.
    pub fn rank(&self) -> usize {
        *self
            .rank
            .get_or_init(|| hermite_normal_form(self).nrows())
    }

    /// Square submatrix keeping the given rows and columns.
    pub fn minor(&self, rows: &[usize], cols: &[usize]) -> IntegerMatrix {
        let raw = rows
            .iter()
            .map(|&i| cols.iter().map(|&j| self.rows[i].0[j].clone()).collect())
            .collect();
        Self::from_raw(raw, cols.len())
    }
}

impl fmt::Display for IntegerMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, r) in self.rows.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, "]")
    }
}

/// `left * input * right = diag(diagonal)` padded with zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithDecomposition {
    pub left: IntegerMatrix,
    pub diagonal: Vec<BigInt>,
    pub right: IntegerMatrix,
}

impl SmithDecomposition {
    /// Invariant factors greater than one, i.e. the divisor chain of the
    /// torsion part of the cokernel.
    pub fn torsion_chain(&self) -> Vec<BigInt> {
        self.diagonal
            .iter()
            .filter(|d| !d.is_zero() && !d.is_one())
            .cloned()
            .collect()
    }

    /// The diagonal matrix with the shape of the decomposed input.
    pub fn diagonal_matrix(&self) -> IntegerMatrix {
        let (r, c) = (self.left.nrows(), self.right.nrows());
        let mut raw = vec![vec![BigInt::zero(); c]; r];
        for (i, d) in self.diagonal.iter().enumerate() {
            raw[i][i] = d.clone();
        }
        IntegerMatrix::from_raw(raw, c)
    }
}

/// Exact determinant by fraction-free (Bareiss) elimination.
pub fn determinant(m: &IntegerMatrix) -> Result<BigInt> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "determinant of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(BigInt::one());
    }
    let mut a = m.raw();
    let mut negate = false;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    negate = !negate;
                }
                None => return Ok(BigInt::zero()),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    Ok(if negate { -d } else { d })
}

/// Classical adjugate: `m * adj(m) = det(m) * I`.
pub fn adjugate(m: &IntegerMatrix) -> Result<IntegerMatrix> {
    if !m.is_square() {
        return Err(Error::Dimension("adjugate of a non-square matrix".into()));
    }
    let n = m.nrows();
    if n == 1 {
        return Ok(IntegerMatrix::identity(1));
    }
    let mut raw = vec![vec![BigInt::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let rows: Vec<usize> = (0..n).filter(|&r| r != j).collect();
            let cols: Vec<usize> = (0..n).filter(|&c| c != i).collect();
            let d = determinant(&m.minor(&rows, &cols))?;
            raw[i][j] = if (i + j) % 2 == 0 { d } else { -d };
        }
    }
    Ok(IntegerMatrix::from_raw(raw, n))
}

/// Smith normal form with deterministic pivoting: at each stage the pivot is
/// the nonzero entry of least absolute value in the remaining block, ties
/// broken in row-major order.
pub fn smith_normal_form(m: &IntegerMatrix) -> SmithDecomposition {
    let (r, c) = (m.nrows(), m.ncols());
    let mut a = m.raw();
    let mut left = IntegerMatrix::identity(r).raw();
    let mut right = IntegerMatrix::identity(c).raw();

    let swap_cols = |mat: &mut Vec<Vec<BigInt>>, i: usize, j: usize| {
        for row in mat.iter_mut() {
            row.swap(i, j);
        }
    };
    // row_dst -= q * row_src
    let row_axpy = |mat: &mut Vec<Vec<BigInt>>, dst: usize, src: usize, q: &BigInt| {
        let (s, d) = if src < dst {
            let (lo, hi) = mat.split_at_mut(dst);
            (&lo[src], &mut hi[0])
        } else {
            let (lo, hi) = mat.split_at_mut(src);
            (&hi[0], &mut lo[dst])
        };
        for (x, y) in d.iter_mut().zip(s.iter()) {
            *x -= q * y;
        }
    };
    let col_axpy = |mat: &mut Vec<Vec<BigInt>>, dst: usize, src: usize, q: &BigInt| {
        for row in mat.iter_mut() {
            let y = row[src].clone();
            row[dst] -= q * y;
        }
    };

    let steps = r.min(c);
    let mut t = 0;
    'outer: while t < steps {
        loop {
            let mut pivot: Option<(usize, usize)> = None;
            for (i, row) in a.iter().enumerate().skip(t) {
                for (j, e) in row.iter().enumerate().skip(t) {
                    if e.is_zero() {
                        continue;
                    }
                    let better = match pivot {
                        None => true,
                        Some((pi, pj)) => e.abs() < a[pi][pj].abs(),
                    };
                    if better {
                        pivot = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = pivot else {
                break 'outer;
            };
            a.swap(t, pi);
            left.swap(t, pi);
            swap_cols(&mut a, t, pj);
            swap_cols(&mut right, t, pj);

            let mut dirty = false;
            for i in t + 1..r {
                if a[i][t].is_zero() {
                    continue;
                }
                let q = &a[i][t] / &a[t][t];
                row_axpy(&mut a, i, t, &q);
                row_axpy(&mut left, i, t, &q);
                dirty |= !a[i][t].is_zero();
            }
            for j in t + 1..c {
                if a[t][j].is_zero() {
                    continue;
                }
                let q = &a[t][j] / &a[t][t];
                col_axpy(&mut a, j, t, &q);
                col_axpy(&mut right, j, t, &q);
                dirty |= !a[t][j].is_zero();
            }
            if dirty {
                continue;
            }
            let offender = (t + 1..r).find(|&i| {
                (t + 1..c).any(|j| !(&a[i][j] % &a[t][t]).is_zero())
            });
            match offender {
                Some(i) => {
                    let minus_one = -BigInt::one();
                    row_axpy(&mut a, t, i, &minus_one);
                    row_axpy(&mut left, t, i, &minus_one);
                }
                None => break,
            }
        }
        if a[t][t].is_negative() {
            for x in a[t].iter_mut().chain(left[t].iter_mut()) {
                *x = -&*x;
            }
        }
        t += 1;
    }

    let diagonal = (0..steps).map(|i| a[i][i].clone()).collect();
    SmithDecomposition {
        left: IntegerMatrix::from_raw(left, r),
        diagonal,
        right: IntegerMatrix::from_raw(right, c),
    }
}

/// Row-style Hermite normal form of the row lattice: an upper echelon basis
/// with positive pivots and entries above each pivot reduced into
/// `[0, pivot)`. Zero rows are dropped.
pub fn hermite_normal_form(m: &IntegerMatrix) -> IntegerMatrix {
    let (r, c) = (m.nrows(), m.ncols());
    let mut a = m.raw();
    let mut p = 0;
    for col in 0..c {
        if p == r {
            break;
        }
        loop {
            let best = (p..r)
                .filter(|&i| !a[i][col].is_zero())
                .min_by(|&i, &j| a[i][col].abs().cmp(&a[j][col].abs()).then(i.cmp(&j)));
            let Some(best) = best else { break };
            a.swap(p, best);
            let mut clean = true;
            for i in p + 1..r {
                if a[i][col].is_zero() {
                    continue;
                }
                let q = &a[i][col] / &a[p][col];
                let pivot_row = a[p].clone();
                for (x, y) in a[i].iter_mut().zip(&pivot_row) {
                    *x -= &q * y;
                }
                clean &= a[i][col].is_zero();
            }
            if clean {
                break;
            }
        }
        if a[p][col].is_zero() {
            continue;
        }
        if a[p][col].is_negative() {
            for x in a[p].iter_mut() {
                *x = -&*x;
            }
        }
        let pivot_row = a[p].clone();
        for i in 0..p {
            let q = a[i][col].div_floor(&pivot_row[col]);
            if q.is_zero() {
                continue;
            }
            for (x, y) in a[i].iter_mut().zip(&pivot_row) {
                *x -= &q * y;
            }
        }
        p += 1;
    }
    a.truncate(p);
    IntegerMatrix::from_raw(a, c)
}

/// Divides out the gcd of the entries, preserving signs.
pub fn primitive(v: &IntegerVector) -> Result<IntegerVector> {
    if v.is_zero() {
        return Err(Error::DegenerateInput("zero vector has no primitive form".into()));
    }
    let g = v.content();
    Ok(IntegerVector(v.0.iter().map(|e| e / &g).collect()))
}

/// The unique rational `x` with `sum_i x_i * basis.row(i) = target`.
pub fn rational_coordinates(basis: &IntegerMatrix, target: &IntegerVector) -> Result<Vec<BigRational>> {
    if !basis.is_square() || basis.ncols() != target.rank() {
        return Err(Error::Dimension(format!(
            "basis is {}x{}, target has rank {}",
            basis.nrows(),
            basis.ncols(),
            target.rank()
        )));
    }
    let n = basis.nrows();
    // Augmented system basis^T | target.
    let mut a: Vec<Vec<BigRational>> = (0..n)
        .map(|j| {
            let mut row: Vec<BigRational> = (0..n)
                .map(|i| BigRational::from_integer(basis.get(i, j).clone()))
                .collect();
            row.push(BigRational::from_integer(target[j].clone()));
            row
        })
        .collect();
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !a[i][k].is_zero()) else {
            return Err(Error::Dimension("singular basis".into()));
        };
        a.swap(k, p);
        let pivot = a[k][k].clone();
        for x in a[k].iter_mut() {
            *x /= &pivot;
        }
        let pivot_row = a[k].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i == k || row[k].is_zero() {
                continue;
            }
            let f = row[k].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                *x -= &f * y;
            }
        }
    }
    Ok(a.into_iter().map(|mut row| row.pop().unwrap()).collect())
}

/// Integer kernel generator of an `(n-1) x n` matrix of full row rank, by
/// signed maximal minors. Zero when the rows are dependent.
pub fn kernel_vector(m: &IntegerMatrix) -> Result<IntegerVector> {
    let n = m.ncols();
    if m.nrows() + 1 != n {
        return Err(Error::Dimension("kernel_vector expects (n-1) x n".into()));
    }
    let rows: Vec<usize> = (0..m.nrows()).collect();
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let cols: Vec<usize> = (0..n).filter(|&c| c != j).collect();
        let d = determinant(&m.minor(&rows, &cols))?;
        out.push(if j % 2 == 0 { d } else { -d });
    }
    Ok(IntegerVector(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[i64]]) -> IntegerMatrix {
        IntegerMatrix::from_i64s(rows).unwrap()
    }

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn determinants() {
        assert_eq!(determinant(&mat(&[&[1, 0], &[0, 1]])).unwrap(), 1.into());
        assert_eq!(determinant(&mat(&[&[0, 1], &[-1, 3]])).unwrap(), 1.into());
        assert_eq!(determinant(&mat(&[&[2, 0], &[0, 3]])).unwrap(), 6.into());
        assert_eq!(
            determinant(&mat(&[&[0, 2, 1], &[1, 0, 0], &[3, 1, 4]])).unwrap(),
            (-7).into()
        );
        assert!(matches!(
            determinant(&mat(&[&[1, 2, 3]])),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn snf_examples() {
        let snf = smith_normal_form(&IntegerMatrix::identity(2));
        assert_eq!(snf.diagonal, ints(&[1, 1]));
        let snf = smith_normal_form(&mat(&[&[2, 0], &[0, 3]]));
        assert_eq!(snf.diagonal, ints(&[1, 6]));
        let snf = smith_normal_form(&mat(&[&[2, 0], &[0, 2]]));
        assert_eq!(snf.diagonal, ints(&[2, 2]));
    }

    #[test]
    fn snf_rectangular_and_singular() {
        let m = mat(&[&[2, 4, 4], &[-6, 6, 12], &[10, -4, -16]]);
        let snf = smith_normal_form(&m);
        assert_eq!(snf.diagonal, ints(&[2, 6, 12]));
        let m = mat(&[&[1, 2], &[2, 4], &[3, 6]]);
        let snf = smith_normal_form(&m);
        assert_eq!(snf.diagonal, ints(&[1, 0]));
        let recon = snf.left.mul(&m).unwrap().mul(&snf.right).unwrap();
        assert_eq!(recon, snf.diagonal_matrix());
    }

    #[test]
    fn hnf_basis() {
        let h = hermite_normal_form(&mat(&[&[2, 0], &[0, 3], &[4, 6]]));
        assert_eq!(h, mat(&[&[2, 0], &[0, 3]]));
        let h = hermite_normal_form(&mat(&[&[1, 0], &[-2, 5]]));
        assert_eq!(h, mat(&[&[1, 0], &[0, 5]]));
        assert_eq!(mat(&[&[1, 2], &[2, 4]]).rank(), 1);
    }

    #[test]
    fn primitive_vectors() {
        let p = |v: &[i64]| primitive(&IntegerVector::from_i64s(v)).unwrap();
        assert_eq!(p(&[2, 4]), IntegerVector::from_i64s(&[1, 2]));
        assert_eq!(p(&[1, 0, 0]), IntegerVector::from_i64s(&[1, 0, 0]));
        assert_eq!(p(&[-3, 6, 9]), IntegerVector::from_i64s(&[-1, 2, 3]));
        assert!(matches!(
            primitive(&IntegerVector::zero(2)),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn rational_solves() {
        let e2 = IntegerVector::from_i64s(&[0, 1]);
        let x = rational_coordinates(&mat(&[&[1, 0], &[-1, 2]]), &e2).unwrap();
        assert_eq!(x, vec![rat(1, 2), rat(1, 2)]);
        let x = rational_coordinates(&IntegerMatrix::identity(2), &IntegerVector::from_i64s(&[7, -2])).unwrap();
        assert_eq!(x, vec![rat(7, 1), rat(-2, 1)]);
        let x = rational_coordinates(&mat(&[&[1, 0], &[-2, 5]]), &e2).unwrap();
        assert_eq!(x, vec![rat(2, 5), rat(1, 5)]);
        assert!(matches!(
            rational_coordinates(&mat(&[&[1, 2], &[2, 4]]), &e2),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn adjugate_and_kernel() {
        let m = mat(&[&[1, 0, 0], &[0, 1, 0], &[-1, -1, 3]]);
        let adj = adjugate(&m).unwrap();
        let prod = m.mul(&adj).unwrap();
        let mut expected = IntegerMatrix::identity(3);
        for i in 0..3 {
            expected.rows[i].0[i] = 3.into();
        }
        assert_eq!(prod, expected);
        let k = kernel_vector(&mat(&[&[1, 0, 0], &[0, 1, 0]])).unwrap();
        assert_eq!(k, IntegerVector::from_i64s(&[0, 0, 1]));
    }
}

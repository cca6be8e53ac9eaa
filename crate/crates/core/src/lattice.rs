//! Exact integer linear algebra: Hermite and Smith normal forms, integer
//! kernels, primitivity and saturation tests.
//!
//! Everything here works over arbitrary-precision integers. Intermediate
//! entries of the normal-form reductions grow quickly, so there is no
//! fixed-width fast path.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("entry count {len} does not match a {rows}x{cols} matrix")]
    Shape {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("the zero vector has no primitivity")]
    ZeroVector,
    #[error("vector {index} has length {len}, expected {expected}")]
    Length {
        index: usize,
        len: usize,
        expected: usize,
    },
    /// The vectors are linearly dependent; `witness` holds coefficients of a
    /// nontrivial vanishing combination.
    #[error("vectors are linearly dependent: {}", fmt_witness(.witness))]
    Dependent { witness: Vec<BigRational> },
}

fn fmt_witness(w: &[BigRational]) -> String {
    let parts: Vec<String> = w.iter().map(|c| c.to_string()).collect();
    format!("coefficients ({})", parts.join(", "))
}

/// Dense integer matrix stored row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<BigInt>) -> Result<Self, LatticeError> {
        if data.len() != rows * cols {
            return Err(LatticeError::Shape {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    /// Builds a matrix from rows of machine integers. All rows must have the
    /// same length; an empty slice gives a 0x0 matrix.
    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self, LatticeError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (index, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(LatticeError::Length {
                    index,
                    len: r.len(),
                    expected: cols,
                });
            }
            data.extend(r.iter().map(|&v| BigInt::from(v)));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Builds a `dim x k` matrix whose columns are the given vectors.
    pub fn from_columns(dim: usize, columns: &[Vec<BigInt>]) -> Result<Self, LatticeError> {
        let mut m = Self::zeros(dim, columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != dim {
                return Err(LatticeError::Length {
                    index: j,
                    len: c.len(),
                    expected: dim,
                });
            }
            for (i, v) in c.iter().enumerate() {
                m[(i, j)] = v.clone();
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.data
    }

    pub fn row(&self, i: usize) -> Vec<BigInt> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn columns(&self) -> Vec<Vec<BigInt>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    /// Matrix product. Panics on mismatched inner dimensions.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = &self[(i, l)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a * &other[(l, j)];
                    out[(i, j)] += prod;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| &self[(i, j)] * &v[j])
                    .fold(BigInt::zero(), |acc, x| acc + x)
            })
            .collect()
    }

    /// Entries converted to `f64`, row-major.
    pub fn to_f64(&self) -> Vec<f64> {
        use num_traits::ToPrimitive;
        self.data
            .iter()
            .map(|v| v.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    /// Rows as machine integers, or `None` if some entry does not fit.
    pub fn to_i64_rows(&self) -> Option<Vec<Vec<i64>>> {
        use num_traits::ToPrimitive;
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self[(i, j)].to_i64())
                    .collect::<Option<Vec<_>>>()
            })
            .collect()
    }

    /// Rank over the rationals.
    pub fn rank(&self) -> usize {
        rational_echelon(&to_rational(self)).1.len()
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a: Vec<Vec<BigInt>> = (0..n).map(|i| self.row(i)).collect();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                    Some(i) => {
                        a.swap(i, k);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
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
        sign * &a[n - 1][n - 1]
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// col[dst] += factor * col[src]
    fn add_col_multiple(&mut self, dst: usize, src: usize, factor: &BigInt) {
        if factor.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let v = factor * &self[(i, src)];
            self[(i, dst)] += v;
        }
    }

    /// row[dst] += factor * row[src]
    fn add_row_multiple(&mut self, dst: usize, src: usize, factor: &BigInt) {
        if factor.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let v = factor * &self[(src, j)];
            self[(dst, j)] += v;
        }
    }

    fn negate_col(&mut self, j: usize) {
        for i in 0..self.rows {
            let v = -std::mem::take(&mut self[(i, j)]);
            self[(i, j)] = v;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let v = -std::mem::take(&mut self[(i, j)]);
            self[(i, j)] = v;
        }
    }

    /// Replaces columns (a, b) by (x*a + y*b, u*a + v*b).
    fn combine_cols(&mut self, a: usize, b: usize, [x, y, u, v]: [&BigInt; 4]) {
        for i in 0..self.rows {
            let ca = self[(i, a)].clone();
            let cb = self[(i, b)].clone();
            self[(i, a)] = x * &ca + y * &cb;
            self[(i, b)] = u * &ca + v * &cb;
        }
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntMatrix{}x{}[", self.rows, self.cols)?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            let r: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            write!(f, "{}", r.join(" "))?;
        }
        write!(f, "]")
    }
}

/// Largest magnitude written as a JSON number; beyond it integers are strings.
pub const JSON_SAFE_INT: i64 = (1 << 53) - 1;

/// JSON form of a big integer: a number when it is exactly representable as
/// a double, a decimal string otherwise.
pub fn bigint_json(x: &BigInt) -> serde_json::Value {
    match x.to_i64() {
        Some(v) if v.abs() <= JSON_SAFE_INT => serde_json::Value::from(v),
        _ => serde_json::Value::String(x.to_string()),
    }
}

pub fn serialize_bigints<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
    let vals: Vec<serde_json::Value> = v.iter().map(bigint_json).collect();
    vals.serialize(s)
}

impl Serialize for IntMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<serde_json::Value>> = (0..self.rows)
            .map(|i| self.row(i).iter().map(bigint_json).collect())
            .collect();
        let mut st = s.serialize_struct("IntMatrix", 3)?;
        st.serialize_field("rows", &self.rows)?;
        st.serialize_field("cols", &self.cols)?;
        st.serialize_field("entries", &rows)?;
        st.end()
    }
}

/// Smith normal form `left * m * right = diag(divisors)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnfResult {
    /// Elementary divisors, `min(rows, cols)` of them, each dividing the
    /// next, zeros last.
    pub diag: Vec<BigInt>,
    pub left: IntMatrix,
    pub right: IntMatrix,
}

/// Column-style Hermite normal form together with the unimodular transform:
/// returns `(h, u)` with `m * u = h`.
///
/// `h` is in column echelon form: the nonzero columns come first, each has a
/// positive pivot strictly below the previous column's pivot, and entries to
/// the left of a pivot lie in `[0, pivot)`.
pub fn hermite_with_transform(m: &IntMatrix) -> (IntMatrix, IntMatrix) {
    let mut h = m.clone();
    let mut u = IntMatrix::identity(m.cols);
    let mut pc = 0;
    for i in 0..h.rows {
        if pc == h.cols {
            break;
        }
        // gcd-combine every entry of row i right of the pivot column into it
        for j in pc + 1..h.cols {
            if h[(i, j)].is_zero() {
                continue;
            }
            if h[(i, pc)].is_zero() {
                h.swap_cols(pc, j);
                u.swap_cols(pc, j);
                continue;
            }
            let a = h[(i, pc)].clone();
            let b = h[(i, j)].clone();
            let eg = a.extended_gcd(&b);
            let (g, x, y) = (eg.gcd, eg.x, eg.y);
            let ua = -(&b / &g);
            let va = &a / &g;
            h.combine_cols(pc, j, [&x, &y, &ua, &va]);
            u.combine_cols(pc, j, [&x, &y, &ua, &va]);
        }
        if h[(i, pc)].is_zero() {
            continue;
        }
        if h[(i, pc)].is_negative() {
            h.negate_col(pc);
            u.negate_col(pc);
        }
        let pivot = h[(i, pc)].clone();
        for j in 0..pc {
            let q = h[(i, j)].div_floor(&pivot);
            if !q.is_zero() {
                let nq = -q;
                h.add_col_multiple(j, pc, &nq);
                u.add_col_multiple(j, pc, &nq);
            }
        }
        pc += 1;
    }
    (h, u)
}

/// Column-style Hermite normal form. Its columns span the same integer
/// lattice as the columns of `m`.
pub fn hermite_normal_form(m: &IntMatrix) -> IntMatrix {
    hermite_with_transform(m).0
}

/// Smith normal form with unimodular transforms.
pub fn smith_normal_form(m: &IntMatrix) -> SnfResult {
    let (rows, cols) = (m.rows, m.cols);
    let mut d = m.clone();
    let mut left = IntMatrix::identity(rows);
    let mut right = IntMatrix::identity(cols);
    let steps = rows.min(cols);
    'outer: for t in 0..steps {
        loop {
            // smallest nonzero entry of the trailing block becomes the pivot
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    if d[(i, j)].is_zero() {
                        continue;
                    }
                    if best.is_none_or(|(bi, bj)| d[(i, j)].abs() < d[(bi, bj)].abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else {
                break 'outer;
            };
            d.swap_rows(t, pi);
            left.swap_rows(t, pi);
            d.swap_cols(t, pj);
            right.swap_cols(t, pj);

            let pivot = d[(t, t)].clone();
            let mut clean = true;
            for i in t + 1..rows {
                if d[(i, t)].is_zero() {
                    continue;
                }
                let q = -(&d[(i, t)] / &pivot);
                d.add_row_multiple(i, t, &q);
                left.add_row_multiple(i, t, &q);
                clean &= d[(i, t)].is_zero();
            }
            for j in t + 1..cols {
                if d[(t, j)].is_zero() {
                    continue;
                }
                let q = -(&d[(t, j)] / &pivot);
                d.add_col_multiple(j, t, &q);
                right.add_col_multiple(j, t, &q);
                clean &= d[(t, j)].is_zero();
            }
            if !clean {
                continue;
            }
            // divisibility: fold an offending row into the pivot row
            let offender = (t + 1..rows)
                .flat_map(|i| (t + 1..cols).map(move |j| (i, j)))
                .find(|&(i, j)| !d[(i, j)].is_multiple_of(&pivot));
            if let Some((i, _)) = offender {
                let one = BigInt::one();
                d.add_row_multiple(t, i, &one);
                left.add_row_multiple(t, i, &one);
                continue;
            }
            if pivot.is_negative() {
                d.negate_row(t);
                left.negate_row(t);
            }
            break;
        }
    }
    let diag = (0..steps).map(|t| d[(t, t)].clone()).collect();
    SnfResult { diag, left, right }
}

/// Basis of the integer kernel `{v : m v = 0}`, as the columns of a
/// `cols x k` matrix in column Hermite normal form.
///
/// The basis comes from a unimodular column transform, so the returned
/// lattice is saturated.
pub fn integer_kernel_basis(m: &IntMatrix) -> IntMatrix {
    let (h, u) = hermite_with_transform(m);
    let rank = (0..h.cols)
        .take_while(|&j| (0..h.rows).any(|i| !h[(i, j)].is_zero()))
        .count();
    let cols: Vec<Vec<BigInt>> = (rank..h.cols).map(|j| u.column(j)).collect();
    let basis = IntMatrix::from_columns(m.cols, &cols).expect("kernel columns have length cols");
    hermite_normal_form(&basis)
}

pub fn gcd_of(v: &[BigInt]) -> BigInt {
    v.iter().fold(BigInt::zero(), |g, x| g.gcd(x))
}

/// True iff the gcd of the entries is 1.
pub fn is_primitive(v: &[BigInt]) -> Result<bool, LatticeError> {
    let g = gcd_of(v);
    if g.is_zero() {
        return Err(LatticeError::ZeroVector);
    }
    Ok(g.is_one())
}

/// Divides out the gcd. The zero vector is returned unchanged.
pub fn primitive_part(v: &[BigInt]) -> Vec<BigInt> {
    let g = gcd_of(v);
    if g.is_zero() {
        return v.to_vec();
    }
    v.iter().map(|x| x / &g).collect()
}

/// Decides whether `span_R(vectors) ∩ Z^n = span_Z(vectors)`.
///
/// Dependent input is rejected with an explicit dependency.
pub fn is_saturated(vectors: &[Vec<BigInt>], ambient_dim: usize) -> Result<bool, LatticeError> {
    if vectors.is_empty() {
        return Ok(true);
    }
    let stacked = IntMatrix::from_columns(ambient_dim, vectors)?;
    let kernel = integer_kernel_basis(&stacked);
    if kernel.cols() > 0 {
        let witness = kernel
            .column(0)
            .into_iter()
            .map(BigRational::from_integer)
            .collect();
        return Err(LatticeError::Dependent { witness });
    }
    let snf = smith_normal_form(&stacked);
    Ok(snf.diag.iter().all(One::is_one))
}

pub(crate) fn to_rational(m: &IntMatrix) -> Vec<Vec<BigRational>> {
    (0..m.rows)
        .map(|i| {
            m.row(i)
                .into_iter()
                .map(BigRational::from_integer)
                .collect()
        })
        .collect()
}

/// Reduced row echelon form over Q; returns the reduced matrix and the pivot
/// columns.
fn rational_echelon(a: &[Vec<BigRational>]) -> (Vec<Vec<BigRational>>, Vec<usize>) {
    let mut a = a.to_vec();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                let pivot_row = a[r].clone();
                for (x, y) in a[i].iter_mut().zip(&pivot_row) {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

/// Solves `a x = b` over Q. Free variables are set to zero; `None` when the
/// system is inconsistent.
pub fn solve_rational(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let cols = a.first().map_or(0, Vec::len);
    let aug: Vec<Vec<BigRational>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let (red, pivots) = rational_echelon(&aug);
    if pivots.last() == Some(&cols) {
        return None;
    }
    let mut x = vec![BigRational::zero(); cols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = red[r][cols].clone();
    }
    Some(x)
}

//! Quotient bookkeeping for a good cone: the map `β: ℤᵈ → ℤⁿ⁺¹` sending
//! `e_i ↦ λ_i`, a saturated basis `A` of its integer kernel, the elements of
//! order two in the quotient torus `K`, and Reeb coefficients `b` with
//! `β·b = ξ`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
#[cfg(test)]
use num_traits::ToPrimitive;
use num_traits::Zero;
use serde::{Deserialize, Serialize, Serializer};

use crate::cone::{ConeError, ConeSpec, GoodCone};
use crate::lattice::{self, IntMatrix};

/// Element of `(ℤ/2)ᵈ`; bit `j` set means coordinate `j` is negated.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignVector {
    mask: u32,
    len: usize,
}

impl SignVector {
    pub fn new(mask: u32, len: usize) -> Self {
        assert!(len <= 32);
        let mask = if len == 32 {
            mask
        } else {
            mask & ((1u32 << len) - 1)
        };
        Self { mask, len }
    }

    pub fn identity(len: usize) -> Self {
        Self::new(0, len)
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_identity(&self) -> bool {
        self.mask == 0
    }

    pub fn flips(&self, j: usize) -> bool {
        self.mask >> j & 1 == 1
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self::new(self.mask ^ other.mask, self.len)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(j, &v)| if self.flips(j) { -v } else { v })
            .collect()
    }

    /// Signs `(-1)^{s_j}`.
    pub fn signs(&self) -> Vec<i8> {
        (0..self.len)
            .map(|j| if self.flips(j) { -1 } else { 1 })
            .collect()
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.len {
            f.write_str(if self.flips(j) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SignVector({self})")
    }
}

impl Serialize for SignVector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DelzantData {
    pub dim: usize,
    pub d: usize,
    /// `dim x d`, columns are the normals.
    pub beta: IntMatrix,
    /// `d x k`, columns a saturated basis of `ker β`, in column Hermite form.
    pub kernel: IntMatrix,
    /// Number of Smith divisors of `β` larger than one.
    pub torsion_rank: usize,
    #[serde(serialize_with = "lattice::serialize_bigints")]
    pub divisors: Vec<BigInt>,
    #[serde(skip)]
    pub cone: ConeSpec,
}

impl DelzantData {
    pub fn build(cone: &GoodCone) -> Self {
        let beta = cone.spec().beta();
        let kernel = lattice::integer_kernel_basis(&beta);
        let divisors = lattice::smith_normal_form(&beta).diag;
        let torsion_rank = divisors.iter().filter(|d| **d > BigInt::from(1)).count();
        Self {
            dim: cone.dim(),
            d: beta.cols(),
            beta,
            kernel,
            torsion_rank,
            divisors,
            cone: cone.spec().clone(),
        }
    }

    /// Validates `spec` and builds.
    pub fn from_spec(spec: &ConeSpec) -> Result<Self, ConeError> {
        Ok(Self::build(&GoodCone::new(spec.clone())?))
    }

    /// `k = d - dim`.
    pub fn k(&self) -> usize {
        self.kernel.cols()
    }

    /// Kernel as rows `A_l ∈ ℤᵈ`, `l = 1..k`.
    pub fn kernel_rows(&self) -> Vec<Vec<i64>> {
        self.kernel
            .transpose()
            .to_i64_rows()
            .expect("kernel entries fit in i64")
    }

    pub fn beta_f64(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.d, &self.beta.to_f64())
    }

    pub fn deck_group(&self) -> DeckGroup {
        deck_group(self)
    }

    pub fn reeb_coefficients(&self, xi: &[f64]) -> ReebCoefficients {
        reeb_coefficients(self, xi)
    }
}

/// The group `{a ∈ K : a² = 1}` as sign vectors.
#[derive(Clone, Debug, Serialize)]
pub struct DeckGroup {
    pub d: usize,
    /// Sorted by mask; the identity comes first.
    pub elements: Vec<SignVector>,
    /// Elements reached as `exp(2πi·A·t)` with `t ∈ {0, 1/2}ᵏ`, i.e. the
    /// part lying in the identity component of `K`.
    pub from_exponential: Vec<SignVector>,
    /// `from_exponential ⊆ elements`, with equality unless some Smith
    /// divisor of `β` is even.
    pub routes_agree: bool,
}

impl DeckGroup {
    pub fn trivial(d: usize) -> Self {
        let id = vec![SignVector::identity(d)];
        Self {
            d,
            elements: id.clone(),
            from_exponential: id,
            routes_agree: true,
        }
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn nontrivial(&self) -> impl Iterator<Item = &SignVector> {
        self.elements.iter().filter(|s| !s.is_identity())
    }
}

/// Kernel of `β mod 2` over `𝔽₂`, as a list of all its elements.
pub fn f2_kernel(beta: &IntMatrix) -> Vec<SignVector> {
    let (rows, d) = (beta.rows(), beta.cols());
    assert!(d <= 16);
    let two = BigInt::from(2);
    // Row i as a bitmask over columns.
    let mut m: Vec<u32> = (0..rows)
        .map(|i| {
            (0..d).fold(0u32, |acc, j| {
                if (&beta[(i, j)] % &two).is_zero() {
                    acc
                } else {
                    acc | 1 << j
                }
            })
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..d {
        let Some(p) = (r..rows).find(|&i| m[i] >> c & 1 == 1) else {
            continue;
        };
        m.swap(r, p);
        for i in 0..rows {
            if i != r && m[i] >> c & 1 == 1 {
                m[i] ^= m[r];
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..d).filter(|c| !pivots.contains(c)).collect();
    let basis: Vec<u32> = free
        .iter()
        .map(|&f| {
            let mut v = 1u32 << f;
            for (i, &pc) in pivots.iter().enumerate() {
                if m[i] >> f & 1 == 1 {
                    v |= 1 << pc;
                }
            }
            v
        })
        .collect();
    span(&basis, d)
}

fn span(basis: &[u32], d: usize) -> Vec<SignVector> {
    let mut out: Vec<SignVector> = (0u32..1 << basis.len())
        .map(|sel| {
            let mask = basis
                .iter()
                .enumerate()
                .filter(|(i, _)| sel >> i & 1 == 1)
                .fold(0, |m, (_, b)| m ^ b);
            SignVector::new(mask, d)
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Evaluates `exp(2πi·A·t)` for every `t ∈ {0, 1/2}ᵏ` and reads off signs.
pub fn exponential_two_torsion(kernel: &IntMatrix) -> Vec<SignVector> {
    let (d, k) = (kernel.rows(), kernel.cols());
    let a = kernel.to_f64();
    let mut out = Vec::with_capacity(1 << k);
    for sel in 0u32..1 << k {
        let t: Vec<f64> = (0..k)
            .map(|l| if sel >> l & 1 == 1 { 0.5 } else { 0.0 })
            .collect();
        let mut mask = 0u32;
        for j in 0..d {
            let phase: f64 = (0..k).map(|l| a[j * k + l] * t[l]).sum();
            let z = Complex64::from_polar(1.0, std::f64::consts::TAU * phase);
            assert!((z.im).abs() < 1e-9 && (z.re.abs() - 1.0).abs() < 1e-9);
            if z.re < 0.0 {
                mask |= 1 << j;
            }
        }
        out.push(SignVector::new(mask, d));
    }
    out.sort();
    out.dedup();
    out
}

pub fn deck_group(data: &DelzantData) -> DeckGroup {
    let elements = f2_kernel(&data.beta);
    let from_exponential = exponential_two_torsion(&data.kernel);
    let even_torsion = data.divisors.iter().any(|v| v.is_even());
    let routes_agree = from_exponential.iter().all(|s| elements.contains(s))
        && (even_torsion || elements == from_exponential);
    DeckGroup {
        d: data.d,
        elements,
        from_exponential,
        routes_agree,
    }
}

/// Minimum-norm `b` with `β·b = ξ`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ReebCoefficients {
    pub xi: Vec<f64>,
    pub b: Vec<f64>,
    pub residual: f64,
}

/// `b = βᵀ (β βᵀ)⁻¹ ξ`.
pub fn reeb_coefficients(data: &DelzantData, xi: &[f64]) -> ReebCoefficients {
    assert_eq!(xi.len(), data.dim, "xi has the wrong length");
    let beta = data.beta_f64();
    let gram = &beta * beta.transpose();
    let rhs = DVector::from_column_slice(xi);
    let y = gram
        .cholesky()
        .expect("β has full row rank for a validated cone")
        .solve(&rhs);
    let b = beta.transpose() * y;
    let residual = (&beta * &b - &rhs).amax();
    ReebCoefficients {
        xi: xi.to_vec(),
        b: b.iter().copied().collect(),
        residual,
    }
}

/// Exact minimum-norm solution for rational `ξ`.
pub fn reeb_coefficients_exact(data: &DelzantData, xi: &[BigRational]) -> Vec<BigRational> {
    let beta = lattice::to_rational(&data.beta);
    let (n, d) = (data.dim, data.d);
    let gram: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..d).map(|c| &beta[i][c] * &beta[j][c]).sum())
                .collect()
        })
        .collect();
    let y = lattice::solve_rational(&gram, xi).expect("β has full row rank");
    (0..d)
        .map(|c| (0..n).map(|i| &beta[i][c] * &y[i]).sum())
        .collect()
}

/// `Σ_j (s_j / 2) λ_j` is integral.
pub fn in_two_torsion(beta: &IntMatrix, s: &SignVector) -> bool {
    (0..beta.rows()).all(|i| {
        let sum: BigInt = (0..beta.cols())
            .filter(|&j| s.flips(j))
            .map(|j| beta[(i, j)].clone())
            .sum();
        (sum % BigInt::from(2)).is_zero()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ypq;

    fn data(p: i64, q: i64) -> DelzantData {
        DelzantData::from_spec(&ypq::ypq_normals(p, q).unwrap()).unwrap()
    }

    #[test]
    fn y21_kernel() {
        let dd = data(2, 1);
        assert_eq!(dd.k(), 1);
        let row = &dd.kernel_rows()[0];
        let expect = ypq::kernel_vector(2, 1);
        let neg: Vec<i64> = expect.iter().map(|x| -x).collect();
        assert!(row == &expect || row == &neg, "{row:?}");
        assert!(dd.beta.mul(&dd.kernel).is_zero());
    }

    #[test]
    fn orthant_has_trivial_kernel_and_deck() {
        let dd = DelzantData::from_spec(&ConeSpec::orthant(3)).unwrap();
        assert_eq!(dd.k(), 0);
        let deck = dd.deck_group();
        assert_eq!(deck.order(), 1);
        assert!(deck.routes_agree);
    }

    #[test]
    fn deck_elements() {
        let s = |p, q| {
            data(p, q)
                .deck_group()
                .elements
                .iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
        };
        assert_eq!(s(2, 1), ["0000", "1010"]);
        assert_eq!(s(3, 1), ["0000", "0101"]);
        assert_eq!(s(3, 2), ["0000", "1111"]);
    }

    #[test]
    fn deck_matches_brute_force() {
        for (p, q) in ypq::coprime_pairs(5) {
            let dd = data(p, q);
            let brute: Vec<SignVector> = (0..16)
                .map(|m| SignVector::new(m, 4))
                .filter(|s| in_two_torsion(&dd.beta, s))
                .collect();
            let deck = dd.deck_group();
            assert_eq!(deck.elements, brute);
            assert!(deck.routes_agree);
        }
    }

    #[test]
    fn reeb_coefficients_cases() {
        let dd = DelzantData::from_spec(&ConeSpec::orthant(3)).unwrap();
        let c = dd.reeb_coefficients(&[1.0, 1.0, 1.0]);
        for b in &c.b {
            assert!((b - 1.0).abs() < 1e-14);
        }
        let dd = data(2, 1);
        let c = dd.reeb_coefficients(&[3.0, 2.0, 3.0]);
        assert!(c.residual < 1e-12);
        let zero = dd.reeb_coefficients(&[0.0; 3]);
        assert!(zero.b.iter().all(|&x| x == 0.0));
        // Minimum norm means orthogonal to the kernel.
        let a = &dd.kernel_rows()[0];
        let dotk: f64 = a.iter().zip(&c.b).map(|(&x, y)| x as f64 * y).sum();
        assert!(dotk.abs() < 1e-12);
    }

    #[test]
    fn exact_coefficients_agree() {
        let dd = data(2, 1);
        let xi: Vec<BigRational> = [3, 2, 3]
            .iter()
            .map(|&x| BigRational::from_integer(x.into()))
            .collect();
        let exact = reeb_coefficients_exact(&dd, &xi);
        let approx = dd.reeb_coefficients(&[3.0, 2.0, 3.0]);
        for (e, a) in exact.iter().zip(&approx.b) {
            assert!((e.to_f64().unwrap() - a).abs() < 1e-13);
        }
        let back = dd.beta.mul_vec(&vec![BigInt::from(0); 4]);
        assert!(back.iter().all(Zero::is_zero));
    }

    #[test]
    fn sign_vector_display_and_action() {
        let s = SignVector::new(0b0101, 4);
        assert_eq!(s.to_string(), "1010");
        assert_eq!(s.apply(&[1.0, 2.0, 3.0, 4.0]), vec![-1.0, 2.0, -3.0, 4.0]);
        assert!(s.compose(&s).is_identity());
    }
}

//! The `Y^{p,q}` family: cone normals, the closed-form data attached to it,
//! and recognition of a cone as a member of the family.

use num_integer::Integer;
use thiserror::Error;

use crate::cone::ConeSpec;
use crate::delzant::SignVector;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum YpqError {
    #[error("Y^{{p,q}} needs p > q >= 1, got p = {p}, q = {q}")]
    Range { p: i64, q: i64 },
    #[error("Y^{{p,q}} needs coprime p and q, got gcd({p}, {q}) = {gcd}")]
    NotCoprime { p: i64, q: i64, gcd: i64 },
}

pub fn check_params(p: i64, q: i64) -> Result<(), YpqError> {
    if !(q >= 1 && p > q) {
        return Err(YpqError::Range { p, q });
    }
    let gcd = p.gcd(&q);
    if gcd != 1 {
        return Err(YpqError::NotCoprime { p, q, gcd });
    }
    Ok(())
}

/// Inward normals `(1,0,0), (1,p-q-1,p-q), (1,p,p), (1,1,0)`.
pub fn ypq_normals(p: i64, q: i64) -> Result<ConeSpec, YpqError> {
    check_params(p, q)?;
    Ok(ConeSpec::new(
        3,
        vec![
            vec![1, 0, 0],
            vec![1, p - q - 1, p - q],
            vec![1, p, p],
            vec![1, 1, 0],
        ],
    ))
}

/// Recovers `(p, q)` when the normals are exactly the `Y^{p,q}` normals in
/// the standard order.
pub fn detect(spec: &ConeSpec) -> Option<(i64, i64)> {
    if spec.dim != 3 || spec.normals.len() != 4 {
        return None;
    }
    let p = spec.normals[2][1];
    let q = p - spec.normals[1][2];
    let expected = ypq_normals(p, q).ok()?;
    (expected == *spec).then_some((p, q))
}

/// Kernel generator `(-p-q, p, -p+q, p)` of `β`.
pub fn kernel_vector(p: i64, q: i64) -> [i64; 4] {
    [-p - q, p, -p + q, p]
}

/// `l⁻¹ = (3q² - 2p² + p √(4p² - 3q²)) / q`.
pub fn l_inverse(p: i64, q: i64) -> f64 {
    let (p, q) = (p as f64, q as f64);
    (3.0 * q * q - 2.0 * p * p + p * (4.0 * p * p - 3.0 * q * q).sqrt()) / q
}

/// Einstein Reeb vector `(3, (3p - 3q + l⁻¹)/2, (3p - 3q + l⁻¹)/2)`.
pub fn reeb_vector(p: i64, q: i64) -> [f64; 3] {
    let s = 0.5 * (3.0 * (p - q) as f64 + l_inverse(p, q));
    [3.0, s, s]
}

/// The reduced real-link system in its two-equation normal form
///
/// ```text
/// p x2² + p x4² = (p+q) x1² + (p-q) x3²
/// (3p+3q-l⁻¹) x1² + (3p-3q+l⁻¹) x3² = 2p
/// ```
///
/// returned as the homogeneous row `a` (moved to one side) and the
/// inhomogeneous row `b` divided by `2p`, so that `b·u = 1`.
pub fn displayed_system(p: i64, q: i64) -> ([i64; 4], [f64; 4]) {
    let l = l_inverse(p, q);
    let (pf, qf) = (p as f64, q as f64);
    let a = [-(p + q), p, -(p - q), p];
    let b = [
        (3.0 * pf + 3.0 * qf - l) / (2.0 * pf),
        0.0,
        (3.0 * pf - 3.0 * qf + l) / (2.0 * pf),
        0.0,
    ];
    (a, b)
}

/// Nontrivial deck element according to the reference parity table:
/// `p` even negates `x4`, `p, q` odd negate `x3`, `p` odd and `q` even negate
/// `x3, x4`.
pub fn tabulated_deck_element(p: i64, q: i64) -> SignVector {
    let mask = if p % 2 == 0 {
        0b1000
    } else if q % 2 != 0 {
        0b0100
    } else {
        0b1100
    };
    SignVector::new(mask, 4)
}

/// Deck element obtained from `exp(2πi·A/2)` with `A = (-p-q, p, -p+q, p)`:
/// coordinate `j` is negated iff `A_j` is odd.
pub fn computed_deck_element(p: i64, q: i64) -> SignVector {
    let mask = kernel_vector(p, q)
        .iter()
        .enumerate()
        .filter(|(_, a)| a.rem_euclid(2) == 1)
        .fold(0u32, |m, (j, _)| m | 1 << j);
    SignVector::new(mask, 4)
}

/// Coprime pairs `1 <= q < p <= max_p`.
pub fn coprime_pairs(max_p: i64) -> Vec<(i64, i64)> {
    (2..=max_p)
        .flat_map(|p| (1..p).map(move |q| (p, q)))
        .filter(|&(p, q)| p.gcd(&q) == 1)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normals_match_the_family() {
        let spec = ypq_normals(2, 1).unwrap();
        assert_eq!(
            spec.normals,
            vec![vec![1, 0, 0], vec![1, 0, 1], vec![1, 2, 2], vec![1, 1, 0]]
        );
        let spec = ypq_normals(3, 2).unwrap();
        assert_eq!(
            spec.normals,
            vec![vec![1, 0, 0], vec![1, 0, 1], vec![1, 3, 3], vec![1, 1, 0]]
        );
        assert!(matches!(
            ypq_normals(4, 2),
            Err(YpqError::NotCoprime { .. })
        ));
        assert!(matches!(ypq_normals(1, 0), Err(YpqError::Range { .. })));
        assert!(matches!(ypq_normals(2, 3), Err(YpqError::Range { .. })));
    }

    #[test]
    fn detection_round_trips() {
        for (p, q) in coprime_pairs(7) {
            assert_eq!(detect(&ypq_normals(p, q).unwrap()), Some((p, q)));
        }
        assert_eq!(detect(&ConeSpec::orthant(3)), None);
    }

    #[test]
    fn l_inverse_closed_forms() {
        let sqrt13 = 13f64.sqrt();
        assert!((l_inverse(2, 1) - (2.0 * sqrt13 - 5.0)).abs() < 1e-14);
        assert!((l_inverse(3, 1) - (3.0 * 33f64.sqrt() - 15.0)).abs() < 1e-13);
        let xi = reeb_vector(2, 1);
        assert_eq!(xi[0], 3.0);
        assert!((xi[1] - (sqrt13 - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn deck_parities() {
        assert_eq!(computed_deck_element(2, 1).to_string(), "1010");
        assert_eq!(computed_deck_element(3, 1).to_string(), "0101");
        assert_eq!(computed_deck_element(3, 2).to_string(), "1111");
        assert_eq!(tabulated_deck_element(2, 1).to_string(), "0001");
        assert_eq!(tabulated_deck_element(3, 1).to_string(), "0010");
        assert_eq!(tabulated_deck_element(3, 2).to_string(), "0011");
    }
}

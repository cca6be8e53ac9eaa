use std::collections::BTreeSet;

use num_bigint::BigInt;
use proptest::prelude::*;
use realform::cone::canonical_normals;
use realform::lattice::is_saturated;
use realform::{ypq, ConeSpec, GoodCone};

fn cross(a: &[i64], b: &[i64]) -> [i64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Extreme rays of a 3D cone from every pair of facets.
fn brute_rays(normals: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let mut out = BTreeSet::new();
    for i in 0..normals.len() {
        for j in i + 1..normals.len() {
            let c = cross(&normals[i], &normals[j]);
            if c == [0, 0, 0] {
                continue;
            }
            for s in [1, -1] {
                let r: Vec<i64> = c.iter().map(|x| s * x).collect();
                if normals.iter().all(|n| dot(n, &r) >= 0) {
                    let g = r.iter().fold(0, |g, &x| gcd(g, x));
                    out.insert(r.iter().map(|x| x / g).collect::<Vec<_>>());
                }
            }
        }
    }
    out.into_iter().collect()
}

#[test]
fn ypq_rays_match_brute_force() {
    for (p, q) in ypq::coprime_pairs(7) {
        let spec = ypq::ypq_normals(p, q).unwrap();
        let rays = spec.dual_rays().unwrap().rays;
        assert_eq!(rays, brute_rays(&spec.normals), "({p},{q})");
        assert_eq!(rays.len(), 4);
        for r in &rays {
            let zeros: Vec<usize> = (0..4).filter(|&i| dot(&spec.normals[i], r) == 0).collect();
            assert_eq!(zeros.len(), 2);
            // The two facets through a ray are adjacent in the cyclic order.
            let gap = zeros[1] - zeros[0];
            assert!(gap == 1 || gap == 3, "{zeros:?}");
        }
    }
}

#[test]
fn duality_round_trip() {
    let mut cones = vec![ConeSpec::orthant(3), ConeSpec::orthant(4)];
    cones.extend(
        ypq::coprime_pairs(6)
            .into_iter()
            .map(|(p, q)| ypq::ypq_normals(p, q).unwrap()),
    );
    for spec in cones {
        let rays = spec.dual_rays().unwrap().rays;
        let back = ConeSpec::new(spec.dim, rays).dual_rays().unwrap().rays;
        assert_eq!(canonical_normals(&back), canonical_normals(&spec.normals));
    }
}

#[test]
fn ypq_faces_are_saturated_by_brute_force() {
    let spec = ypq::ypq_normals(2, 1).unwrap();
    let cone = GoodCone::new(spec.clone()).unwrap();
    for face in &cone.faces().faces {
        if face.normals.is_empty() {
            continue;
        }
        let vecs: Vec<Vec<i64>> = face
            .normals
            .iter()
            .map(|&i| spec.normals[i].clone())
            .collect();
        let big: Vec<Vec<BigInt>> = vecs
            .iter()
            .map(|v| v.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        let snf = is_saturated(&big, 3).unwrap();
        assert_eq!(snf, box_saturated(&vecs), "face {:?}", face.normals);
        assert!(snf);
    }
}

/// Lattice points of `[-6, 6]³` in the rational span are integer combinations.
fn box_saturated(vecs: &[Vec<i64>]) -> bool {
    let coeff = -12i64..=12;
    let mut int_span = BTreeSet::new();
    match vecs.len() {
        1 => {
            for a in coeff.clone() {
                int_span.insert(vecs[0].iter().map(|x| a * x).collect::<Vec<_>>());
            }
        }
        2 => {
            for a in coeff.clone() {
                for b in coeff.clone() {
                    int_span.insert(
                        (0..3)
                            .map(|i| a * vecs[0][i] + b * vecs[1][i])
                            .collect::<Vec<_>>(),
                    );
                }
            }
        }
        _ => return true,
    }
    let in_real_span = |p: &[i64]| -> bool {
        match vecs.len() {
            1 => cross(&vecs[0], p) == [0, 0, 0],
            _ => dot(&cross(&vecs[0], &vecs[1]), p) == 0,
        }
    };
    for x in -6i64..=6 {
        for y in -6i64..=6 {
            for z in -6i64..=6 {
                let p = vec![x, y, z];
                if in_real_span(&p) && !int_span.contains(&p) {
                    return false;
                }
            }
        }
    }
    true
}

#[test]
fn y21_xi_zero_membership_matches_pairings() {
    let spec = ypq::ypq_normals(2, 1).unwrap();
    let cone = GoodCone::new(spec.clone()).unwrap();
    let xi0 = cone.xi_zero();
    assert_eq!(xi0, vec![3, 2, 3]);
    let rays = brute_rays(&spec.normals);
    let expected = rays.iter().all(|r| dot(r, &xi0) > 0);
    let xf: Vec<f64> = xi0.iter().map(|&x| x as f64).collect();
    assert_eq!(spec.reeb_cone_contains(&xf), expected);
}

#[test]
fn gorenstein_examples() {
    assert_eq!(
        ypq::ypq_normals(2, 1).unwrap().gorenstein_vector(),
        Some(vec![1, 0, 0])
    );
    assert_eq!(
        ConeSpec::orthant(3).gorenstein_vector(),
        Some(vec![1, 1, 1])
    );
    let spec = ConeSpec::new(2, vec![vec![1, 0], vec![2, 1]]);
    assert_eq!(spec.gorenstein_vector(), Some(vec![1, -1]));
}

#[test]
fn good_cone_faces_have_independent_normals() {
    for (p, q) in ypq::coprime_pairs(7) {
        let cone = GoodCone::new(ypq::ypq_normals(p, q).unwrap()).unwrap();
        for face in &cone.faces().faces {
            if face.normals.is_empty() {
                continue;
            }
            let vecs: Vec<Vec<BigInt>> = face
                .normals
                .iter()
                .map(|&i| cone.normals()[i].iter().map(|&x| BigInt::from(x)).collect())
                .collect();
            assert!(is_saturated(&vecs, 3).is_ok(), "face {:?}", face.normals);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Any unimodular image of the orthant is good, with Gorenstein vector
    /// pairing to 1 with every normal.
    #[test]
    fn unimodular_orthants_are_good(a in -3i64..=3, b in -3i64..=3, c in -3i64..=3) {
        let normals = vec![vec![1, 0, 0], vec![a, 1, 0], vec![b, c, 1]];
        let spec = ConeSpec::new(3, normals.clone());
        let report = spec.validate();
        prop_assert!(report.passed(), "{:?}", report.failures());
        let g = spec.gorenstein_vector().unwrap();
        for n in &normals {
            prop_assert_eq!(dot(&g, n), 1);
        }
        let rays = spec.dual_rays().unwrap().rays;
        prop_assert_eq!(rays.len(), 3);
    }
}

use num_integer::Integer;
use proptest::prelude::*;
use realform::delzant::{in_two_torsion, SignVector};
use realform::{ypq, ConeSpec, DelzantData};

/// Every `s ∈ {0,1}ᵈ` with `Σ s_j λ_j ≡ 0 mod 2`, by enumeration.
fn brute_deck(normals: &[Vec<i64>]) -> Vec<u32> {
    let d = normals.len();
    let dim = normals[0].len();
    (0u32..1 << d)
        .filter(|mask| {
            (0..dim).all(|i| {
                let s: i64 = (0..d)
                    .filter(|j| mask >> j & 1 == 1)
                    .map(|j| normals[j][i])
                    .sum();
                s.rem_euclid(2) == 0
            })
        })
        .collect()
}

#[test]
fn ypq_kernel_matches_closed_form() {
    for (p, q) in ypq::coprime_pairs(7) {
        let data = DelzantData::from_spec(&ypq::ypq_normals(p, q).unwrap()).unwrap();
        assert_eq!(data.k(), 1);
        let got = &data.kernel_rows()[0];
        let want = ypq::kernel_vector(p, q);
        let neg: Vec<i64> = want.iter().map(|x| -x).collect();
        assert!(
            got[..] == want[..] || got[..] == neg[..],
            "({p},{q}): {got:?}"
        );
        assert!(data.beta.mul(&data.kernel).is_zero());
        assert_eq!(data.torsion_rank, 0);
    }
}

#[test]
fn y32_kernel() {
    let data = DelzantData::from_spec(&ypq::ypq_normals(3, 2).unwrap()).unwrap();
    let row = data.kernel_rows()[0].clone();
    let abs: Vec<i64> = row.iter().map(|x| x.abs()).collect();
    assert_eq!(abs, vec![5, 3, 1, 3]);
}

#[test]
fn ypq_deck_matches_brute_force() {
    for (p, q) in ypq::coprime_pairs(7) {
        let spec = ypq::ypq_normals(p, q).unwrap();
        let data = DelzantData::from_spec(&spec).unwrap();
        let deck = data.deck_group();
        let masks: Vec<u32> = deck.elements.iter().map(SignVector::mask).collect();
        assert_eq!(masks, brute_deck(&spec.normals), "({p},{q})");
        assert_eq!(deck.order(), 2);
        assert!(deck.routes_agree);
        let nontrivial = deck.nontrivial().next().unwrap();
        assert_eq!(*nontrivial, ypq::computed_deck_element(p, q));
    }
}

#[test]
fn deck_elements_for_small_ypq() {
    let element = |p, q| {
        let data = DelzantData::from_spec(&ypq::ypq_normals(p, q).unwrap()).unwrap();
        data.deck_group().nontrivial().next().unwrap().to_string()
    };
    assert_eq!(element(2, 1), "1010");
    assert_eq!(element(3, 1), "0101");
    assert_eq!(element(3, 2), "1111");
}

#[test]
fn orthant_has_trivial_deck() {
    for n in 2..=6 {
        let data = DelzantData::from_spec(&ConeSpec::orthant(n)).unwrap();
        assert_eq!(data.k(), 0);
        assert_eq!(data.deck_group().order(), 1);
    }
}

const HEXAGON: [[i64; 2]; 6] = [[1, 0], [1, 1], [0, 1], [-1, 0], [-1, -1], [0, -1]];

/// Cone over the lattice polygon with the given vertex subset of the hexagon.
fn polygon_cone(keep: u32) -> Vec<Vec<i64>> {
    HEXAGON
        .iter()
        .enumerate()
        .filter(|(i, _)| keep >> i & 1 == 1)
        .map(|(_, v)| vec![1, v[0], v[1]])
        .collect()
}

/// `n ↦ n + c·n_j` at coordinate `i`; a unimodular change of basis.
fn shear(normals: &mut [Vec<i64>], i: usize, j: usize, c: i64) {
    for n in normals {
        n[i] += c * n[j];
    }
}

fn base_cone() -> impl Strategy<Value = Vec<Vec<i64>>> {
    let pairs = ypq::coprime_pairs(6);
    prop_oneof![
        (0..pairs.len())
            .prop_map(move |i| ypq::ypq_normals(pairs[i].0, pairs[i].1).unwrap().normals),
        (2usize..=5).prop_map(|n| ConeSpec::orthant(n).normals),
        // Hexagon, pentagon and the square minus two opposite vertices.
        prop::sample::select(vec![0b111111u32, 0b011111, 0b111110, 0b110110])
            .prop_map(polygon_cone),
    ]
}

/// Good cones under random unimodular shears.
fn good_cone() -> impl Strategy<Value = Vec<Vec<i64>>> {
    (
        base_cone(),
        prop::collection::vec((0usize..5, 0usize..5, -2i64..=2), 0..6),
    )
        .prop_map(|(mut normals, shears)| {
            let dim = normals[0].len();
            for (i, j, c) in shears {
                let (i, j) = (i % dim, j % dim);
                if i != j {
                    shear(&mut normals, i, j, c);
                }
            }
            normals
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// The deck group of a sheared good cone is the mod-2 kernel, and both
    /// construction routes agree.
    #[test]
    fn deck_equals_brute_force_on_sheared_cones(normals in good_cone()) {
        let spec = ConeSpec::new(normals[0].len(), normals.clone());
        let report = spec.validate();
        prop_assert!(report.passed(), "{:?} {:?}", normals, report.failures());
        let data = DelzantData::from_spec(&spec).unwrap();
        let deck = data.deck_group();
        let masks: Vec<u32> = deck.elements.iter().map(SignVector::mask).collect();
        prop_assert_eq!(&masks, &brute_deck(&normals));
        prop_assert!(deck.routes_agree);
        let even_torsion = data.divisors.iter().any(|v| v.is_even());
        prop_assert_eq!(deck.elements == deck.from_exponential, !even_torsion);
        for s in &deck.elements {
            prop_assert!(in_two_torsion(&data.beta, s));
        }
        if !even_torsion {
            prop_assert_eq!(deck.order(), 1usize << data.k());
        }
    }

    #[test]
    fn reeb_coefficients_solve_beta(x in 2.5f64..3.5, y in 0.5f64..1.5) {
        let data = DelzantData::from_spec(&ypq::ypq_normals(2, 1).unwrap()).unwrap();
        let xi = [3.0, x, y];
        let c = data.reeb_coefficients(&xi);
        prop_assert!(c.residual < 1e-12);
        // Minimum norm: orthogonal to the kernel.
        let a = &data.kernel_rows()[0];
        let dot: f64 = a.iter().zip(&c.b).map(|(&ai, bi)| ai as f64 * bi).sum();
        prop_assert!(dot.abs() < 1e-12);
    }
}

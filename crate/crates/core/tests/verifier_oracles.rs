use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use realform::lattice::IntMatrix;
use realform::reallink::build_system;
use realform::reeb::ypq_reeb;
use realform::verifier::{eta, eval_eta, omega, verify_flat_special, verify_link, FrameMode};
use realform::{ypq, ContactData, DelzantData, QuadricSystem, SampleSet, Tolerances};

fn setup(p: i64, q: i64) -> (QuadricSystem, ContactData) {
    let data = DelzantData::from_spec(&ypq::ypq_normals(p, q).unwrap()).unwrap();
    let coeffs = data.reeb_coefficients(&ypq_reeb(p, q).unwrap().xi);
    (
        build_system(&data, &coeffs).unwrap(),
        ContactData::new(&data, &coeffs),
    )
}

fn random_complex(rng: &mut ChaCha8Rng, d: usize) -> Vec<Complex64> {
    (0..d)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

/// Real sample with each coordinate given an independent phase.
fn phase_rotated(x: &[f64], rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    x.iter()
        .map(|&v| Complex64::from_polar(v, rng.random_range(0.0..std::f64::consts::TAU)))
        .collect()
}

#[test]
fn reeb_field_has_unit_eta_everywhere() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (p, q) in [(2, 1), (3, 2), (5, 3)] {
        let (_, ctx) = setup(p, q);
        for _ in 0..100 {
            let z = random_complex(&mut rng, 4);
            let v = eta(&ctx, &z, &ctx.reeb_field(&z)).unwrap();
            assert!((v - 1.0).abs() < 1e-12, "{v}");
        }
    }
}

#[test]
fn eta_is_anti_invariant_under_conjugation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (_, ctx) = setup(2, 1);
    for _ in 0..100 {
        let z = random_complex(&mut rng, 4);
        let x = random_complex(&mut rng, 4);
        let zc: Vec<Complex64> = z.iter().map(|c| c.conj()).collect();
        let xc: Vec<Complex64> = x.iter().map(|c| c.conj()).collect();
        let (a, b) = (eta(&ctx, &z, &x).unwrap(), eta(&ctx, &zc, &xc).unwrap());
        assert!((a + b).abs() < 1e-12 * (1.0 + a.abs()));
        assert!((omega(&x, &z) + omega(&xc, &zc)).abs() < 1e-12 * (1.0 + omega(&x, &z).abs()));
    }
}

#[test]
fn eta_is_well_defined_modulo_kernel_on_the_link() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (sys, ctx) = setup(3, 1);
    let samples = sys.sample(100, 4).unwrap();
    let a = ctx.kernel[0].clone();
    for x in &samples.points {
        let z = phase_rotated(x, &mut rng);
        assert!(ctx.moment(&z)[0].abs() < 1e-12);
        let c: f64 = rng.random_range(-0.1..0.1);
        let shifted: Vec<f64> = ctx.b.iter().zip(&a).map(|(b, a)| b + c * a).collect();
        let other = ContactData::from_parts(shifted, ctx.kernel.clone());
        assert!((ctx.r2(&z) - other.r2(&z)).abs() < 1e-12);
        let xv = random_complex(&mut rng, 4);
        let (e1, e2) = (
            eval_eta(&ctx, &z, &xv).unwrap(),
            eval_eta(&other, &z, &xv).unwrap(),
        );
        assert!((e1 - e2).norm() < 1e-12);
        assert!((eta(&other, &z, &ctx.reeb_field(&z)).unwrap() - 1.0).abs() < 1e-12);
        assert!(eta(&ctx, &z, &ctx.k_direction(0, &z)).unwrap().abs() < 1e-12);
    }
}

#[test]
fn link_checks_pass_on_ypq_samples() {
    for (p, q) in ypq::coprime_pairs(5) {
        let (sys, ctx) = setup(p, q);
        let samples = sys.sample(300, 8).unwrap();
        let report = verify_link(&sys, &ctx, &samples, &Tolerances::default());
        assert!(report.passed, "({p},{q}): {:?}", report.checks);
        assert_eq!(report.checks.len(), 8);
    }
}

#[test]
fn link_checks_catch_off_locus_points() {
    let (sys, ctx) = setup(2, 1);
    let samples = sys.sample(100, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noisy: Vec<Vec<f64>> = samples
        .points
        .iter()
        .map(|x| {
            x.iter()
                .map(|v| v + 1e-4 * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    let bad = SampleSet::from_points(&sys, noisy, samples.seed);
    let report = verify_link(&sys, &ctx, &bad, &Tolerances::default());
    assert!(!report.passed);
    assert!(!report.check("constraint_residual").unwrap().passed);
}

fn sphere_samples(n: usize, count: usize, seed: u64) -> SampleSet {
    let d = n + 1;
    let sys = QuadricSystem::new(IntMatrix::zeros(0, d), vec![1.0; d]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..count)
        .map(|_| {
            let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let r = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            g.iter().map(|v| v / r).collect()
        })
        .collect();
    SampleSet::from_points(&sys, points, seed)
}

#[test]
fn flat_model_is_special_lagrangian() {
    for n in 1..=5 {
        let samples = sphere_samples(n, 200, n as u64);
        for mode in [FrameMode::Standard, FrameMode::RotatedTangent] {
            let r = verify_flat_special(n, &samples, mode, &Tolerances::default()).unwrap();
            assert!(r.passed, "{n} {mode:?}: {:?}", r.checks);
        }
    }
}

#[test]
fn rotated_euler_frame_is_not_calibrated() {
    for n in 1..=4 {
        let samples = sphere_samples(n, 50, 7);
        let r = verify_flat_special(
            n,
            &samples,
            FrameMode::JRotatedEuler,
            &Tolerances::default(),
        )
        .unwrap();
        assert!(!r.passed);
        assert!(!r.check("im_omega_vanishing").unwrap().passed);
    }
}

//! Contact-geometry checks upstairs in `ℂᵈ` on sampled points of the real
//! locus.
//!
//! With `r² = 2 Σ_j b_j |z_j|²` the contact form and its symplectization are
//!
//! ```text
//! η_z(X)   = (2 / r²) Σ_j Im(z̄_j X_j)
//! ω(X, Y)  = 2 Σ_j Im(X̄_j Y_j)              (ω = ½ d(r² η))
//! ```
//!
//! The Reeb field is `X_j = i b_j z_j`, so `η(X) = 1`. A direction
//! `X = i A_l∘z` of the quotient torus gives `(2/r²) Σ_j A_lj |z_j|²`, which
//! is the `l`-th moment map component and vanishes on its zero level. `η`
//! depends on `b` only through `r`, and `r` does not change on that level when
//! a kernel vector is added to `b`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::delzant::{DelzantData, ReebCoefficients};
use crate::reallink::{QuadricSystem, SampleSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifierError {
    #[error("r(z) = 0; η is undefined")]
    ZeroRadius,
    #[error("vector has length {got}, expected {expected}")]
    Length { got: usize, expected: usize },
    #[error("flat-model check needs points in R^{expected}, got length {got}")]
    NotFlat { got: usize, expected: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct ContactData {
    pub b: Vec<f64>,
    /// Rows `A_l` of the kernel basis.
    pub kernel: Vec<Vec<f64>>,
}

impl ContactData {
    pub fn new(data: &DelzantData, coeffs: &ReebCoefficients) -> Self {
        Self {
            b: coeffs.b.clone(),
            kernel: data
                .kernel_rows()
                .iter()
                .map(|r| r.iter().map(|&x| x as f64).collect())
                .collect(),
        }
    }

    pub fn from_parts(b: Vec<f64>, kernel: Vec<Vec<f64>>) -> Self {
        Self { b, kernel }
    }

    pub fn d(&self) -> usize {
        self.b.len()
    }

    pub fn r2(&self, z: &[Complex64]) -> f64 {
        2.0 * self
            .b
            .iter()
            .zip(z)
            .map(|(b, z)| b * z.norm_sqr())
            .sum::<f64>()
    }

    /// Reeb field `i b∘z`.
    pub fn reeb_field(&self, z: &[Complex64]) -> Vec<Complex64> {
        self.b
            .iter()
            .zip(z)
            .map(|(b, z)| Complex64::i() * b * z)
            .collect()
    }

    /// Infinitesimal action `i A_l∘z` of the `l`-th kernel direction.
    pub fn k_direction(&self, l: usize, z: &[Complex64]) -> Vec<Complex64> {
        self.kernel[l]
            .iter()
            .zip(z)
            .map(|(a, z)| Complex64::i() * a * z)
            .collect()
    }

    /// Moment map components `Σ_j A_lj |z_j|²`.
    pub fn moment(&self, z: &[Complex64]) -> Vec<f64> {
        self.kernel
            .iter()
            .map(|a| a.iter().zip(z).map(|(a, z)| a * z.norm_sqr()).sum())
            .collect()
    }
}

/// `(2/r²) Σ_j z̄_j X_j`; its imaginary part is `η_z(X)`.
pub fn eval_eta(
    ctx: &ContactData,
    z: &[Complex64],
    x: &[Complex64],
) -> Result<Complex64, VerifierError> {
    for v in [z, x] {
        if v.len() != ctx.d() {
            return Err(VerifierError::Length {
                got: v.len(),
                expected: ctx.d(),
            });
        }
    }
    let r2 = ctx.r2(z);
    if r2 <= 0.0 {
        return Err(VerifierError::ZeroRadius);
    }
    let s: Complex64 = z.iter().zip(x).map(|(z, x)| z.conj() * x).sum();
    Ok(s * (2.0 / r2))
}

pub fn eta(ctx: &ContactData, z: &[Complex64], x: &[Complex64]) -> Result<f64, VerifierError> {
    eval_eta(ctx, z, x).map(|p| p.im)
}

/// `ω(X, Y) = 2 Σ_j Im(X̄_j Y_j)`.
pub fn omega(x: &[Complex64], y: &[Complex64]) -> f64 {
    2.0 * x.iter().zip(y).map(|(x, y)| (x.conj() * y).im).sum::<f64>()
}

pub fn complexify(x: &[f64]) -> Vec<Complex64> {
    x.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    pub residual: f64,
    pub pairing: f64,
    pub calibration: f64,
    pub imaginary: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-10,
            pairing: 1e-9,
            calibration: 1e-9,
            imaginary: 1e-12,
        }
    }
}

impl Tolerances {
    /// Every tolerance set to `t`.
    pub fn uniform(t: f64) -> Self {
        Self {
            residual: t,
            pairing: t,
            calibration: t,
            imaginary: t,
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub max_violation: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct FrameFailure {
    pub index: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct VerificationReport {
    pub passed: bool,
    pub seed: u64,
    pub sample_count: usize,
    pub checks: Vec<CheckResult>,
    pub frame_failures: Vec<FrameFailure>,
}

impl VerificationReport {
    fn assemble(
        seed: u64,
        n: usize,
        named: Vec<(&str, f64, f64)>,
        frame_failures: Vec<FrameFailure>,
    ) -> Self {
        let checks: Vec<CheckResult> = named
            .into_iter()
            .map(|(name, v, tol)| CheckResult {
                name: name.to_string(),
                max_violation: v,
                tolerance: tol,
                passed: v < tol,
                samples: n,
                seed,
            })
            .collect();
        Self {
            passed: n > 0 && frame_failures.is_empty() && checks.iter().all(|c| c.passed),
            seed,
            sample_count: n,
            checks,
            frame_failures,
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Orthonormal basis of the kernel of `jac`: Gram-Schmidt on the rows, then
/// on the standard basis vectors against them.
pub fn tangent_frame(jac: &DMatrix<f64>) -> (Vec<Vec<f64>>, usize) {
    let d = jac.ncols();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let push = |v: Vec<f64>, basis: &mut Vec<Vec<f64>>| -> bool {
        let mut w = v;
        for _ in 0..2 {
            for q in basis.iter() {
                let c: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
                for (x, y) in w.iter_mut().zip(q) {
                    *x -= c * y;
                }
            }
        }
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            basis.push(w.iter().map(|x| x / n).collect());
            true
        } else {
            false
        }
    };
    let scale = jac.amax().max(f64::MIN_POSITIVE);
    let mut row_rank = 0;
    for row in jac.row_iter() {
        let v: Vec<f64> = row.iter().map(|x| x / scale).collect();
        if push(v, &mut basis) {
            row_rank += 1;
        }
    }
    let mut frame = Vec::new();
    for j in 0..d {
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        if push(e, &mut basis) {
            frame.push(basis.last().unwrap().clone());
        }
    }
    (frame, row_rank)
}

#[derive(Default, Clone, Copy)]
struct PointMax {
    residual: f64,
    level: f64,
    eta: f64,
    omega: f64,
    cone: f64,
    reeb: f64,
    k: f64,
    tangency: f64,
}

impl PointMax {
    fn merge(self, o: Self) -> Self {
        Self {
            residual: self.residual.max(o.residual),
            level: self.level.max(o.level),
            eta: self.eta.max(o.eta),
            omega: self.omega.max(o.omega),
            cone: self.cone.max(o.cone),
            reeb: self.reeb.max(o.reeb),
            k: self.k.max(o.k),
            tangency: self.tangency.max(o.tangency),
        }
    }
}

/// Runs every link check at every sample. Samples satisfy `b·(x∘x) = 1`,
/// which is `r² = 2`; they are scaled by `1/√2` onto `r = 1` first.
pub fn verify_link(
    system: &QuadricSystem,
    ctx: &ContactData,
    samples: &SampleSet,
    tol: &Tolerances,
) -> VerificationReport {
    let expected = system.d() - system.k() - 1;
    let per_point: Vec<(PointMax, Option<FrameFailure>)> = samples
        .points
        .par_iter()
        .enumerate()
        .map(|(index, x)| check_point(system, ctx, x, index, expected))
        .collect();
    let (m, failures) = per_point.into_iter().fold(
        (PointMax::default(), Vec::new()),
        |(acc, mut f), (p, fail)| {
            f.extend(fail);
            (acc.merge(p), f)
        },
    );
    VerificationReport::assemble(
        samples.seed,
        samples.len(),
        vec![
            ("constraint_residual", m.residual, tol.residual),
            ("level_set", m.level, tol.residual),
            ("eta_vanishing", m.eta, tol.pairing),
            ("omega_vanishing", m.omega, tol.pairing),
            ("cone_tangency", m.cone, tol.residual),
            ("reeb_pairing", m.reeb, tol.pairing),
            ("k_annihilation", m.k, tol.pairing),
            ("frame_tangency", m.tangency, tol.pairing),
        ],
        failures,
    )
}

fn check_point(
    system: &QuadricSystem,
    ctx: &ContactData,
    x: &[f64],
    index: usize,
    expected: usize,
) -> (PointMax, Option<FrameFailure>) {
    let mut m = PointMax {
        residual: system.residual(x),
        ..Default::default()
    };
    let xh: Vec<f64> = x.iter().map(|v| v / std::f64::consts::SQRT_2).collect();
    let z = complexify(&xh);
    let r2 = ctx.r2(&z);
    m.level = (r2.sqrt() - 1.0).abs();
    if r2 <= 0.0 {
        return (
            m,
            Some(FrameFailure {
                index,
                reason: "r = 0".into(),
            }),
        );
    }
    let u: Vec<f64> = xh.iter().map(|v| v * v).collect();
    m.cone = ctx
        .kernel
        .iter()
        .map(|a| 2.0 * a.iter().zip(&u).map(|(a, u)| a * u).sum::<f64>())
        .fold(0.0, |acc: f64, v| acc.max(v.abs()));
    m.reeb = (eta(ctx, &z, &ctx.reeb_field(&z)).unwrap() - 1.0).abs();
    m.k = (0..ctx.kernel.len())
        .map(|l| eta(ctx, &z, &ctx.k_direction(l, &z)).unwrap().abs())
        .fold(0.0, f64::max);

    let jac = system.jacobian(x);
    let (frame, row_rank) = tangent_frame(&jac);
    let mut failure = None;
    if row_rank != system.k() + 1 || frame.len() != expected {
        failure = Some(FrameFailure {
            index,
            reason: format!(
                "Jacobian rank {row_rank}, tangent frame of size {} (expected {expected})",
                frame.len()
            ),
        });
    }
    let jn = jac.amax().max(f64::MIN_POSITIVE);
    let mut vecs: Vec<Vec<Complex64>> = frame.iter().map(|t| complexify(t)).collect();
    for t in &frame {
        let jt = &jac * DVector::from_column_slice(t);
        m.tangency = m.tangency.max(jt.amax() / jn);
        m.eta = m.eta.max(eta(ctx, &z, &complexify(t)).unwrap().abs());
    }
    vecs.push(z.clone());
    for i in 0..vecs.len() {
        for j in i + 1..vecs.len() {
            m.omega = m.omega.max(omega(&vecs[i], &vecs[j]).abs());
        }
    }
    (m, failure)
}

/// How the frame for the flat-model check is built.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameMode {
    /// `{x, t_1..t_n}` with `t` from Gram-Schmidt.
    Standard,
    /// The tangent vectors rotated by a random special orthogonal matrix.
    RotatedTangent,
    /// `x` replaced by `i x`; the plane is no longer Lagrangian.
    JRotatedEuler,
}

fn complex_det(m: &[Vec<Complex64>]) -> Complex64 {
    let n = m.len();
    let mat = nalgebra::DMatrix::<Complex64>::from_fn(n, n, |i, j| m[j][i]);
    mat.determinant()
}

fn real_gram_det(m: &[Vec<Complex64>]) -> f64 {
    let n = m.len();
    let g = DMatrix::<f64>::from_fn(n, n, |i, j| {
        m[i].iter().zip(&m[j]).map(|(a, b)| (a.conj() * b).re).sum()
    });
    g.determinant()
}

fn random_rotation(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// `Ω = dz_1 ∧ … ∧ dz_{n+1}` on the cone frame at each sample of `S^n`.
pub fn verify_flat_special(
    n: usize,
    samples: &SampleSet,
    mode: FrameMode,
    tol: &Tolerances,
) -> Result<VerificationReport, VerifierError> {
    let d = n + 1;
    if let Some(x) = samples.points.iter().find(|x| x.len() != d) {
        return Err(VerifierError::NotFlat {
            got: x.len(),
            expected: d,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(samples.seed);
    let rotations: Vec<DMatrix<f64>> = match mode {
        FrameMode::RotatedTangent => (0..samples.len())
            .map(|_| random_rotation(n, &mut rng))
            .collect(),
        _ => Vec::new(),
    };
    let mut im_max: f64 = 0.0;
    let mut cal_max: f64 = 0.0;
    let mut sphere_max: f64 = 0.0;
    let mut failures = Vec::new();
    for (index, x) in samples.points.iter().enumerate() {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        sphere_max = sphere_max.max((norm - 1.0).abs());
        let jac = DMatrix::from_row_slice(1, d, x);
        let (mut tangent, _) = tangent_frame(&jac);
        if tangent.len() != n {
            failures.push(FrameFailure {
                index,
                reason: format!("tangent frame of size {}", tangent.len()),
            });
            continue;
        }
        if let Some(q) = rotations.get(index) {
            tangent = (0..n)
                .map(|i| {
                    (0..d)
                        .map(|c| (0..n).map(|k| q[(k, i)] * tangent[k][c]).sum())
                        .collect()
                })
                .collect();
        }
        let euler: Vec<Complex64> = match mode {
            FrameMode::JRotatedEuler => x.iter().map(|&v| Complex64::new(0.0, v)).collect(),
            _ => complexify(x),
        };
        let mut frame = vec![euler];
        frame.extend(tangent.iter().map(|t| complexify(t)));
        let omega = complex_det(&frame);
        let vol = real_gram_det(&frame).max(0.0).sqrt();
        im_max = im_max.max(omega.im.abs());
        cal_max = cal_max.max((omega.re.abs() - vol).abs());
    }
    Ok(VerificationReport::assemble(
        samples.seed,
        samples.len(),
        vec![
            ("unit_sphere", sphere_max, tol.residual),
            ("im_omega_vanishing", im_max, tol.imaginary),
            ("calibration_equality", cal_max, tol.calibration),
        ],
        failures,
    ))
}

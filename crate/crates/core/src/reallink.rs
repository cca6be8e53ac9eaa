//! The real locus of the link: points `x ∈ ℝᵈ` with `A·(x∘x) = 0` and
//! `b·(x∘x) = 1`.
//!
//! In `u = x∘x` the equations are linear, so the locus is the sign-lift of
//! the polytope `P = {u >= 0, A u = 0, b·u = 1}`. Sampling walks `P` by
//! hit-and-run and attaches random signs.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cone::combinations;
use crate::delzant::{DeckGroup, DelzantData, ReebCoefficients, SignVector};
use crate::lattice::IntMatrix;

pub const CHAINS: usize = 8;
const BURN_IN: usize = 200;
const THIN: usize = 10;
const MAX_REJECTIONS: usize = 1000;
const VERTEX_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RealLinkError {
    #[error("b has length {b}, A has {a} columns")]
    Shape { a: usize, b: usize },
    #[error("the polytope {{u >= 0, A u = 0, b·u = 1}} is empty")]
    Infeasible,
    #[error("the polytope {{u >= 0, A u = 0, b·u = 1}} is unbounded")]
    Unbounded,
    #[error("degenerate system: {0}")]
    Degenerate(String),
    #[error("sampler produced no regular point after {0} attempts")]
    SamplerFailed(usize),
}

/// `{x : A (x∘x) = 0, b·(x∘x) = 1}` together with the vertex description of
/// its `u`-polytope.
#[derive(Clone, Debug, Serialize)]
pub struct QuadricSystem {
    pub a: IntMatrix,
    pub b: Vec<f64>,
    #[serde(skip)]
    polytope: Polytope,
}

#[derive(Clone, Debug, Default)]
struct Polytope {
    vertices: Vec<Vec<f64>>,
    center: Vec<f64>,
    /// Orthonormal basis of the directions spanned by `P`.
    directions: Vec<Vec<f64>>,
    /// `E = [A; b]` and its pseudo-inverse, used to pull drifted iterates
    /// back onto `E u = e`.
    e: DMatrix<f64>,
    e_pinv: DMatrix<f64>,
}

fn stacked(a: &[Vec<f64>], b: &[f64]) -> DMatrix<f64> {
    let d = b.len();
    let mut m = DMatrix::zeros(a.len() + 1, d);
    for (i, row) in a.iter().enumerate() {
        for j in 0..d {
            m[(i, j)] = row[j];
        }
    }
    for j in 0..d {
        m[(a.len(), j)] = b[j];
    }
    m
}

fn rank(m: &DMatrix<f64>, rel: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel * top).count()
}

fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone()
        .pseudo_inverse(1e-12 * m.amax().max(1.0))
        .expect("SVD pseudo-inverse")
}

/// Basic feasible solutions of `{u >= 0, M u = e_last}` for full-row-rank `M`.
fn vertices(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let (r, d) = m.shape();
    let mut rhs = DVector::zeros(r);
    rhs[r - 1] = 1.0;
    let mut out: Vec<Vec<f64>> = Vec::new();
    for basis in combinations(d, r) {
        let sub = m.select_columns(&basis);
        let Some(lu) = Some(sub.lu()).filter(|lu| lu.determinant().abs() > 1e-12) else {
            continue;
        };
        let Some(sol) = lu.solve(&rhs) else {
            continue;
        };
        if sol.iter().any(|&x| x < -VERTEX_TOL) {
            continue;
        }
        let mut u = vec![0.0; d];
        for (k, &j) in basis.iter().enumerate() {
            u[j] = sol[k].max(0.0);
        }
        if !out
            .iter()
            .any(|v| v.iter().zip(&u).all(|(a, b)| (a - b).abs() < 1e-10))
        {
            out.push(u);
        }
    }
    out
}

fn orthonormal_span(vectors: &[Vec<f64>], d: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
                for (x, y) in w.iter_mut().zip(q) {
                    *x -= c * y;
                }
            }
        }
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            basis.push(w.iter().map(|x| x / n).collect());
        }
        if basis.len() == d {
            break;
        }
    }
    basis
}

impl QuadricSystem {
    pub fn new(a: IntMatrix, b: Vec<f64>) -> Result<Self, RealLinkError> {
        let d = b.len();
        if a.cols() != d && a.rows() != 0 {
            return Err(RealLinkError::Shape { a: a.cols(), b: d });
        }
        let a = if a.rows() == 0 {
            IntMatrix::zeros(0, d)
        } else {
            a
        };
        let af = a_rows_f64(&a);
        let e = stacked(&af, &b);
        let k = af.len();
        let a_rank = rank(&DMatrix::from_fn(k, d, |i, j| af[i][j]), 1e-12);
        if a_rank < k {
            return Err(RealLinkError::Degenerate(format!(
                "A has rank {a_rank} < {k} rows"
            )));
        }
        if rank(&e, 1e-12) < k + 1 {
            // b lies in the row space of A, so b·u = 1 contradicts A u = 0.
            return Err(RealLinkError::Infeasible);
        }
        let verts = vertices(&e);
        if verts.is_empty() {
            return Err(RealLinkError::Infeasible);
        }
        // Recession directions {w >= 0, A w = 0, b·w = 0} normalized by 1·w = 1.
        // If 1 is in the row space of [A; b] there are none.
        let rec = e.clone().insert_row(k + 1, 1.0);
        if rank(&rec, 1e-12) == k + 2 && !vertices(&rec).is_empty() {
            return Err(RealLinkError::Unbounded);
        }
        let center: Vec<f64> = (0..d)
            .map(|j| verts.iter().map(|v| v[j]).sum::<f64>() / verts.len() as f64)
            .collect();
        let diffs: Vec<Vec<f64>> = verts
            .iter()
            .map(|v| v.iter().zip(&center).map(|(a, c)| a - c).collect())
            .collect();
        let directions = orthonormal_span(&diffs, d);
        let e_pinv = pinv(&e);
        Ok(Self {
            a,
            b,
            polytope: Polytope {
                vertices: verts,
                center,
                directions,
                e,
                e_pinv,
            },
        })
    }

    pub fn d(&self) -> usize {
        self.b.len()
    }

    pub fn k(&self) -> usize {
        self.a.rows()
    }

    pub fn a_rows(&self) -> Vec<Vec<f64>> {
        a_rows_f64(&self.a)
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.polytope.vertices
    }

    /// Dimension of the polytope `P`, which is also the dimension of the locus.
    pub fn polytope_dim(&self) -> usize {
        self.polytope.directions.len()
    }

    /// `(A (x∘x), b·(x∘x) - 1)`.
    pub fn residuals(&self, x: &[f64]) -> Vec<f64> {
        let u: Vec<f64> = x.iter().map(|v| v * v).collect();
        let mut r: Vec<f64> = self
            .a_rows()
            .iter()
            .map(|row| row.iter().zip(&u).map(|(a, b)| a * b).sum())
            .collect();
        r.push(self.b.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() - 1.0);
        r
    }

    pub fn residual(&self, x: &[f64]) -> f64 {
        self.residuals(x).iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Rows `2 a_i∘x` and `2 b∘x`.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.d();
        let mut rows = self.a_rows();
        rows.push(self.b.clone());
        DMatrix::from_fn(rows.len(), d, |i, j| 2.0 * rows[i][j] * x[j])
    }

    pub fn jacobian_rank(&self, x: &[f64]) -> usize {
        rank(&self.jacobian(x), 1e-9)
    }

    pub fn sample(&self, count: usize, seed: u64) -> Result<SampleSet, RealLinkError> {
        sample(self, count, seed)
    }
}

fn a_rows_f64(a: &IntMatrix) -> Vec<Vec<f64>> {
    let f = a.to_f64();
    (0..a.rows())
        .map(|i| f[i * a.cols()..(i + 1) * a.cols()].to_vec())
        .collect()
}

/// `A = ᵗ(kernel basis)`, `b` from the Reeb coefficients.
pub fn build_system(
    data: &DelzantData,
    coeffs: &ReebCoefficients,
) -> Result<QuadricSystem, RealLinkError> {
    QuadricSystem::new(data.kernel.transpose(), coeffs.b.clone())
}

/// Solution sets of `[A; b] u = e_last` agree: same minimum-norm point and
/// the same row space, to `tol`.
pub fn systems_equivalent_tol(s1: &QuadricSystem, s2: &QuadricSystem, tol: f64) -> bool {
    if s1.d() != s2.d() {
        return false;
    }
    let canon = |s: &QuadricSystem| {
        let mut m = s.polytope.e.clone();
        for mut row in m.row_iter_mut() {
            let n = row.norm();
            if n > 0.0 {
                row /= n;
            }
        }
        let scale: Vec<f64> = s.polytope.e.row_iter().map(|r| r.norm()).collect();
        let mut rhs = DVector::zeros(m.nrows());
        let last = m.nrows() - 1;
        rhs[last] = 1.0 / scale[last];
        let p = pinv(&m);
        let particular = &p * &rhs;
        let consistent = (&m * &particular - &rhs).amax() < tol;
        let projector = &p * &m;
        (particular, projector, consistent)
    };
    let (p1, r1, c1) = canon(s1);
    let (p2, r2, c2) = canon(s2);
    if !(c1 && c2) {
        return c1 == c2;
    }
    let scale = p1.amax().max(1.0);
    (p1 - p2).amax() < tol * scale && (r1 - r2).amax() < tol
}

pub fn systems_equivalent(s1: &QuadricSystem, s2: &QuadricSystem) -> bool {
    systems_equivalent_tol(s1, s2, 1e-9)
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleSet {
    pub seed: u64,
    pub points: Vec<Vec<f64>>,
    /// Largest absolute equation residual at each point.
    pub residuals: Vec<f64>,
    pub residual_max: f64,
    pub jacobian_ranks: Vec<usize>,
    /// Common Jacobian rank, or the smallest one seen if they differ.
    pub jacobian_rank: usize,
}

impl SampleSet {
    pub fn from_points(system: &QuadricSystem, points: Vec<Vec<f64>>, seed: u64) -> Self {
        let residuals: Vec<f64> = points.iter().map(|x| system.residual(x)).collect();
        let jacobian_ranks: Vec<usize> = points.iter().map(|x| system.jacobian_rank(x)).collect();
        Self {
            seed,
            residual_max: residuals.iter().fold(0.0, |m: f64, r| m.max(*r)),
            jacobian_rank: jacobian_ranks.iter().copied().min().unwrap_or(0),
            points,
            residuals,
            jacobian_ranks,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sample set serializes")
    }
}

/// Independent per-chain seeds drawn from the master seed.
pub fn chain_seeds(seed: u64, chains: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..chains).map(|_| rng.random()).collect()
}

pub fn sample(system: &QuadricSystem, count: usize, seed: u64) -> Result<SampleSet, RealLinkError> {
    let per_chain = count.div_ceil(CHAINS);
    let seeds = chain_seeds(seed, CHAINS);
    let chains: Vec<Result<Vec<Vec<f64>>, RealLinkError>> = seeds
        .par_iter()
        .map(|&s| run_chain(system, per_chain, s))
        .collect();
    let mut points = Vec::with_capacity(count);
    for c in chains {
        points.extend(c?);
    }
    points.truncate(count);
    Ok(SampleSet::from_points(system, points, seed))
}

fn run_chain(system: &QuadricSystem, n: usize, seed: u64) -> Result<Vec<Vec<f64>>, RealLinkError> {
    let poly = &system.polytope;
    let d = system.d();
    let target = system.k() + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = poly.center.clone();
    let mut out = Vec::with_capacity(n);
    let mut rejections = 0;
    let mut step = 0usize;
    while out.len() < n {
        hit_and_run_step(poly, &mut u, &mut rng);
        step += 1;
        if step < BURN_IN || !(step - BURN_IN).is_multiple_of(THIN) {
            continue;
        }
        let x: Vec<f64> = (0..d)
            .map(|j| {
                let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                s * u[j].sqrt()
            })
            .collect();
        if system.jacobian_rank(&x) == target && system.residual(&x) < 1e-12 {
            out.push(x);
        } else {
            rejections += 1;
            if rejections > MAX_REJECTIONS {
                return Err(RealLinkError::SamplerFailed(rejections));
            }
        }
    }
    Ok(out)
}

fn hit_and_run_step(poly: &Polytope, u: &mut [f64], rng: &mut ChaCha8Rng) {
    if poly.directions.is_empty() {
        return;
    }
    let d = u.len();
    let mut dir = vec![0.0; d];
    for q in &poly.directions {
        let g: f64 = rng.sample(StandardNormal);
        for (x, y) in dir.iter_mut().zip(q) {
            *x += g * y;
        }
    }
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for j in 0..d {
        if dir[j].abs() < 1e-15 {
            continue;
        }
        let t = -u[j] / dir[j];
        if dir[j] > 0.0 {
            lo = lo.max(t);
        } else {
            hi = hi.min(t);
        }
    }
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return;
    }
    let t = rng.random_range(lo..hi);
    for j in 0..d {
        u[j] = (u[j] + t * dir[j]).max(0.0);
    }
    // Pull back onto E u = e to stop drift.
    let ev = DVector::from_column_slice(u);
    let mut rhs = DVector::zeros(poly.e.nrows());
    rhs[poly.e.nrows() - 1] = 1.0;
    let corr = &poly.e_pinv * (&poly.e * &ev - rhs);
    for j in 0..d {
        u[j] = (u[j] - corr[j]).max(0.0);
    }
}

/// Lexicographically smallest point of the deck orbit of `x`.
pub fn quotient_representative(x: &[f64], deck: &DeckGroup) -> Vec<f64> {
    orbit(x, deck)
        .into_iter()
        .min_by(|a, b| lex_cmp(a, b))
        .unwrap_or_else(|| x.to_vec())
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Distinct images of `x` under the deck group.
pub fn orbit(x: &[f64], deck: &DeckGroup) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for s in &deck.elements {
        let y = s.apply(x);
        if !out.iter().any(|z| lex_cmp(z, &y).is_eq()) {
            out.push(y);
        }
    }
    out
}

/// How a sign vector acts on one circle factor `{c_1 x_i² + c_2 x_j² = r}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorAction {
    Identity,
    Reflection,
    Antipodal,
}

fn factor_action(s: &SignVector, coords: [usize; 2]) -> FactorAction {
    match (s.flips(coords[0]), s.flips(coords[1])) {
        (true, true) => FactorAction::Antipodal,
        (false, false) => FactorAction::Identity,
        _ => FactorAction::Reflection,
    }
}

/// `{c·u_I = 1}` in the coordinates `I`, and the fiber `{a_J·u_J = -a_I·u_I}`.
#[derive(Clone, Debug, Serialize)]
pub struct ProductForm {
    pub ellipse_coords: [usize; 2],
    pub ellipse_coeffs: [f64; 2],
    pub fiber_coords: [usize; 2],
    /// `a_J` normalized to be positive.
    pub fiber_coeffs: [f64; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct ElementAction {
    pub element: SignVector,
    pub on_ellipse: Option<FactorAction>,
    pub on_fiber: Option<FactorAction>,
    /// Smallest `|s·x - x|` over the samples.
    pub min_displacement: f64,
    pub free_on_samples: bool,
    /// Free by the product-form analysis.
    pub free: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TopologyReport {
    pub upstairs: String,
    pub product_form: Option<ProductForm>,
    pub elements: Vec<ElementAction>,
    pub quotient: String,
    /// Connected components of the ε-neighborhood graph on the samples.
    /// Diagnostic only.
    pub sample_components: usize,
    pub epsilon: f64,
    pub diagnostics: Vec<String>,
}

/// Smallest displacement that counts as moving a point.
pub const FREE_DISPLACEMENT: f64 = 1e-6;

fn recognize_product(system: &QuadricSystem, tol: f64) -> Option<ProductForm> {
    let a = &system.a_rows()[0];
    let b = &system.b;
    for pair in combinations(4, 2) {
        let (i, j) = ([pair[0], pair[1]], {
            let rest: Vec<usize> = (0..4).filter(|c| !pair.contains(c)).collect();
            [rest[0], rest[1]]
        });
        // c = b + t a with c_J = 0.
        let t = if a[j[0]].abs() > tol {
            -b[j[0]] / a[j[0]]
        } else if a[j[1]].abs() > tol {
            -b[j[1]] / a[j[1]]
        } else {
            0.0
        };
        let c: Vec<f64> = b.iter().zip(a).map(|(x, y)| x + t * y).collect();
        if c[j[0]].abs() > tol || c[j[1]].abs() > tol {
            continue;
        }
        if !(c[i[0]] > tol && c[i[1]] > tol) {
            continue;
        }
        let sign = if a[j[0]] > 0.0 { 1.0 } else { -1.0 };
        let fiber = [sign * a[j[0]], sign * a[j[1]]];
        let base = [-sign * a[i[0]], -sign * a[i[1]]];
        if fiber.iter().all(|&f| f > tol) && base.iter().all(|&f| f > tol) {
            return Some(ProductForm {
                ellipse_coords: i,
                ellipse_coeffs: [c[i[0]], c[i[1]]],
                fiber_coords: j,
                fiber_coeffs: fiber,
            });
        }
    }
    None
}

fn components(points: &[Vec<f64>]) -> (usize, f64) {
    let n = points.len();
    if n == 0 {
        return (0, 0.0);
    }
    let dist = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let nn_max = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| dist(&points[i], &points[j]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let eps = if nn_max.is_finite() {
        2.0 * nn_max
    } else {
        0.0
    };
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if dist(&points[i], &points[j]) <= eps {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let roots = (0..n).filter(|&i| find(&mut parent, i) == i).count();
    (roots, eps)
}

/// Recognizes an ellipse-times-circle product structure for `d = 4, k = 1`
/// and describes how each deck element acts on it.
pub fn classify_ypq(
    system: &QuadricSystem,
    deck: &DeckGroup,
    samples: &SampleSet,
) -> TopologyReport {
    let (sample_components, epsilon) = components(&samples.points);
    let displacement = |s: &SignVector| {
        samples
            .points
            .iter()
            .map(|x| {
                x.iter()
                    .zip(s.apply(x))
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    };
    if system.k() == 0 {
        return TopologyReport {
            upstairs: format!("real sphere S^{}", system.d() - 1),
            product_form: None,
            elements: Vec::new(),
            quotient: format!("no deck quotient; real sphere S^{}", system.d() - 1),
            sample_components,
            epsilon,
            diagnostics: Vec::new(),
        };
    }
    let mut diagnostics = Vec::new();
    if system.d() != 4 || system.k() != 1 {
        diagnostics.push(format!(
            "expected d = 4, k = 1; got d = {}, k = {}",
            system.d(),
            system.k()
        ));
    }
    let product = (system.d() == 4 && system.k() == 1)
        .then(|| recognize_product(system, 1e-9))
        .flatten();
    if product.is_none() && diagnostics.is_empty() {
        diagnostics
            .push("no coordinate pair splits the system into ellipse and circle fiber".into());
    }
    let elements: Vec<ElementAction> = deck
        .nontrivial()
        .map(|s| {
            let on_ellipse = product.as_ref().map(|p| factor_action(s, p.ellipse_coords));
            let on_fiber = product.as_ref().map(|p| factor_action(s, p.fiber_coords));
            let free = product.as_ref().map(|_| {
                on_ellipse == Some(FactorAction::Antipodal)
                    || on_fiber == Some(FactorAction::Antipodal)
            });
            let min_displacement = displacement(s);
            ElementAction {
                element: *s,
                on_ellipse,
                on_fiber,
                min_displacement,
                free_on_samples: min_displacement > FREE_DISPLACEMENT,
                free,
            }
        })
        .collect();
    let upstairs = if product.is_some() {
        "torus"
    } else {
        "unclassified"
    }
    .to_string();
    let quotient = match (&product, elements.as_slice()) {
        (Some(_), []) => "torus".to_string(),
        (Some(_), [e]) if e.free == Some(true) && e.free_on_samples => {
            // A free involution of T² is a translation (torus quotient)
            // unless it reverses the orientation of the other factor.
            let reflects = e.on_ellipse == Some(FactorAction::Reflection)
                || e.on_fiber == Some(FactorAction::Reflection);
            if reflects { "klein bottle" } else { "torus" }.to_string()
        }
        _ => "unclassified".to_string(),
    };
    for e in &elements {
        if e.free.is_some_and(|f| f != e.free_on_samples) {
            diagnostics.push(format!(
                "element {} : product analysis and sample displacement disagree",
                e.element
            ));
        }
    }
    TopologyReport {
        upstairs,
        product_form: product,
        elements,
        quotient,
        sample_components,
        epsilon,
        diagnostics,
    }
}

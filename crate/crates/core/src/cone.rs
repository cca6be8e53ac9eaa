//! Rational polyhedral cones `C = {y : <y, λ_i> >= 0}` given by integer facet
//! normals, with the validity predicates needed for the toric construction.
//!
//! Extreme rays are found by a naive double description: every
//! `(dim - 1)`-subset of normals with a one-dimensional common kernel gives a
//! candidate ray, kept if it pairs nonnegatively with every normal. Faces are
//! enumerated by intersecting with one more normal at a time, starting from
//! the whole cone.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{self, IntMatrix, LatticeError};

/// Largest number of normals accepted; face enumeration is exponential.
pub const MAX_NORMALS: usize = 16;

#[derive(Debug, Error)]
pub enum ConeError {
    #[error("malformed cone: {0}")]
    Malformed(String),
    #[error("cone contains a line: normals span only {rank} of {dim} dimensions")]
    ContainsLine { rank: usize, dim: usize },
    #[error("cone has empty interior")]
    EmptyInterior,
    #[error("cone failed validation")]
    NotGood(Box<ValidationReport>),
    #[error("ray entries overflow 64-bit integers")]
    Overflow,
}

/// A cone given by its inward facet normals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub dim: usize,
    pub normals: Vec<Vec<i64>>,
}

/// Outcome of one validity predicate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub passed: bool,
    pub witnesses: Vec<String>,
}

impl Check {
    fn from_witnesses(witnesses: Vec<String>) -> Self {
        Self {
            passed: witnesses.is_empty(),
            witnesses,
        }
    }

    fn skipped(reason: &str) -> Self {
        Self {
            passed: false,
            witnesses: vec![format!("not decided: {reason}")],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub well_formed: Check,
    pub primitive: Check,
    pub minimal: Check,
    pub strongly_convex: Check,
    pub nonempty_interior: Check,
    pub good: Check,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        [
            &self.well_formed,
            &self.primitive,
            &self.minimal,
            &self.strongly_convex,
            &self.nonempty_interior,
            &self.good,
        ]
        .iter()
        .all(|c| c.passed)
    }

    /// All witnesses, prefixed by the check that produced them.
    pub fn failures(&self) -> Vec<String> {
        let named = [
            ("well_formed", &self.well_formed),
            ("primitive", &self.primitive),
            ("minimal", &self.minimal),
            ("strongly_convex", &self.strongly_convex),
            ("nonempty_interior", &self.nonempty_interior),
            ("good", &self.good),
        ];
        named
            .iter()
            .filter(|(_, c)| !c.passed)
            .flat_map(|(n, c)| c.witnesses.iter().map(move |w| format!("{n}: {w}")))
            .collect()
    }
}

/// A nonzero face of the cone.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Face {
    /// Indices of every normal vanishing on the face (empty for the whole cone).
    pub normals: Vec<usize>,
    /// Indices into the ray list of the extreme rays lying on the face.
    pub rays: Vec<usize>,
    pub dim: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceLattice {
    pub faces: Vec<Face>,
}

impl FaceLattice {
    /// Faces of dimension `dim`.
    pub fn of_dim(&self, dim: usize) -> impl Iterator<Item = &Face> {
        self.faces.iter().filter(move |f| f.dim == dim)
    }
}

/// Primitive integer generators of the extreme rays, lexicographically sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RayList {
    pub rays: Vec<Vec<i64>>,
}

fn dot(a: &[i64], b: &[i64]) -> i128 {
    a.iter().zip(b).map(|(&x, &y)| x as i128 * y as i128).sum()
}

fn to_big(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

fn fmt_vec(v: &[i64]) -> String {
    let parts: Vec<String> = v.iter().map(i64::to_string).collect();
    format!("({})", parts.join(", "))
}

fn rank_of(vectors: &[&[i64]], dim: usize) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let cols: Vec<Vec<BigInt>> = vectors.iter().map(|v| to_big(v)).collect();
    IntMatrix::from_columns(dim, &cols)
        .expect("vectors have ambient length")
        .rank()
}

/// Extreme rays of `{y : <y, n> >= 0 for n in normals}` for a pointed cone.
fn extreme_rays(dim: usize, normals: &[Vec<i64>]) -> Result<Vec<Vec<i64>>, ConeError> {
    let refs: Vec<&[i64]> = normals.iter().map(Vec::as_slice).collect();
    let rank = rank_of(&refs, dim);
    if rank < dim {
        return Err(ConeError::ContainsLine { rank, dim });
    }
    if dim == 1 {
        // the cone is a half-line; normals all have the same sign or it is {0}
        let pos = normals.iter().all(|n| n[0] >= 0);
        let neg = normals.iter().all(|n| n[0] <= 0);
        return match (pos, neg) {
            (true, _) => Ok(vec![vec![1]]),
            (_, true) => Ok(vec![vec![-1]]),
            _ => Err(ConeError::EmptyInterior),
        };
    }
    let mut found = BTreeSet::new();
    for subset in combinations(normals.len(), dim - 1) {
        let rows: Vec<&Vec<i64>> = subset.iter().map(|&i| &normals[i]).collect();
        let sub = IntMatrix::from_rows(&rows).expect("normals share a length");
        let kernel = lattice::integer_kernel_basis(&sub);
        if kernel.cols() != 1 {
            continue;
        }
        let ray: Vec<i64> = kernel
            .column(0)
            .iter()
            .map(ToPrimitive::to_i64)
            .collect::<Option<_>>()
            .ok_or(ConeError::Overflow)?;
        let pairings: Vec<i128> = normals.iter().map(|n| dot(n, &ray)).collect();
        if pairings.iter().all(|&p| p >= 0) {
            found.insert(ray);
        } else if pairings.iter().all(|&p| p <= 0) {
            found.insert(ray.iter().map(|x| -x).collect());
        }
    }
    let rays: Vec<Vec<i64>> = found.into_iter().collect();
    let ray_refs: Vec<&[i64]> = rays.iter().map(Vec::as_slice).collect();
    if rank_of(&ray_refs, dim) < dim {
        return Err(ConeError::EmptyInterior);
    }
    Ok(rays)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

fn enumerate_faces(dim: usize, normals: &[Vec<i64>], rays: &[Vec<i64>]) -> FaceLattice {
    let vanishing = |ray_set: &[usize]| -> Vec<usize> {
        (0..normals.len())
            .filter(|&i| ray_set.iter().all(|&r| dot(&normals[i], &rays[r]) == 0))
            .collect()
    };
    let face_dim = |ray_set: &[usize]| -> usize {
        let refs: Vec<&[i64]> = ray_set.iter().map(|&r| rays[r].as_slice()).collect();
        rank_of(&refs, dim)
    };

    let all: Vec<usize> = (0..rays.len()).collect();
    let mut seen: BTreeMap<Vec<usize>, Face> = BTreeMap::new();
    let top = Face {
        normals: vanishing(&all),
        rays: all,
        dim,
    };
    let mut queue = vec![top.clone()];
    seen.insert(top.normals.clone(), top);
    while let Some(face) = queue.pop() {
        for (j, nj) in normals.iter().enumerate() {
            if face.normals.contains(&j) {
                continue;
            }
            let sub: Vec<usize> = face
                .rays
                .iter()
                .copied()
                .filter(|&r| dot(nj, &rays[r]) == 0)
                .collect();
            if sub.is_empty() {
                continue;
            }
            let key = vanishing(&sub);
            if seen.contains_key(&key) {
                continue;
            }
            let f = Face {
                normals: key.clone(),
                dim: face_dim(&sub),
                rays: sub,
            };
            queue.push(f.clone());
            seen.insert(key, f);
        }
    }
    let mut faces: Vec<Face> = seen.into_values().collect();
    faces.sort_by(|a, b| b.dim.cmp(&a.dim).then_with(|| a.normals.cmp(&b.normals)));
    FaceLattice { faces }
}

impl ConeSpec {
    pub fn new(dim: usize, normals: Vec<Vec<i64>>) -> Self {
        Self { dim, normals }
    }

    /// Nonnegative orthant of `R^dim`.
    pub fn orthant(dim: usize) -> Self {
        let normals = (0..dim)
            .map(|i| (0..dim).map(|j| i64::from(i == j)).collect())
            .collect();
        Self { dim, normals }
    }

    fn shape_problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.dim == 0 {
            out.push("dimension must be positive".to_string());
        }
        let d = self.normals.len();
        if d < self.dim {
            out.push(format!("{d} normals, need at least dim = {}", self.dim));
        }
        if d > MAX_NORMALS {
            out.push(format!("{d} normals exceeds the limit of {MAX_NORMALS}"));
        }
        for (i, n) in self.normals.iter().enumerate() {
            if n.len() != self.dim {
                out.push(format!(
                    "normal {i} has length {}, expected {}",
                    n.len(),
                    self.dim
                ));
            } else if n.iter().all(|&x| x == 0) {
                out.push(format!("normal {i} is zero"));
            }
        }
        out
    }

    /// Runs every validity predicate; failures are report entries.
    pub fn validate(&self) -> ValidationReport {
        let shape = self.shape_problems();
        if !shape.is_empty() {
            let skip = || Check::skipped("cone is malformed");
            return ValidationReport {
                well_formed: Check::from_witnesses(shape),
                primitive: skip(),
                minimal: skip(),
                strongly_convex: skip(),
                nonempty_interior: skip(),
                good: skip(),
            };
        }
        let well_formed = Check::from_witnesses(Vec::new());

        let primitive = Check::from_witnesses(
            self.normals
                .iter()
                .enumerate()
                .filter_map(|(i, n)| {
                    let g = lattice::gcd_of(&to_big(n));
                    (!g.is_one())
                        .then(|| format!("normal {i} {} is not primitive: gcd {g}", fmt_vec(n)))
                })
                .collect(),
        );

        let rays = match extreme_rays(self.dim, &self.normals) {
            Ok(r) => r,
            Err(ConeError::ContainsLine { rank, dim }) => {
                let why = format!(
                    "normals span only {rank} of {dim} dimensions, so the cone contains a line"
                );
                return ValidationReport {
                    well_formed,
                    primitive,
                    minimal: Check::skipped("cone is not strongly convex"),
                    strongly_convex: Check::from_witnesses(vec![why]),
                    nonempty_interior: Check::skipped("cone is not strongly convex"),
                    good: Check::skipped("cone is not strongly convex"),
                };
            }
            Err(_) => {
                return ValidationReport {
                    well_formed,
                    primitive,
                    minimal: Check::skipped("cone has empty interior"),
                    strongly_convex: Check::from_witnesses(Vec::new()),
                    nonempty_interior: Check::from_witnesses(vec![
                        "extreme rays do not span the ambient space".to_string(),
                    ]),
                    good: Check::skipped("cone has empty interior"),
                };
            }
        };

        let minimal = Check::from_witnesses(self.redundant_normals(&rays));
        let faces = enumerate_faces(self.dim, &self.normals, &rays);
        let mut good_witnesses = Vec::new();
        if !primitive.passed {
            good_witnesses.push("normals are not all primitive".to_string());
        }
        if !minimal.passed {
            good_witnesses.push("normals are not minimal".to_string());
        }
        good_witnesses.extend(self.face_failures(&faces));

        ValidationReport {
            well_formed,
            primitive,
            minimal,
            strongly_convex: Check::from_witnesses(Vec::new()),
            nonempty_interior: Check::from_witnesses(Vec::new()),
            good: Check::from_witnesses(good_witnesses),
        }
    }

    fn redundant_normals(&self, rays: &[Vec<i64>]) -> Vec<String> {
        let mut out = Vec::new();
        for (j, n) in self.normals.iter().enumerate() {
            let on_facet: Vec<&[i64]> = rays
                .iter()
                .filter(|r| dot(n, r) == 0)
                .map(Vec::as_slice)
                .collect();
            if rank_of(&on_facet, self.dim) + 1 < self.dim {
                out.push(format!("normal {j} {} does not define a facet", fmt_vec(n)));
                continue;
            }
            let parallel = self.normals.iter().enumerate().find(|&(i, m)| {
                i != j && rank_of(&[n.as_slice(), m.as_slice()], self.dim) == 1 && dot(n, m) > 0
            });
            if let Some((i, _)) = parallel {
                out.push(format!("normal {j} {} repeats normal {i}", fmt_vec(n)));
            }
        }
        out
    }

    /// Independence and saturation of the normals of every proper nonzero face.
    fn face_failures(&self, faces: &FaceLattice) -> Vec<String> {
        let mut out = Vec::new();
        for face in faces.faces.iter().filter(|f| !f.normals.is_empty()) {
            let vecs: Vec<Vec<BigInt>> = face
                .normals
                .iter()
                .map(|&i| to_big(&self.normals[i]))
                .collect();
            match lattice::is_saturated(&vecs, self.dim) {
                Ok(true) => {}
                Ok(false) => out.push(format!(
                    "face with normals {:?} (dim {}) is not saturated",
                    face.normals, face.dim
                )),
                Err(LatticeError::Dependent { witness }) => {
                    let w: Vec<String> = witness.iter().map(BigRational::to_string).collect();
                    out.push(format!(
                        "face with normals {:?} (dim {}) has dependent normals, combination ({})",
                        face.normals,
                        face.dim,
                        w.join(", ")
                    ));
                }
                Err(e) => out.push(format!("face with normals {:?}: {e}", face.normals)),
            }
        }
        out
    }

    /// Extreme rays of the cone.
    pub fn dual_rays(&self) -> Result<RayList, ConeError> {
        let shape = self.shape_problems();
        if !shape.is_empty() {
            return Err(ConeError::Malformed(shape.join("; ")));
        }
        Ok(RayList {
            rays: extreme_rays(self.dim, &self.normals)?,
        })
    }

    pub fn face_lattice(&self) -> Result<FaceLattice, ConeError> {
        let rays = self.dual_rays()?;
        Ok(enumerate_faces(self.dim, &self.normals, &rays.rays))
    }

    /// True iff `xi` pairs strictly positively with every extreme ray, i.e. lies
    /// in the interior of the dual cone. Degenerate cones contain nothing.
    pub fn reeb_cone_contains(&self, xi: &[f64]) -> bool {
        match self.dual_rays() {
            Ok(rays) => rays_contain(&rays.rays, xi),
            Err(_) => false,
        }
    }

    /// Integer covector pairing to exactly 1 with every normal, if one exists.
    pub fn gorenstein_vector(&self) -> Option<Vec<i64>> {
        let one = BigRational::one();
        let rows: Vec<Vec<BigRational>> = self
            .normals
            .iter()
            .map(|n| {
                n.iter()
                    .map(|&x| BigRational::from_integer(x.into()))
                    .collect()
            })
            .collect();
        let rhs = vec![one; self.normals.len()];
        let sol = lattice::solve_rational(&rows, &rhs)?;
        sol.iter()
            .map(|c| {
                if c.is_integer() {
                    c.to_integer().to_i64()
                } else {
                    None
                }
            })
            .collect()
    }

    /// `beta = (λ_1 ... λ_d)`, the `dim x d` matrix with the normals as columns.
    pub fn beta(&self) -> IntMatrix {
        let cols: Vec<Vec<BigInt>> = self.normals.iter().map(|n| to_big(n)).collect();
        IntMatrix::from_columns(self.dim, &cols).expect("normals have length dim")
    }
}

fn rays_contain(rays: &[Vec<i64>], xi: &[f64]) -> bool {
    rays.iter().all(|r| {
        r.len() == xi.len() && r.iter().zip(xi).map(|(&a, &b)| a as f64 * b).sum::<f64>() > 0.0
    })
}

/// A cone that passed every validity check, with its rays and faces.
#[derive(Clone, Debug)]
pub struct GoodCone {
    spec: ConeSpec,
    rays: Vec<Vec<i64>>,
    faces: FaceLattice,
}

impl GoodCone {
    pub fn new(spec: ConeSpec) -> Result<Self, ConeError> {
        let report = spec.validate();
        if !report.passed() {
            return Err(ConeError::NotGood(Box::new(report)));
        }
        let rays = spec.dual_rays()?.rays;
        let faces = enumerate_faces(spec.dim, &spec.normals, &rays);
        Ok(Self { spec, rays, faces })
    }

    pub fn spec(&self) -> &ConeSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn normals(&self) -> &[Vec<i64>] {
        &self.spec.normals
    }

    pub fn rays(&self) -> &[Vec<i64>] {
        &self.rays
    }

    pub fn faces(&self) -> &FaceLattice {
        &self.faces
    }

    pub fn contains_reeb(&self, xi: &[f64]) -> bool {
        rays_contain(&self.rays, xi)
    }

    pub fn gorenstein_vector(&self) -> Option<Vec<i64>> {
        self.spec.gorenstein_vector()
    }

    /// `ξ₀ = λ_1 + ... + λ_{dim}`, the sum of the first `dim` normals.
    pub fn xi_zero(&self) -> Vec<i64> {
        let mut xi = vec![0; self.dim()];
        for n in self.spec.normals.iter().take(self.dim()) {
            for (a, b) in xi.iter_mut().zip(n) {
                *a += b;
            }
        }
        xi
    }

    /// Sum of all normals; always inside the dual cone of a good cone.
    pub fn normal_sum(&self) -> Vec<i64> {
        let mut xi = vec![0; self.dim()];
        for n in &self.spec.normals {
            for (a, b) in xi.iter_mut().zip(n) {
                *a += b;
            }
        }
        xi
    }
}

/// Lexicographically sorted primitive generators; used by the duality tests.
pub fn canonical_normals(normals: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = normals
        .iter()
        .map(|n| {
            let g = n.iter().fold(0i64, |g, &x| num_integer::gcd(g, x));
            if g == 0 {
                n.clone()
            } else {
                n.iter().map(|x| x / g).collect()
            }
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

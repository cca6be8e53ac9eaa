//! Volume of the truncated cone `{y ∈ C : <y, ξ> <= 1/2}` as a function of
//! the Reeb vector `ξ`, and its minimization over the slice `<γ, ξ> = dim`.
//!
//! The cone is cut into simplicial cones by a recursive fan: each face is
//! coned from one of its rays over the facets of the face that miss that ray.
//! A simplicial cone on rays `u_1..u_m` contributes
//! `|det u| (1/2)^m / (m! Π <u_i, ξ>)`.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cone::{ConeError, ConeSpec, FaceLattice, GoodCone};
use crate::lattice::IntMatrix;
use crate::ypq::{self, YpqError};

/// Smallest ray pairing a line search may reach.
pub const PAIRING_FLOOR: f64 = 1e-12;
pub const GRAD_TOL: f64 = 1e-9;
pub const MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Error)]
pub enum ReebError {
    #[error("ξ is not inside the Reeb cone: pairing with ray {ray} is {pairing}")]
    Divergent { ray: usize, pairing: f64 },
    #[error("ξ has length {got}, expected {expected}")]
    Length { got: usize, expected: usize },
    #[error("cone has no Gorenstein vector; the normalization slice is undefined")]
    Unsupported,
    #[error("minimization stopped after {iterations} iterations with gradient norm {grad_norm:e}")]
    NotConverged {
        iterations: usize,
        grad_norm: f64,
        trace: Vec<TraceEntry>,
    },
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    Ypq(#[from] YpqError),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub volume: f64,
    pub grad_norm: f64,
    pub step: f64,
}

/// Which ray each face is coned from: the first one, or the one at a fixed
/// offset (modulo the face's ray count) in the face's sorted ray list.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Apex {
    First,
    Offset(usize),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Simplex {
    /// Indices into `rays`.
    pub rays: Vec<usize>,
    pub det: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct VolumeProfile {
    pub dim: usize,
    pub rays: Vec<Vec<i64>>,
    pub triangulation: Vec<Simplex>,
    pub gamma: Option<Vec<i64>>,
}

impl VolumeProfile {
    pub fn new(cone: &GoodCone) -> Self {
        Self::with_apex(cone, Apex::First)
    }

    pub fn with_apex(cone: &GoodCone, apex: Apex) -> Self {
        let rays = cone.rays().to_vec();
        let pieces = fan(cone.faces(), cone.dim(), apex);
        let triangulation = pieces
            .into_iter()
            .map(|idx| {
                let cols: Vec<Vec<BigInt>> = idx
                    .iter()
                    .map(|&r| rays[r].iter().map(|&x| BigInt::from(x)).collect())
                    .collect();
                let m = IntMatrix::from_columns(cone.dim(), &cols).expect("ray length");
                let det = m.determinant().to_f64().unwrap_or(f64::INFINITY).abs();
                Simplex { rays: idx, det }
            })
            .collect();
        Self {
            dim: cone.dim(),
            rays,
            triangulation,
            gamma: cone.gorenstein_vector(),
        }
    }

    fn pairings(&self, xi: &[f64]) -> Result<Vec<f64>, ReebError> {
        if xi.len() != self.dim {
            return Err(ReebError::Length {
                got: xi.len(),
                expected: self.dim,
            });
        }
        self.rays
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let p = dot(r, xi);
                if p > 0.0 && p.is_finite() {
                    Ok(p)
                } else {
                    Err(ReebError::Divergent { ray: i, pairing: p })
                }
            })
            .collect()
    }

    fn weight(&self) -> f64 {
        let m = self.dim as i32;
        0.5f64.powi(m) / (1..=self.dim).map(|i| i as f64).product::<f64>()
    }

    pub fn volume(&self, xi: &[f64]) -> Result<f64, ReebError> {
        let p = self.pairings(xi)?;
        let w = self.weight();
        Ok(self
            .triangulation
            .iter()
            .map(|s| w * s.det / s.rays.iter().map(|&r| p[r]).product::<f64>())
            .sum())
    }

    pub fn gradient(&self, xi: &[f64]) -> Result<Vec<f64>, ReebError> {
        Ok(self.volume_and_gradient(xi)?.1)
    }

    pub fn volume_and_gradient(&self, xi: &[f64]) -> Result<(f64, Vec<f64>), ReebError> {
        let p = self.pairings(xi)?;
        let w = self.weight();
        let mut vol = 0.0;
        let mut grad = vec![0.0; self.dim];
        for s in &self.triangulation {
            let v = w * s.det / s.rays.iter().map(|&r| p[r]).product::<f64>();
            vol += v;
            for &r in &s.rays {
                for (g, &u) in grad.iter_mut().zip(&self.rays[r]) {
                    *g -= v * u as f64 / p[r];
                }
            }
        }
        Ok((vol, grad))
    }
}

fn dot(r: &[i64], xi: &[f64]) -> f64 {
    r.iter().zip(xi).map(|(&a, b)| a as f64 * b).sum()
}

fn fan(faces: &FaceLattice, dim: usize, apex: Apex) -> Vec<Vec<usize>> {
    let top = faces
        .faces
        .iter()
        .find(|f| f.dim == dim)
        .expect("face lattice contains the cone");
    triangulate_face(faces, &top.rays, dim, apex)
}

fn triangulate_face(
    faces: &FaceLattice,
    rays: &[usize],
    dim: usize,
    apex: Apex,
) -> Vec<Vec<usize>> {
    if rays.len() == dim {
        return vec![rays.to_vec()];
    }
    let a = match apex {
        Apex::First => rays[0],
        Apex::Offset(k) => rays[k % rays.len()],
    };
    let mut out = Vec::new();
    for facet in faces.of_dim(dim - 1) {
        if facet.rays.contains(&a) || !facet.rays.iter().all(|r| rays.contains(r)) {
            continue;
        }
        for mut piece in triangulate_face(faces, &facet.rays, dim - 1, apex) {
            piece.push(a);
            piece.sort_unstable();
            out.push(piece);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Minimized,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ReebSolution {
    pub xi: Vec<f64>,
    pub volume: f64,
    pub grad_norm: f64,
    pub provenance: Provenance,
    pub iterations: usize,
}

fn project(g: &[f64], gamma: &[f64]) -> Vec<f64> {
    let gg: f64 = gamma.iter().map(|x| x * x).sum();
    let c = g.iter().zip(gamma).map(|(a, b)| a * b).sum::<f64>() / gg;
    g.iter().zip(gamma).map(|(a, b)| a - c * b).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Starting point `(dim / d) Σ λ_i`, the scaled barycenter of the Reeb cone's
/// generators; it lies on the slice because `<γ, λ_i> = 1`.
fn start_point(cone: &GoodCone) -> Vec<f64> {
    let d = cone.normals().len() as f64;
    let s = cone.dim() as f64 / d;
    cone.normal_sum().iter().map(|&x| s * x as f64).collect()
}

pub fn minimize(cone: &GoodCone) -> Result<ReebSolution, ReebError> {
    let profile = VolumeProfile::new(cone);
    minimize_profile(&profile, &start_point(cone))
}

pub fn minimize_spec(spec: &ConeSpec) -> Result<ReebSolution, ReebError> {
    minimize(&GoodCone::new(spec.clone())?)
}

/// Projected gradient descent of `log V` on `<γ, ξ> = dim` from `start`,
/// with Barzilai-Borwein trial steps and Armijo backtracking. The logarithm
/// has the same minimizer and makes the stopping rule independent of the
/// overall size of `V`; it stops once `|P ∇V| / V < 1e-9`, which also bounds
/// the reported raw projected gradient `|P ∇V|`.
pub fn minimize_profile(profile: &VolumeProfile, start: &[f64]) -> Result<ReebSolution, ReebError> {
    let gamma: Vec<f64> = profile
        .gamma
        .as_ref()
        .ok_or(ReebError::Unsupported)?
        .iter()
        .map(|&g| g as f64)
        .collect();
    let eval = |xi: &[f64]| -> Result<(f64, f64, Vec<f64>), ReebError> {
        let (v, g) = profile.volume_and_gradient(xi)?;
        let lg: Vec<f64> = g.iter().map(|x| x / v).collect();
        Ok((v, v.ln(), project(&lg, &gamma)))
    };
    let mut xi = start.to_vec();
    let (mut vol, mut f, mut pg) = eval(&xi)?;
    let mut step = 1.0 / norm(&pg).max(f64::MIN_POSITIVE);
    let mut trace = Vec::new();
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;

    for it in 0..MAX_ITERATIONS {
        let gn = norm(&pg);
        if trace.len() == 32 {
            trace.remove(0);
        }
        trace.push(TraceEntry {
            iteration: it,
            volume: vol,
            grad_norm: gn * vol,
            step,
        });
        if gn < GRAD_TOL {
            return Ok(ReebSolution {
                xi,
                volume: vol,
                grad_norm: gn * vol,
                provenance: Provenance::Minimized,
                iterations: it,
            });
        }
        if let Some((px, pgrad)) = &prev {
            let s: Vec<f64> = xi.iter().zip(px).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = pg.iter().zip(pgrad).map(|(a, b)| a - b).collect();
            let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
            if sy > 0.0 {
                step = s.iter().map(|x| x * x).sum::<f64>() / sy;
            }
        }
        // Near the minimum the decrease in `log V` drops below rounding; a
        // step that changes it by no more than that is accepted as well.
        let noise = 8.0 * f64::EPSILON * f.abs().max(1.0);
        let mut t = step;
        let accepted = loop {
            let trial: Vec<f64> = xi.iter().zip(&pg).map(|(x, g)| x - t * g).collect();
            let inside = profile.rays.iter().all(|r| dot(r, &trial) >= PAIRING_FLOOR);
            if inside {
                if let Ok(next) = eval(&trial) {
                    if next.1 <= f - 1e-4 * t * gn * gn || (next.1 - f).abs() <= noise {
                        break Some((trial, next));
                    }
                }
            }
            t *= 0.5;
            if t < 1e-300 {
                break None;
            }
        };
        let Some((next, (v, fv, g))) = accepted else {
            break;
        };
        prev = Some((
            std::mem::replace(&mut xi, next),
            std::mem::replace(&mut pg, g),
        ));
        vol = v;
        f = fv;
        step = t;
    }
    Err(ReebError::NotConverged {
        iterations: trace.last().map_or(0, |e| e.iteration),
        grad_norm: norm(&pg) * vol,
        trace,
    })
}

/// Closed-form Einstein Reeb vector of `Y^{p,q}`.
pub fn ypq_reeb(p: i64, q: i64) -> Result<ReebSolution, ReebError> {
    let cone = GoodCone::new(ypq::ypq_normals(p, q)?)?;
    let xi = ypq::reeb_vector(p, q).to_vec();
    let profile = VolumeProfile::new(&cone);
    let (volume, g) = profile.volume_and_gradient(&xi)?;
    Ok(ReebSolution {
        grad_norm: norm(&project(&g, &[1.0, 0.0, 0.0])),
        xi,
        volume,
        provenance: Provenance::ClosedForm,
        iterations: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orthant() -> GoodCone {
        GoodCone::new(ConeSpec::orthant(3)).unwrap()
    }

    fn ypq_cone(p: i64, q: i64) -> GoodCone {
        GoodCone::new(ypq::ypq_normals(p, q).unwrap()).unwrap()
    }

    #[test]
    fn orthant_volumes() {
        let prof = VolumeProfile::new(&orthant());
        assert_eq!(prof.triangulation.len(), 1);
        assert!((prof.volume(&[1.0, 1.0, 1.0]).unwrap() - 1.0 / 48.0).abs() < 1e-16);
        assert!((prof.volume(&[2.0, 2.0, 2.0]).unwrap() - 1.0 / 384.0).abs() < 1e-16);
        assert!(matches!(
            prof.volume(&[1.0, 0.0, 0.0]),
            Err(ReebError::Divergent { .. })
        ));
    }

    #[test]
    fn ypq_triangulations_agree() {
        let cone = ypq_cone(2, 1);
        let a = VolumeProfile::with_apex(&cone, Apex::First);
        let b = VolumeProfile::with_apex(&cone, Apex::Offset(1));
        assert_eq!(a.triangulation.len(), 2);
        assert_ne!(a.triangulation, b.triangulation);
        let xi = [3.0, 2.0, 3.0];
        let (va, vb) = (a.volume(&xi).unwrap(), b.volume(&xi).unwrap());
        assert!(((va - vb) / va).abs() < 1e-12);
    }

    #[test]
    fn orthant_minimum_is_symmetric() {
        let sol = minimize(&orthant()).unwrap();
        for x in &sol.xi {
            assert!((x - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn y21_minimum_matches_closed_form() {
        let sol = minimize(&ypq_cone(2, 1)).unwrap();
        let closed = ypq_reeb(2, 1).unwrap();
        let err = norm(
            &sol.xi
                .iter()
                .zip(&closed.xi)
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>(),
        );
        assert!(err < 1e-6, "{:?} vs {:?}", sol.xi, closed.xi);
        assert!(closed.grad_norm < 1e-9);
        assert!((sol.xi[0] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn no_gorenstein_vector_is_unsupported() {
        let cone = GoodCone::new(ConeSpec::new(
            3,
            vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1], vec![1, 2, -1]],
        ))
        .unwrap();
        assert_eq!(cone.gorenstein_vector(), None);
        assert!(matches!(minimize(&cone), Err(ReebError::Unsupported)));
    }

    #[test]
    fn ypq_reeb_rejects_bad_parameters() {
        assert!(matches!(ypq_reeb(1, 0), Err(ReebError::Ypq(_))));
    }
}

//! Python bindings. Integer matrices cross the boundary as lists of rows of
//! `int` (entries must fit in 64 bits); reports cross as JSON strings.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use realform::cli::{self, ConeFile, PipelineOptions, ReebMode};
use realform::lattice::{self, IntMatrix};
use realform::reallink::{self, build_system};
use realform::verifier::{self, ContactData, Tolerances};
use realform::{reeb, ypq, ConeSpec, DelzantData, GoodCone};

type Rows = Vec<Vec<i64>>;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix(rows: Vec<Vec<i64>>) -> PyResult<IntMatrix> {
    IntMatrix::from_rows(&rows).map_err(err)
}

fn rows(m: &IntMatrix) -> PyResult<Vec<Vec<i64>>> {
    m.to_i64_rows()
        .ok_or_else(|| err("entry does not fit in 64 bits"))
}

/// A rational polyhedral cone given by inward facet normals.
#[pyclass(frozen, module = "pyrealform")]
struct Cone {
    spec: ConeSpec,
}

impl Cone {
    fn good(&self) -> PyResult<GoodCone> {
        GoodCone::new(self.spec.clone()).map_err(err)
    }

    fn delzant(&self) -> PyResult<DelzantData> {
        Ok(DelzantData::build(&self.good()?))
    }
}

#[pymethods]
impl Cone {
    #[new]
    fn new(normals: Vec<Vec<i64>>) -> PyResult<Self> {
        let dim = normals
            .first()
            .map(Vec::len)
            .ok_or_else(|| err("no normals"))?;
        Ok(Self {
            spec: ConeSpec::new(dim, normals),
        })
    }

    #[staticmethod]
    fn ypq(p: i64, q: i64) -> PyResult<Self> {
        Ok(Self {
            spec: ypq::ypq_normals(p, q).map_err(err)?,
        })
    }

    #[staticmethod]
    fn orthant(n: usize) -> Self {
        Self {
            spec: ConeSpec::orthant(n),
        }
    }

    #[getter]
    fn dim(&self) -> usize {
        self.spec.dim
    }

    #[getter]
    fn normals(&self) -> Vec<Vec<i64>> {
        self.spec.normals.clone()
    }

    fn is_good(&self) -> bool {
        self.spec.validate().passed()
    }

    /// Failed predicates with their witnesses; empty for a good cone.
    fn failures(&self) -> Vec<String> {
        self.spec.validate().failures()
    }

    fn rays(&self) -> PyResult<Vec<Vec<i64>>> {
        Ok(self.spec.dual_rays().map_err(err)?.rays)
    }

    fn gorenstein_vector(&self) -> Option<Vec<i64>> {
        self.spec.gorenstein_vector()
    }

    /// Saturated kernel basis of `β`, one row per generator.
    fn kernel(&self) -> PyResult<Vec<Vec<i64>>> {
        Ok(self.delzant()?.kernel_rows())
    }

    /// Deck group elements as sign strings, identity first.
    fn deck_group(&self) -> PyResult<Vec<String>> {
        let deck = self.delzant()?.deck_group();
        Ok(deck.elements.iter().map(ToString::to_string).collect())
    }

    fn volume(&self, xi: Vec<f64>) -> PyResult<f64> {
        reeb::VolumeProfile::new(&self.good()?)
            .volume(&xi)
            .map_err(err)
    }

    fn minimize_reeb(&self) -> PyResult<ReebSolution> {
        Ok(ReebSolution(reeb::minimize(&self.good()?).map_err(err)?))
    }

    /// Real-link system for the Reeb vector `xi`.
    fn quadric_system(&self, xi: Vec<f64>) -> PyResult<QuadricSystem> {
        let data = self.delzant()?;
        if xi.len() != data.dim {
            return Err(err(format!(
                "xi has length {}, expected {}",
                xi.len(),
                data.dim
            )));
        }
        let coeffs = data.reeb_coefficients(&xi);
        let system = build_system(&data, &coeffs).map_err(err)?;
        Ok(QuadricSystem {
            contact: Some(ContactData::new(&data, &coeffs)),
            system,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Cone(dim={}, normals={:?})",
            self.spec.dim, self.spec.normals
        )
    }
}

#[pyclass(frozen, module = "pyrealform")]
struct ReebSolution(reeb::ReebSolution);

#[pymethods]
impl ReebSolution {
    #[getter]
    fn xi(&self) -> Vec<f64> {
        self.0.xi.clone()
    }

    #[getter]
    fn volume(&self) -> f64 {
        self.0.volume
    }

    #[getter]
    fn grad_norm(&self) -> f64 {
        self.0.grad_norm
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.0.iterations
    }

    #[getter]
    fn provenance(&self) -> &'static str {
        match self.0.provenance {
            reeb::Provenance::ClosedForm => "closed_form",
            reeb::Provenance::Minimized => "minimized",
        }
    }

    fn __repr__(&self) -> String {
        format!("ReebSolution(xi={:?}, volume={})", self.0.xi, self.0.volume)
    }
}

/// `{x : A (x∘x) = 0, b·(x∘x) = 1}`.
#[pyclass(frozen, module = "pyrealform")]
struct QuadricSystem {
    system: reallink::QuadricSystem,
    contact: Option<ContactData>,
}

#[pymethods]
impl QuadricSystem {
    #[new]
    fn new(a: Vec<Vec<i64>>, b: Vec<f64>) -> PyResult<Self> {
        let a = if a.is_empty() {
            IntMatrix::zeros(0, b.len())
        } else {
            matrix(a)?
        };
        Ok(Self {
            system: reallink::QuadricSystem::new(a, b).map_err(err)?,
            contact: None,
        })
    }

    #[getter]
    fn a(&self) -> PyResult<Vec<Vec<i64>>> {
        rows(&self.system.a)
    }

    #[getter]
    fn b(&self) -> Vec<f64> {
        self.system.b.clone()
    }

    fn residual(&self, x: Vec<f64>) -> PyResult<f64> {
        if x.len() != self.system.d() {
            return Err(err(format!(
                "point has length {}, expected {}",
                x.len(),
                self.system.d()
            )));
        }
        Ok(self.system.residual(&x))
    }

    fn sample(&self, count: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        Ok(self.system.sample(count, seed).map_err(err)?.points)
    }

    fn equivalent(&self, other: PyRef<'_, QuadricSystem>) -> bool {
        reallink::systems_equivalent(&self.system, &other.system)
    }

    /// Runs the link checks on fresh samples; the report as JSON.
    fn verify(&self, count: usize, seed: u64) -> PyResult<String> {
        let ctx = self
            .contact
            .as_ref()
            .ok_or_else(|| err("system was not built from a cone"))?;
        let samples = self.system.sample(count, seed).map_err(err)?;
        let report = verifier::verify_link(&self.system, ctx, &samples, &Tolerances::default());
        serde_json::to_string(&report).map_err(err)
    }
}

#[pyfunction]
fn ypq_normals(p: i64, q: i64) -> PyResult<Vec<Vec<i64>>> {
    Ok(ypq::ypq_normals(p, q).map_err(err)?.normals)
}

#[pyfunction]
fn ypq_reeb(p: i64, q: i64) -> PyResult<ReebSolution> {
    Ok(ReebSolution(reeb::ypq_reeb(p, q).map_err(err)?))
}

#[pyfunction]
fn hnf(m: Vec<Vec<i64>>) -> PyResult<Vec<Vec<i64>>> {
    rows(&lattice::hermite_normal_form(&matrix(m)?))
}

/// `(diagonal, left, right)` with `left · m · right` diagonal.
#[pyfunction]
fn snf(m: Vec<Vec<i64>>) -> PyResult<(Vec<i64>, Rows, Rows)> {
    let r = lattice::smith_normal_form(&matrix(m)?);
    let diag = r
        .diag
        .iter()
        .map(|d| i64::try_from(d).map_err(err))
        .collect::<PyResult<_>>()?;
    Ok((diag, rows(&r.left)?, rows(&r.right)?))
}

/// Saturated kernel basis as columns, returned as rows of the `cols x k` matrix.
#[pyfunction]
fn kernel_basis(m: Vec<Vec<i64>>) -> PyResult<Vec<Vec<i64>>> {
    rows(&lattice::integer_kernel_basis(&matrix(m)?))
}

/// Full pipeline on a cone file's JSON text; returns `(report_json, exit_code)`.
#[pyfunction]
#[pyo3(signature = (cone_json, reeb = "minimize", samples = 500, seed = 0, tol = None))]
fn run_pipeline(
    cone_json: &str,
    reeb: &str,
    samples: usize,
    seed: u64,
    tol: Option<f64>,
) -> PyResult<(String, i32)> {
    let file = ConeFile::parse(cone_json).map_err(err)?;
    let reeb = match reeb {
        "closed" => ReebMode::Closed,
        "minimize" => ReebMode::Minimize,
        other => return Err(err(format!("unknown reeb mode {other:?}"))),
    };
    let opts = PipelineOptions {
        reeb,
        samples,
        seed,
        tol,
    };
    let out = cli::run_pipeline(file, &opts);
    Ok((out.report.to_json(), out.report.exit_code()))
}

#[pymodule]
fn pyrealform(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", cli::VERSION)?;
    m.add_class::<Cone>()?;
    m.add_class::<ReebSolution>()?;
    m.add_class::<QuadricSystem>()?;
    m.add_function(wrap_pyfunction!(ypq_normals, m)?)?;
    m.add_function(wrap_pyfunction!(ypq_reeb, m)?)?;
    m.add_function(wrap_pyfunction!(hnf, m)?)?;
    m.add_function(wrap_pyfunction!(snf, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_basis, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    Ok(())
}

//! File formats and the end-to-end pipeline behind the `realform` binary.

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cone::{ConeSpec, GoodCone, ValidationReport};
use crate::delzant::{DeckGroup, DelzantData, SignVector};
use crate::lattice::JSON_SAFE_INT;
use crate::reallink::{self, QuadricSystem, SampleSet, TopologyReport};
use crate::reeb::{self, ReebError, ReebSolution};
use crate::verifier::{self, ContactData, FrameMode, Tolerances, VerificationReport};
use crate::ypq;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;

/// Integer that reads from a JSON number or a decimal string and writes as a
/// string once it leaves the exactly representable range of doubles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JsonInt(pub i64);

impl Serialize for JsonInt {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.abs() <= JSON_SAFE_INT {
            s.serialize_i64(self.0)
        } else {
            s.collect_str(&self.0)
        }
    }
}

impl<'de> Deserialize<'de> for JsonInt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(JsonInt(v)),
            Raw::Str(s) => s
                .trim()
                .parse()
                .map(JsonInt)
                .map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeFile {
    pub dim: usize,
    pub normals: Vec<Vec<JsonInt>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl ConeFile {
    pub fn from_spec(spec: &ConeSpec, name: Option<String>) -> Self {
        Self {
            dim: spec.dim,
            normals: spec
                .normals
                .iter()
                .map(|n| n.iter().map(|&x| JsonInt(x)).collect())
                .collect(),
            name,
        }
    }

    pub fn spec(&self) -> ConeSpec {
        ConeSpec::new(
            self.dim,
            self.normals
                .iter()
                .map(|n| n.iter().map(|x| x.0).collect())
                .collect(),
        )
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("invalid cone file: {e}"))
    }

    pub fn read(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cone file serializes")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidateOutput {
    pub cone: ConeFile,
    pub passed: bool,
    pub failures: Vec<String>,
    pub report: ValidationReport,
}

/// Validation report and exit code for a cone file.
pub fn cmd_validate(path: &Path) -> Result<(ValidateOutput, i32), String> {
    let out = validate_file(ConeFile::read(path)?);
    let code = if out.passed { EXIT_OK } else { EXIT_FAILED };
    Ok((out, code))
}

pub fn validate_file(file: ConeFile) -> ValidateOutput {
    let report = file.spec().validate();
    ValidateOutput {
        passed: report.passed(),
        failures: report.failures(),
        cone: file,
        report,
    }
}

pub fn cmd_ypq(p: i64, q: i64) -> Result<ConeFile, ypq::YpqError> {
    let spec = ypq::ypq_normals(p, q)?;
    Ok(ConeFile::from_spec(&spec, Some(format!("Y^{{{p},{q}}}"))))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReebMode {
    Closed,
    Minimize,
}

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    pub reeb: ReebMode,
    pub samples: usize,
    pub seed: u64,
    pub tol: Option<f64>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            reeb: ReebMode::Minimize,
            samples: 500,
            seed: 0,
            tol: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DeckReport {
    #[serde(flatten)]
    pub group: DeckGroup,
    pub order: usize,
    /// Nontrivial element listed in the reference parity table, when the
    /// cone is a `Y^{p,q}`.
    pub tabulated_element: Option<SignVector>,
    /// Whether that element belongs to the computed group.
    pub paper_table_agreement: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Status {
    pub exit_code: i32,
    pub failed_stage: Option<String>,
    pub message: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub samples_requested: usize,
    pub reeb_mode: ReebMode,
    pub tolerance_override: Option<f64>,
    pub cone: ConeFile,
    pub ypq: Option<(i64, i64)>,
    pub validation: Option<ValidationReport>,
    pub delzant: Option<DelzantData>,
    pub deck: Option<DeckReport>,
    pub reeb: Option<ReebSolution>,
    pub quadric_system: Option<QuadricSystem>,
    pub sample_summary: Option<SampleSummary>,
    pub topology: Option<TopologyReport>,
    pub verification: Option<VerificationReport>,
    pub flat_special: Option<VerificationReport>,
    pub status: Status,
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleSummary {
    pub count: usize,
    pub residual_max: f64,
    pub jacobian_rank: usize,
}

impl RunReport {
    fn new(cone: ConeFile, opts: &PipelineOptions) -> Self {
        Self {
            tool: "realform".into(),
            version: VERSION.into(),
            seed: opts.seed,
            samples_requested: opts.samples,
            reeb_mode: opts.reeb,
            tolerance_override: opts.tol,
            cone,
            ypq: None,
            validation: None,
            delzant: None,
            deck: None,
            reeb: None,
            quadric_system: None,
            sample_summary: None,
            topology: None,
            verification: None,
            flat_special: None,
            status: Status {
                exit_code: EXIT_OK,
                failed_stage: None,
                message: None,
            },
        }
    }

    fn fail(mut self, stage: &str, code: i32, message: String) -> Self {
        self.status = Status {
            exit_code: code,
            failed_stage: Some(stage.into()),
            message: Some(message),
        };
        self
    }

    pub fn exit_code(&self) -> i32 {
        self.status.exit_code
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub struct PipelineOutput {
    pub report: RunReport,
    pub samples: Option<SampleSet>,
}

/// validate, quotient data, Reeb vector, quadric system, sampling, checks.
pub fn run_pipeline(file: ConeFile, opts: &PipelineOptions) -> PipelineOutput {
    let spec = file.spec();
    let mut report = RunReport::new(file, opts);
    let done = |report: RunReport| PipelineOutput {
        report,
        samples: None,
    };

    let validation = spec.validate();
    let passed = validation.passed();
    let failures = validation.failures().join("; ");
    report.validation = Some(validation);
    if !passed {
        return done(report.fail("validate", EXIT_FAILED, failures));
    }
    let cone = match GoodCone::new(spec.clone()) {
        Ok(c) => c,
        Err(e) => return done(report.fail("validate", EXIT_FAILED, e.to_string())),
    };
    report.ypq = ypq::detect(&spec);

    let data = DelzantData::build(&cone);
    let deck = data.deck_group();
    let tabulated = report.ypq.map(|(p, q)| ypq::tabulated_deck_element(p, q));
    report.deck = Some(DeckReport {
        order: deck.order(),
        paper_table_agreement: tabulated.map(|e| deck.elements.contains(&e)),
        tabulated_element: tabulated,
        group: deck.clone(),
    });
    report.delzant = Some(data.clone());

    let solution = match (opts.reeb, report.ypq) {
        (ReebMode::Closed, Some((p, q))) => reeb::ypq_reeb(p, q),
        (ReebMode::Closed, None) => {
            return done(report.fail(
                "reeb",
                EXIT_INPUT,
                "--reeb closed needs a Y^{p,q} cone in standard form".into(),
            ))
        }
        (ReebMode::Minimize, _) => reeb::minimize(&cone),
    };
    let solution = match solution {
        Ok(s) => s,
        Err(e) => {
            let code = match e {
                ReebError::NotConverged { .. } => EXIT_NONCONVERGENCE,
                _ => EXIT_FAILED,
            };
            return done(report.fail("reeb", code, e.to_string()));
        }
    };
    if !cone.contains_reeb(&solution.xi) {
        report.reeb = Some(solution);
        return done(report.fail("reeb", EXIT_FAILED, "ξ is outside the Reeb cone".into()));
    }
    let coeffs = data.reeb_coefficients(&solution.xi);
    report.reeb = Some(solution);

    let system = match reallink::build_system(&data, &coeffs) {
        Ok(s) => s,
        Err(e) => return done(report.fail("reallink", EXIT_FAILED, e.to_string())),
    };
    report.quadric_system = Some(system.clone());
    let samples = match system.sample(opts.samples, opts.seed) {
        Ok(s) => s,
        Err(e) => return done(report.fail("sample", EXIT_NONCONVERGENCE, e.to_string())),
    };
    report.sample_summary = Some(SampleSummary {
        count: samples.len(),
        residual_max: samples.residual_max,
        jacobian_rank: samples.jacobian_rank,
    });
    if data.k() == 0 || (data.d == 4 && data.k() == 1) {
        report.topology = Some(reallink::classify_ypq(&system, &deck, &samples));
    }

    let tol = opts
        .tol
        .map_or_else(Tolerances::default, Tolerances::uniform);
    let ctx = ContactData::new(&data, &coeffs);
    let verification = verifier::verify_link(&system, &ctx, &samples, &tol);
    let mut ok = verification.passed;
    report.verification = Some(verification);
    if data.k() == 0 {
        let n = data.d - 1;
        let unit = normalized(&samples);
        match verifier::verify_flat_special(n, &unit, FrameMode::Standard, &tol) {
            Ok(r) => {
                ok &= r.passed;
                report.flat_special = Some(r);
            }
            Err(e) => return done(report.fail("flat_special", EXIT_FAILED, e.to_string())),
        }
    }
    if !ok {
        report = report.fail("verify", EXIT_FAILED, "verification checks failed".into());
    }
    PipelineOutput {
        report,
        samples: Some(samples),
    }
}

/// Samples pushed radially onto the unit sphere.
fn normalized(samples: &SampleSet) -> SampleSet {
    let mut out = samples.clone();
    for x in &mut out.points {
        let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in x.iter_mut() {
            *v /= n;
        }
    }
    out
}

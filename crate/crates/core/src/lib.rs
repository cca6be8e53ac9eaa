//! Toric cone toolkit: exact lattice algebra, good-cone validation, the
//! quotient construction, Reeb vector minimization, the real locus of the
//! link as a system of quadrics, and numerical contact-geometry checks.

pub mod cli;
pub mod cone;
pub mod delzant;
pub mod lattice;
pub mod reallink;
pub mod reeb;
pub mod verifier;
pub mod ypq;

pub use cone::{ConeError, ConeSpec, GoodCone, ValidationReport};
pub use delzant::{DeckGroup, DelzantData, ReebCoefficients, SignVector};
pub use lattice::{IntMatrix, LatticeError, SnfResult};
pub use reallink::{QuadricSystem, RealLinkError, SampleSet};
pub use reeb::{ReebError, ReebSolution, VolumeProfile};
pub use verifier::{ContactData, Tolerances, VerificationReport};

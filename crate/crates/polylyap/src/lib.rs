//! Polyhedral Lyapunov functions of fixed complexity.
//!
//! This crate searches for polyhedral Lyapunov functions — asymmetric
//! norms whose unit balls are polytopes — certifying exponential
//! stability of linear systems and polytopic linear differential
//! inclusions, and synthesizes static output-feedback gains. The vertex
//! count of the polytope is an input parameter and stays fixed, which
//! bounds the complexity of the certificate up front.
//!
//! Everything reduces to linear programming. For a fixed vertex matrix
//! `V`, the largest rate `η` with a Metzler `M` satisfying `AV = VM`,
//! `1ᵀM = −η1ᵀ` is one LP (the *contraction gap*); `η > 0` proves global
//! exponential stability with that rate. When the gap is not yet
//! positive, a second LP moves the vertices to reduce it, either by
//! re-linearizing the constraints (full step) or along the implicit
//! derivative of the gap at its optimal simplex basis (fast step). The
//! two steps alternate until a certificate is found.
//!
//! ```
//! use nalgebra::DMatrix;
//! use polylyap::plants::PlantModel;
//! use polylyap::search::{find_polyhedron, SearchConfig, SearchStatus};
//!
//! // ẋ = −x contracts any polytope with 0 in its interior.
//! let model = PlantModel::Single(-DMatrix::identity(2, 2));
//! let report = find_polyhedron(&model, &SearchConfig::new(4)).unwrap();
//! assert_eq!(report.status, SearchStatus::Certified);
//! assert!(report.certificate.unwrap().eta > 0.9);
//! ```

pub mod cli;
pub mod contraction;
pub mod files;
pub mod hull;
pub mod numerics;
pub mod oracle;
pub mod plants;
pub mod polytope;
pub mod search;
pub mod sensitivity;
pub mod simplex;

pub use contraction::{contraction_gap, verify_certificate, ContractionCertificate};
pub use numerics::{Matrix, Vector};
pub use plants::PlantModel;
pub use polytope::VPolytope;
pub use search::{find_polyhedron, synthesize, SearchConfig, SearchReport, SearchStatus};

//! Sum-of-squares machinery for biquadratic forms and tripartite quartic
//! forms: exact/float polynomial representations, the dehomogenize /
//! homogenize transforms and certificate transport, a sphere-product psd
//! oracle, a Gram-matrix sos engine with rank search and dual witnesses,
//! and the structural analysis of degenerated `(m-1) × 1 × 1` forms.

pub mod analysis;
pub mod certificate;
pub mod error;
pub mod fixtures;
pub mod forms;
pub mod generate;
pub mod io;
pub mod linalg;
pub mod poly;
pub mod psd;
pub mod rng;
pub mod scalar;
pub mod sos;
pub mod transforms;

pub use certificate::{ResidualReport, SosCertificate};
pub use error::{Error, Result};
pub use forms::{AnyForm, BiquadraticForm, Form211, M11Form, QuadraticForm, TripartiteForm};
pub use poly::{Monomial, PolynomialMap};
pub use scalar::{Rational, Scalar};

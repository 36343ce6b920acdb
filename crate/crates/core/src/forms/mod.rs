//! Polynomial objects: biquadratic forms, tripartite quartics, the M11
//! layout of degenerated `(m-1) × 1 × 1` forms and plain quadratic forms.

mod biquadratic;
mod m11;
mod quadratic;
mod tripartite;

pub use biquadratic::{BiquadraticForm, BqIndex};
pub use m11::{m11_vars, Form211, Form211Coeffs, M11Form};
pub use quadratic::QuadraticForm;
pub use tripartite::TripartiteForm;

use crate::poly::PolynomialMap;
use crate::scalar::Scalar;

/// Any form the oracles and the Gram engine accept.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyForm<T: Scalar = f64> {
    Biquadratic(BiquadraticForm<T>),
    Tripartite(TripartiteForm<T>),
    M11(M11Form<T>),
}

impl<T: Scalar> AnyForm<T> {
    pub fn to_poly(&self) -> PolynomialMap<T> {
        match self {
            AnyForm::Biquadratic(f) => f.to_poly(),
            AnyForm::Tripartite(h) => h.to_poly(),
            AnyForm::M11(h) => h.to_poly(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AnyForm::Biquadratic(_) => "biquadratic",
            AnyForm::Tripartite(_) => "tripartite",
            AnyForm::M11(_) => "m11",
        }
    }

    pub fn to_f64(&self) -> AnyForm<f64> {
        match self {
            AnyForm::Biquadratic(f) => AnyForm::Biquadratic(f.to_f64()),
            AnyForm::Tripartite(h) => AnyForm::Tripartite(h.to_f64()),
            AnyForm::M11(h) => AnyForm::M11(h.to_f64()),
        }
    }
}

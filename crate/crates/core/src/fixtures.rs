//! Built-in forms.

use crate::error::{Error, Result};
use crate::forms::BiquadraticForm;
use crate::scalar::Scalar;

pub const FIXTURE_NAMES: [&str; 4] = ["choi", "product", "perfect-square", "calderon-demo"];

/// Choi's 3×3 form, psd but not a sum of squares:
///
/// `x1²y1² + x2²y2² + x3²y3² + x1²y2² + x2²y3² + x3²y1²
///  − 2(x1x2y1y2 + x2x3y2y3 + x1x3y1y3)`.
///
/// Nonnegativity is checked by the sphere oracle and non-sos-ness by a dual
/// witness in the test suite.
pub fn choi<T: Scalar>() -> BiquadraticForm<T> {
    let one = T::one;
    let m2 = || T::from_i64(-2);
    BiquadraticForm::canonicalize(
        3,
        3,
        [
            ((0, 0, 0, 0), one()),
            ((1, 1, 1, 1), one()),
            ((2, 2, 2, 2), one()),
            ((0, 0, 1, 1), one()),
            ((1, 1, 2, 2), one()),
            ((2, 2, 0, 0), one()),
            ((0, 1, 0, 1), m2()),
            ((1, 2, 1, 2), m2()),
            ((0, 2, 0, 2), m2()),
        ],
    )
    .expect("fixture indices are in range")
}

/// `(Σ x_i²)(Σ y_k²)`.
pub fn product<T: Scalar>(m: usize, n: usize) -> BiquadraticForm<T> {
    BiquadraticForm::canonicalize(
        m,
        n,
        (0..m).flat_map(|i| (0..n).map(move |k| ((i, i, k, k), T::one()))),
    )
    .expect("fixture indices are in range")
}

/// `(Σ_{i ≤ min(m,n)} x_i y_i)²`.
pub fn perfect_square<T: Scalar>(m: usize, n: usize) -> BiquadraticForm<T> {
    let d = m.min(n);
    let mut entries = Vec::new();
    for i in 0..d {
        for j in i..d {
            let c = if i == j { T::one() } else { T::from_i64(2) };
            entries.push(((i, j, i, j), c));
        }
    }
    BiquadraticForm::canonicalize(m, n, entries).expect("fixture indices are in range")
}

/// A 3×2 psd form with integer coefficients built from four bilinear
/// squares, sized so the sos rank question is nontrivial.
pub fn calderon_demo<T: Scalar>() -> BiquadraticForm<T> {
    // rows: coefficients of x_i y_k in x-major order (x1y1, x1y2, x2y1, ...)
    let squares: [[i64; 6]; 4] = [
        [1, 0, 0, 1, 1, 0],
        [0, 1, -1, 0, 0, 1],
        [1, 1, 0, 0, -1, 1],
        [0, 0, 1, -1, 1, 1],
    ];
    let idx = |p: usize| (p / 2, p % 2);
    let mut entries = Vec::new();
    for q in &squares {
        for p in 0..6 {
            for r in 0..6 {
                let c = q[p] * q[r];
                if c != 0 {
                    let (i, k) = idx(p);
                    let (j, l) = idx(r);
                    entries.push(((i, j, k, l), T::from_i64(c)));
                }
            }
        }
    }
    BiquadraticForm::canonicalize(3, 2, entries).expect("fixture indices are in range")
}

/// Fixture by name; `m`, `n` size the parametric ones (`product`,
/// `perfect-square`), defaulting to 2×2.
pub fn fixture<T: Scalar>(name: &str, m: Option<usize>, n: Option<usize>) -> Result<BiquadraticForm<T>> {
    let (m, n) = (m.unwrap_or(2), n.unwrap_or(2));
    match name {
        "choi" => Ok(choi()),
        "product" => Ok(product(m, n)),
        "perfect-square" => Ok(perfect_square(m, n)),
        "calderon-demo" => Ok(calderon_demo()),
        other => Err(Error::UnknownFixture(other.to_string())),
    }
}

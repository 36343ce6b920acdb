use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::poly::{Monomial, PolynomialMap};
use crate::scalar::{Rational, Scalar};

/// Quadratic form `vᵀ M v` over named variables, `M` symmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm<T: Scalar = f64> {
    vars: Vec<String>,
    matrix: Vec<Vec<T>>,
}

impl<T: Scalar> QuadraticForm<T> {
    pub fn new(vars: Vec<String>, matrix: Vec<Vec<T>>) -> Result<Self> {
        let n = vars.len();
        if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidShape(format!(
                "quadratic form over {n} variables needs an {n}x{n} matrix"
            )));
        }
        for i in 0..n {
            for j in 0..i {
                if matrix[i][j] != matrix[j][i] {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(QuadraticForm { vars, matrix })
    }

    pub fn zero(vars: Vec<String>) -> Self {
        let n = vars.len();
        QuadraticForm {
            vars,
            matrix: vec![vec![T::zero(); n]; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn matrix(&self) -> &Vec<Vec<T>> {
        &self.matrix
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().flatten().all(|v| v.is_zero())
    }

    pub fn value(&self, v: &[T]) -> T {
        let n = self.dim();
        let mut acc = T::zero();
        for i in 0..n {
            for j in 0..n {
                acc = acc + self.matrix[i][j].clone() * v[i].clone() * v[j].clone();
            }
        }
        acc
    }

    pub fn to_poly(&self) -> PolynomialMap<T> {
        let n = self.dim();
        let mut p = PolynomialMap::zero(self.vars.clone());
        for i in 0..n {
            for j in 0..n {
                p.add_term(Monomial::from_pairs(n, &[(i, 1), (j, 1)]), self.matrix[i][j].clone());
            }
        }
        p
    }

    /// Reads a homogeneous quadratic polynomial.
    pub fn from_poly(p: &PolynomialMap<T>) -> Result<Self> {
        let n = p.nvars();
        let two = T::one() + T::one();
        let mut m = vec![vec![T::zero(); n]; n];
        for (mono, c) in p.terms() {
            if mono.degree() != 2 {
                return Err(Error::InvalidInput(format!(
                    "term {} is not quadratic",
                    mono.format(p.vars())
                )));
            }
            let idx: Vec<usize> = mono
                .exps()
                .iter()
                .enumerate()
                .flat_map(|(v, &k)| std::iter::repeat_n(v, k as usize))
                .collect();
            let (i, j) = (idx[0], idx[1]);
            if i == j {
                m[i][i] = c.clone();
            } else {
                m[i][j] = c.clone() / two.clone();
                m[j][i] = c.clone() / two.clone();
            }
        }
        Ok(QuadraticForm {
            vars: p.vars().to_vec(),
            matrix: m,
        })
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        linalg::to_dmatrix(&self.matrix)
    }

    pub fn to_f64(&self) -> QuadraticForm<f64> {
        QuadraticForm {
            vars: self.vars.clone(),
            matrix: self
                .matrix
                .iter()
                .map(|r| r.iter().map(|v| v.to_f64()).collect())
                .collect(),
        }
    }

    pub fn to_exact(&self) -> QuadraticForm<Rational> {
        QuadraticForm {
            vars: self.vars.clone(),
            matrix: self
                .matrix
                .iter()
                .map(|r| r.iter().map(|v| Rational::from_f64(v.to_f64())).collect())
                .collect(),
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.to_dmatrix())
    }

    /// Spectral factorization into squares of linear forms (coefficient
    /// vectors over `vars`).
    pub fn factor_squares(&self, rel_tol: f64) -> Result<Vec<Vec<f64>>> {
        linalg::psd_factor(&self.to_dmatrix(), rel_tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::names;

    #[test]
    fn rejects_asymmetric() {
        let r = QuadraticForm::new(names(&["a", "b"]), vec![vec![1.0, 2.0], vec![0.0, 1.0]]);
        assert!(r.is_err());
    }

    #[test]
    fn poly_round_trip() {
        let q = QuadraticForm::new(
            names(&["a", "b"]),
            vec![vec![1.0, 1.5], vec![1.5, -2.0]],
        )
        .unwrap();
        let p = q.to_poly();
        assert_eq!(p.coeff_of(&[("a", 1), ("b", 1)]), 3.0);
        assert_eq!(QuadraticForm::from_poly(&p).unwrap(), q);
        assert_eq!(q.value(&[1.0, 1.0]), 2.0);
    }
}

//! Sum-of-squares certificates over an explicit monomial basis.

use crate::error::{Error, Result};
use crate::poly::{Monomial, PolynomialMap};
use crate::scalar::{Rational, Scalar};

/// `Σ_k w_k (q_k · basis)²`. Without explicit weights every `w_k = 1`;
/// positive weights allow exact rational certificates (LDLᵀ form) whose
/// squares would otherwise need irrational scaling. The rank witness is the
/// number of squares either way.
#[derive(Clone, Debug, PartialEq)]
pub struct SosCertificate<T: Scalar = f64> {
    pub vars: Vec<String>,
    pub basis: Vec<Monomial>,
    pub squares: Vec<Vec<T>>,
    pub weights: Option<Vec<T>>,
    /// Free-form description of the certified target.
    pub target: Option<String>,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ResidualReport {
    pub max_abs: f64,
    pub l2: f64,
    pub target_max_abs: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl<T: Scalar> SosCertificate<T> {
    pub fn new(vars: Vec<String>, basis: Vec<Monomial>, squares: Vec<Vec<T>>) -> Self {
        SosCertificate {
            vars,
            basis,
            squares,
            weights: None,
            target: None,
        }
    }

    pub fn empty(vars: Vec<String>, basis: Vec<Monomial>) -> Self {
        Self::new(vars, basis, Vec::new())
    }

    pub fn with_weights(mut self, weights: Vec<T>) -> Self {
        self.weights = Some(weights);
        self
    }

    pub fn with_target(mut self, target: impl Into<String>) -> Self {
        self.target = Some(target.into());
        self
    }

    /// Number of squares.
    pub fn rank(&self) -> usize {
        self.squares.len()
    }

    pub fn weight(&self, k: usize) -> T {
        self.weights
            .as_ref()
            .map(|w| w[k].clone())
            .unwrap_or_else(T::one)
    }

    fn check(&self) -> Result<()> {
        let nb = self.basis.len();
        if self.basis.iter().any(|m| m.exps().len() != self.vars.len()) {
            return Err(Error::InvalidInput(
                "basis monomials do not match the variable list".into(),
            ));
        }
        if let Some((k, q)) = self.squares.iter().enumerate().find(|(_, q)| q.len() != nb) {
            return Err(Error::InvalidInput(format!(
                "square {} has {} coefficients for a basis of size {nb}",
                k + 1,
                q.len()
            )));
        }
        if let Some(w) = &self.weights {
            if w.len() != self.squares.len() {
                return Err(Error::InvalidInput("one weight per square required".into()));
            }
            if w.iter().any(|v| v.is_negative()) {
                return Err(Error::InvalidInput("weights must be nonnegative".into()));
            }
        }
        Ok(())
    }

    /// The polynomial `q_k · basis`.
    pub fn square_poly(&self, k: usize) -> PolynomialMap<T> {
        PolynomialMap::from_terms(
            self.vars.clone(),
            self.basis
                .iter()
                .cloned()
                .zip(self.squares[k].iter().cloned()),
        )
    }

    /// Exact expansion of the sum of squares.
    pub fn expand(&self) -> Result<PolynomialMap<T>> {
        self.check()?;
        let mut out = PolynomialMap::zero(self.vars.clone());
        let nb = self.basis.len();
        let products: Vec<Vec<Monomial>> = (0..nb)
            .map(|p| (0..nb).map(|q| self.basis[p].mul(&self.basis[q])).collect())
            .collect();
        for (k, q) in self.squares.iter().enumerate() {
            let w = self.weight(k);
            for p in 0..nb {
                if q[p].is_zero() {
                    continue;
                }
                for r in 0..nb {
                    if q[r].is_zero() {
                        continue;
                    }
                    out.add_term(
                        products[p][r].clone(),
                        w.clone() * q[p].clone() * q[r].clone(),
                    );
                }
            }
        }
        Ok(out)
    }

    /// Coefficient residual of `expand(c) - target`; passes iff
    /// `max_abs <= tol · (1 + ‖target‖∞)`.
    pub fn verify(&self, target: &PolynomialMap<T>, tol: f64) -> Result<ResidualReport> {
        let target = target.embed(&self.vars)?;
        let diff = self.expand()?.sub(&target);
        let max_abs = diff.max_abs();
        let l2 = diff
            .terms()
            .map(|(_, c)| c.to_f64().powi(2))
            .sum::<f64>()
            .sqrt();
        let target_max_abs = target.max_abs();
        let threshold = tol * (1.0 + target_max_abs);
        let pass = if T::EXACT && tol == 0.0 {
            diff.is_zero()
        } else {
            max_abs <= threshold
        };
        Ok(ResidualReport {
            max_abs,
            l2,
            target_max_abs,
            threshold,
            pass,
        })
    }

    /// Builds a certificate from explicit square polynomials; every term
    /// must lie on `basis`.
    pub fn from_square_polys(
        vars: Vec<String>,
        basis: Vec<Monomial>,
        polys: &[PolynomialMap<T>],
    ) -> Result<Self> {
        let mut squares = Vec::with_capacity(polys.len());
        for p in polys {
            let p = p.embed(&vars)?;
            let mut q = vec![T::zero(); basis.len()];
            for (m, c) in p.terms() {
                let idx = basis.iter().position(|b| b == m).ok_or_else(|| {
                    Error::InvalidCertificate(format!(
                        "term {} is outside the basis",
                        m.format(&vars)
                    ))
                })?;
                q[idx] = c.clone();
            }
            squares.push(q);
        }
        Ok(Self::new(vars, basis, squares))
    }

    /// Substitutes `images[v]` for each variable in every square and
    /// re-expresses the result over `basis`; weights are kept.
    pub fn substitute(
        &self,
        images: &[PolynomialMap<T>],
        vars: Vec<String>,
        basis: Vec<Monomial>,
    ) -> Result<Self> {
        self.check()?;
        let polys: Vec<PolynomialMap<T>> = (0..self.rank())
            .map(|k| self.square_poly(k).compose(images))
            .collect();
        let mut out = Self::from_square_polys(vars, basis, &polys)?;
        out.weights = self.weights.clone();
        out.target = self.target.clone();
        Ok(out)
    }

    pub fn basis_strings(&self) -> Vec<String> {
        self.basis.iter().map(|m| m.format(&self.vars)).collect()
    }

    pub fn map_coeffs<U: Scalar>(&self, f: impl Fn(&T) -> U) -> SosCertificate<U> {
        SosCertificate {
            vars: self.vars.clone(),
            basis: self.basis.clone(),
            squares: self
                .squares
                .iter()
                .map(|q| q.iter().map(&f).collect())
                .collect(),
            weights: self.weights.as_ref().map(|w| w.iter().map(&f).collect()),
            target: self.target.clone(),
        }
    }

    pub fn to_exact(&self) -> SosCertificate<Rational> {
        self.map_coeffs(|c| Rational::from_f64(c.to_f64()))
    }

    /// Float view with weights folded into the squares (`√w_k q_k`).
    pub fn to_f64(&self) -> SosCertificate<f64> {
        let mut out = SosCertificate::new(
            self.vars.clone(),
            self.basis.clone(),
            self.squares
                .iter()
                .enumerate()
                .map(|(k, q)| {
                    let s = self.weight(k).to_f64().sqrt();
                    q.iter().map(|c| c.to_f64() * s).collect()
                })
                .collect(),
        );
        out.target = self.target.clone();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{names, standard_vars};

    fn bq_basis() -> (Vec<String>, Vec<Monomial>) {
        let vars = standard_vars(2, 2, false);
        let basis = (0..2)
            .flat_map(|i| (0..2).map(move |k| Monomial::from_pairs(4, &[(i, 1), (2 + k, 1)])))
            .collect();
        (vars, basis)
    }

    #[test]
    fn empty_certificate_is_zero() {
        let (vars, basis) = bq_basis();
        let c = SosCertificate::<f64>::empty(vars, basis);
        assert!(c.expand().unwrap().is_zero());
        assert_eq!(c.rank(), 0);
    }

    #[test]
    fn single_basis_square() {
        let (vars, basis) = bq_basis();
        let c = SosCertificate::new(vars, basis, vec![vec![1.0, 0.0, 0.0, 0.0]]);
        let p = c.expand().unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.coeff_of(&[("x1", 2), ("y1", 2)]), 1.0);
    }

    #[test]
    fn perturbation_is_detected() {
        let (vars, basis) = bq_basis();
        let c = SosCertificate::new(vars, basis, vec![vec![1.0, 0.0, 0.0, 1.0]]);
        let target = c.expand().unwrap();
        assert!(c.verify(&target, 1e-12).unwrap().pass);
        let mut bad = c.clone();
        bad.squares[0][0] += 1e-3;
        let r = bad.verify(&target, 1e-6).unwrap();
        assert!(!r.pass);
        assert!(r.max_abs > 1e-3);
    }

    #[test]
    fn exact_weighted_certificate() {
        let (vars, basis) = bq_basis();
        let r = |s: &str| crate::scalar::parse_rational(s).unwrap();
        let c = SosCertificate::new(vars, basis, vec![vec![r("1"), r("0"), r("0"), r("1/3")]])
            .with_weights(vec![r("2")]);
        let p = c.expand().unwrap();
        assert_eq!(p.coeff_of(&[("x1", 1), ("x2", 1), ("y1", 1), ("y2", 1)]), r("4/3"));
        assert!(c.verify(&p, 0.0).unwrap().pass);
        assert_eq!(c.to_f64().rank(), 1);
    }

    #[test]
    fn dimension_mismatch() {
        let (vars, basis) = bq_basis();
        let c = SosCertificate::new(vars, basis, vec![vec![1.0]]);
        assert!(c.expand().is_err());
    }

    #[test]
    fn off_basis_square_rejected() {
        let vars = names(&["a", "b"]);
        let basis = vec![Monomial::new(vec![1, 0])];
        let p = PolynomialMap::<f64>::var(vars.clone(), "b").unwrap();
        assert!(SosCertificate::from_square_polys(vars, basis, &[p]).is_err());
    }
}

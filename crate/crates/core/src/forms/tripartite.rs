use crate::error::{Error, Result};
use crate::forms::{BiquadraticForm, M11Form};
use crate::poly::{standard_vars, Monomial, PolynomialMap};
use crate::scalar::{Rational, Scalar};

/// An `mx × ny × 1` tripartite quartic form
/// `h = h0 z⁴ + h1 z³ + h2 z² + h3 z + h4`, where every term has x-degree
/// and y-degree at most 2 and `z` is the complementary variable.
///
/// `h1..h3` are polynomials over `x1..xmx, y1..yny` (no `z`); `h4` is the
/// biquadratic part.
#[derive(Clone, Debug, PartialEq)]
pub struct TripartiteForm<T: Scalar = f64> {
    pub mx: usize,
    pub ny: usize,
    pub h0: T,
    pub h1: PolynomialMap<T>,
    pub h2: PolynomialMap<T>,
    pub h3: PolynomialMap<T>,
    pub h4: BiquadraticForm<T>,
}

/// Splits a variable list of the form `x1..xm, y1..yn, z` into `(m, n)`.
pub(crate) fn tripartite_shape(vars: &[String]) -> Result<(usize, usize)> {
    let mx = vars.iter().filter(|v| v.starts_with('x')).count();
    let ny = vars.iter().filter(|v| v.starts_with('y')).count();
    if vars != standard_vars(mx, ny, true).as_slice() {
        return Err(Error::NotTripartite(format!(
            "variables must be x1..xm, y1..yn, z; got {vars:?}"
        )));
    }
    Ok((mx, ny))
}

impl<T: Scalar> TripartiteForm<T> {
    pub fn vars(&self) -> Vec<String> {
        standard_vars(self.mx, self.ny, true)
    }

    /// Groups the terms of a quartic over `x1..xm, y1..yn, z` by z-degree.
    pub fn extract_components(p: &PolynomialMap<T>) -> Result<Self> {
        let (mx, ny) = tripartite_shape(p.vars())?;
        let xs: Vec<usize> = (0..mx).collect();
        let ys: Vec<usize> = (mx..mx + ny).collect();
        let zi = mx + ny;
        let block = standard_vars(mx, ny, false);
        let mut parts: Vec<PolynomialMap<T>> =
            (0..5).map(|_| PolynomialMap::zero(block.clone())).collect();
        for (mono, c) in p.terms() {
            let dx = mono.degree_in(&xs);
            let dy = mono.degree_in(&ys);
            if dx > 2 || dy > 2 || mono.degree() != 4 {
                return Err(Error::NotTripartite(format!(
                    "term {} has x-degree {dx}, y-degree {dy}, total degree {}",
                    mono.format(p.vars()),
                    mono.degree()
                )));
            }
            let dz = mono.exps()[zi] as usize;
            let rest = Monomial::new(mono.exps()[..zi].to_vec());
            parts[dz].add_term(rest, c.clone());
        }
        let h0 = parts[4].coeff(&Monomial::one(mx + ny));
        let h4 = BiquadraticForm::from_poly(mx, ny, &parts[0])?;
        Ok(TripartiteForm {
            mx,
            ny,
            h0,
            h1: parts[3].clone(),
            h2: parts[2].clone(),
            h3: parts[1].clone(),
            h4,
        })
    }

    pub fn to_poly(&self) -> PolynomialMap<T> {
        let vars = self.vars();
        let nv = vars.len();
        let zi = nv - 1;
        let mut out = PolynomialMap::zero(vars.clone());
        out.add_term(Monomial::from_pairs(nv, &[(zi, 4)]), self.h0.clone());
        let lift = |p: &PolynomialMap<T>, dz: u32, out: &mut PolynomialMap<T>| {
            for (m, c) in p.terms() {
                let mut e = m.exps().to_vec();
                e.push(dz);
                out.add_term(Monomial::new(e), c.clone());
            }
        };
        lift(&self.h1, 3, &mut out);
        lift(&self.h2, 2, &mut out);
        lift(&self.h3, 1, &mut out);
        lift(&self.h4.to_poly(), 0, &mut out);
        out
    }

    pub fn is_degenerated(&self) -> bool {
        self.h0.is_zero()
    }

    /// Structural requirement for a psd degenerated form: `h0 = 0` and `h1 ≡ 0`.
    pub fn check_degenerated_structure(&self) -> Result<()> {
        if !self.is_degenerated() {
            return Err(Error::InvalidInput(format!(
                "h0 = {:?} is nonzero",
                self.h0
            )));
        }
        if !self.h1.is_zero() {
            return Err(Error::InvalidInput(
                "degenerated form with h1 ≢ 0 cannot be psd".into(),
            ));
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.to_poly().max_abs()
    }

    /// `h - c z⁴`.
    pub fn minus_z4(&self, c: &T) -> Self {
        let mut out = self.clone();
        out.h0 = self.h0.clone() - c.clone();
        out
    }

    /// View of an `(m-1) × 1 × 1` degenerated form in the M11 layout
    /// (`y1` becomes `y`).
    pub fn to_m11(&self) -> Result<M11Form<T>> {
        if self.ny != 1 {
            return Err(Error::InvalidShape(format!(
                "M11 layout needs ny = 1, got {}",
                self.ny
            )));
        }
        self.check_degenerated_structure()?;
        let p = self.to_poly();
        let mut vars = p.vars().to_vec();
        vars[self.mx] = "y".to_string();
        let renamed = PolynomialMap::from_terms(vars, p.terms().map(|(m, c)| (m.clone(), c.clone())));
        M11Form::from_poly(&renamed)
    }

    pub fn map_coeffs<U: Scalar>(&self, f: impl Fn(&T) -> U + Copy) -> TripartiteForm<U> {
        TripartiteForm {
            mx: self.mx,
            ny: self.ny,
            h0: f(&self.h0),
            h1: self.h1.map_coeffs(f),
            h2: self.h2.map_coeffs(f),
            h3: self.h3.map_coeffs(f),
            h4: self.h4.map_coeffs(f),
        }
    }

    pub fn to_f64(&self) -> TripartiteForm<f64> {
        self.map_coeffs(|c| c.to_f64())
    }

    pub fn to_exact(&self) -> TripartiteForm<Rational> {
        self.map_coeffs(|c| Rational::from_f64(c.to_f64()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::names;

    fn var(vars: &[String], n: &str) -> PolynomialMap<f64> {
        PolynomialMap::var(vars.to_vec(), n).unwrap()
    }

    #[test]
    fn pure_z4() {
        let vars = standard_vars(1, 1, true);
        let z = var(&vars, "z");
        let h = TripartiteForm::extract_components(&z.square().square()).unwrap();
        assert_eq!(h.h0, 1.0);
        assert!(h.h1.is_zero() && h.h2.is_zero() && h.h3.is_zero() && h.h4.is_zero());
        assert!(!h.is_degenerated());
    }

    #[test]
    fn square_of_x1y1_plus_z2() {
        let vars = standard_vars(1, 1, true);
        let p = var(&vars, "x1")
            .mul(&var(&vars, "y1"))
            .add(&var(&vars, "z").square())
            .square();
        let h = TripartiteForm::extract_components(&p).unwrap();
        assert_eq!(h.h0, 1.0);
        assert!(h.h1.is_zero());
        assert_eq!(h.h2.len(), 1);
        assert_eq!(h.h2.coeff_of(&[("x1", 1), ("y1", 1)]), 2.0);
        assert!(h.h3.is_zero());
        assert_eq!(h.h4.get(0, 0, 0, 0), 1.0);
        assert_eq!(h.to_poly(), p);
    }

    #[test]
    fn y2z2_is_degenerated() {
        let vars = standard_vars(1, 1, true);
        let p = var(&vars, "y1").mul(&var(&vars, "z")).square();
        let h = TripartiteForm::extract_components(&p).unwrap();
        assert!(h.is_degenerated());
        assert_eq!(h.h2.coeff_of(&[("y1", 2)]), 1.0);
        assert!(h.h3.is_zero() && h.h4.is_zero());
        let m = h.to_m11().unwrap();
        assert_eq!(m.h7, 1.0);
    }

    #[test]
    fn rejects_bad_degrees() {
        let vars = standard_vars(1, 1, true);
        let x = var(&vars, "x1");
        let bad = x.square().mul(&x).mul(&var(&vars, "z"));
        assert!(matches!(
            TripartiteForm::extract_components(&bad),
            Err(Error::NotTripartite(_))
        ));
        let cubic = x.mul(&x).mul(&var(&vars, "z"));
        assert!(TripartiteForm::extract_components(&cubic).is_err());
        let other = PolynomialMap::<f64>::var(names(&["a", "z"]), "a").unwrap();
        assert!(TripartiteForm::extract_components(&other).is_err());
    }
}

//! Sparse multivariate polynomials over a named, ordered variable list.
//!
//! Monomials are exponent vectors aligned with the variable list and are
//! ordered graded-lexicographically (`x1 > x2 > ... > z`). Exact zero
//! coefficients are never stored; [`PolynomialMap::normalize`] additionally
//! applies the relative pruning rule of the float backend.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exps: Vec<u32>) -> Self {
        Monomial(exps)
    }

    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    /// Monomial from `(variable index, exponent)` pairs.
    pub fn from_pairs(nvars: usize, pairs: &[(usize, u32)]) -> Self {
        let mut e = vec![0; nvars];
        for &(v, k) in pairs {
            e[v] += k;
        }
        Monomial(e)
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn degree_in(&self, vars: &[usize]) -> u32 {
        vars.iter().map(|&v| self.0[v]).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn eval<T: Scalar>(&self, point: &[T]) -> T {
        let mut acc = T::one();
        for (v, &e) in self.0.iter().enumerate() {
            for _ in 0..e {
                acc = acc * point[v].clone();
            }
        }
        acc
    }

    pub fn format(&self, vars: &[String]) -> String {
        let parts: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(v, &e)| {
                if e == 1 {
                    vars[v].clone()
                } else {
                    format!("{}^{}", vars[v], e)
                }
            })
            .collect();
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }

    /// Parses strings such as `x1*y2^2`, `z^2` or `1` against `vars`.
    pub fn parse(s: &str, vars: &[String]) -> Result<Monomial> {
        let mut e = vec![0u32; vars.len()];
        let s = s.trim();
        if s == "1" {
            return Ok(Monomial(e));
        }
        for factor in s.split('*') {
            let factor = factor.trim();
            let (name, pow) = match factor.split_once('^') {
                Some((n, p)) => (
                    n.trim(),
                    p.trim()
                        .parse::<u32>()
                        .map_err(|_| Error::Parse(format!("bad exponent in `{factor}`")))?,
                ),
                None => (factor, 1),
            };
            let idx = vars
                .iter()
                .position(|v| v == name)
                .ok_or_else(|| Error::Parse(format!("unknown variable `{name}` in `{s}`")))?;
            e[idx] += pow;
        }
        Ok(Monomial(e))
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Variable names `x1..xm`, `y1..yn`, optionally followed by `z`.
pub fn standard_vars(m: usize, n: usize, with_z: bool) -> Vec<String> {
    let mut v: Vec<String> = (1..=m).map(|i| format!("x{i}")).collect();
    v.extend((1..=n).map(|k| format!("y{k}")));
    if with_z {
        v.push("z".to_string());
    }
    v
}

pub fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialMap<T: Scalar = f64> {
    vars: Vec<String>,
    terms: BTreeMap<Monomial, T>,
}

impl<T: Scalar> PolynomialMap<T> {
    pub fn zero(vars: Vec<String>) -> Self {
        PolynomialMap {
            vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: Vec<String>, c: T) -> Self {
        let n = vars.len();
        let mut p = Self::zero(vars);
        p.add_term(Monomial::one(n), c);
        p
    }

    /// The polynomial consisting of a single variable.
    pub fn var(vars: Vec<String>, name: &str) -> Result<Self> {
        let idx = vars
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::InvalidInput(format!("unknown variable `{name}`")))?;
        let n = vars.len();
        let mut p = Self::zero(vars);
        p.add_term(Monomial::from_pairs(n, &[(idx, 1)]), T::one());
        Ok(p)
    }

    pub fn from_terms(vars: Vec<String>, terms: impl IntoIterator<Item = (Monomial, T)>) -> Self {
        let mut p = Self::zero(vars);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &T)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> T {
        self.terms.get(m).cloned().unwrap_or_else(T::zero)
    }

    /// Coefficient of the monomial given as `(variable name, exponent)` pairs.
    pub fn coeff_of(&self, pairs: &[(&str, u32)]) -> T {
        let mut e = vec![0; self.vars.len()];
        for (name, k) in pairs {
            match self.var_index(name) {
                Some(i) => e[i] += k,
                None => return T::zero(),
            }
        }
        self.coeff(&Monomial(e))
    }

    pub fn add_term(&mut self, m: Monomial, c: T) {
        debug_assert_eq!(m.0.len(), self.vars.len());
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                *v = v.clone() + c;
                if v.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.abs_f64()).fold(0.0, f64::max)
    }

    /// Drops coefficients below the backend's pruning threshold.
    pub fn normalize(mut self) -> Self {
        let scale = self.max_abs();
        self.terms.retain(|_, c| !c.negligible(scale));
        self
    }

    fn check_vars(&self, other: &Self) {
        assert_eq!(
            self.vars, other.vars,
            "polynomials over different variable lists"
        );
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_vars(other);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check_vars(other);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_vars(other);
        let mut out = Self::zero(self.vars.clone());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca.clone() * cb.clone());
            }
        }
        out
    }

    pub fn square(&self) -> Self {
        self.mul(self)
    }

    pub fn scale(&self, s: &T) -> Self {
        Self::from_terms(
            self.vars.clone(),
            self.terms.iter().map(|(m, c)| (m.clone(), c.clone() * s.clone())),
        )
    }

    pub fn eval(&self, point: &[T]) -> T {
        assert_eq!(point.len(), self.vars.len());
        self.terms
            .iter()
            .fold(T::zero(), |acc, (m, c)| acc + c.clone() * m.eval(point))
    }

    /// Float evaluation irrespective of the coefficient backend.
    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.vars.len());
        self.terms
            .iter()
            .map(|(m, c)| c.to_f64() * m.eval(point))
            .sum()
    }

    /// Value and gradient at a float point.
    pub fn eval_grad(&self, point: &[f64]) -> (f64, Vec<f64>) {
        let n = self.vars.len();
        let mut grad = vec![0.0; n];
        let mut value = 0.0;
        for (m, c) in &self.terms {
            let c = c.to_f64();
            value += c * m.eval(point);
            for v in 0..n {
                let e = m.0[v];
                if e == 0 {
                    continue;
                }
                let mut t = c * e as f64;
                for (w, &ew) in m.0.iter().enumerate() {
                    let k = if w == v { ew - 1 } else { ew };
                    for _ in 0..k {
                        t *= point[w];
                    }
                }
                grad[v] += t;
            }
        }
        (value, grad)
    }

    /// Re-expresses the polynomial over `target` variables (matched by name).
    /// Variables missing from `target` must not occur.
    pub fn embed(&self, target: &[String]) -> Result<Self> {
        let map: Vec<Option<usize>> = self
            .vars
            .iter()
            .map(|v| target.iter().position(|t| t == v))
            .collect();
        let mut out = Self::zero(target.to_vec());
        for (m, c) in &self.terms {
            let mut e = vec![0; target.len()];
            for (v, &k) in m.0.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                match map[v] {
                    Some(t) => e[t] += k,
                    None => {
                        return Err(Error::InvalidInput(format!(
                            "variable `{}` not present in target list",
                            self.vars[v]
                        )))
                    }
                }
            }
            out.add_term(Monomial(e), c.clone());
        }
        Ok(out)
    }

    /// Substitutes `images[v]` for every variable `v`; all images share one
    /// variable list, which becomes the variable list of the result.
    pub fn compose(&self, images: &[PolynomialMap<T>]) -> Self {
        assert_eq!(images.len(), self.vars.len());
        let target = images
            .first()
            .map(|p| p.vars.clone())
            .unwrap_or_default();
        let mut out = Self::zero(target.clone());
        let mut powers: Vec<Vec<PolynomialMap<T>>> = images
            .iter()
            .map(|p| vec![Self::constant(target.clone(), T::one()), p.clone()])
            .collect();
        for (m, c) in &self.terms {
            let mut term = Self::constant(target.clone(), c.clone());
            for (v, &e) in m.0.iter().enumerate() {
                while powers[v].len() <= e as usize {
                    let next = powers[v].last().unwrap().mul(&images[v]);
                    powers[v].push(next);
                }
                if e > 0 {
                    term = term.mul(&powers[v][e as usize]);
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Fixes variable `name` to the value `c` and removes it from the list.
    pub fn set_var(&self, name: &str, c: &T) -> Result<Self> {
        let idx = self
            .var_index(name)
            .ok_or_else(|| Error::InvalidInput(format!("unknown variable `{name}`")))?;
        let mut vars = self.vars.clone();
        vars.remove(idx);
        let mut out = Self::zero(vars);
        for (m, coef) in &self.terms {
            let mut e = m.0.clone();
            let k = e.remove(idx);
            let mut val = coef.clone();
            for _ in 0..k {
                val = val * c.clone();
            }
            out.add_term(Monomial(e), val);
        }
        Ok(out)
    }

    pub fn map_coeffs<U: Scalar>(&self, f: impl Fn(&T) -> U) -> PolynomialMap<U> {
        PolynomialMap::from_terms(
            self.vars.clone(),
            self.terms.iter().map(|(m, c)| (m.clone(), f(c))),
        )
    }

    pub fn to_f64(&self) -> PolynomialMap<f64> {
        self.map_coeffs(|c| c.to_f64())
    }

    pub fn to_exact(&self) -> PolynomialMap<Rational> {
        self.map_coeffs(|c| Rational::from_f64(c.to_f64()))
    }
}

impl<T: Scalar> fmt::Display for PolynomialMap<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .rev()
            .map(|(m, c)| format!("{}*{}", c.to_coeff_string(), m.format(&self.vars)))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> Vec<String> {
        names(&["x1", "y1", "z"])
    }

    #[test]
    fn monomial_format_parse() {
        let vars = xy();
        let m = Monomial::new(vec![1, 2, 0]);
        assert_eq!(m.format(&vars), "x1*y1^2");
        assert_eq!(Monomial::parse("x1*y1^2", &vars).unwrap(), m);
        assert_eq!(Monomial::parse("1", &vars).unwrap(), Monomial::one(3));
        assert!(Monomial::parse("w", &vars).is_err());
    }

    #[test]
    fn graded_lex_order() {
        let a = Monomial::new(vec![2, 0, 0]);
        let b = Monomial::new(vec![1, 1, 0]);
        let c = Monomial::new(vec![0, 0, 3]);
        assert!(a > b);
        assert!(c > a);
    }

    #[test]
    fn square_of_binomial() {
        let vars = xy();
        let x = PolynomialMap::<f64>::var(vars.clone(), "x1").unwrap();
        let z = PolynomialMap::<f64>::var(vars.clone(), "z").unwrap();
        let p = x.add(&z.square()).square();
        assert_eq!(p.coeff_of(&[("x1", 2)]), 1.0);
        assert_eq!(p.coeff_of(&[("x1", 1), ("z", 2)]), 2.0);
        assert_eq!(p.coeff_of(&[("z", 4)]), 1.0);
        assert_eq!(p.len(), 3);
    }

    #[test]
    fn cancellation_removes_terms() {
        let vars = xy();
        let x = PolynomialMap::<f64>::var(vars, "x1").unwrap();
        assert!(x.sub(&x).is_zero());
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let vars = xy();
        let p = PolynomialMap::<f64>::from_terms(
            vars,
            [
                (Monomial::new(vec![2, 1, 1]), 1.5),
                (Monomial::new(vec![0, 3, 1]), -2.0),
                (Monomial::new(vec![1, 0, 3]), 0.5),
            ],
        );
        let pt = [0.3, -0.7, 1.1];
        let (_, g) = p.eval_grad(&pt);
        for v in 0..3 {
            let h = 1e-6;
            let mut a = pt;
            let mut b = pt;
            a[v] += h;
            b[v] -= h;
            let fd = (p.eval_f64(&a) - p.eval_f64(&b)) / (2.0 * h);
            assert!((fd - g[v]).abs() < 1e-6, "var {v}: {fd} vs {}", g[v]);
        }
    }

    #[test]
    fn compose_and_set_var() {
        let vars = xy();
        let x = PolynomialMap::<f64>::var(vars.clone(), "x1").unwrap();
        let y = PolynomialMap::<f64>::var(vars.clone(), "y1").unwrap();
        let z = PolynomialMap::<f64>::var(vars.clone(), "z").unwrap();
        let p = x.mul(&y).add(&z.square());
        // x1 -> x1 + z
        let q = p.compose(&[x.add(&z), y.clone(), z.clone()]);
        assert_eq!(q.coeff_of(&[("y1", 1), ("z", 1)]), 1.0);
        let r = p.set_var("z", &1.0).unwrap();
        assert_eq!(r.vars(), &names(&["x1", "y1"])[..]);
        assert_eq!(r.coeff_of(&[]), 1.0);
    }

    #[test]
    fn normalize_prunes_relative() {
        let p = PolynomialMap::<f64>::from_terms(
            names(&["x1"]),
            [(Monomial::new(vec![1]), 1.0), (Monomial::new(vec![2]), 1e-16)],
        );
        assert_eq!(p.normalize().len(), 1);
    }

    #[test]
    fn embed_reorders() {
        let p = PolynomialMap::<f64>::var(names(&["y1"]), "y1").unwrap();
        let q = p.embed(&xy()).unwrap();
        assert_eq!(q.coeff_of(&[("y1", 1)]), 1.0);
        assert!(q.embed(&names(&["x1"])).is_err());
    }
}

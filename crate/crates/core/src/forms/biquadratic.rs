use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::forms::QuadraticForm;
use crate::poly::{standard_vars, Monomial, PolynomialMap};
use crate::scalar::{Rational, Scalar};

/// Canonical index `(i, j, k, l)` with `i <= j`, `k <= l`, 0-based.
pub type BqIndex = (usize, usize, usize, usize);

/// An `m × n` biquadratic form `Σ a_{ijkl} x_i x_j y_k y_l`.
///
/// The stored value for a canonical index is the full coefficient of the
/// monomial `x_i x_j y_k y_l` in the expanded polynomial, so the form has
/// exactly one entry per unordered pair `(i, j)` and `(k, l)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BiquadraticForm<T: Scalar = f64> {
    m: usize,
    n: usize,
    coeffs: BTreeMap<BqIndex, T>,
}

fn canonical((i, j, k, l): BqIndex) -> BqIndex {
    (i.min(j), i.max(j), k.min(l), k.max(l))
}

impl<T: Scalar> BiquadraticForm<T> {
    pub fn zero(m: usize, n: usize) -> Self {
        BiquadraticForm {
            m,
            n,
            coeffs: BTreeMap::new(),
        }
    }

    /// Builds a form from raw `(i, j, k, l) -> v` entries (0-based), summing
    /// entries that share an unordered index.
    pub fn canonicalize(
        m: usize,
        n: usize,
        entries: impl IntoIterator<Item = (BqIndex, T)>,
    ) -> Result<Self> {
        let mut f = Self::zero(m, n);
        for (idx, v) in entries {
            let (i, j, k, l) = idx;
            if i >= m || j >= m || k >= n || l >= n {
                return Err(Error::InvalidIndex(format!(
                    "({}, {}, {}, {}) for a {m}x{n} form",
                    i + 1,
                    j + 1,
                    k + 1,
                    l + 1
                )));
            }
            f.add_entry(canonical(idx), v);
        }
        Ok(f)
    }

    fn add_entry(&mut self, idx: BqIndex, v: T) {
        let e = self.coeffs.entry(idx).or_insert_with(T::zero);
        *e = e.clone() + v;
        if e.is_zero() {
            self.coeffs.remove(&idx);
        }
    }

    /// Rejects shapes outside `m >= n >= 2`, the standing assumption for
    /// user-level inputs.
    pub fn ensure_standard_shape(&self) -> Result<()> {
        if self.m >= self.n && self.n >= 2 {
            Ok(())
        } else {
            Err(Error::InvalidShape(format!(
                "expected m >= n >= 2, got {}x{}",
                self.m, self.n
            )))
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Coefficient query; symmetric in `(i, j)` and in `(k, l)`.
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> T {
        self.coeffs
            .get(&canonical((i, j, k, l)))
            .cloned()
            .unwrap_or_else(T::zero)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&BqIndex, &T)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().map(|c| c.abs_f64()).fold(0.0, f64::max)
    }

    pub fn evaluate(&self, x: &[T], y: &[T]) -> Result<T> {
        self.check_dims(x.len(), y.len())?;
        Ok(self.coeffs.iter().fold(T::zero(), |acc, (&(i, j, k, l), v)| {
            acc + v.clone() * x[i].clone() * x[j].clone() * y[k].clone() * y[l].clone()
        }))
    }

    fn check_dims(&self, mx: usize, ny: usize) -> Result<()> {
        if mx != self.m || ny != self.n {
            return Err(Error::InvalidInput(format!(
                "point of shape ({mx}, {ny}) for a {}x{} form",
                self.m, self.n
            )));
        }
        Ok(())
    }

    /// The matrix `A(x)` with `yᵀ A(x) y = f(x, y)`.
    pub fn contract_x(&self, x: &[T]) -> Result<QuadraticForm<T>> {
        if x.len() != self.m {
            return Err(Error::InvalidInput(format!(
                "x has length {}, expected {}",
                x.len(),
                self.m
            )));
        }
        let two = T::one() + T::one();
        let mut a = vec![vec![T::zero(); self.n]; self.n];
        for (&(i, j, k, l), v) in &self.coeffs {
            let w = v.clone() * x[i].clone() * x[j].clone();
            if k == l {
                a[k][k] = a[k][k].clone() + w;
            } else {
                let h = w / two.clone();
                a[k][l] = a[k][l].clone() + h.clone();
                a[l][k] = a[l][k].clone() + h;
            }
        }
        QuadraticForm::new(standard_vars(0, self.n, false), a)
    }

    /// The matrix `B(y)` with `xᵀ B(y) x = f(x, y)`.
    pub fn contract_y(&self, y: &[T]) -> Result<QuadraticForm<T>> {
        if y.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "y has length {}, expected {}",
                y.len(),
                self.n
            )));
        }
        let two = T::one() + T::one();
        let mut b = vec![vec![T::zero(); self.m]; self.m];
        for (&(i, j, k, l), v) in &self.coeffs {
            let w = v.clone() * y[k].clone() * y[l].clone();
            if i == j {
                b[i][i] = b[i][i].clone() + w;
            } else {
                let h = w / two.clone();
                b[i][j] = b[i][j].clone() + h.clone();
                b[j][i] = b[j][i].clone() + h;
            }
        }
        QuadraticForm::new(standard_vars(self.m, 0, false), b)
    }

    pub fn vars(&self) -> Vec<String> {
        standard_vars(self.m, self.n, false)
    }

    /// Expanded polynomial over `x1..xm, y1..yn`.
    pub fn to_poly(&self) -> PolynomialMap<T> {
        let nv = self.m + self.n;
        PolynomialMap::from_terms(
            self.vars(),
            self.coeffs.iter().map(|(&(i, j, k, l), v)| {
                (
                    Monomial::from_pairs(nv, &[(i, 1), (j, 1), (self.m + k, 1), (self.m + l, 1)]),
                    v.clone(),
                )
            }),
        )
    }

    /// Reads a polynomial over `x1..xm, y1..yn` that is bihomogeneous of
    /// bidegree (2, 2).
    pub fn from_poly(m: usize, n: usize, p: &PolynomialMap<T>) -> Result<Self> {
        let p = p.embed(&standard_vars(m, n, false))?;
        let mut entries = Vec::new();
        for (mono, c) in p.terms() {
            let e = mono.exps();
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (v, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    if v < m {
                        xs.push(v);
                    } else {
                        ys.push(v - m);
                    }
                }
            }
            if xs.len() != 2 || ys.len() != 2 {
                return Err(Error::InvalidInput(format!(
                    "monomial {} is not of bidegree (2, 2)",
                    mono.format(p.vars())
                )));
            }
            entries.push(((xs[0], xs[1], ys[0], ys[1]), c.clone()));
        }
        Self::canonicalize(m, n, entries)
    }

    pub fn scale(&self, s: &T) -> Self {
        let mut out = Self::zero(self.m, self.n);
        for (&idx, v) in &self.coeffs {
            out.add_entry(idx, v.clone() * s.clone());
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if (self.m, self.n) != (other.m, other.n) {
            return Err(Error::InvalidShape("adding forms of different shapes".into()));
        }
        let mut out = self.clone();
        for (&idx, v) in &other.coeffs {
            out.add_entry(idx, v.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-T::one()))
    }

    pub fn map_coeffs<U: Scalar>(&self, f: impl Fn(&T) -> U) -> BiquadraticForm<U> {
        let mut out = BiquadraticForm::zero(self.m, self.n);
        for (&idx, v) in &self.coeffs {
            out.add_entry(idx, f(v));
        }
        out
    }

    pub fn to_f64(&self) -> BiquadraticForm<f64> {
        self.map_coeffs(|c| c.to_f64())
    }

    pub fn to_exact(&self) -> BiquadraticForm<Rational> {
        self.map_coeffs(|c| Rational::from_f64(c.to_f64()))
    }
}

impl BiquadraticForm<f64> {
    /// `(Σ x_i²)(Σ y_k²)`.
    pub fn product(m: usize, n: usize) -> Self {
        let entries = (0..m).flat_map(|i| (0..n).map(move |k| ((i, i, k, k), 1.0)));
        Self::canonicalize(m, n, entries).expect("indices in range")
    }

    pub fn evaluate_f64(&self, x: &[f64], y: &[f64]) -> f64 {
        self.evaluate(x, y).expect("dimension mismatch")
    }
}

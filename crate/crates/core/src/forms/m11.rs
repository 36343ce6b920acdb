use crate::error::{Error, Result};
use crate::forms::{BiquadraticForm, QuadraticForm};
use crate::poly::{Monomial, PolynomialMap};
use crate::scalar::{Rational, Scalar};

/// Variables `x1..xd, y, z` of the M11 layout.
pub fn m11_vars(dim: usize) -> Vec<String> {
    let mut v: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    v.push("y".into());
    v.push("z".into());
    v
}

/// A degenerated `d × 1 × 1` tripartite quartic in the layout
///
/// `h = h2(x) z² + h3(x) yz + h4(x) y² + h5(x) yz² + h6(x) y²z + h7 y²z²`
///
/// with `h2, h3, h4` quadratic forms `xᵀ H x` (symmetric matrices), `h5, h6`
/// linear forms and `h7` a constant. There is no `y⁴` or `z⁴` term, so the
/// form vanishes at `(0, 1, 0)` and `(0, 0, 1)` by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct M11Form<T: Scalar = f64> {
    pub dim: usize,
    pub h2: Vec<Vec<T>>,
    pub h3: Vec<Vec<T>>,
    pub h4: Vec<Vec<T>>,
    pub h5: Vec<T>,
    pub h6: Vec<T>,
    pub h7: T,
}

impl<T: Scalar> M11Form<T> {
    pub fn zero(dim: usize) -> Self {
        let z = vec![vec![T::zero(); dim]; dim];
        M11Form {
            dim,
            h2: z.clone(),
            h3: z.clone(),
            h4: z,
            h5: vec![T::zero(); dim],
            h6: vec![T::zero(); dim],
            h7: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        for (name, m) in [("h2", &self.h2), ("h3", &self.h3), ("h4", &self.h4)] {
            if m.len() != d || m.iter().any(|r| r.len() != d) {
                return Err(Error::InvalidShape(format!("{name} must be {d}x{d}")));
            }
            for i in 0..d {
                for j in 0..i {
                    if m[i][j] != m[j][i] {
                        return Err(Error::InvalidInput(format!("{name} is not symmetric")));
                    }
                }
            }
        }
        if self.h5.len() != d || self.h6.len() != d {
            return Err(Error::InvalidShape(format!("h5 and h6 must have length {d}")));
        }
        Ok(())
    }

    pub fn vars(&self) -> Vec<String> {
        m11_vars(self.dim)
    }

    pub fn to_poly(&self) -> PolynomialMap<T> {
        let d = self.dim;
        let nv = d + 2;
        let (y, z) = (d, d + 1);
        let mut p = PolynomialMap::zero(self.vars());
        for i in 0..d {
            for j in 0..d {
                p.add_term(Monomial::from_pairs(nv, &[(i, 1), (j, 1), (z, 2)]), self.h2[i][j].clone());
                p.add_term(
                    Monomial::from_pairs(nv, &[(i, 1), (j, 1), (y, 1), (z, 1)]),
                    self.h3[i][j].clone(),
                );
                p.add_term(Monomial::from_pairs(nv, &[(i, 1), (j, 1), (y, 2)]), self.h4[i][j].clone());
            }
            p.add_term(Monomial::from_pairs(nv, &[(i, 1), (y, 1), (z, 2)]), self.h5[i].clone());
            p.add_term(Monomial::from_pairs(nv, &[(i, 1), (y, 2), (z, 1)]), self.h6[i].clone());
        }
        p.add_term(Monomial::from_pairs(nv, &[(y, 2), (z, 2)]), self.h7.clone());
        p
    }

    /// Reads a polynomial over `x1..xd, y, z` whose terms all belong to the
    /// M11 layout.
    pub fn from_poly(p: &PolynomialMap<T>) -> Result<Self> {
        let d = p
            .nvars()
            .checked_sub(2)
            .ok_or_else(|| Error::InvalidShape("need at least y and z".into()))?;
        if p.vars() != m11_vars(d).as_slice() {
            return Err(Error::InvalidInput(format!(
                "variables must be x1..xd, y, z; got {:?}",
                p.vars()
            )));
        }
        let two = T::one() + T::one();
        let mut out = Self::zero(d);
        let xs: Vec<usize> = (0..d).collect();
        for (mono, c) in p.terms() {
            let e = mono.exps();
            let (ey, ez) = (e[d], e[d + 1]);
            let dx = mono.degree_in(&xs);
            let xi: Vec<usize> = (0..d)
                .flat_map(|v| std::iter::repeat_n(v, e[v] as usize))
                .collect();
            let bad = || {
                Error::NotTripartite(format!(
                    "term {} is outside the M11 layout",
                    mono.format(p.vars())
                ))
            };
            match (dx, ey, ez) {
                (2, _, _) => {
                    let target = match (ey, ez) {
                        (0, 2) => &mut out.h2,
                        (1, 1) => &mut out.h3,
                        (2, 0) => &mut out.h4,
                        _ => return Err(bad()),
                    };
                    let (i, j) = (xi[0], xi[1]);
                    if i == j {
                        target[i][i] = c.clone();
                    } else {
                        target[i][j] = c.clone() / two.clone();
                        target[j][i] = c.clone() / two.clone();
                    }
                }
                (1, 1, 2) => out.h5[xi[0]] = c.clone(),
                (1, 2, 1) => out.h6[xi[0]] = c.clone(),
                (0, 2, 2) => out.h7 = c.clone(),
                _ => return Err(bad()),
            }
        }
        Ok(out)
    }

    pub fn eval(&self, x: &[T], y: &T, z: &T) -> T {
        let mut pt = x.to_vec();
        pt.push(y.clone());
        pt.push(z.clone());
        self.to_poly().eval(&pt)
    }

    /// Exchanges the roles of `y` and `z`.
    pub fn swap_yz(&self) -> Self {
        M11Form {
            dim: self.dim,
            h2: self.h4.clone(),
            h3: self.h3.clone(),
            h4: self.h2.clone(),
            h5: self.h6.clone(),
            h6: self.h5.clone(),
            h7: self.h7.clone(),
        }
    }

    fn xvars(&self) -> Vec<String> {
        (1..=self.dim).map(|i| format!("x{i}")).collect()
    }

    pub fn quad(&self, which: u8) -> QuadraticForm<T> {
        let m = match which {
            2 => &self.h2,
            3 => &self.h3,
            _ => &self.h4,
        };
        QuadraticForm::new(self.xvars(), m.clone()).expect("validated shape")
    }

    /// `h2(x) + h5(x) y + h7 y²` as a quadratic form in `(x, y)`.
    pub fn quad_with_y(&self) -> QuadraticForm<T> {
        bordered(&self.h2, &self.h5, &self.h7, self.xvars(), "y")
    }

    /// `h4(x) + h6(x) z + h7 z²` as a quadratic form in `(x, z)`.
    pub fn quad_with_z(&self) -> QuadraticForm<T> {
        bordered(&self.h4, &self.h6, &self.h7, self.xvars(), "z")
    }

    /// The slice `h2 z² + h3 yz + h4 y²` as a `d × 2` biquadratic form in
    /// `x` and `(y, z)` (`y1 = y`, `y2 = z`).
    pub fn slice_biquadratic(&self) -> BiquadraticForm<T> {
        let d = self.dim;
        let mut entries = Vec::new();
        for i in 0..d {
            for j in 0..d {
                entries.push(((i, j, 1, 1), self.h2[i][j].clone()));
                entries.push(((i, j, 0, 1), self.h3[i][j].clone()));
                entries.push(((i, j, 0, 0), self.h4[i][j].clone()));
            }
        }
        BiquadraticForm::canonicalize(d, 2, entries).expect("indices in range")
    }

    pub fn max_abs(&self) -> f64 {
        self.to_poly().max_abs()
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map_coeffs(|c| c.clone() * s.clone())
    }

    pub fn map_coeffs<U: Scalar>(&self, f: impl Fn(&T) -> U) -> M11Form<U> {
        let mat = |m: &Vec<Vec<T>>| -> Vec<Vec<U>> {
            m.iter().map(|r| r.iter().map(&f).collect()).collect()
        };
        M11Form {
            dim: self.dim,
            h2: mat(&self.h2),
            h3: mat(&self.h3),
            h4: mat(&self.h4),
            h5: self.h5.iter().map(&f).collect(),
            h6: self.h6.iter().map(&f).collect(),
            h7: f(&self.h7),
        }
    }

    pub fn to_f64(&self) -> M11Form<f64> {
        self.map_coeffs(|c| c.to_f64())
    }

    pub fn to_exact(&self) -> M11Form<Rational> {
        self.map_coeffs(|c| Rational::from_f64(c.to_f64()))
    }
}

fn bordered<T: Scalar>(
    h: &[Vec<T>],
    lin: &[T],
    c: &T,
    mut vars: Vec<String>,
    extra: &str,
) -> QuadraticForm<T> {
    let d = h.len();
    let two = T::one() + T::one();
    let mut m = vec![vec![T::zero(); d + 1]; d + 1];
    for i in 0..d {
        for j in 0..d {
            m[i][j] = h[i][j].clone();
        }
        m[i][d] = lin[i].clone() / two.clone();
        m[d][i] = lin[i].clone() / two.clone();
    }
    m[d][d] = c.clone();
    vars.push(extra.to_string());
    QuadraticForm::new(vars, m).expect("symmetric by construction")
}

/// The `2 × 1 × 1` specialization with the named coefficients
///
/// - `h̄2 = b11 x1² + b12 x1x2 + b22 x2²` (`z²` block),
/// - `h̃3 = c11 x1² + c12 x1x2 + c22 x2²` (`yz` block),
/// - `h̄4 = d11 x1² + d12 x1x2 + d22 x2²` (`y²` block),
/// - `c1y x1 + c2y x2`, the coefficients of `x_i y² z`, which enter
///   `h̄3 = h̃3 + (c1y x1 + c2y x2) y`,
/// - `c1z x1 + c2z x2`, the coefficients of `x_i y z²`, which enter the
///   ternary quadratic `h2(x1, x2, y) = h̄2 + (c1z x1 + c2z x2) y + h7 y²`.
///
/// With these, `h = h2 z² + h̄3 y z + h̄4 y²`.
#[derive(Clone, Debug, PartialEq)]
pub struct Form211<T: Scalar = f64>(M11Form<T>);

#[derive(Clone, Debug, PartialEq)]
pub struct Form211Coeffs<T> {
    pub b11: T,
    pub b12: T,
    pub b22: T,
    pub c11: T,
    pub c12: T,
    pub c22: T,
    pub c1y: T,
    pub c2y: T,
    pub c1z: T,
    pub c2z: T,
    pub d11: T,
    pub d12: T,
    pub d22: T,
    pub h7: T,
}

impl<T: Scalar> Form211<T> {
    pub fn new(m: M11Form<T>) -> Result<Self> {
        m.validate()?;
        if m.dim != 2 {
            return Err(Error::InvalidShape(format!(
                "a 2x1x1 form needs dim = 2, got {}",
                m.dim
            )));
        }
        Ok(Form211(m))
    }

    pub fn from_coeffs(c: Form211Coeffs<T>) -> Self {
        let two = T::one() + T::one();
        let sym = |a: T, b: T, d: T| vec![vec![a, b.clone() / two.clone()], vec![b / two.clone(), d]];
        Form211(M11Form {
            dim: 2,
            h2: sym(c.b11, c.b12, c.b22),
            h3: sym(c.c11, c.c12, c.c22),
            h4: sym(c.d11, c.d12, c.d22),
            h5: vec![c.c1z, c.c2z],
            h6: vec![c.c1y, c.c2y],
            h7: c.h7,
        })
    }

    pub fn coeffs(&self) -> Form211Coeffs<T> {
        let m = &self.0;
        let two = T::one() + T::one();
        let off = |h: &Vec<Vec<T>>| h[0][1].clone() * two.clone();
        Form211Coeffs {
            b11: m.h2[0][0].clone(),
            b12: off(&m.h2),
            b22: m.h2[1][1].clone(),
            c11: m.h3[0][0].clone(),
            c12: off(&m.h3),
            c22: m.h3[1][1].clone(),
            c1y: m.h6[0].clone(),
            c2y: m.h6[1].clone(),
            c1z: m.h5[0].clone(),
            c2z: m.h5[1].clone(),
            d11: m.h4[0][0].clone(),
            d12: off(&m.h4),
            d22: m.h4[1][1].clone(),
            h7: m.h7.clone(),
        }
    }

    pub fn m11(&self) -> &M11Form<T> {
        &self.0
    }

    pub fn into_m11(self) -> M11Form<T> {
        self.0
    }

    /// The ternary quadratic `h2(x1, x2, y) = h̄2 + h5 y + h7 y²`.
    pub fn h2_ternary(&self) -> QuadraticForm<T> {
        self.0.quad_with_y()
    }

    /// `h̄2(x1, x2)`.
    pub fn h2_bar(&self) -> QuadraticForm<T> {
        self.0.quad(2)
    }

    /// `h̄4(x1, x2)`.
    pub fn h4_bar(&self) -> QuadraticForm<T> {
        self.0.quad(4)
    }

    /// `h̄3(x1, x2, y) = h̃3(x1, x2) + (c1y x1 + c2y x2) y` over `(x1, x2, y)`.
    pub fn h3_bar(&self) -> PolynomialMap<T> {
        let vars = crate::poly::names(&["x1", "x2", "y"]);
        let c = self.coeffs();
        PolynomialMap::from_terms(
            vars,
            [
                (Monomial::new(vec![2, 0, 0]), c.c11),
                (Monomial::new(vec![1, 1, 0]), c.c12),
                (Monomial::new(vec![0, 2, 0]), c.c22),
                (Monomial::new(vec![1, 0, 1]), c.c1y),
                (Monomial::new(vec![0, 1, 1]), c.c2y),
            ],
        )
    }

    pub fn swap_yz(&self) -> Self {
        Form211(self.0.swap_yz())
    }

    pub fn to_poly(&self) -> PolynomialMap<T> {
        self.0.to_poly()
    }

    pub fn to_f64(&self) -> Form211<f64> {
        Form211(self.0.to_f64())
    }

    pub fn to_exact(&self) -> Form211<Rational> {
        Form211(self.0.to_exact())
    }
}

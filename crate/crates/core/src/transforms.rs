//! Dehomogenization and homogenization between `m × n` biquadratic forms
//! and `(m-1) × (n-1) × 1` tripartite forms, certificate transport between
//! them, zero shifting by orthogonal changes of variables, and the
//! positive definite reduction to a degenerated M11 form.

use nalgebra::{DMatrix, DVector};

use crate::certificate::SosCertificate;
use crate::error::{Error, Result};
use crate::forms::{BiquadraticForm, M11Form, TripartiteForm};
use crate::linalg::{invert, least_eigenpair, reflection_to};
use crate::poly::{standard_vars, Monomial, PolynomialMap};
use crate::psd::{min_on_spheres, OracleOptions};
use crate::scalar::Scalar;
use crate::sos::{biquadratic_basis, tripartite_basis};

fn check_shape(m: usize, n: usize) -> Result<()> {
    if m < 2 || n < 2 {
        return Err(Error::InvalidShape(format!(
            "dehomogenization needs m, n >= 2, got {m}x{n}"
        )));
    }
    Ok(())
}

/// `g(x, y) = f((x, 1), (y, 1))` over `x1..x_{m-1}, y1..y_{n-1}`.
pub fn dehomogenize<T: Scalar>(f: &BiquadraticForm<T>) -> Result<PolynomialMap<T>> {
    let (m, n) = (f.m(), f.n());
    check_shape(m, n)?;
    let g = f.to_poly().set_var(&format!("y{n}"), &T::one())?;
    let g = g.set_var(&format!("x{m}"), &T::one())?;
    debug_assert_eq!(g.vars(), standard_vars(m - 1, n - 1, false).as_slice());
    Ok(g)
}

/// Splits `x1..xa, y1..yb` into `(a, b)`.
fn block_shape(vars: &[String]) -> Result<(usize, usize)> {
    let a = vars.iter().filter(|v| v.starts_with('x')).count();
    let b = vars.iter().filter(|v| v.starts_with('y')).count();
    if vars != standard_vars(a, b, false).as_slice() {
        return Err(Error::InvalidInput(format!(
            "variables must be x1..xa, y1..yb; got {vars:?}"
        )));
    }
    Ok((a, b))
}

/// Multiplies every term by `z^(4 - degree)`; each term must have x-degree
/// and y-degree at most 2.
pub fn homogenize<T: Scalar>(g: &PolynomialMap<T>) -> Result<TripartiteForm<T>> {
    let (a, b) = block_shape(g.vars()).map_err(|e| Error::NotTripartite(e.to_string()))?;
    let xs: Vec<usize> = (0..a).collect();
    let ys: Vec<usize> = (a..a + b).collect();
    let mut h = PolynomialMap::zero(standard_vars(a, b, true));
    for (mono, c) in g.terms() {
        let (dx, dy, d) = (mono.degree_in(&xs), mono.degree_in(&ys), mono.degree());
        if dx > 2 || dy > 2 || d > 4 {
            return Err(Error::NotTripartite(format!(
                "term {} has x-degree {dx}, y-degree {dy}, degree {d}",
                mono.format(g.vars())
            )));
        }
        let mut e = mono.exps().to_vec();
        e.push(4 - d);
        h.add_term(Monomial::new(e), c.clone());
    }
    TripartiteForm::extract_components(&h)
}

pub fn biquadratic_to_tripartite<T: Scalar>(f: &BiquadraticForm<T>) -> Result<TripartiteForm<T>> {
    homogenize(&dehomogenize(f)?)
}

/// Inverse of [`biquadratic_to_tripartite`]: sets `z = 1` and multiplies
/// each term by `x_m^(2 - dx) y_n^(2 - dy)` with fresh last variables.
pub fn tripartite_to_biquadratic<T: Scalar>(h: &TripartiteForm<T>) -> Result<BiquadraticForm<T>> {
    let (m, n) = (h.mx + 1, h.ny + 1);
    let p = lift_to_bilinear(&h.to_poly(), h.mx, h.ny, 2)?;
    BiquadraticForm::from_poly(m, n, &p)
}

/// `z = 1`, then pad x- and y-degrees up to `d` with the new last variables.
fn lift_to_bilinear<T: Scalar>(p: &PolynomialMap<T>, a: usize, b: usize, d: u32) -> Result<PolynomialMap<T>> {
    let g = p.set_var("z", &T::one())?;
    let xs: Vec<usize> = (0..a).collect();
    let ys: Vec<usize> = (a..a + b).collect();
    let (m, n) = (a + 1, b + 1);
    let mut out = PolynomialMap::zero(standard_vars(m, n, false));
    for (mono, c) in g.terms() {
        let (dx, dy) = (mono.degree_in(&xs), mono.degree_in(&ys));
        if dx > d || dy > d {
            return Err(Error::NotTripartite(format!(
                "term {} exceeds block degree {d}",
                mono.format(g.vars())
            )));
        }
        let ex = mono.exps();
        let mut e: Vec<u32> = ex[..a].to_vec();
        e.push(d - dx);
        e.extend(&ex[a..a + b]);
        e.push(d - dy);
        out.add_term(Monomial::new(e), c.clone());
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Biquadratic to tripartite.
    F2H,
    /// Tripartite to biquadratic.
    H2F,
}

/// Moves a certificate across the biquadratic/tripartite correspondence,
/// square by square. The number of squares never changes.
///
/// `source` is the polynomial the certificate claims to represent; it is
/// checked at `tol` first.
pub fn transport_certificate<T: Scalar>(
    c: &SosCertificate<T>,
    source: &PolynomialMap<T>,
    direction: Direction,
    tol: f64,
) -> Result<SosCertificate<T>> {
    let report = c.verify(source, tol)?;
    if !report.pass {
        return Err(Error::InvalidCertificate(format!(
            "source certificate residual {:e} exceeds {:e}",
            report.max_abs, report.threshold
        )));
    }
    let polys: Vec<PolynomialMap<T>> = (0..c.rank()).map(|k| c.square_poly(k)).collect();
    let (vars, basis, images) = match direction {
        Direction::F2H => {
            let (m, n) = block_shape(&c.vars)?;
            check_shape(m, n)?;
            let (vars, basis) = tripartite_basis(m - 1, n - 1);
            let mut images = Vec::with_capacity(polys.len());
            for p in &polys {
                let g = p
                    .set_var(&format!("y{n}"), &T::one())?
                    .set_var(&format!("x{m}"), &T::one())?;
                let mut sq = PolynomialMap::zero(vars.clone());
                for (mono, coef) in g.terms() {
                    let d = mono.degree();
                    if d > 2 {
                        return Err(Error::InvalidCertificate(format!(
                            "square term {} is not bilinear",
                            mono.format(g.vars())
                        )));
                    }
                    let mut e = mono.exps().to_vec();
                    e.push(2 - d);
                    sq.add_term(Monomial::new(e), coef.clone());
                }
                images.push(sq);
            }
            (vars, basis, images)
        }
        Direction::H2F => {
            let nv = c.vars.len();
            if nv == 0 || c.vars[nv - 1] != "z" {
                return Err(Error::InvalidCertificate("tripartite certificate must end in z".into()));
            }
            let (a, b) = block_shape(&c.vars[..nv - 1])?;
            let (vars, basis) = biquadratic_basis(a + 1, b + 1);
            let images = polys
                .iter()
                .map(|p| lift_to_bilinear(p, a, b, 1))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::InvalidCertificate(e.to_string()))?;
            (vars, basis, images)
        }
    };
    let mut out = SosCertificate::from_square_polys(vars, basis, &images)?;
    out.weights = c.weights.clone();
    out.target = c.target.clone();
    Ok(out)
}

/// Separate linear changes `x ↦ Px x`, `y ↦ Py y`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearChange<T: Scalar = f64> {
    pub px: Vec<Vec<T>>,
    pub py: Vec<Vec<T>>,
}

fn images<T: Scalar>(mat: &[Vec<T>], offset: usize, vars: &[String]) -> Vec<PolynomialMap<T>> {
    let nv = vars.len();
    mat.iter()
        .map(|row| {
            PolynomialMap::from_terms(
                vars.to_vec(),
                row.iter()
                    .enumerate()
                    .map(|(j, c)| (Monomial::from_pairs(nv, &[(offset + j, 1)]), c.clone())),
            )
        })
        .collect()
}

fn dmat<T: Scalar>(a: &[Vec<T>]) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), a.first().map_or(0, |r| r.len()), |i, j| a[i][j].to_f64())
}

fn condition(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

impl<T: Scalar> LinearChange<T> {
    pub fn new(px: Vec<Vec<T>>, py: Vec<Vec<T>>) -> Result<Self> {
        for (name, p) in [("Px", &px), ("Py", &py)] {
            if p.iter().any(|r| r.len() != p.len()) {
                return Err(Error::InvalidShape(format!("{name} is not square")));
            }
        }
        Ok(LinearChange { px, py })
    }

    pub fn identity(m: usize, n: usize) -> Self {
        let id = |d: usize| {
            (0..d)
                .map(|i| (0..d).map(|j| if i == j { T::one() } else { T::zero() }).collect())
                .collect()
        };
        LinearChange { px: id(m), py: id(n) }
    }

    /// Variable images `x_i ↦ Σ_j Px_ij x_j`, `y_k ↦ Σ_l Py_kl y_l`.
    fn variable_images(&self) -> Vec<PolynomialMap<T>> {
        let (m, n) = (self.px.len(), self.py.len());
        let vars = standard_vars(m, n, false);
        let mut out = images(&self.px, 0, &vars);
        out.extend(images(&self.py, m, &vars));
        out
    }

    /// `f'(x, y) = f(Px x, Py y)`.
    pub fn apply(&self, f: &BiquadraticForm<T>) -> Result<BiquadraticForm<T>> {
        let (m, n) = (self.px.len(), self.py.len());
        if f.m() != m || f.n() != n {
            return Err(Error::InvalidShape(format!(
                "change is {m}x{n}, form is {}x{}",
                f.m(),
                f.n()
            )));
        }
        BiquadraticForm::from_poly(m, n, &f.to_poly().compose(&self.variable_images()))
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(LinearChange {
            px: invert(&self.px)?,
            py: invert(&self.py)?,
        })
    }

    /// Substitutes the change into each square: a certificate for `f`
    /// becomes one for `f'` with the same number of squares.
    pub fn transport(&self, c: &SosCertificate<T>) -> Result<SosCertificate<T>> {
        let (m, n) = (self.px.len(), self.py.len());
        let (vars, basis) = biquadratic_basis(m, n);
        if c.vars != vars {
            return Err(Error::InvalidCertificate("certificate variables do not match".into()));
        }
        c.substitute(&self.variable_images(), vars, basis)
    }

    /// 2-norm condition numbers of `(Px, Py)`.
    pub fn condition_numbers(&self) -> (f64, f64) {
        (condition(&dmat(&self.px)), condition(&dmat(&self.py)))
    }
}

fn to_rows(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect()
}

/// Orthogonal change after which `f` vanishes at `(e_m, e_n)`; `Px` is the
/// reflection sending `e_m` to `x*/‖x*‖`, likewise `Py`.
pub fn shift_zero_to_axis(
    f: &BiquadraticForm,
    xstar: &[f64],
    ystar: &[f64],
) -> Result<(BiquadraticForm, LinearChange)> {
    let x = DVector::from_column_slice(xstar);
    let y = DVector::from_column_slice(ystar);
    if x.len() != f.m() || y.len() != f.n() {
        return Err(Error::InvalidInput("zero has the wrong dimensions".into()));
    }
    let (nx, ny) = (x.norm(), y.norm());
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::InvalidInput("zero vectors are not a nontrivial zero".into()));
    }
    let value = f.evaluate_f64(xstar, ystar);
    let threshold = 1e-8 * f.max_abs() * nx * nx * ny * ny;
    if value.abs() > threshold {
        return Err(Error::NotAZero { value, threshold });
    }
    let change = LinearChange {
        px: to_rows(&reflection_to(&(x / nx))),
        py: to_rows(&reflection_to(&(y / ny))),
    };
    Ok((change.apply(f)?, change))
}

/// Output of [`pd_reduce`].
#[derive(Clone, Debug)]
pub struct PdReduction {
    /// Minimum of `f` on the product of unit spheres.
    pub scale: f64,
    /// Minimizer the change of variables sends to the axes.
    pub minimizer: (Vec<f64>, Vec<f64>),
    pub change: LinearChange,
    /// `(f/c)∘change`, whose minimum 1 is attained at `(e_m, e_2)`.
    pub reduced: BiquadraticForm,
    /// Monic tripartite form of `reduced`.
    pub hhat: TripartiteForm,
    /// `hhat - z⁴`, degenerated.
    pub h: M11Form,
    /// `|h0 - 1|` before it was set to 1.
    pub h0_residual: f64,
    /// Largest `z³` coefficient dropped as rounding.
    pub h1_dropped: f64,
}

/// Continues the alternating descent from a point until it stops moving.
fn polish_minimizer(f: &BiquadraticForm, x: &[f64], y: &[f64]) -> (DVector<f64>, DVector<f64>) {
    let mut x = DVector::from_column_slice(x);
    let mut y = DVector::from_column_slice(y);
    for _ in 0..1000 {
        let a = f.contract_x(x.as_slice()).expect("shape").to_dmatrix();
        let mut yn = least_eigenpair(&a).1;
        if yn.dot(&y) < 0.0 {
            yn = -yn;
        }
        let b = f.contract_y(yn.as_slice()).expect("shape").to_dmatrix();
        let mut xn = least_eigenpair(&b).1;
        if xn.dot(&x) < 0.0 {
            xn = -xn;
        }
        let moved = (&xn - &x).norm() + (&yn - &y).norm();
        x = xn;
        y = yn;
        if moved <= 1e-14 {
            break;
        }
    }
    (x, y)
}

/// Reduction of a positive definite `m × 2` form: scale to minimum 1 on
/// the spheres, move a minimizer to the axes, pass to the tripartite form
/// `ĥ` (monic in `z`), and subtract `z⁴`.
pub fn pd_reduce(f: &BiquadraticForm, opts: &OracleOptions) -> Result<PdReduction> {
    if f.n() != 2 || f.m() < 2 {
        return Err(Error::InvalidShape(format!(
            "pd reduction needs an m x 2 form with m >= 2, got {}x{}",
            f.m(),
            f.n()
        )));
    }
    let verdict = min_on_spheres(f, opts);
    let c = verdict.min_value;
    if c <= opts.tol * (1.0 + f.max_abs()) {
        return Err(Error::NotPositiveDefinite { min: c });
    }
    let fs = f.scale(&(1.0 / c));
    let (x, y) = polish_minimizer(&fs, &verdict.x, &verdict.y);
    // fs - ‖x‖²‖y‖² is psd and vanishes at the minimizer
    let g = fs.sub(&BiquadraticForm::product(f.m(), 2))?;
    let (_, change) = shift_zero_to_axis(&g, x.as_slice(), y.as_slice())?;
    let reduced = change.apply(&fs)?;
    let mut hhat = biquadratic_to_tripartite(&reduced)?;
    let h0_residual = (hhat.h0 - 1.0).abs();
    if h0_residual > 1e-8 {
        return Err(Error::Indeterminate(format!(
            "z⁴ coefficient {} after shifting is not 1",
            hhat.h0
        )));
    }
    hhat.h0 = 1.0;
    let scale = hhat.max_abs();
    let mut h = hhat.minus_z4(&1.0);
    h.h0 = 0.0;
    let h1_dropped = h.h1.max_abs();
    if h1_dropped > 1e-8 * (1.0 + scale) {
        return Err(Error::Indeterminate(format!(
            "z³ coefficients of size {h1_dropped:e} remain after shifting"
        )));
    }
    h.h1 = PolynomialMap::zero(h.h1.vars().to_vec());
    // the z³ terms were dropped from ĥ too, keeping ĥ = h + z⁴ exact
    hhat.h1 = h.h1.clone();
    let h = h.to_m11()?;
    Ok(PdReduction {
        scale: c,
        minimizer: (x.iter().copied().collect(), y.iter().copied().collect()),
        change,
        reduced,
        hhat,
        h,
        h0_residual,
        h1_dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::scalar::{parse_rational, Rational};

    #[test]
    fn corner_term_dehomogenizes_to_one() {
        let f = BiquadraticForm::<f64>::canonicalize(2, 3, [((1, 1, 2, 2), 1.0)]).unwrap();
        let g = dehomogenize(&f).unwrap();
        assert_eq!(g, PolynomialMap::constant(standard_vars(1, 2, false), 1.0));
        let h = homogenize(&g).unwrap();
        assert_eq!(h.h0, 1.0);
        assert!(h.h4.is_zero());
    }

    #[test]
    fn perfect_square_transforms() {
        let f: BiquadraticForm<Rational> = fixtures::perfect_square(2, 2);
        let h = biquadratic_to_tripartite(&f).unwrap();
        // (x1y1 + z²)²
        let vars = standard_vars(1, 1, true);
        let x = PolynomialMap::var(vars.clone(), "x1").unwrap();
        let y = PolynomialMap::var(vars.clone(), "y1").unwrap();
        let z = PolynomialMap::var(vars, "z").unwrap();
        let expected = x.mul(&y).add(&z.square()).square();
        assert_eq!(h.to_poly(), expected);
        assert_eq!(tripartite_to_biquadratic(&h).unwrap(), f);
    }

    #[test]
    fn shape_errors() {
        let f = BiquadraticForm::<f64>::zero(1, 2);
        assert!(matches!(dehomogenize(&f), Err(Error::InvalidShape(_))));
        let g = PolynomialMap::<f64>::var(standard_vars(1, 1, false), "x1")
            .unwrap()
            .square()
            .square();
        assert!(matches!(homogenize(&g), Err(Error::NotTripartite(_))));
    }

    #[test]
    fn pure_quartic_stays() {
        let vars = standard_vars(1, 1, false);
        let x = PolynomialMap::<f64>::var(vars.clone(), "x1").unwrap();
        let y = PolynomialMap::var(vars, "y1").unwrap();
        let h = homogenize(&x.mul(&y).square()).unwrap();
        assert_eq!(h.h0, 0.0);
        assert_eq!(h.h4.get(0, 0, 0, 0), 1.0);
    }

    #[test]
    fn transport_perfect_square() {
        let f: BiquadraticForm = fixtures::perfect_square(2, 2);
        let (vars, basis) = biquadratic_basis(2, 2);
        let c = SosCertificate::new(vars, basis, vec![vec![1.0, 0.0, 0.0, 1.0]]);
        let t = transport_certificate(&c, &f.to_poly(), Direction::F2H, 1e-12).unwrap();
        assert_eq!(t.rank(), 1);
        assert_eq!(t.basis_strings(), ["x1*y1", "x1*z", "y1*z", "z^2"]);
        assert_eq!(t.squares[0], vec![1.0, 0.0, 0.0, 1.0]);
        let h = biquadratic_to_tripartite(&f).unwrap();
        let back = transport_certificate(&t, &h.to_poly(), Direction::H2F, 1e-12).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn transport_rejects_bad_source() {
        let f: BiquadraticForm = fixtures::product(2, 2);
        let (vars, basis) = biquadratic_basis(2, 2);
        let c = SosCertificate::new(vars, basis, vec![vec![1.0, 0.0, 0.0, 1.0]]);
        assert!(matches!(
            transport_certificate(&c, &f.to_poly(), Direction::F2H, 1e-9),
            Err(Error::InvalidCertificate(_))
        ));
    }

    #[test]
    fn empty_certificate_transports() {
        let f = BiquadraticForm::<f64>::zero(2, 2);
        let (vars, basis) = biquadratic_basis(2, 2);
        let c = SosCertificate::empty(vars, basis);
        let t = transport_certificate(&c, &f.to_poly(), Direction::F2H, 1e-12).unwrap();
        assert_eq!(t.rank(), 0);
    }

    #[test]
    fn exact_linear_change_roundtrip() {
        let r = |s: &str| parse_rational(s).unwrap();
        let ch = LinearChange::new(
            vec![vec![r("1"), r("2")], vec![r("0"), r("1")]],
            vec![vec![r("3"), r("0")], vec![r("1"), r("1/2")]],
        )
        .unwrap();
        let f: BiquadraticForm<Rational> = fixtures::perfect_square(2, 2);
        let g = ch.apply(&f).unwrap();
        assert_eq!(ch.inverse().unwrap().apply(&g).unwrap(), f);
    }

    #[test]
    fn identity_shift() {
        let f: BiquadraticForm = fixtures::perfect_square(2, 2);
        let (g, ch) = shift_zero_to_axis(&f, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!(g.evaluate_f64(&[0.0, 1.0], &[0.0, 1.0]).abs() < 1e-14);
        let (cx, cy) = ch.condition_numbers();
        assert!((cx - 1.0).abs() < 1e-12 && (cy - 1.0).abs() < 1e-12);
        let f: BiquadraticForm = fixtures::product(2, 2);
        assert!(matches!(
            shift_zero_to_axis(&f, &[1.0, 0.0], &[0.0, 1.0]),
            Err(Error::NotAZero { .. })
        ));
        assert!(shift_zero_to_axis(&f, &[0.0, 0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn product_reduction() {
        let f: BiquadraticForm = fixtures::product(3, 2);
        let r = pd_reduce(&f, &OracleOptions::default()).unwrap();
        assert!((r.scale - 1.0).abs() < 1e-12);
        assert_eq!(r.hhat.h0, 1.0);
        assert_eq!(r.h.dim, 2);
        let r2 = pd_reduce(&f.scale(&2.0), &OracleOptions::default()).unwrap();
        assert!((r2.scale - 2.0).abs() < 1e-12);
        assert!(matches!(
            pd_reduce(&fixtures::perfect_square(2, 2), &OracleOptions::default()),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(matches!(
            pd_reduce(&fixtures::product(3, 3), &OracleOptions::default()),
            Err(Error::InvalidShape(_))
        ));
    }
}

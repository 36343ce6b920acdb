//! The ternary quartic `Δ = 4 h2 h̄4 − h̄3²` of a `2 × 1 × 1` form and its
//! decomposition into three squares of the shape
//! `ξ² + (s1 + l1 y)² + (s2 + l2 y)²` (binary quadratics `ξ, s1, s2`,
//! binary linear forms `l1, l2`).

use nalgebra::{DMatrix, Vector3};

use crate::certificate::SosCertificate;
use crate::error::{Error, Result};
use crate::forms::Form211;
use crate::poly::{names, Monomial, PolynomialMap};
use crate::rng::{derive_seed, normal_vec, seeded};
use crate::scalar::Scalar;
use crate::sos::{lm_factor_masked, rank_k_search_with_starts, GramProblem, SearchOptions};

/// `Δ = Δ0 y² + Δ1 y + Δ2` over `(x1, x2, y)`, with `Δ0, Δ1, Δ2` binary
/// forms of degrees 2, 3, 4 over `(x1, x2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaForm<T: Scalar = f64> {
    pub poly: PolynomialMap<T>,
    pub d0: PolynomialMap<T>,
    pub d1: PolynomialMap<T>,
    pub d2: PolynomialMap<T>,
}

fn ternary_vars() -> Vec<String> {
    names(&["x1", "x2", "y"])
}

fn binary_vars() -> Vec<String> {
    names(&["x1", "x2"])
}

impl<T: Scalar> DeltaForm<T> {
    /// Splits a ternary quartic by y-degree; y-degree above 2 cannot come
    /// from a `2 × 1 × 1` form.
    pub fn from_poly(p: &PolynomialMap<T>) -> Result<Self> {
        let p = p
            .embed(&ternary_vars())
            .map_err(|e| Error::NotFromForm211(e.to_string()))?;
        let mut parts: Vec<PolynomialMap<T>> = (0..3).map(|_| PolynomialMap::zero(binary_vars())).collect();
        for (m, c) in p.terms() {
            let e = m.exps();
            if m.degree() != 4 || e[2] > 2 {
                return Err(Error::NotFromForm211(format!(
                    "term {} (a Δ has degree 4 and y-degree at most 2)",
                    m.format(p.vars())
                )));
            }
            parts[2 - e[2] as usize].add_term(Monomial::new(e[..2].to_vec()), c.clone());
        }
        let [d0, d1, d2]: [PolynomialMap<T>; 3] = parts.try_into().expect("three parts");
        Ok(DeltaForm { poly: p, d0, d1, d2 })
    }

    /// `Δ0 y² + Δ1 y + Δ2`.
    pub fn reconstruct(&self) -> PolynomialMap<T> {
        let vars = ternary_vars();
        let lift = |p: &PolynomialMap<T>, dy: u32| {
            PolynomialMap::from_terms(
                vars.clone(),
                p.terms().map(|(m, c)| {
                    let mut e = m.exps().to_vec();
                    e.push(dy);
                    (Monomial::new(e), c.clone())
                }),
            )
        };
        lift(&self.d0, 2).add(&lift(&self.d1, 1)).add(&lift(&self.d2, 0))
    }

    pub fn max_abs(&self) -> f64 {
        self.poly.max_abs()
    }
}

/// `Δ = 4 h2 h̄4 − h̄3²`, expanded exactly in the form's scalar type.
pub fn delta_211<T: Scalar>(h: &Form211<T>) -> DeltaForm<T> {
    let vars = ternary_vars();
    let h2 = h.h2_ternary().to_poly().embed(&vars).expect("ternary variables");
    let h4 = h.h4_bar().to_poly().embed(&vars).expect("binary variables");
    let h3 = h.h3_bar().embed(&vars).expect("ternary variables");
    let four = T::from_i64(4);
    let poly = h2.mul(&h4).scale(&four).sub(&h3.square());
    DeltaForm::from_poly(&poly).expect("Δ of a 2x1x1 form has y-degree at most 2")
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DeltaComponents {
    pub d0_min: f64,
    pub d2_min: f64,
    /// Minimum of `4 Δ0 Δ2 − Δ1²`.
    pub discriminant_min: f64,
    pub pass: bool,
}

/// Sampled check that `Δ0`, `Δ2` and `4 Δ0 Δ2 − Δ1²` are nonnegative on the
/// unit circle (`samples` equally spaced angles).
pub fn check_delta_components(delta: &DeltaForm, samples: usize, tol: f64) -> DeltaComponents {
    let (mut a, mut b, mut c) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for i in 0..samples.max(1) {
        let t = std::f64::consts::PI * i as f64 / samples.max(1) as f64;
        let p = [t.cos(), t.sin()];
        let (v0, v1, v2) = (delta.d0.eval_f64(&p), delta.d1.eval_f64(&p), delta.d2.eval_f64(&p));
        a = a.min(v0);
        b = b.min(v2);
        c = c.min(4.0 * v0 * v2 - v1 * v1);
    }
    let s = 1.0 + delta.max_abs();
    DeltaComponents {
        d0_min: a,
        d2_min: b,
        discriminant_min: c,
        pass: a >= -tol * s && b >= -tol * s && c >= -tol * s * s,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeltaDecomposition {
    pub certificate: SosCertificate,
    /// Whether the certificate has the three-square shape above.
    pub structured: bool,
    /// Coefficients on `(x1², x1x2, x2²)`.
    pub xi: [f64; 3],
    pub s1: [f64; 3],
    pub s2: [f64; 3],
    /// Coefficients on `(x1, x2)`.
    pub l1: [f64; 2],
    pub l2: [f64; 2],
    pub residual: f64,
}

/// `{x1², x1x2, x2², x1y, x2y}`, plus `y²` when `with_y2`.
fn quadratic_basis(with_y2: bool) -> Vec<Monomial> {
    let mut b = vec![
        Monomial::new(vec![2, 0, 0]),
        Monomial::new(vec![1, 1, 0]),
        Monomial::new(vec![0, 2, 0]),
        Monomial::new(vec![1, 0, 1]),
        Monomial::new(vec![0, 1, 1]),
    ];
    if with_y2 {
        b.push(Monomial::new(vec![0, 0, 2]));
    }
    b
}

/// A unit vector orthogonal to both rows of the 2×3 matrix.
fn null_vector(l: &DMatrix<f64>) -> Vector3<f64> {
    let r0 = Vector3::new(l[(0, 0)], l[(0, 1)], l[(0, 2)]);
    let r1 = Vector3::new(l[(1, 0)], l[(1, 1)], l[(1, 2)]);
    let scale = r0.norm().max(r1.norm());
    let u = r0.cross(&r1);
    if scale > 0.0 && u.norm() > 1e-12 * scale * scale {
        return u.normalize();
    }
    let r = if r0.norm() >= r1.norm() { r0 } else { r1 };
    if r.norm() == 0.0 {
        return Vector3::x();
    }
    // orthogonal to the single nonzero direction
    let k = (0..3).min_by(|&a, &b| r[a].abs().total_cmp(&r[b].abs())).unwrap();
    let mut e = Vector3::zeros();
    e[k] = 1.0;
    r.cross(&e).normalize()
}

/// Rotates a 5×3 factor so the first square has no `x_i y` terms.
fn rotate_to_structure(r: &DMatrix<f64>) -> DMatrix<f64> {
    let l = r.rows(3, 2).into_owned();
    let u = null_vector(&l);
    let a = if u.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let v = u.cross(&a).normalize();
    let w = u.cross(&v);
    let cols = [u, v, w];
    let q = DMatrix::from_fn(3, 3, |i, j| cols[j][i]);
    let mut out = r * q;
    out[(3, 0)] = 0.0;
    out[(4, 0)] = 0.0;
    out
}

fn structure_mask() -> DMatrix<bool> {
    let mut m = DMatrix::from_element(5, 3, true);
    m[(3, 0)] = false;
    m[(4, 0)] = false;
    m
}

/// Fits the three-square shape by Levenberg–Marquardt. The first start is
/// an unstructured rank-3 Gram certificate rotated into the shape (an
/// orthogonal mix of the squares that cancels the `y` part of one of
/// them); the rest are random. Falls back to the unstructured certificate.
pub fn decompose_delta(delta: &DeltaForm, seed: u64, opts: &SearchOptions) -> Result<DeltaDecomposition> {
    let vars = ternary_vars();
    let search = SearchOptions {
        success_tol: 1e-8,
        ..opts.clone()
    };
    let gp6 = GramProblem::new(vars.clone(), quadratic_basis(true), &delta.poly)?;
    let gp5 = GramProblem::new(vars, quadratic_basis(false), &delta.poly)?;
    let (unstructured, _) = rank_k_search_with_starts(&gp6, 3, seed, &search, &[]);

    let mask = structure_mask();
    let polish = SearchOptions {
        success_tol: 1e-14,
        max_iters: 50,
        ..search.clone()
    };
    let finish = |r: DMatrix<f64>| {
        let better = lm_factor_masked(&gp5, r.clone(), Some(&mask), &polish);
        if better.residual < 1e-8 * (1.0 + gp5.target_scale()) {
            better
        } else {
            lm_factor_masked(&gp5, r, Some(&mask), &search)
        }
    };
    let mut starts = Vec::new();
    if let Some(u) = &unstructured {
        starts.push(rotate_to_structure(&u.factor.rows(0, 5).into_owned()));
    }
    let s = (gp5.target_scale().max(1e-300) / 3.0).sqrt();
    for i in 0..search.restarts {
        let mut rng = seeded(derive_seed(seed ^ 0xde17a, i as u64));
        let mut r = DMatrix::from_vec(5, 3, normal_vec(&mut rng, 15)) * s;
        r[(3, 0)] = 0.0;
        r[(4, 0)] = 0.0;
        starts.push(r);
    }
    for r0 in starts {
        let mut res = lm_factor_masked(&gp5, r0, Some(&mask), &search);
        if res.success {
            let polished = finish(res.factor.clone());
            if polished.residual < res.residual {
                res = polished;
            }
            let r = &res.factor;
            let col = |j: usize| [r[(0, j)], r[(1, j)], r[(2, j)]];
            return Ok(DeltaDecomposition {
                certificate: res.certificate(&gp5),
                structured: true,
                xi: col(0),
                s1: col(1),
                s2: col(2),
                l1: [r[(3, 1)], r[(4, 1)]],
                l2: [r[(3, 2)], r[(4, 2)]],
                residual: res.residual,
            });
        }
    }
    match unstructured {
        Some(u) if u.success => Ok(DeltaDecomposition {
            certificate: u.certificate(&gp6),
            structured: false,
            xi: [0.0; 3],
            s1: [0.0; 3],
            s2: [0.0; 3],
            l1: [0.0; 2],
            l2: [0.0; 2],
            residual: u.residual,
        }),
        _ => Err(Error::Indeterminate(format!(
            "no three-square decomposition of Δ found (seed {seed})"
        ))),
    }
}

//! The four-way case split of degenerated `2 × 1 × 1` forms, each case
//! with its constructive decomposition.

use crate::certificate::SosCertificate;
use crate::error::{Error, Result};
use crate::forms::{AnyForm, Form211, Form211Coeffs, M11Form};
use crate::linalg::{ldl_psd, psd_factor, sym_eigen, to_dmatrix};
use crate::poly::{Monomial, PolynomialMap};
use crate::psd::{is_psd, OracleOptions};
use crate::rng::{derive_seed, normal_vec, seeded};
use crate::scalar::{Rational, Scalar};
use crate::sos::{m11_basis, rank_k_search, sos_rank_estimate, SearchOptions};
use crate::transforms::LinearChange;

/// Bound on the number of squares claimed for case I.
pub const CASE_I_CLAIMED_BOUND: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Case {
    I,
    II,
    III,
    IV,
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Case::I => "I",
            Case::II => "II",
            Case::III => "III",
            Case::IV => "IV",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CasePayload<T: Scalar> {
    I {
        /// `"h2"` when `h̄4 ≡ 0` (so `h = h2 z²`), `"h4"` when `h̄2 ≡ 0`.
        surviving: &'static str,
        /// `max |coeff|` of `h̄3`, forced to vanish by psd.
        h3_bar_max_abs: f64,
        claimed_bound: usize,
        achieved: usize,
    },
    II {
        /// The roles of `y` and `z` were exchanged (`h̄2` is the square).
        swapped: bool,
        /// `h̄4 = weight · ℓ²` with `ℓ` over `(x1, x2)`.
        weight: T,
        ell: [T; 2],
        /// `h̄3 = 2 · weight · ℓ · g2` with `g2` over `(x1, x2, y)`.
        g2: [T; 3],
        /// `h2 − weight · g2²` over `(x1, x2, y)`.
        residual_quadratic: Vec<Vec<T>>,
        /// Division remainder of `h̄3` by `ℓ`.
        remainder_max_abs: f64,
    },
    III {
        h5_h6_max_abs: f64,
        /// Residual of the rank-3 search, when it converged.
        residual: Option<f64>,
        restarts_used: usize,
    },
    IV {
        /// `x = Px x''`, `(y, z) = Py (y'', z'')`.
        change: LinearChange<f64>,
        normalized: Form211<f64>,
        /// `max |h̄4'' − (x1² + x2²)|`.
        normalization_error: f64,
        /// `h̄2'' = α² x1² + (β1 x1 + β2 x2)²`.
        alpha: f64,
        beta1: f64,
        beta2: f64,
        pattern_ok: bool,
        estimate: Option<usize>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification<T: Scalar = f64> {
    pub case: Case,
    pub payload: CasePayload<T>,
    /// Over the m11 basis `{x1 z, x2 z, x1 y, x2 y, yz}`.
    pub certificate: Option<SosCertificate<T>>,
    /// Every boundary condition that held, not just the deciding one.
    pub flags: Vec<String>,
    /// More than one condition held.
    pub boundary: bool,
    pub psd_min: Option<f64>,
}

impl<T: Scalar> Classification<T> {
    /// Case I certificate longer than the claimed bound.
    pub fn exceeds_claim(&self) -> bool {
        matches!(&self.payload, CasePayload::I { claimed_bound, achieved, .. } if achieved > claimed_bound)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifyOptions {
    /// Relative zero threshold; discriminants use its square scale.
    pub tol: f64,
    pub oracle: OracleOptions,
    pub search: SearchOptions,
    pub seed: u64,
    pub check_psd: bool,
    /// Run the rank estimate in case IV.
    pub estimate_rank: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            tol: 1e-10,
            oracle: OracleOptions::default(),
            search: SearchOptions::default(),
            seed: 0,
            check_psd: true,
            estimate_rank: true,
        }
    }
}

fn max_abs<T: Scalar>(v: &[T]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs_f64()))
}

fn coeff_scale<T: Scalar>(c: &Form211Coeffs<T>) -> f64 {
    1.0 + max_abs(&[
        c.b11.clone(),
        c.b12.clone(),
        c.b22.clone(),
        c.c11.clone(),
        c.c12.clone(),
        c.c22.clone(),
        c.c1y.clone(),
        c.c2y.clone(),
        c.c1z.clone(),
        c.c2z.clone(),
        c.d11.clone(),
        c.d12.clone(),
        c.d22.clone(),
        c.h7.clone(),
    ])
}

/// `|b² − 4ac|` of the binary quadratic `a x1² + b x1x2 + c x2²`.
fn discriminant<T: Scalar>(a: &T, b: &T, c: &T) -> f64 {
    let four = T::from_i64(4);
    (b.clone() * b.clone() - four * a.clone() * c.clone()).abs_f64()
}

/// `A = Σ w_k q_k q_kᵀ`: exact LDLᵀ for rationals, spectral for floats.
fn factor_quadratic<T: Scalar>(a: &[Vec<T>], tol: f64) -> Result<Vec<(T, Vec<T>)>> {
    if T::EXACT {
        ldl_psd(a)
    } else {
        Ok(psd_factor(&to_dmatrix(a), tol)?
            .into_iter()
            .map(|q| (T::one(), q.into_iter().map(T::from_f64).collect()))
            .collect())
    }
}

fn build_certificate<T: Scalar>(squares: Vec<(T, Vec<T>)>) -> SosCertificate<T> {
    let (vars, basis) = m11_basis(2);
    let (weights, squares): (Vec<T>, Vec<Vec<T>>) = squares.into_iter().unzip();
    let cert = SosCertificate::new(vars, basis, squares);
    if weights.iter().all(|w| w.is_one()) {
        cert
    } else {
        cert.with_weights(weights)
    }
}

/// Exchanges `y` and `z` in every square of an m11 certificate.
fn swap_certificate<T: Scalar>(c: &SosCertificate<T>) -> Result<SosCertificate<T>> {
    let (vars, basis) = m11_basis(2);
    let images: Vec<PolynomialMap<T>> = ["x1", "x2", "z", "y"]
        .iter()
        .map(|v| PolynomialMap::var(vars.clone(), v))
        .collect::<Result<_>>()?;
    c.substitute(&images, vars, basis)
}

/// `(x1, x2, y)` coefficients `r` times the second variable; `y` stays in
/// the `yz` slot, the x-parts go to `x_i z`.
fn ternary_times_z<T: Scalar>(r: &[T]) -> Vec<T> {
    vec![r[0].clone(), r[1].clone(), T::zero(), T::zero(), r[2].clone()]
}

fn case_one<T: Scalar>(h: &Form211<T>, swapped: bool, tol: f64) -> Result<(CasePayload<T>, SosCertificate<T>)> {
    let c = h.coeffs();
    let h3 = max_abs(&[c.c11, c.c12, c.c22, c.c1y, c.c2y]);
    let factors = factor_quadratic(h.h2_ternary().matrix(), tol)?;
    let squares = factors.into_iter().map(|(w, q)| (w, ternary_times_z(&q))).collect();
    let mut cert = build_certificate(squares);
    if swapped {
        cert = swap_certificate(&cert)?;
    }
    Ok((
        CasePayload::I {
            surviving: if swapped { "h4" } else { "h2" },
            h3_bar_max_abs: h3,
            claimed_bound: CASE_I_CLAIMED_BOUND,
            achieved: cert.rank(),
        },
        cert,
    ))
}

fn case_two<T: Scalar>(h: &Form211<T>, swapped: bool, zero: f64, tol: f64) -> Result<(CasePayload<T>, SosCertificate<T>)> {
    let c = h.coeffs();
    let two = T::from_i64(2);
    // h̄4 = w ℓ², then h̄3 = ℓ q + remainder
    let (weight, ell, q, rem) = if c.d11.abs_f64() > zero {
        let t = c.d12.clone() / (two.clone() * c.d11.clone());
        let q1 = c.c12.clone() - c.c11.clone() * t.clone();
        let rem = [
            c.c22.clone() - t.clone() * q1.clone(),
            c.c2y.clone() - t.clone() * c.c1y.clone(),
        ];
        (c.d11.clone(), [T::one(), t], [c.c11.clone(), q1, c.c1y.clone()], rem)
    } else {
        (
            c.d22.clone(),
            [T::zero(), T::one()],
            [c.c12.clone(), c.c22.clone(), c.c2y.clone()],
            [c.c11.clone(), c.c1y.clone()],
        )
    };
    if weight.is_negative() || weight.is_zero() {
        return Err(Error::NotPsdForm {
            min: weight.to_f64(),
        });
    }
    let denom = two * weight.clone();
    let g2: [T; 3] = q.map(|v| v / denom.clone());
    let mut residual = h.h2_ternary().matrix().clone();
    for i in 0..3 {
        for j in 0..3 {
            residual[i][j] = residual[i][j].clone() - weight.clone() * g2[i].clone() * g2[j].clone();
        }
    }
    let mut squares = vec![(
        weight.clone(),
        vec![g2[0].clone(), g2[1].clone(), ell[0].clone(), ell[1].clone(), g2[2].clone()],
    )];
    squares.extend(
        factor_quadratic(&residual, tol)?
            .into_iter()
            .map(|(w, r)| (w, ternary_times_z(&r))),
    );
    let mut cert = build_certificate(squares);
    if swapped {
        cert = swap_certificate(&cert)?;
    }
    Ok((
        CasePayload::II {
            swapped,
            weight,
            ell,
            g2,
            residual_quadratic: residual,
            remainder_max_abs: max_abs(&rem),
        },
        cert,
    ))
}

/// Renames the `x × (y1, y2)` biquadratic certificate onto the m11 basis.
fn slice_certificate(c: &SosCertificate) -> Result<SosCertificate> {
    let (vars, basis) = m11_basis(2);
    let polys: Vec<PolynomialMap> = (0..c.rank())
        .map(|k| PolynomialMap::from_terms(vars.clone(), c.square_poly(k).terms().map(|(m, v)| (m.clone(), *v))))
        .collect();
    SosCertificate::from_square_polys(vars, basis, &polys)
}

fn case_three(h: &M11Form, seed: u64, search: &SearchOptions) -> Result<(CasePayload<f64>, Option<SosCertificate>)> {
    let h56 = max_abs(&h.h5).max(max_abs(&h.h6));
    let slice = AnyForm::Biquadratic(h.slice_biquadratic());
    let mut restarts_used = search.restarts;
    let mut found = rank_k_search(&slice, 3, seed, search)?;
    if found.is_none() {
        // fallback with ten times the restarts
        let more = SearchOptions {
            restarts: search.restarts * 10,
            ..search.clone()
        };
        restarts_used = more.restarts;
        found = rank_k_search(&slice, 3, seed, &more)?;
    }
    let cert = found.map(|c| slice_certificate(&c)).transpose()?;
    let residual = match &cert {
        Some(c) => Some(c.verify(&h.to_poly(), 1.0)?.max_abs),
        None => None,
    };
    Ok((
        CasePayload::III {
            h5_h6_max_abs: h56,
            residual,
            restarts_used,
        },
        cert,
    ))
}

/// Normalizes `h̄4 → x1² + x2²` and `h7 → 1`: `x = √h7 · V Λ^{-1/2} x''`,
/// `y = y''/√h7`.
pub fn normalize_case_four(h: &Form211) -> Result<(LinearChange<f64>, Form211<f64>)> {
    let m = h.m11();
    if m.h7 <= 0.0 {
        return Err(Error::InvalidInput("normalization needs h7 > 0".into()));
    }
    let (vals, vecs) = sym_eigen(&to_dmatrix(&m.h4));
    if vals[0] <= 0.0 {
        return Err(Error::InvalidInput("normalization needs a pd h̄4".into()));
    }
    let s = m.h7.sqrt();
    let px: Vec<Vec<f64>> = (0..2)
        .map(|i| (0..2).map(|j| s * vecs[(i, j)] / vals[j].sqrt()).collect())
        .collect();
    let py = vec![vec![1.0 / s, 0.0], vec![0.0, 1.0]];
    let change = LinearChange::new(px, py)?;
    let normalized = Form211::new(M11Form::from_poly(&apply_m11_change(&h.to_poly(), &change)?)?)?;
    Ok((change, normalized))
}

/// `h'(x, y, z) = h(Px x, Py (y, z))` over the m11 variables.
pub fn apply_m11_change(p: &PolynomialMap, change: &LinearChange<f64>) -> Result<PolynomialMap> {
    let d = change.px.len();
    let (vars, _) = m11_basis(d);
    let nv = vars.len();
    let lin = |row: &[f64], offset: usize| {
        PolynomialMap::from_terms(
            vars.clone(),
            row.iter()
                .enumerate()
                .map(|(j, c)| (Monomial::from_pairs(nv, &[(offset + j, 1)]), *c)),
        )
    };
    let mut images: Vec<PolynomialMap> = change.px.iter().map(|r| lin(r, 0)).collect();
    images.extend(change.py.iter().map(|r| lin(r, d)));
    Ok(p.embed(&vars)?.compose(&images))
}

fn case_four(h: &Form211, opts: &ClassifyOptions) -> Result<(CasePayload<f64>, Option<SosCertificate>)> {
    let (change, normalized) = normalize_case_four(h)?;
    let n = normalized.coeffs();
    let normalization_error = [n.d11 - 1.0, n.d12, n.d22 - 1.0]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let beta2 = n.b22.max(0.0).sqrt();
    let beta1 = if beta2 > 0.0 { n.b12 / (2.0 * beta2) } else { 0.0 };
    let alpha = (n.b11 - beta1 * beta1).max(0.0).sqrt();
    let scale = 1.0 + n.b11.abs().max(n.b22.abs());
    let pattern_ok = alpha > opts.tol * scale && beta1 * beta1 + beta2 * beta2 > opts.tol * scale;
    let (estimate, cert) = if opts.estimate_rank {
        match rank_estimate_with_fallback(h.m11(), opts.seed, &opts.search)? {
            Some((k, c)) => (Some(k), Some(c)),
            None => (None, None),
        }
    } else {
        (None, None)
    };
    Ok((
        CasePayload::IV {
            change,
            normalized,
            normalization_error,
            alpha,
            beta1,
            beta2,
            pattern_ok,
            estimate,
        },
        cert,
    ))
}

/// `sos_rank_estimate(kmax = 5)`, retried with ten times the restarts.
pub fn rank_estimate_with_fallback(
    h: &M11Form,
    seed: u64,
    search: &SearchOptions,
) -> Result<Option<(usize, SosCertificate)>> {
    let form = AnyForm::M11(h.clone());
    let kmax = 2 * h.dim + 1;
    if let Some(r) = sos_rank_estimate(&form, kmax, seed, search)? {
        return Ok(Some(r));
    }
    let more = SearchOptions {
        restarts: search.restarts * 10,
        ..search.clone()
    };
    sos_rank_estimate(&form, kmax, seed, &more)
}

/// Conditions tested, in priority order, with their flag names.
fn boundary_flags<T: Scalar>(c: &Form211Coeffs<T>, tol: f64) -> Vec<&'static str> {
    let scale = coeff_scale(c);
    let zero = tol * scale;
    let disc = tol * scale * scale;
    let mut flags = Vec::new();
    let h4_zero = max_abs(&[c.d11.clone(), c.d12.clone(), c.d22.clone()]) <= zero;
    let h2_zero = max_abs(&[c.b11.clone(), c.b12.clone(), c.b22.clone()]) <= zero;
    if h4_zero {
        flags.push("h4_bar_zero");
    }
    if h2_zero {
        flags.push("h2_bar_zero");
    }
    if !h4_zero && discriminant(&c.d11, &c.d12, &c.d22) <= disc {
        flags.push("h4_bar_square");
    }
    if !h2_zero && discriminant(&c.b11, &c.b12, &c.b22) <= disc {
        flags.push("h2_bar_square");
    }
    if c.h7.abs_f64() <= zero {
        flags.push("h7_zero");
    }
    flags
}

/// Classifies a psd degenerated `2 × 1 × 1` form by priority
/// I > II > III > IV and builds the case's decomposition. Cases I and II
/// are closed-form in the scalar type (exact for rationals); III and IV
/// are numerical searches.
pub fn classify_211<T: Scalar>(h: &Form211<T>, opts: &ClassifyOptions) -> Result<Classification<T>> {
    let hf = h.to_f64();
    let psd_min = if opts.check_psd {
        let v = is_psd(&AnyForm::M11(hf.m11().clone()), &opts.oracle);
        if !v.is_psd() {
            return Err(Error::NotPsdForm { min: v.min_value });
        }
        Some(v.min_value)
    } else {
        None
    };
    let c = h.coeffs();
    let flags = boundary_flags(&c, opts.tol);
    let zero = opts.tol * coeff_scale(&c);
    let has = |f: &str| flags.contains(&f);
    let lift = |cert: Option<SosCertificate>| cert.map(|c| c.map_coeffs(|v| T::from_f64(*v)));
    let (case, payload, certificate) = if has("h4_bar_zero") || has("h2_bar_zero") {
        let swapped = !has("h4_bar_zero");
        let g = if swapped { h.swap_yz() } else { h.clone() };
        let (p, cert) = case_one(&g, swapped, opts.tol)?;
        (Case::I, p, Some(cert))
    } else if has("h4_bar_square") || has("h2_bar_square") {
        let swapped = !has("h4_bar_square");
        let g = if swapped { h.swap_yz() } else { h.clone() };
        let (p, cert) = case_two(&g, swapped, zero, opts.tol)?;
        (Case::II, p, Some(cert))
    } else if has("h7_zero") {
        let (p, cert) = case_three(hf.m11(), opts.seed, &opts.search)?;
        (Case::III, lift_payload(p), lift(cert))
    } else {
        let (p, cert) = case_four(&hf, opts)?;
        (Case::IV, lift_payload(p), lift(cert))
    };
    Ok(Classification {
        case,
        payload,
        certificate,
        boundary: flags.len() > 1,
        flags: flags.into_iter().map(String::from).collect(),
        psd_min,
    })
}

fn lift_payload<T: Scalar>(p: CasePayload<f64>) -> CasePayload<T> {
    match p {
        CasePayload::III {
            h5_h6_max_abs,
            residual,
            restarts_used,
        } => CasePayload::III {
            h5_h6_max_abs,
            residual,
            restarts_used,
        },
        CasePayload::IV {
            change,
            normalized,
            normalization_error,
            alpha,
            beta1,
            beta2,
            pattern_ok,
            estimate,
        } => CasePayload::IV {
            change,
            normalized,
            normalization_error,
            alpha,
            beta1,
            beta2,
            pattern_ok,
            estimate,
        },
        _ => unreachable!("only the numerical cases are lifted"),
    }
}

fn small_int(rng: &mut crate::rng::SeededRng, n: usize) -> Vec<i64> {
    normal_vec(rng, n).into_iter().map(|v| (v * 2.0).round() as i64).collect()
}

/// A rational case II instance: `h = w (ℓ y + g2 z)² + Σ_k (r_k z)²` with
/// `ℓ = x1 + t x2`, small random integer and half-integer data, `h7 > 0`.
pub fn random_case2_instance(seed: u64) -> Form211<Rational> {
    let mut rng = seeded(derive_seed(seed, 0xca5e2));
    let q = |n: i64, d: i64| Rational::new(n.into(), d.into());
    let ints = small_int(&mut rng, 14);
    let w = q(ints[0].abs() + 1, 1);
    let t = q(ints[1], 2);
    let g2 = [q(ints[2], 1), q(ints[3], 2), q(ints[4], 1)];
    let r: Vec<Vec<Rational>> = (0..3)
        .map(|k| (0..3).map(|j| q(ints[5 + 3 * k + j], 1)).collect())
        .collect();
    let (vars, basis) = m11_basis(2);
    let zero = Rational::from_i64(0);
    let first = vec![g2[0].clone(), g2[1].clone(), Rational::from_i64(1), t, g2[2].clone()];
    let mut squares = vec![first];
    let mut weights = vec![w];
    for row in r {
        squares.push(vec![row[0].clone(), row[1].clone(), zero.clone(), zero.clone(), row[2].clone()]);
        weights.push(Rational::from_i64(1));
    }
    // keep h7 > 0 so the instance stays out of case III
    if squares.iter().zip(&weights).all(|(s, _)| num_traits::Zero::is_zero(&s[4])) {
        squares[1][4] = Rational::from_i64(1);
    }
    let cert = SosCertificate::new(vars, basis, squares).with_weights(weights);
    let m = M11Form::from_poly(&cert.expand().expect("consistent certificate")).expect("m11 layout");
    Form211::new(m).expect("dim 2")
}

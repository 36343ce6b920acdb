//! Dual certificates of non-membership in the sos cone.
//!
//! A linear functional `L` on the target's monomials with psd moment matrix
//! `M(L)` is nonnegative on every sum of squares over the basis, so
//! `L(f) < 0` separates `f` from the cone.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, psd_project, sym_eigen};
use crate::rng::{seeded, unit_vec};
use crate::sos::GramProblem;

/// Witnesses are only reported at or below this value of `L(f)`.
pub const WITNESS_THRESHOLD: f64 = -1e-3;

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DualWitness {
    /// Monomials of the target space, formatted.
    pub monomials: Vec<String>,
    /// `L` evaluated on each monomial.
    pub functional: Vec<f64>,
    pub moment_matrix: Vec<Vec<f64>>,
    /// `L(f)`.
    pub value: f64,
    pub min_eigenvalue: f64,
}

impl DualWitness {
    fn from_moment(gp: &GramProblem, m: &DMatrix<f64>) -> Self {
        let values = gp.moment_values(m);
        let nb = gp.size();
        DualWitness {
            monomials: gp.monomials.iter().map(|x| x.format(&gp.vars)).collect(),
            value: gp.functional_value(&values),
            moment_matrix: (0..nb).map(|p| (0..nb).map(|q| m[(p, q)]).collect()).collect(),
            min_eigenvalue: min_eigenvalue(m),
            functional: values,
        }
    }

    /// Recomputes the moment matrix, its spectrum and `L(f)` from the
    /// functional alone and checks them against the stored values.
    pub fn validate(&self, gp: &GramProblem) -> Result<()> {
        let formatted: Vec<String> = gp.monomials.iter().map(|x| x.format(&gp.vars)).collect();
        if formatted != self.monomials || self.functional.len() != gp.monomials.len() {
            return Err(Error::InvalidInput("witness monomials do not match the form".into()));
        }
        let m = gp.moment_matrix(&self.functional);
        let norm = m.norm();
        let lmin = min_eigenvalue(&m);
        if lmin < -1e-9 * norm {
            return Err(Error::InvalidInput(format!(
                "moment matrix is not psd (least eigenvalue {lmin:e})"
            )));
        }
        let value = gp.functional_value(&self.functional);
        if (value - self.value).abs() > 1e-12 * (1.0 + value.abs()) {
            return Err(Error::InvalidInput(format!(
                "stored value {} does not match recomputed {value}",
                self.value
            )));
        }
        if (m.trace() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput("moment matrix is not trace normalized".into()));
        }
        if value > WITNESS_THRESHOLD {
            return Err(Error::InvalidInput(format!("L(f) = {value} is not negative enough")));
        }
        Ok(())
    }
}

/// Average of `b(v) b(v)ᵀ` over random unit points: a positive definite
/// element of the moment subspace.
fn evaluation_moments(gp: &GramProblem, seed: u64) -> DMatrix<f64> {
    let nb = gp.size();
    let nv = gp.vars.len();
    let mut rng = seeded(seed);
    let points = 4 * nb + 8;
    let mut e = DMatrix::zeros(nb, nb);
    for _ in 0..points {
        let v = unit_vec(&mut rng, nv);
        let b = nalgebra::DVector::from_iterator(nb, gp.basis.iter().map(|m| m.eval(v.as_slice())));
        e += &b * b.transpose();
    }
    let e = gp.project_moment(&(e / points as f64));
    let t = e.trace();
    e / t
}

/// Moves `m` into the moment subspace, shifts along `e` until psd and
/// normalizes the trace.
fn repair(gp: &GramProblem, m: &DMatrix<f64>, e: &DMatrix<f64>, e_min: f64) -> Option<DMatrix<f64>> {
    let mut ms = gp.project_moment(m);
    let lam = min_eigenvalue(&ms);
    if lam < 0.0 {
        ms += e * (-lam / e_min * (1.0 + 1e-9));
    }
    let t = ms.trace();
    (t > 0.0 && t.is_finite()).then(|| ms / t)
}

/// Euclidean projection onto `{M ⪰ 0, tr M = 1}`.
fn spectraplex_project(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen(m);
    let mut sorted = vals.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (i, v) in sorted.iter().enumerate() {
        acc += v;
        let t = (acc - 1.0) / (i + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, n);
    for (i, v) in vals.iter().enumerate() {
        let w = (v - theta).max(0.0);
        if w > 0.0 {
            let c = vecs.column(i);
            out += c * c.transpose() * w;
        }
    }
    out
}

/// Plain alternating projections from zero; the negative part of the final
/// affine iterate points from the sos cone towards the target.
fn projection_direction(gp: &GramProblem, iters: usize) -> DMatrix<f64> {
    let nb = gp.size();
    let mut x = DMatrix::zeros(nb, nb);
    for _ in 0..iters {
        x = psd_project(&gp.project_affine(&x));
    }
    let a = gp.project_affine(&x);
    psd_project(&a) - a
}

/// Searches for a trace-normalized functional with psd moment matrix and
/// `L(f) <= WITNESS_THRESHOLD`. `None` is inconclusive.
pub fn not_sos_witness(gp: &GramProblem, iters: usize, seed: u64) -> Option<DualWitness> {
    let nb = gp.size();
    if nb == 0 || gp.target_scale() == 0.0 {
        return None;
    }
    let e = evaluation_moments(gp, seed);
    let e_min = min_eigenvalue(&e);
    if e_min <= 0.0 {
        return None;
    }
    let value = |m: &DMatrix<f64>| gp.functional_value(&gp.moment_values(m));

    let mut starts = vec![e.clone()];
    let dir = projection_direction(gp, iters);
    if let Some(m) = repair(gp, &dir, &e, e_min) {
        starts.push(m);
    }

    // gradient of M ↦ L(f) inside the moment subspace
    let grad = gp.project_moment(&gp.project_affine(&DMatrix::zeros(nb, nb)));
    let gnorm = grad.norm();
    if gnorm == 0.0 {
        return None;
    }
    let step = 0.05 / gnorm;
    let pg_iters = (iters / 10).max(200);

    let mut best: Option<(f64, DMatrix<f64>)> = None;
    for m0 in starts {
        let mut m = m0;
        for _ in 0..pg_iters {
            let v = value(&m);
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, m.clone()));
            }
            let moved = spectraplex_project(&(&m - &grad * step));
            match repair(gp, &moved, &e, e_min) {
                Some(next) => m = next,
                None => break,
            }
        }
        let v = value(&m);
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, m));
        }
    }
    let (v, m) = best?;
    if v > WITNESS_THRESHOLD {
        return None;
    }
    // rebuild from the functional so the stored matrix is exactly M(L)
    let m = gp.moment_matrix(&gp.moment_values(&m));
    let w = DualWitness::from_moment(gp, &m);
    w.validate(gp).ok().map(|_| w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{AnyForm, BiquadraticForm};

    fn gp(f: BiquadraticForm) -> GramProblem {
        GramProblem::for_form(&AnyForm::Biquadratic(f)).unwrap()
    }

    #[test]
    fn spectraplex_projection_properties() {
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, -1.0]);
        let p = spectraplex_project(&m);
        assert!((p.trace() - 1.0).abs() < 1e-12);
        assert!((p[(0, 0)] - 1.0).abs() < 1e-12);
        let q = spectraplex_project(&DMatrix::from_row_slice(2, 2, &[0.2, 0.0, 0.0, 0.2]));
        assert!((q[(0, 0)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn evaluation_moments_are_positive_definite() {
        let g = gp(BiquadraticForm::product(2, 2));
        let e = evaluation_moments(&g, 3);
        assert!(min_eigenvalue(&e) > 0.0);
        assert!((g.project_moment(&e) - &e).abs().max() < 1e-12);
    }

    #[test]
    fn sos_and_zero_forms_have_no_witness() {
        assert!(not_sos_witness(&gp(BiquadraticForm::product(2, 2)), 500, 1).is_none());
        assert!(not_sos_witness(&gp(BiquadraticForm::zero(2, 2)), 500, 1).is_none());
    }
}

use nalgebra::DMatrix;

use crate::certificate::SosCertificate;
use crate::error::{Error, Result};
use crate::linalg::{max_abs, min_eigenvalue, psd_project, sym_eigen};
use crate::sos::factor::{lm_factor, SearchOptions};
use crate::sos::GramProblem;

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FeasibilityOptions {
    /// Success iff both residuals are `<= tol · (1 + ‖target‖∞)`.
    pub tol: f64,
    pub max_iters: usize,
    /// Try a factorized Levenberg–Marquardt polish from the psd iterate at
    /// iterations 100, 1000, 10000, ... and at the end.
    pub polish: bool,
}

impl Default for FeasibilityOptions {
    fn default() -> Self {
        FeasibilityOptions {
            tol: 1e-9,
            max_iters: 20_000,
            polish: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeasibilityStatus {
    Feasible,
    /// No convergence within the budget. This is not a proof of infeasibility.
    Indeterminate,
}

#[derive(Clone, Debug)]
pub struct FeasibilityReport {
    pub status: FeasibilityStatus,
    pub gram: DMatrix<f64>,
    /// Max-abs coefficient mismatch of `gram`.
    pub affine_residual: f64,
    /// `max(0, -λ_min)` of `gram`.
    pub psd_residual: f64,
    /// Affine residual of the alternating-projection psd iterate alone.
    pub projection_residual: f64,
    pub iterations: usize,
    pub polished: bool,
}

impl FeasibilityReport {
    pub fn gram(&self) -> Result<&DMatrix<f64>> {
        match self.status {
            FeasibilityStatus::Feasible => Ok(&self.gram),
            FeasibilityStatus::Indeterminate => Err(Error::Indeterminate(format!(
                "no Gram matrix after {} iterations (affine residual {:e})",
                self.iterations, self.affine_residual
            ))),
        }
    }
}

fn polish(gp: &GramProblem, x: &DMatrix<f64>, tol: f64) -> Option<DMatrix<f64>> {
    let (vals, vecs) = sym_eigen(x);
    let lmax = vals.last().copied().unwrap_or(0.0);
    if lmax <= 0.0 {
        return None;
    }
    let cols: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 1e-12 * lmax).collect();
    let r0 = DMatrix::from_fn(x.nrows(), cols.len(), |p, j| {
        vecs[(p, cols[j])] * vals[cols[j]].sqrt()
    });
    let opts = SearchOptions {
        restarts: 1,
        max_iters: 200,
        damping: 1e-3,
        success_tol: tol,
    };
    let res = lm_factor(gp, r0, &opts);
    res.success.then(|| &res.factor * res.factor.transpose())
}

/// Dykstra alternating projections between the psd cone and the affine
/// coefficient-matching set, started from zero.
pub fn run_feasibility(gp: &GramProblem, opts: &FeasibilityOptions) -> FeasibilityReport {
    let nb = gp.size();
    let thr = opts.tol * (1.0 + gp.target_scale());
    let finish = |g: DMatrix<f64>, status, proj_res, iters, polished| {
        let affine_residual = gp.affine_residual(&g);
        let psd_residual = (-min_eigenvalue(&g)).max(0.0);
        FeasibilityReport {
            status,
            gram: g,
            affine_residual,
            psd_residual,
            projection_residual: proj_res,
            iterations: iters,
            polished,
        }
    };
    if nb == 0 {
        return finish(DMatrix::zeros(0, 0), FeasibilityStatus::Feasible, 0.0, 0, false);
    }
    let mut x = DMatrix::zeros(nb, nb);
    let mut p = DMatrix::zeros(nb, nb);
    let mut q = DMatrix::zeros(nb, nb);
    let mut y = x.clone();
    let mut next_polish = 100;
    for it in 1..=opts.max_iters {
        let xp = &x + &p;
        y = gp.project_affine(&xp);
        p = xp - &y;
        let yq = &y + &q;
        x = psd_project(&yq);
        q = yq - &x;

        if it % 10 == 0 || it == opts.max_iters {
            let ra = gp.affine_residual(&x);
            let rp = (-min_eigenvalue(&y)).max(0.0);
            if ra <= thr && rp <= thr {
                let reproj = gp.project_affine(&x);
                let g = if min_eigenvalue(&reproj) >= -thr { reproj } else { x };
                return finish(g, FeasibilityStatus::Feasible, ra, it, false);
            }
        }
        if opts.polish && (it == next_polish || it == opts.max_iters) {
            next_polish *= 10;
            if let Some(g) = polish(gp, &x, opts.tol) {
                let ra = gp.affine_residual(&x);
                return finish(g, FeasibilityStatus::Feasible, ra, it, true);
            }
        }
    }
    let _ = y;
    let ra = gp.affine_residual(&x);
    finish(x, FeasibilityStatus::Indeterminate, ra, opts.max_iters, false)
}

/// Spectral certificate `√λ_i v_i` for eigenvalues above `rank_tol · λ_max`.
pub fn extract_certificate(gp: &GramProblem, g: &DMatrix<f64>, rank_tol: f64) -> Result<SosCertificate> {
    let nb = gp.size();
    if g.nrows() != nb || g.ncols() != nb {
        return Err(Error::InvalidInput(format!(
            "Gram matrix is {}x{}, basis has {nb} monomials",
            g.nrows(),
            g.ncols()
        )));
    }
    if nb == 0 {
        return Ok(SosCertificate::empty(gp.vars.clone(), gp.basis.clone()));
    }
    let (vals, vecs) = sym_eigen(g);
    let norm = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(max_abs(g));
    // eigenvalues within roundoff of zero are not a psd violation
    if vals[0] < -rank_tol.max(1e-12) * norm {
        return Err(Error::NotPsd { eigenvalue: vals[0] });
    }
    let lmax = vals[nb - 1].max(0.0);
    let squares = (0..nb)
        .rev()
        .filter(|&i| vals[i] > rank_tol * lmax && vals[i] > 0.0)
        .map(|i| {
            let s = vals[i].sqrt();
            vecs.column(i).iter().map(|v| v * s).collect()
        })
        .collect();
    Ok(SosCertificate::new(gp.vars.clone(), gp.basis.clone(), squares))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{AnyForm, BiquadraticForm};

    fn gp(f: &BiquadraticForm) -> GramProblem {
        GramProblem::for_form(&AnyForm::Biquadratic(f.clone())).unwrap()
    }

    #[test]
    fn perfect_square_is_feasible() {
        let f = BiquadraticForm::canonicalize(
            2,
            2,
            [((0, 0, 0, 0), 1.0), ((1, 1, 1, 1), 1.0), ((0, 1, 0, 1), 2.0)],
        )
        .unwrap();
        let g = gp(&f);
        let rep = run_feasibility(&g, &FeasibilityOptions::default());
        assert_eq!(rep.status, FeasibilityStatus::Feasible);
        let cert = extract_certificate(&g, rep.gram().unwrap(), 1e-6).unwrap();
        assert!(cert.rank() >= 1);
        assert!(cert.verify(&f.to_poly(), 1e-6).unwrap().pass);
    }

    #[test]
    fn zero_form_gives_zero_gram() {
        let f = BiquadraticForm::<f64>::zero(2, 2);
        let g = gp(&f);
        let rep = run_feasibility(&g, &FeasibilityOptions::default());
        assert_eq!(rep.status, FeasibilityStatus::Feasible);
        assert_eq!(max_abs(&rep.gram), 0.0);
        assert_eq!(extract_certificate(&g, &rep.gram, 1e-6).unwrap().rank(), 0);
    }

    #[test]
    fn identity_gram_gives_four_squares() {
        let f = BiquadraticForm::product(2, 2);
        let g = gp(&f);
        let cert = extract_certificate(&g, &DMatrix::identity(4, 4), 1e-6).unwrap();
        assert_eq!(cert.rank(), 4);
        assert!(cert.verify(&f.to_poly(), 1e-12).unwrap().pass);
    }

    #[test]
    fn rank_one_gram_gives_one_square() {
        let f = BiquadraticForm::product(2, 2);
        let g = gp(&f);
        let v = nalgebra::DVector::from_vec(vec![1.0, 0.0, 0.0, 1.0]);
        let cert = extract_certificate(&g, &(&v * v.transpose()), 1e-6).unwrap();
        assert_eq!(cert.rank(), 1);
    }

    #[test]
    fn indefinite_gram_rejected() {
        let f = BiquadraticForm::product(2, 2);
        let g = gp(&f);
        let mut m = DMatrix::identity(4, 4);
        m[(0, 0)] = -1.0;
        assert!(matches!(extract_certificate(&g, &m, 1e-6), Err(Error::NotPsd { .. })));
    }
}

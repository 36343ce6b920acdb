//! Gram-matrix engine: feasibility, certificate extraction, low-rank search
//! and dual witnesses.

mod factor;
mod feasibility;
mod gram;
mod witness;

pub use factor::{
    lm_factor, lm_factor_masked, rank_k_search as rank_k_search_problem, rank_k_search_with_starts,
    FactorResult, SearchOptions,
};
pub use feasibility::{
    extract_certificate, run_feasibility, FeasibilityOptions, FeasibilityReport, FeasibilityStatus,
};
pub use gram::{
    biquadratic_basis, build_basis, expand_gram, m11_basis, tripartite_basis, GramProblem,
};
pub use witness::{not_sos_witness, DualWitness, WITNESS_THRESHOLD};

use nalgebra::DMatrix;

use crate::certificate::SosCertificate;
use crate::error::{Error, Result};
use crate::forms::AnyForm;

/// Default relative eigenvalue threshold for certificate extraction.
pub const RANK_TOL: f64 = 1e-6;

pub fn sos_feasibility(form: &AnyForm<f64>, opts: &FeasibilityOptions) -> Result<FeasibilityReport> {
    Ok(run_feasibility(&GramProblem::for_form(form)?, opts))
}

pub fn rank_k_search(
    form: &AnyForm<f64>,
    k: usize,
    seed: u64,
    opts: &SearchOptions,
) -> Result<Option<SosCertificate>> {
    let gp = GramProblem::for_form(form)?;
    check_rank(&gp, k)?;
    Ok(factor::rank_k_search(&gp, k, seed, opts).map(|(c, _)| c))
}

fn check_rank(gp: &GramProblem, k: usize) -> Result<()> {
    if k == 0 || k > gp.size() {
        return Err(Error::InvalidInput(format!(
            "rank {k} outside 1..={}",
            gp.size()
        )));
    }
    Ok(())
}

/// Smallest `k` in `1..=kmax` for which the rank-`k` search succeeds. The
/// result is an upper bound on the sos rank.
pub fn sos_rank_estimate(
    form: &AnyForm<f64>,
    kmax: usize,
    seed: u64,
    opts: &SearchOptions,
) -> Result<Option<(usize, SosCertificate)>> {
    let gp = GramProblem::for_form(form)?;
    check_rank(&gp, kmax)?;
    Ok(rank_estimate(&gp, kmax, seed, opts))
}

pub fn rank_estimate(
    gp: &GramProblem,
    kmax: usize,
    seed: u64,
    opts: &SearchOptions,
) -> Option<(usize, SosCertificate)> {
    (1..=kmax.min(gp.size())).find_map(|k| {
        factor::rank_k_search(gp, k, crate::rng::derive_seed(seed, k as u64), opts)
            .map(|(c, _)| (k, c))
    })
}

/// Feasibility followed by extraction; a certificate that misses `tol` is
/// refined by Levenberg–Marquardt at its own rank, then at full rank.
pub fn certify(gp: &GramProblem, opts: &FeasibilityOptions, tol: f64) -> Result<SosCertificate> {
    certify_from_report(gp, &run_feasibility(gp, opts), tol)
}

/// The extraction half of [`certify`], for callers that keep the report.
pub fn certify_from_report(gp: &GramProblem, report: &FeasibilityReport, tol: f64) -> Result<SosCertificate> {
    let g = report.gram()?;
    let target = target_poly(gp);
    let cert = extract_certificate(gp, g, RANK_TOL)?;
    if cert.verify(&target, tol)?.pass {
        return Ok(cert);
    }
    let search = SearchOptions {
        restarts: 1,
        max_iters: 500,
        success_tol: tol,
        ..SearchOptions::default()
    };
    let low = factor_of(&cert, gp.size());
    let full = factor_of(&extract_certificate(gp, g, 0.0)?, gp.size());
    for r0 in [low, full] {
        if r0.ncols() == 0 {
            continue;
        }
        let res = lm_factor(gp, r0, &search);
        if res.success {
            return Ok(res.certificate(gp));
        }
    }
    Err(Error::Indeterminate(format!(
        "extracted certificate misses tolerance {tol:e}"
    )))
}

fn factor_of(cert: &SosCertificate, nb: usize) -> DMatrix<f64> {
    DMatrix::from_fn(nb, cert.rank(), |p, j| cert.squares[j][p])
}

pub(crate) fn target_poly(gp: &GramProblem) -> crate::poly::PolynomialMap<f64> {
    crate::poly::PolynomialMap::from_terms(
        gp.vars.clone(),
        gp.monomials.iter().cloned().zip(gp.target.iter().copied()),
    )
}

/// Certificate of `form` with at most `basis size` squares.
pub fn certify_form(form: &AnyForm<f64>, opts: &FeasibilityOptions, tol: f64) -> Result<SosCertificate> {
    certify(&GramProblem::for_form(form)?, opts, tol)
}

pub fn witness_for(form: &AnyForm<f64>, iters: usize, seed: u64) -> Result<Option<DualWitness>> {
    Ok(not_sos_witness(&GramProblem::for_form(form)?, iters, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::BiquadraticForm;

    #[test]
    fn rank_estimates() {
        let sq = BiquadraticForm::canonicalize(
            2,
            2,
            [((0, 0, 0, 0), 1.0), ((1, 1, 1, 1), 1.0), ((0, 1, 0, 1), 2.0)],
        )
        .unwrap();
        let opts = SearchOptions::default();
        let (k, _) = sos_rank_estimate(&AnyForm::Biquadratic(sq), 4, 0, &opts)
            .unwrap()
            .unwrap();
        assert_eq!(k, 1);
        let (k, cert) = sos_rank_estimate(&AnyForm::Biquadratic(BiquadraticForm::product(2, 2)), 4, 0, &opts)
            .unwrap()
            .unwrap();
        assert!(k <= 4);
        assert!(cert.verify(&BiquadraticForm::product(2, 2).to_poly(), 1e-7).unwrap().pass);
    }

    #[test]
    fn rank_bounds_checked() {
        let f = AnyForm::Biquadratic(BiquadraticForm::product(2, 2));
        assert!(rank_k_search(&f, 0, 0, &SearchOptions::default()).is_err());
        assert!(rank_k_search(&f, 5, 0, &SearchOptions::default()).is_err());
    }

    #[test]
    fn certify_product() {
        let f = BiquadraticForm::product(3, 2);
        let cert = certify_form(&AnyForm::Biquadratic(f.clone()), &FeasibilityOptions::default(), 1e-8)
            .unwrap();
        assert!(cert.rank() <= 6);
        assert!(cert.verify(&f.to_poly(), 1e-8).unwrap().pass);
    }
}

//! Factorized Gram search `G = R Rᵀ` with `R` of `k` columns, solved as a
//! nonlinear least-squares problem on the coefficient residual by
//! Levenberg–Marquardt. A success is an sos certificate with `k` squares.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::certificate::SosCertificate;
use crate::rng::{derive_seed, normal_vec, seeded};
use crate::sos::GramProblem;

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SearchOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub damping: f64,
    /// Success iff max-abs residual `<= success_tol · (1 + ‖target‖∞)`.
    pub success_tol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            restarts: 30,
            max_iters: 500,
            damping: 1e-3,
            success_tol: 1e-7,
        }
    }
}

/// Starts evaluated together before checking for a success. Fixed so the
/// outcome never depends on the thread count.
const BATCH: usize = 8;

#[derive(Clone, Debug)]
pub struct FactorResult {
    /// `N × k`; column `j` holds the coefficients of square `j`.
    pub factor: DMatrix<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub start: usize,
    pub success: bool,
}

impl FactorResult {
    pub fn certificate(&self, gp: &GramProblem) -> SosCertificate {
        let squares = (0..self.factor.ncols())
            .map(|j| self.factor.column(j).iter().copied().collect())
            .collect();
        SosCertificate::new(gp.vars.clone(), gp.basis.clone(), squares)
    }
}

fn residual(gp: &GramProblem, r: &DMatrix<f64>) -> DVector<f64> {
    let g = r * r.transpose();
    let c = gp.coeffs_of(&g);
    DVector::from_iterator(c.len(), c.iter().zip(&gp.target).map(|(a, b)| a - b))
}

fn jacobian(gp: &GramProblem, r: &DMatrix<f64>) -> DMatrix<f64> {
    let (nb, k) = (r.nrows(), r.ncols());
    let mut jac = DMatrix::zeros(gp.monomials.len(), nb * k);
    for (a, cls) in gp.classes.iter().enumerate() {
        for &(p, q) in cls {
            for j in 0..k {
                if p == q {
                    jac[(a, p * k + j)] += 2.0 * r[(p, j)];
                } else {
                    jac[(a, p * k + j)] += 2.0 * r[(q, j)];
                    jac[(a, q * k + j)] += 2.0 * r[(p, j)];
                }
            }
        }
    }
    jac
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Levenberg–Marquardt from `r0` until the residual threshold is met, the
/// iteration cap is hit, or progress stalls.
pub fn lm_factor(gp: &GramProblem, r0: DMatrix<f64>, opts: &SearchOptions) -> FactorResult {
    lm_factor_masked(gp, r0, None, opts)
}

/// As [`lm_factor`], with entries where `free` is `false` held fixed at
/// their starting values.
pub fn lm_factor_masked(
    gp: &GramProblem,
    r0: DMatrix<f64>,
    free: Option<&DMatrix<bool>>,
    opts: &SearchOptions,
) -> FactorResult {
    let threshold = opts.success_tol * (1.0 + gp.target_scale());
    let k = r0.ncols();
    let nb = r0.nrows();
    let np = nb * k;
    let mut r = r0;
    let mut res = residual(gp, &r);
    let mut cost = res.norm_squared();
    let mut mu = opts.damping;
    let mut iters = 0;
    let mut checkpoint = cost;
    while iters < opts.max_iters && max_abs(&res) > threshold {
        iters += 1;
        let mut jac = jacobian(gp, &r);
        if let Some(free) = free {
            for s in 0..nb {
                for j in 0..k {
                    if !free[(s, j)] {
                        jac.column_mut(s * k + j).fill(0.0);
                    }
                }
            }
        }
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &res;
        let dmax = jtj.diagonal().max().max(1e-300);
        let mut accepted = false;
        while mu < 1e12 {
            let mut a = jtj.clone();
            for i in 0..np {
                a[(i, i)] += mu * (jtj[(i, i)] + 1e-9 * dmax);
            }
            let Some(chol) = a.cholesky() else {
                mu *= 4.0;
                continue;
            };
            let step = chol.solve(&(-&grad));
            let mut cand = r.clone();
            for s in 0..nb {
                for j in 0..k {
                    cand[(s, j)] += step[s * k + j];
                }
            }
            let cres = residual(gp, &cand);
            let ccost = cres.norm_squared();
            if ccost < cost {
                r = cand;
                res = cres;
                cost = ccost;
                mu = (mu / 3.0).max(1e-15);
                accepted = true;
                break;
            }
            mu *= 4.0;
        }
        if !accepted {
            break;
        }
        if iters % 50 == 0 {
            if cost > 0.999 * checkpoint {
                break;
            }
            checkpoint = cost;
        }
    }
    let resid = max_abs(&res);
    FactorResult {
        factor: r,
        residual: resid,
        iterations: iters,
        start: 0,
        success: resid <= threshold,
    }
}

fn random_start(gp: &GramProblem, k: usize, seed: u64) -> DMatrix<f64> {
    let nb = gp.size();
    let mut rng = seeded(seed);
    let s = (gp.target_scale().max(1e-300) / k as f64).sqrt();
    DMatrix::from_vec(nb, k, normal_vec(&mut rng, nb * k)) * s
}

/// Multi-start rank-`k` search; `None` means no start reached the residual
/// threshold (not a proof that the sos rank exceeds `k`).
pub fn rank_k_search(
    gp: &GramProblem,
    k: usize,
    seed: u64,
    opts: &SearchOptions,
) -> Option<(SosCertificate, FactorResult)> {
    if gp.target_scale() == 0.0 {
        let empty = FactorResult {
            factor: DMatrix::zeros(gp.size(), 0),
            residual: 0.0,
            iterations: 0,
            start: 0,
            success: true,
        };
        return Some((empty.certificate(gp), empty));
    }
    let (best, _) = rank_k_search_with_starts(gp, k, seed, opts, &[]);
    best.filter(|b| b.success).map(|b| (b.certificate(gp), b))
}

/// As [`rank_k_search`], with explicit initial factors tried before the
/// random starts. Returns the best attempt (success or not) and the number
/// of starts used.
pub fn rank_k_search_with_starts(
    gp: &GramProblem,
    k: usize,
    seed: u64,
    opts: &SearchOptions,
    initial: &[DMatrix<f64>],
) -> (Option<FactorResult>, usize) {
    assert!(k >= 1, "rank must be positive");
    let total = initial.len() + opts.restarts;
    let mut best: Option<FactorResult> = None;
    let mut start = 0;
    while start < total {
        let end = (start + BATCH).min(total);
        let batch: Vec<FactorResult> = (start..end)
            .into_par_iter()
            .map(|i| {
                let r0 = if i < initial.len() {
                    initial[i].clone()
                } else {
                    random_start(gp, k, derive_seed(seed, (i - initial.len()) as u64))
                };
                let mut res = lm_factor(gp, r0, opts);
                res.start = i;
                res
            })
            .collect();
        for res in batch {
            let better = match &best {
                None => true,
                Some(b) => res.residual < b.residual,
            };
            if better {
                best = Some(res);
            }
        }
        start = end;
        if best.as_ref().is_some_and(|b| b.success) {
            break;
        }
    }
    (best, start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{AnyForm, BiquadraticForm};

    fn problem(f: &BiquadraticForm) -> GramProblem {
        GramProblem::for_form(&AnyForm::Biquadratic(f.clone())).unwrap()
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let f = BiquadraticForm::product(2, 2);
        let gp = problem(&f);
        let r = random_start(&gp, 2, 5);
        let jac = jacobian(&gp, &r);
        let h = 1e-6;
        for s in 0..4 {
            for j in 0..2 {
                let mut a = r.clone();
                let mut b = r.clone();
                a[(s, j)] += h;
                b[(s, j)] -= h;
                let fd = (residual(&gp, &a) - residual(&gp, &b)) / (2.0 * h);
                for row in 0..fd.len() {
                    assert!((fd[row] - jac[(row, s * 2 + j)]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn perfect_square_rank_one() {
        let f = BiquadraticForm::canonicalize(
            2,
            2,
            [((0, 0, 0, 0), 1.0), ((1, 1, 1, 1), 1.0), ((0, 1, 0, 1), 2.0)],
        )
        .unwrap();
        let gp = problem(&f);
        let (cert, res) = rank_k_search(&gp, 1, 3, &SearchOptions::default()).unwrap();
        assert_eq!(cert.rank(), 1);
        assert!(res.success);
        assert!(cert.verify(&f.to_poly(), 1e-7).unwrap().pass);
    }

    #[test]
    fn product_rank_four_found() {
        let f = BiquadraticForm::product(2, 2);
        let gp = problem(&f);
        assert!(rank_k_search(&gp, 4, 1, &SearchOptions::default()).is_some());
    }
}

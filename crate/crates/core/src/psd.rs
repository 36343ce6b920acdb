//! Multi-start minimization on spheres as a one-sided psd test.
//!
//! A negative minimum is an exact refutation (the argmin is a witness). A
//! nonnegative minimum only suggests positive semidefiniteness.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::Result;
use crate::forms::{AnyForm, BiquadraticForm};
use crate::linalg::least_eigenpair;
use crate::poly::PolynomialMap;
use crate::rng::{derive_seed, seeded, unit_vec};

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OracleOptions {
    /// Relative threshold: psd iff `min >= -tol · (1 + ‖coeffs‖∞)`.
    pub tol: f64,
    pub restarts: usize,
    /// Iteration cap per restart.
    pub iters: usize,
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            tol: 1e-8,
            restarts: 50,
            iters: 200,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    PsdLikely,
    NegativeWitness,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PsdVerdict {
    pub min_value: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub z: Option<f64>,
    pub verdict: Verdict,
    pub threshold: f64,
    pub restarts: usize,
    /// Total iterations over all restarts.
    pub iterations: usize,
    /// Index of the restart that produced the minimum.
    pub best_restart: usize,
}

impl PsdVerdict {
    pub fn is_psd(&self) -> bool {
        self.verdict == Verdict::PsdLikely
    }
}

struct Run {
    value: f64,
    point: Vec<f64>,
    iterations: usize,
}

/// Best over runs; ties go to the lowest restart index.
fn reduce(runs: Vec<Run>) -> (usize, Run, usize) {
    let total = runs.iter().map(|r| r.iterations).sum();
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.value < runs[best].value {
            best = i;
        }
    }
    let run = runs.into_iter().nth(best).expect("at least one restart");
    (best, run, total)
}

fn alternating_run(f: &BiquadraticForm, seed: u64, iters: usize) -> Run {
    let (m, n) = (f.m(), f.n());
    let mut rng = seeded(seed);
    let mut x = unit_vec(&mut rng, m);
    let mut y = unit_vec(&mut rng, n);
    let mut value = f.evaluate_f64(x.as_slice(), y.as_slice());
    let mut it = 0;
    while it < iters {
        it += 1;
        let a = f.contract_x(x.as_slice()).expect("shape checked").to_dmatrix();
        y = least_eigenpair(&a).1;
        let b = f.contract_y(y.as_slice()).expect("shape checked").to_dmatrix();
        let (mu, xn) = least_eigenpair(&b);
        x = xn;
        let done = (value - mu).abs() <= 1e-12;
        value = mu;
        if done {
            break;
        }
    }
    let mut point: Vec<f64> = x.iter().copied().collect();
    point.extend(y.iter());
    Run {
        value,
        point,
        iterations: it,
    }
}

/// Alternating least-eigenvector descent over `‖x‖ = ‖y‖ = 1`: for fixed
/// `x` the best `y` is a least eigenvector of `A(x)`, and vice versa.
pub fn min_on_spheres(f: &BiquadraticForm, opts: &OracleOptions) -> PsdVerdict {
    let (m, n) = (f.m(), f.n());
    let restarts = opts.restarts.max(1);
    let runs: Vec<Run> = (0..restarts)
        .into_par_iter()
        .map(|i| alternating_run(f, derive_seed(opts.seed, i as u64), opts.iters))
        .collect();
    let (best, run, total) = reduce(runs);
    let (x, y) = (run.point[..m].to_vec(), run.point[m..m + n].to_vec());
    // reported value is a fresh evaluation at the reported point
    let min_value = f.evaluate_f64(&x, &y);
    let threshold = -opts.tol * (1.0 + f.max_abs());
    PsdVerdict {
        min_value,
        x,
        y,
        z: None,
        verdict: if min_value < threshold {
            Verdict::NegativeWitness
        } else {
            Verdict::PsdLikely
        },
        threshold,
        restarts,
        iterations: total,
        best_restart: best,
    }
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= n);
}

/// Riemannian gradient descent with Armijo backtracking on the unit sphere.
fn sphere_run(p: &PolynomialMap<f64>, seed: u64, iters: usize) -> Run {
    let nv = p.nvars();
    let mut rng = seeded(seed);
    let mut v: Vec<f64> = unit_vec(&mut rng, nv).iter().copied().collect();
    let (mut value, mut grad) = p.eval_grad(&v);
    let mut step = 1.0 / (1.0 + p.max_abs());
    let mut it = 0;
    while it < iters {
        it += 1;
        let radial: f64 = grad.iter().zip(&v).map(|(g, a)| g * a).sum();
        let tangent: Vec<f64> = grad.iter().zip(&v).map(|(g, a)| g - radial * a).collect();
        let tnorm2: f64 = tangent.iter().map(|t| t * t).sum();
        if tnorm2.sqrt() <= 1e-14 * (1.0 + p.max_abs()) {
            break;
        }
        let mut accepted = None;
        for _ in 0..60 {
            let mut cand: Vec<f64> = v.iter().zip(&tangent).map(|(a, t)| a - step * t).collect();
            normalize(&mut cand);
            let cv = p.eval_f64(&cand);
            if cv <= value - 1e-4 * step * tnorm2 {
                accepted = Some((cand, cv));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, cv)) = accepted else { break };
        let done = (value - cv).abs() <= 1e-12 * (1.0 + value.abs());
        v = cand;
        let eg = p.eval_grad(&v);
        value = eg.0;
        grad = eg.1;
        step *= 2.0;
        if done {
            break;
        }
    }
    Run {
        value,
        point: v,
        iterations: it,
    }
}

/// Minimum of a homogeneous polynomial over the unit sphere of all its
/// variables, by multi-start projected gradient.
pub fn min_on_sphere(p: &PolynomialMap<f64>, opts: &OracleOptions) -> (f64, Vec<f64>, usize, usize) {
    let restarts = opts.restarts.max(1);
    // gradient descent converges linearly, so it gets a larger cap
    let iters = opts.iters * 10;
    let runs: Vec<Run> = (0..restarts)
        .into_par_iter()
        .map(|i| sphere_run(p, derive_seed(opts.seed, i as u64), iters))
        .collect();
    let (best, run, total) = reduce(runs);
    (p.eval_f64(&run.point), run.point, best, total)
}

/// psd test for any supported form. Biquadratic forms are minimized over
/// the product of spheres; tripartite and M11 forms over the unit sphere
/// in `(x, y, z)`.
pub fn is_psd(form: &AnyForm<f64>, opts: &OracleOptions) -> PsdVerdict {
    let (mx, ny, p) = match form {
        AnyForm::Biquadratic(f) => return min_on_spheres(f, opts),
        AnyForm::Tripartite(h) => (h.mx, h.ny, h.to_poly()),
        AnyForm::M11(h) => (h.dim, 1, h.to_poly()),
    };
    let scale = p.max_abs();
    let threshold = -opts.tol * (1.0 + scale);
    if p.nvars() == 0 {
        return PsdVerdict {
            min_value: 0.0,
            x: vec![],
            y: vec![],
            z: None,
            verdict: Verdict::PsdLikely,
            threshold,
            restarts: 0,
            iterations: 0,
            best_restart: 0,
        };
    }
    let (min_value, point, best, total) = min_on_sphere(&p, opts);
    PsdVerdict {
        min_value,
        x: point[..mx].to_vec(),
        y: point[mx..mx + ny].to_vec(),
        z: Some(point[mx + ny]),
        verdict: if min_value < threshold {
            Verdict::NegativeWitness
        } else {
            Verdict::PsdLikely
        },
        threshold,
        restarts: opts.restarts.max(1),
        iterations: total,
        best_restart: best,
    }
}

/// A unit pair with `f(x, y) <= tol`, if the oracle finds one.
pub fn find_nontrivial_zero(
    f: &BiquadraticForm,
    tol: f64,
    opts: &OracleOptions,
) -> Option<(DVector<f64>, DVector<f64>)> {
    let v = min_on_spheres(f, opts);
    (v.min_value <= tol).then(|| (DVector::from_vec(v.x), DVector::from_vec(v.y)))
}

/// Re-evaluates a verdict's argmin on the form.
pub fn reevaluate(form: &AnyForm<f64>, v: &PsdVerdict) -> Result<f64> {
    match form {
        AnyForm::Biquadratic(f) => f.evaluate(&v.x, &v.y),
        _ => {
            let mut point = v.x.clone();
            point.extend(&v.y);
            point.extend(v.z);
            Ok(form.to_poly().eval_f64(&point))
        }
    }
}

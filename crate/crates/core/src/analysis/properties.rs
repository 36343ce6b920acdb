//! Structural checks for degenerated `d × 1 × 1` forms in the M11 layout.

use std::collections::BTreeMap;

use crate::certificate::SosCertificate;
use crate::forms::{AnyForm, M11Form, QuadraticForm};
use crate::poly::Monomial;
use crate::psd::{is_psd, OracleOptions};
use crate::sos::{rank_k_search_problem, GramProblem, SearchOptions};

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SuiteOptions {
    pub tol: f64,
    pub oracle: OracleOptions,
    pub search: SearchOptions,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            tol: 1e-8,
            oracle: OracleOptions::default(),
            search: SearchOptions::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PropertyCheck {
    /// `"i"` .. `"vi"`.
    pub id: String,
    pub pass: bool,
    pub note: String,
    /// Numeric evidence (eigenvalues, residuals, values).
    pub values: BTreeMap<String, f64>,
    /// Squares backing the check, as coefficient vectors over `basis`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub squares: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub basis: Vec<String>,
}

impl PropertyCheck {
    fn new(id: &str) -> Self {
        PropertyCheck {
            id: id.to_string(),
            pass: true,
            note: String::new(),
            values: BTreeMap::new(),
            squares: Vec::new(),
            basis: Vec::new(),
        }
    }

    fn fail(&mut self, note: impl Into<String>) {
        self.pass = false;
        if !self.note.is_empty() {
            self.note.push_str("; ");
        }
        self.note.push_str(&note.into());
    }

    fn value(&mut self, key: &str, v: f64) {
        self.values.insert(key.to_string(), v);
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PropertyReport {
    pub dim: usize,
    /// psd precondition per oracle.
    pub psd_min: f64,
    pub psd_likely: bool,
    pub checks: Vec<PropertyCheck>,
}

impl PropertyReport {
    pub fn all_pass(&self) -> bool {
        self.psd_likely && self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, id: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.id == id)
    }
}

fn max_abs_vec(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn max_abs_mat(m: &[Vec<f64>]) -> f64 {
    m.iter().map(|r| max_abs_vec(r)).fold(0.0, f64::max)
}

/// Factors a quadratic form into at most `limit` squares of linear forms and
/// checks the expansion.
fn factor_check(q: &QuadraticForm, limit: usize, tol: f64, scale: f64, c: &mut PropertyCheck, tag: &str) {
    let lmin = q.min_eigenvalue();
    c.value(&format!("{tag}_min_eigenvalue"), lmin);
    if lmin < -tol * scale {
        c.fail(format!("{tag} has eigenvalue {lmin:e}"));
        return;
    }
    let squares = match q.factor_squares(tol) {
        Ok(s) => s,
        Err(e) => {
            c.fail(format!("{tag}: {e}"));
            return;
        }
    };
    c.value(&format!("{tag}_squares"), squares.len() as f64);
    if squares.len() > limit {
        c.fail(format!("{tag} needs {} squares, more than {limit}", squares.len()));
    }
    let nv = q.dim();
    let basis: Vec<Monomial> = (0..nv).map(|i| Monomial::from_pairs(nv, &[(i, 1)])).collect();
    let cert = SosCertificate::new(q.vars().to_vec(), basis, squares.clone());
    match cert.verify(&q.to_poly(), tol) {
        Ok(r) => {
            c.value(&format!("{tag}_residual"), r.max_abs);
            if !r.pass {
                c.fail(format!("{tag} factorization residual {:e}", r.max_abs));
            }
        }
        Err(e) => c.fail(format!("{tag}: {e}")),
    }
    if c.basis.is_empty() {
        c.basis = cert.basis_strings();
    }
    c.squares.extend(squares);
}

/// Runs checks (i)–(vi) on a degenerated form. Failures are reported per
/// check, never raised.
pub fn m11_property_suite(h: &M11Form, opts: &SuiteOptions) -> PropertyReport {
    let d = h.dim;
    let tol = opts.tol;
    let scale = 1.0 + h.max_abs();
    let verdict = is_psd(&AnyForm::M11(h.clone()), &opts.oracle);
    let mut checks = Vec::new();

    // (i)
    let mut c = PropertyCheck::new("i");
    c.value("h7", h.h7);
    if h.h7 < -tol * scale {
        c.fail("h7 is negative");
    }
    if h.h7.abs() <= tol * scale {
        let (n5, n6) = (max_abs_vec(&h.h5), max_abs_vec(&h.h6));
        c.value("h5_max_abs", n5);
        c.value("h6_max_abs", n6);
        if n5 > tol * scale || n6 > tol * scale {
            c.fail("h7 vanishes but h5 or h6 does not");
        }
    }
    checks.push(c);

    // (ii), (iii): each block is a sum of at most d squares; a vanishing
    // block forces its neighbours to vanish
    for (id, block, lin, tag) in [("ii", 2u8, &h.h5, "h2"), ("iii", 4u8, &h.h6, "h4")] {
        let mut c = PropertyCheck::new(id);
        let q = h.quad(block);
        factor_check(&q, d, tol, scale, &mut c, tag);
        if max_abs_mat(q.matrix()) <= tol * scale {
            let n3 = max_abs_mat(&h.h3);
            let nl = max_abs_vec(lin);
            c.value("h3_max_abs", n3);
            c.value("linear_max_abs", nl);
            if n3 > tol * scale || nl > tol * scale {
                c.fail(format!("{tag} vanishes but h3 or its linear neighbour does not"));
            }
        }
        checks.push(c);
    }

    // (iv)
    let mut c = PropertyCheck::new("iv");
    factor_check(&h.quad_with_y(), d + 1, tol, scale, &mut c, "h2_h5_h7");
    let first = c.squares.len();
    let mut c2 = PropertyCheck::new("iv");
    factor_check(&h.quad_with_z(), d + 1, tol, scale, &mut c2, "h4_h6_h7");
    c.values.extend(c2.values);
    if !c2.pass {
        c.fail(c2.note);
    }
    c.values.insert("first_block_squares".into(), first as f64);
    c.squares.extend(c2.squares);
    c.basis = Vec::new();
    c.note = if c.pass {
        "squares over (x, y) then (x, z)".into()
    } else {
        c.note
    };
    checks.push(c);

    // (v)
    let mut c = PropertyCheck::new("v");
    let slice = h.slice_biquadratic();
    let sv = is_psd(&AnyForm::Biquadratic(slice.clone()), &opts.oracle);
    c.value("slice_min", sv.min_value);
    if !sv.is_psd() {
        c.fail("slice is not psd");
    }
    let k = 2 * d;
    c.value("k", k as f64);
    match GramProblem::for_form(&AnyForm::Biquadratic(slice.clone())) {
        Ok(gp) => match rank_k_search_problem(&gp, k, opts.seed, &opts.search) {
            Some((cert, res)) => {
                c.value("residual", res.residual);
                c.basis = cert.basis_strings();
                c.squares = cert.squares;
            }
            None => c.fail(format!("rank-{k} search did not converge")),
        },
        Err(e) => c.fail(e.to_string()),
    }
    checks.push(c);

    // (vi): exact structural zeros
    let mut c = PropertyCheck::new("vi");
    let zero = vec![0.0; d];
    let a = h.eval(&zero, &1.0, &0.0);
    let b = h.eval(&zero, &0.0, &1.0);
    c.value("h_at_y_axis", a);
    c.value("h_at_z_axis", b);
    if a != 0.0 || b != 0.0 {
        c.fail("nonzero value at an axis point");
    }
    checks.push(c);

    PropertyReport {
        dim: d,
        psd_min: verdict.min_value,
        psd_likely: verdict.is_psd(),
        checks,
    }
}

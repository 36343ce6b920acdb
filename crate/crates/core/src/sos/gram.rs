use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::forms::{m11_vars, AnyForm};
use crate::poly::{standard_vars, Monomial, PolynomialMap};
use crate::scalar::Scalar;

/// Bilinear basis `{x_i y_k}` (x-major) over `x1..xm, y1..yn`.
pub fn biquadratic_basis(m: usize, n: usize) -> (Vec<String>, Vec<Monomial>) {
    let nv = m + n;
    let basis = (0..m)
        .flat_map(|i| (0..n).map(move |k| Monomial::from_pairs(nv, &[(i, 1), (m + k, 1)])))
        .collect();
    (standard_vars(m, n, false), basis)
}

/// `{x_i y_k} ∪ {x_i z} ∪ {y_k z} ∪ {z²}` over `x1..xm, y1..yn, z`, the
/// image of the bilinear basis of the `(m+1) × (n+1)` source form.
pub fn tripartite_basis(mx: usize, ny: usize) -> (Vec<String>, Vec<Monomial>) {
    let nv = mx + ny + 1;
    let z = mx + ny;
    let mut basis: Vec<Monomial> = (0..mx)
        .flat_map(|i| (0..ny).map(move |k| Monomial::from_pairs(nv, &[(i, 1), (mx + k, 1)])))
        .collect();
    basis.extend((0..mx).map(|i| Monomial::from_pairs(nv, &[(i, 1), (z, 1)])));
    basis.extend((0..ny).map(|k| Monomial::from_pairs(nv, &[(mx + k, 1), (z, 1)])));
    basis.push(Monomial::from_pairs(nv, &[(z, 2)]));
    (standard_vars(mx, ny, true), basis)
}

/// `{x_i z} ∪ {x_i y} ∪ {yz}` over `x1..xd, y, z`.
pub fn m11_basis(dim: usize) -> (Vec<String>, Vec<Monomial>) {
    let nv = dim + 2;
    let (y, z) = (dim, dim + 1);
    let mut basis: Vec<Monomial> = (0..dim)
        .map(|i| Monomial::from_pairs(nv, &[(i, 1), (z, 1)]))
        .collect();
    basis.extend((0..dim).map(|i| Monomial::from_pairs(nv, &[(i, 1), (y, 1)])));
    basis.push(Monomial::from_pairs(nv, &[(y, 1), (z, 1)]));
    (m11_vars(dim), basis)
}

pub fn build_basis<T: Scalar>(form: &AnyForm<T>) -> Result<(Vec<String>, Vec<Monomial>)> {
    match form {
        AnyForm::Biquadratic(f) => {
            if f.m() == 0 || f.n() == 0 {
                return Err(Error::InvalidShape("empty biquadratic form".into()));
            }
            Ok(biquadratic_basis(f.m(), f.n()))
        }
        AnyForm::Tripartite(h) => Ok(tripartite_basis(h.mx, h.ny)),
        AnyForm::M11(h) => {
            if h.dim == 0 {
                return Err(Error::InvalidShape("M11 form with no x-variables".into()));
            }
            Ok(m11_basis(h.dim))
        }
    }
}

/// Coefficient-matching constraints for `p(v) = b(v)ᵀ G b(v)`.
///
/// Each unordered basis pair `(p, q)` lands in exactly one class: the
/// product monomial `b_p b_q`. A symmetric `G` represents the target iff for
/// every class `Σ_{p=q} G_pp + Σ_{p<q} 2 G_pq` equals the target coefficient.
#[derive(Clone, Debug)]
pub struct GramProblem {
    pub vars: Vec<String>,
    pub basis: Vec<Monomial>,
    /// Distinct products `b_p b_q`, graded-lex ascending.
    pub monomials: Vec<Monomial>,
    /// Unordered pairs `(p, q)`, `p <= q`, per monomial.
    pub classes: Vec<Vec<(usize, usize)>>,
    pub target: Vec<f64>,
    pair_class: Vec<Vec<usize>>,
}

impl GramProblem {
    pub fn new(vars: Vec<String>, basis: Vec<Monomial>, target: &PolynomialMap<f64>) -> Result<Self> {
        let target = target.embed(&vars)?;
        let nb = basis.len();
        let mut index: BTreeMap<Monomial, Vec<(usize, usize)>> = BTreeMap::new();
        for p in 0..nb {
            for q in p..nb {
                index.entry(basis[p].mul(&basis[q])).or_default().push((p, q));
            }
        }
        for (m, _) in target.terms() {
            if !index.contains_key(m) {
                return Err(Error::NotRepresentable(m.format(&vars)));
            }
        }
        let monomials: Vec<Monomial> = index.keys().cloned().collect();
        let classes: Vec<Vec<(usize, usize)>> = index.into_values().collect();
        let target_vec = monomials.iter().map(|m| target.coeff(m)).collect();
        let mut pair_class = vec![vec![0; nb]; nb];
        for (a, cls) in classes.iter().enumerate() {
            for &(p, q) in cls {
                pair_class[p][q] = a;
                pair_class[q][p] = a;
            }
        }
        Ok(GramProblem {
            vars,
            basis,
            monomials,
            classes,
            target: target_vec,
            pair_class,
        })
    }

    pub fn for_form(form: &AnyForm<f64>) -> Result<Self> {
        let (vars, basis) = build_basis(form)?;
        Self::new(vars, basis, &form.to_poly())
    }

    pub fn size(&self) -> usize {
        self.basis.len()
    }

    pub fn class_of(&self, p: usize, q: usize) -> usize {
        self.pair_class[p][q]
    }

    pub fn target_scale(&self) -> f64 {
        self.target.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Coefficients of `bᵀ G b` on `monomials`.
    pub fn coeffs_of(&self, g: &DMatrix<f64>) -> Vec<f64> {
        self.classes
            .iter()
            .map(|cls| {
                cls.iter()
                    .map(|&(p, q)| if p == q { g[(p, p)] } else { g[(p, q)] + g[(q, p)] })
                    .sum()
            })
            .collect()
    }

    pub fn affine_residual(&self, g: &DMatrix<f64>) -> f64 {
        self.coeffs_of(g)
            .iter()
            .zip(&self.target)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Frobenius projection onto the affine set. The classes partition the
    /// pairs, so the projection shifts all entries of a class by one common
    /// amount.
    pub fn project_affine(&self, g: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = (g + g.transpose()) * 0.5;
        let current = self.coeffs_of(&out);
        for (a, cls) in self.classes.iter().enumerate() {
            let weight: f64 = cls.iter().map(|&(p, q)| if p == q { 1.0 } else { 2.0 }).sum();
            let delta = (self.target[a] - current[a]) / weight;
            for &(p, q) in cls {
                out[(p, q)] += delta;
                if p != q {
                    out[(q, p)] += delta;
                }
            }
        }
        out
    }

    /// Frobenius projection onto the moment subspace (matrices constant on
    /// every class).
    pub fn project_moment(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let values = self.moment_values(m);
        self.moment_matrix(&values)
    }

    /// Class averages `L_α` of a matrix (weighted as in the Frobenius norm).
    pub fn moment_values(&self, m: &DMatrix<f64>) -> Vec<f64> {
        self.classes
            .iter()
            .map(|cls| {
                let mut s = 0.0;
                let mut w = 0.0;
                for &(p, q) in cls {
                    if p == q {
                        s += m[(p, p)];
                        w += 1.0;
                    } else {
                        s += m[(p, q)] + m[(q, p)];
                        w += 2.0;
                    }
                }
                s / w
            })
            .collect()
    }

    /// `M(L)_pq = L_{class(p, q)}`.
    pub fn moment_matrix(&self, values: &[f64]) -> DMatrix<f64> {
        let nb = self.size();
        DMatrix::from_fn(nb, nb, |p, q| values[self.pair_class[p][q]])
    }

    /// `L(target) = Σ_α L_α c_α`.
    pub fn functional_value(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.target).map(|(l, c)| l * c).sum()
    }
}

/// `b(v)ᵀ G b(v)` expanded exactly in any scalar backend.
pub fn expand_gram<T: Scalar>(vars: &[String], basis: &[Monomial], g: &[Vec<T>]) -> PolynomialMap<T> {
    let mut out = PolynomialMap::zero(vars.to_vec());
    for (p, bp) in basis.iter().enumerate() {
        for (q, bq) in basis.iter().enumerate() {
            out.add_term(bp.mul(bq), g[p][q].clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{BiquadraticForm, M11Form, TripartiteForm};
    use crate::rng::{normal_vec, seeded};
    use crate::scalar::Rational;

    #[test]
    fn basis_sizes() {
        let f = AnyForm::Biquadratic(BiquadraticForm::<f64>::zero(2, 2));
        assert_eq!(build_basis(&f).unwrap().1.len(), 4);
        let (vars, b) = tripartite_basis(1, 1);
        let names: Vec<String> = b.iter().map(|m| m.format(&vars)).collect();
        assert_eq!(names, ["x1*y1", "x1*z", "y1*z", "z^2"]);
        let (vars, b) = m11_basis(2);
        let names: Vec<String> = b.iter().map(|m| m.format(&vars)).collect();
        assert_eq!(names, ["x1*z", "x2*z", "x1*y", "x2*y", "y*z"]);
        let h = TripartiteForm::extract_components(&crate::poly::PolynomialMap::<f64>::zero(
            standard_vars(2, 3, true),
        ))
        .unwrap();
        assert_eq!(build_basis(&AnyForm::Tripartite(h)).unwrap().1.len(), 2 * 3 + 2 + 3 + 1);
        assert!(build_basis(&AnyForm::M11(M11Form::<f64>::zero(0))).is_err());
    }

    #[test]
    fn affine_projection_satisfies_constraints() {
        let (vars, basis) = biquadratic_basis(3, 2);
        let f = BiquadraticForm::<f64>::product(3, 2);
        let gp = GramProblem::new(vars, basis, &f.to_poly()).unwrap();
        let mut rng = seeded(1);
        let n = gp.size();
        let g = DMatrix::from_vec(n, n, normal_vec(&mut rng, n * n));
        let a = gp.project_affine(&g);
        assert!(gp.affine_residual(&a) < 1e-12);
        // idempotent
        assert!((gp.project_affine(&a) - &a).abs().max() < 1e-12);
    }

    #[test]
    fn gram_consistency_is_exact() {
        // any symmetric G satisfying the constraints expands to the target
        let (vars, basis) = biquadratic_basis(2, 2);
        let target = BiquadraticForm::<f64>::product(2, 2).to_poly();
        let gp = GramProblem::new(vars.clone(), basis.clone(), &target).unwrap();
        let mut rng = seeded(4);
        let n = gp.size();
        let raw = DMatrix::from_vec(n, n, normal_vec(&mut rng, n * n));
        let g = gp.project_affine(&raw);
        // rebuild an exactly feasible rational matrix from the class structure
        let r = |v: f64| Rational::from_f64(v);
        let mut ge = vec![vec![r(0.0); n]; n];
        for (a, cls) in gp.classes.iter().enumerate() {
            let (p0, q0) = cls[0];
            let mut rest = r(0.0);
            for &(p, q) in &cls[1..] {
                let v = r(g[(p, q)]);
                ge[p][q] = v.clone();
                ge[q][p] = v.clone();
                rest = rest + if p == q { v } else { v.clone() + v };
            }
            let c = r(gp.target[a]) - rest;
            if p0 == q0 {
                ge[p0][p0] = c;
            } else {
                let half = c / Rational::from_i64(2);
                ge[p0][q0] = half.clone();
                ge[q0][p0] = half;
            }
        }
        let expanded = expand_gram(&vars, &basis, &ge);
        assert_eq!(expanded, target.to_exact());
    }

    #[test]
    fn outside_span_is_reported() {
        let (vars, basis) = m11_basis(1);
        let y = PolynomialMap::<f64>::var(vars.clone(), "y").unwrap();
        let p = y.square().square();
        assert!(matches!(
            GramProblem::new(vars, basis, &p),
            Err(Error::NotRepresentable(_))
        ));
    }

    #[test]
    fn moment_projection_is_idempotent() {
        let (vars, basis) = biquadratic_basis(2, 2);
        let gp = GramProblem::new(vars, basis, &BiquadraticForm::<f64>::product(2, 2).to_poly())
            .unwrap();
        let mut rng = seeded(9);
        let m = DMatrix::from_vec(4, 4, normal_vec(&mut rng, 16));
        let p = gp.project_moment(&m);
        assert!((gp.project_moment(&p) - &p).abs().max() < 1e-12);
    }
}

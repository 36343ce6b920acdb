//! Small dense helpers over nalgebra plus an exact LDLᵀ for rationals.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Eigenpairs of a symmetric matrix, eigenvalues ascending. Every
/// eigenvector is sign-normalized so its first non-negligible entry is positive.
pub fn sym_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                v = -v;
            }
        }
        vectors.set_column(c, &v);
    }
    (values, vectors)
}

/// Least eigenpair. Among (numerically) tied least eigenvalues the
/// eigenvector with the lexicographically largest absolute leading
/// components is selected.
pub fn least_eigenpair(a: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let (vals, vecs) = sym_eigen(a);
    let lam = vals[0];
    let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let tied: Vec<usize> = (0..vals.len())
        .filter(|&i| vals[i] - lam <= 1e-12 * scale)
        .collect();
    let mut best = tied[0];
    for &i in &tied[1..] {
        if lex_abs_greater(vecs.column(i).as_slice(), vecs.column(best).as_slice()) {
            best = i;
        }
    }
    (lam, vecs.column(best).into_owned())
}

fn lex_abs_greater(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (x.abs(), y.abs());
        if (x - y).abs() > 1e-12 {
            return x > y;
        }
    }
    false
}

/// Nearest psd matrix in Frobenius norm (eigenvalue clipping).
pub fn psd_project(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen(a);
    let mut out = DMatrix::zeros(a.nrows(), a.ncols());
    for (i, &l) in vals.iter().enumerate() {
        if l > 0.0 {
            let v = vecs.column(i);
            out += l * v * v.transpose();
        }
    }
    out
}

pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    sym_eigen(a).0[0]
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Factors a psd matrix as `Σ_k q_k q_kᵀ` with `q_k = √λ_k v_k`, keeping
/// eigenvalues above `rel_tol · λ_max`. Fails when an eigenvalue falls
/// below `-rel_tol · max(1, ‖A‖_max)`.
pub fn psd_factor(a: &DMatrix<f64>, rel_tol: f64) -> Result<Vec<Vec<f64>>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let (vals, vecs) = sym_eigen(a);
    let scale = max_abs(a).max(1.0);
    if vals[0] < -rel_tol * scale {
        return Err(Error::NotPsd { eigenvalue: vals[0] });
    }
    let lmax = vals.last().copied().unwrap_or(0.0).max(0.0);
    let mut out = Vec::new();
    // largest first
    for i in (0..vals.len()).rev() {
        if vals[i] > rel_tol * lmax && vals[i] > 0.0 {
            let s = vals[i].sqrt();
            out.push(vecs.column(i).iter().map(|v| v * s).collect());
        }
    }
    Ok(out)
}

/// Exact psd factorization `A = Σ_k w_k q_k q_kᵀ` with `w_k > 0`, by
/// symmetric LDLᵀ with diagonal pivoting. Works in any scalar field.
pub fn ldl_psd<T: Scalar>(a: &[Vec<T>]) -> Result<Vec<(T, Vec<T>)>> {
    let n = a.len();
    let mut m: Vec<Vec<T>> = a.to_vec();
    let mut active: Vec<bool> = vec![true; n];
    let mut out = Vec::new();
    loop {
        // pick the active index with the largest diagonal entry
        let mut pivot: Option<usize> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            if m[i][i].is_negative() {
                return Err(Error::NotPsd {
                    eigenvalue: m[i][i].to_f64(),
                });
            }
            if !m[i][i].is_zero()
                && pivot.is_none_or(|p| m[i][i].to_f64() > m[p][p].to_f64())
            {
                pivot = Some(i);
            }
        }
        let Some(p) = pivot else {
            // remaining block must vanish
            for i in 0..n {
                for j in 0..n {
                    if active[i] && active[j] && !m[i][j].negligible(1.0) {
                        return Err(Error::NotPsd {
                            eigenvalue: -m[i][j].abs_f64(),
                        });
                    }
                }
            }
            return Ok(out);
        };
        let d = m[p][p].clone();
        let q: Vec<T> = (0..n)
            .map(|i| {
                if active[i] {
                    m[i][p].clone() / d.clone()
                } else {
                    T::zero()
                }
            })
            .collect();
        for i in 0..n {
            for j in 0..n {
                if active[i] && active[j] {
                    m[i][j] = m[i][j].clone() - d.clone() * q[i].clone() * q[j].clone();
                }
            }
        }
        active[p] = false;
        out.push((d, q));
    }
}

pub fn to_dmatrix<T: Scalar>(a: &[Vec<T>]) -> DMatrix<f64> {
    let n = a.len();
    DMatrix::from_fn(n, n, |i, j| a[i][j].to_f64())
}

/// Gauss–Jordan inverse with partial pivoting (largest magnitude).
pub fn invert<T: Scalar>(a: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    let n = a.len();
    let mut m: Vec<Vec<T>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { T::one() } else { T::zero() }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].abs_f64().total_cmp(&m[j][c].abs_f64()))
            .filter(|&p| !m[p][c].is_zero())
            .ok_or_else(|| Error::InvalidInput("singular matrix".into()))?;
        m.swap(c, p);
        let d = m[c][c].clone();
        for v in m[c].iter_mut() {
            *v = v.clone() / d.clone();
        }
        for r in 0..n {
            if r != c && !m[r][c].is_zero() {
                let f = m[r][c].clone();
                for k in 0..2 * n {
                    m[r][k] = m[r][k].clone() - f.clone() * m[c][k].clone();
                }
            }
        }
    }
    Ok(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Householder reflection mapping `e_last` to the unit vector `u`.
/// Symmetric, orthogonal and its own inverse.
pub fn reflection_to(u: &DVector<f64>) -> DMatrix<f64> {
    let n = u.len();
    let mut e = DVector::zeros(n);
    e[n - 1] = 1.0;
    let w = &e - u;
    let nw = w.norm_squared();
    if nw < 1e-30 {
        return DMatrix::identity(n, n);
    }
    DMatrix::identity(n, n) - (2.0 / nw) * &w * w.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{parse_rational, Rational};

    #[test]
    fn eigen_sorted_and_signed() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (vals, vecs) = sym_eigen(&a);
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12);
        assert!(vecs[(0, 0)] > 0.0);
    }

    #[test]
    fn tie_break_is_deterministic() {
        let a = DMatrix::<f64>::identity(3, 3);
        let (l, v) = least_eigenpair(&a);
        assert_eq!(l, 1.0);
        assert!((v[0].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn factor_reconstructs() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 0.0, 2.0, 2.0, 1.0, 0.0, 1.0, 1.0]);
        let qs = psd_factor(&a, 1e-12).unwrap();
        let mut r = DMatrix::zeros(3, 3);
        for q in &qs {
            let v = DVector::from_vec(q.clone());
            r += &v * v.transpose();
        }
        assert!((r - a).abs().max() < 1e-12);
    }

    #[test]
    fn factor_rejects_indefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(psd_factor(&a, 1e-9), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn exact_ldl_reconstructs() {
        let r = |s: &str| parse_rational(s).unwrap();
        // rank-2 psd 3x3: (x+y)^2 + (y+z)^2
        let a = vec![
            vec![r("1"), r("1"), r("0")],
            vec![r("1"), r("2"), r("1")],
            vec![r("0"), r("1"), r("1")],
        ];
        let f = ldl_psd::<Rational>(&a).unwrap();
        assert_eq!(f.len(), 2);
        for i in 0..3 {
            for j in 0..3 {
                let mut s = r("0");
                for (w, q) in &f {
                    s = s + w.clone() * q[i].clone() * q[j].clone();
                }
                assert_eq!(s, a[i][j]);
            }
        }
    }

    #[test]
    fn exact_ldl_rejects_indefinite() {
        let r = |s: &str| parse_rational(s).unwrap();
        let a = vec![vec![r("0"), r("1")], vec![r("1"), r("0")]];
        assert!(ldl_psd::<Rational>(&a).is_err());
    }

    #[test]
    fn reflection_maps_last_axis() {
        let u = DVector::from_vec(vec![0.6, 0.0, 0.8]).normalize();
        let h = reflection_to(&u);
        let mut e = DVector::zeros(3);
        e[2] = 1.0;
        assert!((&h * e - &u).norm() < 1e-14);
        assert!((&h * &h - DMatrix::<f64>::identity(3, 3)).abs().max() < 1e-14);
    }
}

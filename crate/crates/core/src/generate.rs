//! Seeded random instances with known certificates.

use nalgebra::DVector;

use crate::certificate::SosCertificate;
use crate::error::{Error, Result};
use crate::forms::{BiquadraticForm, M11Form};
use crate::rng::{normal_vec, seeded, unit_vec};
use crate::scalar::Scalar;
use crate::sos::{biquadratic_basis, m11_basis};

/// `f = Σ_{k<K} b_k²` for standard-normal bilinear `b_k`, together with the
/// certificate it was built from.
pub fn random_sos_biquadratic<T: Scalar>(
    m: usize,
    n: usize,
    k: usize,
    seed: u64,
) -> Result<(BiquadraticForm<T>, SosCertificate<T>)> {
    if k == 0 || k > m * n {
        return Err(Error::InvalidInput(format!("K = {k} outside 1..={}", m * n)));
    }
    let (vars, basis) = biquadratic_basis(m, n);
    let mut rng = seeded(seed);
    let squares = (0..k)
        .map(|_| normal_vec(&mut rng, m * n).into_iter().map(T::from_f64).collect())
        .collect();
    let cert = SosCertificate::new(vars, basis, squares);
    let f = BiquadraticForm::from_poly(m, n, &cert.expand()?)?;
    Ok((f, cert))
}

/// Degenerated M11 form `Σ_{k<K} q_k²` with each `q_k` standard normal on
/// the basis `{x_i z} ∪ {x_i y} ∪ {yz}`.
pub fn random_sos_m11<T: Scalar>(dim: usize, k: usize, seed: u64) -> Result<(M11Form<T>, SosCertificate<T>)> {
    let nb = 2 * dim + 1;
    if dim == 0 || k == 0 {
        return Err(Error::InvalidInput("need dim >= 1 and K >= 1".into()));
    }
    let (vars, basis) = m11_basis(dim);
    let mut rng = seeded(seed);
    let squares = (0..k)
        .map(|_| normal_vec(&mut rng, nb).into_iter().map(T::from_f64).collect())
        .collect();
    let cert = SosCertificate::new(vars, basis, squares);
    let h = M11Form::from_poly(&cert.expand()?)?;
    Ok((h, cert))
}

/// Random sos form vanishing at a random unit pair `(x*, y*)`: every
/// bilinear square is projected so that `b_k(x*, y*) = 0`.
pub fn planted_zero_biquadratic(
    m: usize,
    n: usize,
    k: usize,
    seed: u64,
) -> Result<(BiquadraticForm, DVector<f64>, DVector<f64>)> {
    let (_, mut cert) = random_sos_biquadratic::<f64>(m, n, k, seed)?;
    let mut rng = seeded(seed ^ 0x5eed);
    let xs = unit_vec(&mut rng, m);
    let ys = unit_vec(&mut rng, n);
    for q in &mut cert.squares {
        let val: f64 = (0..m)
            .flat_map(|i| (0..n).map(move |l| (i, l)))
            .map(|(i, l)| q[i * n + l] * xs[i] * ys[l])
            .sum();
        for i in 0..m {
            for l in 0..n {
                q[i * n + l] -= val * xs[i] * ys[l];
            }
        }
    }
    let f = BiquadraticForm::from_poly(m, n, &cert.expand()?)?;
    Ok((f, xs, ys))
}

/// `random sos + eps · (Σ x_i²)(Σ y_k²)`, positive definite for `eps > 0`.
pub fn random_pd_biquadratic(m: usize, n: usize, k: usize, eps: f64, seed: u64) -> Result<BiquadraticForm> {
    let (f, _) = random_sos_biquadratic::<f64>(m, n, k, seed)?;
    f.add(&BiquadraticForm::product(m, n).scale(&eps))
}

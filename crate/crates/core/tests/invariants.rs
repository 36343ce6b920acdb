use biquad_sos::analysis::delta::delta_211;
use biquad_sos::generate::{random_sos_biquadratic, random_sos_m11};
use biquad_sos::io::{form_to_string, parse_form};
use biquad_sos::transforms::{
    biquadratic_to_tripartite, dehomogenize, homogenize, transport_certificate, tripartite_to_biquadratic,
    Direction,
};
use biquad_sos::{AnyForm, BiquadraticForm, Form211, M11Form, Rational, Scalar, TripartiteForm};
use proptest::prelude::*;

fn r(v: i64) -> Rational {
    Rational::from_i64(v)
}

fn int_form(m: usize, n: usize, vals: &[i64]) -> BiquadraticForm<Rational> {
    let mut entries = Vec::new();
    let mut it = vals.iter().cycle();
    for i in 0..m {
        for j in i..m {
            for k in 0..n {
                for l in k..n {
                    entries.push(((i, j, k, l), r(*it.next().unwrap())));
                }
            }
        }
    }
    BiquadraticForm::canonicalize(m, n, entries).unwrap()
}

fn int_211(v: &[i64]) -> Form211<Rational> {
    let mut h = M11Form::<Rational>::zero(2);
    h.h2 = vec![vec![r(v[0]), r(v[1])], vec![r(v[1]), r(v[2])]];
    h.h3 = vec![vec![r(v[3]), r(v[4])], vec![r(v[4]), r(v[5])]];
    h.h4 = vec![vec![r(v[6]), r(v[7])], vec![r(v[7]), r(v[8])]];
    h.h5 = vec![r(v[9]), r(v[10])];
    h.h6 = vec![r(v[11]), r(v[12])];
    h.h7 = r(v[13]);
    Form211::new(h).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn biquadratic_tripartite_round_trip_is_exact(
        m in 2usize..5,
        n in 2usize..5,
        vals in prop::collection::vec(-9i64..10, 1..40),
    ) {
        let f = int_form(m, n, &vals);
        let h = biquadratic_to_tripartite(&f).unwrap();
        prop_assert_eq!(tripartite_to_biquadratic(&h).unwrap(), f.clone());
        // dehomogenizing the homogenized polynomial returns it unchanged
        let g = dehomogenize(&f).unwrap();
        let back = homogenize(&g).unwrap().to_poly().set_var("z", &Rational::from_i64(1)).unwrap();
        prop_assert!(back.sub(&g).is_zero());
    }

    #[test]
    fn component_reconstruction_is_exact(
        m in 2usize..5,
        n in 2usize..4,
        vals in prop::collection::vec(-9i64..10, 1..40),
    ) {
        let h = biquadratic_to_tripartite(&int_form(m, n, &vals)).unwrap();
        let p = h.to_poly();
        let again = TripartiteForm::extract_components(&p).unwrap();
        prop_assert!(again.to_poly().sub(&p).is_zero());
        prop_assert_eq!(again, h);
    }

    #[test]
    fn delta_matches_discriminant_in_z(
        v in prop::collection::vec(-6i64..7, 14),
        pts in prop::collection::vec((-5i64..6, -5i64..6, 1i64..6), 4),
    ) {
        let h = int_211(&v);
        let delta = delta_211(&h);
        prop_assert!(delta.reconstruct().sub(&delta.poly).is_zero());
        // h = A z² + y B z + y² C, so y² Δ = 4 A (y² C) − (y B)²
        let hp = h.to_poly();
        for (a, b, y) in pts {
            let at = |z: i64| hp.eval(&[r(a), r(b), r(y), r(z)]);
            let (h0, h1, hm) = (at(0), at(1), at(-1));
            let two = r(2);
            let quad = (h1.clone() + hm.clone()) / two.clone() - h0.clone();
            let lin = (h1 - hm) / two;
            let lhs = r(y * y) * delta.poly.eval(&[r(a), r(b), r(y)]);
            prop_assert_eq!(lhs, r(4) * quad * h0 - lin.clone() * lin);
        }
    }

    #[test]
    fn swap_yz_is_an_involution(v in prop::collection::vec(-6i64..7, 14)) {
        let h = int_211(&v);
        prop_assert_eq!(h.swap_yz().swap_yz(), h.clone());
        let p = h.to_poly();
        let q = h.swap_yz().to_poly();
        for pt in [[1i64, 2, 3, 4], [-2, 1, 0, 5], [3, -1, 2, -2]] {
            let a: Vec<Rational> = pt.iter().map(|&t| r(t)).collect();
            let b = vec![a[0].clone(), a[1].clone(), a[3].clone(), a[2].clone()];
            prop_assert_eq!(p.eval(&a), q.eval(&b));
        }
    }

    #[test]
    fn json_round_trip_is_exact(
        m in 2usize..4,
        n in 2usize..4,
        vals in prop::collection::vec(-50i64..50, 1..30),
    ) {
        let f = AnyForm::Biquadratic(int_form(m, n, &vals));
        let back = parse_form::<Rational>(&form_to_string(&f)).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn sos_forms_evaluate_nonnegative(
        m in 2usize..4,
        n in 2usize..4,
        seed in any::<u64>(),
        pt in prop::collection::vec(-3.0f64..3.0, 6),
    ) {
        let k = 1 + (seed as usize) % (m * n);
        let (f, _) = random_sos_biquadratic::<f64>(m, n, k, seed).unwrap();
        let v = f.evaluate_f64(&pt[..m], &pt[3..3 + n]);
        prop_assert!(v >= -1e-9 * (1.0 + f.max_abs()));
    }

    #[test]
    fn transport_preserves_length_and_verifies(
        m in 2usize..4,
        n in 2usize..4,
        seed in any::<u64>(),
    ) {
        let k = 1 + (seed as usize) % (m * n);
        let (f, cert) = random_sos_biquadratic::<Rational>(m, n, k, seed).unwrap();
        let h = biquadratic_to_tripartite(&f).unwrap();
        let ch = transport_certificate(&cert, &f.to_poly(), Direction::F2H, 0.0).unwrap();
        prop_assert_eq!(ch.rank(), k);
        prop_assert!(ch.verify(&h.to_poly(), 0.0).unwrap().pass);
        let cf = transport_certificate(&ch, &h.to_poly(), Direction::H2F, 0.0).unwrap();
        prop_assert!(cf.verify(&f.to_poly(), 0.0).unwrap().pass);
    }

    #[test]
    fn m11_generator_has_structural_zeros(dim in 1usize..5, k in 1usize..6, seed in any::<u64>()) {
        let (h, cert) = random_sos_m11::<f64>(dim, k, seed).unwrap();
        let zero = vec![0.0; dim];
        prop_assert_eq!(h.eval(&zero, &1.0, &0.0), 0.0);
        prop_assert_eq!(h.eval(&zero, &0.0, &1.0), 0.0);
        prop_assert!(cert.verify(&h.to_poly(), 1e-12).unwrap().pass);
    }
}

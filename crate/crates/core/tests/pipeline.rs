use biquad_sos::analysis::cases::{classify_211, random_case2_instance, Case, ClassifyOptions};
use biquad_sos::analysis::delta::{check_delta_components, decompose_delta, delta_211};
use biquad_sos::fixtures::{choi, perfect_square, product};
use biquad_sos::generate::random_sos_m11;
use biquad_sos::psd::{is_psd, OracleOptions};
use biquad_sos::sos::{certify_form, sos_rank_estimate, witness_for, FeasibilityOptions, GramProblem, SearchOptions};
use biquad_sos::{AnyForm, Form211};

#[test]
fn perfect_square_has_rank_one() {
    let f = AnyForm::Biquadratic(perfect_square::<f64>(2, 3));
    let (k, cert) = sos_rank_estimate(&f, 6, 1, &SearchOptions::default()).unwrap().unwrap();
    assert_eq!(k, 1);
    assert!(cert.verify(&f.to_poly(), 1e-7).unwrap().pass);
}

#[test]
fn product_form_certifies_within_mn() {
    let f = AnyForm::Biquadratic(product::<f64>(3, 2));
    let cert = certify_form(&f, &FeasibilityOptions::default(), 1e-8).unwrap();
    assert!(cert.rank() <= 6);
    assert!(cert.verify(&f.to_poly(), 1e-8).unwrap().pass);
}

#[test]
fn choi_is_psd_with_a_validated_witness() {
    let f = AnyForm::Biquadratic(choi::<f64>());
    assert!(is_psd(&f, &OracleOptions::default()).min_value >= -1e-6);
    let w = witness_for(&f, 2000, 0).unwrap().expect("witness");
    w.validate(&GramProblem::for_form(&f).unwrap()).unwrap();
    assert!(w.value <= -1e-3);
}

#[test]
fn constructed_case_two_is_exact() {
    for seed in 0..5 {
        let h = random_case2_instance(seed);
        let c = classify_211(&h, &ClassifyOptions::default()).unwrap();
        assert_eq!(c.case, Case::II);
        let cert = c.certificate.unwrap();
        assert!(cert.rank() <= 4);
        assert!(cert.verify(&h.to_poly(), 0.0).unwrap().pass);
    }
}

#[test]
fn generic_form_reaches_case_four_and_delta_fits() {
    let (m, _) = random_sos_m11::<f64>(2, 5, 42).unwrap();
    let h = Form211::new(m).unwrap();
    let c = classify_211(&h, &ClassifyOptions::default()).unwrap();
    assert_eq!(c.case, Case::IV);
    let delta = delta_211(&h);
    assert!(check_delta_components(&delta, 256, 1e-9).pass);
    let d = decompose_delta(&delta, 3, &SearchOptions::default()).unwrap();
    assert!(d.residual <= 1e-8 * (1.0 + delta.max_abs()));
    assert!(d.certificate.rank() <= 3);
    // exact Δ of the same form agrees with the float one
    let exact = delta_211(&h.to_exact());
    assert!(exact.poly.to_f64().sub(&delta.poly).max_abs() <= 1e-9 * (1.0 + delta.max_abs()));
}

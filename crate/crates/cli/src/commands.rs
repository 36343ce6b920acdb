use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Value};

use biquad_sos::analysis::cases::{classify_211, Case, CasePayload, Classification, ClassifyOptions};
use biquad_sos::analysis::survey::{conjecture_survey, SurveyOptions, SURVEY_KMAX};
use biquad_sos::fixtures::fixture;
use biquad_sos::io::{parse_certificate, parse_json, CertificateJson, Coeff, FormJson};
use biquad_sos::psd::{is_psd, OracleOptions};
use biquad_sos::scalar::parse_rational;
use biquad_sos::sos::{
    certify_from_report, not_sos_witness, rank_estimate, rank_k_search_problem, run_feasibility,
    FeasibilityOptions, GramProblem, SearchOptions,
};
use biquad_sos::transforms::{
    biquadratic_to_tripartite, dehomogenize, pd_reduce, transport_certificate, tripartite_to_biquadratic,
    Direction,
};
use biquad_sos::{AnyForm, Error, Form211, Rational, Result, Scalar, SosCertificate};

use crate::args::{Cli, Command, Common, Target};
use crate::manifest::RunManifest;
use crate::{read_file, run, Outcome, EXIT_INDETERMINATE, EXIT_INVALID, EXIT_NEGATIVE, EXIT_OK};

type Inputs = BTreeMap<String, String>;

pub(crate) fn dispatch(cli: &Cli, inputs: &mut Inputs) -> Result<Outcome> {
    let c = &cli.common;
    match &cli.command {
        Command::Eval { x, y, z } => eval(c, inputs, x, y, z.as_deref()),
        Command::Transform { to, certificate } => transform(c, inputs, *to, certificate.as_deref()),
        Command::CheckPsd => check_psd(c, inputs),
        Command::Sos => sos(c, inputs),
        Command::Rank { k } => rank(c, inputs, *k),
        Command::Witness => witness(c, inputs),
        Command::Classify => classify(c, inputs),
        Command::Survey { count } => survey(c, *count),
        Command::Verify { certificate } => verify(c, inputs, certificate.as_deref()),
    }
}

fn ok(value: Value, seed: u64) -> Result<Outcome> {
    Ok(Outcome {
        code: EXIT_OK,
        value,
        seeds: vec![seed],
    })
}

fn with_code(code: i32, value: Value, seed: u64) -> Result<Outcome> {
    Ok(Outcome {
        code,
        value,
        seeds: vec![seed],
    })
}

fn input_text(c: &Common, inputs: &mut Inputs) -> Result<String> {
    let path = c
        .input
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("need --input or --fixture".into()))?;
    read_file(path, inputs)
}

fn load_json(c: &Common, inputs: &mut Inputs) -> Result<FormJson> {
    if let Some(name) = &c.fixture {
        return Ok(FormJson::from(&AnyForm::Biquadratic(fixture::<Rational>(name, c.m, c.n)?)));
    }
    let text = input_text(c, inputs)?;
    let mut v: Value = parse_json(&text)?;
    // transform results wrap the form
    if v.get("kind").is_none() {
        if let Some(inner) = v.get_mut("form") {
            v = inner.take();
        }
    }
    FormJson::from_value(v)
}

/// The input form, exactly as given.
fn load_form(c: &Common, inputs: &mut Inputs) -> Result<AnyForm<Rational>> {
    load_json(c, inputs)?.to_form()
}

fn to_value<S: serde::Serialize>(v: &S) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn cert_value<T: Scalar>(c: &SosCertificate<T>) -> Value {
    to_value(&CertificateJson::from(c))
}

fn form_value<T: Scalar>(f: &AnyForm<T>) -> Value {
    to_value(&FormJson::from(f))
}

fn parse_list(s: &str, what: &str) -> Result<Vec<Rational>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse_rational(t).ok_or_else(|| Error::Parse(format!("--{what}: bad number `{t}`"))))
        .collect()
}

fn eval(c: &Common, inputs: &mut Inputs, x: &str, y: &str, z: Option<&str>) -> Result<Outcome> {
    let form = load_form(c, inputs)?;
    let mut point = parse_list(x, "x")?;
    point.extend(parse_list(y, "y")?);
    if let Some(z) = z {
        point.extend(parse_list(z, "z")?);
    }
    let p = form.to_poly();
    if point.len() != p.nvars() {
        return Err(Error::InvalidInput(format!(
            "point has {} coordinates, form has variables {:?}",
            point.len(),
            p.vars()
        )));
    }
    let value = if c.exact {
        Coeff::of(&p.eval(&point))
    } else {
        let pf: Vec<f64> = point.iter().map(Scalar::to_f64).collect();
        Coeff::of(&p.to_f64().eval_f64(&pf))
    };
    ok(json!({ "kind": form.kind(), "vars": p.vars(), "value": value }), c.seed)
}

fn oracle(c: &Common) -> OracleOptions {
    let d = OracleOptions::default();
    OracleOptions {
        tol: c.tol.unwrap_or(d.tol),
        restarts: c.restarts.unwrap_or(d.restarts),
        iters: c.budget.unwrap_or(d.iters),
        seed: c.seed,
    }
}

fn search(c: &Common) -> SearchOptions {
    let d = SearchOptions::default();
    SearchOptions {
        restarts: c.restarts.unwrap_or(d.restarts),
        max_iters: c.budget.unwrap_or(d.max_iters),
        success_tol: c.tol.unwrap_or(d.success_tol),
        ..d
    }
}

fn transform(c: &Common, inputs: &mut Inputs, to: Target, cert_path: Option<&Path>) -> Result<Outcome> {
    let form = load_form(c, inputs)?;
    let cert: Option<SosCertificate> = match cert_path {
        Some(p) => Some(parse_certificate(&read_file(p, inputs)?)?),
        None => None,
    };
    let value = match (to, &form) {
        (Target::Tripartite, AnyForm::Biquadratic(f)) => {
            let h = AnyForm::Tripartite(biquadratic_to_tripartite(f)?);
            let mut v = json!({ "form": form_value(&h) });
            if let Some(cert) = &cert {
                let t = transport_certificate(cert, &f.to_f64().to_poly(), Direction::F2H, 1e-8)?;
                v["certificate"] = cert_value(&t);
            }
            v
        }
        (Target::Biquadratic, AnyForm::Tripartite(h)) => {
            let f = AnyForm::Biquadratic(tripartite_to_biquadratic(h)?);
            let mut v = json!({ "form": form_value(&f) });
            if let Some(cert) = &cert {
                let t = transport_certificate(cert, &h.to_f64().to_poly(), Direction::H2F, 1e-8)?;
                v["certificate"] = cert_value(&t);
            }
            v
        }
        (Target::M11, AnyForm::Tripartite(h)) => json!({ "form": form_value(&AnyForm::M11(h.to_m11()?)) }),
        (Target::Dehomogenize, AnyForm::Biquadratic(f)) => {
            let g = dehomogenize(f)?;
            let terms: Vec<Value> = g
                .terms()
                .map(|(m, v)| json!({ "m": m.format(g.vars()), "v": Coeff::of(v) }))
                .collect();
            json!({ "vars": g.vars(), "terms": terms })
        }
        (Target::PdReduce, AnyForm::Biquadratic(f)) => {
            let r = pd_reduce(&f.to_f64(), &oracle(c))?;
            json!({
                "scale": r.scale,
                "minimizer": { "x": r.minimizer.0, "y": r.minimizer.1 },
                "change": { "px": r.change.px, "py": r.change.py },
                "reduced": form_value(&AnyForm::Biquadratic(r.reduced)),
                "hhat": form_value(&AnyForm::Tripartite(r.hhat)),
                "h": form_value(&AnyForm::M11(r.h)),
                "h0_residual": r.h0_residual,
                "h1_dropped": r.h1_dropped,
            })
        }
        (to, f) => {
            return Err(Error::InvalidInput(format!(
                "cannot transform a {} form to {to:?}",
                f.kind()
            )))
        }
    };
    ok(value, c.seed)
}

fn check_psd(c: &Common, inputs: &mut Inputs) -> Result<Outcome> {
    let form = load_form(c, inputs)?.to_f64();
    let v = is_psd(&form, &oracle(c));
    let code = if v.is_psd() { EXIT_OK } else { EXIT_NEGATIVE };
    with_code(code, json!({ "kind": form.kind(), "verdict": to_value(&v) }), c.seed)
}

/// Tries to shorten a certificate by low-rank searches below its length.
fn shorten(gp: &GramProblem, cert: SosCertificate, c: &Common) -> SosCertificate {
    let opts = search(c);
    for k in 1..cert.rank() {
        if let Some((short, _)) = rank_k_search_problem(gp, k, biquad_sos::rng::derive_seed(c.seed, k as u64), &opts) {
            return short;
        }
    }
    cert
}

fn sos(c: &Common, inputs: &mut Inputs) -> Result<Outcome> {
    let exact_form = load_form(c, inputs)?;
    let form = exact_form.to_f64();
    let gp = GramProblem::for_form(&form)?;
    let opts = FeasibilityOptions {
        max_iters: c.budget.unwrap_or(FeasibilityOptions::default().max_iters),
        ..FeasibilityOptions::default()
    };
    let tol = c.tol.unwrap_or(1e-8);
    let report = run_feasibility(&gp, &opts);
    let summary = json!({
        "status": report.status,
        "affine_residual": report.affine_residual,
        "psd_residual": report.psd_residual,
        "projection_residual": report.projection_residual,
        "iterations": report.iterations,
        "polished": report.polished,
    });
    let cert = match certify_from_report(&gp, &report, tol) {
        Ok(cert) => shorten(&gp, cert, c),
        Err(Error::Indeterminate(msg)) => {
            return with_code(
                EXIT_INDETERMINATE,
                json!({ "status": "indeterminate", "message": msg, "feasibility": summary }),
                c.seed,
            )
        }
        Err(e) => return Err(e),
    };
    let residual = cert.verify(&form.to_poly(), tol)?;
    let mut value = json!({
        "status": "certified",
        "basis_size": gp.size(),
        "rank": cert.rank(),
        "certificate": cert_value(&cert),
        "residual": to_value(&residual),
        "feasibility": summary,
    });
    if c.exact {
        // the float certificate read as exact rationals
        let exact = cert.to_exact().verify(&exact_form.to_poly(), tol)?;
        value["exact_residual"] = to_value(&exact);
    }
    let code = if residual.pass { EXIT_OK } else { EXIT_INDETERMINATE };
    with_code(code, value, c.seed)
}

fn rank(c: &Common, inputs: &mut Inputs, k: Option<usize>) -> Result<Outcome> {
    let form = load_form(c, inputs)?.to_f64();
    let gp = GramProblem::for_form(&form)?;
    let opts = search(c);
    let found = match k {
        Some(k) => {
            if k == 0 || k > gp.size() {
                return Err(Error::InvalidInput(format!("--k {k} outside 1..={}", gp.size())));
            }
            rank_k_search_problem(&gp, k, c.seed, &opts).map(|(cert, _)| (k, cert))
        }
        None => rank_estimate(&gp, c.kmax.unwrap_or(gp.size()), c.seed, &opts),
    };
    match found {
        Some((k, cert)) => {
            let residual = cert.verify(&form.to_poly(), 1e-6)?;
            ok(
                json!({
                    "status": "found",
                    "rank": k,
                    "basis_size": gp.size(),
                    "certificate": cert_value(&cert),
                    "residual": to_value(&residual),
                }),
                c.seed,
            )
        }
        None => with_code(
            EXIT_INDETERMINATE,
            json!({ "status": "not-found", "k": k, "kmax": c.kmax, "basis_size": gp.size() }),
            c.seed,
        ),
    }
}

fn witness(c: &Common, inputs: &mut Inputs) -> Result<Outcome> {
    let form = load_form(c, inputs)?.to_f64();
    let gp = GramProblem::for_form(&form)?;
    match not_sos_witness(&gp, c.budget.unwrap_or(2000), c.seed) {
        Some(w) => {
            let valid = w.validate(&gp);
            let code = if valid.is_ok() { EXIT_NEGATIVE } else { EXIT_INDETERMINATE };
            with_code(
                code,
                json!({
                    "status": "witness",
                    "validated": valid.is_ok(),
                    "validation_error": valid.err().map(|e| e.to_string()),
                    "witness": to_value(&w),
                }),
                c.seed,
            )
        }
        None => with_code(EXIT_INDETERMINATE, json!({ "status": "no-witness" }), c.seed),
    }
}

fn payload_value<T: Scalar>(p: &CasePayload<T>) -> Value {
    let vector = |v: &[T]| -> Vec<Coeff> { v.iter().map(Coeff::of).collect() };
    match p {
        CasePayload::I {
            surviving,
            h3_bar_max_abs,
            claimed_bound,
            achieved,
        } => json!({
            "surviving": surviving,
            "h3_bar_max_abs": h3_bar_max_abs,
            "claimed_bound": claimed_bound,
            "achieved": achieved,
            "exceeds_claim": achieved > claimed_bound,
        }),
        CasePayload::II {
            swapped,
            weight,
            ell,
            g2,
            residual_quadratic,
            remainder_max_abs,
        } => json!({
            "swapped": swapped,
            "weight": Coeff::of(weight),
            "ell": vector(ell),
            "g2": vector(g2),
            "residual_quadratic": residual_quadratic.iter().map(|r| vector(r)).collect::<Vec<_>>(),
            "remainder_max_abs": remainder_max_abs,
        }),
        CasePayload::III {
            h5_h6_max_abs,
            residual,
            restarts_used,
        } => json!({
            "h5_h6_max_abs": h5_h6_max_abs,
            "residual": residual,
            "restarts_used": restarts_used,
        }),
        CasePayload::IV {
            change,
            normalized,
            normalization_error,
            alpha,
            beta1,
            beta2,
            pattern_ok,
            estimate,
        } => json!({
            "change": { "px": change.px, "py": change.py },
            "normalized": to_value(&FormJson::from(normalized)),
            "normalization_error": normalization_error,
            "alpha": alpha,
            "beta1": beta1,
            "beta2": beta2,
            "pattern_ok": pattern_ok,
            "estimate": estimate,
        }),
    }
}

fn classification_value<T: Scalar>(r: &Classification<T>, h: &Form211<T>) -> Result<Value> {
    let residual = match &r.certificate {
        Some(cert) => Some(to_value(&cert.verify(&h.to_poly(), 1e-8)?)),
        None => None,
    };
    Ok(json!({
        "case": r.case,
        "flags": r.flags,
        "boundary": r.boundary,
        "psd_min": r.psd_min,
        "payload": payload_value(&r.payload),
        "certificate": r.certificate.as_ref().map(cert_value),
        "residual": residual,
    }))
}

fn classify(c: &Common, inputs: &mut Inputs) -> Result<Outcome> {
    let j = load_json(c, inputs)?;
    let d = ClassifyOptions::default();
    let opts = ClassifyOptions {
        tol: c.tol.unwrap_or(d.tol),
        oracle: oracle(&Common { tol: None, ..c.clone() }),
        search: search(&Common { tol: None, ..c.clone() }),
        seed: c.seed,
        ..d
    };
    let (value, boundary) = if c.exact {
        let h: Form211<Rational> = j.to_form211()?;
        let r = classify_211(&h, &opts)?;
        (classification_value(&r, &h)?, r.boundary)
    } else {
        let h: Form211 = j.to_form211()?;
        let r = classify_211(&h, &opts)?;
        (classification_value(&r, &h)?, r.boundary)
    };
    let missing = value["case"] != to_value(&Case::I) && value["case"] != to_value(&Case::II) && value["certificate"].is_null();
    let code = if boundary {
        EXIT_NEGATIVE
    } else if missing {
        EXIT_INDETERMINATE
    } else {
        EXIT_OK
    };
    with_code(code, value, c.seed)
}

fn survey(c: &Common, count: usize) -> Result<Outcome> {
    if count == 0 {
        return Err(Error::InvalidInput("--count must be at least 1".into()));
    }
    let kmax = c.kmax.unwrap_or(SURVEY_KMAX);
    if kmax == 0 || kmax > SURVEY_KMAX {
        return Err(Error::InvalidInput(format!("--kmax outside 1..={SURVEY_KMAX}")));
    }
    let d = SurveyOptions::default();
    let opts = SurveyOptions {
        kmax,
        oracle: OracleOptions {
            restarts: c.restarts.unwrap_or(d.oracle.restarts),
            ..d.oracle
        },
        search: SearchOptions {
            restarts: c.restarts.unwrap_or(d.search.restarts),
            ..d.search
        },
    };
    let report = conjecture_survey(count, c.seed, &opts);
    ok(to_value(&report), c.seed)
}

fn verify(c: &Common, inputs: &mut Inputs, cert_path: Option<&Path>) -> Result<Outcome> {
    if let Some(p) = cert_path {
        let exact_form = load_form(c, inputs)?;
        let text = read_file(p, inputs)?;
        let tol = c.tol.unwrap_or(1e-8);
        let report = if c.exact {
            let cert: SosCertificate<Rational> = parse_certificate(&text)?;
            cert.verify(&exact_form.to_poly(), tol)?
        } else {
            let cert: SosCertificate = parse_certificate(&text)?;
            cert.verify(&exact_form.to_f64().to_poly(), tol)?
        };
        let code = if report.pass { EXIT_OK } else { EXIT_NEGATIVE };
        return with_code(code, json!({ "mode": "certificate", "residual": to_value(&report) }), c.seed);
    }
    let manifest: RunManifest = parse_json(&input_text(c, inputs)?)?;
    if matches!(manifest.args.command, Command::Verify { .. }) {
        return Err(Error::InvalidInput("refusing to replay a verify run".into()));
    }
    // inputs must be unchanged
    for (path, expected) in &manifest.input_digests {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::InvalidInput(format!("replay input {path}: {e}")))?;
        if &crate::digest(&bytes) != expected {
            return with_code(
                EXIT_INVALID,
                json!({ "mode": "replay", "identical": false, "reason": format!("input {path} changed") }),
                c.seed,
            );
        }
    }
    let replay = run(&manifest.args);
    let expected = manifest.output_digests.get("result").cloned().unwrap_or_default();
    let actual = replay.manifest.output_digests["result"].clone();
    let identical = expected == actual && replay.code == manifest.exit_code;
    with_code(
        if identical { EXIT_OK } else { EXIT_NEGATIVE },
        json!({
            "mode": "replay",
            "subcommand": manifest.subcommand,
            "identical": identical,
            "expected_digest": expected,
            "actual_digest": actual,
            "exit_code": replay.code,
        }),
        manifest.args.common.seed,
    )
}

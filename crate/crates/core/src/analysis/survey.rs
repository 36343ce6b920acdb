//! Empirical survey of sos ranks of random psd `2 × 1 × 1` forms.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::analysis::cases::{classify_211, rank_estimate_with_fallback, Case, CasePayload, ClassifyOptions};
use crate::certificate::SosCertificate;
use crate::io::{CertificateJson, FormJson};
use crate::error::Result;
use crate::forms::{AnyForm, Form211};
use crate::generate::random_sos_m11;
use crate::psd::{is_psd, OracleOptions};
use crate::rng::{derive_seed, seeded};
use crate::sos::SearchOptions;

/// Rank ceiling: the m11 Gram basis of a `2 × 1 × 1` form has five monomials.
pub const SURVEY_KMAX: usize = 5;

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SurveyOptions {
    pub kmax: usize,
    pub oracle: OracleOptions,
    pub search: SearchOptions,
}

impl Default for SurveyOptions {
    fn default() -> Self {
        SurveyOptions {
            kmax: SURVEY_KMAX,
            oracle: OracleOptions::default(),
            search: SearchOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SurveyInstance {
    pub index: usize,
    pub seed: u64,
    /// Number of generator squares.
    pub generated_squares: usize,
    pub psd_min: f64,
    pub psd_likely: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub case: Option<Case>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub estimate: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

/// Everything needed to replay and re-check one instance.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ReplayBundle {
    pub index: usize,
    pub seed: u64,
    pub generated_squares: usize,
    pub form: FormJson,
    pub generator: CertificateJson,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certificate: Option<CertificateJson>,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SurveyReport {
    pub count: usize,
    pub seed: u64,
    pub kmax: usize,
    /// Keys `"1"`..`"5"` and `"unresolved"`.
    pub histogram: BTreeMap<String, usize>,
    pub cases: BTreeMap<String, usize>,
    pub instances: Vec<SurveyInstance>,
    /// Instances whose estimate is the ceiling.
    pub ceiling: Vec<ReplayBundle>,
    /// Instances whose estimate exceeds the generator's square count.
    pub above_generator: Vec<usize>,
}

/// One survey instance: `K` uniform in `1..=kmax`, then `K` standard
/// normal squares on the m11 basis.
pub fn survey_instance(master: u64, index: usize, kmax: usize) -> Result<(u64, usize, Form211, SosCertificate)> {
    let seed = derive_seed(master, index as u64);
    let mut rng = seeded(seed);
    let k = rand::Rng::random_range(&mut rng, 1..=kmax);
    let (h, cert) = random_sos_m11::<f64>(2, k, derive_seed(seed, 1))?;
    Ok((seed, k, Form211::new(h)?, cert))
}

fn run_instance(master: u64, index: usize, opts: &SurveyOptions) -> (SurveyInstance, Option<ReplayBundle>) {
    let (seed, k, h, generator) = match survey_instance(master, index, opts.kmax) {
        Ok(v) => v,
        Err(e) => {
            return (
                SurveyInstance {
                    index,
                    seed: derive_seed(master, index as u64),
                    generated_squares: 0,
                    psd_min: f64::NAN,
                    psd_likely: false,
                    case: None,
                    flags: Vec::new(),
                    estimate: None,
                    error: Some(e.to_string()),
                },
                None,
            )
        }
    };
    let oracle = OracleOptions {
        seed,
        ..opts.oracle.clone()
    };
    let verdict = is_psd(&AnyForm::M11(h.m11().clone()), &oracle);
    let mut inst = SurveyInstance {
        index,
        seed,
        generated_squares: k,
        psd_min: verdict.min_value,
        psd_likely: verdict.is_psd(),
        case: None,
        flags: Vec::new(),
        estimate: None,
        error: None,
    };
    let copts = ClassifyOptions {
        oracle,
        search: opts.search.clone(),
        seed,
        check_psd: false,
        ..ClassifyOptions::default()
    };
    let mut cert = None;
    match classify_211(&h, &copts) {
        Ok(c) => {
            inst.case = Some(c.case);
            inst.flags = c.flags.clone();
            if let CasePayload::IV { estimate, .. } = c.payload {
                inst.estimate = estimate;
                cert = c.certificate;
            }
        }
        Err(e) => inst.error = Some(e.to_string()),
    }
    if inst.case != Some(Case::IV) {
        match rank_estimate_with_fallback(h.m11(), seed, &opts.search) {
            Ok(Some((r, c))) => {
                inst.estimate = Some(r);
                cert = Some(c);
            }
            Ok(None) => {}
            Err(e) => inst.error = Some(e.to_string()),
        }
    }
    let bundle = (inst.estimate == Some(opts.kmax)).then(|| ReplayBundle {
        index,
        seed,
        generated_squares: k,
        form: FormJson::from(&h),
        generator: CertificateJson::from(&generator),
        certificate: cert.as_ref().map(CertificateJson::from),
    });
    (inst, bundle)
}

/// Samples `count` instances with per-instance seeds derived from
/// `(seed, index)`, so the report does not depend on scheduling.
pub fn conjecture_survey(count: usize, seed: u64, opts: &SurveyOptions) -> SurveyReport {
    let runs: Vec<(SurveyInstance, Option<ReplayBundle>)> = (0..count)
        .into_par_iter()
        .map(|i| run_instance(seed, i, opts))
        .collect();
    let mut histogram: BTreeMap<String, usize> = (1..=opts.kmax).map(|k| (k.to_string(), 0)).collect();
    histogram.insert("unresolved".into(), 0);
    let mut cases = BTreeMap::new();
    let mut instances = Vec::with_capacity(count);
    let mut ceiling = Vec::new();
    let mut above_generator = Vec::new();
    for (inst, bundle) in runs {
        let key = inst.estimate.map_or("unresolved".to_string(), |k| k.to_string());
        *histogram.entry(key).or_default() += 1;
        let case = inst.case.map_or("none".to_string(), |c| c.to_string());
        *cases.entry(case).or_default() += 1;
        if inst.estimate.is_some_and(|e| e > inst.generated_squares) {
            above_generator.push(inst.index);
        }
        ceiling.extend(bundle);
        instances.push(inst);
    }
    SurveyReport {
        count,
        seed,
        kmax: opts.kmax,
        histogram,
        cases,
        instances,
        ceiling,
        above_generator,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_survey_is_schedule_free() {
        let opts = SurveyOptions::default();
        let a = conjecture_survey(6, 3, &opts);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| conjecture_survey(6, 3, &opts));
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        for inst in &a.instances {
            let e = inst.estimate.expect("estimate");
            assert!((1..=5).contains(&e));
            assert!(e <= inst.generated_squares);
        }
        assert_eq!(a.histogram.values().sum::<usize>(), 6);
    }
}

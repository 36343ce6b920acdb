//! JSON wire format for forms and certificates. Indices are 1-based; exact
//! coefficients travel as `"p/q"` strings, floats as JSON numbers.

use serde::{Deserialize, Serialize};

use crate::certificate::SosCertificate;
use crate::error::{Error, Result};
use crate::forms::{AnyForm, BiquadraticForm, Form211, Form211Coeffs, M11Form, TripartiteForm};
use crate::poly::{standard_vars, Monomial, PolynomialMap};
use crate::scalar::{parse_rational, Rational, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coeff {
    Float(f64),
    Exact(String),
}

impl Coeff {
    pub fn of<T: Scalar>(v: &T) -> Coeff {
        if T::EXACT {
            Coeff::Exact(v.to_coeff_string())
        } else {
            Coeff::Float(v.to_f64())
        }
    }

    pub fn to_rational(&self, path: &str) -> Result<Rational> {
        match self {
            Coeff::Float(v) if v.is_finite() => Ok(Rational::from_f64(*v)),
            Coeff::Float(v) => Err(Error::Parse(format!("{path}: non-finite value {v}"))),
            Coeff::Exact(s) => {
                parse_rational(s).ok_or_else(|| Error::Parse(format!("{path}: bad number `{s}`")))
            }
        }
    }

    fn to_scalar<T: Scalar>(&self, path: &str) -> Result<T> {
        Ok(T::from_rational(&self.to_rational(path)?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BqEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub l: usize,
    pub v: Coeff,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    /// Monomial such as `x1^2*y1`.
    pub m: String,
    pub v: Coeff,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FormJson {
    Biquadratic(BiquadraticJson),
    Tripartite(TripartiteJson),
    M11(M11Json),
    Form211(Form211Json),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiquadraticJson {
    pub m: usize,
    pub n: usize,
    pub coeffs: Vec<BqEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripartiteJson {
    pub mx: usize,
    pub ny: usize,
    pub h0: Coeff,
    #[serde(default)]
    pub h1: Vec<Term>,
    #[serde(default)]
    pub h2: Vec<Term>,
    #[serde(default)]
    pub h3: Vec<Term>,
    #[serde(default)]
    pub h4: Vec<BqEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct M11Json {
    pub dim: usize,
    pub h2: Vec<Vec<Coeff>>,
    pub h3: Vec<Vec<Coeff>>,
    pub h4: Vec<Vec<Coeff>>,
    pub h5: Vec<Coeff>,
    pub h6: Vec<Coeff>,
    pub h7: Coeff,
}

/// Named coefficients of a `2 × 1 × 1` form; `c1y, c2y` multiply
/// `x_i y² z`, `c1z, c2z` multiply `x_i y z²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Form211Json {
    pub b11: Coeff,
    pub b12: Coeff,
    pub b22: Coeff,
    pub c11: Coeff,
    pub c12: Coeff,
    pub c22: Coeff,
    pub c1y: Coeff,
    pub c2y: Coeff,
    pub c1z: Coeff,
    pub c2z: Coeff,
    pub d11: Coeff,
    pub d12: Coeff,
    pub d22: Coeff,
    pub h7: Coeff,
}

fn bq_entries<T: Scalar>(f: &BiquadraticForm<T>) -> Vec<BqEntry> {
    f.entries()
        .map(|(&(i, j, k, l), v)| BqEntry {
            i: i + 1,
            j: j + 1,
            k: k + 1,
            l: l + 1,
            v: Coeff::of(v),
        })
        .collect()
}

fn terms<T: Scalar>(p: &PolynomialMap<T>) -> Vec<Term> {
    p.terms()
        .map(|(m, c)| Term {
            m: m.format(p.vars()),
            v: Coeff::of(c),
        })
        .collect()
}

fn matrix<T: Scalar>(m: &[Vec<T>]) -> Vec<Vec<Coeff>> {
    m.iter().map(|r| r.iter().map(Coeff::of).collect()).collect()
}

fn vector<T: Scalar>(v: &[T]) -> Vec<Coeff> {
    v.iter().map(Coeff::of).collect()
}

impl<T: Scalar> From<&AnyForm<T>> for FormJson {
    fn from(f: &AnyForm<T>) -> Self {
        match f {
            AnyForm::Biquadratic(f) => FormJson::Biquadratic(BiquadraticJson {
                m: f.m(),
                n: f.n(),
                coeffs: bq_entries(f),
            }),
            AnyForm::Tripartite(h) => FormJson::Tripartite(TripartiteJson {
                mx: h.mx,
                ny: h.ny,
                h0: Coeff::of(&h.h0),
                h1: terms(&h.h1),
                h2: terms(&h.h2),
                h3: terms(&h.h3),
                h4: bq_entries(&h.h4),
            }),
            AnyForm::M11(h) => FormJson::M11(M11Json {
                dim: h.dim,
                h2: matrix(&h.h2),
                h3: matrix(&h.h3),
                h4: matrix(&h.h4),
                h5: vector(&h.h5),
                h6: vector(&h.h6),
                h7: Coeff::of(&h.h7),
            }),
        }
    }
}

impl<T: Scalar> From<&Form211<T>> for FormJson {
    fn from(h: &Form211<T>) -> Self {
        let c = h.coeffs();
        FormJson::Form211(Form211Json {
            b11: Coeff::of(&c.b11),
            b12: Coeff::of(&c.b12),
            b22: Coeff::of(&c.b22),
            c11: Coeff::of(&c.c11),
            c12: Coeff::of(&c.c12),
            c22: Coeff::of(&c.c22),
            c1y: Coeff::of(&c.c1y),
            c2y: Coeff::of(&c.c2y),
            c1z: Coeff::of(&c.c1z),
            c2z: Coeff::of(&c.c2z),
            d11: Coeff::of(&c.d11),
            d12: Coeff::of(&c.d12),
            d22: Coeff::of(&c.d22),
            h7: Coeff::of(&c.h7),
        })
    }
}

fn parse_entries<T: Scalar>(m: usize, n: usize, list: &[BqEntry], path: &str) -> Result<BiquadraticForm<T>> {
    let mut raw = Vec::with_capacity(list.len());
    for (p, e) in list.iter().enumerate() {
        let at = format!("{path}/{p}");
        for (name, idx, bound) in [("i", e.i, m), ("j", e.j, m), ("k", e.k, n), ("l", e.l, n)] {
            if idx == 0 || idx > bound {
                return Err(Error::InvalidIndex(format!(
                    "{at}/{name}: {idx} outside 1..={bound}"
                )));
            }
        }
        raw.push(((e.i - 1, e.j - 1, e.k - 1, e.l - 1), e.v.to_scalar(&format!("{at}/v"))?));
    }
    BiquadraticForm::canonicalize(m, n, raw)
}

fn parse_terms<T: Scalar>(vars: &[String], list: &[Term], path: &str) -> Result<PolynomialMap<T>> {
    let mut p = PolynomialMap::zero(vars.to_vec());
    for (i, t) in list.iter().enumerate() {
        let at = format!("{path}/{i}");
        let m = Monomial::parse(&t.m, vars).map_err(|e| Error::Parse(format!("{at}/m: {e}")))?;
        p.add_term(m, t.v.to_scalar(&format!("{at}/v"))?);
    }
    Ok(p)
}

fn parse_matrix<T: Scalar>(m: &[Vec<Coeff>], dim: usize, path: &str) -> Result<Vec<Vec<T>>> {
    if m.len() != dim || m.iter().any(|r| r.len() != dim) {
        return Err(Error::InvalidShape(format!("{path}: expected a {dim}x{dim} matrix")));
    }
    m.iter()
        .enumerate()
        .map(|(i, r)| {
            r.iter()
                .enumerate()
                .map(|(j, c)| c.to_scalar(&format!("{path}/{i}/{j}")))
                .collect()
        })
        .collect()
}

fn parse_vector<T: Scalar>(v: &[Coeff], dim: usize, path: &str) -> Result<Vec<T>> {
    if v.len() != dim {
        return Err(Error::InvalidShape(format!("{path}: expected {dim} entries")));
    }
    v.iter()
        .enumerate()
        .map(|(i, c)| c.to_scalar(&format!("{path}/{i}")))
        .collect()
}

impl FormJson {
    /// Builds the form in scalar type `T`, reporting the offending JSON
    /// path on failure.
    pub fn to_form<T: Scalar>(&self) -> Result<AnyForm<T>> {
        match self {
            FormJson::Biquadratic(BiquadraticJson { m, n, coeffs }) => {
                Ok(AnyForm::Biquadratic(parse_entries(*m, *n, coeffs, "/coeffs")?))
            }
            FormJson::Tripartite(TripartiteJson {
                mx,
                ny,
                h0,
                h1,
                h2,
                h3,
                h4,
            }) => {
                let vars = standard_vars(*mx, *ny, false);
                let h = TripartiteForm {
                    mx: *mx,
                    ny: *ny,
                    h0: h0.to_scalar("/h0")?,
                    h1: parse_terms(&vars, h1, "/h1")?,
                    h2: parse_terms(&vars, h2, "/h2")?,
                    h3: parse_terms(&vars, h3, "/h3")?,
                    h4: parse_entries(*mx, *ny, h4, "/h4")?,
                };
                // re-extraction enforces the degree structure
                Ok(AnyForm::Tripartite(TripartiteForm::extract_components(&h.to_poly())?))
            }
            FormJson::M11(M11Json {
                dim,
                h2,
                h3,
                h4,
                h5,
                h6,
                h7,
            }) => {
                let h = M11Form {
                    dim: *dim,
                    h2: parse_matrix(h2, *dim, "/h2")?,
                    h3: parse_matrix(h3, *dim, "/h3")?,
                    h4: parse_matrix(h4, *dim, "/h4")?,
                    h5: parse_vector(h5, *dim, "/h5")?,
                    h6: parse_vector(h6, *dim, "/h6")?,
                    h7: h7.to_scalar("/h7")?,
                };
                h.validate()?;
                Ok(AnyForm::M11(h))
            }
            FormJson::Form211(_) => Ok(AnyForm::M11(self.to_form211::<T>()?.into_m11())),
        }
    }

    /// A `2 × 1 × 1` form from either the named layout or a dim-2 m11 layout.
    pub fn to_form211<T: Scalar>(&self) -> Result<Form211<T>> {
        match self {
            FormJson::Form211(Form211Json {
                b11,
                b12,
                b22,
                c11,
                c12,
                c22,
                c1y,
                c2y,
                c1z,
                c2z,
                d11,
                d12,
                d22,
                h7,
            }) => Ok(Form211::from_coeffs(Form211Coeffs {
                b11: b11.to_scalar("/b11")?,
                b12: b12.to_scalar("/b12")?,
                b22: b22.to_scalar("/b22")?,
                c11: c11.to_scalar("/c11")?,
                c12: c12.to_scalar("/c12")?,
                c22: c22.to_scalar("/c22")?,
                c1y: c1y.to_scalar("/c1y")?,
                c2y: c2y.to_scalar("/c2y")?,
                c1z: c1z.to_scalar("/c1z")?,
                c2z: c2z.to_scalar("/c2z")?,
                d11: d11.to_scalar("/d11")?,
                d12: d12.to_scalar("/d12")?,
                d22: d22.to_scalar("/d22")?,
                h7: h7.to_scalar("/h7")?,
            })),
            FormJson::M11(_) => match self.to_form::<T>()? {
                AnyForm::M11(m) => Form211::new(m),
                _ => unreachable!(),
            },
            _ => Err(Error::InvalidInput(
                "expected kind `form211` or a dim-2 `m11` form".into(),
            )),
        }
    }
}

/// Parses JSON text, reporting the path of a structural error.
pub fn parse_json<'a, D: Deserialize<'a>>(text: &'a str) -> Result<D> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(path_error)
}

fn path_error(e: serde_path_to_error::Error<serde_json::Error>) -> Error {
    Error::Parse(format!("at `{}`: {}", e.path(), e.inner()))
}

fn variant<D: serde::de::DeserializeOwned>(v: serde_json::Value) -> Result<D> {
    serde_path_to_error::deserialize(v).map_err(path_error)
}

impl FormJson {
    /// As `parse_json::<FormJson>`, but structural errors inside the form
    /// keep their path (serde's tagged enums lose it).
    pub fn from_value(mut v: serde_json::Value) -> Result<FormJson> {
        let obj = v
            .as_object_mut()
            .ok_or_else(|| Error::Parse("at `.`: a form must be a JSON object".into()))?;
        let kind = match obj.remove("kind") {
            Some(serde_json::Value::String(k)) => k,
            Some(_) => return Err(Error::Parse("at `kind`: expected a string".into())),
            None => return Err(Error::Parse("at `.`: missing field `kind`".into())),
        };
        match kind.as_str() {
            "biquadratic" => variant(v).map(FormJson::Biquadratic),
            "tripartite" => variant(v).map(FormJson::Tripartite),
            "m11" => variant(v).map(FormJson::M11),
            "form211" => variant(v).map(FormJson::Form211),
            other => Err(Error::Parse(format!(
                "at `kind`: unknown kind `{other}`, expected biquadratic, tripartite, m11 or form211"
            ))),
        }
    }

    pub fn parse(text: &str) -> Result<FormJson> {
        FormJson::from_value(parse_json(text)?)
    }
}

pub fn parse_form<T: Scalar>(text: &str) -> Result<AnyForm<T>> {
    FormJson::parse(text)?.to_form()
}

pub fn form_to_string<T: Scalar>(f: &AnyForm<T>) -> String {
    serde_json::to_string_pretty(&FormJson::from(f)).expect("serializable")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateJson {
    pub vars: Vec<String>,
    pub basis: Vec<String>,
    pub squares: Vec<Vec<Coeff>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Coeff>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

impl<T: Scalar> From<&SosCertificate<T>> for CertificateJson {
    fn from(c: &SosCertificate<T>) -> Self {
        CertificateJson {
            vars: c.vars.clone(),
            basis: c.basis_strings(),
            squares: c.squares.iter().map(|q| vector(q)).collect(),
            weights: c.weights.as_ref().map(|w| vector(w)),
            target: c.target.clone(),
        }
    }
}

impl<T: Scalar> From<SosCertificate<T>> for CertificateJson {
    fn from(c: SosCertificate<T>) -> Self {
        CertificateJson::from(&c)
    }
}

impl<T: Scalar> TryFrom<CertificateJson> for SosCertificate<T> {
    type Error = Error;

    fn try_from(j: CertificateJson) -> Result<Self> {
        let basis = j
            .basis
            .iter()
            .enumerate()
            .map(|(i, s)| Monomial::parse(s, &j.vars).map_err(|e| Error::Parse(format!("/basis/{i}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let nb = basis.len();
        let squares = j
            .squares
            .iter()
            .enumerate()
            .map(|(k, q)| parse_vector(q, nb, &format!("/squares/{k}")))
            .collect::<Result<Vec<Vec<T>>>>()?;
        let mut c = SosCertificate::new(j.vars, basis, squares);
        if let Some(w) = &j.weights {
            let w = parse_vector(w, c.rank(), "/weights")?;
            c = c.with_weights(w);
        }
        c.target = j.target;
        Ok(c)
    }
}

pub fn certificate_to_string<T: Scalar>(c: &SosCertificate<T>) -> String {
    serde_json::to_string_pretty(&CertificateJson::from(c)).expect("serializable")
}

pub fn parse_certificate<T: Scalar>(text: &str) -> Result<SosCertificate<T>> {
    parse_json::<CertificateJson>(text)?.try_into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn biquadratic_round_trip() {
        let f: BiquadraticForm<Rational> = fixtures::choi();
        let form = AnyForm::Biquadratic(f);
        let text = form_to_string(&form);
        assert!(text.contains("\"kind\": \"biquadratic\""));
        let back: AnyForm<Rational> = parse_form(&text).unwrap();
        assert_eq!(back, form);
        assert_eq!(form_to_string(&back), text);
    }

    #[test]
    fn one_based_indices() {
        let text = r#"{"kind":"biquadratic","m":2,"n":2,"coeffs":[{"i":1,"j":2,"k":1,"l":1,"v":"1/2"}]}"#;
        let f: AnyForm<Rational> = parse_form(text).unwrap();
        let AnyForm::Biquadratic(f) = f else { panic!() };
        assert_eq!(f.get(0, 1, 0, 0), Rational::new(1.into(), 2.into()));
        let bad = r#"{"kind":"biquadratic","m":2,"n":2,"coeffs":[{"i":0,"j":2,"k":1,"l":1,"v":1}]}"#;
        let err = parse_form::<f64>(bad).unwrap_err();
        assert!(err.to_string().contains("/coeffs/0/i"), "{err}");
    }

    #[test]
    fn structural_error_has_path() {
        let bad = r#"{"kind":"biquadratic","m":2,"n":2,"coeffs":[{"i":1,"j":"x","k":1,"l":1,"v":1}]}"#;
        let err = parse_form::<f64>(bad).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
        assert!(err.to_string().contains("coeffs[0].j"), "{err}");
        let err = parse_form::<f64>(r#"{"kind":"cubic"}"#).unwrap_err();
        assert!(err.to_string().contains("unknown kind"), "{err}");
    }

    #[test]
    fn m11_and_form211_round_trip() {
        let (h, cert) = crate::generate::random_sos_m11::<f64>(2, 3, 1).unwrap();
        let form = AnyForm::M11(h.clone());
        let back: AnyForm<f64> = parse_form(&form_to_string(&form)).unwrap();
        assert_eq!(back, form);
        let h211 = Form211::new(h).unwrap();
        let j = FormJson::from(&h211);
        let again: Form211<f64> = parse_json::<FormJson>(&serde_json::to_string(&j).unwrap())
            .unwrap()
            .to_form211()
            .unwrap();
        assert_eq!(again, h211);
        let c: SosCertificate<f64> = parse_certificate(&certificate_to_string(&cert)).unwrap();
        assert_eq!(c, cert);
    }

    #[test]
    fn tripartite_round_trip() {
        let f: BiquadraticForm<Rational> = fixtures::perfect_square(3, 2);
        let h = crate::transforms::biquadratic_to_tripartite(&f).unwrap();
        let form = AnyForm::Tripartite(h);
        let back: AnyForm<Rational> = parse_form(&form_to_string(&form)).unwrap();
        assert_eq!(back, form);
    }
}

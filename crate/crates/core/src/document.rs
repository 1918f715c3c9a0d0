//! JSON input documents for scalar equations and n-dimensional fields.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::interval::Interval;
use crate::sode1d::{linearize, linearize_rhs, linearize_split, Linearisation, QuadraticSode, POSITION, VELOCITY};
use crate::sodend::{BasicFunction, SodeField};

pub type Params = BTreeMap<String, f64>;

/// Start of a scalar trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub x: f64,
    pub v: f64,
    pub t_end: f64,
}

/// `ẍ + γ(x)ẋ² + A(x)ẋ + b(x) = 0`, or a general right-hand side `ẍ = X(x, v)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SodeDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<String>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<String>,
    #[serde(rename = "X", default, skip_serializing_if = "Option::is_none")]
    pub rhs: Option<String>,
    pub domain: [f64; 2],
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialState>,
    /// Anchor preferred by this equation, used when the run sets none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_point: Option<f64>,
    /// Split at sign changes even when the run does not ask to.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub auto_split: bool,
}

/// What a scalar document describes once parsed.
#[derive(Debug, Clone)]
pub enum SodeInput {
    Quadratic(QuadraticSode),
    General { rhs: Expr, domain: Interval },
}

fn param_list(params: &Params) -> Vec<(&str, f64)> {
    params.iter().map(|(k, v)| (k.as_str(), *v)).collect()
}

fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::invalid(format!("malformed document: {e}")))
}

impl SodeDocument {
    pub fn coefficients(gamma: &str, a: &str, b: &str, domain: Interval) -> Self {
        Self {
            gamma: Some(gamma.into()),
            a: Some(a.into()),
            b: Some(b.into()),
            rhs: None,
            domain: [domain.lo(), domain.hi()],
            params: Params::new(),
            initial: None,
            base_point: None,
            auto_split: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        from_json(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    /// Override parameters; later entries win.
    pub fn with_params<'a, I: IntoIterator<Item = (&'a str, f64)>>(mut self, overrides: I) -> Self {
        for (k, v) in overrides {
            self.params.insert(k.to_string(), v);
        }
        self
    }

    pub fn domain(&self) -> Result<Interval> {
        Interval::new(self.domain[0], self.domain[1])
    }

    pub fn build(&self) -> Result<SodeInput> {
        let domain = self.domain()?;
        let params = param_list(&self.params);
        match (&self.gamma, &self.a, &self.b, &self.rhs) {
            (Some(g), Some(a), Some(b), None) => Ok(SodeInput::Quadratic(QuadraticSode::parse(g, a, b, domain, &params)?)),
            (None, None, None, Some(x)) => {
                let mut vars = vec![POSITION, VELOCITY];
                vars.extend(params.iter().map(|(n, _)| *n));
                let rhs = parse(x, &vars)?.bind(params.iter().copied());
                Ok(SodeInput::General { rhs, domain })
            }
            _ => Err(Error::invalid("a document needs either all of gamma, A, b or X alone")),
        }
    }

    /// The quadratic form of the document, normalizing `X` when given.
    pub fn quadratic(&self) -> Result<Option<QuadraticSode>> {
        match self.build()? {
            SodeInput::Quadratic(s) => Ok(Some(s)),
            SodeInput::General { rhs, domain } => match crate::sode1d::normalize(&rhs, domain)? {
                crate::sode1d::Normalized::Quadratic(s) => Ok(Some(s)),
                crate::sode1d::Normalized::NotQuadratic { .. } => Ok(None),
            },
        }
    }

    /// The run configuration with this document's preferences filled in.
    pub fn settle(&self, cfg: &RunConfig) -> RunConfig {
        let mut cfg = cfg.clone();
        if cfg.base_point.is_none() {
            cfg.base_point = self.base_point;
        }
        cfg.auto_split |= self.auto_split;
        cfg
    }

    /// Linearize under `cfg` as settled by [`Self::settle`].
    pub fn linearize(&self, cfg: &RunConfig) -> Result<Vec<Linearisation>> {
        let cfg = &self.settle(cfg);
        match self.build()? {
            SodeInput::Quadratic(s) if cfg.auto_split => linearize_split(&s, cfg),
            SodeInput::Quadratic(s) => Ok(vec![linearize(&s, cfg)?]),
            SodeInput::General { rhs, domain } => match self.quadratic()? {
                Some(s) if cfg.auto_split => linearize_split(&s, cfg),
                _ => Ok(vec![linearize_rhs(&rhs, domain, cfg)?]),
            },
        }
    }
}

/// Start of an n-dimensional trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldInitialState {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub t_end: f64,
}

/// `ẍⁱ = Xⁱ(x, v)` with an optional time function `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldDocument {
    pub n: usize,
    #[serde(rename = "X")]
    pub components: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    pub domain: Vec<[f64; 2]>,
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<FieldInitialState>,
}

impl FieldDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        from_json(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    pub fn with_params<'a, I: IntoIterator<Item = (&'a str, f64)>>(mut self, overrides: I) -> Self {
        for (k, v) in overrides {
            self.params.insert(k.to_string(), v);
        }
        self
    }

    fn domain(&self) -> Result<Vec<Interval>> {
        if self.components.len() != self.n || self.domain.len() != self.n {
            return Err(Error::invalid(format!(
                "n = {} but {} components and {} domain intervals",
                self.n,
                self.components.len(),
                self.domain.len()
            )));
        }
        self.domain.iter().map(|d| Interval::new(d[0], d[1])).collect()
    }

    pub fn field(&self) -> Result<SodeField> {
        let comps: Vec<&str> = self.components.iter().map(String::as_str).collect();
        SodeField::parse(&comps, self.domain()?, &param_list(&self.params))
    }

    pub fn time_function(&self) -> Result<Option<BasicFunction>> {
        self.f
            .as_deref()
            .map(|f| BasicFunction::parse(f, self.domain()?, &param_list(&self.params)))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_document_roundtrip() {
        let text = r#"{"gamma": "1/x", "A": "x", "b": "1/2", "domain": [0.5, 3], "params": {}}"#;
        let doc = SodeDocument::from_json(text).unwrap();
        let back = SodeDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(doc, back);
        let lin = doc.linearize(&RunConfig::default().with_base_point(1.0)).unwrap();
        assert_eq!(lin[0].outcome.case(), "linear");
    }

    #[test]
    fn document_preferences_yield_to_the_run() {
        let text = r#"{"gamma": "1/x", "A": "x", "b": "1/2", "domain": [0.5, 3], "base_point": 1}"#;
        let doc = SodeDocument::from_json(text).unwrap();
        let c = |cfg: &RunConfig| doc.linearize(cfg).unwrap()[0].outcome.target().unwrap().2;
        assert!((c(&RunConfig::default()) - 0.5).abs() < 1e-12);
        assert!((c(&RunConfig::default().with_base_point(1.75)) - 0.5).abs() > 0.1);
        let sphere = r#"{"gamma": "-2*cot(x)", "A": "0", "b": "-sin(x)*cos(x)", "domain": [0.3, 2.8], "auto_split": true}"#;
        assert_eq!(SodeDocument::from_json(sphere).unwrap().linearize(&RunConfig::default()).unwrap().len(), 2);
    }

    #[test]
    fn params_are_overridden() {
        let text = r#"{"gamma": "2/x", "A": "0", "b": "omega^2/x^3", "domain": [0.3, 3], "params": {"omega": 1}}"#;
        let doc = SodeDocument::from_json(text).unwrap().with_params([("omega", 2.0)]);
        let Some(s) = doc.quadratic().unwrap() else { panic!() };
        assert_eq!(s.b().eval(1.0).unwrap(), 4.0);
    }

    #[test]
    fn general_right_hand_side() {
        let cubic = r#"{"X": "-x - v + v^3", "domain": [-1, 1]}"#;
        let doc = SodeDocument::from_json(cubic).unwrap();
        assert!(doc.quadratic().unwrap().is_none());
        assert_eq!(doc.linearize(&RunConfig::default()).unwrap()[0].outcome.case(), "not_quadratic");
        let quad = r#"{"X": "-2*v^2/x - 1/x^3", "domain": [0.3, 3]}"#;
        let doc = SodeDocument::from_json(quad).unwrap();
        assert_eq!(doc.linearize(&RunConfig::default()).unwrap()[0].outcome.case(), "unit_forcing");
    }

    #[test]
    fn mixed_or_missing_forms_are_rejected() {
        for text in [
            r#"{"gamma": "0", "X": "v", "domain": [0, 1]}"#,
            r#"{"gamma": "0", "A": "0", "domain": [0, 1]}"#,
        ] {
            assert!(SodeDocument::from_json(text).unwrap().build().is_err());
        }
        assert!(SodeDocument::from_json(r#"{"gamma": "0", "A": "0", "b": "0", "domain": [0, 1], "extra": 1}"#).is_err());
        assert!(SodeDocument::from_json(r#"{"gamma": "0", "A": "0", "b": "0", "domain": [2, 1]}"#)
            .unwrap()
            .build()
            .is_err());
    }

    #[test]
    fn field_document() {
        let text = r#"{"n": 2, "X": ["-x1", "-x2"], "f": "1 + (x1^2 + x2^2)/4",
            "domain": [[-3, 3], [-3, 3]], "initial": {"x": [1, 0], "v": [0, 1], "t_end": 2}}"#;
        let doc = FieldDocument::from_json(text).unwrap();
        assert_eq!(doc.field().unwrap().n(), 2);
        assert!(doc.time_function().unwrap().is_some());
        let bad = FieldDocument { n: 3, ..doc };
        assert!(bad.field().is_err());
    }
}

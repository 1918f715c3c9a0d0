use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Pretty,
}

/// Tolerances and sampling settings shared by every engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Relative threshold for declaring the Q invariant zero.
    pub q_tol: f64,
    /// Relative threshold for declaring a coefficient identically zero.
    pub zero_tol: f64,
    /// Relative residual allowed in the affine fit of the transformed forcing.
    pub affine_tol: f64,
    pub quad_tol: f64,
    pub ivp_tol: f64,
    /// Anchor of every antiderivative; the domain midpoint when absent.
    pub base_point: Option<f64>,
    pub grid_n: usize,
    pub output_format: OutputFormat,
    /// Split the domain at sign changes of the dividing coefficient instead
    /// of failing.
    pub auto_split: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            q_tol: 1e-9,
            zero_tol: 1e-12,
            affine_tol: 1e-7,
            quad_tol: 1e-12,
            ivp_tol: 1e-10,
            base_point: None,
            grid_n: 64,
            output_format: OutputFormat::Json,
            auto_split: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("q_tol", self.q_tol),
            ("zero_tol", self.zero_tol),
            ("affine_tol", self.affine_tol),
            ("quad_tol", self.quad_tol),
            ("ivp_tol", self.ivp_tol),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.grid_n < 16 {
            return Err(Error::invalid(format!("grid_n must be at least 16, got {}", self.grid_n)));
        }
        if let Some(x) = self.base_point {
            if !x.is_finite() {
                return Err(Error::invalid("base_point must be finite"));
            }
        }
        Ok(())
    }

    pub fn with_base_point(mut self, x: f64) -> Self {
        self.base_point = Some(x);
        self
    }

    pub fn with_ivp_tol(mut self, tol: f64) -> Self {
        self.ivp_tol = tol;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let c = RunConfig {
            q_tol: 0.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = RunConfig {
            grid_n: 8,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn partial_json_uses_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"q_tol": 1e-8, "output_format": "pretty"}"#).unwrap();
        assert_eq!(c.q_tol, 1e-8);
        assert_eq!(c.output_format, OutputFormat::Pretty);
        assert_eq!(c.grid_n, 64);
        assert!(serde_json::from_str::<RunConfig>(r#"{"qtol": 1}"#).is_err());
    }
}

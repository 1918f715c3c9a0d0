use std::fs;
use std::path::Path;

use sundman_core::{Error, Result, RunConfig};

use crate::args::Global;

/// Parse a TOML or JSON config; the extension decides, TOML otherwise.
pub fn load_file(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let cfg: RunConfig = if is_json {
        serde_json::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?
    } else {
        toml::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?
    };
    Ok(cfg)
}

/// Defaults, then the config file, then command-line flags.
pub fn resolve(global: &Global) -> Result<RunConfig> {
    let mut cfg = match &global.config {
        Some(path) => load_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = global.q_tol {
        cfg.q_tol = v;
    }
    if let Some(v) = global.ivp_tol {
        cfg.ivp_tol = v;
    }
    if let Some(v) = global.base_point {
        cfg.base_point = Some(v);
    }
    if let Some(f) = global.format {
        cfg.output_format = f.into();
    }
    if global.auto_split {
        cfg.auto_split = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

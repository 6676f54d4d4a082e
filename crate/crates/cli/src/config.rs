//! Flat `key = value` configuration, overridden by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};

use qprior::{PbConvention, PriorConfig};

use crate::Usage;

pub const ENV_VAR: &str = "QPRIOR_CONFIG";

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub q_min: f64,
    pub q_max: f64,
    /// `sqrt` or `printed`; the latter truncates at `r = 1 − pb_delta`.
    pub pb_convention: String,
    pub pb_delta: f64,
    pub rel_tol: f64,
    pub rel_tol_4d: f64,
    pub abs_tol: f64,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        let p = PriorConfig::default();
        Self {
            q_min: p.q_min,
            q_max: p.q_max,
            pb_convention: "sqrt".into(),
            pb_delta: 1e-3,
            rel_tol: p.rel_tol,
            rel_tol_4d: p.rel_tol_4d,
            abs_tol: p.abs_tol,
            out: None,
            seed: 1,
        }
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "q_min = {}", self.q_min)?;
        writeln!(f, "q_max = {}", self.q_max)?;
        writeln!(f, "pb_convention = {}", self.pb_convention)?;
        writeln!(f, "pb_delta = {}", self.pb_delta)?;
        writeln!(f, "rel_tol = {:e}", self.rel_tol)?;
        writeln!(f, "rel_tol_4d = {:e}", self.rel_tol_4d)?;
        writeln!(f, "abs_tol = {:e}", self.abs_tol)?;
        if let Some(o) = &self.out {
            writeln!(f, "out = {}", o.display())?;
        }
        writeln!(f, "seed = {}", self.seed)
    }
}

impl Config {
    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), Usage> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Usage(format!("config line {}: expected `key = value`, got `{line}`", n + 1)))?;
            self.set(k.trim(), v.trim()).map_err(|Usage(m)| Usage(format!("config line {}: {m}", n + 1)))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Usage> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, Usage> {
            v.parse().map_err(|_| Usage(format!("bad value `{v}` for {key}")))
        }
        match key {
            "q_min" => self.q_min = num(key, value)?,
            "q_max" => self.q_max = num(key, value)?,
            "pb_convention" => self.pb_convention = value.to_string(),
            "pb_delta" => self.pb_delta = num(key, value)?,
            "rel_tol" => self.rel_tol = num(key, value)?,
            "rel_tol_4d" => self.rel_tol_4d = num(key, value)?,
            "abs_tol" => self.abs_tol = num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "seed" => self.seed = num(key, value)?,
            other => return Err(Usage(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Defaults, then the file at `path` (or `$QPRIOR_CONFIG`) if any.
    pub fn load(path: Option<&Path>) -> Result<Self, Usage> {
        let mut cfg = Self::default();
        let from_env = std::env::var_os(ENV_VAR).filter(|v| !v.is_empty()).map(PathBuf::from);
        if let Some(p) = path.map(Path::to_path_buf).or(from_env) {
            let text = std::fs::read_to_string(&p).map_err(|e| Usage(format!("cannot read config {}: {e}", p.display())))?;
            cfg.apply_text(&text)?;
        }
        Ok(cfg)
    }

    pub fn convention(&self) -> Result<PbConvention, Usage> {
        match self.pb_convention.as_str() {
            "sqrt" => Ok(PbConvention::Sqrt),
            "printed" => Ok(PbConvention::Printed { delta: self.pb_delta }),
            other => Err(Usage(format!("pb_convention must be `sqrt` or `printed`, got `{other}`"))),
        }
    }

    pub fn prior_config(&self) -> Result<PriorConfig, Usage> {
        let p = PriorConfig {
            q_min: self.q_min,
            q_max: self.q_max,
            pb_convention: self.convention()?,
            rel_tol: self.rel_tol,
            rel_tol_4d: self.rel_tol_4d,
            abs_tol: self.abs_tol,
        };
        p.validate().map_err(|e| Usage(format!("invalid configuration: {e}")))?;
        Ok(p)
    }
}

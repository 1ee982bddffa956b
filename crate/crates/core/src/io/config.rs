use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ini::Ini;

use crate::error::{Error, Result};
use crate::model::{InverseGamma, ModelSpec, ModelVariant};
use crate::sampler::ChainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Bin,
}

/// Every recognised key, grouped by INI section. Keys are spelled like the
/// command-line flags without the leading dashes.
pub const SECTIONS: [(&str, &[&str]); 4] = [
    ("io", &["data", "adjacency", "edge-adjacency", "scenario", "samples", "truth", "out", "format", "overwrite"]),
    ("model", &["model", "prior-var-beta", "prior-tau2", "prior-zeta2", "mu", "epsilon", "v-bound"]),
    ("sampler", &["n-sample", "burnin", "thin", "seed", "chains", "workers", "v-block-size"]),
    ("study", &["replicates", "resolution"]),
];

fn known(key: &str) -> bool {
    SECTIONS.iter().any(|(_, keys)| keys.contains(&key))
}

/// Layered key-value settings: a config file first, then command-line
/// overrides of the same names. Typed accessors validate on read.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses INI text with the sections `[io]`, `[model]`, `[sampler]`
    /// and `[study]`; keys outside a section are also accepted.
    pub fn from_ini_str(text: &str, source: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::schema(source, e.to_string()))?;
        let mut cfg = RunConfig::new();
        for (section, props) in ini.iter() {
            if let Some(s) = section {
                if !SECTIONS.iter().any(|(name, _)| *name == s) {
                    return Err(Error::schema(source, format!("unknown section [{s}]")));
                }
            }
            for (k, v) in props.iter() {
                if let Some(s) = section {
                    let keys = SECTIONS.iter().find(|(name, _)| *name == s).map(|(_, keys)| *keys).unwrap_or(&[]);
                    if !keys.contains(&k) {
                        return Err(Error::schema(source, format!("key '{k}' does not belong in [{s}]")));
                    }
                }
                cfg.set(k, v).map_err(|_| Error::schema(source, format!("unknown key '{k}'")))?;
            }
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_ini_str(&super::read_text(path)?, &path.display().to_string())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !known(key) {
            return Err(Error::schema("settings", format!("unknown key '{key}'")));
        }
        self.values.insert(key.to_string(), value.into().trim().to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(PathBuf::from)
    }

    pub fn require_path(&self, key: &'static str) -> Result<PathBuf> {
        self.path(key).ok_or_else(|| Error::domain(key, format!("--{key} is required")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &'static str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Error::domain(key, format!("cannot parse '{v}'"))),
        }
    }

    fn pair(&self, key: &'static str, default: InverseGamma) -> Result<InverseGamma> {
        let Some(v) = self.get(key) else { return Ok(default) };
        let parts: Vec<&str> = v.split(',').map(str::trim).collect();
        let bad = || Error::domain(key, format!("expected 'a,b', got '{v}'"));
        if parts.len() != 2 {
            return Err(bad());
        }
        let a: f64 = parts[0].parse().map_err(|_| bad())?;
        let b: f64 = parts[1].parse().map_err(|_| bad())?;
        Ok(InverseGamma::new(a, b))
    }

    pub fn flag(&self, key: &'static str) -> Result<bool> {
        match self.get(key) {
            None => Ok(false),
            Some("true" | "1" | "yes" | "") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(v) => Err(Error::domain(key, format!("'{v}' is not a boolean"))),
        }
    }

    /// Model and prior settings, validated against their supports.
    pub fn model_spec(&self) -> Result<ModelSpec> {
        let variant = match self.get("model") {
            Some(m) => ModelVariant::parse(m)?,
            None => ModelVariant::AdaptiveIndependent,
        };
        let d = ModelSpec::new(variant);
        let spec = ModelSpec {
            variant,
            prior_var_beta: self.parse("prior-var-beta", d.prior_var_beta)?,
            prior_tau2: self.pair("prior-tau2", d.prior_tau2)?,
            prior_zeta2: self.pair("prior-zeta2", d.prior_zeta2)?,
            mu: self.parse("mu", d.mu)?,
            epsilon: self.parse("epsilon", d.epsilon)?,
            v_bound: self.parse("v-bound", d.v_bound)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn chain_config(&self) -> Result<ChainConfig> {
        let d = ChainConfig::default();
        let mut cfg = ChainConfig::new(
            self.parse("n-sample", d.n_sample)?,
            self.parse("burnin", d.burnin)?,
            self.parse("thin", d.thin)?,
            self.parse("seed", d.seed)?,
        );
        cfg.v_block_size = self.parse("v-block-size", d.v_block_size)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn format(&self) -> Result<OutputFormat> {
        match self.get("format").unwrap_or("csv") {
            "csv" => Ok(OutputFormat::Csv),
            "bin" => Ok(OutputFormat::Bin),
            other => Err(Error::domain("format", format!("'{other}' is not csv or bin"))),
        }
    }

    pub fn chains(&self) -> Result<usize> {
        let n = self.parse("chains", 1usize)?;
        if n == 0 {
            return Err(Error::domain("chains", "must be at least 1"));
        }
        Ok(n)
    }

    pub fn workers(&self) -> Result<Option<usize>> {
        match self.get("workers") {
            None => Ok(None),
            Some(_) => {
                let n = self.parse("workers", 0usize)?;
                if n == 0 {
                    return Err(Error::domain("workers", "must be at least 1"));
                }
                Ok(Some(n))
            }
        }
    }

    pub fn usize_or(&self, key: &'static str, default: usize) -> Result<usize> {
        self.parse(key, default)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flag_layering() {
        let mut cfg = RunConfig::from_ini_str(
            "[model]\nmodel = global\nprior-tau2 = 1, 0.01\n[sampler]\nn-sample = 300\nburnin = 100\nthin = 2\n",
            "run.ini",
        )
        .unwrap();
        assert_eq!(cfg.model_spec().unwrap().variant, ModelVariant::GlobalAR);
        assert_eq!(cfg.model_spec().unwrap().prior_tau2, InverseGamma::new(1.0, 0.01));
        cfg.set("n-sample", "400").unwrap();
        assert_eq!(cfg.chain_config().unwrap().n_sample, 400);
        assert_eq!(cfg.chain_config().unwrap().n_retained(), 150);
    }

    #[test]
    fn invalid_settings() {
        assert_eq!(RunConfig::from_ini_str("colour = 1\n", "x").unwrap_err().kind(), crate::ErrorKind::Schema);
        assert_eq!(RunConfig::from_ini_str("[model]\nseed = 1\n", "x").unwrap_err().kind(), crate::ErrorKind::Schema);
        let mut cfg = RunConfig::new();
        cfg.set("prior-tau2", "0,1").unwrap();
        assert_eq!(cfg.model_spec().unwrap_err().kind(), crate::ErrorKind::Domain);
        cfg.set("prior-tau2", "1").unwrap();
        assert!(cfg.model_spec().is_err());
        let mut cfg = RunConfig::new();
        cfg.set("burnin", "7000").unwrap();
        assert_eq!(cfg.chain_config().unwrap_err().kind(), crate::ErrorKind::Domain);
    }
}

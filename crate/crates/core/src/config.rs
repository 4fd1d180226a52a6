//! Declarative run configuration: a TOML file with `${VAR}` environment
//! interpolation for secrets. CLI flags override file values; tokens are
//! only ever read from the environment, never stored in outputs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub source: SourceConfig,
    pub split: SplitConfig,
    pub select: SelectConfig,
    pub run: RunSection,
    pub endpoint: EndpointConfig,
    pub embedder: EndpointConfig,
    pub scorer: EndpointConfig,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    pub roots: Vec<String>,
    pub include: Vec<String>,
    pub exclude: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub ratio: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { ratio: 0.8, seed: 42 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectConfig {
    pub min_loc: usize,
    pub sample_size: usize,
    pub seed: u64,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig {
            min_loc: 10,
            sample_size: 100,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub strategies: Vec<String>,
    /// "on", "off", or "both".
    pub masked: String,
    /// "mock", "http", or "replay".
    pub provider: String,
    pub model: String,
    pub concurrency: usize,
    pub max_tokens: u32,
    pub temperature: f64,
    pub timeout_ms: u64,
    pub retries: u32,
    pub exemplars: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            strategies: vec!["all".into()],
            masked: "off".into(),
            provider: "mock".into(),
            model: "mock".into(),
            concurrency: 4,
            max_tokens: 256,
            temperature: 0.0,
            timeout_ms: 60_000,
            retries: 2,
            exemplars: 3,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointConfig {
    pub url: String,
    /// Name of the environment variable holding the bearer token.
    pub auth_env: String,
    pub model: String,
    /// "chat" or "completion" (LLM endpoint only).
    pub style: String,
    pub response_path: String,
}

/// Replace `${VAR}` with the variable's value; unset variables are a
/// configuration error so missing secrets fail fast.
pub fn interpolate_env(text: &str) -> Result<String> {
    let mut out = String::with_capacity(text.len());
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'$' && i + 1 < bytes.len() && bytes[i + 1] == b'{' {
            let close = text[i..]
                .find('}')
                .ok_or_else(|| Error::Config(format!("unclosed ${{ in config near byte {i}")))?;
            let name = &text[i + 2..i + close];
            let value = std::env::var(name)
                .map_err(|_| Error::Config(format!("environment variable {name} is not set")))?;
            out.push_str(&value);
            i += close + 1;
        } else {
            let c = text[i..].chars().next().unwrap();
            out.push(c);
            i += c.len_utf8();
        }
    }
    Ok(out)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let raw = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let interpolated = interpolate_env(&raw)?;
        let config: RunConfig = toml::from_str(&interpolated)
            .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        for name in &self.run.strategies {
            if name != "all" && crate::prompt::PromptStrategy::parse(name).is_none() {
                return Err(Error::Config(format!("unknown strategy {name:?}")));
            }
        }
        if !["on", "off", "both"].contains(&self.run.masked.as_str()) {
            return Err(Error::Config(format!(
                "masked must be on, off, or both; got {:?}",
                self.run.masked
            )));
        }
        if !["mock", "http", "replay"].contains(&self.run.provider.as_str()) {
            return Err(Error::Config(format!(
                "provider must be mock, http, or replay; got {:?}",
                self.run.provider
            )));
        }
        if !(self.split.ratio > 0.0 && self.split.ratio < 1.0) {
            return Err(Error::Config("split.ratio must be in (0,1)".into()));
        }
        Ok(())
    }
}

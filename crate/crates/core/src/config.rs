//! Layered settings: built-in defaults, then a TOML file, then a task preset,
//! then explicit overrides (command-line flags).

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::chunker::LanguageSpec;
use crate::error::{Error, Result};
use crate::pipeline::CompressionConfig;
use crate::scorer::{CachedScorer, HttpBackend, HttpConfig, MockBackend, ScorerBackend};
use crate::select::PreserveMode;
use crate::text::TokenCount;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Completion,
    Summarization,
    Repoqa,
}

impl Preset {
    /// `(B, R_fine, beta)`.
    pub fn values(self) -> (usize, f64, f64) {
        match self {
            Preset::Completion => (2000, 0.8, 0.5),
            Preset::Summarization => (5000, 0.3, 0.5),
            Preset::Repoqa => (2000, 1.0, 0.5),
        }
    }

    fn apply(self, c: &mut CompressionConfig) {
        let (b, r, beta) = self.values();
        c.budget = TokenCount(b);
        c.fine_ratio = r;
        c.beta = beta;
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "completion" => Ok(Preset::Completion),
            "summarization" => Ok(Preset::Summarization),
            "repoqa" => Ok(Preset::Repoqa),
            _ => Err(Error::ConfigInvalid(format!("unknown preset `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Mock,
    Http,
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mock" => Ok(BackendKind::Mock),
            "http" => Ok(BackendKind::Http),
            _ => Err(Error::ConfigInvalid(format!("unknown backend `{s}`"))),
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Mock => "mock",
            BackendKind::Http => "http",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint: Option<String>,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub auth_env: Option<String>,
    pub timeout_secs: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Mock,
            endpoint: None,
            model: "default".into(),
            auth_env: None,
            timeout_secs: 60,
        }
    }
}

impl BackendConfig {
    pub fn build(&self) -> Result<Box<dyn ScorerBackend>> {
        match self.kind {
            BackendKind::Mock => Ok(Box::new(MockBackend::new())),
            BackendKind::Http => {
                let endpoint = self
                    .endpoint
                    .clone()
                    .ok_or_else(|| Error::ConfigInvalid("http backend needs an endpoint".into()))?;
                let api_key = match &self.auth_env {
                    Some(var) => Some(
                        std::env::var(var)
                            .map_err(|_| Error::ConfigInvalid(format!("environment variable `{var}` is not set")))?,
                    ),
                    None => None,
                };
                Ok(Box::new(CachedScorer::new(HttpBackend::new(HttpConfig {
                    endpoint,
                    model: self.model.clone(),
                    api_key,
                    timeout: Duration::from_secs(self.timeout_secs),
                }))))
            }
        }
    }
}

/// Everything a run needs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub compression: CompressionConfig,
    pub backend: BackendConfig,
}

/// Values set explicitly on the command line; `None` leaves the lower layer alone.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub budget: Option<usize>,
    pub fine_ratio: Option<f64>,
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
    pub small_lines: Option<usize>,
    pub language: Option<LanguageSpec>,
    pub no_placeholders: bool,
    pub preserve: Option<PreserveMode>,
    pub backend: Option<BackendKind>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub auth_env: Option<String>,
}

impl Settings {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn layered(file: Option<&Path>, preset: Option<Preset>, overrides: &Overrides) -> Result<Self> {
        let base = match file {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        base.with(preset, overrides)
    }

    pub fn with(mut self, preset: Option<Preset>, o: &Overrides) -> Result<Self> {
        let c = &mut self.compression;
        if let Some(p) = preset {
            p.apply(c);
        }
        if let Some(v) = o.budget {
            c.budget = TokenCount(v);
        }
        if let Some(v) = o.fine_ratio {
            c.fine_ratio = v;
        }
        if let Some(v) = o.beta {
            c.beta = v;
        }
        if let Some(v) = o.alpha {
            c.alpha = v;
        }
        if let Some(v) = o.small_lines {
            c.small_lines = v;
        }
        if let Some(v) = o.language {
            c.language = v;
        }
        if o.no_placeholders {
            c.placeholders = false;
        }
        if let Some(v) = o.preserve {
            c.preserve = v;
        }
        let b = &mut self.backend;
        if let Some(v) = o.backend {
            b.kind = v;
        }
        if let Some(v) = &o.endpoint {
            b.endpoint = Some(v.clone());
        }
        if let Some(v) = &o.model {
            b.model = v.clone();
        }
        if let Some(v) = &o.auth_env {
            b.auth_env = Some(v.clone());
        }
        self.compression.validate()?;
        Ok(self)
    }
}

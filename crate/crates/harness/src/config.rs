//! Experiment configuration (TOML). Relative paths resolve against the
//! directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::{Method, DEFAULT_REVIEWERS};
use crate::runner::{default_runner_cmd, DEFAULT_TIMEOUT_S};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Live,
    Record,
    Replay,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunnerConfig {
    /// Argument template with `{mode}` and `{file}` placeholders.
    #[serde(default = "default_runner_cmd")]
    pub cmd: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    #[serde(default)]
    pub keep_workdirs: bool,
}

impl Default for RunnerConfig {
    fn default() -> Self {
        Self { cmd: default_runner_cmd(), timeout_s: DEFAULT_TIMEOUT_S, keep_workdirs: false }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientConfig {
    #[serde(default = "default_endpoint")]
    pub endpoint: String,
    /// Name of the environment variable holding the API key.
    #[serde(default = "default_key_var")]
    pub api_key_env: String,
    #[serde(default = "default_fixtures")]
    pub fixtures: PathBuf,
    #[serde(default = "default_rpm")]
    pub requests_per_minute: u32,
}

impl Default for ClientConfig {
    fn default() -> Self {
        Self {
            endpoint: default_endpoint(),
            api_key_env: default_key_var(),
            fixtures: default_fixtures(),
            requests_per_minute: default_rpm(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub corpus: PathBuf,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    pub models: Vec<String>,
    pub methods: Vec<Method>,
    /// Problem ids to include; empty means the whole corpus.
    #[serde(default)]
    pub problems: Vec<String>,
    #[serde(default = "default_runs")]
    pub runs: u32,
    #[serde(default)]
    pub temperature: f64,
    /// Required to run with a temperature other than 0.
    #[serde(default)]
    pub allow_nonzero_temperature: bool,
    #[serde(default)]
    pub max_tokens: Option<u32>,
    #[serde(default = "default_reviewers")]
    pub reviewers: usize,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub runner: RunnerConfig,
    #[serde(default)]
    pub client: ClientConfig,
}

fn default_timeout() -> f64 {
    DEFAULT_TIMEOUT_S
}
fn default_endpoint() -> String {
    "https://api.openai.com/v1/chat/completions".into()
}
fn default_key_var() -> String {
    "OPENAI_API_KEY".into()
}
fn default_fixtures() -> PathBuf {
    "fixtures".into()
}
fn default_rpm() -> u32 {
    60
}
fn default_output() -> PathBuf {
    "runs".into()
}
fn default_runs() -> u32 {
    10
}
fn default_reviewers() -> usize {
    DEFAULT_REVIEWERS
}
fn default_workers() -> usize {
    4
}
fn default_mode() -> Mode {
    Mode::Replay
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: base.to_path_buf(), message: e.to_string() })?;
        for p in [&mut cfg.corpus, &mut cfg.output_dir, &mut cfg.client.fixtures] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse { path: path.to_path_buf(), message },
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name.starts_with('.') {
            return bad("name must be a plain directory name");
        }
        if self.models.is_empty() || self.models.iter().any(|m| m.is_empty()) {
            return bad("models must list at least one non-empty model id");
        }
        if self.methods.is_empty() {
            return bad("methods must not be empty");
        }
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if self.temperature != 0.0 && !self.allow_nonzero_temperature {
            return bad("temperature must be 0 unless allow_nonzero_temperature is set");
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return bad("temperature must lie in [0, 2]");
        }
        if self.reviewers == 0 {
            return bad("reviewers must be at least 1");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if self.runner.cmd.is_empty() {
            return bad("runner.cmd is empty");
        }
        if !self.runner.cmd.iter().any(|a| a.contains("{file}")) {
            return bad("runner.cmd needs a {file} placeholder");
        }
        if !(self.runner.timeout_s > 0.0 && self.runner.timeout_s.is_finite()) {
            return bad("runner.timeout_s must be positive");
        }
        Ok(())
    }

    /// Where this experiment's records, transcripts and reports live.
    pub fn experiment_dir(&self) -> PathBuf {
        self.output_dir.join(&self.name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"
corpus = "corpus"
models = ["m"]
methods = ["standard_s", "agentic"]
"#;

    #[test]
    fn defaults_and_relative_paths() {
        let cfg = ExperimentConfig::from_toml(MINIMAL, Path::new("/base")).unwrap();
        assert_eq!(cfg.corpus, Path::new("/base/corpus"));
        assert_eq!(cfg.client.fixtures, Path::new("/base/fixtures"));
        assert_eq!(cfg.experiment_dir(), Path::new("/base/runs/t"));
        assert_eq!((cfg.runs, cfg.reviewers, cfg.workers, cfg.temperature), (10, 4, 4, 0.0));
        assert_eq!(cfg.methods, [Method::StandardS, Method::Agentic]);
        assert_eq!(cfg.mode, Mode::Replay);
        assert_eq!(cfg.runner.timeout_s, 60.0);
    }

    #[test]
    fn rejects_invalid() {
        let with = |extra: &str| ExperimentConfig::from_toml(&format!("{MINIMAL}{extra}"), Path::new("/b"));
        assert!(with("runs = 0").is_err());
        assert!(with("temperature = 0.5").is_err());
        assert!(with("temperature = 0.5\nallow_nonzero_temperature = true").is_ok());
        assert!(with("[runner]\ncmd = []").is_err());
        assert!(with("[runner]\ncmd = [\"python3\"]").is_err());
        assert!(with("bogus = 1").is_err());
        let bad_method = MINIMAL.replace("agentic", "few_shot");
        assert!(ExperimentConfig::from_toml(&bad_method, Path::new("/b")).is_err());
    }
}

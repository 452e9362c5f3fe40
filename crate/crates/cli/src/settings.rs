//! Layered configuration: defaults, then the key=value config file, then
//! command-line flags.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Result;
use colcast::gateway::{BackendConfig, BackendMode};
use colcast::join::MatchMode;
use colcast::pipeline::RunConfig;
use colcast::prompts::PromptCatalog;

use crate::{GlobalArgs, MatchArgs};

/// Configuration-shaped failure; exits with code 3.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn config_err<T>(message: impl Into<String>) -> Result<T> {
    Err(ConfigError(message.into()).into())
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub backend_mode: String,
    pub fixtures: PathBuf,
    pub model: String,
    pub endpoint: String,
    pub api_key_env: String,
    pub seed: u64,
    pub n_examples: usize,
    pub out: PathBuf,
    pub catalog_path: Option<PathBuf>,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub max_calls: Option<u64>,
    pub concurrency: usize,
    pub budget: u64,
    /// Match mode from the config file; per-command flags override.
    pub match_mode: Option<String>,
    pub max_distance: Option<f64>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            backend_mode: "replay".into(),
            fixtures: PathBuf::from("fixtures"),
            model: "gpt-4o".into(),
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            seed: 0,
            n_examples: 5,
            out: PathBuf::from("out"),
            catalog_path: None,
            timeout_secs: 60,
            max_retries: 3,
            max_calls: None,
            concurrency: 8,
            budget: 10_000,
            match_mode: None,
            max_distance: None,
        }
    }
}

impl Settings {
    pub fn resolve(global: &GlobalArgs) -> Result<Settings> {
        let mut settings = Settings::default();
        if let Some(path) = &global.config {
            settings.apply_file(path)?;
        }
        settings.apply_flags(global);
        Ok(settings)
    }

    fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = match std::fs::read_to_string(path) {
            Ok(text) => text,
            Err(err) => {
                return config_err(format!("cannot read config {}: {err}", path.display()))
            }
        };
        let mut pairs = HashMap::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return config_err(format!(
                    "config line {} is not key=value: {line:?}",
                    line_no + 1
                ));
            };
            pairs.insert(key.trim().to_string(), value.trim().to_string());
        }

        for (key, value) in pairs {
            match key.as_str() {
                "backend" => self.backend_mode = value,
                "fixtures" => self.fixtures = PathBuf::from(value),
                "model" => self.model = value,
                "endpoint" => self.endpoint = value,
                "api_key_env" => self.api_key_env = value,
                "seed" => self.seed = parse(&key, &value)?,
                "n_examples" => self.n_examples = parse(&key, &value)?,
                "out" => self.out = PathBuf::from(value),
                "catalog" => self.catalog_path = Some(PathBuf::from(value)),
                "timeout_secs" => self.timeout_secs = parse(&key, &value)?,
                "max_retries" => self.max_retries = parse(&key, &value)?,
                "max_calls" => self.max_calls = Some(parse(&key, &value)?),
                "concurrency" => self.concurrency = parse(&key, &value)?,
                "budget" => self.budget = parse(&key, &value)?,
                "match" => self.match_mode = Some(value),
                "max_distance" => self.max_distance = Some(parse(&key, &value)?),
                other => return config_err(format!("unknown config key {other:?}")),
            }
        }
        Ok(())
    }

    fn apply_flags(&mut self, global: &GlobalArgs) {
        let GlobalArgs {
            config: _,
            backend,
            fixtures,
            model,
            endpoint,
            api_key_env,
            seed,
            n_examples,
            out,
            catalog,
            timeout_secs,
            max_retries,
            max_calls,
            concurrency,
            budget,
        } = global;
        if let Some(v) = backend {
            self.backend_mode = v.clone();
        }
        if let Some(v) = fixtures {
            self.fixtures = v.clone();
        }
        if let Some(v) = model {
            self.model = v.clone();
        }
        if let Some(v) = endpoint {
            self.endpoint = v.clone();
        }
        if let Some(v) = api_key_env {
            self.api_key_env = v.clone();
        }
        if let Some(v) = seed {
            self.seed = *v;
        }
        if let Some(v) = n_examples {
            self.n_examples = *v;
        }
        if let Some(v) = out {
            self.out = v.clone();
        }
        if let Some(v) = catalog {
            self.catalog_path = Some(v.clone());
        }
        if let Some(v) = timeout_secs {
            self.timeout_secs = *v;
        }
        if let Some(v) = max_retries {
            self.max_retries = *v;
        }
        if let Some(v) = max_calls {
            self.max_calls = Some(*v);
        }
        if let Some(v) = concurrency {
            self.concurrency = *v;
        }
        if let Some(v) = budget {
            self.budget = *v;
        }
    }

    pub fn backend(&self) -> Result<BackendConfig> {
        let mode = match self.backend_mode.as_str() {
            "http" => BackendMode::Http,
            "replay" => BackendMode::Replay,
            "record" => BackendMode::Record,
            other => return config_err(format!("unknown backend mode {other:?}")),
        };
        let config = BackendConfig {
            mode,
            endpoint: self.endpoint.clone(),
            model_name: self.model.clone(),
            api_key_env: self.api_key_env.clone(),
            fixture_dir: Some(self.fixtures.clone()),
            timeout: Duration::from_secs(self.timeout_secs),
            max_retries: self.max_retries,
            backoff: Duration::from_millis(500),
            max_total_calls: self.max_calls,
        };
        if let Err(err) = config.validate() {
            return config_err(err.to_string());
        }
        Ok(config)
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        Ok(RunConfig {
            backend: self.backend()?,
            n_examples: self.n_examples,
            seed: self.seed,
            match_mode: self.parse_match(None, None)?,
            class_override: None,
            limits: Default::default(),
            output_dir: self.out.clone(),
            lookup_budget: self.budget,
            concurrency: self.concurrency.max(1),
            guardrail_max_aned: None,
            strict_examples: false,
        })
    }

    /// Match mode with per-command flags taking precedence over the file.
    pub fn match_mode(&self, args: &MatchArgs) -> Result<MatchMode> {
        if args.min_distance.is_some() {
            eprintln!(
                "note: --min-distance is reserved for one-to-many joins and is not applied yet"
            );
        }
        self.parse_match(args.match_mode.as_deref(), args.max_distance)
    }

    fn parse_match(&self, flag: Option<&str>, max_flag: Option<f64>) -> Result<MatchMode> {
        let name = flag.or(self.match_mode.as_deref()).unwrap_or("edit");
        let max_distance = max_flag.or(self.max_distance);
        match name {
            "exact" => Ok(MatchMode::Exact),
            "edit" => Ok(MatchMode::EditDistance { max_distance }),
            "numeric" => Ok(MatchMode::NumericDistance { max_distance }),
            other => config_err(format!("unknown match mode {other:?} (exact|edit|numeric)")),
        }
    }

    pub fn catalog(&self) -> Result<PromptCatalog> {
        match &self.catalog_path {
            Some(path) => match PromptCatalog::from_path(path) {
                Ok(catalog) => Ok(catalog),
                Err(err) => config_err(err.to_string()),
            },
            None => Ok(PromptCatalog::bundled().clone()),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    match value.parse() {
        Ok(v) => Ok(v),
        Err(_) => config_err(format!("config key {key} has invalid value {value:?}")),
    }
}

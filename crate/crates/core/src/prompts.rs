//! Prompt catalog: the templates behind every model-facing stage.
//!
//! Templates live in a TOML file so they can be tuned without touching
//! code; the bundled defaults are compiled in. Placeholders (`{data}`,
//! `{testcases}`, `{grammar}`, `{tag}`, `{value}`, `{diagnostics}`) are
//! substituted literally — there is no escaping, templates are trusted
//! input.

use std::path::Path;
use std::sync::OnceLock;

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("could not read catalog {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("could not parse catalog: {0}")]
    Parse(#[from] toml::de::Error),
}

#[derive(Debug, Clone, Deserialize)]
pub struct PromptTemplate {
    pub system: String,
    pub user: String,
}

impl PromptTemplate {
    /// Substitutes `{name}` placeholders in the user text.
    pub fn render(&self, substitutions: &[(&str, &str)]) -> (String, String) {
        let mut user = self.user.clone();
        for (name, value) in substitutions {
            user = user.replace(&format!("{{{name}}}"), value);
        }
        (self.system.clone(), user)
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct Fragments {
    /// Appended on the one re-ask after an unparsable class label.
    pub classify_reask: String,
    /// Appended on the one re-ask after an unparsable relationship tag.
    pub tag_reask: String,
    /// Appended with `{diagnostics}` on code-repair attempts.
    pub repair: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct PromptCatalog {
    pub classify: PromptTemplate,
    pub string_gen: PromptTemplate,
    pub rel_tag: PromptTemplate,
    pub algo_gen: PromptTemplate,
    pub type_detect: PromptTemplate,
    pub lookup: PromptTemplate,
    pub fragments: Fragments,
}

const DEFAULT_CATALOG_TOML: &str = include_str!("../prompts/default_catalog.toml");

impl PromptCatalog {
    /// The compiled-in default catalog.
    pub fn bundled() -> &'static PromptCatalog {
        static CATALOG: OnceLock<PromptCatalog> = OnceLock::new();
        CATALOG.get_or_init(|| {
            toml::from_str(DEFAULT_CATALOG_TOML).expect("bundled catalog must parse")
        })
    }

    pub fn from_path(path: &Path) -> Result<PromptCatalog, CatalogError> {
        let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(toml::from_str(&text)?)
    }
}

/// Character budget for serialized example data inside prompts. Sampling
/// uses a fixed seed so identical example sets always produce identical
/// prompts (and therefore identical fixture digests).
pub const PROMPT_DATA_BUDGET: usize = 8_000;
pub const PROMPT_DATA_SEED: u64 = 0;

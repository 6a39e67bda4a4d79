use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::atlas::SearchConfig;
use crate::field::MagneticField;
use crate::potential::{Potential, PotentialTerm};
use crate::trig::TrigPoly2;

pub const DEFAULT_OUTPUT_DIR: &str = "magtorus-out";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("config error at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("config error: {0}")]
    Invalid(String),
}

/// A run description as read from JSON. Every optional key has an explicit
/// default that appears in the resolved copy written next to the results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Number of particles; the torus has dimension `2N`.
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(deserialize_with = "super::real::deserialize")]
    pub tau: f64,
    /// One field strength `a_j` per particle.
    pub field: Vec<TrigPoly2>,
    #[serde(default)]
    pub potential: Vec<PotentialTerm>,
    /// Homotopy classes to search; defaults to the contractible class.
    #[serde(default)]
    pub classes: Vec<Vec<i64>>,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
}

fn default_output_dir() -> String {
    DEFAULT_OUTPUT_DIR.to_string()
}

/// A validated configuration with its field and potential built.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub field: MagneticField,
    pub potential: Potential,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::Parse { path, message: e.into_inner().to_string() }
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    /// Fills defaults and checks dimensions.
    pub fn resolve(mut self) -> Result<Resolved, ConfigError> {
        let dim = 2 * self.n;
        if self.n == 0 {
            return Err(ConfigError::Invalid("`N` must be at least 1".into()));
        }
        if self.field.len() != self.n {
            return Err(ConfigError::Invalid(format!(
                "`field` lists {} factors but `N` is {}",
                self.field.len(),
                self.n
            )));
        }
        if !(self.tau > 0.0) {
            return Err(ConfigError::Invalid(format!("`tau` must be positive, got {}", self.tau)));
        }
        if self.classes.is_empty() {
            self.classes.push(vec![0; dim]);
        }
        for (i, h) in self.classes.iter().enumerate() {
            if h.len() != dim {
                return Err(ConfigError::Invalid(format!("`classes[{i}]` has {} entries, expected {dim}", h.len())));
            }
        }
        let s = &self.search;
        if s.budget == 0 || !(s.orbit_tol > 0.0) {
            return Err(ConfigError::Invalid("`search.budget` and `search.orbit_tol` must be positive".into()));
        }
        if !(1e-13..=1e-6).contains(&s.integrator_tol) {
            return Err(ConfigError::Invalid("`search.integrator_tol` must lie in [1e-13, 1e-6]".into()));
        }
        let field =
            MagneticField::new(self.field.clone()).map_err(|e| ConfigError::Invalid(format!("`field`: {e}")))?;
        let potential = Potential::new(dim, self.tau, self.potential.clone())
            .map_err(|e| ConfigError::Invalid(format!("`potential`: {e}")))?;
        Ok(Resolved { config: self, field, potential })
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use steerdial_core::commonsense::Relation;
use steerdial_core::corpus::{KnowledgeScope, StrategySet};
use steerdial_core::decoding::DecodingConfig;
use steerdial_core::lm::TrainingConfig;
use steerdial_core::nn::Schedule;
use steerdial_core::strategy::StrategySourceKind;

use crate::failure::Failure;

/// Everything a run needs. Relative paths are resolved against the
/// directory holding the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataPaths,
    #[serde(default)]
    pub strategies: StrategySet,
    #[serde(default = "one")]
    pub min_count: usize,
    #[serde(default)]
    pub commonsense: CommonsenseConfig,
    #[serde(default)]
    pub lm: LmShape,
    #[serde(default)]
    pub classifier: RecurrentShape,
    #[serde(default)]
    pub discriminator: RecurrentShape,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub decoding: DecodingConfig,
    #[serde(default)]
    pub generation: GenerationConfig,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub train: PathBuf,
    pub dev: PathBuf,
    pub test: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    Cache,
    Remote {
        endpoint: String,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
    },
}

fn default_timeout_ms() -> u64 {
    10_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommonsenseConfig {
    pub enabled: bool,
    pub backend: BackendConfig,
    pub cache: PathBuf,
    pub relations: Vec<Relation>,
    pub scope: KnowledgeScope,
}

impl Default for CommonsenseConfig {
    fn default() -> Self {
        CommonsenseConfig {
            enabled: false,
            backend: BackendConfig::Cache,
            cache: PathBuf::from("entailments.jsonl"),
            relations: Relation::ALL.to_vec(),
            scope: KnowledgeScope::LatestSeeker,
        }
    }
}

impl CommonsenseConfig {
    pub fn timeout(&self) -> Option<Duration> {
        match self.backend {
            BackendConfig::Remote { timeout_ms, .. } => Some(Duration::from_millis(timeout_ms)),
            BackendConfig::Cache => None,
        }
    }
}

/// Language model sizes; vocabulary and strategy counts come from the prepared data.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmShape {
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub encoder_depth: usize,
    pub decoder_depth: usize,
}

impl Default for LmShape {
    fn default() -> Self {
        LmShape {
            embedding_dim: 32,
            hidden_dim: 32,
            encoder_depth: 1,
            decoder_depth: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecurrentShape {
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub depth: usize,
}

impl Default for RecurrentShape {
    fn default() -> Self {
        RecurrentShape {
            embedding_dim: 16,
            hidden_dim: 16,
            depth: 1,
        }
    }
}

/// Shuffle seeds inside these schedules are replaced by seeds derived from
/// the run seed.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    pub lm: TrainingConfig,
    pub classifier: Schedule,
    pub discriminator: Schedule,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    /// Strategy source used when `--strategy-source` is absent.
    pub strategy_source: StrategySourceKind,
    /// Language model checkpoint (`lm` or `lm_joint`) used with the
    /// classifier and oracle sources; the joint source always uses `lm_joint`.
    pub lm: LmTarget,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            strategy_source: StrategySourceKind::Joint,
            lm: LmTarget::Lm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LmTarget {
    Lm,
    LmJoint,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Reads, resolves and validates a config file.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Failure::usage(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve(base);
        if let Some(seed) = overrides.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &overrides.out {
            cfg.output_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        for p in [
            &mut self.data.train,
            &mut self.data.dev,
            &mut self.data.test,
            &mut self.commonsense.cache,
            &mut self.output_dir,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    fn validate(&self) -> Result<(), Failure> {
        if self.min_count == 0 {
            return Err(Failure::usage("min_count must be at least 1"));
        }
        let dims = [
            ("lm.embedding_dim", self.lm.embedding_dim),
            ("lm.hidden_dim", self.lm.hidden_dim),
            ("lm.encoder_depth", self.lm.encoder_depth),
            ("lm.decoder_depth", self.lm.decoder_depth),
            ("classifier.embedding_dim", self.classifier.embedding_dim),
            ("classifier.hidden_dim", self.classifier.hidden_dim),
            ("classifier.depth", self.classifier.depth),
            (
                "discriminator.embedding_dim",
                self.discriminator.embedding_dim,
            ),
            ("discriminator.hidden_dim", self.discriminator.hidden_dim),
            ("discriminator.depth", self.discriminator.depth),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Failure::usage(format!("{name} must be at least 1")));
        }
        self.training.lm.validate()?;
        self.training.classifier.validate()?;
        self.training.discriminator.validate()?;
        self.decoding.validate()?;
        Ok(())
    }

    /// Fails with a data error when a referenced input file is absent.
    pub fn require_inputs(&self) -> Result<(), Failure> {
        let mut paths = vec![&self.data.train, &self.data.dev, &self.data.test];
        if self.commonsense.enabled && matches!(self.commonsense.backend, BackendConfig::Cache) {
            paths.push(&self.commonsense.cache);
        }
        match paths.into_iter().find(|p| !p.is_file()) {
            Some(p) => Err(Failure::data(format!(
                "input file {} does not exist",
                p.display()
            ))),
            None => Ok(()),
        }
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }
}

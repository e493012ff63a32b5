use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agents::{default_pool, AgentKind, AgentSpec};
use crate::engine::Rules;
use crate::knowledge::KnowledgeMode;

use super::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TournamentConfig {
    pub games_per_pairing: u64,
    pub base_seed: u64,
    pub rules: Rules,
    pub knowledge_mode: KnowledgeMode,
    /// TOML file with `[[agents]]` entries, used when `agents` is empty.
    pub pool_file: Option<PathBuf>,
    pub agents: Vec<AgentSpec>,
}

impl Default for TournamentConfig {
    fn default() -> Self {
        TournamentConfig {
            games_per_pairing: 125,
            base_seed: 0,
            rules: Rules::default(),
            knowledge_mode: KnowledgeMode::CardCounting,
            pool_file: None,
            agents: Vec::new(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PoolFile {
    agents: Vec<AgentSpec>,
}

/// Reads a pool file of `[[agents]]` tables and validates it.
pub fn load_pool(path: &Path) -> Result<Vec<AgentSpec>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let pool: PoolFile =
        toml::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    validate_pool(&pool.agents)?;
    Ok(pool.agents)
}

pub fn validate_pool(pool: &[AgentSpec]) -> Result<(), HarnessError> {
    if pool.is_empty() {
        return Err(HarnessError::Config("agent pool is empty".into()));
    }
    let mut names = BTreeSet::new();
    let mut kinds: BTreeMap<&str, AgentKind> = BTreeMap::new();
    for spec in pool {
        spec.validate().map_err(HarnessError::Config)?;
        if !names.insert(spec.name.as_str()) {
            return Err(HarnessError::Config(format!("duplicate agent name {}", spec.name)));
        }
        let kind = *kinds.entry(spec.algorithm()).or_insert(spec.kind);
        if kind != spec.kind {
            return Err(HarnessError::Config(format!(
                "algorithm {} mixes agent kinds {kind:?} and {:?}",
                spec.algorithm(),
                spec.kind
            )));
        }
    }
    Ok(())
}

impl TournamentConfig {
    pub fn from_toml(text: &str) -> Result<TournamentConfig, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Loads a config file; a relative `pool_file` is resolved against the
    /// config's directory.
    pub fn load(path: &Path) -> Result<TournamentConfig, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut cfg = TournamentConfig::from_toml(&text)?;
        if let (Some(pool), Some(dir)) = (cfg.pool_file.as_mut(), path.parent()) {
            if pool.is_relative() {
                *pool = dir.join(&*pool);
            }
        }
        Ok(cfg)
    }

    pub fn resolved_pool(&self) -> Result<Vec<AgentSpec>, HarnessError> {
        if self.games_per_pairing == 0 {
            return Err(HarnessError::Config("games_per_pairing must be at least 1".into()));
        }
        let pool = match (&self.agents[..], &self.pool_file) {
            ([], Some(path)) => load_pool(path)?,
            ([], None) => default_pool(),
            (agents, None) => agents.to_vec(),
            (_, Some(_)) => {
                return Err(HarnessError::Config("give either agents or pool_file, not both".into()));
            }
        };
        validate_pool(&pool)?;
        Ok(pool)
    }

    /// The same config with the pool written out inline, so it no longer
    /// depends on a pool file or on the default pool.
    pub fn resolved(&self) -> Result<TournamentConfig, HarnessError> {
        Ok(TournamentConfig { agents: self.resolved_pool()?, pool_file: None, ..self.clone() })
    }
}

#[derive(Serialize)]
struct HashedConfig<'a> {
    games_per_pairing: u64,
    base_seed: u64,
    rules: Rules,
    knowledge_mode: KnowledgeMode,
    pool: &'a [AgentSpec],
    shuffle: &'static str,
}

/// First 16 hex digits of the SHA-256 of the canonical config, with the
/// pool resolved.
pub fn config_hash(cfg: &TournamentConfig) -> String {
    let pool = cfg.resolved_pool().unwrap_or_else(|_| cfg.agents.clone());
    let canonical = HashedConfig {
        games_per_pairing: cfg.games_per_pairing,
        base_seed: cfg.base_seed,
        rules: cfg.rules,
        knowledge_mode: cfg.knowledge_mode,
        pool: &pool,
        shuffle: crate::rng::SHUFFLE_ALGORITHM,
    };
    let digest = Sha256::digest(serde_json::to_vec(&canonical).expect("config serializes"));
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

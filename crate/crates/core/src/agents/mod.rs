//! Agent policies: a uniform-random baseline, a ladder of rule bots, a
//! conventions bot, and an adapter for policies running out of process.

mod external;
mod ladder;
mod random;
mod smart;
pub mod assess;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Observation, Seat};
use crate::moves::Move;

pub use external::{
    serve_policy, ChildProcessTransport, ExternalPolicy, FnTransport, TcpTransport, TestDouble, Transport,
    PROTOCOL_VERSION,
};
pub use ladder::{LadderBot, LadderConfig, LadderRule};
pub use random::RandomBot;
pub use smart::{SmartBot, SmartConfig, SmartRule};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("external policy timed out after {0:?}")]
    Timeout(Duration),
    #[error("external policy disconnected")]
    Disconnected,
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("policy chose illegal action {action_id}")]
    IllegalMove { action_id: u8 },
    #[error("could not start policy: {0}")]
    Spawn(String),
}

/// A policy bound to one game at a time.
pub trait Agent: Send {
    /// Called before the first move of each game.
    fn begin_game(&mut self, _seat: Seat, _game_seed: u64) -> Result<(), AgentError> {
        Ok(())
    }

    /// Chooses a move for the observation's viewer, who is to act.
    fn act(&mut self, obs: &Observation) -> Result<Move, AgentError>;

    fn end_game(&mut self) {}
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Random,
    Simple,
    Value,
    Holmes,
    Smart,
    External,
}

impl AgentKind {
    /// Rule bots are deterministic and have no instance seed to vary.
    pub fn is_rule_based(self) -> bool {
        !matches!(self, AgentKind::Random | AgentKind::External)
    }
}

fn default_timeout_ms() -> u64 {
    5_000
}

/// Declarative description of one agent instance in a pool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    /// Unique instance name within the pool.
    pub name: String,
    /// Algorithm label that report rows are grouped by. Defaults to `name`.
    #[serde(default)]
    pub algorithm: Option<String>,
    pub kind: AgentKind,
    #[serde(default)]
    pub seed: u64,
    /// Risk threshold for holmes and smart.
    #[serde(default)]
    pub theta: Option<f64>,
    /// Program and arguments of an external policy talking over stdio.
    #[serde(default)]
    pub command: Option<Vec<String>>,
    /// `host:port` of an external policy talking over TCP.
    #[serde(default)]
    pub address: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

impl AgentSpec {
    pub fn new(name: &str, kind: AgentKind) -> AgentSpec {
        AgentSpec {
            name: name.to_string(),
            algorithm: None,
            kind,
            seed: 0,
            theta: None,
            command: None,
            address: None,
            timeout_ms: default_timeout_ms(),
        }
    }

    pub fn with_algorithm(mut self, algorithm: &str) -> AgentSpec {
        self.algorithm = Some(algorithm.to_string());
        self
    }

    pub fn with_seed(mut self, seed: u64) -> AgentSpec {
        self.seed = seed;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> AgentSpec {
        self.theta = Some(theta);
        self
    }

    pub fn algorithm(&self) -> &str {
        self.algorithm.as_deref().unwrap_or(&self.name)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.name.trim().is_empty() {
            return Err("agent name is empty".into());
        }
        if let Some(theta) = self.theta {
            if !(0.0..=1.0).contains(&theta) {
                return Err(format!("agent {}: theta {theta} outside [0, 1]", self.name));
            }
        }
        if self.kind == AgentKind::External && self.command.is_none() && self.address.is_none() {
            return Err(format!("external agent {} needs a command or an address", self.name));
        }
        if self.kind == AgentKind::External && self.timeout_ms == 0 {
            return Err(format!("external agent {} has a zero timeout", self.name));
        }
        Ok(())
    }

    /// Creates a fresh instance. External policies are connected here.
    pub fn build(&self) -> Result<Box<dyn Agent>, AgentError> {
        let timeout = Duration::from_millis(self.timeout_ms);
        Ok(match self.kind {
            AgentKind::Random => Box::new(RandomBot::new(self.seed)),
            AgentKind::Simple => Box::new(LadderBot::new(LadderConfig::simple())),
            AgentKind::Value => Box::new(LadderBot::new(LadderConfig::value())),
            AgentKind::Holmes => {
                Box::new(LadderBot::new(LadderConfig::holmes(self.theta.unwrap_or(ladder::DEFAULT_THETA))))
            }
            AgentKind::Smart => {
                let mut cfg = SmartConfig::default();
                if let Some(theta) = self.theta {
                    cfg.risk_theta = Some(theta);
                }
                Box::new(SmartBot::new(cfg))
            }
            AgentKind::External => {
                let transport: Box<dyn Transport> = match (&self.command, &self.address) {
                    (Some(cmd), _) => Box::new(ChildProcessTransport::spawn(cmd, timeout)?),
                    (None, Some(addr)) => Box::new(TcpTransport::connect(addr, timeout)?),
                    (None, None) => return Err(AgentError::Spawn("no command or address".into())),
                };
                Box::new(ExternalPolicy::new(transport)?)
            }
        })
    }
}

/// The default eight-instance pool.
pub fn default_pool() -> Vec<AgentSpec> {
    vec![
        AgentSpec::new("random-1", AgentKind::Random).with_algorithm("random").with_seed(1),
        AgentSpec::new("random-2", AgentKind::Random).with_algorithm("random").with_seed(2),
        AgentSpec::new("simple", AgentKind::Simple),
        AgentSpec::new("value", AgentKind::Value),
        AgentSpec::new("holmes", AgentKind::Holmes).with_theta(ladder::DEFAULT_THETA),
        AgentSpec::new("holmes-bold", AgentKind::Holmes).with_theta(0.5),
        AgentSpec::new("smart", AgentKind::Smart),
        AgentSpec::new("smart-bold", AgentKind::Smart).with_theta(0.5),
    ]
}

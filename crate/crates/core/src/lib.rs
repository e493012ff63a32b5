//! Two-player Hanabi: game engine, hint knowledge, rule-based agents, a
//! cross-play harness, behavioral metrics and regression analysis.

pub mod agents;
pub mod card;
pub mod engine;
pub mod harness;
pub mod knowledge;
pub mod metrics;
pub mod moves;
pub mod rng;
pub mod stats;

pub use card::{Card, Color, Identity, IdentitySet};
pub use engine::{Event, GameState, Observation, Rules, Seat, TerminalStatus};
pub use knowledge::{DominanceLabel, KnowledgeMode, KnowledgeState};
pub use moves::{ActionCategory, Hint, Move};

//! The 20 two-player move kinds and their canonical action ids.
//!
//! Ids: discard slots 0-4 -> 0-4, play slots 0-4 -> 5-9, color hints in
//! suit order -> 10-14, rank hints 1-5 -> 15-19.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::card::{Card, Color, HAND_SIZE};

pub const NUM_ACTIONS: usize = 20;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hint {
    Color(Color),
    Rank(u8),
}

impl Hint {
    pub fn matches(self, card: Card) -> bool {
        match self {
            Hint::Color(c) => card.color == c,
            Hint::Rank(r) => card.rank == r,
        }
    }
}

impl fmt::Display for Hint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hint::Color(c) => write!(f, "{c}"),
            Hint::Rank(r) => write!(f, "{r}s"),
        }
    }
}

/// A move by the seat to act. Slots index the actor's hand, 0 = oldest.
/// Hints always target the other seat.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Move {
    Play(u8),
    Discard(u8),
    HintColor(Color),
    HintRank(u8),
}

impl Move {
    pub fn action_id(self) -> u8 {
        match self {
            Move::Discard(slot) => slot,
            Move::Play(slot) => 5 + slot,
            Move::HintColor(c) => 10 + c.index() as u8,
            Move::HintRank(r) => 14 + r,
        }
    }

    pub fn from_action_id(id: u8) -> Option<Move> {
        match id {
            0..=4 => Some(Move::Discard(id)),
            5..=9 => Some(Move::Play(id - 5)),
            10..=14 => Color::from_index((id - 10) as usize).map(Move::HintColor),
            15..=19 => Some(Move::HintRank(id - 14)),
            _ => None,
        }
    }

    pub fn hint(self) -> Option<Hint> {
        match self {
            Move::HintColor(c) => Some(Hint::Color(c)),
            Move::HintRank(r) => Some(Hint::Rank(r)),
            _ => None,
        }
    }

    pub fn from_hint(hint: Hint) -> Move {
        match hint {
            Hint::Color(c) => Move::HintColor(c),
            Hint::Rank(r) => Move::HintRank(r),
        }
    }

    pub fn category(self) -> ActionCategory {
        match self {
            Move::Play(_) => ActionCategory::Play,
            Move::Discard(_) => ActionCategory::Discard,
            Move::HintColor(_) => ActionCategory::HintColor,
            Move::HintRank(_) => ActionCategory::HintRank,
        }
    }

    /// Structural validity independent of any game state.
    pub fn is_well_formed(self) -> bool {
        match self {
            Move::Play(s) | Move::Discard(s) => (s as usize) < HAND_SIZE,
            Move::HintRank(r) => (1..=5).contains(&r),
            Move::HintColor(_) => true,
        }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Move::Play(s) => write!(f, "play slot {s}"),
            Move::Discard(s) => write!(f, "discard slot {s}"),
            Move::HintColor(c) => write!(f, "hint {c}"),
            Move::HintRank(r) => write!(f, "hint {r}s"),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionCategory {
    Play,
    Discard,
    HintColor,
    HintRank,
}

impl ActionCategory {
    pub const ALL: [ActionCategory; 4] = [
        ActionCategory::Play,
        ActionCategory::Discard,
        ActionCategory::HintColor,
        ActionCategory::HintRank,
    ];

    pub fn of_action_id(id: u8) -> Option<ActionCategory> {
        Move::from_action_id(id).map(Move::category)
    }
}

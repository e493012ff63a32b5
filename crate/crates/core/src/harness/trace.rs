//! Game traces: one compact record per turn, enough to replay the game and
//! to compute every behavioral metric without the engine.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::card::Card;
use crate::engine::{Event, GameState, Observation, Rules, Seat, TerminalStatus};
use crate::knowledge::{is_known_playable, label_move, DominanceLabel, KnowledgeMode};
use crate::moves::{ActionCategory, Move};

pub const TRACE_SCHEMA: u32 = 1;

/// Features of the actor's situation at a decision point, packed into 25
/// bits for storage.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct DecisionContext {
    pub hint_tokens: u8,
    pub bombs_remaining: u8,
    pub deck_size: u8,
    pub fireworks_total: u8,
    /// Category of the partner's previous move, if any.
    pub last_partner_action: Option<ActionCategory>,
    pub partner_has_known_playable: bool,
    pub own_newest_just_hinted: bool,
    pub own_has_known_playable: bool,
    pub own_oldest_unhinted: bool,
    pub last_played_rank_one: bool,
}

fn category_code(c: Option<ActionCategory>) -> u32 {
    match c {
        None => 0,
        Some(ActionCategory::Play) => 1,
        Some(ActionCategory::Discard) => 2,
        Some(ActionCategory::HintColor) => 3,
        Some(ActionCategory::HintRank) => 4,
    }
}

fn category_from_code(code: u32) -> Option<ActionCategory> {
    match code {
        1 => Some(ActionCategory::Play),
        2 => Some(ActionCategory::Discard),
        3 => Some(ActionCategory::HintColor),
        4 => Some(ActionCategory::HintRank),
        _ => None,
    }
}

impl DecisionContext {
    // bit layout, low to high: tokens 4, bombs 2, deck 6, fireworks 5,
    // partner action 3, then five flags
    pub fn pack(&self) -> u32 {
        let flags = [
            self.partner_has_known_playable,
            self.own_newest_just_hinted,
            self.own_has_known_playable,
            self.own_oldest_unhinted,
            self.last_played_rank_one,
        ];
        let mut bits = self.hint_tokens as u32 & 0xF;
        bits |= (self.bombs_remaining as u32 & 0x3) << 4;
        bits |= (self.deck_size as u32 & 0x3F) << 6;
        bits |= (self.fireworks_total as u32 & 0x1F) << 12;
        bits |= category_code(self.last_partner_action) << 17;
        for (i, &f) in flags.iter().enumerate() {
            bits |= (f as u32) << (20 + i);
        }
        bits
    }

    pub fn unpack(bits: u32) -> DecisionContext {
        let flag = |i: u32| bits >> (20 + i) & 1 == 1;
        DecisionContext {
            hint_tokens: (bits & 0xF) as u8,
            bombs_remaining: (bits >> 4 & 0x3) as u8,
            deck_size: (bits >> 6 & 0x3F) as u8,
            fireworks_total: (bits >> 12 & 0x1F) as u8,
            last_partner_action: category_from_code(bits >> 17 & 0x7),
            partner_has_known_playable: flag(0),
            own_newest_just_hinted: flag(1),
            own_has_known_playable: flag(2),
            own_oldest_unhinted: flag(3),
            last_played_rank_one: flag(4),
        }
    }

    /// Context of the player to act. `last_played` is the most recent card
    /// played this game, successful or not.
    pub fn from_observation(obs: &Observation, last_played: Option<Card>, mode: KnowledgeMode) -> DecisionContext {
        let own = obs.own_knowledge_in(mode);
        let partner = match mode {
            KnowledgeMode::HintsOnly => obs.partner_knowledge.clone(),
            KnowledgeMode::CardCounting => obs.partner_public_knowledge(),
        };
        let any_playable = |k: &crate::knowledge::KnowledgeState| {
            k.slots.iter().any(|s| is_known_playable(s.candidates, &obs.fireworks))
        };
        let last_partner_action = obs
            .last_event
            .as_ref()
            .filter(|e| e.seat() != obs.viewer)
            .map(|e| e.to_move().category());
        let newest = obs.own_hand_len().checked_sub(1);
        let own_newest_just_hinted = match (obs.hint_just_received(), newest) {
            (Some((_, touched)), Some(n)) => touched.contains(&(n as u8)),
            _ => false,
        };
        DecisionContext {
            hint_tokens: obs.hint_tokens,
            bombs_remaining: obs.bombs_remaining,
            deck_size: obs.deck_size as u8,
            fireworks_total: obs.fireworks.score(),
            last_partner_action,
            partner_has_known_playable: any_playable(&partner),
            own_newest_just_hinted,
            own_has_known_playable: any_playable(&own),
            own_oldest_unhinted: obs.own_knowledge.slots.first().is_some_and(|s| !s.is_hinted()),
            last_played_rank_one: last_played.is_some_and(|c| c.rank == 1),
        }
    }
}

/// One turn: who acted, what they did, its dominance label and their
/// decision context.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct TurnRecord {
    pub seat: u8,
    pub action_id: u8,
    pub label: DominanceLabel,
    pub context: DecisionContext,
}

impl Serialize for TurnRecord {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (self.seat, self.action_id, self.label.code(), self.context.pack()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for TurnRecord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (seat, action_id, label, ctx) = <(u8, u8, u8, u32)>::deserialize(d)?;
        let label = DominanceLabel::from_code(label)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown dominance label {label}")))?;
        if seat > 1 || action_id >= 20 {
            return Err(serde::de::Error::custom("turn record out of range"));
        }
        Ok(TurnRecord { seat, action_id, label, context: DecisionContext::unpack(ctx) })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentRef {
    pub name: String,
    pub algorithm: String,
    pub instance_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameTrace {
    pub schema: u32,
    pub game_id: u64,
    pub deck_seed: u64,
    /// Agent in seat 0 and seat 1; seat 0 moves first.
    pub seats: [AgentRef; 2],
    pub rules: Rules,
    pub knowledge_mode: KnowledgeMode,
    pub turns: Vec<TurnRecord>,
    pub score: u8,
    pub termination: TerminalStatus,
    pub turns_per_seat: [u32; 2],
}

impl GameTrace {
    /// Seats occupied by `algorithm` (both for self-play).
    pub fn seats_of(&self, algorithm: &str) -> Vec<Seat> {
        (0..2).filter(|&s| self.seats[s].algorithm == algorithm).collect()
    }

    pub fn is_self_play(&self) -> bool {
        self.seats[0].name == self.seats[1].name
    }

    pub fn check_turn_counts(&self) -> bool {
        (0..2).all(|seat| {
            self.turns.iter().filter(|t| t.seat as usize == seat).count() as u32 == self.turns_per_seat[seat]
        })
    }
}

/// Computes labels and contexts as a game unfolds.
#[derive(Clone, Debug)]
pub struct TurnAnnotator {
    mode: KnowledgeMode,
    last_played: Option<Card>,
}

impl TurnAnnotator {
    pub fn new(mode: KnowledgeMode) -> TurnAnnotator {
        TurnAnnotator { mode, last_played: None }
    }

    /// Annotates `mv` by the player to act in `state`, before it is applied.
    pub fn annotate(&self, state: &GameState, mv: Move) -> TurnRecord {
        let seat = state.current_seat();
        let obs = state.observation(seat);
        let own = obs.own_knowledge_in(self.mode);
        TurnRecord {
            seat: seat as u8,
            action_id: mv.action_id(),
            label: label_move(&own, mv, &obs.fireworks),
            context: DecisionContext::from_observation(&obs, self.last_played, self.mode),
        }
    }

    pub fn after(&mut self, event: &Event) {
        if let Event::Play { card, .. } = event {
            self.last_played = Some(*card);
        }
    }
}

/// Replays a trace through the engine and checks that every action was
/// legal for the recorded seat and that the outcome matches.
pub fn replay(trace: &GameTrace) -> Result<GameState, String> {
    let mut state = GameState::with_rules(trace.deck_seed, trace.rules);
    for (i, turn) in trace.turns.iter().enumerate() {
        if state.current_seat() != turn.seat as usize {
            return Err(format!("turn {i}: recorded seat {} but seat {} to act", turn.seat, state.current_seat()));
        }
        let mv = Move::from_action_id(turn.action_id).ok_or_else(|| format!("turn {i}: bad action id"))?;
        state.apply_move(mv).map_err(|e| format!("turn {i}: {e}"))?;
    }
    if !state.is_terminal() {
        return Err("trace ends before the game does".into());
    }
    if state.score() != trace.score {
        return Err(format!("replayed score {} but recorded {}", state.score(), trace.score));
    }
    if state.status() != trace.termination {
        return Err(format!("replayed termination {:?} but recorded {:?}", state.status(), trace.termination));
    }
    Ok(state)
}

/// Recomputes labels and contexts of a trace under another knowledge mode.
pub fn relabel(trace: &GameTrace, mode: KnowledgeMode) -> Result<Vec<TurnRecord>, String> {
    let mut state = GameState::with_rules(trace.deck_seed, trace.rules);
    let mut annotator = TurnAnnotator::new(mode);
    let mut out = Vec::with_capacity(trace.turns.len());
    for turn in &trace.turns {
        let mv = Move::from_action_id(turn.action_id).ok_or("bad action id")?;
        out.push(annotator.annotate(&state, mv));
        let event = state.apply_move(mv).map_err(|e| e.to_string())?;
        annotator.after(&event);
    }
    Ok(out)
}

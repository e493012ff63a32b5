//! Two-player Hanabi rules.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::card::{
    standard_deck, Card, CardCounts, Fireworks, DECK_SIZE, HAND_SIZE, MAX_BOMBS, MAX_HINT_TOKENS,
};
use crate::knowledge::{visible_counts, KnowledgeMode, KnowledgeState};
use crate::moves::{Hint, Move};
use crate::rng::GameRng;

pub type Seat = usize;

pub fn other_seat(seat: Seat) -> Seat {
    1 - seat
}

/// Rule switches for conventions the base rules leave open.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct Rules {
    /// Allow discarding while holding all eight hint tokens. When false,
    /// discards at eight tokens are only legal if nothing else is.
    pub discard_at_max_hints: bool,
    /// Allow hints that touch no card.
    pub allow_empty_hints: bool,
}

impl Default for Rules {
    fn default() -> Self {
        Rules { discard_at_max_hints: false, allow_empty_hints: false }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalStatus {
    NotTerminal,
    Perfect,
    DeckExhausted,
    BombedOut,
}

impl TerminalStatus {
    pub fn is_terminal(self) -> bool {
        self != TerminalStatus::NotTerminal
    }
}

/// What happened on one turn, as seen by both players.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    Play { seat: Seat, slot: u8, card: Card, success: bool },
    Discard { seat: Seat, slot: u8, card: Card },
    Hint { seat: Seat, hint: Hint, touched: Vec<u8> },
}

impl Event {
    pub fn seat(&self) -> Seat {
        match self {
            Event::Play { seat, .. } | Event::Discard { seat, .. } | Event::Hint { seat, .. } => *seat,
        }
    }

    pub fn to_move(&self) -> Move {
        match self {
            Event::Play { slot, .. } => Move::Play(*slot),
            Event::Discard { slot, .. } => Move::Discard(*slot),
            Event::Hint { hint, .. } => Move::from_hint(*hint),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("game is over ({0:?})")]
    GameOver(TerminalStatus),
    #[error("illegal move {mv}: {reason}")]
    IllegalMove { mv: Move, reason: &'static str },
}

/// Full game state, including both hidden hands.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameState {
    /// Draw pile; the next card drawn is the last element.
    deck: Vec<Card>,
    hands: [Vec<Card>; 2],
    knowledge: [KnowledgeState; 2],
    fireworks: Fireworks,
    discards: Vec<Card>,
    hint_tokens: u8,
    bombs_remaining: u8,
    current_seat: Seat,
    final_round_turns_left: Option<u8>,
    turn_index: u32,
    draws: u8,
    last_event: Option<Event>,
    seed: u64,
    rules: Rules,
}

impl GameState {
    pub fn new(seed: u64) -> GameState {
        GameState::with_rules(seed, Rules::default())
    }

    /// Shuffles the deck from `seed` and deals five cards to each seat,
    /// alternating, seat 0 first.
    pub fn with_rules(seed: u64, rules: Rules) -> GameState {
        let mut deck = standard_deck();
        GameRng::from_seed(seed).shuffle(&mut deck);
        let mut state = GameState {
            deck,
            hands: [Vec::with_capacity(HAND_SIZE), Vec::with_capacity(HAND_SIZE)],
            knowledge: [KnowledgeState::default(), KnowledgeState::default()],
            fireworks: Fireworks::default(),
            discards: Vec::new(),
            hint_tokens: MAX_HINT_TOKENS,
            bombs_remaining: MAX_BOMBS,
            current_seat: 0,
            final_round_turns_left: None,
            turn_index: 0,
            draws: 0,
            last_event: None,
            seed,
            rules,
        };
        for _ in 0..HAND_SIZE {
            for seat in 0..2 {
                state.draw(seat);
            }
        }
        state
    }

    fn draw(&mut self, seat: Seat) -> bool {
        match self.deck.pop() {
            Some(card) => {
                self.hands[seat].push(card);
                self.knowledge[seat].push_fresh(self.draws);
                self.draws += 1;
                true
            }
            None => false,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn rules(&self) -> Rules {
        self.rules
    }
    pub fn deck(&self) -> &[Card] {
        &self.deck
    }
    pub fn deck_size(&self) -> usize {
        self.deck.len()
    }
    pub fn hand(&self, seat: Seat) -> &[Card] {
        &self.hands[seat]
    }
    pub fn knowledge(&self, seat: Seat) -> &KnowledgeState {
        &self.knowledge[seat]
    }
    pub fn fireworks(&self) -> &Fireworks {
        &self.fireworks
    }
    pub fn discards(&self) -> &[Card] {
        &self.discards
    }
    pub fn hint_tokens(&self) -> u8 {
        self.hint_tokens
    }
    pub fn bombs_remaining(&self) -> u8 {
        self.bombs_remaining
    }
    pub fn current_seat(&self) -> Seat {
        self.current_seat
    }
    pub fn final_round_turns_left(&self) -> Option<u8> {
        self.final_round_turns_left
    }
    pub fn turn_index(&self) -> u32 {
        self.turn_index
    }
    pub fn last_event(&self) -> Option<&Event> {
        self.last_event.as_ref()
    }

    pub fn score(&self) -> u8 {
        self.fireworks.score()
    }

    pub fn status(&self) -> TerminalStatus {
        if self.bombs_remaining == 0 {
            TerminalStatus::BombedOut
        } else if self.fireworks.is_complete() {
            TerminalStatus::Perfect
        } else if self.final_round_turns_left == Some(0) {
            TerminalStatus::DeckExhausted
        } else {
            TerminalStatus::NotTerminal
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.status().is_terminal()
    }

    /// Legal moves for the seat to act, in action-id order. Empty when the
    /// game is over.
    pub fn legal_moves(&self) -> Vec<Move> {
        if self.is_terminal() {
            return Vec::new();
        }
        let seat = self.current_seat;
        legal_moves_for(
            self.hands[seat].len(),
            &self.hands[other_seat(seat)],
            self.hint_tokens,
            self.rules,
        )
    }

    pub fn is_legal(&self, mv: Move) -> bool {
        self.check_move(mv).is_ok()
    }

    fn check_move(&self, mv: Move) -> Result<(), EngineError> {
        let status = self.status();
        if status.is_terminal() {
            return Err(EngineError::GameOver(status));
        }
        let illegal = |reason| Err(EngineError::IllegalMove { mv, reason });
        if !mv.is_well_formed() {
            return illegal("malformed move");
        }
        let seat = self.current_seat;
        match mv {
            Move::Play(slot) | Move::Discard(slot) if slot as usize >= self.hands[seat].len() => {
                illegal("no card in that slot")
            }
            Move::Discard(_) if self.hint_tokens >= MAX_HINT_TOKENS && !self.rules.discard_at_max_hints => {
                // Allowed only as a last resort.
                let others_exist = !self.hands[seat].is_empty();
                if others_exist {
                    illegal("cannot discard with all hint tokens available")
                } else {
                    Ok(())
                }
            }
            Move::HintColor(_) | Move::HintRank(_) => {
                if self.hint_tokens == 0 {
                    return illegal("no hint tokens left");
                }
                let hint = mv.hint().expect("hint move");
                let partner = &self.hands[other_seat(seat)];
                if partner.is_empty() {
                    return illegal("partner has no cards");
                }
                if !self.rules.allow_empty_hints && !partner.iter().any(|&c| hint.matches(c)) {
                    return illegal("hint touches no card");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Applies a move for the seat to act. On error the state is unchanged.
    pub fn apply_move(&mut self, mv: Move) -> Result<Event, EngineError> {
        self.check_move(mv)?;
        let seat = self.current_seat;
        let armed_before = self.final_round_turns_left.is_some();
        let mut drew_last = false;

        let event = match mv {
            Move::Play(slot) => {
                let card = self.hands[seat].remove(slot as usize);
                self.knowledge[seat].remove_slot(slot as usize);
                let success = self.fireworks.is_playable(card);
                if success {
                    self.fireworks.0[card.color.index()] = card.rank;
                    if card.rank == 5 {
                        self.hint_tokens = (self.hint_tokens + 1).min(MAX_HINT_TOKENS);
                    }
                } else {
                    self.discards.push(card);
                    self.bombs_remaining -= 1;
                }
                drew_last = self.draw(seat) && self.deck.is_empty();
                Event::Play { seat, slot, card, success }
            }
            Move::Discard(slot) => {
                let card = self.hands[seat].remove(slot as usize);
                self.knowledge[seat].remove_slot(slot as usize);
                self.discards.push(card);
                self.hint_tokens = (self.hint_tokens + 1).min(MAX_HINT_TOKENS);
                drew_last = self.draw(seat) && self.deck.is_empty();
                Event::Discard { seat, slot, card }
            }
            Move::HintColor(_) | Move::HintRank(_) => {
                let hint = mv.hint().expect("hint move");
                let target = other_seat(seat);
                let touched: Vec<u8> = self.hands[target]
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| hint.matches(c))
                    .map(|(i, _)| i as u8)
                    .collect();
                self.knowledge[target].update_on_hint(hint, &touched, self.turn_index);
                self.hint_tokens -= 1;
                Event::Hint { seat, hint, touched }
            }
        };

        if armed_before {
            if let Some(left) = self.final_round_turns_left.as_mut() {
                *left = left.saturating_sub(1);
            }
        } else if drew_last {
            self.final_round_turns_left = Some(2);
        }
        self.turn_index += 1;
        self.current_seat = other_seat(seat);
        self.last_event = Some(event.clone());
        Ok(event)
    }

    /// Cards visible to `seat`: fireworks, discards and the partner's hand.
    pub fn visible_counts(&self, seat: Seat) -> CardCounts {
        visible_counts(&self.fireworks, &self.discards, &self.hands[other_seat(seat)])
    }

    /// Everything `seat` may see. Never includes `seat`'s own card identities.
    pub fn observation(&self, seat: Seat) -> Observation {
        let partner = other_seat(seat);
        Observation {
            viewer: seat,
            current_seat: self.current_seat,
            turn_index: self.turn_index,
            partner_hand: self.hands[partner].clone(),
            own_knowledge: self.knowledge[seat].clone(),
            partner_knowledge: self.knowledge[partner].clone(),
            fireworks: self.fireworks,
            discards: self.discards.clone(),
            hint_tokens: self.hint_tokens,
            bombs_remaining: self.bombs_remaining,
            deck_size: self.deck.len(),
            final_round_turns_left: self.final_round_turns_left,
            last_event: self.last_event.clone(),
            rules: self.rules,
        }
    }

    /// Every card accounted for, by location. Sums to the full deck in any
    /// reachable state.
    pub fn card_census(&self) -> CardCounts {
        let mut counts = CardCounts::from_cards(self.deck.iter().chain(&self.discards));
        for hand in &self.hands {
            for &c in hand {
                counts.add(c);
            }
        }
        for c in self.fireworks.cards() {
            counts.add(c);
        }
        counts
    }

    /// Checks conservation and resource bounds; returns a description of the
    /// first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.card_census() != CardCounts::full_deck() {
            return Err("card conservation violated".into());
        }
        if self.hint_tokens > MAX_HINT_TOKENS {
            return Err(format!("hint tokens out of range: {}", self.hint_tokens));
        }
        if self.bombs_remaining > MAX_BOMBS {
            return Err(format!("bombs out of range: {}", self.bombs_remaining));
        }
        if !self.deck.is_empty() && self.hands.iter().any(|h| h.len() != HAND_SIZE) {
            return Err("hand not full while deck non-empty".into());
        }
        if self.score() > 25 {
            return Err("score above 25".into());
        }
        for seat in 0..2 {
            if self.hands[seat].len() != self.knowledge[seat].len() {
                return Err("knowledge out of sync with hand".into());
            }
        }
        let total = self.deck.len()
            + self.discards.len()
            + self.hands.iter().map(Vec::len).sum::<usize>()
            + self.score() as usize;
        if total != DECK_SIZE {
            return Err("card total differs from deck size".into());
        }
        Ok(())
    }
}

/// Legal moves given only what the actor can see.
pub fn legal_moves_for(own_hand_len: usize, partner_hand: &[Card], hint_tokens: u8, rules: Rules) -> Vec<Move> {
    let mut moves = Vec::with_capacity(20);
    let discard_allowed = hint_tokens < MAX_HINT_TOKENS || rules.discard_at_max_hints;
    if discard_allowed {
        moves.extend((0..own_hand_len as u8).map(Move::Discard));
    }
    moves.extend((0..own_hand_len as u8).map(Move::Play));
    if hint_tokens > 0 && !partner_hand.is_empty() {
        for color in crate::card::Color::ALL {
            if rules.allow_empty_hints || partner_hand.iter().any(|c| c.color == color) {
                moves.push(Move::HintColor(color));
            }
        }
        for rank in 1..=5u8 {
            if rules.allow_empty_hints || partner_hand.iter().any(|c| c.rank == rank) {
                moves.push(Move::HintRank(rank));
            }
        }
    }
    if moves.is_empty() {
        moves.extend((0..own_hand_len as u8).map(Move::Discard));
    }
    moves
}

/// A seat's view of the game.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub viewer: Seat,
    pub current_seat: Seat,
    pub turn_index: u32,
    pub partner_hand: Vec<Card>,
    /// Hint knowledge of the viewer's own cards (no card counting applied).
    pub own_knowledge: KnowledgeState,
    /// Hint knowledge the partner has of their cards; public information.
    pub partner_knowledge: KnowledgeState,
    pub fireworks: Fireworks,
    pub discards: Vec<Card>,
    pub hint_tokens: u8,
    pub bombs_remaining: u8,
    pub deck_size: usize,
    pub final_round_turns_left: Option<u8>,
    pub last_event: Option<Event>,
    pub rules: Rules,
}

impl Observation {
    pub fn own_hand_len(&self) -> usize {
        self.own_knowledge.len()
    }

    pub fn partner(&self) -> Seat {
        other_seat(self.viewer)
    }

    pub fn legal_moves(&self) -> Vec<Move> {
        legal_moves_for(self.own_hand_len(), &self.partner_hand, self.hint_tokens, self.rules)
    }

    pub fn visible_counts(&self) -> CardCounts {
        visible_counts(&self.fireworks, &self.discards, &self.partner_hand)
    }

    /// Counts of cards everyone can see (fireworks and discards).
    pub fn public_counts(&self) -> CardCounts {
        visible_counts(&self.fireworks, &self.discards, &[])
    }

    /// The viewer's knowledge under `mode`.
    pub fn own_knowledge_in(&self, mode: KnowledgeMode) -> KnowledgeState {
        self.own_knowledge.with_mode(mode, &self.visible_counts())
    }

    /// What the partner can deduce about their hand from public information
    /// alone (their hints plus fireworks and discards).
    pub fn partner_public_knowledge(&self) -> KnowledgeState {
        self.partner_knowledge.counted(&self.public_counts())
    }

    /// Cards touched by the partner's hint on the previous turn, if that is
    /// what happened.
    pub fn hint_just_received(&self) -> Option<(Hint, &[u8])> {
        match &self.last_event {
            Some(Event::Hint { seat, hint, touched }) if *seat != self.viewer => Some((*hint, touched)),
            _ => None,
        }
    }
}

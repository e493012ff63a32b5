//! A conventions bot.
//!
//! Convention: a hint that touches exactly one card, and that card is not
//! the receiver's chop (oldest unhinted card before the hint), marks that
//! card as playable right now. Chop hints are saves. The marked card is then
//! known to be one of the identities that were playable when it was marked.

use crate::card::{IdentitySet, MAX_HINT_TOKENS};
use crate::engine::{Observation, Seat};
use crate::knowledge::{is_known_playable, playable_probability, KnowledgeMode, KnowledgeState};
use crate::moves::{Hint, Move};

use super::assess::CardValues;
use super::ladder::{fallback_hint, most_informative_hint};
use super::{Agent, AgentError};

#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct SmartConfig {
    /// Play an uncertain card at or above this probability (None = never).
    pub risk_theta: Option<f64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum SmartRule {
    PlayMarked,
    PlayKnown,
    PlayHint,
    SaveHint,
    RiskPlay,
    DiscardChop,
    DiscardOldest,
    SafeHint,
    OnlyLegal,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
struct Mark {
    draw_index: u8,
    /// Identities playable when the mark was given.
    playable_then: IdentitySet,
}

#[derive(Clone, Debug, Default)]
pub struct SmartBot {
    cfg: SmartConfig,
    own_marks: Vec<Mark>,
    partner_marks: Vec<Mark>,
}

/// Whether a hint touching `touched` is a play mark given the receiver's
/// knowledge before the hint.
fn is_play_mark(before: &KnowledgeState, touched: &[u8]) -> bool {
    touched.len() == 1 && before.oldest_unhinted() != Some(touched[0] as usize)
}

fn touched_by(hand: &[crate::card::Card], hint: Hint) -> Vec<u8> {
    hand.iter().enumerate().filter(|(_, c)| hint.matches(**c)).map(|(i, _)| i as u8).collect()
}

/// Knowledge with marks applied: a marked card is among the identities that
/// were playable when it was marked.
fn with_marks(k: &KnowledgeState, marks: &[Mark]) -> KnowledgeState {
    let mut out = k.clone();
    for slot in &mut out.slots {
        if let Some(m) = marks.iter().rev().find(|m| m.draw_index == slot.draw_index) {
            let narrowed = slot.candidates.intersect(m.playable_then);
            if !narrowed.is_empty() {
                slot.candidates = narrowed;
            }
        }
    }
    out
}

impl SmartBot {
    pub fn new(cfg: SmartConfig) -> SmartBot {
        SmartBot { cfg, ..SmartBot::default() }
    }

    /// Reads the partner's last move for a mark on our hand.
    fn absorb_partner_move(&mut self, obs: &Observation) {
        let Some((_, touched)) = obs.hint_just_received() else { return };
        let hint_turn = obs.turn_index.saturating_sub(1);
        let mut before = obs.own_knowledge.clone();
        for slot in &mut before.slots {
            slot.hint_turns.retain(|&t| t < hint_turn);
        }
        if is_play_mark(&before, touched) {
            let slot = touched[0] as usize;
            // the fireworks have not moved since the hint
            self.own_marks.push(Mark {
                draw_index: obs.own_knowledge.slots[slot].draw_index,
                playable_then: obs.fireworks.playable_set(),
            });
        }
    }

    fn forget_departed(&mut self, obs: &Observation) {
        self.own_marks.retain(|m| obs.own_knowledge.slots.iter().any(|s| s.draw_index == m.draw_index));
        self.partner_marks
            .retain(|m| obs.partner_knowledge.slots.iter().any(|s| s.draw_index == m.draw_index));
    }

    pub fn decide(&mut self, obs: &Observation) -> (Move, SmartRule) {
        self.absorb_partner_move(obs);
        self.forget_departed(obs);
        let decision = self.choose(obs);
        if let Some(hint) = decision.0.hint() {
            let touched = touched_by(&obs.partner_hand, hint);
            if is_play_mark(&obs.partner_knowledge, &touched) {
                self.partner_marks.push(Mark {
                    draw_index: obs.partner_knowledge.slots[touched[0] as usize].draw_index,
                    playable_then: obs.fireworks.playable_set(),
                });
            }
        }
        decision
    }

    fn choose(&self, obs: &Observation) -> (Move, SmartRule) {
        let legal = obs.legal_moves();
        if legal.len() == 1 {
            return (legal[0], SmartRule::OnlyLegal);
        }
        let fw = &obs.fireworks;
        let own = with_marks(&obs.own_knowledge_in(KnowledgeMode::CardCounting), &self.own_marks);
        let values = CardValues::new(fw, &obs.discards);

        // 1. most recent mark, if it can still be playable
        for mark in self.own_marks.iter().rev() {
            if let Some(slot) = own.slots.iter().position(|s| s.draw_index == mark.draw_index) {
                if !own.candidates(slot).intersect(fw.playable_set()).is_empty() {
                    return (Move::Play(slot as u8), SmartRule::PlayMarked);
                }
            }
        }

        // 2. known playable, preferring what the partner can't tell we know
        let public = obs.own_knowledge.counted(&obs.public_counts());
        let playable: Vec<usize> = (0..own.len()).filter(|&s| is_known_playable(own.candidates(s), fw)).collect();
        if let Some(&slot) = playable
            .iter()
            .find(|&&s| !is_known_playable(public.candidates(s), fw))
            .or(playable.first())
        {
            return (Move::Play(slot as u8), SmartRule::PlayKnown);
        }

        if obs.hint_tokens > 0 {
            // 3. the hint that newly signals the most playable cards
            if let Some(mv) = self.best_play_hint(obs, &legal, &own) {
                return (mv, SmartRule::PlayHint);
            }

            // 4. save a five or last copy on the partner's chop
            if let Some(chop) = obs.partner_knowledge.oldest_unhinted() {
                let card = obs.partner_hand[chop];
                let id = card.identity();
                if !values.is_dead(id) && (card.rank == 5 || values.is_critical(id)) {
                    return (Move::HintRank(card.rank), SmartRule::SaveHint);
                }
            }
        }

        if let Some(theta) = self.cfg.risk_theta {
            if obs.bombs_remaining >= 2 {
                let mut best: Option<(usize, f64)> = None;
                for slot in 0..own.len() {
                    let p = playable_probability(own.candidates(slot), fw);
                    if p >= theta && best.is_none_or(|(_, bp)| p > bp) {
                        best = Some((slot, p));
                    }
                }
                if let Some((slot, _)) = best {
                    return (Move::Play(slot as u8), SmartRule::RiskPlay);
                }
            }
        }

        if obs.hint_tokens < MAX_HINT_TOKENS || obs.rules.discard_at_max_hints {
            // 5. discard the chop, 6. else the oldest card
            return match own.oldest_unhinted() {
                Some(slot) => (Move::Discard(slot as u8), SmartRule::DiscardChop),
                None => (Move::Discard(0), SmartRule::DiscardOldest),
            };
        }
        (self.safe_hint(obs, &legal), SmartRule::SafeHint)
    }

    /// Partner cards the partner will already play: marked or known playable
    /// from public information.
    fn partner_signalled(&self, obs: &Observation, k: &KnowledgeState) -> Vec<bool> {
        let marked = with_marks(k, &self.partner_marks);
        (0..k.len())
            .map(|s| {
                let draw = k.slots[s].draw_index;
                self.partner_marks.iter().any(|m| m.draw_index == draw)
                    || is_known_playable(marked.candidates(s), &obs.fireworks)
            })
            .collect()
    }

    fn best_play_hint(&self, obs: &Observation, legal: &[Move], own: &KnowledgeState) -> Option<Move> {
        let fw = &obs.fireworks;
        let public = obs.public_counts();
        let before = obs.partner_knowledge.counted(&public);
        let signalled_before = self.partner_signalled(obs, &before);

        // identities someone is already on course to play
        let mut pending = IdentitySet::empty();
        for (slot, card) in obs.partner_hand.iter().enumerate() {
            if signalled_before[slot] {
                pending.insert(card.identity());
            }
        }
        for slot in 0..own.len() {
            if let Some(id) = own.candidates(slot).only() {
                if fw.is_identity_playable(id) {
                    pending.insert(id);
                }
            }
        }

        let mut best: Option<(Move, usize, usize)> = None;
        for &mv in legal {
            let Some(hint) = mv.hint() else { continue };
            let touched = touched_by(&obs.partner_hand, hint);
            let mark = is_play_mark(&obs.partner_knowledge, &touched);
            if mark && !fw.is_playable(obs.partner_hand[touched[0] as usize]) {
                continue;
            }
            let mut after = obs.partner_knowledge.clone();
            after.update_on_hint(hint, &touched, obs.turn_index);
            let after = with_marks(&after.counted(&public), &self.partner_marks);

            let mut gained = IdentitySet::empty();
            for &t in &touched {
                let slot = t as usize;
                let card = obs.partner_hand[slot];
                let now_signalled = mark || is_known_playable(after.candidates(slot), fw);
                if now_signalled
                    && !signalled_before[slot]
                    && fw.is_playable(card)
                    && !pending.contains(card.identity())
                {
                    gained.insert(card.identity());
                }
            }
            let score = gained.len();
            if score == 0 {
                continue;
            }
            // more cards signalled, then fewer touched; legal order puts
            // color before rank
            let better = match best {
                None => true,
                Some((_, s, n)) => score > s || (score == s && touched.len() < n),
            };
            if better {
                best = Some((mv, score, touched.len()));
            }
        }
        best.map(|(m, _, _)| m)
    }

    /// A hint that cannot be read as a bad play mark.
    fn safe_hint(&self, obs: &Observation, legal: &[Move]) -> Move {
        let safe: Vec<Move> = legal
            .iter()
            .copied()
            .filter(|m| {
                m.hint().is_some_and(|h| {
                    let touched = touched_by(&obs.partner_hand, h);
                    !is_play_mark(&obs.partner_knowledge, &touched)
                        || obs.fireworks.is_playable(obs.partner_hand[touched[0] as usize])
                })
            })
            .collect();
        most_informative_hint(obs, &safe).unwrap_or_else(|| fallback_hint(obs))
    }
}

impl Agent for SmartBot {
    fn begin_game(&mut self, _seat: Seat, _game_seed: u64) -> Result<(), AgentError> {
        self.own_marks.clear();
        self.partner_marks.clear();
        Ok(())
    }

    fn act(&mut self, obs: &Observation) -> Result<Move, AgentError> {
        Ok(self.decide(obs).0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::card::{Card, Color, Fireworks};
    use crate::engine::{Event, Rules};

    fn c(color: Color, rank: u8) -> Card {
        Card::new(color, rank)
    }

    fn hand(n: usize, first: u8) -> KnowledgeState {
        let mut k = KnowledgeState::default();
        for i in 0..n {
            k.push_fresh(first + i as u8);
        }
        k
    }

    const DULL: [Card; 5] = [
        Card { color: Color::Red, rank: 3 },
        Card { color: Color::Yellow, rank: 4 },
        Card { color: Color::Green, rank: 3 },
        Card { color: Color::Blue, rank: 2 },
        Card { color: Color::White, rank: 4 },
    ];

    fn obs(partner: &[Card], tokens: u8) -> Observation {
        Observation {
            viewer: 0,
            current_seat: 0,
            turn_index: 6,
            partner_hand: partner.to_vec(),
            own_knowledge: hand(5, 0),
            partner_knowledge: hand(partner.len(), 5),
            fireworks: Fireworks::default(),
            discards: Vec::new(),
            hint_tokens: tokens,
            bombs_remaining: 3,
            deck_size: 30,
            final_round_turns_left: None,
            last_event: None,
            rules: Rules::default(),
        }
    }

    #[test]
    fn plays_a_single_touched_newest_card() {
        let mut o = obs(&DULL, 7);
        o.fireworks = Fireworks::default();
        o.own_knowledge.update_on_hint(Hint::Rank(1), &[4], 5);
        o.last_event = Some(Event::Hint { seat: 1, hint: Hint::Rank(1), touched: vec![4] });
        let mut bot = SmartBot::default();
        let (mv, rule) = bot.decide(&o);
        assert_eq!(mv, Move::Play(4));
        assert!(matches!(rule, SmartRule::PlayMarked | SmartRule::PlayKnown));
    }

    #[test]
    fn color_mark_on_non_chop_is_played() {
        let mut o = obs(&DULL, 7);
        o.fireworks = Fireworks([2, 0, 0, 0, 0]);
        o.own_knowledge.update_on_hint(Hint::Color(Color::Red), &[3], 5);
        o.last_event = Some(Event::Hint { seat: 1, hint: Hint::Color(Color::Red), touched: vec![3] });
        let mut bot = SmartBot::default();
        assert_eq!(bot.decide(&o), (Move::Play(3), SmartRule::PlayMarked));
    }

    #[test]
    fn chop_hint_is_not_a_mark() {
        let mut o = obs(&DULL, 2);
        o.fireworks = Fireworks([2, 0, 0, 0, 0]);
        o.own_knowledge.update_on_hint(Hint::Color(Color::Red), &[0], 5);
        o.last_event = Some(Event::Hint { seat: 1, hint: Hint::Color(Color::Red), touched: vec![0] });
        let mut bot = SmartBot::default();
        let (mv, _) = bot.decide(&o);
        assert_ne!(mv, Move::Play(0));
    }

    #[test]
    fn prefers_the_card_partner_cannot_deduce() {
        let mut o = obs(&DULL, 0);
        // slot 1: hinted R1 outright, publicly known playable
        o.own_knowledge.update_on_hint(Hint::Color(Color::Red), &[1], 1);
        o.own_knowledge.update_on_hint(Hint::Rank(1), &[1, 3], 3);
        // slot 3: a 1 whose other colors are all visible in the partner's hand
        let partner = [c(Color::Yellow, 1), c(Color::Yellow, 1), c(Color::Yellow, 1), c(Color::Green, 4), c(Color::White, 4)];
        o.partner_hand = partner.to_vec();
        o.discards = vec![c(Color::Green, 1), c(Color::Green, 1), c(Color::Green, 1), c(Color::Blue, 1), c(Color::Blue, 1), c(Color::Blue, 1), c(Color::White, 1), c(Color::White, 1), c(Color::White, 1)];
        o.own_knowledge.update_on_hint(Hint::Color(Color::Red), &[1, 3], 4);
        // both slots red 1 by counting, only slot 1 is public
        let mut bot = SmartBot::default();
        let (mv, rule) = bot.decide(&o);
        assert_eq!(rule, SmartRule::PlayKnown);
        assert!(mv == Move::Play(1) || mv == Move::Play(3));
    }

    #[test]
    fn marks_a_playable_card_with_a_single_touch() {
        let mut partner = DULL;
        partner[2] = c(Color::Green, 1);
        let o = obs(&partner, 5);
        let mut bot = SmartBot::default();
        let (mv, rule) = bot.decide(&o);
        assert_eq!(rule, SmartRule::PlayHint);
        // green touches only slot 2 (not the chop); rank 1 also does, color first
        assert_eq!(mv, Move::HintColor(Color::Green));
    }

    #[test]
    fn never_marks_an_unplayable_card() {
        // the only playable card sits on the chop alone in its color and rank
        let mut partner = DULL;
        partner[0] = c(Color::Red, 1);
        let mut o = obs(&partner, 5);
        o.fireworks = Fireworks::default();
        let mut bot = SmartBot::default();
        let (mv, _) = bot.decide(&o);
        if let Some(h) = mv.hint() {
            let touched = touched_by(&partner, h);
            assert!(!(touched.len() == 1 && touched[0] != 0 && !o.fireworks.is_playable(partner[touched[0] as usize])));
        }
    }

    #[test]
    fn saves_a_five_on_the_chop() {
        let mut partner = DULL;
        partner[0] = c(Color::Blue, 5);
        let o = obs(&partner, 5);
        let mut bot = SmartBot::default();
        assert_eq!(bot.decide(&o), (Move::HintRank(5), SmartRule::SaveHint));
    }

    #[test]
    fn discards_chop_without_tokens() {
        let o = obs(&DULL, 0);
        let mut bot = SmartBot::default();
        assert_eq!(bot.decide(&o), (Move::Discard(0), SmartRule::DiscardChop));
    }
}

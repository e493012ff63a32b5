//! The rule ladder: simple, value and holmes bots share one priority list
//! with rules switched on per rung.

use crate::card::{Card, MAX_HINT_TOKENS};
use crate::engine::Observation;
use crate::knowledge::{is_known_playable, playable_probability, KnowledgeMode, KnowledgeState};
use crate::moves::{Hint, Move};

use super::assess::CardValues;
use super::{Agent, AgentError};

pub const DEFAULT_THETA: f64 = 0.6;

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct LadderConfig {
    /// Save-hint last copies on the partner's chop and keep own last copies.
    pub value_rules: bool,
    /// Use card counting, not just hints, for own-hand decisions.
    pub counting: bool,
    /// Play an uncertain card at or above this playable probability.
    pub risk_theta: Option<f64>,
}

impl LadderConfig {
    pub fn simple() -> LadderConfig {
        LadderConfig { value_rules: false, counting: false, risk_theta: None }
    }

    pub fn value() -> LadderConfig {
        LadderConfig { value_rules: true, ..LadderConfig::simple() }
    }

    pub fn holmes(theta: f64) -> LadderConfig {
        LadderConfig { value_rules: true, counting: true, risk_theta: Some(theta) }
    }
}

/// Which rule produced a decision.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum LadderRule {
    PlayKnown,
    HintPlayable,
    SaveHint,
    RiskPlay,
    DiscardOldestUnhinted,
    DiscardOldest,
    /// A discard that skipped a known last copy.
    DiscardSparingCritical,
    /// Discarding is not allowed at full tokens, so hint instead.
    FallbackHint,
    OnlyLegal,
}

impl LadderRule {
    /// Rules that only the value rung and above can fire.
    pub fn is_value_rule(self) -> bool {
        matches!(self, LadderRule::SaveHint | LadderRule::DiscardSparingCritical)
    }
}

#[derive(Clone, Debug)]
pub struct LadderBot {
    cfg: LadderConfig,
}

impl LadderBot {
    pub fn new(cfg: LadderConfig) -> LadderBot {
        LadderBot { cfg }
    }

    pub fn config(&self) -> LadderConfig {
        self.cfg
    }

    pub fn decide(&self, obs: &Observation) -> (Move, LadderRule) {
        let legal = obs.legal_moves();
        if legal.len() == 1 {
            return (legal[0], LadderRule::OnlyLegal);
        }
        let mode = if self.cfg.counting { KnowledgeMode::CardCounting } else { KnowledgeMode::HintsOnly };
        let own = obs.own_knowledge_in(mode);
        let values = CardValues::new(&obs.fireworks, &obs.discards);

        // 1. play the lowest known-playable card
        if let Some(slot) = (0..own.len()).find(|&s| is_known_playable(own.candidates(s), &obs.fireworks)) {
            return (Move::Play(slot as u8), LadderRule::PlayKnown);
        }

        if obs.hint_tokens > 0 {
            // 2. point out a playable card the partner does not know about
            let partner = self.partner_knowledge(obs);
            let target = obs.partner_hand.iter().enumerate().find(|&(slot, card)| {
                obs.fireworks.is_playable(*card) && !is_known_playable(partner.candidates(slot), &obs.fireworks)
            });
            if let Some((slot, card)) = target {
                let hint = if partner.slots[slot].color_hint.is_none() {
                    Move::HintColor(card.color)
                } else {
                    Move::HintRank(card.rank)
                };
                return (hint, LadderRule::HintPlayable);
            }

            // 3. save a last copy about to be discarded
            if self.cfg.value_rules {
                if let Some(chop) = partner.oldest_unhinted() {
                    let card = obs.partner_hand[chop];
                    if values.is_critical(card.identity()) {
                        return (Move::HintRank(card.rank), LadderRule::SaveHint);
                    }
                }
            }
        }

        // 4. take a calculated risk
        if let Some(theta) = self.cfg.risk_theta {
            if obs.bombs_remaining >= 2 {
                let mut best: Option<(usize, f64)> = None;
                for slot in 0..own.len() {
                    let p = playable_probability(own.candidates(slot), &obs.fireworks);
                    if p >= theta && best.is_none_or(|(_, bp)| p > bp) {
                        best = Some((slot, p));
                    }
                }
                if let Some((slot, _)) = best {
                    return (Move::Play(slot as u8), LadderRule::RiskPlay);
                }
            }
        }

        // 5. discard
        if obs.hint_tokens < MAX_HINT_TOKENS || obs.rules.discard_at_max_hints {
            return self.discard(&own, &values);
        }
        (fallback_hint(obs), LadderRule::FallbackHint)
    }

    fn partner_knowledge(&self, obs: &Observation) -> KnowledgeState {
        if self.cfg.counting {
            obs.partner_public_knowledge()
        } else {
            obs.partner_knowledge.clone()
        }
    }

    fn discard(&self, own: &KnowledgeState, values: &CardValues) -> (Move, LadderRule) {
        let (slot, rule) = match own.oldest_unhinted() {
            Some(slot) => (slot, LadderRule::DiscardOldestUnhinted),
            None => (0, LadderRule::DiscardOldest),
        };
        if self.cfg.value_rules && values.all_critical(own.candidates(slot)) {
            let keep = values.known_critical_slots(own);
            let unhinted = (0..own.len()).find(|&s| !own.slots[s].is_hinted() && !keep.contains(&s));
            let any = (0..own.len()).find(|s| !keep.contains(s));
            if let Some(other) = unhinted.or(any) {
                return (Move::Discard(other as u8), LadderRule::DiscardSparingCritical);
            }
        }
        (Move::Discard(slot as u8), rule)
    }
}

/// A hint for when discarding is not allowed: the one that rules out the
/// most candidates in the partner's hint knowledge, lowest action id first.
pub(crate) fn fallback_hint(obs: &Observation) -> Move {
    let legal = obs.legal_moves();
    most_informative_hint(obs, &legal).unwrap_or(legal[0])
}

/// Among the hints in `moves`, the one ruling out the most candidates.
pub(crate) fn most_informative_hint(obs: &Observation, moves: &[Move]) -> Option<Move> {
    let mut best: Option<(Move, usize)> = None;
    for &mv in moves {
        let Some(hint) = mv.hint() else { continue };
        let gain = information_gain(&obs.partner_knowledge, &obs.partner_hand, hint);
        if best.is_none_or(|(_, g)| gain > g) {
            best = Some((mv, gain));
        }
    }
    best.map(|(m, _)| m)
}

fn information_gain(k: &KnowledgeState, hand: &[Card], hint: Hint) -> usize {
    let touched: Vec<u8> =
        hand.iter().enumerate().filter(|(_, c)| hint.matches(**c)).map(|(i, _)| i as u8).collect();
    let mut after = k.clone();
    after.update_on_hint(hint, &touched, 0);
    k.slots.iter().zip(&after.slots).map(|(b, a)| b.candidates.len() - a.candidates.len()).sum()
}

impl Agent for LadderBot {
    fn act(&mut self, obs: &Observation) -> Result<Move, AgentError> {
        Ok(self.decide(obs).0)
    }
}

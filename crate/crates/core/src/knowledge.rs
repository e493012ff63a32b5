//! What a player provably knows about the cards in their own hand.
//!
//! Knowledge has two layers. Hint knowledge is the product of the colors and
//! ranks a card has not been ruled out of by hints (positive and negative
//! information). Card counting then intersects it with what public cards
//! allow: an identity is dropped when every copy is visible elsewhere, or when
//! no assignment of the remaining unseen cards to the whole hand could give
//! the slot that identity.

use serde::{Deserialize, Serialize};

use crate::card::{Card, CardCounts, Color, Fireworks, Identity, IdentitySet, NUM_IDENTITIES};
use crate::moves::{Hint, Move};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardKnowledge {
    /// Identities consistent with the hints received so far.
    pub candidates: IdentitySet,
    pub color_hint: Option<Color>,
    pub rank_hint: Option<u8>,
    /// Turn indices of hints that touched this card.
    pub hint_turns: Vec<u32>,
    /// Sequence number of the draw that put this card in the hand (0..50).
    pub draw_index: u8,
}

impl CardKnowledge {
    pub fn fresh(draw_index: u8) -> CardKnowledge {
        CardKnowledge {
            candidates: IdentitySet::full(),
            color_hint: None,
            rank_hint: None,
            hint_turns: Vec::new(),
            draw_index,
        }
    }

    pub fn is_hinted(&self) -> bool {
        !self.hint_turns.is_empty()
    }

    pub fn last_hint_turn(&self) -> Option<u32> {
        self.hint_turns.last().copied()
    }
}

/// One player's knowledge of their own hand, slot 0 = oldest card.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeState {
    pub slots: Vec<CardKnowledge>,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnowledgeMode {
    HintsOnly,
    #[default]
    CardCounting,
}

impl KnowledgeState {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn candidates(&self, slot: usize) -> IdentitySet {
        self.slots[slot].candidates
    }

    pub fn candidate_sets(&self) -> Vec<IdentitySet> {
        self.slots.iter().map(|s| s.candidates).collect()
    }

    /// Restricts touched slots to the hinted attribute and removes it from
    /// every untouched slot.
    pub fn update_on_hint(&mut self, hint: Hint, touched: &[u8], turn: u32) {
        let attribute = match hint {
            Hint::Color(c) => IdentitySet::of_color(c),
            Hint::Rank(r) => IdentitySet::of_rank(r),
        };
        for (idx, slot) in self.slots.iter_mut().enumerate() {
            if touched.contains(&(idx as u8)) {
                slot.candidates = slot.candidates.intersect(attribute);
                match hint {
                    Hint::Color(c) => slot.color_hint = Some(c),
                    Hint::Rank(r) => slot.rank_hint = Some(r),
                }
                slot.hint_turns.push(turn);
            } else {
                slot.candidates = slot.candidates.minus(attribute);
            }
        }
    }

    pub fn remove_slot(&mut self, slot: usize) -> CardKnowledge {
        self.slots.remove(slot)
    }

    pub fn push_fresh(&mut self, draw_index: u8) {
        self.slots.push(CardKnowledge::fresh(draw_index));
    }

    /// The oldest card never touched by a hint.
    pub fn oldest_unhinted(&self) -> Option<usize> {
        self.slots.iter().position(|s| !s.is_hinted())
    }

    /// Applies public card counting, see [`apply_card_counting`].
    pub fn counted(&self, visible: &CardCounts) -> KnowledgeState {
        apply_card_counting(self, visible)
    }

    pub fn with_mode(&self, mode: KnowledgeMode, visible: &CardCounts) -> KnowledgeState {
        match mode {
            KnowledgeMode::HintsOnly => self.clone(),
            KnowledgeMode::CardCounting => self.counted(visible),
        }
    }
}

/// Counts of cards visible to a player other than their own hand.
pub fn visible_counts(fireworks: &Fireworks, discards: &[Card], partner_hand: &[Card]) -> CardCounts {
    let mut counts = CardCounts::from_cards(discards);
    for card in fireworks.cards() {
        counts.add(card);
    }
    for card in partner_hand {
        counts.add(*card);
    }
    counts
}

/// Intersects hint knowledge with public card counting.
///
/// `visible` holds every card the viewer can see outside their own hand
/// (fireworks, discards, partner's hand). Identities whose copies are all
/// visible are removed first; remaining candidates are then kept only if the
/// unseen multiset admits a full-hand assignment giving the slot that
/// identity.
pub fn apply_card_counting(k: &KnowledgeState, visible: &CardCounts) -> KnowledgeState {
    let full = CardCounts::full_deck();
    let mut capacity = [0u8; NUM_IDENTITIES];
    let mut live = IdentitySet::empty();
    for id in Identity::all() {
        let cap = full.get(id).saturating_sub(visible.get(id));
        capacity[id.index()] = cap;
        if cap > 0 {
            live.insert(id);
        }
    }

    let cands: Vec<IdentitySet> = k.slots.iter().map(|s| s.candidates.intersect(live)).collect();
    if cands.iter().any(|c| c.is_empty()) {
        // Inconsistent view; fall back to exhaustion-only pruning.
        return with_candidates(k, cands);
    }

    let mut pruned = cands.clone();
    for slot in 0..cands.len() {
        for id in cands[slot].iter() {
            capacity[id.index()] -= 1;
            let others: Vec<IdentitySet> = cands
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != slot)
                .map(|(_, c)| *c)
                .collect();
            if !hand_assignable(&others, &capacity) {
                pruned[slot].remove(id);
            }
            capacity[id.index()] += 1;
        }
    }
    with_candidates(k, pruned)
}

fn with_candidates(k: &KnowledgeState, cands: Vec<IdentitySet>) -> KnowledgeState {
    let mut out = k.clone();
    for (slot, c) in out.slots.iter_mut().zip(cands) {
        slot.candidates = c;
    }
    out
}

/// Whether every slot can be given a distinct unseen card from its candidate
/// set, with at most `capacity[id]` slots per identity. Bipartite
/// b-matching by augmenting paths.
fn hand_assignable(cands: &[IdentitySet], capacity: &[u8; NUM_IDENTITIES]) -> bool {
    let available: IdentitySet = Identity::all().filter(|id| capacity[id.index()] > 0).collect();
    // Hall's condition holds trivially when every slot has at least as many
    // available identities as there are slots.
    if cands.iter().all(|c| c.intersect(available).len() >= cands.len()) {
        return true;
    }

    // holders[id][..fill[id]] = slots currently assigned to that identity
    let mut holders = [[0u8; 3]; NUM_IDENTITIES];
    let mut fill = [0u8; NUM_IDENTITIES];

    fn augment(
        slot: usize,
        cands: &[IdentitySet],
        capacity: &[u8; NUM_IDENTITIES],
        holders: &mut [[u8; 3]; NUM_IDENTITIES],
        fill: &mut [u8; NUM_IDENTITIES],
        visited: &mut IdentitySet,
    ) -> bool {
        for id in cands[slot].iter() {
            if visited.contains(id) {
                continue;
            }
            visited.insert(id);
            let idx = id.index();
            if fill[idx] < capacity[idx] {
                holders[idx][fill[idx] as usize] = slot as u8;
                fill[idx] += 1;
                return true;
            }
            for pos in 0..fill[idx] as usize {
                let holder = holders[idx][pos] as usize;
                if augment(holder, cands, capacity, holders, fill, visited) {
                    holders[idx][pos] = slot as u8;
                    return true;
                }
            }
        }
        false
    }

    (0..cands.len()).all(|slot| {
        let mut visited = IdentitySet::empty();
        augment(slot, cands, capacity, &mut holders, &mut fill, &mut visited)
    })
}

pub fn is_known_playable(cands: IdentitySet, fireworks: &Fireworks) -> bool {
    !cands.is_empty() && cands.is_subset(fireworks.playable_set())
}

pub fn is_known_unplayable(cands: IdentitySet, fireworks: &Fireworks) -> bool {
    !cands.is_empty() && cands.intersect(fireworks.playable_set()).is_empty()
}

/// Fraction of candidates playable, treating candidates as equally likely.
pub fn playable_probability(cands: IdentitySet, fireworks: &Fireworks) -> f64 {
    if cands.is_empty() {
        return 0.0;
    }
    cands.intersect(fireworks.playable_set()).len() as f64 / cands.len() as f64
}

/// Single-step dominance label of a move.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DominanceLabel {
    #[default]
    None,
    /// Discarding a card known to be playable (strictly dominated).
    G1DiscardPlayable,
    /// Playing a card known to be unplayable (strictly dominated).
    G2PlayUnplayable,
    /// Playing a card known to be playable (weakly dominant).
    G3PlayPlayable,
}

impl DominanceLabel {
    pub fn code(self) -> u8 {
        match self {
            DominanceLabel::None => 0,
            DominanceLabel::G1DiscardPlayable => 1,
            DominanceLabel::G2PlayUnplayable => 2,
            DominanceLabel::G3PlayPlayable => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<DominanceLabel> {
        match code {
            0 => Some(DominanceLabel::None),
            1 => Some(DominanceLabel::G1DiscardPlayable),
            2 => Some(DominanceLabel::G2PlayUnplayable),
            3 => Some(DominanceLabel::G3PlayPlayable),
            _ => None,
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            DominanceLabel::None => "none",
            DominanceLabel::G1DiscardPlayable => "G1",
            DominanceLabel::G2PlayUnplayable => "G2",
            DominanceLabel::G3PlayPlayable => "G3",
        }
    }
}

/// Labels a move against the actor's knowledge (already counted, if counting
/// is wanted). Hints are never labeled.
pub fn label_move(k: &KnowledgeState, mv: Move, fireworks: &Fireworks) -> DominanceLabel {
    match mv {
        Move::Discard(slot) => match k.slots.get(slot as usize) {
            Some(s) if is_known_playable(s.candidates, fireworks) => DominanceLabel::G1DiscardPlayable,
            _ => DominanceLabel::None,
        },
        Move::Play(slot) => match k.slots.get(slot as usize) {
            Some(s) if is_known_playable(s.candidates, fireworks) => DominanceLabel::G3PlayPlayable,
            Some(s) if is_known_unplayable(s.candidates, fireworks) => DominanceLabel::G2PlayUnplayable,
            _ => DominanceLabel::None,
        },
        Move::HintColor(_) | Move::HintRank(_) => DominanceLabel::None,
    }
}

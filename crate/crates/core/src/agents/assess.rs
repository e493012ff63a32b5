//! Card-value judgements shared by the rule bots.

use crate::card::{CardCounts, Fireworks, Identity, IdentitySet};
use crate::knowledge::KnowledgeState;

/// Public facts about which identities still matter.
#[derive(Clone, Debug)]
pub struct CardValues {
    fireworks: Fireworks,
    discarded: CardCounts,
}

impl CardValues {
    pub fn new(fireworks: &Fireworks, discards: &[crate::card::Card]) -> CardValues {
        CardValues { fireworks: *fireworks, discarded: CardCounts::from_cards(discards) }
    }

    /// Already played, or unreachable because every copy of a lower rank in
    /// its suit has been discarded.
    pub fn is_dead(&self, id: Identity) -> bool {
        let height = self.fireworks.height(id.color());
        if id.rank() <= height {
            return true;
        }
        (height + 1..id.rank()).any(|r| {
            let lower = Identity::new(id.color(), r);
            self.discarded.get(lower) >= lower.copies()
        })
    }

    /// Still needed and this is the only copy not yet discarded.
    pub fn is_critical(&self, id: Identity) -> bool {
        !self.is_dead(id) && self.discarded.get(id) + 1 >= id.copies()
    }

    pub fn is_playable(&self, id: Identity) -> bool {
        self.fireworks.is_identity_playable(id)
    }

    pub fn all_dead(&self, cands: IdentitySet) -> bool {
        !cands.is_empty() && cands.iter().all(|id| self.is_dead(id))
    }

    pub fn all_critical(&self, cands: IdentitySet) -> bool {
        !cands.is_empty() && cands.iter().all(|id| self.is_critical(id))
    }

    /// Slots, oldest first, whose card is known to be a last live copy.
    pub fn known_critical_slots(&self, k: &KnowledgeState) -> Vec<usize> {
        (0..k.len()).filter(|&s| self.all_critical(k.candidates(s))).collect()
    }
}

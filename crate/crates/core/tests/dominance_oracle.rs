mod support;

use hanabi_core::{DominanceLabel, KnowledgeMode};
use support::sample_decisions;

fn check(mode: KnowledgeMode) {
    let points = sample_decisions(1000, mode);
    let disagreements: Vec<_> = points.iter().filter(|p| p.label != p.oracle).collect();
    assert!(disagreements.is_empty(), "{} disagreements, first: {:?}", disagreements.len(), disagreements[0]);
    for label in [DominanceLabel::G1DiscardPlayable, DominanceLabel::G2PlayUnplayable, DominanceLabel::G3PlayPlayable] {
        assert!(points.iter().any(|p| p.oracle == label), "sample never exercises {label:?}");
    }
}

#[test]
fn labels_match_oracle_with_card_counting() {
    check(KnowledgeMode::CardCounting);
}

#[test]
fn labels_match_oracle_with_hints_only() {
    check(KnowledgeMode::HintsOnly);
}

#[test]
fn sample_includes_points_decided_by_counting() {
    let counted = sample_decisions(1000, KnowledgeMode::CardCounting);
    let hinted = sample_decisions(1000, KnowledgeMode::HintsOnly);
    assert!(counted.iter().zip(&hinted).any(|(c, h)| c.oracle != h.oracle));
}

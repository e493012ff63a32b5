use hanabi_core::agents::{default_pool, LadderBot, LadderConfig, RandomBot};
use hanabi_core::harness::{agent_ref, replay, run_game, run_pairing};
use hanabi_core::knowledge::{apply_card_counting, visible_counts};
use hanabi_core::{GameState, KnowledgeMode, Rules};
use proptest::prelude::*;

fn check_game_invariants(deck_seed: u64, agent_seed: u64) -> Result<(), TestCaseError> {
    let mut state = GameState::new(deck_seed);
    let mut bots = [RandomBot::new(agent_seed), RandomBot::new(agent_seed ^ 1)];
    while !state.is_terminal() {
        prop_assert!(state.check_invariants().is_ok(), "{:?}", state.check_invariants());
        for seat in 0..2 {
            let hand = state.hand(seat);
            let hints = state.knowledge(seat);
            let counted = apply_card_counting(hints, &visible_counts(state.fireworks(), state.discards(), state.hand(1 - seat)));
            for (slot, card) in hand.iter().enumerate() {
                prop_assert!(hints.candidates(slot).contains(card.identity()), "hint knowledge excludes the true card");
                prop_assert!(counted.candidates(slot).contains(card.identity()), "counting excludes the true card");
                prop_assert!(counted.candidates(slot).is_subset(hints.candidates(slot)));
            }
        }
        let seat = state.current_seat();
        let mv = bots[seat].choose(&state.legal_moves());
        state.apply_move(mv).unwrap();
    }
    prop_assert!(state.check_invariants().is_ok());
    prop_assert!(state.score() <= 25);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn engine_and_knowledge_invariants(deck_seed in any::<u64>(), agent_seed in any::<u64>()) {
        check_game_invariants(deck_seed, agent_seed)?;
    }

    #[test]
    fn value_departs_from_simple_only_through_value_rules(deck_seed in any::<u64>()) {
        let simple = LadderBot::new(LadderConfig::simple());
        let value = LadderBot::new(LadderConfig::value());
        let mut state = GameState::new(deck_seed);
        while !state.is_terminal() {
            let obs = state.observation(state.current_seat());
            let (sm, _) = simple.decide(&obs);
            let (vm, rule) = value.decide(&obs);
            if !rule.is_value_rule() {
                prop_assert_eq!(sm, vm, "rule {:?} at turn {}", rule, state.turn_index());
            }
            state.apply_move(vm).unwrap();
        }
    }
}

#[test]
fn every_pool_pairing_replays_to_its_score() {
    let pool = default_pool();
    for a in &pool {
        for b in &pool {
            let batch = run_pairing(a, b, 4, 77, Rules::default(), KnowledgeMode::CardCounting, 0);
            assert!(batch.aborted.is_empty());
            for trace in &batch.traces {
                let end = replay(trace).unwrap();
                assert_eq!(end.score(), trace.score);
                assert!(trace.check_turn_counts());
            }
        }
    }
}

#[test]
fn games_are_deterministic_given_seeds() {
    let pool = default_pool();
    for spec in &pool {
        let play = || {
            let mut x = spec.build().unwrap();
            let mut y = spec.build().unwrap();
            let seats = [agent_ref(spec), agent_ref(spec)];
            let trace = run_game([x.as_mut(), y.as_mut()], seats, 0, 4242, Rules::default(), KnowledgeMode::CardCounting);
            serde_json::to_string(&trace.unwrap()).unwrap()
        };
        assert_eq!(play(), play(), "{} is not deterministic", spec.name);
    }
}

#[test]
fn pairing_results_do_not_depend_on_thread_count() {
    let pool = default_pool();
    let run = || run_pairing(&pool[0], &pool[6], 40, 5, Rules::default(), KnowledgeMode::CardCounting, 0);
    let parallel = run();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
    let json = |b: &hanabi_core::harness::GameBatch| serde_json::to_string(&b.traces).unwrap();
    assert_eq!(json(&parallel), json(&single));
}

//! Reference dominance labeler for differential tests. It rebuilds each
//! player's hint history from raw engine events and decides whether a card
//! is provably playable by searching for consistent assignments of the
//! whole hand, without touching the crate's knowledge types.

#![allow(dead_code)]

use hanabi_core::agents::{Agent, AgentSpec};
use hanabi_core::{Card, DominanceLabel, Event, GameState, Hint, KnowledgeMode, Move};

const COPIES: [u8; 5] = [3, 2, 2, 2, 1];

/// (color index, rank)
type Id = (usize, u8);

#[derive(Clone, Debug)]
struct Clue {
    hint: Hint,
    touched: bool,
}

fn clue_admits(clue: &Clue, id: Id) -> bool {
    let hit = match clue.hint {
        Hint::Color(c) => c.index() == id.0,
        Hint::Rank(r) => r == id.1,
    };
    hit == clue.touched
}

/// Hint histories of both hands, slot 0 oldest.
#[derive(Clone, Debug)]
pub struct History {
    hands: [Vec<Vec<Clue>>; 2],
}

impl History {
    pub fn new(state: &GameState) -> History {
        History { hands: [0, 1].map(|s| vec![Vec::new(); state.hand(s).len()]) }
    }

    /// Folds in one event. `drew` says whether the actor drew a card.
    pub fn observe(&mut self, event: &Event, drew: bool) {
        match event {
            Event::Play { seat, slot, .. } | Event::Discard { seat, slot, .. } => {
                let hand = &mut self.hands[*seat];
                hand.remove(*slot as usize);
                if drew {
                    hand.push(Vec::new());
                }
            }
            Event::Hint { seat, hint, touched } => {
                let hand = &mut self.hands[1 - *seat];
                for (i, clues) in hand.iter_mut().enumerate() {
                    clues.push(Clue { hint: *hint, touched: touched.contains(&(i as u8)) });
                }
            }
        }
    }
}

fn all_ids() -> impl Iterator<Item = Id> {
    (0..5).flat_map(|c| (1..=5u8).map(move |r| (c, r)))
}

fn admits(clues: &[Clue], id: Id) -> bool {
    clues.iter().all(|c| clue_admits(c, id))
}

/// Whether slots `from..` can be filled from `left` respecting clues.
fn fill(hand: &[Vec<Clue>], from: usize, left: &mut [[u8; 6]; 5]) -> bool {
    if from == hand.len() {
        return true;
    }
    for id in all_ids() {
        if left[id.0][id.1 as usize] > 0 && admits(&hand[from], id) {
            left[id.0][id.1 as usize] -= 1;
            let ok = fill(hand, from + 1, left);
            left[id.0][id.1 as usize] += 1;
            if ok {
                return true;
            }
        }
    }
    false
}

/// Identities the given slot may hold in some world consistent with the
/// viewer's information.
fn possible(hand: &[Vec<Clue>], slot: usize, visible: &[Card], counting: bool) -> Vec<Id> {
    if !counting {
        return all_ids().filter(|&id| admits(&hand[slot], id)).collect();
    }
    let mut left = [[0u8; 6]; 5];
    for row in left.iter_mut() {
        row[1..].copy_from_slice(&COPIES);
    }
    for card in visible {
        let cell = &mut left[card.color.index()][card.rank as usize];
        *cell = cell.saturating_sub(1);
    }
    let mut others: Vec<Vec<Clue>> = hand.to_vec();
    let mine = others.remove(slot);
    all_ids()
        .filter(|&id| {
            if left[id.0][id.1 as usize] == 0 || !admits(&mine, id) {
                return false;
            }
            left[id.0][id.1 as usize] -= 1;
            let ok = fill(&others, 0, &mut left);
            left[id.0][id.1 as usize] += 1;
            ok
        })
        .collect()
}

/// Reference label for the move about to be made in `state`.
pub fn oracle_label(state: &GameState, history: &History, mv: Move, mode: KnowledgeMode) -> DominanceLabel {
    let seat = state.current_seat();
    let slot = match mv {
        Move::Play(s) | Move::Discard(s) => s as usize,
        _ => return DominanceLabel::None,
    };
    let heights: Vec<u8> = (0..5).map(|c| state.fireworks().0[c]).collect();
    let mut visible: Vec<Card> = state.discards().to_vec();
    visible.extend(state.hand(1 - seat).iter().copied());
    for (c, &h) in heights.iter().enumerate() {
        for r in 1..=h {
            visible.push(Card::new(hanabi_core::Color::ALL[c], r));
        }
    }
    let options = possible(&history.hands[seat], slot, &visible, mode == KnowledgeMode::CardCounting);
    let playable = |id: &Id| id.1 == heights[id.0] + 1;
    let all_playable = !options.is_empty() && options.iter().all(playable);
    let none_playable = !options.is_empty() && !options.iter().any(playable);
    match mv {
        Move::Discard(_) if all_playable => DominanceLabel::G1DiscardPlayable,
        Move::Play(_) if all_playable => DominanceLabel::G3PlayPlayable,
        Move::Play(_) if none_playable => DominanceLabel::G2PlayUnplayable,
        _ => DominanceLabel::None,
    }
}

/// One play or discard decision: the crate's label against the oracle's.
#[derive(Clone, Debug)]
pub struct DecisionPoint {
    pub deck_seed: u64,
    pub turn: u32,
    pub mv: Move,
    pub label: DominanceLabel,
    pub oracle: DominanceLabel,
}

/// Plays one game between two pool agents, collecting every play or
/// discard decision.
pub fn game_decisions(specs: [&AgentSpec; 2], deck_seed: u64, mode: KnowledgeMode) -> Vec<DecisionPoint> {
    let mut agents: Vec<Box<dyn Agent>> = specs.iter().map(|s| s.build().expect("agent builds")).collect();
    for (seat, a) in agents.iter_mut().enumerate() {
        a.begin_game(seat, deck_seed).expect("begin game");
    }
    let mut state = GameState::new(deck_seed);
    let mut history = History::new(&state);
    let mut out = Vec::new();
    while !state.is_terminal() {
        let seat = state.current_seat();
        let obs = state.observation(seat);
        let mv = agents[seat].act(&obs).expect("agent acts");
        if matches!(mv, Move::Play(_) | Move::Discard(_)) {
            let own = obs.own_knowledge_in(mode);
            out.push(DecisionPoint {
                deck_seed,
                turn: state.turn_index(),
                mv,
                label: hanabi_core::knowledge::label_move(&own, mv, &obs.fireworks),
                oracle: oracle_label(&state, &history, mv, mode),
            });
        }
        let drew = state.deck_size() > 0;
        let event = state.apply_move(mv).expect("legal move");
        history.observe(&event, drew && !matches!(event, Event::Hint { .. }));
    }
    out
}

/// The first `n` play or discard decisions from games cycling through a mix
/// of random and rule-based pairings, so every label occurs.
pub fn sample_decisions(n: usize, mode: KnowledgeMode) -> Vec<DecisionPoint> {
    let pool = hanabi_core::agents::default_pool();
    let by_name = |name: &str| pool.iter().find(|s| s.name == name).expect("pool agent");
    let pairings = [("random-1", "random-2"), ("random-1", "holmes"), ("simple", "smart"), ("value", "holmes-bold")];
    let mut out = Vec::new();
    let mut seed = 0u64;
    while out.len() < n {
        let (a, b) = pairings[seed as usize % pairings.len()];
        out.extend(game_decisions([by_name(a), by_name(b)], seed, mode));
        seed += 1;
    }
    out.truncate(n);
    out
}

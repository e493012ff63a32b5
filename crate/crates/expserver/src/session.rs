//! One participant's session: two blocks of four games against a pair of
//! bots, questionable-move flags and the two surveys. Everything here is
//! synchronous; the HTTP layer serializes access per session.

use hanabi_core::agents::{Agent, AgentSpec};
use hanabi_core::engine::EngineError;
use hanabi_core::harness::TurnAnnotator;
use hanabi_core::rng::mix_seeds;
use hanabi_core::stats::ratings::{LIKERT_MAX, LIKERT_MIN};
use hanabi_core::{DominanceLabel, Event, GameState, KnowledgeMode, Move, Seat};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const GAMES_PER_BLOCK: u8 = 4;
pub const BLOCKS: u8 = 2;
pub const TOTAL_GAMES: u8 = GAMES_PER_BLOCK * BLOCKS;
pub const HUMAN_SEAT: Seat = 0;
pub const BOT_SEAT: Seat = 1;
pub const BLOCK_LABELS: [&str; 2] = ["first", "second"];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SessionError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Invalid(String),
    #[error("bot failed: {0}")]
    Bot(String),
}

/// Zero-based block of a one-based game number.
pub fn block_of(game: u8) -> Option<usize> {
    (1..=TOTAL_GAMES).contains(&game).then(|| usize::from((game - 1) / GAMES_PER_BLOCK))
}

/// The first game of each block is a warm-up and not analysed.
pub fn is_test_game(game: u8) -> bool {
    block_of(game).is_some() && (game - 1) % GAMES_PER_BLOCK == 0
}

pub fn is_eligible(game: u8) -> bool {
    block_of(game).is_some() && !is_test_game(game)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BotMove {
    pub turn: u32,
    pub action_id: u8,
    pub label: DominanceLabel,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flag {
    /// Turn of the bot move the click refers to.
    pub turn: u32,
    pub action_id: u8,
    pub label: DominanceLabel,
}

pub struct LiveGame {
    pub number: u8,
    pub deck_seed: u64,
    pub state: GameState,
    bot: Box<dyn Agent>,
    annotator: TurnAnnotator,
    pub bot_moves: Vec<BotMove>,
    pub flags: Vec<Flag>,
}

impl LiveGame {
    pub fn is_over(&self) -> bool {
        self.state.is_terminal()
    }

    pub fn last_bot_event(&self) -> Option<&Event> {
        self.state.last_event().filter(|e| e.seat() == BOT_SEAT)
    }
}

/// Result of one human move: the applied events with the bot's label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoveOutcome {
    pub human: Event,
    pub human_label: DominanceLabel,
    pub bot: Option<(Event, DominanceLabel)>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Playing,
    AwaitingFinalSurvey,
    Complete,
}

pub struct Session {
    pub id: String,
    pub seed: u64,
    /// Bot of block 1 and block 2.
    pub bots: [AgentSpec; 2],
    pub familiarity: Option<u8>,
    pub screened: bool,
    /// Games started so far, in order.
    pub games: Vec<LiveGame>,
    pub block_surveys: [Option<[u8; 8]>; 2],
    pub final_survey: Option<[u8; 7]>,
}

fn check_items(items: &[u8]) -> Result<(), SessionError> {
    match items.iter().find(|p| !(LIKERT_MIN..=LIKERT_MAX).contains(*p)) {
        Some(p) => Err(SessionError::Invalid(format!("response {p} outside {LIKERT_MIN}..={LIKERT_MAX}"))),
        None => Ok(()),
    }
}

impl Session {
    pub fn new(id: String, seed: u64, bots: [AgentSpec; 2], familiarity: Option<u8>, screened: bool) -> Session {
        Session { id, seed, bots, familiarity, screened, games: Vec::new(), block_surveys: [None, None], final_survey: None }
    }

    pub fn status(&self) -> SessionStatus {
        match (self.block_surveys.iter().all(Option::is_some), self.final_survey.is_some()) {
            (_, true) => SessionStatus::Complete,
            (true, false) => SessionStatus::AwaitingFinalSurvey,
            _ => SessionStatus::Playing,
        }
    }

    pub fn block_complete(&self, block: usize) -> bool {
        let last = (block as u8 + 1) * GAMES_PER_BLOCK;
        self.games.get(usize::from(last) - 1).is_some_and(LiveGame::is_over)
    }

    /// The game, starting it if it is the next one due. Games are played in
    /// order, and a block's games open only after the previous block's
    /// survey.
    pub fn game_mut(&mut self, number: u8) -> Result<&mut LiveGame, SessionError> {
        let block = block_of(number).ok_or_else(|| SessionError::NotFound(format!("no game {number}")))?;
        let idx = usize::from(number - 1);
        if idx < self.games.len() {
            return Ok(&mut self.games[idx]);
        }
        if idx > self.games.len() || self.games.last().is_some_and(|g| !g.is_over()) {
            return Err(SessionError::NotFound(format!("game {number} is not open yet")));
        }
        if block > 0 && self.block_surveys[block - 1].is_none() {
            return Err(SessionError::NotFound(format!("game {number} opens after the block {block} survey")));
        }
        let deck_seed = mix_seeds(&[self.seed, u64::from(number)]);
        let mut bot = self.bots[block].build().map_err(|e| SessionError::Bot(e.to_string()))?;
        bot.begin_game(BOT_SEAT, deck_seed).map_err(|e| SessionError::Bot(e.to_string()))?;
        self.games.push(LiveGame {
            number,
            deck_seed,
            state: GameState::new(deck_seed),
            bot,
            annotator: TurnAnnotator::new(KnowledgeMode::CardCounting),
            bot_moves: Vec::new(),
            flags: Vec::new(),
        });
        Ok(&mut self.games[idx])
    }

    pub fn game(&self, number: u8) -> Option<&LiveGame> {
        self.games.get(usize::from(number).checked_sub(1)?)
    }

    /// Applies the human's move and the bot's reply. An illegal move is
    /// rejected without changing anything.
    pub fn play(&mut self, number: u8, action_id: u8) -> Result<MoveOutcome, SessionError> {
        let game = self.game_mut(number)?;
        if game.is_over() {
            return Err(SessionError::Conflict(format!("game {number} is over")));
        }
        if game.state.current_seat() != HUMAN_SEAT {
            return Err(SessionError::Conflict("not the human's turn".into()));
        }
        let mv = Move::from_action_id(action_id)
            .ok_or_else(|| SessionError::Invalid(format!("unknown action id {action_id}")))?;
        if let Err(e) = game.state.clone().apply_move(mv) {
            return Err(match e {
                EngineError::GameOver(_) => SessionError::Conflict(e.to_string()),
                EngineError::IllegalMove { .. } => SessionError::Invalid(e.to_string()),
            });
        }
        let human_label = game.annotator.annotate(&game.state, mv).label;
        let human = game.state.apply_move(mv).expect("move checked legal");
        game.annotator.after(&human);
        if game.is_over() {
            game.bot.end_game();
            return Ok(MoveOutcome { human, human_label, bot: None });
        }

        let obs = game.state.observation(BOT_SEAT);
        let bot_mv = game.bot.act(&obs).map_err(|e| SessionError::Bot(e.to_string()))?;
        if !game.state.is_legal(bot_mv) {
            return Err(SessionError::Bot(format!("bot chose illegal action {}", bot_mv.action_id())));
        }
        let record = game.annotator.annotate(&game.state, bot_mv);
        let turn = game.state.turn_index();
        let event = game.state.apply_move(bot_mv).expect("move checked legal");
        game.annotator.after(&event);
        game.bot_moves.push(BotMove { turn, action_id: record.action_id, label: record.label });
        if game.is_over() {
            game.bot.end_game();
        }
        Ok(MoveOutcome { human, human_label, bot: Some((event, record.label)) })
    }

    /// Records a "partner's last move was questionable" click. It has no
    /// effect on play.
    pub fn flag(&mut self, number: u8) -> Result<Flag, SessionError> {
        let game = self.game_mut(number)?;
        let last = game.bot_moves.last().ok_or_else(|| SessionError::Conflict("the bot has not moved yet".into()))?;
        let flag = Flag { turn: last.turn, action_id: last.action_id, label: last.label };
        game.flags.push(flag);
        Ok(flag)
    }

    /// `block` is one-based.
    pub fn submit_block_survey(&mut self, block: u8, items: [u8; 8]) -> Result<(), SessionError> {
        let idx = usize::from(block).checked_sub(1).filter(|&b| b < usize::from(BLOCKS));
        let idx = idx.ok_or_else(|| SessionError::NotFound(format!("no block {block}")))?;
        check_items(&items)?;
        if self.block_surveys[idx].is_some() {
            return Err(SessionError::Conflict(format!("block {block} survey already submitted")));
        }
        if !self.block_complete(idx) {
            return Err(SessionError::Conflict(format!("block {block} games are not finished")));
        }
        self.block_surveys[idx] = Some(items);
        Ok(())
    }

    pub fn submit_final_survey(&mut self, items: [u8; 7]) -> Result<(), SessionError> {
        check_items(&items)?;
        match self.status() {
            SessionStatus::Playing => Err(SessionError::Conflict("both blocks must be finished first".into())),
            SessionStatus::Complete => Err(SessionError::Conflict("final survey already submitted".into())),
            SessionStatus::AwaitingFinalSurvey => {
                self.final_survey = Some(items);
                Ok(())
            }
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use hanabi_core::agents::AgentKind;

    pub(crate) fn bots() -> [AgentSpec; 2] {
        [AgentSpec::new("simple", AgentKind::Simple), AgentSpec::new("random-1", AgentKind::Random).with_seed(1)]
    }

    /// Plays the game to the end with the first legal move each turn.
    pub(crate) fn finish(s: &mut Session, n: u8) {
        while !s.game_mut(n).unwrap().is_over() {
            let id = s.game(n).unwrap().state.legal_moves()[0].action_id();
            s.play(n, id).unwrap();
        }
    }

    #[test]
    fn schedule() {
        let tests: Vec<u8> = (1..=8).filter(|&g| is_test_game(g)).collect();
        assert_eq!(tests, vec![1, 5]);
        let eligible: Vec<u8> = (1..=8).filter(|&g| is_eligible(g)).collect();
        assert_eq!(eligible, vec![2, 3, 4, 6, 7, 8]);
        assert_eq!(block_of(0), None);
        assert_eq!(block_of(9), None);
        assert_eq!(block_of(4), Some(0));
        assert_eq!(block_of(5), Some(1));
    }

    #[test]
    fn games_open_in_order() {
        let mut s = Session::new("s".into(), 1, bots(), None, false);
        assert!(matches!(s.game_mut(2), Err(SessionError::NotFound(_))));
        s.game_mut(1).unwrap();
        assert!(matches!(s.game_mut(2), Err(SessionError::NotFound(_))));
        finish(&mut s, 1);
        s.game_mut(2).unwrap();
    }

    /// Hints every turn until the human faces zero tokens; false if the
    /// game ends first.
    pub(crate) fn drain_tokens(s: &mut Session, n: u8) -> bool {
        loop {
            let game = s.game_mut(n).unwrap();
            if game.is_over() {
                return false;
            }
            if game.state.hint_tokens() == 0 {
                return true;
            }
            let moves = game.state.legal_moves();
            let mv = moves.iter().find(|m| m.hint().is_some()).unwrap_or(&moves[0]);
            let id = mv.action_id();
            s.play(n, id).unwrap();
        }
    }

    #[test]
    fn illegal_hint_at_zero_tokens_is_rejected() {
        // A random partner mostly hints too; try decks until one runs dry.
        let [simple, random] = bots();
        let mut s = (0..50)
            .map(|seed| Session::new("s".into(), seed, [random.clone(), simple.clone()], None, false))
            .find_map(|mut s| drain_tokens(&mut s, 1).then_some(s))
            .expect("some deck lets the human run out of tokens");
        let before = s.game(1).unwrap().state.turn_index();
        assert!(matches!(s.play(1, Move::HintRank(1).action_id()), Err(SessionError::Invalid(_))));
        assert_eq!(s.game(1).unwrap().state.turn_index(), before);
        assert_eq!(s.game(1).unwrap().state.hint_tokens(), 0);
    }

    #[test]
    fn moves_advance_two_plies_or_one_at_the_end() {
        let mut s = Session::new("s".into(), 5, bots(), None, false);
        loop {
            let before = s.game_mut(1).unwrap().state.turn_index();
            let id = s.game(1).unwrap().state.legal_moves()[0].action_id();
            let out = s.play(1, id).unwrap();
            let after = s.game(1).unwrap().state.turn_index();
            if s.game(1).unwrap().is_over() {
                assert_eq!(after - before, if out.bot.is_some() { 2 } else { 1 });
                break;
            }
            assert_eq!(after - before, 2);
        }
        assert!(matches!(s.play(1, 0), Err(SessionError::Conflict(_))));
    }

    #[test]
    fn flags_reference_the_last_bot_move() {
        let mut s = Session::new("s".into(), 7, bots(), None, false);
        s.game_mut(1).unwrap();
        assert!(matches!(s.flag(1), Err(SessionError::Conflict(_))));
        let id = s.game(1).unwrap().state.legal_moves()[0].action_id();
        s.play(1, id).unwrap();
        let a = s.flag(1).unwrap();
        let b = s.flag(1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.turn, 1);
        assert_eq!(s.game(1).unwrap().flags.len(), 2);
    }

    #[test]
    fn surveys_follow_the_schedule() {
        let mut s = Session::new("s".into(), 9, bots(), Some(3), false);
        assert!(matches!(s.submit_block_survey(1, [4; 8]), Err(SessionError::Conflict(_))));
        for g in 1..=4 {
            finish(&mut s, g);
        }
        assert!(matches!(s.game_mut(5), Err(SessionError::NotFound(_))));
        assert!(matches!(s.submit_block_survey(1, [0; 8]), Err(SessionError::Invalid(_))));
        s.submit_block_survey(1, [4; 8]).unwrap();
        assert!(matches!(s.submit_block_survey(1, [4; 8]), Err(SessionError::Conflict(_))));
        assert!(matches!(s.submit_final_survey([4; 7]), Err(SessionError::Conflict(_))));
        for g in 5..=8 {
            finish(&mut s, g);
        }
        s.submit_block_survey(2, [5; 8]).unwrap();
        assert_eq!(s.status(), SessionStatus::AwaitingFinalSurvey);
        s.submit_final_survey([4; 7]).unwrap();
        assert_eq!(s.status(), SessionStatus::Complete);
        assert!(matches!(s.submit_final_survey([4; 7]), Err(SessionError::Conflict(_))));
    }
}

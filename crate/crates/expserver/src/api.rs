//! HTTP handlers. Every payload carries `schema`; errors are
//! `{"schema", "error": {"code", "message"}}`.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use hanabi_core::card::Fireworks;
use hanabi_core::{Card, Color, Event};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::export::{export_dataset, Dataset};
use crate::session::{block_of, is_test_game, Session, SessionError, SessionStatus, BLOCK_LABELS, HUMAN_SEAT, TOTAL_GAMES};
use crate::store::{move_records, Record};
use crate::{AppState, SCHEMA};

pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> ApiError {
        ApiError { status, code, message: message.into() }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> ApiError {
        let (status, code) = match &e {
            SessionError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            SessionError::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
            SessionError::Invalid(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid"),
            SessionError::Bot(_) => (StatusCode::INTERNAL_SERVER_ERROR, "bot_failure"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    schema: u32,
    error: ErrorDetail<'a>,
}

#[derive(Serialize)]
struct ErrorDetail<'a> {
    code: &'a str,
    message: &'a str,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody { schema: SCHEMA, error: ErrorDetail { code: self.code, message: &self.message } };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn parse_body<T: DeserializeOwned + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "bad_request", e.to_string()))
}

fn parse_game(raw: &str) -> Result<u8, ApiError> {
    raw.parse::<u8>()
        .ok()
        .filter(|n| block_of(*n).is_some())
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no game {raw}")))
}

fn log(state: &AppState, records: &[Record]) -> Result<(), ApiError> {
    let mut log = state.log.lock().expect("log lock");
    log.append(records).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", e.to_string()))
}

#[derive(Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CreateSession {
    familiarity: Option<u8>,
    screened: bool,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct GameSummary {
    pub number: u8,
    pub test_game: bool,
    pub started: bool,
    pub finished: bool,
}

/// Bots appear only as "first" and "second".
#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct BlockView {
    pub label: String,
    pub games: Vec<GameSummary>,
    pub survey_submitted: bool,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct SessionView {
    pub schema: u32,
    pub session: String,
    pub status: SessionStatus,
    pub blocks: Vec<BlockView>,
}

fn session_view(s: &Session) -> SessionView {
    let blocks = (0..2)
        .map(|b| BlockView {
            label: BLOCK_LABELS[b].into(),
            games: (1..=TOTAL_GAMES)
                .filter(|&n| block_of(n) == Some(b))
                .map(|n| GameSummary {
                    number: n,
                    test_game: is_test_game(n),
                    started: s.game(n).is_some(),
                    finished: s.game(n).is_some_and(|g| g.is_over()),
                })
                .collect(),
            survey_submitted: s.block_surveys[b].is_some(),
        })
        .collect();
    SessionView { schema: SCHEMA, session: s.id.clone(), status: s.status(), blocks }
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct OwnCardView {
    pub color_hint: Option<Color>,
    pub rank_hint: Option<u8>,
}

/// The human's view. Their own cards appear only as hint badges.
#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct ObservationView {
    pub schema: u32,
    pub session: String,
    pub game: u8,
    pub block: String,
    pub test_game: bool,
    pub turn: u32,
    pub your_turn: bool,
    pub finished: bool,
    pub score: u8,
    pub hint_tokens: u8,
    pub bombs_remaining: u8,
    pub deck_size: usize,
    pub final_round_turns_left: Option<u8>,
    pub fireworks: Fireworks,
    pub discards: Vec<Card>,
    pub partner_hand: Vec<Card>,
    pub own_hand: Vec<OwnCardView>,
    pub last_bot_move: Option<Event>,
    pub legal_action_ids: Vec<u8>,
}

fn observation_view(s: &Session, number: u8) -> ObservationView {
    let game = s.game(number).expect("game started");
    let obs = game.state.observation(HUMAN_SEAT);
    let finished = game.is_over();
    ObservationView {
        schema: SCHEMA,
        session: s.id.clone(),
        game: number,
        block: BLOCK_LABELS[block_of(number).expect("scheduled game")].into(),
        test_game: is_test_game(number),
        turn: obs.turn_index,
        your_turn: !finished && obs.current_seat == HUMAN_SEAT,
        finished,
        score: game.state.score(),
        hint_tokens: obs.hint_tokens,
        bombs_remaining: obs.bombs_remaining,
        deck_size: obs.deck_size,
        final_round_turns_left: obs.final_round_turns_left,
        fireworks: obs.fireworks,
        discards: obs.discards.clone(),
        partner_hand: obs.partner_hand.clone(),
        own_hand: obs
            .own_knowledge
            .slots
            .iter()
            .map(|k| OwnCardView { color_hint: k.color_hint, rank_hint: k.rank_hint })
            .collect(),
        last_bot_move: game.last_bot_event().cloned(),
        legal_action_ids: if finished { Vec::new() } else { obs.legal_moves().iter().map(|m| m.action_id()).collect() },
    }
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MoveRequest {
    action_id: u8,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct MoveResponse {
    pub schema: u32,
    pub human: Event,
    pub bot: Option<Event>,
    pub observation: ObservationView,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct Ack {
    pub schema: u32,
    pub acknowledged: bool,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct FlagAck {
    pub schema: u32,
    pub acknowledged: bool,
    /// Turn of the partner move the click refers to.
    pub turn: u32,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockSurvey {
    block: u8,
    items: Vec<u8>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FinalSurvey {
    items: Vec<u8>,
}

fn items<const N: usize>(raw: Vec<u8>) -> Result<[u8; N], ApiError> {
    let len = raw.len();
    raw.try_into().map_err(|_| {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid", format!("expected {N} items, got {len}"))
    })
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let req: CreateSession = parse_body(&body)?;
    if req.familiarity.is_some_and(|f| !(1..=7).contains(&f)) {
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid", "familiarity must be 1..=7"));
    }
    let session = state.create_session(req.familiarity, req.screened)?;
    let s = session.lock().expect("session lock");
    log(
        &state,
        &[Record::SessionCreated {
            session: s.id.clone(),
            seed: s.seed,
            bots: s.bots.clone(),
            familiarity: s.familiarity,
            screened: s.screened,
        }],
    )?;
    Ok((StatusCode::CREATED, Json(session_view(&s))))
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<SessionView> {
    let session = state.session(&id)?;
    let s = session.lock().expect("session lock");
    Ok(Json(session_view(&s)))
}

async fn get_observation(
    State(state): State<Arc<AppState>>,
    Path((id, n)): Path<(String, String)>,
) -> ApiResult<ObservationView> {
    let n = parse_game(&n)?;
    let session = state.session(&id)?;
    let mut s = session.lock().expect("session lock");
    s.game_mut(n)?;
    Ok(Json(observation_view(&s, n)))
}

async fn post_move(
    State(state): State<Arc<AppState>>,
    Path((id, n)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<MoveResponse> {
    let n = parse_game(&n)?;
    let req: MoveRequest = parse_body(&body)?;
    let session = state.session(&id)?;
    let mut s = session.lock().expect("session lock");
    let turn = s.game_mut(n)?.state.turn_index();
    let outcome = s.play(n, req.action_id)?;
    log(&state, &move_records(&s.id, n, turn, &outcome))?;
    Ok(Json(MoveResponse {
        schema: SCHEMA,
        human: outcome.human,
        bot: outcome.bot.map(|(e, _)| e),
        observation: observation_view(&s, n),
    }))
}

async fn post_questionable(
    State(state): State<Arc<AppState>>,
    Path((id, n)): Path<(String, String)>,
) -> ApiResult<FlagAck> {
    let n = parse_game(&n)?;
    let session = state.session(&id)?;
    let mut s = session.lock().expect("session lock");
    let flag = s.flag(n)?;
    log(&state, &[Record::Questionable { session: s.id.clone(), game: n, turn: flag.turn, label: flag.label }])?;
    Ok(Json(FlagAck { schema: SCHEMA, acknowledged: true, turn: flag.turn }))
}

async fn post_block_survey(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<Ack> {
    let req: BlockSurvey = parse_body(&body)?;
    let items = items::<8>(req.items)?;
    let session = state.session(&id)?;
    let mut s = session.lock().expect("session lock");
    s.submit_block_survey(req.block, items)?;
    log(&state, &[Record::BlockSurvey { session: s.id.clone(), block: req.block, items }])?;
    Ok(Json(Ack { schema: SCHEMA, acknowledged: true }))
}

async fn post_final_survey(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<Ack> {
    let req: FinalSurvey = parse_body(&body)?;
    let items = items::<7>(req.items)?;
    let session = state.session(&id)?;
    let mut s = session.lock().expect("session lock");
    s.submit_final_survey(items)?;
    log(&state, &[Record::FinalSurvey { session: s.id.clone(), items }])?;
    Ok(Json(Ack { schema: SCHEMA, acknowledged: true }))
}

async fn get_export(State(state): State<Arc<AppState>>) -> ApiResult<Dataset> {
    let sessions = state.all_sessions();
    let guards: Vec<_> = sessions.iter().map(|s| s.lock().expect("session lock")).collect();
    Ok(Json(export_dataset(guards.iter().map(|g| &**g))))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/games/{n}/observation", get(get_observation))
        .route("/sessions/{id}/games/{n}/move", post(post_move))
        .route("/sessions/{id}/games/{n}/questionable", post(post_questionable))
        .route("/sessions/{id}/survey/block", post(post_block_survey))
        .route("/sessions/{id}/survey/final", post(post_final_survey))
        .route("/export", get(get_export))
        .with_state(state)
}

//! Dataset export: teamwork ratings, preference ratings, human-bot game
//! scores and attribution of questionable-move clicks.

use std::path::Path;

use hanabi_core::stats::{write_ratings, ComparisonRating, TeamworkRating};
use hanabi_core::{ActionCategory, DominanceLabel};
use serde::{Deserialize, Serialize};

use crate::session::{block_of, is_eligible, is_test_game, Session};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameRow {
    pub session: String,
    pub game: u8,
    pub block: u8,
    pub bot: String,
    pub algorithm: String,
    pub test_game: bool,
    pub eligible: bool,
    pub finished: bool,
    pub score: u8,
}

/// Mean score of a session block over its finished, analysis-eligible
/// games.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockScoreRow {
    pub session: String,
    pub block: u8,
    pub algorithm: String,
    pub games: usize,
    pub mean_score: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub first_bot: String,
    pub second_bot: String,
    pub rating: ComparisonRating,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributionRow {
    /// "label" (dominance label of the flagged move) or "category".
    pub dimension: String,
    pub category: String,
    pub clicks: usize,
    pub percent: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema: u32,
    pub ratings: Vec<TeamworkRating>,
    pub comparisons: Vec<ComparisonRow>,
    pub games: Vec<GameRow>,
    pub block_scores: Vec<BlockScoreRow>,
    pub attribution: Vec<AttributionRow>,
}

const LABELS: [DominanceLabel; 4] = [
    DominanceLabel::G1DiscardPlayable,
    DominanceLabel::G2PlayUnplayable,
    DominanceLabel::G3PlayPlayable,
    DominanceLabel::None,
];

const CATEGORIES: [(ActionCategory, &str); 4] = [
    (ActionCategory::Play, "play"),
    (ActionCategory::Discard, "discard"),
    (ActionCategory::HintColor, "hint_color"),
    (ActionCategory::HintRank, "hint_rank"),
];

fn percent(part: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * part as f64 / total as f64
    }
}

pub fn export_dataset<'a>(sessions: impl IntoIterator<Item = &'a Session>) -> Dataset {
    let mut data = Dataset { schema: crate::SCHEMA, ..Dataset::default() };
    let mut flags = Vec::new();
    for s in sessions {
        for (b, items) in s.block_surveys.iter().enumerate() {
            if let Some(items) = items {
                let rating = TeamworkRating::new(&s.id, s.bots[b].algorithm(), b as u8 + 1, *items)
                    .expect("stored surveys were validated");
                data.ratings.push(rating);
            }
        }
        if let Some(items) = s.final_survey {
            data.comparisons.push(ComparisonRow {
                first_bot: s.bots[0].algorithm().into(),
                second_bot: s.bots[1].algorithm().into(),
                rating: ComparisonRating::new(&s.id, items).expect("stored surveys were validated"),
            });
        }
        for g in &s.games {
            let block = block_of(g.number).expect("started games are scheduled");
            data.games.push(GameRow {
                session: s.id.clone(),
                game: g.number,
                block: block as u8 + 1,
                bot: s.bots[block].name.clone(),
                algorithm: s.bots[block].algorithm().into(),
                test_game: is_test_game(g.number),
                eligible: is_eligible(g.number),
                finished: g.is_over(),
                score: g.state.score(),
            });
            flags.extend(g.flags.iter().copied());
        }
        for (b, bot) in s.bots.iter().enumerate() {
            let scores: Vec<f64> = data
                .games
                .iter()
                .filter(|r| r.session == s.id && usize::from(r.block) == b + 1 && r.eligible && r.finished)
                .map(|r| f64::from(r.score))
                .collect();
            data.block_scores.push(BlockScoreRow {
                session: s.id.clone(),
                block: b as u8 + 1,
                algorithm: bot.algorithm().into(),
                games: scores.len(),
                mean_score: (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64),
            });
        }
    }
    for label in LABELS {
        let clicks = flags.iter().filter(|f| f.label == label).count();
        data.attribution.push(AttributionRow {
            dimension: "label".into(),
            category: label.short_name().into(),
            clicks,
            percent: percent(clicks, flags.len()),
        });
    }
    for (cat, name) in CATEGORIES {
        let clicks = flags.iter().filter(|f| ActionCategory::of_action_id(f.action_id) == Some(cat)).count();
        data.attribution.push(AttributionRow {
            dimension: "category".into(),
            category: name.into(),
            clicks,
            percent: percent(clicks, flags.len()),
        });
    }
    data
}

pub const RATINGS_FILE: &str = "ratings.csv";
pub const COMPARISONS_FILE: &str = "comparisons.csv";
pub const GAMES_FILE: &str = "games.csv";
pub const BLOCK_SCORES_FILE: &str = "block_scores.csv";
pub const ATTRIBUTION_FILE: &str = "attribution.csv";

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<(), String> {
    let err = |e: csv::Error| format!("{}: {e}", path.display());
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| format!("{}: {e}", path.display()))
}

/// Writes every table as CSV into `dir`. Empty tables still get headers.
pub fn write_dataset(dir: &Path, data: &Dataset) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    write_ratings(&dir.join(RATINGS_FILE), &data.ratings).map_err(|e| e.to_string())?;
    write_csv(
        &dir.join(COMPARISONS_FILE),
        &["participant", "first_bot", "second_bot", "p1", "p2", "p3", "p4", "p5", "p6", "p7", "sum"],
        data.comparisons.iter().map(|c| {
            let mut row = vec![c.rating.participant.clone(), c.first_bot.clone(), c.second_bot.clone()];
            row.extend(c.rating.items.iter().map(|p| p.to_string()));
            row.push(c.rating.sum().to_string());
            row
        }),
    )?;
    write_csv(
        &dir.join(GAMES_FILE),
        &["session", "game", "block", "bot", "algorithm", "test_game", "eligible", "finished", "score"],
        data.games.iter().map(|g| {
            vec![
                g.session.clone(),
                g.game.to_string(),
                g.block.to_string(),
                g.bot.clone(),
                g.algorithm.clone(),
                g.test_game.to_string(),
                g.eligible.to_string(),
                g.finished.to_string(),
                g.score.to_string(),
            ]
        }),
    )?;
    write_csv(
        &dir.join(BLOCK_SCORES_FILE),
        &["session", "block", "algorithm", "games", "mean_score"],
        data.block_scores.iter().map(|b| {
            vec![
                b.session.clone(),
                b.block.to_string(),
                b.algorithm.clone(),
                b.games.to_string(),
                b.mean_score.map(|m| m.to_string()).unwrap_or_else(|| "NA".into()),
            ]
        }),
    )?;
    write_csv(
        &dir.join(ATTRIBUTION_FILE),
        &["dimension", "category", "clicks", "percent"],
        data.attribution.iter().map(|a| {
            vec![a.dimension.clone(), a.category.clone(), a.clicks.to_string(), a.percent.to_string()]
        }),
    )
}

//! Concept formulas over decision-context atoms, for context independence.

use std::collections::HashSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::harness::DecisionContext;
use crate::moves::ActionCategory;

/// A registered atomic predicate on a decision context.
#[derive(Copy, Clone, Debug)]
pub struct Atom {
    pub name: &'static str,
    pub eval: fn(&DecisionContext) -> bool,
}

macro_rules! atom {
    ($name:expr, |$c:ident| $body:expr) => {
        Atom { name: $name, eval: |$c: &DecisionContext| $body }
    };
}

/// The default predicate pool: binned counters and boolean flags.
pub fn default_atoms() -> Vec<Atom> {
    vec![
        atom!("hints=0", |c| c.hint_tokens == 0),
        atom!("hints=1-3", |c| (1..=3).contains(&c.hint_tokens)),
        atom!("hints=4-7", |c| (4..=7).contains(&c.hint_tokens)),
        atom!("hints=8", |c| c.hint_tokens == 8),
        atom!("bombs=1", |c| c.bombs_remaining == 1),
        atom!("bombs=2", |c| c.bombs_remaining == 2),
        atom!("bombs=3", |c| c.bombs_remaining == 3),
        atom!("deck=0", |c| c.deck_size == 0),
        atom!("deck=1-9", |c| (1..=9).contains(&c.deck_size)),
        atom!("deck=10-29", |c| (10..=29).contains(&c.deck_size)),
        atom!("deck=30-40", |c| c.deck_size >= 30),
        atom!("partner_has_known_playable", |c| c.partner_has_known_playable),
        atom!("partner_last=play", |c| c.last_partner_action == Some(ActionCategory::Play)),
        atom!("partner_last=discard", |c| c.last_partner_action == Some(ActionCategory::Discard)),
        atom!("partner_last=hint_color", |c| c.last_partner_action == Some(ActionCategory::HintColor)),
        atom!("partner_last=hint_rank", |c| c.last_partner_action == Some(ActionCategory::HintRank)),
        atom!("own_newest_just_hinted", |c| c.own_newest_just_hinted),
        atom!("own_has_known_playable", |c| c.own_has_known_playable),
        atom!("own_oldest_unhinted", |c| c.own_oldest_unhinted),
        atom!("fireworks=0-5", |c| c.fireworks_total <= 5),
        atom!("fireworks=6-15", |c| (6..=15).contains(&c.fireworks_total)),
        atom!("fireworks=16-25", |c| c.fireworks_total >= 16),
        atom!("last_played_rank1", |c| c.last_played_rank_one),
    ]
}

/// Truth values of every atom, bit i for atom i.
pub fn atom_mask(atoms: &[Atom], ctx: &DecisionContext) -> u64 {
    atoms.iter().enumerate().fold(0, |m, (i, a)| m | ((a.eval)(ctx) as u64) << i)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Formula {
    Atom { atom: usize, negated: bool },
    And { left: Box<Formula>, right: Box<Formula> },
    Or { left: Box<Formula>, right: Box<Formula> },
}

impl Formula {
    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom { .. } => 1,
            Formula::And { left, right } | Formula::Or { left, right } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Evaluates against an atom truth mask.
    pub fn eval(&self, mask: u64) -> bool {
        match self {
            Formula::Atom { atom, negated } => (mask >> atom & 1 == 1) != *negated,
            Formula::And { left, right } => left.eval(mask) && right.eval(mask),
            Formula::Or { left, right } => left.eval(mask) || right.eval(mask),
        }
    }

    /// Text form with commutative operands sorted, so equal formulas print
    /// equally.
    pub fn canonical(&self, atoms: &[Atom]) -> String {
        match self {
            Formula::Atom { atom, negated } => {
                format!("{}{}", if *negated { "!" } else { "" }, atoms[*atom].name)
            }
            Formula::And { left, right } | Formula::Or { left, right } => {
                let op = if matches!(self, Formula::And { .. }) { "&" } else { "|" };
                let mut parts = [left.canonical(atoms), right.canonical(atoms)];
                parts.sort();
                format!("({} {op} {})", parts[0], parts[1])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConceptError {
    #[error("could only find {found} distinct formulas of depth <= {max_depth} (asked for {wanted})")]
    PoolTooSmall { wanted: usize, found: usize, max_depth: usize },
    #[error("max depth must be at least 1")]
    ZeroDepth,
    #[error("predicate pool is empty")]
    EmptyPool,
}

fn random_formula(rng: &mut ChaCha8Rng, n_atoms: usize, depth: usize) -> Formula {
    if depth == 1 {
        return Formula::Atom { atom: rng.random_range(0..n_atoms), negated: rng.random_bool(0.5) };
    }
    // one child reaches the full depth so the tree has exactly `depth`
    let deep = Box::new(random_formula(rng, n_atoms, depth - 1));
    let other_depth = rng.random_range(1..depth);
    let shallow = Box::new(random_formula(rng, n_atoms, other_depth));
    let (left, right) = if rng.random_bool(0.5) { (deep, shallow) } else { (shallow, deep) };
    if rng.random_bool(0.5) {
        Formula::And { left, right }
    } else {
        Formula::Or { left, right }
    }
}

/// Samples `count` distinct formulas with depth drawn uniformly from
/// `1..=max_depth`, deterministically from `seed`.
pub fn sample_formulas(
    atoms: &[Atom],
    count: usize,
    max_depth: usize,
    seed: u64,
) -> Result<Vec<Formula>, ConceptError> {
    if atoms.is_empty() {
        return Err(ConceptError::EmptyPool);
    }
    if max_depth == 0 {
        return Err(ConceptError::ZeroDepth);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(count);
    let mut misses = 0usize;
    let max_misses = 200 * count.max(10);
    while out.len() < count {
        let depth = rng.random_range(1..=max_depth);
        let f = random_formula(&mut rng, atoms.len(), depth);
        if seen.insert(f.canonical(atoms)) {
            out.push(f);
            misses = 0;
        } else {
            misses += 1;
            if misses > max_misses {
                return Err(ConceptError::PoolTooSmall { wanted: count, found: out.len(), max_depth });
            }
        }
    }
    Ok(out)
}

/// Serializable form of a formula list, for the audit sidecar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormulaSidecar {
    pub seed: u64,
    pub max_depth: usize,
    pub atoms: Vec<String>,
    pub formulas: Vec<SidecarEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SidecarEntry {
    pub text: String,
    pub tree: Formula,
}

impl FormulaSidecar {
    pub fn new(atoms: &[Atom], formulas: &[Formula], seed: u64, max_depth: usize) -> FormulaSidecar {
        FormulaSidecar {
            seed,
            max_depth,
            atoms: atoms.iter().map(|a| a.name.to_string()).collect(),
            formulas: formulas
                .iter()
                .map(|f| SidecarEntry { text: f.canonical(atoms), tree: f.clone() })
                .collect(),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom { atom, negated } => write!(f, "{}a{atom}", if *negated { "!" } else { "" }),
            Formula::And { left, right } => write!(f, "({left} & {right})"),
            Formula::Or { left, right } => write!(f, "({left} | {right})"),
        }
    }
}

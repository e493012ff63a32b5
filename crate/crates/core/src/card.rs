//! Cards, suits, card identities and the fixed 50-card deck composition.

use std::fmt;

use serde::{Deserialize, Serialize};

pub const NUM_COLORS: usize = 5;
pub const NUM_RANKS: usize = 5;
pub const NUM_IDENTITIES: usize = NUM_COLORS * NUM_RANKS;
pub const DECK_SIZE: usize = 50;
pub const HAND_SIZE: usize = 5;
pub const MAX_HINT_TOKENS: u8 = 8;
pub const MAX_BOMBS: u8 = 3;
pub const MAX_SCORE: u8 = 25;

/// Copies of each rank (index 0 = rank 1) in every suit.
pub const COPIES_PER_RANK: [u8; NUM_RANKS] = [3, 2, 2, 2, 1];

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Yellow,
    Green,
    Blue,
    White,
}

impl Color {
    pub const ALL: [Color; NUM_COLORS] =
        [Color::Red, Color::Yellow, Color::Green, Color::Blue, Color::White];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(idx: usize) -> Option<Color> {
        Color::ALL.get(idx).copied()
    }

    pub fn letter(self) -> char {
        match self {
            Color::Red => 'R',
            Color::Yellow => 'Y',
            Color::Green => 'G',
            Color::Blue => 'B',
            Color::White => 'W',
        }
    }

    pub fn from_letter(c: char) -> Option<Color> {
        Color::ALL.into_iter().find(|col| col.letter() == c.to_ascii_uppercase())
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Color::Red => "red",
            Color::Yellow => "yellow",
            Color::Green => "green",
            Color::Blue => "blue",
            Color::White => "white",
        };
        f.write_str(name)
    }
}

/// A physical card. `rank` is always in `1..=5`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Card {
    pub color: Color,
    pub rank: u8,
}

impl Card {
    pub fn new(color: Color, rank: u8) -> Card {
        debug_assert!((1..=5).contains(&rank), "rank out of range: {rank}");
        Card { color, rank }
    }

    pub fn identity(self) -> Identity {
        Identity::new(self.color, self.rank)
    }

    /// Number of copies of this card in a full deck.
    pub fn copies(self) -> u8 {
        COPIES_PER_RANK[self.rank as usize - 1]
    }
}

impl fmt::Display for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.color.letter(), self.rank)
    }
}

/// A (color, rank) pair packed into `0..25` as `color * 5 + (rank - 1)`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Identity(u8);

impl Identity {
    pub fn new(color: Color, rank: u8) -> Identity {
        debug_assert!((1..=5).contains(&rank));
        Identity((color.index() * NUM_RANKS) as u8 + rank - 1)
    }

    pub fn from_index(idx: usize) -> Identity {
        assert!(idx < NUM_IDENTITIES, "identity index out of range: {idx}");
        Identity(idx as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn color(self) -> Color {
        Color::ALL[self.0 as usize / NUM_RANKS]
    }

    pub fn rank(self) -> u8 {
        (self.0 as usize % NUM_RANKS) as u8 + 1
    }

    pub fn card(self) -> Card {
        Card::new(self.color(), self.rank())
    }

    pub fn copies(self) -> u8 {
        COPIES_PER_RANK[self.rank() as usize - 1]
    }

    pub fn all() -> impl Iterator<Item = Identity> {
        (0..NUM_IDENTITIES as u8).map(Identity)
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.card().fmt(f)
    }
}

impl Serialize for Identity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Identity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        let mut chars = text.chars();
        let parsed = match (chars.next(), chars.next(), chars.next()) {
            (Some(c), Some(r), None) => Color::from_letter(c)
                .zip(r.to_digit(10).filter(|r| (1..=5).contains(r)))
                .map(|(color, rank)| Identity::new(color, rank as u8)),
            _ => None,
        };
        parsed.ok_or_else(|| serde::de::Error::custom(format!("invalid card identity {text:?}")))
    }
}

/// A set of card identities, stored as a 25-bit mask.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Default)]
pub struct IdentitySet(u32);

impl IdentitySet {
    const FULL_MASK: u32 = (1 << NUM_IDENTITIES) - 1;

    pub const fn empty() -> IdentitySet {
        IdentitySet(0)
    }

    pub const fn full() -> IdentitySet {
        IdentitySet(Self::FULL_MASK)
    }

    pub fn from_bits(bits: u32) -> IdentitySet {
        IdentitySet(bits & Self::FULL_MASK)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn single(id: Identity) -> IdentitySet {
        IdentitySet(1 << id.index())
    }

    pub fn of_color(color: Color) -> IdentitySet {
        IdentitySet(0b11111 << (color.index() * NUM_RANKS))
    }

    pub fn of_rank(rank: u8) -> IdentitySet {
        let bit = 1u32 << (rank - 1);
        IdentitySet((0..NUM_COLORS).fold(0, |acc, c| acc | (bit << (c * NUM_RANKS))))
    }

    pub fn contains(self, id: Identity) -> bool {
        self.0 & (1 << id.index()) != 0
    }

    pub fn insert(&mut self, id: Identity) {
        self.0 |= 1 << id.index();
    }

    pub fn remove(&mut self, id: Identity) {
        self.0 &= !(1 << id.index());
    }

    pub fn intersect(self, other: IdentitySet) -> IdentitySet {
        IdentitySet(self.0 & other.0)
    }

    pub fn union(self, other: IdentitySet) -> IdentitySet {
        IdentitySet(self.0 | other.0)
    }

    pub fn minus(self, other: IdentitySet) -> IdentitySet {
        IdentitySet(self.0 & !other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset(self, other: IdentitySet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Identity> {
        let bits = self.0;
        (0..NUM_IDENTITIES).filter(move |i| bits & (1 << i) != 0).map(Identity::from_index)
    }

    /// The single member, if the set has exactly one.
    pub fn only(self) -> Option<Identity> {
        (self.len() == 1).then(|| Identity::from_index(self.0.trailing_zeros() as usize))
    }
}

impl FromIterator<Identity> for IdentitySet {
    fn from_iter<I: IntoIterator<Item = Identity>>(iter: I) -> Self {
        let mut set = IdentitySet::empty();
        for id in iter {
            set.insert(id);
        }
        set
    }
}

impl fmt::Debug for IdentitySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|id| id.to_string())).finish()
    }
}

impl Serialize for IdentitySet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for IdentitySet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Vec::<Identity>::deserialize(d)?.into_iter().collect())
    }
}

/// Per-identity card counts (multiset over the 25 identities).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
pub struct CardCounts(pub [u8; NUM_IDENTITIES]);

impl CardCounts {
    /// The full deck: three 1s, two each of 2-4 and one 5 per suit.
    pub fn full_deck() -> CardCounts {
        let mut counts = [0u8; NUM_IDENTITIES];
        for id in Identity::all() {
            counts[id.index()] = id.copies();
        }
        CardCounts(counts)
    }

    pub fn add(&mut self, card: Card) {
        self.0[card.identity().index()] += 1;
    }

    pub fn get(&self, id: Identity) -> u8 {
        self.0[id.index()]
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&c| c as usize).sum()
    }

    pub fn from_cards<'a>(cards: impl IntoIterator<Item = &'a Card>) -> CardCounts {
        let mut counts = CardCounts::default();
        for card in cards {
            counts.add(*card);
        }
        counts
    }
}

/// The unshuffled 50-card deck in identity order.
pub fn standard_deck() -> Vec<Card> {
    Identity::all()
        .flat_map(|id| std::iter::repeat_n(id.card(), id.copies() as usize))
        .collect()
}

/// Top rank of each suit's firework (0 = empty).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Fireworks(pub [u8; NUM_COLORS]);

impl Fireworks {
    pub fn height(&self, color: Color) -> u8 {
        self.0[color.index()]
    }

    pub fn is_playable(&self, card: Card) -> bool {
        card.rank == self.height(card.color) + 1
    }

    pub fn is_identity_playable(&self, id: Identity) -> bool {
        id.rank() == self.height(id.color()) + 1
    }

    /// Identities playable on the current fireworks.
    pub fn playable_set(&self) -> IdentitySet {
        Color::ALL
            .into_iter()
            .filter(|&c| self.height(c) < 5)
            .map(|c| Identity::new(c, self.height(c) + 1))
            .collect()
    }

    pub fn score(&self) -> u8 {
        self.0.iter().sum()
    }

    pub fn is_complete(&self) -> bool {
        self.0.iter().all(|&h| h == 5)
    }

    /// Cards physically stacked in the fireworks.
    pub fn cards(&self) -> impl Iterator<Item = Card> + '_ {
        Color::ALL
            .into_iter()
            .flat_map(move |c| (1..=self.height(c)).map(move |r| Card::new(c, r)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deck_composition() {
        let deck = standard_deck();
        assert_eq!(deck.len(), DECK_SIZE);
        for color in Color::ALL {
            let mut ranks: Vec<u8> =
                deck.iter().filter(|c| c.color == color).map(|c| c.rank).collect();
            ranks.sort();
            assert_eq!(ranks, vec![1, 1, 1, 2, 2, 3, 3, 4, 4, 5]);
        }
        assert_eq!(CardCounts::full_deck().total(), DECK_SIZE);
    }

    #[test]
    fn identity_round_trip() {
        for id in Identity::all() {
            assert_eq!(Identity::new(id.color(), id.rank()), id);
            let json = serde_json::to_string(&id).unwrap();
            assert_eq!(serde_json::from_str::<Identity>(&json).unwrap(), id);
        }
        assert!(serde_json::from_str::<Identity>("\"R6\"").is_err());
    }

    #[test]
    fn identity_set_masks() {
        assert_eq!(IdentitySet::of_color(Color::Blue).len(), 5);
        assert_eq!(IdentitySet::of_rank(3).len(), 5);
        let both = IdentitySet::of_color(Color::Red).intersect(IdentitySet::of_rank(1));
        assert_eq!(both.only(), Some(Identity::new(Color::Red, 1)));
        assert_eq!(IdentitySet::full().len(), 25);
    }

    #[test]
    fn playable_set_tracks_heights() {
        let fw = Fireworks([0, 5, 2, 0, 4]);
        let ids: Vec<String> = fw.playable_set().iter().map(|i| i.to_string()).collect();
        assert_eq!(ids, vec!["R1", "G3", "B1", "W5"]);
        assert_eq!(fw.score(), 11);
        assert_eq!(fw.cards().count(), 11);
    }
}

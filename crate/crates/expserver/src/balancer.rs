//! Bot assignment: each new session gets the least used bots, preferring
//! pairs and orders seen least often, with random tie-breaking.

use std::collections::HashMap;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::session::SessionError;

pub struct Balancer {
    names: Vec<String>,
    per_bot: Vec<u32>,
    per_pair: HashMap<(usize, usize), u32>,
    per_order: HashMap<(usize, usize), u32>,
    max_sessions_per_bot: Option<u32>,
    rng: ChaCha8Rng,
}

impl Balancer {
    pub fn new(names: Vec<String>, max_sessions_per_bot: Option<u32>, seed: u64) -> Result<Balancer, SessionError> {
        if names.len() < 2 {
            return Err(SessionError::Invalid(format!("need at least two bots, pool has {}", names.len())));
        }
        Ok(Balancer {
            per_bot: vec![0; names.len()],
            names,
            per_pair: HashMap::new(),
            per_order: HashMap::new(),
            max_sessions_per_bot,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn counts(&self) -> &[u32] {
        &self.per_bot
    }

    /// Counts a pair that was assigned elsewhere, such as a session
    /// recovered from the log.
    pub fn record(&mut self, first: &str, second: &str) {
        let idx = |n: &str| self.names.iter().position(|x| x == n);
        if let (Some(a), Some(b)) = (idx(first), idx(second)) {
            self.bump(a, b);
        }
    }

    fn bump(&mut self, a: usize, b: usize) {
        self.per_bot[a] += 1;
        self.per_bot[b] += 1;
        *self.per_pair.entry((a.min(b), a.max(b))).or_default() += 1;
        *self.per_order.entry((a, b)).or_default() += 1;
    }

    /// Picks an ordered pair of distinct bots (block 1 bot first).
    pub fn assign(&mut self) -> Result<(String, String), SessionError> {
        let n = self.names.len();
        let open = |c: u32| self.max_sessions_per_bot.is_none_or(|m| c < m);
        let key = |a: usize, b: usize| {
            let (ca, cb) = (self.per_bot[a], self.per_bot[b]);
            (
                ca.max(cb),
                ca + cb,
                self.per_pair.get(&(a.min(b), a.max(b))).copied().unwrap_or(0),
                self.per_order.get(&(a, b)).copied().unwrap_or(0),
            )
        };
        let candidates: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .filter(|&(a, b)| a != b && open(self.per_bot[a]) && open(self.per_bot[b]))
            .collect();
        let best = candidates.iter().map(|&(a, b)| key(a, b)).min();
        let Some(best) = best else {
            return Err(SessionError::Conflict("every bot has reached its session limit".into()));
        };
        let ties: Vec<(usize, usize)> = candidates.into_iter().filter(|&(a, b)| key(a, b) == best).collect();
        let &(a, b) = ties.choose(&mut self.rng).expect("at least one candidate");
        self.bump(a, b);
        Ok((self.names[a].clone(), self.names[b].clone()))
    }
}

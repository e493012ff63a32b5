use crate::engine::{Observation, Seat};
use crate::moves::Move;
use crate::rng::{mix_seeds, GameRng};

use super::{Agent, AgentError};

/// Picks uniformly among legal moves.
///
/// Each game gets its own stream derived from the instance seed, the game
/// seed and the seat, independent of the deck shuffle.
#[derive(Clone, Debug)]
pub struct RandomBot {
    instance_seed: u64,
    rng: GameRng,
}

impl RandomBot {
    pub fn new(instance_seed: u64) -> RandomBot {
        RandomBot { instance_seed, rng: GameRng::from_seed(instance_seed) }
    }

    pub fn choose(&mut self, legal: &[Move]) -> Move {
        legal[self.rng.below(legal.len())]
    }
}

impl Agent for RandomBot {
    fn begin_game(&mut self, seat: Seat, game_seed: u64) -> Result<(), AgentError> {
        self.rng = GameRng::from_seed(mix_seeds(&[self.instance_seed, game_seed, seat as u64]));
        Ok(())
    }

    fn act(&mut self, obs: &Observation) -> Result<Move, AgentError> {
        let legal = obs.legal_moves();
        Ok(self.choose(&legal))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::GameState;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn single_legal_move_is_taken() {
        let mut bot = RandomBot::new(3);
        assert_eq!(bot.choose(&[Move::Play(2)]), Move::Play(2));
    }

    #[test]
    fn uniform_over_legal_moves() {
        let state = GameState::new(5);
        let obs = state.observation(0);
        let legal = obs.legal_moves();
        let mut bot = RandomBot::new(11);
        bot.begin_game(0, 5).unwrap();
        let mut counts = vec![0u32; legal.len()];
        let samples = 10_000;
        for _ in 0..samples {
            let mv = bot.act(&obs).unwrap();
            counts[legal.iter().position(|&m| m == mv).unwrap()] += 1;
        }
        let expected = samples as f64 / legal.len() as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        let p = 1.0 - ChiSquared::new((legal.len() - 1) as f64).unwrap().cdf(chi2);
        assert!(p > 0.01, "chi2 {chi2}, p {p}");
    }

    #[test]
    fn seeds_change_behavior() {
        let obs = GameState::new(5).observation(0);
        let run = |seed| {
            let mut bot = RandomBot::new(seed);
            bot.begin_game(0, 1).unwrap();
            (0..30).map(|_| bot.act(&obs).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(1), run(1));
        assert_ne!(run(1), run(2));
    }
}

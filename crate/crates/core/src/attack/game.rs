//! The indistinguishability game.
//!
//! Each round the challenger samples fresh attributes and shows their
//! descriptions to the adversary, who picks two equal-length posts. The
//! challenger flips a coin, protects the chosen post and hands over the
//! envelope; the adversary answers with a bit. The advantage is the win rate
//! minus one half.

use std::cell::RefCell;
use std::rc::Rc;

use rand::Rng;
use serde::Serialize;

use super::AttackError;
use crate::num::Real;
use crate::primitives::RandomSource;
use crate::scheme::{access, protect, Attribute, Guess, ProtectedPost};
use crate::shamir::SharingParams;

pub trait Adversary {
    /// Two distinct, non-empty posts of equal length.
    fn choose_posts(&mut self, descriptions: &[String], rng: &mut RandomSource) -> (Vec<u8>, Vec<u8>);

    /// Which of the two posts the challenge envelope protects.
    fn guess(
        &mut self,
        descriptions: &[String],
        challenge: &ProtectedPost,
        rng: &mut RandomSource,
    ) -> bool;
}

/// Ignores the challenge and flips a coin.
#[derive(Debug, Default, Clone, Copy)]
pub struct RandomGuessAdversary;

impl Adversary for RandomGuessAdversary {
    fn choose_posts(&mut self, _: &[String], _: &mut RandomSource) -> (Vec<u8>, Vec<u8>) {
        (b"attack at dawn".to_vec(), b"attack at dusk".to_vec())
    }

    fn guess(&mut self, _: &[String], _: &ProtectedPost, rng: &mut RandomSource) -> bool {
        rng.gen()
    }
}

/// Handle through which a sampler leaks the round's attributes.
pub type Leak = Rc<RefCell<Option<Vec<Attribute>>>>;

/// Learns the sampled attributes out of band and simply decrypts.
#[derive(Debug, Default)]
pub struct OmniscientAdversary {
    leak: Leak,
    posts: Option<(Vec<u8>, Vec<u8>)>,
}

impl OmniscientAdversary {
    pub fn new() -> Self {
        Self::default()
    }

    /// The sampler should store each round's attributes here.
    pub fn leak(&self) -> Leak {
        Rc::clone(&self.leak)
    }
}

impl Adversary for OmniscientAdversary {
    fn choose_posts(&mut self, _: &[String], _: &mut RandomSource) -> (Vec<u8>, Vec<u8>) {
        let posts = (b"left".to_vec(), b"rght".to_vec());
        self.posts = Some(posts.clone());
        posts
    }

    fn guess(&mut self, _: &[String], challenge: &ProtectedPost, _: &mut RandomSource) -> bool {
        let leaked = self.leak.borrow();
        let (Some(attrs), Some((p0, _))) = (leaked.as_ref(), self.posts.as_ref()) else {
            return false;
        };
        let guesses: Vec<Guess> = attrs
            .iter()
            .take(challenge.params.t())
            .enumerate()
            .map(|(i, a)| Guess::new(i + 1, a.value()))
            .collect();
        access(&guesses, challenge).is_ok_and(|plain| plain != *p0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameResult<R> {
    pub games_played: u64,
    pub wins: u64,
    /// `wins / games - 1/2`.
    pub advantage_estimate: R,
    /// 95% normal-approximation interval for the advantage.
    pub ci_low: R,
    pub ci_high: R,
}

/// Plays `games` rounds. `sampler` draws each round's attributes; their
/// count must match `params`.
pub fn run_security_game<R, A, S>(
    adversary: &mut A,
    mut sampler: S,
    params: SharingParams,
    games: u64,
    rng: &mut RandomSource,
) -> Result<GameResult<R>, AttackError>
where
    R: Real,
    A: Adversary + ?Sized,
    S: FnMut(&mut RandomSource) -> Vec<Attribute>,
{
    if games == 0 {
        return Err(AttackError::NoGames);
    }
    let mut wins = 0u64;
    for _ in 0..games {
        let attrs = sampler(rng);
        let descriptions: Vec<String> = attrs.iter().map(|a| a.description().to_owned()).collect();
        let (p0, p1) = adversary.choose_posts(&descriptions, rng);
        if p0.len() != p1.len() {
            return Err(AttackError::AdversaryContractViolation("posts differ in length"));
        }
        if p0 == p1 {
            return Err(AttackError::AdversaryContractViolation("posts are identical"));
        }
        if p0.is_empty() {
            return Err(AttackError::AdversaryContractViolation("posts are empty"));
        }
        let b: bool = rng.gen();
        let challenge = protect(&attrs, if b { &p1 } else { &p0 }, params, rng)?;
        if adversary.guess(&descriptions, &challenge, rng) == b {
            wins += 1;
        }
    }
    let n = R::of_u128(games as u128);
    let half = R::of_f64(0.5);
    let rate = R::of_u128(wins as u128) / n;
    let margin = R::of_f64(1.96) * (rate * (R::one() - rate) / n).sqrt();
    let clamp = |v: R| v.max(-half).min(half);
    Ok(GameResult {
        games_played: games,
        wins,
        advantage_estimate: rate - half,
        ci_low: clamp(rate - margin - half),
        ci_high: clamp(rate + margin - half),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampler(rng: &mut RandomSource) -> Vec<Attribute> {
        ["name", "town", "pet"]
            .iter()
            .map(|d| Attribute::new(d, &format!("{d}-{}", rng.gen_range(0..1000))).unwrap())
            .collect()
    }

    #[test]
    fn random_guessing_has_no_advantage() {
        let mut rng = RandomSource::seeded(1);
        let res: GameResult<f64> = run_security_game(
            &mut RandomGuessAdversary,
            sampler,
            SharingParams::new(3, 2).unwrap(),
            2_000,
            &mut rng,
        )
        .unwrap();
        assert_eq!(res.games_played, 2_000);
        assert!(res.advantage_estimate.abs() <= 3.0 * (0.25f64 / 2_000.0).sqrt());
        assert!(res.ci_low <= res.advantage_estimate && res.advantage_estimate <= res.ci_high);
    }

    #[test]
    fn omniscient_adversary_always_wins() {
        let mut adv = OmniscientAdversary::new();
        let leak = adv.leak();
        let mut rng = RandomSource::seeded(2);
        let res: GameResult<f32> = run_security_game(
            &mut adv,
            |rng| {
                let attrs = sampler(rng);
                *leak.borrow_mut() = Some(attrs.clone());
                attrs
            },
            SharingParams::new(3, 2).unwrap(),
            200,
            &mut rng,
        )
        .unwrap();
        assert_eq!(res.wins, 200);
        assert_eq!(res.advantage_estimate, 0.5);
        assert_eq!((res.ci_low, res.ci_high), (0.5, 0.5));
    }

    struct Cheater(Vec<u8>, Vec<u8>);

    impl Adversary for Cheater {
        fn choose_posts(&mut self, _: &[String], _: &mut RandomSource) -> (Vec<u8>, Vec<u8>) {
            (self.0.clone(), self.1.clone())
        }
        fn guess(&mut self, _: &[String], _: &ProtectedPost, _: &mut RandomSource) -> bool {
            false
        }
    }

    #[test]
    fn contract_violations() {
        let params = SharingParams::new(3, 2).unwrap();
        let mut rng = RandomSource::seeded(3);
        for (a, b) in [(&b"same"[..], &b"same"[..]), (b"short", b"longer"), (b"", b"")] {
            let res = run_security_game::<f64, _, _>(
                &mut Cheater(a.to_vec(), b.to_vec()),
                sampler,
                params,
                10,
                &mut rng,
            );
            assert!(matches!(res, Err(AttackError::AdversaryContractViolation(_))));
        }
        let res = run_security_game::<f64, _, _>(&mut RandomGuessAdversary, sampler, params, 0, &mut rng);
        assert!(matches!(res, Err(AttackError::NoGames)));
    }
}

//! Empirical security tooling.
//!
//! * [`game`]: plays the indistinguishability game against a pluggable
//!   adversary and estimates its advantage.
//! * [`freq`], [`enumerate`], [`campaign`]: an informed dictionary attack.
//!   The attacker ranks candidate values by their frequency in a basis
//!   distribution, tries `t`-value guesses in order of increasing rank
//!   product, and we record how many trials each protected post costs.
//! * [`synth`]: Zipf-distributed synthetic corpora for experiments.

pub mod campaign;
pub mod enumerate;
pub mod freq;
pub mod game;
pub mod synth;

use thiserror::Error;

pub use campaign::{
    read_targets_csv, run_attack, AttackConfig, AttackReport, CheckMode, PayoffPoint,
    TargetOutcome, TargetProfile,
};
pub use enumerate::{enumerate_guesses, search_space, EnumeratedGuess, GuessStream};
pub use freq::{build_ranks, rank_product, FrequencyTable, RankTable, TieBreak};
pub use game::{
    run_security_game, Adversary, GameResult, Leak, OmniscientAdversary, RandomGuessAdversary,
};

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("frequency table is empty")]
    EmptyTable,
    #[error("description `{0}` has no values")]
    EmptyDescription(String),
    #[error("invalid count {count} for `{description}`")]
    InvalidCount { description: String, count: f64 },
    #[error("value `{value}` of `{description}` is not in the basis")]
    ValueNotInBasis { description: String, value: String },
    #[error("description `{0}` is missing from the basis")]
    DescriptionNotInBasis(String),
    #[error("inconsistent targets: {0}")]
    InconsistentTargets(String),
    #[error("threshold {t} invalid for {n} attributes")]
    InvalidThreshold { t: usize, n: usize },
    #[error("budget must be at least 1")]
    InvalidBudget,
    #[error("adversary broke the game contract: {0}")]
    AdversaryContractViolation(&'static str),
    #[error("game count must be at least 1")]
    NoGames,
    #[error("malformed input: {0}")]
    Input(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Scheme(#[from] crate::scheme::SchemeError),
}

//! Partial knowledge-based access control.
//!
//! A post is encrypted so that anyone who knows at least `t` of `n`
//! publisher-chosen attribute values (a home town, a teacher's name, ...)
//! can read it, without any prior key exchange.
//!
//! The crate is organised bottom-up:
//!
//! * [`field`] and [`shamir`]: GF(2^8) arithmetic and byte-wise threshold
//!   sharing of the master key.
//! * [`primitives`]: AES-256-CBC, SHA-256 and a seedable random source.
//! * [`scheme`]: `protect` and `access`.
//! * [`envelope`], [`store`]: the text wire format and the local attribute
//!   store with automatic decryption.
//! * [`attack`]: the indistinguishability game harness and the
//!   dictionary-attack evaluator.
//! * [`bench`]: timing harness.
//!
//! Numeric reporting types are generic over [`Real`]; the aliases below fix
//! them to `f64`.

pub mod attack;
pub mod bench;
pub mod envelope;
pub mod field;
pub mod normalize;
pub mod num;
pub mod primitives;
pub mod scheme;
pub mod shamir;
pub mod store;

pub use field::Gf256;
pub use normalize::normalize;
pub use num::Real;
pub use primitives::{CipherText, RandomSource, SymmetricKey};
pub use scheme::{access, looks_like_text, protect, Attribute, Guess, ProtectedPost};
pub use shamir::{Share, SharingParams};

pub type FrequencyTable = attack::FrequencyTable<f64>;
pub type AttackReport = attack::AttackReport<f64>;
pub type GameResult = attack::GameResult<f64>;

pub type FrequencyTable32 = attack::FrequencyTable<f32>;
pub type AttackReport32 = attack::AttackReport<f32>;
pub type GameResult32 = attack::GameResult<f32>;

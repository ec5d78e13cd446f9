//! Byte-wise Shamir threshold sharing over GF(2^8).
//!
//! Each secret byte gets its own random polynomial of degree `t - 1` whose
//! constant term is that byte. Share `i` (1-based) holds the evaluations of
//! every polynomial at `x = i`, in secret-byte order.

use std::collections::HashSet;

use rand::RngCore;
use thiserror::Error;

use crate::field::{gf_inv, Gf256};

/// Largest share count: the field has 255 nonzero evaluation points.
pub const MAX_SHARES: usize = 255;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShamirError {
    #[error("invalid sharing parameters: n = {n}, t = {t} (need 1 <= t <= n <= 255)")]
    InvalidParams { n: usize, t: usize },
    #[error("secret must not be empty")]
    EmptySecret,
    #[error("need {needed} shares, got {got}")]
    InsufficientShares { needed: usize, got: usize },
    #[error("duplicate share x-coordinate {0}")]
    DuplicateX(u8),
    #[error("share x-coordinate must be nonzero")]
    ZeroX,
    #[error("share lengths differ: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SharingParams {
    n: u8,
    t: u8,
}

impl SharingParams {
    pub fn new(n: usize, t: usize) -> Result<Self, ShamirError> {
        if t < 1 || t > n || n > MAX_SHARES {
            return Err(ShamirError::InvalidParams { n, t });
        }
        Ok(SharingParams {
            n: n as u8,
            t: t as u8,
        })
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn t(&self) -> usize {
        self.t as usize
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct Share {
    pub x: u8,
    pub y: Vec<u8>,
}

impl std::fmt::Debug for Share {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Share")
            .field("x", &self.x)
            .field("len", &self.y.len())
            .finish_non_exhaustive()
    }
}

impl Share {
    /// `x ‖ y`, the layout that gets encrypted into an envelope.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(1 + self.y.len());
        out.push(self.x);
        out.extend_from_slice(&self.y);
        out
    }
}

/// Horner evaluation; `coeffs[0]` is the constant term.
fn eval(coeffs: &[Gf256], x: Gf256) -> Gf256 {
    coeffs
        .iter()
        .rev()
        .fold(Gf256::ZERO, |acc, &c| acc * x + c)
}

/// Split `secret` into `params.n()` shares, any `params.t()` of which
/// reconstruct it.
///
/// Coefficients are drawn from `rng` as one block of `len * (t - 1)` bytes:
/// byte `j`'s polynomial uses `block[j*(t-1) .. (j+1)*(t-1)]` for degrees
/// 1 through `t - 1`.
pub fn split<R: RngCore + ?Sized>(
    secret: &[u8],
    params: SharingParams,
    rng: &mut R,
) -> Result<Vec<Share>, ShamirError> {
    if secret.is_empty() {
        return Err(ShamirError::EmptySecret);
    }
    let degree = params.t() - 1;
    let mut random = vec![0u8; secret.len() * degree];
    rng.fill_bytes(&mut random);

    let mut shares: Vec<Share> = (1..=params.n)
        .map(|x| Share {
            x,
            y: Vec::with_capacity(secret.len()),
        })
        .collect();
    let mut coeffs = Vec::with_capacity(degree + 1);
    for (j, &byte) in secret.iter().enumerate() {
        coeffs.clear();
        coeffs.push(Gf256(byte));
        coeffs.extend(random[j * degree..(j + 1) * degree].iter().map(|&b| Gf256(b)));
        for share in shares.iter_mut() {
            share.y.push(eval(&coeffs, Gf256(share.x)).0);
        }
    }
    Ok(shares)
}

/// Lagrange interpolation at zero over exactly the first `t` shares.
///
/// Corrupted share bytes give a different result without any error.
pub fn reconstruct(shares: &[Share], t: usize) -> Result<Vec<u8>, ShamirError> {
    if t == 0 || shares.len() < t {
        return Err(ShamirError::InsufficientShares {
            needed: t.max(1),
            got: shares.len(),
        });
    }
    let used = &shares[..t];
    let len = used[0].y.len();
    let mut seen = HashSet::with_capacity(t);
    for s in used {
        if s.x == 0 {
            return Err(ShamirError::ZeroX);
        }
        if !seen.insert(s.x) {
            return Err(ShamirError::DuplicateX(s.x));
        }
        if s.y.len() != len {
            return Err(ShamirError::LengthMismatch {
                expected: len,
                found: s.y.len(),
            });
        }
    }

    // basis_i(0) = prod_{j != i} x_j / (x_j - x_i); subtraction is XOR.
    let basis: Vec<Gf256> = used
        .iter()
        .enumerate()
        .map(|(i, si)| {
            let (num, den) = used
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .fold((Gf256::ONE, Gf256::ONE), |(num, den), (_, sj)| {
                    (num * Gf256(sj.x), den * (Gf256(sj.x) + Gf256(si.x)))
                });
            // den is nonzero because the x are distinct
            num * gf_inv(den).expect("distinct x-coordinates")
        })
        .collect();

    Ok((0..len)
        .map(|j| {
            used.iter()
                .zip(&basis)
                .fold(Gf256::ZERO, |acc, (s, &l)| acc + Gf256(s.y[j]) * l)
                .0
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::gf_mul;
    use proptest::prelude::*;
    use rand::RngCore;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    /// Emits one fixed byte forever.
    struct ConstRng(u8);

    impl RngCore for ConstRng {
        fn next_u32(&mut self) -> u32 {
            u32::from_ne_bytes([self.0; 4])
        }
        fn next_u64(&mut self) -> u64 {
            u64::from_ne_bytes([self.0; 8])
        }
        fn fill_bytes(&mut self, dest: &mut [u8]) {
            dest.fill(self.0)
        }
        fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
            self.fill_bytes(dest);
            Ok(())
        }
    }

    fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
        fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                go(i + 1, n, k, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        go(0, n, k, &mut Vec::new(), &mut out);
        out
    }

    #[test]
    fn threshold_one_is_constant() {
        let p = SharingParams::new(3, 1).unwrap();
        let shares = split(&[0x05], p, &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
        assert_eq!(shares.len(), 3);
        for (i, s) in shares.iter().enumerate() {
            assert_eq!(s.x as usize, i + 1);
            assert_eq!(s.y, vec![0x05]);
        }
    }

    #[test]
    fn injected_coefficient_hand_evaluation() {
        let p = SharingParams::new(2, 2).unwrap();
        let shares = split(&[0x05], p, &mut ConstRng(0x03)).unwrap();
        // p(x) = 0x05 + 0x03 * x
        let expect1 = 0x05 ^ gf_mul(Gf256(0x03), Gf256(1)).0;
        let expect2 = 0x05 ^ gf_mul(Gf256(0x03), Gf256(2)).0;
        assert_eq!((expect1, expect2), (0x06, 0x03));
        assert_eq!(
            shares,
            vec![Share { x: 1, y: vec![0x06] }, Share { x: 2, y: vec![0x03] }]
        );
    }

    #[test]
    fn invalid_params() {
        assert_eq!(
            SharingParams::new(300, 2),
            Err(ShamirError::InvalidParams { n: 300, t: 2 })
        );
        assert!(SharingParams::new(4, 5).is_err());
        assert!(SharingParams::new(4, 0).is_err());
        assert!(SharingParams::new(255, 255).is_ok());
    }

    #[test]
    fn empty_secret_rejected() {
        let p = SharingParams::new(2, 1).unwrap();
        assert_eq!(
            split(&[], p, &mut ConstRng(0)),
            Err(ShamirError::EmptySecret)
        );
    }

    #[test]
    fn reconstruct_examples() {
        let shares = vec![Share { x: 1, y: vec![0x06] }, Share { x: 2, y: vec![0x03] }];
        assert_eq!(reconstruct(&shares, 2), Ok(vec![0x05]));
        assert_eq!(
            reconstruct(&[Share { x: 1, y: vec![0x05] }], 1),
            Ok(vec![0x05])
        );
        assert_eq!(
            reconstruct(&[Share { x: 1, y: vec![0x06] }], 2),
            Err(ShamirError::InsufficientShares { needed: 2, got: 1 })
        );
    }

    #[test]
    fn reconstruct_errors() {
        let dup = vec![Share { x: 1, y: vec![1] }, Share { x: 1, y: vec![2] }];
        assert_eq!(reconstruct(&dup, 2), Err(ShamirError::DuplicateX(1)));
        let uneven = vec![Share { x: 1, y: vec![1] }, Share { x: 2, y: vec![2, 3] }];
        assert_eq!(
            reconstruct(&uneven, 2),
            Err(ShamirError::LengthMismatch { expected: 1, found: 2 })
        );
        assert_eq!(
            reconstruct(&[Share { x: 0, y: vec![1] }], 1),
            Err(ShamirError::ZeroX)
        );
    }

    #[test]
    fn uses_only_first_t_shares() {
        let p = SharingParams::new(3, 2).unwrap();
        let mut shares = split(b"key", p, &mut ChaCha20Rng::seed_from_u64(3)).unwrap();
        shares[2].y = vec![0xFF; 3];
        assert_eq!(reconstruct(&shares, 2).unwrap(), b"key");
    }

    #[test]
    fn corrupted_share_gives_garbage_not_error() {
        let p = SharingParams::new(3, 3).unwrap();
        let mut shares = split(b"secret", p, &mut ChaCha20Rng::seed_from_u64(4)).unwrap();
        shares[1].y[0] ^= 0x01;
        let out = reconstruct(&shares, 3).unwrap();
        assert_ne!(out, b"secret");
        assert_eq!(&out[1..], b"ecret");
    }

    #[test]
    fn seeded_split_is_reproducible() {
        let p = SharingParams::new(5, 3).unwrap();
        let a = split(&[9u8; 32], p, &mut ChaCha20Rng::seed_from_u64(42)).unwrap();
        let b = split(&[9u8; 32], p, &mut ChaCha20Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn every_t_subset_reconstructs(
            secret in proptest::collection::vec(any::<u8>(), 1..=64),
            n in 1usize..=10,
            t_frac in 0.0f64..1.0,
            seed in any::<u64>(),
        ) {
            let t = 1 + ((n as f64) * t_frac) as usize;
            let t = t.min(n);
            let p = SharingParams::new(n, t).unwrap();
            let shares = split(&secret, p, &mut ChaCha20Rng::seed_from_u64(seed)).unwrap();
            for subset in combinations(n, t) {
                let picked: Vec<Share> = subset.iter().map(|&i| shares[i].clone()).collect();
                prop_assert_eq!(reconstruct(&picked, t).unwrap(), secret.clone());
            }
        }
    }
}

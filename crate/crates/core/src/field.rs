//! Arithmetic in GF(2^8) with the AES reduction polynomial
//! x^8 + x^4 + x^3 + x + 1 (0x11B).
//!
//! Multiplication is shift-and-reduce with no lookup tables, so the memory
//! access pattern does not depend on the operands.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign};

use thiserror::Error;

/// Low byte of the reduction polynomial; the x^8 term is implicit.
const REDUCTION: u8 = 0x1B;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
}

/// An element of GF(2^8).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Gf256(pub u8);

impl Gf256 {
    pub const ZERO: Gf256 = Gf256(0);
    pub const ONE: Gf256 = Gf256(1);

    #[inline]
    pub fn value(self) -> u8 {
        self.0
    }

    pub fn inv(self) -> Result<Gf256, FieldError> {
        gf_inv(self)
    }
}

impl fmt::Debug for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf256({:#04x})", self.0)
    }
}

impl From<u8> for Gf256 {
    fn from(v: u8) -> Self {
        Gf256(v)
    }
}

/// Addition (and subtraction) is XOR in characteristic 2.
#[inline]
pub fn gf_add(a: Gf256, b: Gf256) -> Gf256 {
    Gf256(a.0 ^ b.0)
}

#[inline]
pub fn gf_mul(a: Gf256, b: Gf256) -> Gf256 {
    let mut x = a.0;
    let mut y = b.0;
    let mut acc = 0u8;
    for _ in 0..8 {
        // all-ones when the low bit of y is set
        let take = 0u8.wrapping_sub(y & 1);
        acc ^= x & take;
        let carry = 0u8.wrapping_sub(x >> 7);
        x = (x << 1) ^ (REDUCTION & carry);
        y >>= 1;
    }
    Gf256(acc)
}

/// Multiplicative inverse via a^254 (the group of units has order 255).
pub fn gf_inv(a: Gf256) -> Result<Gf256, FieldError> {
    if a.0 == 0 {
        return Err(FieldError::ZeroInverse);
    }
    // 254 = 0b1111_1110
    let mut result = Gf256::ONE;
    let mut base = a;
    let mut exp = 254u8;
    while exp != 0 {
        if exp & 1 == 1 {
            result = gf_mul(result, base);
        }
        base = gf_mul(base, base);
        exp >>= 1;
    }
    Ok(result)
}

impl Add for Gf256 {
    type Output = Gf256;
    #[inline]
    fn add(self, rhs: Gf256) -> Gf256 {
        gf_add(self, rhs)
    }
}

impl AddAssign for Gf256 {
    #[inline]
    fn add_assign(&mut self, rhs: Gf256) {
        *self = gf_add(*self, rhs);
    }
}

impl Mul for Gf256 {
    type Output = Gf256;
    #[inline]
    fn mul(self, rhs: Gf256) -> Gf256 {
        gf_mul(self, rhs)
    }
}

impl MulAssign for Gf256 {
    #[inline]
    fn mul_assign(&mut self, rhs: Gf256) {
        *self = gf_mul(*self, rhs);
    }
}

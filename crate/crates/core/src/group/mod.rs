//! Prime-order group abstraction.
//!
//! Everything above this module is generic over [`PrimeGroup`]. A group value
//! doubles as the public descriptor of the instance: it knows its order `q`,
//! its fixed public point `Q`, and how to encode elements and scalars.
//!
//! Two backends are provided:
//!
//! * [`Ristretto255`], the production group (order `q ≈ 2^252`).
//! * [`ToyGroup`], the additive group `Z_q` for a small prime `q`, used to make
//!   soundness probabilities observable. Discrete logs are trivial there, which
//!   is irrelevant: the protocol's soundness is statistical.

use std::fmt::Debug;
use std::hash::Hash;

use num_bigint::BigUint;
use rand::{CryptoRng, RngCore};

use crate::error::Result;

mod ristretto;
mod toy;

pub use ristretto::Ristretto255;
pub use toy::{ToyElement, ToyGroup, ToyScalar, DEFAULT_TOY_ORDER};

/// Width of one element or scalar slot in the wire format.
pub const SLOT_BYTES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    Production,
    Toy,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Production => "production",
            Backend::Toy => "toy",
        }
    }
}

/// A cyclic group of prime order `q`, written additively, together with its
/// scalar field `F_q` and a fixed public point `Q ≠ 0`.
pub trait PrimeGroup: Clone + Debug + Send + Sync + 'static {
    type Element: Copy + Clone + Debug + PartialEq + Eq + Send + Sync + 'static;
    type Scalar: Copy + Clone + Debug + PartialEq + Eq + Hash + Send + Sync + 'static;

    fn backend(&self) -> Backend;

    /// The group order `q`.
    fn order(&self) -> BigUint;

    /// Bit length of `q - 1`; every canonical scalar fits in this many bits.
    fn scalar_bits(&self) -> usize;

    fn identity(&self) -> Self::Element;

    /// The fixed public point `Q`.
    fn fixed_point(&self) -> Self::Element;

    fn add(&self, a: &Self::Element, b: &Self::Element) -> Self::Element;

    fn neg(&self, a: &Self::Element) -> Self::Element;

    fn sub(&self, a: &Self::Element, b: &Self::Element) -> Self::Element {
        self.add(a, &self.neg(b))
    }

    fn double(&self, a: &Self::Element) -> Self::Element {
        self.add(a, a)
    }

    fn is_identity(&self, a: &Self::Element) -> bool {
        *a == self.identity()
    }

    /// `k·P`.
    fn mul(&self, k: &Self::Scalar, p: &Self::Element) -> Self::Element;

    /// `k·Q`, possibly through precomputed tables. Always equal to
    /// `self.mul(k, &self.fixed_point())`.
    fn mul_fixed(&self, k: &Self::Scalar) -> Self::Element;

    fn scalar_zero(&self) -> Self::Scalar;
    fn scalar_one(&self) -> Self::Scalar;
    fn scalar_from_u64(&self, v: u64) -> Self::Scalar;
    fn scalar_add(&self, a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar;
    fn scalar_neg(&self, a: &Self::Scalar) -> Self::Scalar;
    fn scalar_mul(&self, a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar;

    fn scalar_sub(&self, a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar {
        self.scalar_add(a, &self.scalar_neg(b))
    }

    /// Canonical value of `s` as four little-endian 64-bit limbs.
    fn scalar_limbs(&self, s: &Self::Scalar) -> [u64; 4];

    /// Reduces a 512-bit little-endian integer modulo `q`.
    fn scalar_from_wide(&self, wide: &[u64; 8]) -> Self::Scalar;

    /// Uniform sample from `F_q`.
    fn sample_scalar<R: RngCore + CryptoRng>(&self, rng: &mut R) -> Self::Scalar;

    /// Uniform sample from the group.
    fn random_element<R: RngCore + CryptoRng>(&self, rng: &mut R) -> Self::Element;

    /// Canonical compressed encoding (32 bytes for Ristretto255, minimal
    /// big-endian for the toy group).
    fn encode_element(&self, e: &Self::Element) -> Vec<u8>;
    fn decode_element(&self, bytes: &[u8]) -> Result<Self::Element>;

    /// Fixed-width encoding used in wire slots and files.
    fn element_to_slot(&self, e: &Self::Element) -> [u8; SLOT_BYTES];
    fn element_from_slot(&self, bytes: &[u8; SLOT_BYTES]) -> Result<Self::Element>;

    /// 32-byte little-endian scalar encoding.
    fn scalar_to_bytes(&self, s: &Self::Scalar) -> [u8; SLOT_BYTES];

    /// Decodes a scalar, rejecting values `>= q`.
    fn scalar_from_bytes(&self, bytes: &[u8; SLOT_BYTES]) -> Result<Self::Scalar>;

    /// Largest block size for which `block · (q-1)^2 < 2^512`.
    fn lazy_block_limit(&self) -> usize {
        crate::field::max_block_size(&self.order())
    }
}

/// Miller-Rabin with the deterministic witness set for 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut base: u64, mut exp: u64| {
        let mut acc = 1u64;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = mulmod(acc, base);
            }
            base = mulmod(base, base);
            exp >>= 1;
        }
        acc
    };
    let d = (n - 1) >> (n - 1).trailing_zeros();
    let s = (n - 1).trailing_zeros();
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

use num_bigint::BigUint;
use rand::{CryptoRng, Rng, RngCore};

use super::{is_prime_u64, Backend, PrimeGroup, SLOT_BYTES};
use crate::error::{Error, Result};

/// Default toy order.
pub const DEFAULT_TOY_ORDER: u64 = 251;

/// Element of `Z_q`, always in `[0, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ToyElement(pub u64);

/// Scalar of `F_q`, always in `[0, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ToyScalar(pub u64);

/// The additive group `Z_q` for a prime `q < 2^62`, with `Q = 1` by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToyGroup {
    q: u64,
    fixed: u64,
}

impl ToyGroup {
    pub fn new(q: u64) -> Result<Self> {
        Self::with_fixed_point(q, 1)
    }

    pub fn with_fixed_point(q: u64, fixed: u64) -> Result<Self> {
        if !(2..1 << 62).contains(&q) {
            return Err(Error::OrderOutOfRange(q));
        }
        if !is_prime_u64(q) {
            return Err(Error::NotPrime(q));
        }
        if fixed.is_multiple_of(q) {
            return Err(Error::IdentityFixedPoint);
        }
        Ok(Self { q, fixed: fixed % q })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn element(&self, v: u64) -> ToyElement {
        ToyElement(v % self.q)
    }

    pub fn scalar(&self, v: u64) -> ToyScalar {
        ToyScalar(v % self.q)
    }

    /// Every scalar of `F_q`, in increasing order.
    pub fn all_scalars(&self) -> impl Iterator<Item = ToyScalar> {
        (0..self.q).map(ToyScalar)
    }

    #[inline]
    fn add_mod(&self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.q && b < self.q, "element from a different toy group");
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    fn neg_mod(&self, a: u64) -> u64 {
        debug_assert!(a < self.q, "element from a different toy group");
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    fn mul_mod(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.q as u128) as u64
    }
}

impl PrimeGroup for ToyGroup {
    type Element = ToyElement;
    type Scalar = ToyScalar;

    fn backend(&self) -> Backend {
        Backend::Toy
    }

    fn order(&self) -> BigUint {
        BigUint::from(self.q)
    }

    fn scalar_bits(&self) -> usize {
        (64 - (self.q - 1).leading_zeros()) as usize
    }

    fn identity(&self) -> ToyElement {
        ToyElement(0)
    }

    fn fixed_point(&self) -> ToyElement {
        ToyElement(self.fixed)
    }

    fn add(&self, a: &ToyElement, b: &ToyElement) -> ToyElement {
        ToyElement(self.add_mod(a.0, b.0))
    }

    fn neg(&self, a: &ToyElement) -> ToyElement {
        ToyElement(self.neg_mod(a.0))
    }

    fn mul(&self, k: &ToyScalar, p: &ToyElement) -> ToyElement {
        ToyElement(self.mul_mod(k.0, p.0))
    }

    fn mul_fixed(&self, k: &ToyScalar) -> ToyElement {
        ToyElement(self.mul_mod(k.0, self.fixed))
    }

    fn scalar_zero(&self) -> ToyScalar {
        ToyScalar(0)
    }

    fn scalar_one(&self) -> ToyScalar {
        ToyScalar(1)
    }

    fn scalar_from_u64(&self, v: u64) -> ToyScalar {
        ToyScalar(v % self.q)
    }

    fn scalar_add(&self, a: &ToyScalar, b: &ToyScalar) -> ToyScalar {
        ToyScalar(self.add_mod(a.0, b.0))
    }

    fn scalar_neg(&self, a: &ToyScalar) -> ToyScalar {
        ToyScalar(self.neg_mod(a.0))
    }

    fn scalar_mul(&self, a: &ToyScalar, b: &ToyScalar) -> ToyScalar {
        ToyScalar(self.mul_mod(a.0, b.0))
    }

    fn scalar_limbs(&self, s: &ToyScalar) -> [u64; 4] {
        [s.0, 0, 0, 0]
    }

    fn scalar_from_wide(&self, wide: &[u64; 8]) -> ToyScalar {
        let q = self.q as u128;
        let r = wide.iter().rev().fold(0u128, |acc, &limb| ((acc << 64) | limb as u128) % q);
        ToyScalar(r as u64)
    }

    fn sample_scalar<R: RngCore + CryptoRng>(&self, rng: &mut R) -> ToyScalar {
        ToyScalar(rng.gen_range(0..self.q))
    }

    fn random_element<R: RngCore + CryptoRng>(&self, rng: &mut R) -> ToyElement {
        ToyElement(rng.gen_range(0..self.q))
    }

    fn encode_element(&self, e: &ToyElement) -> Vec<u8> {
        let bytes = e.0.to_be_bytes();
        let skip = bytes.iter().take_while(|&&b| b == 0).count().min(7);
        bytes[skip..].to_vec()
    }

    fn decode_element(&self, bytes: &[u8]) -> Result<ToyElement> {
        if bytes.is_empty() || bytes.len() > 8 || (bytes.len() > 1 && bytes[0] == 0) {
            return Err(Error::InvalidElement);
        }
        let v = bytes.iter().fold(0u64, |acc, &b| (acc << 8) | b as u64);
        if v >= self.q {
            return Err(Error::InvalidElement);
        }
        Ok(ToyElement(v))
    }

    fn element_to_slot(&self, e: &ToyElement) -> [u8; SLOT_BYTES] {
        let mut slot = [0u8; SLOT_BYTES];
        slot[SLOT_BYTES - 8..].copy_from_slice(&e.0.to_be_bytes());
        slot
    }

    fn element_from_slot(&self, bytes: &[u8; SLOT_BYTES]) -> Result<ToyElement> {
        if bytes[..SLOT_BYTES - 8].iter().any(|&b| b != 0) {
            return Err(Error::InvalidElement);
        }
        let v = u64::from_be_bytes(bytes[SLOT_BYTES - 8..].try_into().expect("8 bytes"));
        if v >= self.q {
            return Err(Error::InvalidElement);
        }
        Ok(ToyElement(v))
    }

    fn scalar_to_bytes(&self, s: &ToyScalar) -> [u8; SLOT_BYTES] {
        let mut out = [0u8; SLOT_BYTES];
        out[..8].copy_from_slice(&s.0.to_le_bytes());
        out
    }

    fn scalar_from_bytes(&self, bytes: &[u8; SLOT_BYTES]) -> Result<ToyScalar> {
        if bytes[8..].iter().any(|&b| b != 0) {
            return Err(Error::InvalidScalar);
        }
        let v = u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes"));
        if v >= self.q {
            return Err(Error::InvalidScalar);
        }
        Ok(ToyScalar(v))
    }
}

use std::sync::OnceLock;

use curve25519_dalek::constants::{RISTRETTO_BASEPOINT_POINT, RISTRETTO_BASEPOINT_TABLE};
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::scalar::Scalar;
use curve25519_dalek::traits::Identity;
use num_bigint::BigUint;
use rand::{CryptoRng, RngCore};

use super::{Backend, PrimeGroup, SLOT_BYTES};
use crate::error::{Error, Result};

/// `q = 2^252 + 27742317777372353535851937790883648493`, little-endian.
const ORDER_LE: [u8; 32] = [
    0xed, 0xd3, 0xf5, 0x5c, 0x1a, 0x63, 0x12, 0x58, 0xd6, 0x9c, 0xf7, 0xa2, 0xde, 0xf9, 0xde, 0x14,
    0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x10,
];

/// The Ristretto255 group. `Q` is the standard basepoint, so `mul_fixed`
/// uses the library's precomputed basepoint table.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Ristretto255;

impl PrimeGroup for Ristretto255 {
    type Element = RistrettoPoint;
    type Scalar = Scalar;

    fn backend(&self) -> Backend {
        Backend::Production
    }

    fn order(&self) -> BigUint {
        BigUint::from_bytes_le(&ORDER_LE)
    }

    fn scalar_bits(&self) -> usize {
        253
    }

    fn identity(&self) -> RistrettoPoint {
        RistrettoPoint::identity()
    }

    fn fixed_point(&self) -> RistrettoPoint {
        RISTRETTO_BASEPOINT_POINT
    }

    #[inline]
    fn add(&self, a: &RistrettoPoint, b: &RistrettoPoint) -> RistrettoPoint {
        a + b
    }

    fn neg(&self, a: &RistrettoPoint) -> RistrettoPoint {
        -a
    }

    #[inline]
    fn sub(&self, a: &RistrettoPoint, b: &RistrettoPoint) -> RistrettoPoint {
        a - b
    }

    fn mul(&self, k: &Scalar, p: &RistrettoPoint) -> RistrettoPoint {
        p * k
    }

    fn mul_fixed(&self, k: &Scalar) -> RistrettoPoint {
        RISTRETTO_BASEPOINT_TABLE * k
    }

    fn scalar_zero(&self) -> Scalar {
        Scalar::ZERO
    }

    fn scalar_one(&self) -> Scalar {
        Scalar::ONE
    }

    fn scalar_from_u64(&self, v: u64) -> Scalar {
        Scalar::from(v)
    }

    fn scalar_add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        a + b
    }

    fn scalar_neg(&self, a: &Scalar) -> Scalar {
        -a
    }

    fn scalar_mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        a * b
    }

    #[inline]
    fn scalar_limbs(&self, s: &Scalar) -> [u64; 4] {
        let bytes = s.as_bytes();
        let mut limbs = [0u64; 4];
        for (limb, chunk) in limbs.iter_mut().zip(bytes.chunks_exact(8)) {
            *limb = u64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        }
        limbs
    }

    #[inline]
    fn scalar_from_wide(&self, wide: &[u64; 8]) -> Scalar {
        let mut bytes = [0u8; 64];
        for (chunk, limb) in bytes.chunks_exact_mut(8).zip(wide) {
            chunk.copy_from_slice(&limb.to_le_bytes());
        }
        Scalar::from_bytes_mod_order_wide(&bytes)
    }

    fn sample_scalar<R: RngCore + CryptoRng>(&self, rng: &mut R) -> Scalar {
        // 512 uniform bits reduced mod q: statistical distance ~2^-259.
        let mut bytes = [0u8; 64];
        rng.fill_bytes(&mut bytes);
        Scalar::from_bytes_mod_order_wide(&bytes)
    }

    fn random_element<R: RngCore + CryptoRng>(&self, rng: &mut R) -> RistrettoPoint {
        let mut bytes = [0u8; 64];
        rng.fill_bytes(&mut bytes);
        RistrettoPoint::from_uniform_bytes(&bytes)
    }

    fn encode_element(&self, e: &RistrettoPoint) -> Vec<u8> {
        e.compress().to_bytes().to_vec()
    }

    fn decode_element(&self, bytes: &[u8]) -> Result<RistrettoPoint> {
        let slot: &[u8; SLOT_BYTES] = bytes.try_into().map_err(|_| Error::InvalidElement)?;
        self.element_from_slot(slot)
    }

    fn element_to_slot(&self, e: &RistrettoPoint) -> [u8; SLOT_BYTES] {
        e.compress().to_bytes()
    }

    fn element_from_slot(&self, bytes: &[u8; SLOT_BYTES]) -> Result<RistrettoPoint> {
        // Ristretto decompression rejects every non-canonical encoding.
        CompressedRistretto(*bytes).decompress().ok_or(Error::InvalidElement)
    }

    fn scalar_to_bytes(&self, s: &Scalar) -> [u8; SLOT_BYTES] {
        s.to_bytes()
    }

    fn scalar_from_bytes(&self, bytes: &[u8; SLOT_BYTES]) -> Result<Scalar> {
        Option::from(Scalar::from_canonical_bytes(*bytes)).ok_or(Error::InvalidScalar)
    }

    fn lazy_block_limit(&self) -> usize {
        static LIMIT: OnceLock<usize> = OnceLock::new();
        *LIMIT.get_or_init(|| crate::field::max_block_size(&self.order()))
    }
}

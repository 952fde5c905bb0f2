//! Scalar-field inner product `s = Σ x_i ρ_i mod q`, the verifier's only
//! `n`-dependent cost.
//!
//! The lazy variant multiplies canonical scalars as plain 256-bit integers and
//! sums the 512-bit products in a [`WideAccumulator`], reducing modulo `q`
//! once per block. With `q < 2^253` each product is below `(q-1)^2 < 2^505`,
//! so any block of at most [`max_block_size`] terms keeps the accumulator
//! below `2^512` (255 terms for Ristretto255; the default block is 128).

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::group::PrimeGroup;

pub const DEFAULT_BLOCK_SIZE: usize = 128;

/// Largest `b` with `b · (q-1)^2 ≤ 2^512 - 1`, saturating at `usize::MAX`.
pub fn max_block_size(order: &BigUint) -> usize {
    let q_minus_1 = order - 1u8;
    let square = &q_minus_1 * &q_minus_1;
    if square == BigUint::default() {
        return usize::MAX;
    }
    let ceiling = (BigUint::from(1u8) << 512u32) - 1u8;
    usize::try_from(&(ceiling / square)).unwrap_or(usize::MAX)
}

/// 512-bit unsigned accumulator of 256×256-bit products.
#[derive(Debug, Clone, Default)]
pub struct WideAccumulator {
    limbs: [u64; 8],
    terms: usize,
}

impl WideAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `a · b` without reduction. The caller bounds the number of terms
    /// so that the sum stays below `2^512`.
    #[inline(always)]
    pub fn mul_add(&mut self, a: &[u64; 4], b: &[u64; 4]) {
        let acc = &mut self.limbs;
        for i in 0..4 {
            let mut carry: u64 = 0;
            for j in 0..4 {
                let t = acc[i + j] as u128 + a[i] as u128 * b[j] as u128 + carry as u128;
                acc[i + j] = t as u64;
                carry = (t >> 64) as u64;
            }
            let mut k = i + 4;
            while carry != 0 && k < 8 {
                let (v, overflow) = acc[k].overflowing_add(carry);
                acc[k] = v;
                carry = overflow as u64;
                k += 1;
            }
            debug_assert_eq!(carry, 0, "wide accumulator overflowed 512 bits");
        }
        self.terms += 1;
    }

    pub fn limbs(&self) -> &[u64; 8] {
        &self.limbs
    }

    pub fn terms(&self) -> usize {
        self.terms
    }

    pub fn clear(&mut self) {
        *self = Self::default();
    }
}

/// `⟨x, ρ⟩ mod q` with one modular reduction per `block_size` products.
pub fn inner_product_lazy<G: PrimeGroup>(
    group: &G,
    x: &[G::Scalar],
    rho: &[G::Scalar],
    block_size: usize,
) -> Result<G::Scalar> {
    if x.len() != rho.len() {
        return Err(Error::LengthMismatch { expected: rho.len(), found: x.len() });
    }
    let limit = group.lazy_block_limit();
    if block_size == 0 || block_size > limit {
        return Err(Error::InvalidBlockSize { requested: block_size, limit });
    }

    let mut total = group.scalar_zero();
    let mut acc = WideAccumulator::new();
    for (xs, rs) in x.chunks(block_size).zip(rho.chunks(block_size)) {
        acc.clear();
        for (xi, ri) in xs.iter().zip(rs) {
            acc.mul_add(&group.scalar_limbs(xi), &group.scalar_limbs(ri));
        }
        debug_assert!(acc.terms() <= block_size);
        total = group.scalar_add(&total, &group.scalar_from_wide(acc.limbs()));
    }
    Ok(total)
}

/// `⟨x, ρ⟩ mod q`, reducing after every multiply-add.
pub fn inner_product_naive<G: PrimeGroup>(
    group: &G,
    x: &[G::Scalar],
    rho: &[G::Scalar],
) -> Result<G::Scalar> {
    if x.len() != rho.len() {
        return Err(Error::LengthMismatch { expected: rho.len(), found: x.len() });
    }
    Ok(x.iter().zip(rho).fold(group.scalar_zero(), |acc, (xi, ri)| {
        group.scalar_add(&acc, &group.scalar_mul(xi, ri))
    }))
}

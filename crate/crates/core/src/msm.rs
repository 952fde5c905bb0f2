//! Multi-scalar multiplication `Σ x_i P_i`.
//!
//! [`msm_naive`] is the accumulate-loop baseline. [`msm_bucketed`] is a
//! Pippenger-style bucket method with signed radix-`2^w` digits:
//!
//! 1. Recode every scalar into `⌊bits/w⌋ + 1` signed digits in
//!    `[-2^(w-1), 2^(w-1)]`.
//! 2. For each digit position, add (or subtract) every base into bucket
//!    `|d| - 1`, then fold the `2^(w-1)` buckets with a running sum so bucket
//!    `j` is counted `j + 1` times.
//! 3. Combine digit positions from the top, doubling `w` times between them.
//!
//! [`msm_dual`] recodes the scalars once and runs step 2 over two base
//! vectors, which is how the server answers a query.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::PrimeGroup;

/// Window width `w = max(1, ⌊log2 n⌋ - 3)`, clamped to `[1, 16]`.
pub fn window_width(n: usize) -> usize {
    let log2 = n.max(1).ilog2() as usize;
    log2.saturating_sub(3).clamp(1, 16)
}

fn check_lengths(bases: usize, scalars: usize) -> Result<()> {
    if bases != scalars {
        return Err(Error::LengthMismatch { expected: bases, found: scalars });
    }
    if bases == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// `acc ← 0; for i: acc ← acc + x_i·P_i`.
pub fn msm_naive<G: PrimeGroup>(group: &G, bases: &[G::Element], scalars: &[G::Scalar]) -> Result<G::Element> {
    check_lengths(bases.len(), scalars.len())?;
    Ok(bases
        .iter()
        .zip(scalars)
        .fold(group.identity(), |acc, (p, x)| group.add(&acc, &group.mul(x, p))))
}

/// Signed-digit decomposition of a scalar vector, shared between MSMs over
/// different bases.
#[derive(Debug, Clone)]
pub struct Recoding {
    width: usize,
    windows: usize,
    /// `digits[i * windows + k]` is digit `k` of scalar `i`.
    digits: Vec<i32>,
}

impl Recoding {
    pub fn new<G: PrimeGroup>(group: &G, scalars: &[G::Scalar], width: usize) -> Self {
        assert!((1..=16).contains(&width), "window width {width} out of range");
        let bits = group.scalar_bits();
        let windows = bits / width + 1;
        let mut digits = Vec::with_capacity(scalars.len() * windows);
        for s in scalars {
            let limbs = group.scalar_limbs(s);
            let mut carry = 0i64;
            let half = 1i64 << (width - 1);
            for k in 0..windows {
                let raw = window_bits(&limbs, k * width, width) as i64 + carry;
                // The top digit absorbs the final carry and may equal 2^(w-1).
                if raw >= half && k + 1 < windows {
                    digits.push((raw - (1i64 << width)) as i32);
                    carry = 1;
                } else {
                    debug_assert!(raw <= half);
                    digits.push(raw as i32);
                    carry = 0;
                }
            }
        }
        Self { width, windows, digits }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn windows(&self) -> usize {
        self.windows
    }

    pub fn len(&self) -> usize {
        self.digits.len() / self.windows
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    #[inline]
    fn digit(&self, i: usize, k: usize) -> i32 {
        self.digits[i * self.windows + k]
    }

    /// Bucket sum for digit position `k`: `Σ_i d_{i,k} · P_i`.
    fn window_sum<G: PrimeGroup>(&self, group: &G, bases: &[G::Element], k: usize) -> G::Element {
        let mut buckets = vec![group.identity(); 1 << (self.width - 1)];
        for (i, p) in bases.iter().enumerate() {
            let d = self.digit(i, k);
            if d > 0 {
                let b = (d - 1) as usize;
                buckets[b] = group.add(&buckets[b], p);
            } else if d < 0 {
                let b = (-d - 1) as usize;
                buckets[b] = group.sub(&buckets[b], p);
            }
        }
        let mut running = group.identity();
        let mut total = group.identity();
        for bucket in buckets.iter().rev() {
            running = group.add(&running, bucket);
            total = group.add(&total, &running);
        }
        total
    }

    fn combine<G: PrimeGroup>(&self, group: &G, window_sums: &[G::Element]) -> G::Element {
        let mut acc = group.identity();
        for sum in window_sums.iter().rev() {
            for _ in 0..self.width {
                acc = group.double(&acc);
            }
            acc = group.add(&acc, sum);
        }
        acc
    }

    /// `Σ x_i P_i` for the recoded scalars.
    pub fn evaluate<G: PrimeGroup>(&self, group: &G, bases: &[G::Element]) -> Result<G::Element> {
        check_lengths(bases.len(), self.len())?;
        let sums: Vec<_> = (0..self.windows).map(|k| self.window_sum(group, bases, k)).collect();
        Ok(self.combine(group, &sums))
    }

    /// Same as [`Recoding::evaluate`], with digit positions spread over the
    /// current rayon pool.
    pub fn evaluate_par<G: PrimeGroup>(&self, group: &G, bases: &[G::Element]) -> Result<G::Element> {
        check_lengths(bases.len(), self.len())?;
        let sums: Vec<_> = (0..self.windows)
            .into_par_iter()
            .map(|k| self.window_sum(group, bases, k))
            .collect();
        Ok(self.combine(group, &sums))
    }
}

/// `w` bits of the 256-bit little-endian integer starting at bit `offset`.
#[inline]
fn window_bits(limbs: &[u64; 4], offset: usize, w: usize) -> u64 {
    let limb = offset / 64;
    if limb >= 4 {
        return 0;
    }
    let shift = offset % 64;
    let mut v = limbs[limb] >> shift;
    if shift + w > 64 && limb + 1 < 4 {
        v |= limbs[limb + 1] << (64 - shift);
    }
    v & ((1u64 << w) - 1)
}

/// Pippenger-style bucket MSM with the window schedule of [`window_width`].
pub fn msm_bucketed<G: PrimeGroup>(group: &G, bases: &[G::Element], scalars: &[G::Scalar]) -> Result<G::Element> {
    check_lengths(bases.len(), scalars.len())?;
    Recoding::new(group, scalars, window_width(scalars.len())).evaluate(group, bases)
}

/// [`msm_bucketed`] parallelised over digit positions.
pub fn msm_bucketed_par<G: PrimeGroup>(
    group: &G,
    bases: &[G::Element],
    scalars: &[G::Scalar],
) -> Result<G::Element> {
    check_lengths(bases.len(), scalars.len())?;
    Recoding::new(group, scalars, window_width(scalars.len())).evaluate_par(group, bases)
}

/// `(MSM(bases1, x), MSM(bases2, x))` with a single scalar recoding.
pub fn msm_dual<G: PrimeGroup>(
    group: &G,
    bases1: &[G::Element],
    bases2: &[G::Element],
    scalars: &[G::Scalar],
) -> Result<(G::Element, G::Element)> {
    check_lengths(bases1.len(), scalars.len())?;
    check_lengths(bases2.len(), scalars.len())?;
    let recoding = Recoding::new(group, scalars, window_width(scalars.len()));
    Ok((recoding.evaluate(group, bases1)?, recoding.evaluate(group, bases2)?))
}

/// [`msm_dual`] with both MSMs and their digit positions run in parallel.
pub fn msm_dual_par<G: PrimeGroup>(
    group: &G,
    bases1: &[G::Element],
    bases2: &[G::Element],
    scalars: &[G::Scalar],
) -> Result<(G::Element, G::Element)> {
    check_lengths(bases1.len(), scalars.len())?;
    check_lengths(bases2.len(), scalars.len())?;
    let recoding = Recoding::new(group, scalars, window_width(scalars.len()));
    let (a, b) = rayon::join(
        || recoding.evaluate_par(group, bases1),
        || recoding.evaluate_par(group, bases2),
    );
    Ok((a?, b?))
}

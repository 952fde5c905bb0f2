//! Keyed setup, honest server response and client verification.
//!
//! Setup samples a secret scalar `r` and a secret vector `ρ` and publishes the
//! merged bases `T_i = r·P_i + ρ_i·Q`. For a query `x` the server returns
//! `A = MSM(P, x)` and `B = MSM(T, x)`; the client computes `s = ⟨x, ρ⟩` and
//! accepts `A` iff `B = r·A + s·Q`. For an incorrect `A` at most one value of
//! `r` satisfies the check, and `r` is independent of `T`, so a single query
//! is accepted wrongly with probability at most `1/q`, and `e` adaptive
//! queries with probability at most `e/q`.
//!
//! The protocol does not hide `x` from the server and assumes an authentic
//! channel between client and server.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rand::{CryptoRng, RngCore};

use crate::error::{Error, Result};
use crate::field::{inner_product_lazy, DEFAULT_BLOCK_SIZE};
use crate::group::PrimeGroup;
use crate::msm::msm_dual;

/// Advisory number of verifications per key before rotation is recommended.
/// At this many queries the adaptive bound `e/q` is below `2^-230` on
/// Ristretto255.
pub const DEFAULT_USAGE_LIMIT: u64 = 1 << 20;

/// Client secret state `(r, ρ)`. There is deliberately no wire encoder for it.
pub struct SecretKey<G: PrimeGroup> {
    r: G::Scalar,
    rho: Vec<G::Scalar>,
    uses: AtomicU64,
    usage_limit: u64,
}

impl<G: PrimeGroup> SecretKey<G> {
    pub fn new(r: G::Scalar, rho: Vec<G::Scalar>) -> Self {
        Self { r, rho, uses: AtomicU64::new(0), usage_limit: DEFAULT_USAGE_LIMIT }
    }

    pub fn with_usage_limit(mut self, limit: u64) -> Self {
        self.usage_limit = limit;
        self
    }

    pub fn r(&self) -> &G::Scalar {
        &self.r
    }

    pub fn rho(&self) -> &[G::Scalar] {
        &self.rho
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// Number of verifications performed with this key.
    pub fn uses(&self) -> u64 {
        self.uses.load(Ordering::Relaxed)
    }

    pub fn usage_limit(&self) -> u64 {
        self.usage_limit
    }

    fn record_use(&self) {
        let used = self.uses.fetch_add(1, Ordering::Relaxed) + 1;
        if used == self.usage_limit.saturating_add(1) {
            log::warn!(
                "secret key used for {used} verifications, above the advisory limit of {}; consider rotating",
                self.usage_limit
            );
        }
    }
}

impl<G: PrimeGroup> Clone for SecretKey<G> {
    fn clone(&self) -> Self {
        Self {
            r: self.r,
            rho: self.rho.clone(),
            uses: AtomicU64::new(self.uses()),
            usage_limit: self.usage_limit,
        }
    }
}

impl<G: PrimeGroup> fmt::Debug for SecretKey<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SecretKey")
            .field("n", &self.rho.len())
            .field("uses", &self.uses())
            .finish_non_exhaustive()
    }
}

/// Public state after setup: the group descriptor, the bases `P` and the
/// merged bases `T`.
#[derive(Debug, Clone)]
pub struct PublicState<G: PrimeGroup> {
    pub group: G,
    pub bases: Vec<G::Element>,
    pub merged: Vec<G::Element>,
}

impl<G: PrimeGroup> PublicState<G> {
    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }
}

/// The server's two-element answer to one query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryResponse<E> {
    pub a: E,
    pub b: E,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict<E> {
    Accept(E),
    Reject,
}

impl<E> Verdict<E> {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept(_))
    }

    pub fn output(&self) -> Option<&E> {
        match self {
            Verdict::Accept(a) => Some(a),
            Verdict::Reject => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerdictRecord<E> {
    pub verdict: Verdict<E>,
    pub inner_product_time: Duration,
    pub total_time: Duration,
}

/// `T_i = r·P_i + ρ_i·Q` for every `i`.
pub fn merged_bases<G: PrimeGroup>(
    group: &G,
    bases: &[G::Element],
    r: &G::Scalar,
    rho: &[G::Scalar],
) -> Result<Vec<G::Element>> {
    if bases.is_empty() {
        return Err(Error::EmptyInput);
    }
    if rho.len() != bases.len() {
        return Err(Error::LengthMismatch { expected: bases.len(), found: rho.len() });
    }
    Ok(bases
        .iter()
        .zip(rho)
        .map(|(p, rho_i)| group.add(&group.mul(r, p), &group.mul_fixed(rho_i)))
        .collect())
}

/// One-time keyed setup. `r` is sampled from all of `F_q`, zero included.
pub fn setup<G, R>(group: &G, bases: Vec<G::Element>, rng: &mut R) -> Result<(SecretKey<G>, PublicState<G>)>
where
    G: PrimeGroup,
    R: RngCore + CryptoRng,
{
    if bases.is_empty() {
        return Err(Error::EmptyInput);
    }
    let r = group.sample_scalar(rng);
    let rho = (0..bases.len()).map(|_| group.sample_scalar(rng)).collect();
    setup_with_secret(group, bases, r, rho)
}

/// Setup with caller-chosen secrets, for restoring a persisted key and for
/// tests that force specific values.
pub fn setup_with_secret<G: PrimeGroup>(
    group: &G,
    bases: Vec<G::Element>,
    r: G::Scalar,
    rho: Vec<G::Scalar>,
) -> Result<(SecretKey<G>, PublicState<G>)> {
    if group.is_identity(&group.fixed_point()) {
        return Err(Error::IdentityFixedPoint);
    }
    let merged = merged_bases(group, &bases, &r, &rho)?;
    let key = SecretKey::new(r, rho);
    Ok((key, PublicState { group: group.clone(), bases, merged }))
}

/// Honest server: `A = MSM(P, x)`, `B = MSM(T, x)` from one scalar recoding.
pub fn server_respond<G: PrimeGroup>(
    group: &G,
    bases: &[G::Element],
    merged: &[G::Element],
    x: &[G::Scalar],
) -> Result<QueryResponse<G::Element>> {
    if merged.len() != bases.len() {
        return Err(Error::LengthMismatch { expected: bases.len(), found: merged.len() });
    }
    let (a, b) = msm_dual(group, bases, merged, x)?;
    Ok(QueryResponse { a, b })
}

/// `B == r·A + s·Q`: two scalar multiplications, one addition, one equality.
pub fn verify_equation_only<G: PrimeGroup>(
    group: &G,
    r: &G::Scalar,
    s: &G::Scalar,
    resp: &QueryResponse<G::Element>,
) -> bool {
    let expected = group.add(&group.mul(r, &resp.a), &group.mul_fixed(s));
    expected == resp.b
}

/// Client verification. A length mismatch is an error; a wrong answer is a
/// [`Verdict::Reject`].
pub fn client_verify<G: PrimeGroup>(
    group: &G,
    key: &SecretKey<G>,
    x: &[G::Scalar],
    resp: &QueryResponse<G::Element>,
) -> Result<VerdictRecord<G::Element>> {
    if x.len() != key.len() {
        return Err(Error::LengthMismatch { expected: key.len(), found: x.len() });
    }
    let start = Instant::now();
    key.record_use();
    let s = inner_product_lazy(group, x, key.rho(), DEFAULT_BLOCK_SIZE)?;
    let inner_product_time = start.elapsed();
    let verdict = if verify_equation_only(group, key.r(), &s, resp) {
        Verdict::Accept(resp.a)
    } else {
        Verdict::Reject
    };
    Ok(VerdictRecord { verdict, inner_product_time, total_time: start.elapsed() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{Ristretto255, ToyElement, ToyGroup, ToyScalar};
    use crate::msm::msm_naive;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn toy() -> ToyGroup {
        ToyGroup::new(251).unwrap()
    }

    fn els(v: &[u64]) -> Vec<ToyElement> {
        v.iter().map(|&x| ToyElement(x)).collect()
    }

    fn scs(v: &[u64]) -> Vec<ToyScalar> {
        v.iter().map(|&x| ToyScalar(x)).collect()
    }

    #[test]
    fn forced_toy_instance() {
        let g = toy();
        let (key, state) = setup_with_secret(&g, els(&[1, 2]), ToyScalar(3), scs(&[4, 5])).unwrap();
        assert_eq!(state.merged, els(&[7, 11]));

        let x = scs(&[2, 3]);
        let resp = server_respond(&g, &state.bases, &state.merged, &x).unwrap();
        assert_eq!(resp, QueryResponse { a: ToyElement(8), b: ToyElement(47) });

        let record = client_verify(&g, &key, &x, &resp).unwrap();
        assert_eq!(record.verdict, Verdict::Accept(ToyElement(8)));
        assert!(verify_equation_only(&g, &ToyScalar(3), &ToyScalar(23), &resp));
    }

    #[test]
    fn zero_r_is_allowed() {
        let g = toy();
        let (_, state) = setup_with_secret(&g, els(&[9, 10]), ToyScalar(0), scs(&[4, 5])).unwrap();
        assert_eq!(state.merged, els(&[4, 5]));
    }

    #[test]
    fn setup_errors() {
        let g = toy();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        assert_eq!(setup(&g, vec![], &mut rng).unwrap_err(), Error::EmptyInput);
        assert_eq!(
            setup_with_secret(&g, els(&[1, 2]), ToyScalar(1), scs(&[1])).unwrap_err(),
            Error::LengthMismatch { expected: 2, found: 1 }
        );
    }

    #[test]
    fn server_trivial_queries() {
        let g = Ristretto255;
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let bases: Vec<_> = (0..3).map(|_| g.random_element(&mut rng)).collect();
        let (_, state) = setup(&g, bases, &mut rng).unwrap();
        let zero = server_respond(&g, &state.bases, &state.merged, &[g.scalar_zero(); 3]).unwrap();
        assert_eq!(zero, QueryResponse { a: g.identity(), b: g.identity() });

        let (_, one) = setup(&g, state.bases[..1].to_vec(), &mut rng).unwrap();
        let resp = server_respond(&g, &one.bases, &one.merged, &[g.scalar_one()]).unwrap();
        assert_eq!(resp, QueryResponse { a: one.bases[0], b: one.merged[0] });
    }

    #[test]
    fn honest_accepts_and_perturbation_rejects() {
        let g = Ristretto255;
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let bases: Vec<_> = (0..64).map(|_| g.random_element(&mut rng)).collect();
        let (key, state) = setup(&g, bases, &mut rng).unwrap();
        let x: Vec<_> = (0..64).map(|_| g.sample_scalar(&mut rng)).collect();
        let resp = server_respond(&g, &state.bases, &state.merged, &x).unwrap();
        assert_eq!(resp.a, msm_naive(&g, &state.bases, &x).unwrap());

        let record = client_verify(&g, &key, &x, &resp).unwrap();
        assert_eq!(record.verdict, Verdict::Accept(resp.a));

        let bumped = QueryResponse { a: resp.a, b: g.add(&resp.b, &g.fixed_point()) };
        assert_eq!(client_verify(&g, &key, &x, &bumped).unwrap().verdict, Verdict::Reject);

        let r = *key.r();
        let s = inner_product_lazy(&g, &x, key.rho(), DEFAULT_BLOCK_SIZE).unwrap();
        let built = g.add(&g.mul(&r, &resp.a), &g.mul_fixed(&s));
        assert!(verify_equation_only(&g, &r, &s, &QueryResponse { a: resp.a, b: built }));
        let off = g.add(&built, &g.fixed_point());
        assert!(!verify_equation_only(&g, &r, &s, &QueryResponse { a: resp.a, b: off }));
    }

    #[test]
    fn length_mismatch_is_error_not_reject() {
        let g = toy();
        let (key, state) = setup_with_secret(&g, els(&[1, 2]), ToyScalar(3), scs(&[4, 5])).unwrap();
        let resp = server_respond(&g, &state.bases, &state.merged, &scs(&[1, 1])).unwrap();
        assert_eq!(
            client_verify(&g, &key, &scs(&[1]), &resp).unwrap_err(),
            Error::LengthMismatch { expected: 2, found: 1 }
        );
        assert!(server_respond(&g, &state.bases, &state.merged[..1], &scs(&[1, 1])).is_err());
    }

    #[test]
    fn merged_state_consistency() {
        let g = Ristretto255;
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let bases: Vec<_> = (0..1024).map(|_| g.random_element(&mut rng)).collect();
        let (key, state) = setup(&g, bases, &mut rng).unwrap();
        assert_eq!(state.merged.len(), 1024);
        for ((t, p), rho) in state.merged.iter().zip(&state.bases).zip(key.rho()) {
            assert_eq!(g.sub(t, &g.mul(key.r(), p)), g.mul_fixed(rho));
        }
    }

    #[test]
    fn usage_counter() {
        let g = toy();
        let (key, state) = setup_with_secret(&g, els(&[1, 2]), ToyScalar(3), scs(&[4, 5])).unwrap();
        let key = key.with_usage_limit(2);
        let x = scs(&[1, 2]);
        let resp = server_respond(&g, &state.bases, &state.merged, &x).unwrap();
        for _ in 0..5 {
            assert!(client_verify(&g, &key, &x, &resp).unwrap().verdict.is_accept());
        }
        assert_eq!(key.uses(), 5);
        assert_eq!(key.clone().uses(), 5);
        assert!(!format!("{key:?}").contains("rho:"));
    }

    mod counting {
        use super::*;
        use crate::group::{Backend, SLOT_BYTES};
        use num_bigint::BigUint;
        use std::sync::atomic::AtomicUsize;
        use std::sync::Arc;

        /// Toy group that counts group-level operations.
        #[derive(Debug, Clone, Default)]
        pub struct Counters {
            pub mul: Arc<AtomicUsize>,
            pub mul_fixed: Arc<AtomicUsize>,
            pub add: Arc<AtomicUsize>,
        }

        #[derive(Debug, Clone)]
        pub struct CountingGroup {
            pub inner: ToyGroup,
            pub counters: Counters,
            /// Replaces `Q` with the identity to exercise setup validation.
            pub identity_q: bool,
        }

        impl PrimeGroup for CountingGroup {
            type Element = ToyElement;
            type Scalar = ToyScalar;

            fn backend(&self) -> Backend {
                self.inner.backend()
            }
            fn order(&self) -> BigUint {
                self.inner.order()
            }
            fn scalar_bits(&self) -> usize {
                self.inner.scalar_bits()
            }
            fn identity(&self) -> ToyElement {
                self.inner.identity()
            }
            fn fixed_point(&self) -> ToyElement {
                if self.identity_q {
                    self.inner.identity()
                } else {
                    self.inner.fixed_point()
                }
            }
            fn add(&self, a: &ToyElement, b: &ToyElement) -> ToyElement {
                self.counters.add.fetch_add(1, Ordering::Relaxed);
                self.inner.add(a, b)
            }
            fn neg(&self, a: &ToyElement) -> ToyElement {
                self.inner.neg(a)
            }
            fn mul(&self, k: &ToyScalar, p: &ToyElement) -> ToyElement {
                self.counters.mul.fetch_add(1, Ordering::Relaxed);
                self.inner.mul(k, p)
            }
            fn mul_fixed(&self, k: &ToyScalar) -> ToyElement {
                self.counters.mul_fixed.fetch_add(1, Ordering::Relaxed);
                self.inner.mul(k, &self.fixed_point())
            }
            fn scalar_zero(&self) -> ToyScalar {
                self.inner.scalar_zero()
            }
            fn scalar_one(&self) -> ToyScalar {
                self.inner.scalar_one()
            }
            fn scalar_from_u64(&self, v: u64) -> ToyScalar {
                self.inner.scalar_from_u64(v)
            }
            fn scalar_add(&self, a: &ToyScalar, b: &ToyScalar) -> ToyScalar {
                self.inner.scalar_add(a, b)
            }
            fn scalar_neg(&self, a: &ToyScalar) -> ToyScalar {
                self.inner.scalar_neg(a)
            }
            fn scalar_mul(&self, a: &ToyScalar, b: &ToyScalar) -> ToyScalar {
                self.inner.scalar_mul(a, b)
            }
            fn scalar_limbs(&self, s: &ToyScalar) -> [u64; 4] {
                self.inner.scalar_limbs(s)
            }
            fn scalar_from_wide(&self, wide: &[u64; 8]) -> ToyScalar {
                self.inner.scalar_from_wide(wide)
            }
            fn sample_scalar<R: RngCore + CryptoRng>(&self, rng: &mut R) -> ToyScalar {
                self.inner.sample_scalar(rng)
            }
            fn random_element<R: RngCore + CryptoRng>(&self, rng: &mut R) -> ToyElement {
                self.inner.random_element(rng)
            }
            fn encode_element(&self, e: &ToyElement) -> Vec<u8> {
                self.inner.encode_element(e)
            }
            fn decode_element(&self, bytes: &[u8]) -> Result<ToyElement> {
                self.inner.decode_element(bytes)
            }
            fn element_to_slot(&self, e: &ToyElement) -> [u8; SLOT_BYTES] {
                self.inner.element_to_slot(e)
            }
            fn element_from_slot(&self, bytes: &[u8; SLOT_BYTES]) -> Result<ToyElement> {
                self.inner.element_from_slot(bytes)
            }
            fn scalar_to_bytes(&self, s: &ToyScalar) -> [u8; SLOT_BYTES] {
                self.inner.scalar_to_bytes(s)
            }
            fn scalar_from_bytes(&self, bytes: &[u8; SLOT_BYTES]) -> Result<ToyScalar> {
                self.inner.scalar_from_bytes(bytes)
            }
        }
    }

    #[test]
    fn verifier_group_work_is_constant_in_n() {
        use counting::{CountingGroup, Counters};
        let counters = Counters::default();
        let g = CountingGroup { inner: toy(), counters: counters.clone(), identity_q: false };
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for n in [1usize, 64, 1024, 4096] {
            let bases: Vec<_> = (0..n).map(|_| g.random_element(&mut rng)).collect();
            let (key, state) = setup(&g, bases, &mut rng).unwrap();
            let x: Vec<_> = (0..n).map(|_| g.sample_scalar(&mut rng)).collect();
            let resp = server_respond(&g, &state.bases, &state.merged, &x).unwrap();

            for c in [&counters.mul, &counters.mul_fixed, &counters.add] {
                c.store(0, Ordering::Relaxed);
            }
            assert!(client_verify(&g, &key, &x, &resp).unwrap().verdict.is_accept());
            assert_eq!(counters.mul.load(Ordering::Relaxed), 1, "n={n}");
            assert_eq!(counters.mul_fixed.load(Ordering::Relaxed), 1, "n={n}");
            assert_eq!(counters.add.load(Ordering::Relaxed), 1, "n={n}");
        }
    }

    #[test]
    fn identity_fixed_point_rejected() {
        use counting::{CountingGroup, Counters};
        let g = CountingGroup { inner: toy(), counters: Counters::default(), identity_q: true };
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        assert_eq!(setup(&g, els(&[1, 2]), &mut rng).unwrap_err(), Error::IdentityFixedPoint);
    }
}

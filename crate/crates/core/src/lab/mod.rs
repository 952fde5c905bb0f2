//! Adversarial servers and soundness experiments.
//!
//! Soundness probabilities are `e/q`, which is invisible at `q ≈ 2^252`; the
//! experiments here run on the toy group so that incorrect acceptances
//! actually occur and can be counted. An incorrect acceptance is a verifier
//! accept on a response whose `A` differs from `MSM(P, x)`.

mod independence;
pub mod stats;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::{PrimeGroup, ToyGroup, ToyScalar};
use crate::msm::msm_naive;
use crate::protocol::{client_verify, server_respond, setup, QueryResponse};

pub use independence::{test_independence, IndependenceReport};

/// Confidence level of every interval in a [`SoundnessReport`].
pub const CONFIDENCE: f64 = 0.99;

/// Server behaviours.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Honest,
    /// Wrong `A`, with `B` forged for a uniformly guessed `r`.
    GuessR,
    /// `A` and `B` computed over the first `k` indices only.
    PartialSum { k: usize },
    /// Independent uniform `A` and `B`.
    RandomPair,
    /// Forges for a fresh, never-tried `r` each execution; after an accept it
    /// keeps using the recovered key.
    AdaptiveEliminator,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Honest,
        Strategy::GuessR,
        Strategy::PartialSum { k: 1 },
        Strategy::RandomPair,
        Strategy::AdaptiveEliminator,
    ];

    /// Analytic incorrect-acceptance probability over `e` executions against
    /// a fresh key, where it has a closed form.
    pub fn expected_rate(&self, q: f64, e: u64) -> Option<f64> {
        let e_f = e as f64;
        match self {
            Strategy::Honest => Some(0.0),
            Strategy::GuessR => Some(1.0 - (1.0 - 1.0 / q).powf(e_f)),
            Strategy::AdaptiveEliminator => Some(e_f.min(q) / q),
            // B is uniform and independent of the key; A is wrong unless it
            // happens to hit MSM(P, x).
            Strategy::RandomPair => Some(1.0 - (1.0 - (q - 1.0) / (q * q)).powf(e_f)),
            Strategy::PartialSum { .. } => None,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Honest => f.write_str("honest"),
            Strategy::GuessR => f.write_str("guess_r"),
            Strategy::PartialSum { k } => write!(f, "partial_sum:{k}"),
            Strategy::RandomPair => f.write_str("random_pair"),
            Strategy::AdaptiveEliminator => f.write_str("adaptive_eliminator"),
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    /// Accepts the [`Display`](fmt::Display) names; `partial_sum` alone means `k = 1`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown strategy `{s}`"));
        Ok(match s {
            "honest" => Strategy::Honest,
            "guess_r" => Strategy::GuessR,
            "partial_sum" => Strategy::PartialSum { k: 1 },
            "random_pair" => Strategy::RandomPair,
            "adaptive_eliminator" => Strategy::AdaptiveEliminator,
            other => {
                let k = other.strip_prefix("partial_sum:").ok_or_else(bad)?;
                Strategy::PartialSum { k: k.parse().map_err(|_| bad())? }
            }
        })
    }
}

/// Forged response for a guessed key: `A = MSM(P, x) + delta` and
/// `B = g·A + MSM(T - g·P, x)`. Accepted exactly when `g = r`.
pub fn attack_guess_r<G: PrimeGroup>(
    group: &G,
    bases: &[G::Element],
    merged: &[G::Element],
    x: &[G::Scalar],
    guessed_r: &G::Scalar,
    delta: &G::Element,
) -> Result<QueryResponse<G::Element>> {
    if group.is_identity(delta) {
        return Err(Error::InvalidArgument("delta must not be the identity".into()));
    }
    if merged.len() != bases.len() {
        return Err(Error::LengthMismatch { expected: bases.len(), found: merged.len() });
    }
    let a = group.add(&msm_naive(group, bases, x)?, delta);
    let shifted: Vec<_> = merged
        .iter()
        .zip(bases)
        .map(|(t, p)| group.sub(t, &group.mul(guessed_r, p)))
        .collect();
    let b = group.add(&group.mul(guessed_r, &a), &msm_naive(group, &shifted, x)?);
    Ok(QueryResponse { a, b })
}

/// `A = Σ_{i<k} x_i P_i`, `B = Σ_{i<k} x_i T_i`: consistent, but over a
/// strict prefix of the indices.
pub fn attack_partial_sum<G: PrimeGroup>(
    group: &G,
    bases: &[G::Element],
    merged: &[G::Element],
    x: &[G::Scalar],
    k: usize,
) -> Result<QueryResponse<G::Element>> {
    let n = bases.len();
    if merged.len() != n || x.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: merged.len().min(x.len()) });
    }
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!("partial sum needs 1 <= k < n, got k={k}, n={n}")));
    }
    Ok(QueryResponse {
        a: msm_naive(group, &bases[..k], &x[..k])?,
        b: msm_naive(group, &merged[..k], &x[..k])?,
    })
}

/// Every `r ∈ F_q` for which `B = r·A + MSM(T - r·P, x)`.
pub fn enumerate_acceptors(
    group: &ToyGroup,
    bases: &[<ToyGroup as PrimeGroup>::Element],
    merged: &[<ToyGroup as PrimeGroup>::Element],
    x: &[ToyScalar],
    resp: &QueryResponse<<ToyGroup as PrimeGroup>::Element>,
) -> Result<Vec<ToyScalar>> {
    if merged.len() != bases.len() {
        return Err(Error::LengthMismatch { expected: bases.len(), found: merged.len() });
    }
    let mut out = Vec::new();
    for r in group.all_scalars() {
        let shifted: Vec<_> = merged.iter().zip(bases).map(|(t, p)| group.sub(t, &group.mul(&r, p))).collect();
        let rhs = group.add(&group.mul(&r, &resp.a), &msm_naive(group, &shifted, x)?);
        if rhs == resp.b {
            out.push(r);
        }
    }
    Ok(out)
}

pub(crate) fn random_non_identity<G: PrimeGroup, R: RngCore + CryptoRng>(group: &G, rng: &mut R) -> G::Element {
    loop {
        let e = group.random_element(rng);
        if !group.is_identity(&e) {
            return e;
        }
    }
}

/// Deterministic per-index stream, so results do not depend on scheduling.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A malicious server with memory across executions against one key.
#[derive(Debug, Clone)]
pub struct Adversary<G: PrimeGroup> {
    strategy: Strategy,
    order: Option<usize>,
    tried: HashSet<G::Scalar>,
    last_guess: Option<G::Scalar>,
    recovered: Option<G::Scalar>,
}

impl<G: PrimeGroup> Adversary<G> {
    pub fn new(group: &G, strategy: Strategy) -> Self {
        Self {
            strategy,
            order: usize::try_from(&group.order()).ok(),
            tried: HashSet::new(),
            last_guess: None,
            recovered: None,
        }
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn recovered_key(&self) -> Option<&G::Scalar> {
        self.recovered.as_ref()
    }

    pub fn respond<R: RngCore + CryptoRng>(
        &mut self,
        group: &G,
        bases: &[G::Element],
        merged: &[G::Element],
        x: &[G::Scalar],
        rng: &mut R,
    ) -> Result<QueryResponse<G::Element>> {
        self.last_guess = None;
        match self.strategy {
            Strategy::Honest => server_respond(group, bases, merged, x),
            Strategy::GuessR => {
                let guess = group.sample_scalar(rng);
                self.last_guess = Some(guess);
                attack_guess_r(group, bases, merged, x, &guess, &random_non_identity(group, rng))
            }
            Strategy::PartialSum { k } => attack_partial_sum(group, bases, merged, x, k),
            Strategy::RandomPair => Ok(QueryResponse { a: group.random_element(rng), b: group.random_element(rng) }),
            Strategy::AdaptiveEliminator => {
                let delta = random_non_identity(group, rng);
                if let Some(r) = self.recovered {
                    return attack_guess_r(group, bases, merged, x, &r, &delta);
                }
                if self.order.is_some_and(|q| self.tried.len() >= q) {
                    return server_respond(group, bases, merged, x);
                }
                let guess = loop {
                    let g = group.sample_scalar(rng);
                    if self.tried.insert(g) {
                        break g;
                    }
                };
                self.last_guess = Some(guess);
                attack_guess_r(group, bases, merged, x, &guess, &delta)
            }
        }
    }

    /// Feeds back the verifier's accept bit for the last response.
    pub fn observe(&mut self, accepted: bool) {
        if accepted && self.strategy == Strategy::AdaptiveEliminator {
            if let Some(g) = self.last_guess {
                self.recovered = Some(g);
            }
        }
    }
}

/// Outcome of a Monte Carlo soundness experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SoundnessReport {
    pub strategy: Strategy,
    pub backend: String,
    pub q: String,
    pub n: usize,
    pub trials: u64,
    pub executions: u64,
    pub seed: u64,
    /// Trials with at least one incorrect acceptance.
    pub incorrect_acceptances: u64,
    pub frequency: f64,
    pub confidence: f64,
    /// Wilson interval around `frequency`.
    pub ci_low: f64,
    pub ci_high: f64,
    /// `e/q`.
    pub bound: f64,
    /// `4·sqrt(bound/trials)`.
    pub slack: f64,
    pub expected: Option<f64>,
    /// Central binomial region of the frequency under `expected`.
    pub expected_low: Option<f64>,
    pub expected_high: Option<f64>,
    /// `frequency <= bound + slack`.
    pub pass: bool,
}

impl SoundnessReport {
    /// Whether the frequency falls in the binomial region predicted by the
    /// strategy's analytic rate.
    pub fn matches_expected(&self) -> Option<bool> {
        Some((self.expected_low?..=self.expected_high?).contains(&self.frequency))
    }

    pub fn to_kv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_owned(), |v| format!("{v:.9}"));
        let matches = self.matches_expected().map_or_else(|| "none".to_owned(), |m| m.to_string());
        [
            format!("strategy={}", self.strategy),
            format!("backend={}", self.backend),
            format!("q={}", self.q),
            format!("n={}", self.n),
            format!("trials={}", self.trials),
            format!("executions={}", self.executions),
            format!("seed={}", self.seed),
            format!("incorrect_acceptances={}", self.incorrect_acceptances),
            format!("frequency={:.9}", self.frequency),
            format!("confidence={}", self.confidence),
            format!("ci_low={:.9}", self.ci_low),
            format!("ci_high={:.9}", self.ci_high),
            format!("bound={:e}", self.bound),
            format!("slack={:e}", self.slack),
            format!("expected={}", opt(self.expected)),
            format!("expected_low={}", opt(self.expected_low)),
            format!("expected_high={}", opt(self.expected_high)),
            format!("matches_expected={matches}"),
            format!("pass={}", self.pass),
        ]
        .join("\n")
            + "\n"
    }

    /// Parses the output of [`to_kv`](Self::to_kv). Derived keys are ignored.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut map = std::collections::HashMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("not a key=value line: `{line}`")))?;
            map.insert(k.trim(), v.trim());
        }
        let get = |k: &str| map.get(k).copied().ok_or_else(|| Error::InvalidArgument(format!("missing key `{k}`")));
        fn num<T: FromStr>(k: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::InvalidArgument(format!("bad value for `{k}`: `{v}`")))
        }
        let opt = |k: &str| -> Result<Option<f64>> {
            match get(k)? {
                "none" => Ok(None),
                v => num(k, v).map(Some),
            }
        };
        Ok(Self {
            strategy: get("strategy")?.parse()?,
            backend: get("backend")?.to_owned(),
            q: get("q")?.to_owned(),
            n: num("n", get("n")?)?,
            trials: num("trials", get("trials")?)?,
            executions: num("executions", get("executions")?)?,
            seed: num("seed", get("seed")?)?,
            incorrect_acceptances: num("incorrect_acceptances", get("incorrect_acceptances")?)?,
            frequency: num("frequency", get("frequency")?)?,
            confidence: num("confidence", get("confidence")?)?,
            ci_low: num("ci_low", get("ci_low")?)?,
            ci_high: num("ci_high", get("ci_high")?)?,
            bound: num("bound", get("bound")?)?,
            slack: num("slack", get("slack")?)?,
            expected: opt("expected")?,
            expected_low: opt("expected_low")?,
            expected_high: opt("expected_high")?,
            pass: num("pass", get("pass")?)?,
        })
    }
}

/// One fresh key and `executions` adaptive rounds. Returns whether any round
/// ended in an incorrect acceptance.
fn run_trial<G: PrimeGroup>(
    group: &G,
    n: usize,
    strategy: Strategy,
    executions: u64,
    rng: &mut ChaCha20Rng,
) -> Result<bool> {
    let bases = (0..n).map(|_| group.random_element(rng)).collect();
    let (key, state) = setup(group, bases, rng)?;
    let mut adversary = Adversary::new(group, strategy);
    for _ in 0..executions {
        let x: Vec<_> = (0..n).map(|_| group.sample_scalar(rng)).collect();
        let resp = adversary.respond(group, &state.bases, &state.merged, &x, rng)?;
        let accepted = client_verify(group, &key, &x, &resp)?.verdict.is_accept();
        if accepted && resp.a != msm_naive(group, &state.bases, &x)? {
            return Ok(true);
        }
        adversary.observe(accepted);
    }
    Ok(false)
}

/// Monte Carlo estimate of the incorrect-acceptance rate over `executions`
/// adaptive rounds, with a fresh key per trial. Trials run in parallel; trial
/// `i` draws from stream `i` of `seed`.
pub fn estimate_soundness_in<G: PrimeGroup>(
    group: &G,
    n: usize,
    strategy: Strategy,
    trials: u64,
    executions: u64,
    seed: u64,
) -> Result<SoundnessReport> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if trials == 0 || executions == 0 {
        return Err(Error::InvalidArgument("trials and executions must be positive".into()));
    }
    if let Strategy::PartialSum { k } = strategy {
        if k == 0 || k >= n {
            return Err(Error::InvalidArgument(format!("partial sum needs 1 <= k < n, got k={k}, n={n}")));
        }
    }
    if trials < 10_000 {
        log::warn!("{trials} trials is below the 10000 needed for meaningful statistical power");
    }

    let incorrect = (0..trials)
        .into_par_iter()
        .map(|i| run_trial(group, n, strategy, executions, &mut trial_rng(seed, i)).map(u64::from))
        .try_reduce(|| 0, |a, b| Ok(a + b))?;

    let q_str = group.order().to_string();
    let q: f64 = q_str.parse().expect("decimal order parses as f64");
    let frequency = incorrect as f64 / trials as f64;
    let (ci_low, ci_high) = stats::wilson_interval(incorrect, trials, CONFIDENCE);
    let bound = executions as f64 / q;
    let slack = 4.0 * (bound / trials as f64).sqrt();
    let expected = strategy.expected_rate(q, executions);
    let region = expected.map(|p| {
        let (lo, hi) = stats::binomial_region(p, trials, CONFIDENCE);
        (lo as f64 / trials as f64, hi as f64 / trials as f64)
    });

    Ok(SoundnessReport {
        strategy,
        backend: group.backend().name().to_owned(),
        q: q_str,
        n,
        trials,
        executions,
        seed,
        incorrect_acceptances: incorrect,
        frequency,
        confidence: CONFIDENCE,
        ci_low,
        ci_high,
        bound,
        slack,
        expected,
        expected_low: region.map(|r| r.0),
        expected_high: region.map(|r| r.1),
        pass: frequency <= bound + slack,
    })
}

/// [`estimate_soundness_in`] on the toy group `Z_q`.
pub fn estimate_soundness(
    q: u64,
    n: usize,
    strategy: Strategy,
    trials: u64,
    executions: u64,
    seed: u64,
) -> Result<SoundnessReport> {
    estimate_soundness_in(&ToyGroup::new(q)?, n, strategy, trials, executions, seed)
}

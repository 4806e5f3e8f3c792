//! Ranged Zipfian key distributions: exact PMF evaluation, seeded sampling,
//! and curve-overlap measurement.
//!
//! Keys are the integers `1..=range`. The forward PMF gives key `n` a
//! probability proportional to `alpha^-n`, so low keys are hot; the reversed
//! PMF mirrors the forward one so high keys are hot. Skew grows with
//! `alpha`: at `alpha = 1.01` the curve is nearly flat, while at
//! `alpha = 1.09` almost all mass sits on a handful of keys.
//!
//! Distributions are immutable once built and cheap to share across
//! threads. Sampling state lives entirely in the caller-provided RNG, so a
//! single [`KeySampler`] can serve any number of concurrent trials.

use rand::Rng;

use crate::error::{Error, Result};

/// Parameters of a ranged Zipfian distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZipfSpec {
    /// Number of keys; the support is `1..=range`.
    pub range: u32,
    /// Skewness; must be strictly greater than 1.
    pub alpha: f64,
    /// Mirror the distribution so the largest key is the most probable.
    pub reversed: bool,
}

impl ZipfSpec {
    /// Spec for a forward distribution (mass concentrated on low keys).
    pub fn forward(range: u32, alpha: f64) -> Self {
        Self { range, alpha, reversed: false }
    }

    /// Spec for a reversed distribution (mass concentrated on high keys).
    pub fn reversed(range: u32, alpha: f64) -> Self {
        Self { range, alpha, reversed: true }
    }

    /// Evaluate the PMF. See [`zipf_pmf`].
    pub fn pmf(&self) -> Result<ProbabilityVector> {
        zipf_pmf(self)
    }
}

/// A dense probability vector over the keys `1..=range`.
///
/// Entries are validated at construction: each lies in `[0, 1]` and the
/// total is 1 within [`ProbabilityVector::NORMALIZATION_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    probs: Vec<f64>,
}

impl ProbabilityVector {
    /// Largest allowed deviation of the entry sum from 1.
    pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

    /// Validate and wrap a vector of probabilities indexed by key `1..=len`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution(
                "probability vector must cover at least one key".into(),
            ));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidDistribution(format!(
                    "probability for key {} is {p}, outside [0, 1]",
                    i + 1
                )));
            }
        }
        let total = kahan_sum(probs.iter().copied());
        if (total - 1.0).abs() > Self::NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { probs })
    }

    /// Number of keys covered (the support is `1..=range`).
    pub fn range(&self) -> u32 {
        self.probs.len() as u32
    }

    /// Probability of `key` (1-based).
    ///
    /// # Panics
    /// Panics if `key` is 0 or greater than [`range`](Self::range); keys
    /// outside the support are a programming error, not a zero-probability
    /// event.
    pub fn prob(&self, key: u32) -> f64 {
        assert!(
            key >= 1 && key <= self.range(),
            "key {key} outside support 1..={}",
            self.range()
        );
        self.probs[(key - 1) as usize]
    }

    /// The probabilities for keys `1..=range`, in key order.
    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// Iterate over `(key, probability)` pairs in key order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, &p)| (i as u32 + 1, p))
    }
}

/// Evaluate the ranged Zipfian PMF for `spec`.
///
/// Forward form: `P(n) = alpha^-n / sum_{i=1..range} alpha^-i`. The reversed
/// form assigns key `n` the forward probability of key `range + 1 - n`; it
/// is computed by mirroring the forward vector, so the reversal identity
/// holds bit for bit.
///
/// Terms are accumulated smallest-first with compensated summation: for
/// `alpha` close to 1 and large ranges the weights are many and nearly
/// equal, where naive summation loses precision.
pub fn zipf_pmf(spec: &ZipfSpec) -> Result<ProbabilityVector> {
    if spec.range < 1 {
        return Err(Error::InvalidDistribution(
            "range must be at least 1".into(),
        ));
    }
    if !spec.alpha.is_finite() || spec.alpha <= 1.0 {
        return Err(Error::InvalidDistribution(format!(
            "alpha must be finite and greater than 1, got {}",
            spec.alpha
        )));
    }

    let range = spec.range as usize;
    let weights: Vec<f64> = (1..=range)
        .map(|n| spec.alpha.powi(-(n as i32)))
        .collect();
    // Forward weights decrease with the key, so summing the vector in
    // reverse feeds the compensated accumulator smallest-first.
    let total = kahan_sum(weights.iter().rev().copied());
    let mut probs: Vec<f64> = weights.into_iter().map(|w| w / total).collect();
    if spec.reversed {
        probs.reverse();
    }
    ProbabilityVector::new(probs)
}

/// Inverse-CDF sampler over an arbitrary discrete key distribution.
///
/// The cumulative table is built once; each draw costs one uniform variate
/// plus a binary search. Keys with zero probability are never returned,
/// including a zero-mass tail (the cumulative table is pinned to exactly 1
/// from the last positive-mass key onward, so rounding in the running sum
/// cannot leak draws past it).
#[derive(Debug, Clone)]
pub struct KeySampler {
    keys: Vec<u32>,
    cumulative: Vec<f64>,
}

impl KeySampler {
    /// Build a sampler for a dense PMF over keys `1..=range`.
    pub fn from_pmf(pmf: &ProbabilityVector) -> Self {
        let pairs: Vec<(u32, f64)> = pmf.iter().collect();
        Self::from_normalized_pairs(&pairs)
    }

    /// Build a sampler from explicit `(key, probability)` pairs.
    ///
    /// Pairs may be in any order; keys must be unique and the probabilities
    /// must form a distribution (each in `[0, 1]`, summing to 1 within
    /// [`ProbabilityVector::NORMALIZATION_TOLERANCE`]).
    pub fn from_pairs(pairs: &[(u32, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidDistribution(
                "sampler needs at least one key".into(),
            ));
        }
        let mut sorted = pairs.to_vec();
        sorted.sort_by_key(|&(k, _)| k);
        for w in sorted.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidDistribution(format!(
                    "duplicate key {}",
                    w[0].0
                )));
            }
        }
        for &(key, p) in &sorted {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidDistribution(format!(
                    "probability for key {key} is {p}, outside [0, 1]"
                )));
            }
        }
        let total = kahan_sum(sorted.iter().map(|&(_, p)| p));
        if (total - 1.0).abs() > ProbabilityVector::NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self::from_normalized_pairs(&sorted))
    }

    fn from_normalized_pairs(pairs: &[(u32, f64)]) -> Self {
        let keys: Vec<u32> = pairs.iter().map(|&(k, _)| k).collect();
        let mut cumulative = Vec::with_capacity(pairs.len());
        let mut running = 0.0f64;
        for &(_, p) in pairs {
            running += p;
            cumulative.push(running);
        }
        // Pin the table to 1.0 from the last key that carries mass, so a
        // uniform draw in [0, 1) can neither land on a zero-mass tail key
        // nor fall off the end when the running sum rounds below 1.
        let last_mass = pairs
            .iter()
            .rposition(|&(_, p)| p > 0.0)
            .expect("validated distribution has positive mass");
        for c in cumulative.iter_mut().skip(last_mass) {
            *c = 1.0;
        }
        Self { keys, cumulative }
    }

    /// Draw one key. Deterministic given the RNG state.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        let idx = self.cumulative.partition_point(|&c| c <= u);
        self.keys[idx.min(self.keys.len() - 1)]
    }
}

/// Area under the pointwise minimum of two PMF curves, by the composite
/// trapezoidal rule on the integer grid `x = 1..=range`:
///
/// `sum_{x=1..range-1} (min(p[x], q[x]) + min(p[x+1], q[x+1])) / 2`
///
/// This measures how much two key distributions overlap; identical curves
/// give the trapezoidal integral of the curve itself (close to 1), while a
/// sharply forward curve against its reversal gives nearly 0. A range of 1
/// has no interval to integrate over and yields 0.
pub fn overlap_area(p: &ProbabilityVector, q: &ProbabilityVector) -> Result<f64> {
    if p.range() != q.range() {
        return Err(Error::LengthMismatch {
            left: p.as_slice().len(),
            right: q.as_slice().len(),
        });
    }
    let mins: Vec<f64> = p
        .as_slice()
        .iter()
        .zip(q.as_slice())
        .map(|(&a, &b)| a.min(b))
        .collect();
    Ok(kahan_sum(
        mins.windows(2).map(|w| 0.5 * (w[0] + w[1])),
    ))
}

/// Compensated (Kahan) summation.
pub(crate) fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

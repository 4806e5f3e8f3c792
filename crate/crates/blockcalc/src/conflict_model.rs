//! Closed-form model of intra-block transaction conflicts.
//!
//! A block is an ordered list of transactions validated optimistically:
//! a later transaction fails when its key was already read or written by an
//! earlier one in a conflicting way (read-then-write, write-then-read, or
//! write-then-write; two reads never conflict). Treating every slot as an
//! independent draw from the same [`AccessPattern`], the probability that a
//! given ordered pair of slots conflicts decomposes into the three category
//! probabilities of [`FailureProbs`], and the k-th slot survives all `k - 1`
//! predecessors with probability `(1 - p_b_fail)^(k-1)`.
//!
//! Summing that geometric sequence over a block gives the expected number
//! of committed transactions per block, and dividing by the block size
//! gives the modeled success rate. The [`simulator`](crate::simulator)
//! module measures the same quantity by Monte Carlo; the pair probabilities
//! are exact, while the per-slot independence assumption is an
//! approximation the simulator quantifies.

use crate::distributions::{kahan_sum, KeySampler, ProbabilityVector, ZipfSpec};
use crate::error::{Error, Result};

/// A sparse probability distribution over integer keys.
///
/// Keys are opaque `u32` identifiers; any subset of them may carry mass, so
/// read and write sets that differ, partially overlap, or are disjoint are
/// all expressible. Entries are held sorted by key.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyDistribution {
    pairs: Vec<(u32, f64)>,
}

impl KeyDistribution {
    /// Build from explicit `(key, probability)` pairs (any order).
    ///
    /// Keys must be unique; probabilities must each lie in `[0, 1]` and sum
    /// to 1 within [`ProbabilityVector::NORMALIZATION_TOLERANCE`].
    pub fn from_pairs(pairs: Vec<(u32, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidDistribution(
                "key distribution needs at least one key".into(),
            ));
        }
        let mut pairs = pairs;
        pairs.sort_by_key(|&(k, _)| k);
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidDistribution(format!(
                    "duplicate key {}",
                    w[0].0
                )));
            }
        }
        for &(key, p) in &pairs {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidDistribution(format!(
                    "probability for key {key} is {p}, outside [0, 1]"
                )));
            }
        }
        let total = kahan_sum(pairs.iter().map(|&(_, p)| p));
        if (total - 1.0).abs() > ProbabilityVector::NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { pairs })
    }

    /// Densify a PMF over `1..=range` into a key distribution.
    pub fn from_pmf(pmf: &ProbabilityVector) -> Self {
        Self { pairs: pmf.iter().collect() }
    }

    /// Shorthand for [`Self::from_pmf`] over a freshly evaluated Zipf PMF.
    pub fn from_zipf(spec: &ZipfSpec) -> Result<Self> {
        Ok(Self::from_pmf(&spec.pmf()?))
    }

    /// Uniform distribution over the given keys.
    pub fn uniform(keys: impl IntoIterator<Item = u32>) -> Result<Self> {
        let keys: Vec<u32> = keys.into_iter().collect();
        if keys.is_empty() {
            return Err(Error::InvalidDistribution(
                "key distribution needs at least one key".into(),
            ));
        }
        let p = 1.0 / keys.len() as f64;
        Self::from_pairs(keys.into_iter().map(|k| (k, p)).collect())
    }

    /// Probability of `key`; 0 for keys outside the support.
    pub fn prob(&self, key: u32) -> f64 {
        match self.pairs.binary_search_by_key(&key, |&(k, _)| k) {
            Ok(idx) => self.pairs[idx].1,
            Err(_) => 0.0,
        }
    }

    /// Iterate over `(key, probability)` pairs in key order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.pairs.iter().copied()
    }

    /// Number of keys in the support (zero-probability entries included).
    pub fn num_keys(&self) -> usize {
        self.pairs.len()
    }

    /// Build an inverse-CDF sampler over this distribution.
    pub fn sampler(&self) -> KeySampler {
        KeySampler::from_pairs(&self.pairs)
            .expect("a validated key distribution always yields a sampler")
    }
}

/// The workload mix a client population draws transactions from: each
/// transaction is a read with probability `rp` (key from `read_keys`) or a
/// write with probability `1 - rp` (key from `write_keys`).
#[derive(Debug, Clone, PartialEq)]
pub struct AccessPattern {
    rp: f64,
    read_keys: KeyDistribution,
    write_keys: KeyDistribution,
}

impl AccessPattern {
    /// Build a pattern; `rp` must lie in `[0, 1]`.
    pub fn new(
        rp: f64,
        read_keys: KeyDistribution,
        write_keys: KeyDistribution,
    ) -> Result<Self> {
        if !rp.is_finite() || !(0.0..=1.0).contains(&rp) {
            return Err(Error::InvalidPattern(format!(
                "read probability must lie in [0, 1], got {rp}"
            )));
        }
        Ok(Self { rp, read_keys, write_keys })
    }

    /// Pure-write pattern (`rp = 0`); the read side mirrors `write_keys`
    /// so the pattern stays fully specified, but carries no mass.
    pub fn all_write(write_keys: KeyDistribution) -> Self {
        Self {
            rp: 0.0,
            read_keys: write_keys.clone(),
            write_keys,
        }
    }

    /// Probability that a transaction is a read (RP).
    pub fn rp(&self) -> f64 {
        self.rp
    }

    /// Probability that a transaction is a write (WP = 1 − RP).
    pub fn wp(&self) -> f64 {
        1.0 - self.rp
    }

    /// Key distribution of read transactions.
    pub fn read_keys(&self) -> &KeyDistribution {
        &self.read_keys
    }

    /// Key distribution of write transactions.
    pub fn write_keys(&self) -> &KeyDistribution {
        &self.write_keys
    }
}

/// Probabilities that an ordered pair of transactions drawn from one
/// [`AccessPattern`] conflicts, broken down by category, plus their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FailureProbs {
    /// Earlier read, later write to the same key.
    pub p_rw: f64,
    /// Earlier write, later read of the same key.
    pub p_wr: f64,
    /// Two writes to the same key.
    pub p_ww: f64,
    /// Any of the above: probability that the later transaction fails
    /// against one given predecessor.
    pub p_b_fail: f64,
}

impl FailureProbs {
    /// Assemble from the three category probabilities; `p_b_fail` is their
    /// sum. Each part must lie in `[0, 1]` and the sum must not exceed 1.
    pub fn from_parts(p_rw: f64, p_wr: f64, p_ww: f64) -> Result<Self> {
        for (name, p) in [("p_rw", p_rw), ("p_wr", p_wr), ("p_ww", p_ww)] {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::Domain(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        let p_b_fail = p_rw + p_wr + p_ww;
        if p_b_fail > 1.0 + 1e-12 {
            return Err(Error::Domain(format!(
                "category probabilities sum to {p_b_fail}, above 1"
            )));
        }
        Ok(Self { p_rw, p_wr, p_ww, p_b_fail: p_b_fail.min(1.0) })
    }
}

/// Pairwise conflict probabilities for one ordered pair of transactions
/// drawn independently from `pattern`:
///
/// - `p_rw = RP · WP · Σ_{i ∈ WK} P_RK(i) · P_WK(i)`
/// - `p_wr = WP · RP · Σ_{i ∈ RK} P_WK(i) · P_RK(i)`
/// - `p_ww = WP² · Σ_{i ∈ WK} P_WK(i)²`
///
/// Keys present in one support but absent from the other contribute zero.
pub fn pairwise_failure_probs(pattern: &AccessPattern) -> FailureProbs {
    let rp = pattern.rp();
    let wp = pattern.wp();
    let reads = pattern.read_keys();
    let writes = pattern.write_keys();

    let rw_cross = kahan_sum(writes.iter().map(|(k, p)| reads.prob(k) * p));
    let wr_cross = kahan_sum(reads.iter().map(|(k, p)| writes.prob(k) * p));
    let ww_self = kahan_sum(writes.iter().map(|(_, p)| p * p));

    let p_rw = rp * wp * rw_cross;
    let p_wr = wp * rp * wr_cross;
    let p_ww = wp * wp * ww_self;
    FailureProbs { p_rw, p_wr, p_ww, p_b_fail: p_rw + p_wr + p_ww }
}

/// Probability that two keys drawn independently from `dist` coincide,
/// `Σ_i P(i)²`.
///
/// This is the conflict factor of the write-write category with the
/// operation mix stripped off: it equals `p_ww` for a pure-write pattern
/// over `dist`, and `p_ww / WP²` in general.
pub fn key_collision_prob(dist: &KeyDistribution) -> f64 {
    kahan_sum(dist.iter().map(|(_, p)| p * p))
}

/// Probability that the transaction in slot `k` (1-based) of a block
/// commits: it must avoid conflict with each of its `k - 1` predecessors,
/// `(1 - p_b_fail)^(k-1)`.
pub fn kth_txn_success_prob(fp: &FailureProbs, k: u32) -> Result<f64> {
    if k < 1 {
        return Err(Error::Domain(
            "slot index k is 1-based and must be at least 1".into(),
        ));
    }
    Ok((1.0 - fp.p_b_fail).powi(k as i32 - 1))
}

/// Expected number of committed transactions in a block of `bs` slots,
/// `Σ_{k=1..bs} (1 - p_b_fail)^(k-1)`.
///
/// The literal geometric sum is evaluated (with compensated accumulation)
/// instead of the equivalent closed form `(1 - (1-p)^bs) / p`: the sum is
/// exact in every degenerate case — a single slot always yields 1, a
/// conflict-free block yields `bs` — while the closed form cancels
/// catastrophically when `p·bs` is tiny.
pub fn expected_block_successes(fp: &FailureProbs, bs: u32) -> f64 {
    let survive = 1.0 - fp.p_b_fail;
    let terms = (0..bs).scan(1.0, |power, _| {
        let term = *power;
        *power *= survive;
        Some(term)
    });
    crate::distributions::kahan_sum(terms)
}

/// Modeled success rate of a block: expected committed transactions over
/// block size. `bs` must be at least 1.
pub fn model_success_rate(pattern: &AccessPattern, bs: u32) -> f64 {
    assert!(bs >= 1, "block size must be at least 1");
    expected_block_successes(&pairwise_failure_probs(pattern), bs) / bs as f64
}

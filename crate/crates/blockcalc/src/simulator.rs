//! Monte Carlo block-validation simulator.
//!
//! A population of closed-loop clients each keeps exactly one transaction
//! in flight. Blocks are assembled by drawing `block_size` distinct
//! clients uniformly at random, validating their pending transactions in
//! block order under the optimistic conflict rules (a later transaction
//! fails if any earlier slot read-then-wrote, wrote-then-read, or
//! wrote-then-wrote its key — regardless of whether that earlier slot
//! itself failed), and reporting each verdict back to its client. What a
//! client submits next is governed by its [`ClientBehavior`]:
//!
//! - [`AllWrite`](BehaviorKind::AllWrite): a fresh write every time;
//!   verdicts never alter the stream.
//! - [`ReadThenWriteRetry`](BehaviorKind::ReadThenWriteRetry): read a key,
//!   then write the same key, then move to a fresh key — resubmitting the
//!   same transaction (with an incremented attempt counter) after every
//!   failure.
//! - [`IndependentReadWrite`](BehaviorKind::IndependentReadWrite): every
//!   submission is an independent draw of operation and key; failures are
//!   not retried.
//!
//! A trial runs until at least `total_operations` slots have been
//! validated and reports the success rate over every validated slot,
//! resubmissions included. Experiments repeat trials with seeds derived
//! from a master seed by [`trial_seed`] and aggregate nearest-rank
//! percentiles; trials run in parallel but results are byte-stable, since
//! each trial owns an RNG seeded only by the master seed and its index.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::conflict_model::{AccessPattern, KeyDistribution};
use crate::distributions::KeySampler;
use crate::error::{Error, Result};

/// The operation a transaction performs on its key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Read,
    Write,
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Op::Read => "R",
            Op::Write => "W",
        })
    }
}

/// One user-submitted read or write request to a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transaction {
    pub client_id: u32,
    pub op: Op,
    pub key: u32,
    /// Resubmission counter, starting at 1 for a fresh transaction.
    pub attempt: u32,
}

/// Outcome of validating one block slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Success,
    /// An earlier slot read the key this write targets.
    RwFail,
    /// An earlier slot wrote the key this read targets.
    WrFail,
    /// An earlier slot wrote the key this write targets.
    WwFail,
}

impl Verdict {
    pub fn is_success(self) -> bool {
        self == Verdict::Success
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Success => "Success",
            Verdict::RwFail => "RWFail",
            Verdict::WrFail => "WRFail",
            Verdict::WwFail => "WWFail",
        })
    }
}

/// How a client reacts to verdicts when choosing its next transaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BehaviorKind {
    AllWrite,
    ReadThenWriteRetry,
    IndependentReadWrite,
}

/// A behavior kind plus the access pattern its draws come from.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientBehavior {
    kind: BehaviorKind,
    pattern: AccessPattern,
}

impl ClientBehavior {
    /// Validate the kind/pattern combination:
    /// [`AllWrite`](BehaviorKind::AllWrite) requires `rp == 0`, and
    /// [`ReadThenWriteRetry`](BehaviorKind::ReadThenWriteRetry) requires
    /// identical read and write key distributions (the client revisits its
    /// read key with a write).
    pub fn new(kind: BehaviorKind, pattern: AccessPattern) -> Result<Self> {
        match kind {
            BehaviorKind::AllWrite if pattern.rp() != 0.0 => {
                Err(Error::InvalidPattern(format!(
                    "an all-write behavior cannot read (rp = {})",
                    pattern.rp()
                )))
            }
            BehaviorKind::ReadThenWriteRetry
                if pattern.read_keys() != pattern.write_keys() =>
            {
                Err(Error::InvalidPattern(
                    "read-then-write clients need matching read and write key \
                     distributions"
                        .into(),
                ))
            }
            _ => Ok(Self { kind, pattern }),
        }
    }

    /// All-write behavior over `write_keys`.
    pub fn all_write(write_keys: KeyDistribution) -> Self {
        Self {
            kind: BehaviorKind::AllWrite,
            pattern: AccessPattern::all_write(write_keys),
        }
    }

    /// Read-then-write behavior over a single key distribution. The
    /// pattern's read probability is fixed at 0.5, matching the even
    /// read/write mix the alternating protocol produces.
    pub fn read_then_write_retry(keys: KeyDistribution) -> Self {
        let pattern = AccessPattern::new(0.5, keys.clone(), keys)
            .expect("0.5 is a valid read probability");
        Self { kind: BehaviorKind::ReadThenWriteRetry, pattern }
    }

    /// Independent draws: read with probability `rp` from `read_keys`,
    /// otherwise write from `write_keys`.
    pub fn independent(
        rp: f64,
        read_keys: KeyDistribution,
        write_keys: KeyDistribution,
    ) -> Result<Self> {
        Ok(Self {
            kind: BehaviorKind::IndependentReadWrite,
            pattern: AccessPattern::new(rp, read_keys, write_keys)?,
        })
    }

    pub fn kind(&self) -> BehaviorKind {
        self.kind
    }

    pub fn pattern(&self) -> &AccessPattern {
        &self.pattern
    }
}

/// Full configuration of one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub behavior: ClientBehavior,
    /// Transactions per block.
    pub block_size: u32,
    /// Client population; must be at least `block_size` so a block never
    /// holds two transactions from one client.
    pub num_clients: u32,
    /// A trial stops once at least this many slots have been validated.
    pub total_operations: u64,
    /// Master seed; trials within an experiment derive their own seeds
    /// from it via [`trial_seed`].
    pub seed: u64,
}

impl SimConfig {
    /// Config with the default population (`max(block_size, 16)` clients),
    /// 1000 operations, and seed 0.
    pub fn new(behavior: ClientBehavior, block_size: u32) -> Self {
        Self {
            behavior,
            block_size,
            num_clients: block_size.max(16),
            total_operations: 1000,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.block_size < 1 {
            return Err(Error::InvalidConfig("block size must be at least 1".into()));
        }
        if self.num_clients < self.block_size {
            return Err(Error::InvalidConfig(format!(
                "{} clients cannot fill a block of {} distinct clients",
                self.num_clients, self.block_size
            )));
        }
        if self.total_operations < self.block_size as u64 {
            return Err(Error::InvalidConfig(format!(
                "total operations ({}) below one block ({})",
                self.total_operations, self.block_size
            )));
        }
        Ok(())
    }
}

/// The transactions of one validated block with their verdicts, in slot
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTrace {
    pub txns: Vec<Transaction>,
    pub verdicts: Vec<Verdict>,
}

/// Outcome of a single trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSummary {
    pub successes: u64,
    /// Every validated slot, resubmissions included.
    pub validated: u64,
    /// `successes / validated`.
    pub rate: f64,
}

/// Nearest-rank percentiles of per-trial success rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PercentileSummary {
    pub p1: f64,
    pub p50: f64,
    pub p99: f64,
    pub trials: u32,
}

/// Validate one block: slot `j` fails when any earlier slot `i` touched
/// the same key in a conflicting way (read→write, write→read, or
/// write→write; read→read never conflicts). Conflicts count against every
/// earlier slot whether or not that slot itself failed, and the verdict
/// names the category of the earliest conflicting predecessor.
///
/// Runs in O(block size) using first-reader/first-writer indices per key.
///
/// # Panics
/// Panics on an empty transaction list.
pub fn validate_block(txns: Vec<Transaction>) -> BlockTrace {
    assert!(!txns.is_empty(), "a block holds at least one transaction");
    let mut first_read: HashMap<u32, usize> = HashMap::with_capacity(txns.len());
    let mut first_write: HashMap<u32, usize> = HashMap::with_capacity(txns.len());
    let mut verdicts = Vec::with_capacity(txns.len());

    for (j, txn) in txns.iter().enumerate() {
        let verdict = match txn.op {
            Op::Read => {
                if first_write.contains_key(&txn.key) {
                    Verdict::WrFail
                } else {
                    Verdict::Success
                }
            }
            Op::Write => {
                match (
                    first_read.get(&txn.key).copied(),
                    first_write.get(&txn.key).copied(),
                ) {
                    (None, None) => Verdict::Success,
                    (Some(_), None) => Verdict::RwFail,
                    (None, Some(_)) => Verdict::WwFail,
                    // A slot is one op, so the indices can never be equal.
                    (Some(r), Some(w)) => {
                        if r < w {
                            Verdict::RwFail
                        } else {
                            Verdict::WwFail
                        }
                    }
                }
            }
        };
        verdicts.push(verdict);
        match txn.op {
            Op::Read => {
                first_read.entry(txn.key).or_insert(j);
            }
            Op::Write => {
                first_write.entry(txn.key).or_insert(j);
            }
        }
    }
    BlockTrace { txns, verdicts }
}

/// Derive the seed of trial `trial_index` from an experiment's master
/// seed: the `trial_index + 1`-th output of a SplitMix64 stream seeded at
/// `master`.
///
/// The finalizer is bijective and the stream increment is odd, so trials
/// of one experiment always receive distinct seeds, and different master
/// seeds produce entirely disjoint seed sets unless they sit an exact
/// small multiple of the increment apart — combining master and index by
/// XOR instead would hand adjacent masters permutations of the same seed
/// set, which order-insensitive summaries then cannot tell apart.
pub fn trial_seed(master: u64, trial_index: u64) -> u64 {
    let mut z = master.wrapping_add(
        trial_index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
    );
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Nearest-rank percentile of an ascending-sorted, non-empty slice:
/// the `ceil(pct/100 · n)`-th smallest value.
///
/// # Panics
/// Panics if the slice is empty or `pct` is outside `(0, 100]`.
pub fn percentile(sorted: &[f64], pct: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    assert!(pct > 0.0 && pct <= 100.0, "percentile {pct} outside (0, 100]");
    let rank = (pct / 100.0 * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

struct Samplers {
    read: KeySampler,
    write: KeySampler,
}

impl Samplers {
    fn build(pattern: &AccessPattern) -> Self {
        Self {
            read: pattern.read_keys().sampler(),
            write: pattern.write_keys().sampler(),
        }
    }
}

fn initial_txn(
    behavior: &ClientBehavior,
    samplers: &Samplers,
    client_id: u32,
    rng: &mut ChaCha8Rng,
) -> Transaction {
    match behavior.kind() {
        BehaviorKind::AllWrite => Transaction {
            client_id,
            op: Op::Write,
            key: samplers.write.sample(rng),
            attempt: 1,
        },
        BehaviorKind::ReadThenWriteRetry => Transaction {
            client_id,
            op: Op::Read,
            key: samplers.read.sample(rng),
            attempt: 1,
        },
        BehaviorKind::IndependentReadWrite => independent_draw(
            behavior.pattern().rp(),
            samplers,
            client_id,
            rng,
        ),
    }
}

fn independent_draw(
    rp: f64,
    samplers: &Samplers,
    client_id: u32,
    rng: &mut ChaCha8Rng,
) -> Transaction {
    // random() is uniform on [0, 1), so rp = 0 never reads and rp = 1
    // always does.
    if rng.random::<f64>() < rp {
        Transaction { client_id, op: Op::Read, key: samplers.read.sample(rng), attempt: 1 }
    } else {
        Transaction { client_id, op: Op::Write, key: samplers.write.sample(rng), attempt: 1 }
    }
}

fn next_txn(
    behavior: &ClientBehavior,
    samplers: &Samplers,
    done: Transaction,
    verdict: Verdict,
    rng: &mut ChaCha8Rng,
) -> Transaction {
    let client_id = done.client_id;
    match behavior.kind() {
        BehaviorKind::AllWrite => Transaction {
            client_id,
            op: Op::Write,
            key: samplers.write.sample(rng),
            attempt: 1,
        },
        BehaviorKind::ReadThenWriteRetry => {
            if verdict.is_success() {
                match done.op {
                    // The read committed; write the same key back.
                    Op::Read => Transaction {
                        client_id,
                        op: Op::Write,
                        key: done.key,
                        attempt: 1,
                    },
                    // The write committed; move on to a fresh key.
                    Op::Write => Transaction {
                        client_id,
                        op: Op::Read,
                        key: samplers.read.sample(rng),
                        attempt: 1,
                    },
                }
            } else {
                Transaction { attempt: done.attempt + 1, ..done }
            }
        }
        BehaviorKind::IndependentReadWrite => {
            independent_draw(behavior.pattern().rp(), samplers, client_id, rng)
        }
    }
}

fn run_trial_impl(
    config: &SimConfig,
    seed: u64,
    samplers: &Samplers,
    collect_traces: bool,
) -> (TrialSummary, Vec<BlockTrace>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let behavior = &config.behavior;
    let n = config.num_clients as usize;
    let bs = config.block_size as usize;

    let mut pending: Vec<Transaction> = (0..config.num_clients)
        .map(|c| initial_txn(behavior, samplers, c, &mut rng))
        .collect();
    // Per-block client selection is a partial Fisher–Yates shuffle of this
    // index vector; carrying the permutation across blocks keeps every
    // draw uniform without a fresh allocation.
    let mut order: Vec<u32> = (0..config.num_clients).collect();

    let mut successes = 0u64;
    let mut validated = 0u64;
    let mut traces = Vec::new();

    while validated < config.total_operations {
        for s in 0..bs {
            let j = rng.random_range(s..n);
            order.swap(s, j);
        }
        let block: Vec<Transaction> = order[..bs]
            .iter()
            .map(|&c| pending[c as usize])
            .collect();
        let trace = validate_block(block);
        for (txn, &verdict) in trace.txns.iter().zip(&trace.verdicts) {
            if verdict.is_success() {
                successes += 1;
            }
            validated += 1;
            pending[txn.client_id as usize] =
                next_txn(behavior, samplers, *txn, verdict, &mut rng);
        }
        if collect_traces {
            traces.push(trace);
        }
    }

    let summary = TrialSummary {
        successes,
        validated,
        rate: successes as f64 / validated as f64,
    };
    (summary, traces)
}

/// Run one trial with `config.seed`. Deterministic: identical configs
/// produce bit-identical summaries.
pub fn run_trial(config: &SimConfig) -> Result<TrialSummary> {
    config.validate()?;
    let samplers = Samplers::build(config.behavior.pattern());
    Ok(run_trial_impl(config, config.seed, &samplers, false).0)
}

/// Run one trial and keep every block's transactions and verdicts, for
/// debugging or export via [`write_trace_csv`].
pub fn run_trial_traced(config: &SimConfig) -> Result<(TrialSummary, Vec<BlockTrace>)> {
    config.validate()?;
    let samplers = Samplers::build(config.behavior.pattern());
    Ok(run_trial_impl(config, config.seed, &samplers, true))
}

/// Run `trials` independent trials (in parallel) with seeds
/// `trial_seed(config.seed, 0..trials)` and report nearest-rank
/// percentiles of the per-trial success rates. With 50 trials, p1 and p99
/// degenerate to the minimum and maximum.
pub fn run_experiment(config: &SimConfig, trials: u32) -> Result<PercentileSummary> {
    config.validate()?;
    if trials < 1 {
        return Err(Error::InvalidConfig("an experiment needs at least one trial".into()));
    }
    let samplers = Samplers::build(config.behavior.pattern());
    let mut rates: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            run_trial_impl(config, trial_seed(config.seed, i as u64), &samplers, false)
                .0
                .rate
        })
        .collect();
    rates.sort_by(f64::total_cmp);
    Ok(PercentileSummary {
        p1: percentile(&rates, 1.0),
        p50: percentile(&rates, 50.0),
        p99: percentile(&rates, 99.0),
        trials,
    })
}

/// Write traces as comma-delimited text with header
/// `block_index,slot,client,op,key,verdict`; block indices and slots are
/// 1-based.
pub fn write_trace_csv<W: Write>(traces: &[BlockTrace], mut out: W) -> std::io::Result<()> {
    writeln!(out, "block_index,slot,client,op,key,verdict")?;
    for (b, trace) in traces.iter().enumerate() {
        for (s, (txn, verdict)) in trace.txns.iter().zip(&trace.verdicts).enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                b + 1,
                s + 1,
                txn.client_id,
                txn.op,
                txn.key,
                verdict
            )?;
        }
    }
    Ok(())
}

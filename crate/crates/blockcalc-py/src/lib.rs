//! Python bindings for the blockcalc library: key distributions, access
//! patterns, the conflict and latency models, and the Monte Carlo
//! experiment runner. Built as an abi3 extension module named
//! `blockcalc_py`; see `python/smoke_test.py` at the workspace root for a
//! usage tour.

use blockcalc::conflict_model as cm;
use blockcalc::distributions as dist;
use blockcalc::latency_model as lm;
use blockcalc::simulator as sim;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn to_py(err: blockcalc::Error) -> PyErr {
    match err {
        blockcalc::Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn check_block_size(bs: u32) -> PyResult<()> {
    if bs < 1 {
        return Err(PyValueError::new_err("block size must be at least 1"));
    }
    Ok(())
}

/// Discrete probability distribution over integer keys.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct KeyDistribution {
    inner: cm::KeyDistribution,
}

#[pymethods]
impl KeyDistribution {
    /// Ranged Zipfian over keys 1..=range with skew `alpha` (> 1); the
    /// reversed form mirrors the probabilities so key `range` is hottest.
    #[staticmethod]
    #[pyo3(signature = (range, alpha, reversed = false))]
    fn zipf(range: u32, alpha: f64, reversed: bool) -> PyResult<Self> {
        let spec = if reversed {
            dist::ZipfSpec::reversed(range, alpha)
        } else {
            dist::ZipfSpec::forward(range, alpha)
        };
        Ok(Self { inner: cm::KeyDistribution::from_zipf(&spec).map_err(to_py)? })
    }

    /// Uniform distribution over keys 1..=range.
    #[staticmethod]
    fn uniform(range: u32) -> PyResult<Self> {
        Ok(Self { inner: cm::KeyDistribution::uniform(1..=range).map_err(to_py)? })
    }

    /// Distribution over keys 1..=len(pmf) with the given probabilities.
    #[staticmethod]
    fn from_pmf(pmf: Vec<f64>) -> PyResult<Self> {
        let vector = dist::ProbabilityVector::new(pmf).map_err(to_py)?;
        Ok(Self { inner: cm::KeyDistribution::from_pmf(&vector) })
    }

    /// All (key, probability) pairs in key order.
    fn pmf(&self) -> Vec<(u32, f64)> {
        self.inner.iter().collect()
    }

    /// Probability of one key (0.0 for keys outside the distribution).
    fn prob(&self, key: u32) -> f64 {
        self.inner.prob(key)
    }

    /// Probability that two independent draws pick the same key.
    fn collision_prob(&self) -> f64 {
        cm::key_collision_prob(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.num_keys()
    }

    fn __repr__(&self) -> String {
        format!("KeyDistribution({} keys)", self.inner.num_keys())
    }
}

/// Pairwise intra-block failure probabilities for one access pattern.
#[pyclass(frozen)]
struct FailureProbs {
    /// Read-then-written conflict probability.
    #[pyo3(get)]
    p_rw: f64,
    /// Written-then-read conflict probability.
    #[pyo3(get)]
    p_wr: f64,
    /// Written-then-written conflict probability.
    #[pyo3(get)]
    p_ww: f64,
    /// Probability that an ordered transaction pair conflicts at all.
    #[pyo3(get)]
    p_b_fail: f64,
}

#[pymethods]
impl FailureProbs {
    fn __repr__(&self) -> String {
        format!(
            "FailureProbs(p_rw={}, p_wr={}, p_ww={}, p_b_fail={})",
            self.p_rw, self.p_wr, self.p_ww, self.p_b_fail
        )
    }
}

/// A client population's access pattern: read probability plus read- and
/// write-key distributions.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct AccessPattern {
    inner: cm::AccessPattern,
}

#[pymethods]
impl AccessPattern {
    #[new]
    fn new(
        rp: f64,
        read_keys: KeyDistribution,
        write_keys: KeyDistribution,
    ) -> PyResult<Self> {
        Ok(Self {
            inner: cm::AccessPattern::new(rp, read_keys.inner, write_keys.inner)
                .map_err(to_py)?,
        })
    }

    /// Pattern that always writes, drawing keys from `write_keys`.
    #[staticmethod]
    fn all_write(write_keys: KeyDistribution) -> Self {
        Self { inner: cm::AccessPattern::all_write(write_keys.inner) }
    }

    /// Probability that a transaction is a read.
    #[getter]
    fn rp(&self) -> f64 {
        self.inner.rp()
    }

    /// Probability that a transaction is a write.
    #[getter]
    fn wp(&self) -> f64 {
        self.inner.wp()
    }

    /// Pairwise failure probabilities for this pattern.
    fn failure_probs(&self) -> FailureProbs {
        let fp = cm::pairwise_failure_probs(&self.inner);
        FailureProbs {
            p_rw: fp.p_rw,
            p_wr: fp.p_wr,
            p_ww: fp.p_ww,
            p_b_fail: fp.p_b_fail,
        }
    }

    /// Expected number of committing slots in a block of `bs` transactions.
    fn expected_block_successes(&self, bs: u32) -> PyResult<f64> {
        check_block_size(bs)?;
        Ok(cm::expected_block_successes(
            &cm::pairwise_failure_probs(&self.inner),
            bs,
        ))
    }

    /// Modeled success rate (expected committing fraction) for blocks of
    /// `bs` transactions.
    fn success_rate(&self, bs: u32) -> PyResult<f64> {
        check_block_size(bs)?;
        Ok(cm::model_success_rate(&self.inner, bs))
    }

    fn __repr__(&self) -> String {
        format!("AccessPattern(rp={})", self.inner.rp())
    }
}

/// Ranged Zipfian probability mass function over keys 1..=range as a list.
#[pyfunction]
#[pyo3(signature = (range, alpha, reversed = false))]
fn zipf_pmf(range: u32, alpha: f64, reversed: bool) -> PyResult<Vec<f64>> {
    let spec = if reversed {
        dist::ZipfSpec::reversed(range, alpha)
    } else {
        dist::ZipfSpec::forward(range, alpha)
    };
    Ok(dist::zipf_pmf(&spec).map_err(to_py)?.as_slice().to_vec())
}

/// Overlap area between two probability mass functions over the same key
/// range, by composite trapezoidal integration of their pointwise minimum.
#[pyfunction]
fn overlap_area(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    let p = dist::ProbabilityVector::new(p).map_err(to_py)?;
    let q = dist::ProbabilityVector::new(q).map_err(to_py)?;
    dist::overlap_area(&p, &q).map_err(to_py)
}

fn env_for_rate(arrival_rate: f64) -> PyResult<lm::EnvironmentParams> {
    lm::EnvironmentParams::new(arrival_rate, 1.0, 1.0, 1.0, 1.0).map_err(to_py)
}

/// Expected wait for a block to be cut: min(bto, bs / arrival_rate) / 2.
#[pyfunction]
fn wait_time(bs: u32, bto: f64, arrival_rate: f64) -> PyResult<f64> {
    if !arrival_rate.is_finite() || arrival_rate <= 0.0 {
        return Err(PyValueError::new_err("arrival rate must be positive"));
    }
    let design = lm::BlockDesign::new(bs, bto).map_err(to_py)?;
    Ok(lm::wait_time(&design, arrival_rate))
}

/// Expected average transaction latency in seconds, from fitted
/// coefficients: wait_time + c0 * bs + c1.
#[pyfunction]
fn expected_latency(bs: u32, bto: f64, arrival_rate: f64, c0: f64, c1: f64) -> PyResult<f64> {
    let design = lm::BlockDesign::new(bs, bto).map_err(to_py)?;
    let env = env_for_rate(arrival_rate)?;
    Ok(lm::expected_latency(&env, &design, &lm::FittedLatencyModel::new(c0, c1)))
}

/// Least-squares fit of the latency coefficients to measurements given
/// as (bs, bto_seconds, arrival_rate, measured_latency_seconds) tuples;
/// returns (c0, c1, rmse_seconds).
#[pyfunction]
fn fit_latency(samples: Vec<(u32, f64, f64, f64)>) -> PyResult<(f64, f64, f64)> {
    let samples: Vec<lm::LatencyMeasurement> = samples
        .into_iter()
        .map(|(batch_size, batch_timeout, arrival_rate, latency)| lm::LatencyMeasurement {
            batch_size,
            batch_timeout,
            arrival_rate,
            latency,
        })
        .collect();
    let fitted = lm::fit_linear_coeffs(&samples).map_err(to_py)?;
    Ok((fitted.c0, fitted.c1, fitted.fit_residual))
}

/// Whether transactions arrive faster than peers can process blocks
/// (arrival_rate > bs * bp_rate), the regime where the latency model
/// under-predicts.
#[pyfunction]
fn saturated(bs: u32, arrival_rate: f64, bp_rate: f64) -> PyResult<bool> {
    if !bp_rate.is_finite() || bp_rate <= 0.0 {
        return Err(PyValueError::new_err("block-processing rate must be positive"));
    }
    let design = lm::BlockDesign::new(bs, 1.0).map_err(to_py)?;
    let env = env_for_rate(arrival_rate)?;
    Ok(lm::saturation_check(&env, &design, bp_rate).saturated)
}

/// What each simulated client does with its transaction verdicts.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct ClientBehavior {
    inner: sim::ClientBehavior,
}

#[pymethods]
impl ClientBehavior {
    /// Every transaction writes a fresh key draw.
    #[staticmethod]
    fn all_write(keys: KeyDistribution) -> Self {
        Self { inner: sim::ClientBehavior::all_write(keys.inner) }
    }

    /// Clients read a key then write it, resubmitting the write verbatim
    /// until it commits.
    #[staticmethod]
    fn read_then_write_retry(keys: KeyDistribution) -> Self {
        Self { inner: sim::ClientBehavior::read_then_write_retry(keys.inner) }
    }

    /// Each transaction independently reads (probability `rp`) from
    /// `read_keys` or writes from `write_keys`; no retries.
    #[staticmethod]
    fn independent(
        rp: f64,
        read_keys: KeyDistribution,
        write_keys: KeyDistribution,
    ) -> PyResult<Self> {
        Ok(Self {
            inner: sim::ClientBehavior::independent(rp, read_keys.inner, write_keys.inner)
                .map_err(to_py)?,
        })
    }

    /// The access pattern this behavior induces on fresh submissions.
    #[getter]
    fn pattern(&self) -> AccessPattern {
        AccessPattern { inner: self.inner.pattern().clone() }
    }
}

/// Success-rate percentiles across the trials of one experiment.
#[pyclass(frozen)]
struct PercentileBand {
    /// 1st-percentile trial success rate.
    #[pyo3(get)]
    p1: f64,
    /// Median trial success rate.
    #[pyo3(get)]
    p50: f64,
    /// 99th-percentile trial success rate.
    #[pyo3(get)]
    p99: f64,
    /// Number of trials summarized.
    #[pyo3(get)]
    trials: u32,
}

#[pymethods]
impl PercentileBand {
    fn __repr__(&self) -> String {
        format!(
            "PercentileBand(p1={}, p50={}, p99={}, trials={})",
            self.p1, self.p50, self.p99, self.trials
        )
    }
}

/// Run `trials` independent simulation trials and summarize the per-trial
/// success rates. Deterministic in `seed`; trials run in parallel.
#[pyfunction]
#[pyo3(signature = (behavior, block_size, trials = 50, total_operations = 1000, seed = 0, num_clients = None))]
fn run_experiment(
    behavior: ClientBehavior,
    block_size: u32,
    trials: u32,
    total_operations: u64,
    seed: u64,
    num_clients: Option<u32>,
) -> PyResult<PercentileBand> {
    check_block_size(block_size)?;
    let mut config = sim::SimConfig::new(behavior.inner, block_size);
    config.total_operations = total_operations;
    config.seed = seed;
    if let Some(clients) = num_clients {
        config.num_clients = clients;
    }
    let band = sim::run_experiment(&config, trials).map_err(to_py)?;
    Ok(PercentileBand {
        p1: band.p1,
        p50: band.p50,
        p99: band.p99,
        trials: band.trials,
    })
}

/// Block-creation design calculator: analytical conflict and latency
/// models plus a seeded transaction-conflict simulator.
#[pymodule]
fn blockcalc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<KeyDistribution>()?;
    m.add_class::<AccessPattern>()?;
    m.add_class::<FailureProbs>()?;
    m.add_class::<ClientBehavior>()?;
    m.add_class::<PercentileBand>()?;
    m.add_function(wrap_pyfunction!(zipf_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(overlap_area, m)?)?;
    m.add_function(wrap_pyfunction!(wait_time, m)?)?;
    m.add_function(wrap_pyfunction!(expected_latency, m)?)?;
    m.add_function(wrap_pyfunction!(fit_latency, m)?)?;
    m.add_function(wrap_pyfunction!(saturated, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}

//! Discrete-event simulation of a token-bucket-regulated server pool.
//!
//! Batches arrive, pass through the regulator, and each admitted request
//! holds one server for an independent service time. With infinite servers
//! nothing is lost; with `K` servers a request arriving to a full pool is
//! blocked and counted.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, LogMgf};
use crate::curves::{BurstinessCurve, TokenBucketState};
use crate::error::{param, Error, Result};
use crate::service_time::ServiceTimeModel;

/// Number of equal-length batches used for batch-means standard errors.
pub const BATCHES: usize = 20;

/// Departures within this relative distance of an arrival count as
/// simultaneous with it and are processed first.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Arrival {
    DeterministicBatch { period: f64, batch: u64 },
    PoissonBatch { rate: f64, batch: u64 },
    Trace { events: Vec<(f64, u64)> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ServersRepr", into = "ServersRepr")]
pub enum Servers {
    Infinite,
    Finite(u64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ServersRepr {
    Count(u64),
    Word(String),
}

impl TryFrom<ServersRepr> for Servers {
    type Error = Error;
    fn try_from(r: ServersRepr) -> Result<Self> {
        match r {
            ServersRepr::Count(k) => Ok(Servers::Finite(k)),
            ServersRepr::Word(w) if w == "infinite" => Ok(Servers::Infinite),
            ServersRepr::Word(w) => Err(param(format!("servers must be a count or \"infinite\", got {w:?}"))),
        }
    }
}

impl From<Servers> for ServersRepr {
    fn from(s: Servers) -> Self {
        match s {
            Servers::Infinite => ServersRepr::Word("infinite".into()),
            Servers::Finite(k) => ServersRepr::Count(k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub arrival: Arrival,
    pub regulator: BurstinessCurve,
    pub model: ServiceTimeModel,
    #[serde(default = "infinite")]
    pub servers: Servers,
    pub horizon: f64,
    #[serde(default)]
    pub warmup: f64,
    #[serde(default)]
    pub seed: u64,
}

fn infinite() -> Servers {
    Servers::Infinite
}

impl Scenario {
    /// Batches of 5 every 1/20 time unit through `g(t) = 5 + 100t`, with
    /// Weibull(1, 5) execution times capped at 1.4.
    pub fn reference_deterministic() -> Self {
        Self::reference(Arrival::DeterministicBatch { period: 0.05, batch: 5 })
    }

    /// Batches of 5 at Poisson epochs of rate 20, otherwise as
    /// [`Scenario::reference_deterministic`].
    pub fn reference_poisson() -> Self {
        Self::reference(Arrival::PoissonBatch { rate: 20.0, batch: 5 })
    }

    fn reference(arrival: Arrival) -> Self {
        Self {
            arrival,
            regulator: BurstinessCurve::token_bucket(5.0, 100.0).expect("valid reference curve"),
            model: ServiceTimeModel::weibull(1.0, 5.0, 1.4).expect("valid reference model"),
            servers: Servers::Infinite,
            horizon: 1e4,
            warmup: 100.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.warmup >= 0.0 && self.horizon > self.warmup && self.horizon.is_finite()) {
            return Err(param(format!(
                "need horizon > warmup >= 0, got horizon {} and warmup {}",
                self.horizon, self.warmup
            )));
        }
        match &self.arrival {
            Arrival::DeterministicBatch { period, batch } => {
                if !(*period > 0.0 && period.is_finite()) || *batch == 0 {
                    return Err(param("deterministic arrivals need a positive period and batch"));
                }
            }
            Arrival::PoissonBatch { rate, batch } => {
                if !(*rate > 0.0 && rate.is_finite()) || *batch == 0 {
                    return Err(param("Poisson arrivals need a positive rate and batch"));
                }
            }
            Arrival::Trace { events } => validate_trace(events)?,
        }
        Ok(())
    }
}

pub(crate) fn validate_trace(events: &[(f64, u64)]) -> Result<()> {
    let mut last = 0.0;
    for (i, (t, _)) in events.iter().enumerate() {
        if !(t.is_finite() && *t >= 0.0) {
            return Err(param(format!("trace event {i} has invalid timestamp {t}")));
        }
        if *t < last {
            return Err(param(format!("trace event {i} at {t} precedes the previous event at {last}")));
        }
        last = *t;
    }
    Ok(())
}

/// Time-weighted occupancy statistics gathered after warmup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyStats {
    /// `histogram[q]` is the fraction of observed time with `Q = q`.
    pub histogram: Vec<f64>,
    pub mean_q: f64,
    pub var_q: f64,
    /// Admitted requests per unit time after warmup.
    pub admitted_rate: f64,
    /// Arrival epochs after warmup.
    pub arrival_epochs: u64,
    /// Requests admitted by the regulator after warmup.
    pub admitted: u64,
    /// Requests refused by the regulator after warmup.
    pub dropped_by_regulator: u64,
    /// Admitted requests per arrival epoch after warmup.
    pub avg_admitted_batch: f64,
    /// Requests lost to a full pool over the whole run, warmup included.
    pub blocked_at_servers: u64,
    pub total_time: f64,
    batch_histograms: Vec<Vec<f64>>,
}

/// A statistic with its batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl OccupancyStats {
    /// Time fraction with `Q > k`.
    pub fn tail(&self, k: u64) -> f64 {
        tail_of(&self.histogram, k)
    }

    /// `tail(k)` for `k = 0..=max Q`.
    pub fn tail_curve(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.histogram.len()];
        let mut acc = 0.0;
        for q in (0..self.histogram.len()).rev() {
            out[q] = acc;
            acc += self.histogram[q];
        }
        out
    }

    /// Largest occupancy observed after warmup.
    pub fn max_q(&self) -> u64 {
        self.histogram.iter().rposition(|m| *m > 0.0).unwrap_or(0) as u64
    }

    /// Normalized histograms of the equal-length batches behind the
    /// standard errors.
    pub fn batch_histograms(&self) -> &[Vec<f64>] {
        &self.batch_histograms
    }

    pub fn tail_estimate(&self, k: u64) -> Estimate {
        self.batch_estimate(self.tail(k), |h| tail_of(h, k))
    }

    pub fn mean_estimate(&self) -> Estimate {
        self.batch_estimate(self.mean_q, |h| moments(h).0)
    }

    /// Time average of `e^{θQ}`.
    pub fn mgf(&self, theta: f64) -> Estimate {
        let f = |h: &[f64]| h.iter().enumerate().map(|(q, m)| m * (theta * q as f64).exp()).sum::<f64>();
        self.batch_estimate(f(&self.histogram), f)
    }

    fn batch_estimate<F: Fn(&[f64]) -> f64>(&self, value: f64, f: F) -> Estimate {
        let vals: Vec<f64> = self.batch_histograms.iter().map(|h| f(h)).collect();
        let n = vals.len() as f64;
        if vals.len() < 2 {
            return Estimate { value, std_error: f64::NAN };
        }
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Estimate {
            value,
            std_error: (var / n).sqrt(),
        }
    }
}

fn tail_of(hist: &[f64], k: u64) -> f64 {
    let start = (k as usize).saturating_add(1);
    if start >= hist.len() {
        return 0.0;
    }
    hist[start..].iter().rev().sum()
}

fn moments(hist: &[f64]) -> (f64, f64) {
    let mean: f64 = hist.iter().enumerate().map(|(q, m)| q as f64 * m).sum();
    let var: f64 = hist.iter().enumerate().map(|(q, m)| (q as f64 - mean).powi(2) * m).sum();
    (mean, var)
}

fn normalize(h: &mut [f64]) {
    let total: f64 = h.iter().sum();
    if total > 0.0 {
        h.iter_mut().for_each(|m| *m /= total);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Departure(f64);

impl Eq for Departure {}

impl PartialOrd for Departure {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Departure {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Accumulates time spent at each occupancy level, split into batches.
struct Clock {
    warmup: f64,
    horizon: f64,
    width: f64,
    batches: Vec<Vec<f64>>,
    now: f64,
    sample_step: Option<f64>,
    samples: Vec<u64>,
}

impl Clock {
    fn new(warmup: f64, horizon: f64) -> Self {
        Self {
            warmup,
            horizon,
            width: (horizon - warmup) / BATCHES as f64,
            batches: vec![Vec::new(); BATCHES],
            now: 0.0,
            sample_step: None,
            samples: Vec::new(),
        }
    }

    fn advance(&mut self, to: f64, q: usize) {
        let mut a = self.now.max(self.warmup);
        let b = to.min(self.horizon);
        if let Some(step) = self.sample_step {
            loop {
                let tau = self.warmup + self.samples.len() as f64 * step;
                if tau >= b {
                    break;
                }
                self.samples.push(q as u64);
            }
        }
        self.now = to;
        while a < b {
            let idx = (((a - self.warmup) / self.width) as usize).min(BATCHES - 1);
            let end = if idx == BATCHES - 1 {
                b
            } else {
                b.min(self.warmup + (idx + 1) as f64 * self.width)
            };
            let h = &mut self.batches[idx];
            if h.len() <= q {
                h.resize(q + 1, 0.0);
            }
            h[q] += end - a;
            if end <= a {
                break;
            }
            a = end;
        }
    }
}

/// Arrival epochs and batch sizes below the horizon.
struct Epochs<'a> {
    arrival: &'a Arrival,
    horizon: f64,
    index: usize,
    next_time: f64,
    exp: Option<Exp<f64>>,
}

impl<'a> Epochs<'a> {
    fn new(arrival: &'a Arrival, horizon: f64, rng: &mut ChaCha8Rng) -> Self {
        let exp = match arrival {
            Arrival::PoissonBatch { rate, .. } => Some(Exp::new(*rate).expect("validated rate")),
            _ => None,
        };
        let next_time = exp.map(|e| e.sample(rng)).unwrap_or(0.0);
        Self {
            arrival,
            horizon,
            index: 0,
            next_time,
            exp,
        }
    }

    fn next(&mut self, rng: &mut ChaCha8Rng) -> Option<(f64, u64)> {
        let out = match self.arrival {
            Arrival::DeterministicBatch { period, batch } => (self.index as f64 * period, *batch),
            Arrival::PoissonBatch { batch, .. } => {
                let t = self.next_time;
                self.next_time += self.exp.expect("poisson").sample(rng);
                (t, *batch)
            }
            Arrival::Trace { events } => *events.get(self.index)?,
        };
        self.index += 1;
        (out.0 < self.horizon).then_some(out)
    }
}

/// Runs one scenario to its horizon.
pub fn run(scenario: &Scenario) -> Result<OccupancyStats> {
    run_inner(scenario, None).map(|r| r.0)
}

/// Runs a scenario and also reads `Q` every `step` time units after warmup.
pub fn run_sampled(scenario: &Scenario, step: f64) -> Result<(OccupancyStats, Vec<u64>)> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(param(format!("sampling step must be positive, got {step}")));
    }
    run_inner(scenario, Some(step))
}

fn run_inner(scenario: &Scenario, sample_step: Option<f64>) -> Result<(OccupancyStats, Vec<u64>)> {
    scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut epochs = Epochs::new(&scenario.arrival, scenario.horizon, &mut rng);
    let mut regulator = TokenBucketState::new(&scenario.regulator, 0.0);
    let mut busy: BinaryHeap<Reverse<Departure>> = BinaryHeap::new();
    let mut clock = Clock::new(scenario.warmup, scenario.horizon);
    clock.sample_step = sample_step;
    let capacity = match scenario.servers {
        Servers::Infinite => usize::MAX,
        Servers::Finite(k) => k as usize,
    };

    let (mut epochs_seen, mut admitted, mut dropped, mut blocked) = (0u64, 0u64, 0u64, 0u64);
    while let Some((t, batch)) = epochs.next(&mut rng) {
        while let Some(Reverse(Departure(d))) = busy.peek().copied() {
            if d > t + TIE_TOL * t.abs().max(1.0) {
                break;
            }
            clock.advance(d.min(t), busy.len());
            busy.pop();
        }
        clock.advance(t, busy.len());

        let passed = regulator.regulate(t, batch)?;
        let counted = t >= scenario.warmup;
        if counted {
            epochs_seen += 1;
            admitted += passed;
            dropped += batch - passed;
        }
        for _ in 0..passed {
            if busy.len() >= capacity {
                blocked += 1;
                continue;
            }
            let s = scenario.model.sample(&mut rng);
            busy.push(Reverse(Departure(t + s)));
        }
    }
    while let Some(Reverse(Departure(d))) = busy.peek().copied() {
        if d > scenario.horizon {
            break;
        }
        clock.advance(d, busy.len());
        busy.pop();
    }
    clock.advance(scenario.horizon, busy.len());

    let total_time = scenario.horizon - scenario.warmup;
    let samples = std::mem::take(&mut clock.samples);
    let mut batch_histograms = clock.batches;
    let width = batch_histograms.iter().map(Vec::len).max().unwrap_or(0).max(1);
    let mut histogram = vec![0.0; width];
    for h in &batch_histograms {
        for (q, m) in h.iter().enumerate() {
            histogram[q] += m;
        }
    }
    normalize(&mut histogram);
    if histogram.iter().all(|m| *m == 0.0) {
        histogram[0] = 1.0;
    }
    for h in &mut batch_histograms {
        normalize(h);
    }
    let (mean_q, var_q) = moments(&histogram);
    let stats = OccupancyStats {
        histogram,
        mean_q,
        var_q,
        admitted_rate: admitted as f64 / total_time,
        arrival_epochs: epochs_seen,
        admitted,
        dropped_by_regulator: dropped,
        avg_admitted_batch: if epochs_seen > 0 {
            admitted as f64 / epochs_seen as f64
        } else {
            0.0
        },
        blocked_at_servers: blocked,
        total_time,
        batch_histograms,
    };
    Ok((stats, samples))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedMin {
    pub k: u64,
    /// Set when the run is too short to resolve tails of size ε.
    pub warning: Option<String>,
}

/// Smallest `K` with `tail(K) < ε` in an already computed run.
pub fn min_servers_from(stats: &OccupancyStats, epsilon: f64) -> Result<SimulatedMin> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(param(format!("ε must lie in (0, 1], got {epsilon}")));
    }
    let tails = stats.tail_curve();
    let k = tails.iter().position(|p| *p < epsilon).unwrap_or(tails.len()) as u64;
    let needed = 100.0 / epsilon;
    let warning = ((stats.admitted as f64) < needed).then(|| {
        format!(
            "only {} admitted requests observed; resolving ε = {epsilon} needs about {needed:.0}",
            stats.admitted
        )
    });
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    Ok(SimulatedMin { k, warning })
}

/// Simulates an infinite-server scenario and reads off the smallest `K`
/// whose simulated overflow fraction is below ε.
pub fn min_servers_simulated(scenario: &Scenario, epsilon: f64) -> Result<SimulatedMin> {
    if scenario.servers != Servers::Infinite {
        return Err(param("simulated server count needs an infinite-server scenario"));
    }
    min_servers_from(&run(scenario)?, epsilon)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub mean_q_per_rep: Vec<f64>,
    pub mean_q: Estimate,
    /// Across-replication mean and standard error of `tail(k)` for
    /// `k = 0..tail.len()`.
    pub tail: Vec<Estimate>,
}

/// Runs `n_reps` copies with seeds `seed, seed + 1, ...` in parallel.
pub fn replicate(scenario: &Scenario, n_reps: usize) -> Result<Replication> {
    if n_reps < 2 {
        return Err(param(format!("replication needs at least 2 runs, got {n_reps}")));
    }
    scenario.validate()?;
    let runs: Vec<OccupancyStats> = (0..n_reps)
        .into_par_iter()
        .map(|i| {
            let mut s = scenario.clone();
            s.seed = scenario.seed.wrapping_add(i as u64);
            run(&s)
        })
        .collect::<Result<_>>()?;
    let across = |vals: &[f64]| -> Estimate {
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Estimate {
            value: mean,
            std_error: (var / n).sqrt(),
        }
    };
    let mean_q_per_rep: Vec<f64> = runs.iter().map(|r| r.mean_q).collect();
    let width = runs.iter().map(|r| r.histogram.len()).max().unwrap_or(1);
    let tail = (0..width as u64)
        .map(|k| across(&runs.iter().map(|r| r.tail(k)).collect::<Vec<_>>()))
        .collect();
    Ok(Replication {
        mean_q: across(&mean_q_per_rep),
        mean_q_per_rep,
        tail,
    })
}

/// One row of the exported tail curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    #[serde(rename = "K")]
    pub k: u64,
    pub p_q_gt_k: f64,
    pub omega: f64,
}

/// Simulated tail beside the Chernoff bound for `K = 0..=g(s_max)`.
pub fn tail_rows(stats: &OccupancyStats, curve: &BurstinessCurve, model: &ServiceTimeModel) -> Result<Vec<TailRow>> {
    let mgf = LogMgf::new(curve, model);
    let top = (mgf.ceiling().ceil() as u64).max(stats.max_q());
    (0..=top)
        .map(|k| {
            Ok(TailRow {
                k,
                p_q_gt_k: stats.tail(k),
                omega: bounds::chernoff_with(&mgf, k as f64)?.probability_bound,
            })
        })
        .collect()
}

pub fn write_tail_csv<W: Write>(rows: &[TailRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Config(format!("writing tail CSV: {e}")))?;
    }
    w.flush().map_err(|e| Error::Config(format!("writing tail CSV: {e}")))?;
    Ok(())
}

/// The most front-loaded trace conforming to `curve`: at every multiple of
/// `step` it releases as many requests as the curve allows.
pub fn greedy_trace(curve: &BurstinessCurve, horizon: f64, step: f64) -> Result<Vec<(f64, u64)>> {
    if !(step > 0.0 && horizon > 0.0) {
        return Err(param("greedy trace needs positive horizon and step"));
    }
    let mut bucket = TokenBucketState::new(curve, 0.0);
    let mut out = Vec::new();
    let mut i = 0u64;
    loop {
        let t = i as f64 * step;
        if t >= horizon {
            break;
        }
        let n = bucket.regulate(t, u64::MAX / 2)?;
        if n > 0 {
            out.push((t, n));
        }
        i += 1;
    }
    Ok(out)
}

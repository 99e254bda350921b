//! Online estimators: empirical burstiness curves from request traces and
//! quota headroom from occupancy readings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curves::{BurstinessCurve, Piece};
use crate::error::{param, Error, Result};

pub const DEFAULT_RATES: usize = 32;
pub const DEFAULT_RESERVOIR: usize = 100_000;

/// `n` rates spaced geometrically over `[peak / 100, peak]`, increasing.
pub fn geometric_rates(peak: f64, n: usize) -> Result<Vec<f64>> {
    if !(peak > 0.0 && peak.is_finite()) || n == 0 {
        return Err(param(format!("rate grid needs a positive peak and count, got {peak} and {n}")));
    }
    if n == 1 {
        return Ok(vec![peak]);
    }
    Ok((0..n)
        .map(|i| peak * 0.01f64.powf((n - 1 - i) as f64 / (n - 1) as f64))
        .collect())
}

/// Grid spacing of one tenth of the mean gap between arrival epochs.
pub fn default_resolution(trace: &[(f64, u64)]) -> Option<f64> {
    let (first, last) = (trace.first()?.0, trace.last()?.0);
    let span = last - first;
    (trace.len() > 1 && span > 0.0).then(|| span / (trace.len() - 1) as f64 / 10.0)
}

/// Backlogs of fictitious fixed-rate servers fed by the request stream, with
/// time-uniform samples of each backlog for quantile estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualQueueBank {
    rates: Vec<f64>,
    backlog: Vec<f64>,
    delta: f64,
    resolution: f64,
    reservoir: Vec<Vec<f64>>,
    capacity: usize,
    sampled: u64,
    peak: Vec<f64>,
    start: Option<f64>,
    last: Option<f64>,
    next_grid: u64,
    arrivals: u64,
    rng: ChaCha8Rng,
}

impl VirtualQueueBank {
    /// `rates` must be strictly increasing and positive; `delta` is the
    /// tolerated violation fraction; `resolution` is the sampling step.
    pub fn new(rates: Vec<f64>, delta: f64, resolution: f64) -> Result<Self> {
        Self::with_capacity(rates, delta, resolution, DEFAULT_RESERVOIR, 0)
    }

    pub fn with_capacity(rates: Vec<f64>, delta: f64, resolution: f64, capacity: usize, seed: u64) -> Result<Self> {
        if rates.is_empty() || rates.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(param("virtual queue rates must be positive and finite"));
        }
        if rates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(param("virtual queue rates must be strictly increasing"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(param(format!("δ must lie in (0, 1), got {delta}")));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(param(format!("sampling resolution must be positive, got {resolution}")));
        }
        if capacity == 0 {
            return Err(param("reservoir capacity must be positive"));
        }
        let n = rates.len();
        Ok(Self {
            rates,
            backlog: vec![0.0; n],
            delta,
            resolution,
            reservoir: vec![Vec::new(); n],
            capacity,
            sampled: 0,
            peak: vec![0.0; n],
            start: None,
            last: None,
            next_grid: 0,
            arrivals: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Backlogs as of the last update.
    pub fn backlogs(&self) -> &[f64] {
        &self.backlog
    }

    /// Total requests observed.
    pub fn arrivals(&self) -> u64 {
        self.arrivals
    }

    /// Backlogs drained forward to `t` without new arrivals.
    pub fn backlogs_at(&self, t: f64) -> Result<Vec<f64>> {
        let last = self.last.unwrap_or(t);
        if t < last {
            return Err(Error::State(format!("query at {t} precedes last update at {last}")));
        }
        Ok(self
            .backlog
            .iter()
            .zip(&self.rates)
            .map(|(v, r)| (v - r * (t - last)).max(0.0))
            .collect())
    }

    /// Records `count` requests at time `t`.
    pub fn observe(&mut self, t: f64, count: u64) -> Result<()> {
        if !t.is_finite() {
            return Err(param(format!("timestamp must be finite, got {t}")));
        }
        let last = match self.last {
            Some(l) if t < l => {
                return Err(Error::State(format!("observation at {t} precedes last update at {l}")));
            }
            Some(l) => l,
            None => {
                self.start = Some(t);
                t
            }
        };
        // grid points strictly before the arrival see the drained backlog
        while self.grid_time(self.next_grid) < t {
            let tau = self.grid_time(self.next_grid);
            let values: Vec<f64> = self
                .backlog
                .iter()
                .zip(&self.rates)
                .map(|(v, r)| (v - r * (tau - last)).max(0.0))
                .collect();
            self.record(&values);
        }
        for ((v, r), peak) in self.backlog.iter_mut().zip(&self.rates).zip(self.peak.iter_mut()) {
            *v = (*v - r * (t - last)).max(0.0) + count as f64;
            *peak = peak.max(*v);
        }
        self.last = Some(t);
        self.arrivals += count;
        while self.grid_time(self.next_grid) <= t {
            let values = self.backlog.clone();
            self.record(&values);
        }
        Ok(())
    }

    fn grid_time(&self, k: u64) -> f64 {
        self.start.unwrap_or(0.0) + k as f64 * self.resolution
    }

    fn record(&mut self, values: &[f64]) {
        let i = self.sampled;
        self.sampled += 1;
        self.next_grid += 1;
        if (i as usize) < self.capacity {
            for (res, v) in self.reservoir.iter_mut().zip(values) {
                res.push(*v);
            }
        } else {
            let j = self.rng.random_range(0..=i) as usize;
            if j < self.capacity {
                for (res, v) in self.reservoir.iter_mut().zip(values) {
                    res[j] = *v;
                }
            }
        }
    }

    fn index_of(&self, rate: f64) -> Result<usize> {
        self.rates
            .iter()
            .position(|r| (r - rate).abs() <= 1e-12 * r.max(1.0))
            .ok_or_else(|| param(format!("rate {rate} is not on the bank's grid")))
    }

    /// Smallest level that the backlog at `rate` exceeds for a fraction of
    /// sampled time below δ. When δ is under one sample's weight this is
    /// the largest backlog ever reached.
    pub fn empirical_sigma(&self, rate: f64) -> Result<f64> {
        let i = self.index_of(rate)?;
        self.sigma_at(i)
    }

    fn sigma_at(&self, i: usize) -> Result<f64> {
        let samples = &self.reservoir[i];
        if samples.is_empty() {
            return Err(Error::State("no backlog samples recorded yet".into()));
        }
        let n = samples.len() as f64;
        if self.delta * n <= 1.0 {
            return Ok(self.peak[i]);
        }
        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        Ok(time_weighted_quantile(&sorted, self.delta))
    }

    /// `σ̂_r` for every rate, made nonincreasing in `r`.
    pub fn sigmas(&self) -> Result<Vec<f64>> {
        let mut s = (0..self.rates.len()).map(|i| self.sigma_at(i)).collect::<Result<Vec<_>>>()?;
        for i in (0..s.len().saturating_sub(1)).rev() {
            s[i] = s[i].max(s[i + 1]);
        }
        Ok(s)
    }

    /// `ĝ(t) = min_r σ̂_r + r t`.
    pub fn empirical_curve(&self) -> Result<BurstinessCurve> {
        let sigmas = self.sigmas()?;
        BurstinessCurve::new(
            sigmas
                .iter()
                .zip(&self.rates)
                .map(|(s, r)| Piece::new(*s, *r))
                .collect(),
        )
    }
}

/// Smallest sample value `v` with `#{x > v} < δ n` in an ascending slice.
pub(crate) fn time_weighted_quantile(sorted: &[f64], delta: f64) -> f64 {
    let n = sorted.len();
    let limit = delta * n as f64;
    let mut i = 0;
    while i < n {
        let v = sorted[i];
        let mut j = i;
        while j + 1 < n && sorted[j + 1] == v {
            j += 1;
        }
        if ((n - 1 - j) as f64) < limit {
            return v;
        }
        i = j + 1;
    }
    sorted[n - 1]
}

/// Fraction of `[first, last]` event time during which the trace exceeds
/// `curve` over some window ending at that instant.
pub fn coverage_violation(trace: &[(f64, u64)], curve: &BurstinessCurve) -> f64 {
    let (Some(first), Some(last)) = (trace.first(), trace.last()) else {
        return 0.0;
    };
    let span = last.0 - first.0;
    if span <= 0.0 {
        return 0.0;
    }
    let pieces = curve.pieces();
    let mut backlog = vec![0.0f64; pieces.len()];
    let mut prev = first.0;
    let mut violated = 0.0;
    for (idx, &(t, n)) in trace.iter().enumerate() {
        for (v, p) in backlog.iter_mut().zip(pieces) {
            *v = (*v - p.rate * (t - prev)).max(0.0) + n as f64;
        }
        prev = t;
        let next = trace.get(idx + 1).map(|e| e.0).unwrap_or(t);
        let gap = next - t;
        if gap <= 0.0 {
            continue;
        }
        // backlog k stays above its offset for (V_k - σ_k) / r_k after t
        let over = backlog
            .iter()
            .zip(pieces)
            .filter(|(v, p)| **v > p.offset)
            .map(|(v, p)| if p.rate > 0.0 { (v - p.offset) / p.rate } else { f64::INFINITY })
            .fold(0.0f64, f64::max);
        violated += over.min(gap);
    }
    violated / span
}

/// Exponentially weighted mean and variance of the busy-server count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotaHeadroom {
    alpha: f64,
    mean: f64,
    var: f64,
    observations: u64,
}

impl QuotaHeadroom {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(param(format!("forgetting factor must lie in (0, 1), got {alpha}")));
        }
        Ok(Self {
            alpha,
            mean: 0.0,
            var: 0.0,
            observations: 0,
        })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn var(&self) -> f64 {
        self.var
    }

    pub fn observations(&self) -> u64 {
        self.observations
    }

    pub fn update(&mut self, q: f64) -> Result<()> {
        if !(q >= 0.0 && q.is_finite()) {
            return Err(param(format!("occupancy must be finite and nonnegative, got {q}")));
        }
        if self.observations == 0 {
            self.mean = q;
            self.var = 0.0;
        } else {
            let a = self.alpha;
            self.mean = a * self.mean + (1.0 - a) * q;
            self.var = a * self.var + (1.0 - a) * (q - self.mean).powi(2);
        }
        self.observations += 1;
        Ok(())
    }

    /// `max(0, floor(K - mean - 3 sd))`.
    pub fn headroom(&self, k: f64) -> Result<u64> {
        if self.observations == 0 {
            return Err(Error::State("headroom needs at least one observation".into()));
        }
        Ok((k - self.mean - 3.0 * self.var.sqrt()).floor().max(0.0) as u64)
    }
}

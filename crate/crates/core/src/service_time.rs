//! Execution-time distributions with a hard cap `s_max`.
//!
//! Parametric families are truncated by conditioning: the parent law is
//! restricted to `S <= s_max` and renormalized, so `P(S = s_max) = 0`.
//! Empirical models use the right-continuous CCDF of their samples.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Open01};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, gamma_lr, gamma_ur};

use crate::curves::BurstinessCurve;
use crate::error::{param, Error, Result};
use crate::quadrature::{self, Span};

/// Smallest parent mass below `s_max` accepted for rejection sampling.
const MIN_ACCEPTANCE: f64 = 1e-6;
const MEAN_REL_TOL: f64 = 1e-10;
const FIT_TOL: f64 = 1e-9;
const FIT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq)]
enum Family {
    Weibull { scale: f64, shape: f64 },
    Gamma { shape: f64, rate: f64 },
    /// Sorted, strictly positive samples.
    Empirical { samples: Vec<f64> },
    /// Weights are positive and sum to one.
    Blend { components: Vec<(f64, ServiceTimeModel)> },
}

/// Distribution of the execution time `S`, supported on `(0, s_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub struct ServiceTimeModel {
    family: Family,
    s_max: f64,
    /// Parent probability of `S <= s_max` (1 for empirical and blends).
    mass: f64,
}

impl ServiceTimeModel {
    /// Weibull(scale, shape) conditioned on `S <= s_max`.
    pub fn weibull(scale: f64, shape: f64, s_max: f64) -> Result<Self> {
        check_positive("weibull scale", scale)?;
        check_positive("weibull shape", shape)?;
        check_positive("s_max", s_max)?;
        let mass = -(-(s_max / scale).powf(shape)).exp_m1();
        Self::parametric(Family::Weibull { scale, shape }, s_max, mass)
    }

    /// Gamma(shape, rate) conditioned on `S <= s_max`.
    pub fn gamma(shape: f64, rate: f64, s_max: f64) -> Result<Self> {
        check_positive("gamma shape", shape)?;
        check_positive("gamma rate", rate)?;
        check_positive("s_max", s_max)?;
        let mass = gamma_lr(shape, rate * s_max);
        Self::parametric(Family::Gamma { shape, rate }, s_max, mass)
    }

    fn parametric(family: Family, s_max: f64, mass: f64) -> Result<Self> {
        if !(mass >= MIN_ACCEPTANCE) {
            return Err(Error::Model(format!(
                "only {mass:e} of the parent mass lies below s_max = {s_max}; truncation is degenerate"
            )));
        }
        Ok(Self { family, s_max, mass })
    }

    /// Empirical law of the samples; `s_max` is the largest sample.
    pub fn empirical(samples: Vec<f64>) -> Result<Self> {
        let s_max = samples.iter().copied().fold(f64::NAN, f64::max);
        Self::empirical_capped(samples, s_max)
    }

    /// Empirical law with an explicit cap `s_max >= max(samples)`.
    pub fn empirical_capped(mut samples: Vec<f64>, s_max: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(param("empirical model needs at least one sample"));
        }
        if samples.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(param("empirical samples must be finite and strictly positive"));
        }
        samples.sort_by(f64::total_cmp);
        let max = samples[samples.len() - 1];
        if !(s_max >= max) || !s_max.is_finite() {
            return Err(param(format!("s_max = {s_max} is below the largest sample {max}")));
        }
        Ok(Self {
            family: Family::Empirical { samples },
            s_max,
            mass: 1.0,
        })
    }

    /// Deterministic service time `value`.
    pub fn point_mass(value: f64) -> Result<Self> {
        Self::empirical(vec![value])
    }

    /// Mixture with the given nonnegative weights (summing to one).
    pub fn mixture(components: Vec<(f64, ServiceTimeModel)>) -> Result<Self> {
        if components.is_empty() {
            return Err(param("mixture needs at least one component"));
        }
        if components.iter().any(|(w, _)| !(*w >= 0.0) || !w.is_finite()) {
            return Err(param("mixture weights must be finite and nonnegative"));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(param(format!("mixture weights sum to {total}, not 1")));
        }
        let components: Vec<_> = components.into_iter().filter(|(w, _)| *w > 0.0).collect();
        let s_max = components.iter().map(|(_, m)| m.s_max).fold(0.0, f64::max);
        Ok(Self {
            family: Family::Blend { components },
            s_max,
            mass: 1.0,
        })
    }

    /// Forgetting-factor update `α p̂ + (1 - α) q̂` as a mixture of laws.
    pub fn blend(previous: &ServiceTimeModel, recent: &ServiceTimeModel, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(param(format!("blend factor must lie in (0, 1), got {alpha}")));
        }
        Self::mixture(vec![(alpha, previous.clone()), (1.0 - alpha, recent.clone())])
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    /// Short family name used in reports.
    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::Weibull { .. } => "weibull",
            Family::Gamma { .. } => "gamma",
            Family::Empirical { .. } => "empirical",
            Family::Blend { .. } => "blend",
        }
    }

    /// Fitted parameters of a parametric family as `(first, second)`:
    /// `(scale, shape)` for Weibull and `(shape, rate)` for Gamma.
    pub fn parameters(&self) -> Option<(f64, f64)> {
        match self.family {
            Family::Weibull { scale, shape } => Some((scale, shape)),
            Family::Gamma { shape, rate } => Some((shape, rate)),
            _ => None,
        }
    }

    /// Samples of an empirical model.
    pub fn samples(&self) -> Option<&[f64]> {
        match &self.family {
            Family::Empirical { samples } => Some(samples),
            _ => None,
        }
    }

    /// `P(S > s)`; equals 1 at `s <= 0` and 0 at `s >= s_max`.
    pub fn ccdf(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 1.0;
        }
        if s >= self.s_max {
            return 0.0;
        }
        match &self.family {
            Family::Weibull { scale, shape } => {
                let above = (-(s / scale).powf(*shape)).exp();
                let above_cap = 1.0 - self.mass;
                ((above - above_cap) / self.mass).clamp(0.0, 1.0)
            }
            Family::Gamma { shape, rate } => {
                let above = gamma_ur(*shape, rate * s);
                let above_cap = gamma_ur(*shape, rate * self.s_max);
                ((above - above_cap) / self.mass).clamp(0.0, 1.0)
            }
            Family::Empirical { samples } => {
                let at_or_below = samples.partition_point(|&x| x <= s);
                (samples.len() - at_or_below) as f64 / samples.len() as f64
            }
            Family::Blend { components } => components.iter().map(|(w, m)| w * m.ccdf(s)).sum(),
        }
    }

    /// Points in `(0, s_max)` where the CCDF is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        let mut out = match &self.family {
            Family::Weibull { .. } | Family::Gamma { .. } => Vec::new(),
            Family::Empirical { samples } => samples.clone(),
            Family::Blend { components } => components
                .iter()
                .flat_map(|(_, m)| {
                    let mut k = m.kinks();
                    k.push(m.s_max);
                    k
                })
                .collect(),
        };
        out.retain(|&x| x > 0.0 && x < self.s_max);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// `E S = ∫_0^{s_max} P(S > s) ds`.
    pub fn mean(&self) -> f64 {
        match &self.family {
            Family::Empirical { samples } => samples.iter().sum::<f64>() / samples.len() as f64,
            Family::Blend { components } => components.iter().map(|(w, m)| w * m.mean()).sum(),
            _ => {
                let spans = [Span {
                    a: 0.0,
                    b: self.s_max,
                    scale: 1.0,
                }];
                quadrature::integrate(&spans, MEAN_REL_TOL, 0.0, |s| self.ccdf(s)).value
            }
        }
    }

    /// One draw from the truncated law.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.family {
            Family::Weibull { scale, shape } => {
                // invert the conditioned CDF F(s) / F(s_max)
                let u: f64 = Open01.sample(rng);
                scale * (-(-u * self.mass).ln_1p()).powf(1.0 / shape)
            }
            Family::Gamma { shape, rate } => {
                let parent = Gamma::new(*shape, 1.0 / rate).expect("validated gamma parameters");
                loop {
                    let s = parent.sample(rng);
                    if s > 0.0 && s <= self.s_max {
                        return s;
                    }
                }
            }
            Family::Empirical { samples } => samples[rng.random_range(0..samples.len())],
            Family::Blend { components } => {
                let mut u: f64 = rng.random();
                for (w, m) in components {
                    if u < *w {
                        return m.sample(rng);
                    }
                    u -= w;
                }
                components[components.len() - 1].1.sample(rng)
            }
        }
    }

    /// `Φ(x) = P(g(S) > x)` for a nondecreasing envelope `g`.
    pub fn phi(&self, curve: &BurstinessCurve, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::Domain(format!("Φ evaluated at x = {x}")));
        }
        if x < curve.at_zero() {
            return Ok(1.0);
        }
        let last = curve.pieces()[curve.pieces().len() - 1];
        if last.rate == 0.0 && x >= last.offset {
            return Ok(0.0);
        }
        let t = curve.inverse_unchecked(x);
        Ok(if t.is_finite() { self.ccdf(t) } else { 0.0 })
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(param(format!("{name} must be finite and positive, got {v}")))
    }
}

/// Config-file form of a model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
enum ModelSpec {
    Weibull {
        scale: f64,
        shape: f64,
        s_max: f64,
    },
    Gamma {
        shape: f64,
        rate: f64,
        s_max: f64,
    },
    Empirical {
        samples: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s_max: Option<f64>,
    },
    Blend {
        components: Vec<BlendComponent>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BlendComponent {
    weight: f64,
    model: ServiceTimeModel,
}

impl TryFrom<ModelSpec> for ServiceTimeModel {
    type Error = Error;

    fn try_from(spec: ModelSpec) -> Result<Self> {
        match spec {
            ModelSpec::Weibull { scale, shape, s_max } => Self::weibull(scale, shape, s_max),
            ModelSpec::Gamma { shape, rate, s_max } => Self::gamma(shape, rate, s_max),
            ModelSpec::Empirical { samples, s_max: None } => Self::empirical(samples),
            ModelSpec::Empirical {
                samples,
                s_max: Some(cap),
            } => Self::empirical_capped(samples, cap),
            ModelSpec::Blend { components } => {
                Self::mixture(components.into_iter().map(|c| (c.weight, c.model)).collect())
            }
        }
    }
}

impl From<ServiceTimeModel> for ModelSpec {
    fn from(m: ServiceTimeModel) -> Self {
        match m.family {
            Family::Weibull { scale, shape } => ModelSpec::Weibull {
                scale,
                shape,
                s_max: m.s_max,
            },
            Family::Gamma { shape, rate } => ModelSpec::Gamma {
                shape,
                rate,
                s_max: m.s_max,
            },
            Family::Empirical { samples } => {
                let max = samples[samples.len() - 1];
                ModelSpec::Empirical {
                    samples,
                    s_max: (m.s_max > max).then_some(m.s_max),
                }
            }
            Family::Blend { components } => ModelSpec::Blend {
                components: components
                    .into_iter()
                    .map(|(weight, model)| BlendComponent { weight, model })
                    .collect(),
            },
        }
    }
}

/// Family used when fitting a window of observed execution times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitFamily {
    Weibull,
    Gamma,
    Empirical,
}

/// Maximum-likelihood fit of a window of execution times.
///
/// Parametric fits are truncated at `1.05 * max(samples)`. A window whose
/// samples are all equal yields a point mass.
pub fn fit_window(samples: &[f64], family: FitFamily) -> Result<ServiceTimeModel> {
    if samples.len() < 10 {
        return Err(param(format!("need at least 10 samples to fit, got {}", samples.len())));
    }
    if samples.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(param("execution times must be finite and strictly positive"));
    }
    let max = samples.iter().copied().fold(0.0, f64::max);
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    if max - min <= 1e-12 * max {
        return ServiceTimeModel::point_mass(max);
    }
    let cap = 1.05 * max;
    match family {
        FitFamily::Empirical => ServiceTimeModel::empirical(samples.to_vec()),
        FitFamily::Weibull => {
            let (scale, shape) = weibull_mle(samples)?;
            ServiceTimeModel::weibull(scale, shape, cap)
        }
        FitFamily::Gamma => {
            let (shape, rate) = gamma_mle(samples)?;
            ServiceTimeModel::gamma(shape, rate, cap)
        }
    }
}

/// Returns `(scale, shape)`. Newton on the profile-likelihood equation
/// `1/k + mean(ln x) - Σ x^k ln x / Σ x^k = 0`, safeguarded by bisection.
fn weibull_mle(samples: &[f64]) -> Result<(f64, f64)> {
    let n = samples.len() as f64;
    let max = samples.iter().copied().fold(0.0, f64::max);
    // work with x / max so that x^k never overflows
    let logs: Vec<f64> = samples.iter().map(|x| (x / max).ln()).collect();
    let mean_log = logs.iter().sum::<f64>() / n;
    let var_log = logs.iter().map(|l| (l - mean_log).powi(2)).sum::<f64>() / n;

    let profile = |k: f64| -> (f64, f64) {
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for &l in &logs {
            let p = (k * l).exp();
            s0 += p;
            s1 += p * l;
            s2 += p * l * l;
        }
        let f = 1.0 / k + mean_log - s1 / s0;
        let df = -1.0 / (k * k) - (s2 * s0 - s1 * s1) / (s0 * s0);
        (f, df)
    };

    let mut k = (1.2825 / var_log.sqrt()).clamp(1e-3, 1e3);
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut step = f64::INFINITY;
    for iter in 1..=FIT_MAX_ITER {
        let (f, df) = profile(k);
        // f is decreasing in k
        if f > 0.0 {
            lo = lo.max(k);
        } else {
            hi = hi.min(k);
        }
        let mut next = k - f / df;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * k };
        }
        step = (next - k).abs();
        k = next;
        if step <= FIT_TOL * k {
            let mean_pow = logs.iter().map(|l| (k * l).exp()).sum::<f64>() / n;
            let scale = max * mean_pow.powf(1.0 / k);
            log::debug!("weibull fit converged in {iter} iterations");
            return Ok((scale, k));
        }
    }
    Err(Error::Fit {
        iterations: FIT_MAX_ITER,
        last_step: step,
        shape: k,
    })
}

/// Returns `(shape, rate)`. Newton on `ln a - ψ(a) = ln(mean) - mean(ln x)`.
fn gamma_mle(samples: &[f64]) -> Result<(f64, f64)> {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let mean_log = samples.iter().map(|x| x.ln()).sum::<f64>() / n;
    let s = mean.ln() - mean_log;
    if !(s > 0.0) {
        return Err(Error::Fit {
            iterations: 0,
            last_step: 0.0,
            shape: f64::NAN,
        });
    }
    let mut a = (3.0 - s + ((s - 3.0).powi(2) + 24.0 * s).sqrt()) / (12.0 * s);
    let mut step = f64::INFINITY;
    for _ in 0..FIT_MAX_ITER {
        let f = a.ln() - digamma(a) - s;
        let df = 1.0 / a - trigamma(a);
        let mut next = a - f / df;
        if !(next > 0.0) || !next.is_finite() {
            next = 0.5 * a;
        }
        step = (next - a).abs();
        a = next;
        if step <= FIT_TOL * a {
            return Ok((a, a / mean));
        }
    }
    Err(Error::Fit {
        iterations: FIT_MAX_ITER,
        last_step: step,
        shape: a,
    })
}

/// ψ'(x) for x > 0 via upward recurrence and the asymptotic series.
pub(crate) fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + inv
        + 0.5 * inv2
        + inv * inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 / 30.0)))
}

/// Sliding window of recent execution times with forgetting-factor updates.
#[derive(Debug, Clone)]
pub struct ServiceTimeTracker {
    window: VecDeque<f64>,
    capacity: usize,
    alpha: f64,
    family: FitFamily,
    current: Option<ServiceTimeModel>,
}

impl ServiceTimeTracker {
    pub const DEFAULT_WINDOW: usize = 10_000;
    pub const DEFAULT_ALPHA: f64 = 0.9;

    pub fn new(family: FitFamily, capacity: usize, alpha: f64) -> Result<Self> {
        if capacity < 10 {
            return Err(param("window must hold at least 10 samples"));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(param(format!("forgetting factor must lie in (0, 1), got {alpha}")));
        }
        Ok(Self {
            window: VecDeque::with_capacity(capacity),
            capacity,
            alpha,
            family,
            current: None,
        })
    }

    pub fn record(&mut self, s: f64) {
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(s);
    }

    pub fn model(&self) -> Option<&ServiceTimeModel> {
        self.current.as_ref()
    }

    /// Fits the window and folds it into the running estimate. Mixture
    /// components whose weight decays below 1e-6 are dropped.
    pub fn refresh(&mut self) -> Result<&ServiceTimeModel> {
        let samples: Vec<f64> = self.window.iter().copied().collect();
        let recent = fit_window(&samples, self.family)?;
        let next = match self.current.take() {
            None => recent,
            Some(previous) => {
                let mut parts: Vec<(f64, ServiceTimeModel)> = match previous.family {
                    Family::Blend { components } => components
                        .into_iter()
                        .map(|(w, m)| (w * self.alpha, m))
                        .filter(|(w, _)| *w >= 1e-6)
                        .collect(),
                    _ => vec![(self.alpha, previous)],
                };
                parts.push((1.0 - self.alpha, recent));
                let total: f64 = parts.iter().map(|(w, _)| w).sum();
                parts.iter_mut().for_each(|(w, _)| *w /= total);
                ServiceTimeModel::mixture(parts)?
            }
        };
        Ok(self.current.insert(next))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reference() -> ServiceTimeModel {
        ServiceTimeModel::weibull(1.0, 5.0, 1.4).unwrap()
    }

    #[test]
    fn boundary_values() {
        for m in [
            reference(),
            ServiceTimeModel::gamma(4.0, 2.0, 5.0).unwrap(),
            ServiceTimeModel::empirical(vec![0.3, 0.7, 1.1]).unwrap(),
        ] {
            assert_eq!(m.ccdf(0.0), 1.0);
            assert_eq!(m.ccdf(m.s_max()), 0.0);
        }
    }

    #[test]
    fn reference_mean() {
        let mean = reference().mean();
        assert!((mean - 0.915).abs() < 1e-3, "{mean}");
    }

    #[test]
    fn mean_of_point_mass_and_blend() {
        assert_eq!(ServiceTimeModel::point_mass(0.5).unwrap().mean(), 0.5);
        let a = reference();
        let b = ServiceTimeModel::gamma(4.0, 2.0, 5.0).unwrap();
        let m = ServiceTimeModel::blend(&a, &b, 0.5).unwrap();
        assert!((m.mean() - 0.5 * (a.mean() + b.mean())).abs() < 1e-9);
        assert_eq!(m.s_max(), 5.0);
    }

    #[test]
    fn ccdf_matches_monte_carlo() {
        let m = reference();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let above = (0..n).filter(|_| m.sample(&mut rng) > 0.915).count() as f64 / n as f64;
        let p = m.ccdf(0.915);
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((above - p).abs() < 3.0 * se, "mc {above} vs {p}");
    }

    #[test]
    fn sampling_is_bounded_and_deterministic() {
        let m = reference();
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        let mut sum = 0.0;
        let n = 1_000_000;
        for _ in 0..n {
            let x = m.sample(&mut a);
            assert!(x > 0.0 && x <= 1.4);
            assert_eq!(x, m.sample(&mut b));
            sum += x;
        }
        assert!((sum / n as f64 - 0.915).abs() < 0.01);
    }

    #[test]
    fn gamma_rejection_stays_under_cap() {
        let m = ServiceTimeModel::gamma(2.0, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        assert!((0..10_000).all(|_| {
            let s = m.sample(&mut rng);
            s > 0.0 && s <= 1.0
        }));
        assert!(matches!(ServiceTimeModel::gamma(50.0, 1.0, 1.0), Err(Error::Model(_))));
    }

    #[test]
    fn phi_examples() {
        let m = reference();
        let g = BurstinessCurve::token_bucket(5.0, 100.0).unwrap();
        assert_eq!(m.phi(&g, 5.0 - 1e-9).unwrap(), 1.0);
        assert_eq!(m.phi(&g, 145.0).unwrap(), 0.0);
        assert_eq!(m.phi(&g, 200.0).unwrap(), 0.0);
        assert!((m.phi(&g, 96.5).unwrap() - m.ccdf(0.915)).abs() < 1e-12);
        assert!(m.phi(&g, -1.0).is_err());
    }

    #[test]
    fn fit_weibull_recovers_parameters() {
        let parent = ServiceTimeModel::weibull(1.0, 5.0, 50.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let xs: Vec<f64> = (0..100_000).map(|_| parent.sample(&mut rng)).collect();
        let fit = fit_window(&xs, FitFamily::Weibull).unwrap();
        let (scale, shape) = fit.parameters().unwrap();
        assert!((scale - 1.0).abs() < 0.02, "{scale}");
        assert!((shape - 5.0).abs() < 0.1, "{shape}");
        let max = xs.iter().copied().fold(0.0, f64::max);
        assert!((fit.s_max() - 1.05 * max).abs() < 1e-12);
    }

    #[test]
    fn fit_gamma_recovers_parameters() {
        let parent = ServiceTimeModel::gamma(4.0, 2.0, 1e3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let xs: Vec<f64> = (0..100_000).map(|_| parent.sample(&mut rng)).collect();
        let (shape, rate) = fit_window(&xs, FitFamily::Gamma).unwrap().parameters().unwrap();
        assert!((shape - 4.0).abs() < 0.12, "{shape}");
        assert!((rate - 2.0).abs() < 0.06, "{rate}");
    }

    #[test]
    fn fit_degenerate_and_short_windows() {
        let m = fit_window(&[0.5; 12], FitFamily::Weibull).unwrap();
        assert_eq!(m.samples(), Some(&[0.5][..]));
        assert_eq!(m.mean(), 0.5);
        assert!(fit_window(&[0.5; 9], FitFamily::Gamma).is_err());
        assert!(fit_window(&[0.5, -1.0, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0], FitFamily::Gamma).is_err());
    }

    #[test]
    fn trigamma_known_values() {
        let pi2_6 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((trigamma(1.0) - pi2_6).abs() < 1e-10);
        assert!((trigamma(0.5) - 3.0 * pi2_6).abs() < 1e-10);
    }

    #[test]
    fn blend_is_convex_combination() {
        let a = reference();
        let b = ServiceTimeModel::empirical(vec![0.2, 0.4, 1.0]).unwrap();
        let m = ServiceTimeModel::blend(&a, &b, 0.3).unwrap();
        let same = ServiceTimeModel::blend(&a, &a, 0.3).unwrap();
        for i in 0..=200 {
            let s = i as f64 * 0.01;
            assert!((m.ccdf(s) - (0.3 * a.ccdf(s) + 0.7 * b.ccdf(s))).abs() < 1e-12);
            assert!((same.ccdf(s) - a.ccdf(s)).abs() < 1e-12);
        }
        assert!(ServiceTimeModel::blend(&a, &b, 1.0).is_err());
    }

    #[test]
    fn tracker_blends_successive_windows() {
        let mut t = ServiceTimeTracker::new(FitFamily::Empirical, 20, 0.9).unwrap();
        for i in 0..20 {
            t.record(1.0 + i as f64 * 0.01);
        }
        let first_mean = t.refresh().unwrap().mean();
        for _ in 0..20 {
            t.record(2.0);
            t.record(2.1);
        }
        let m = t.refresh().unwrap().clone();
        assert!((m.mean() - (0.9 * first_mean + 0.1 * 2.05)).abs() < 1e-9);
    }

    #[test]
    fn model_literals() {
        let m: ServiceTimeModel =
            serde_json::from_str(r#"{"family":"weibull","scale":1.0,"shape":5.0,"s_max":1.4}"#).unwrap();
        assert_eq!(m, reference());
        let g: ServiceTimeModel = serde_json::from_str(r#"{"family":"gamma","shape":2,"rate":1,"s_max":9}"#).unwrap();
        assert_eq!(g.family_name(), "gamma");
        let e: ServiceTimeModel = serde_json::from_str(r#"{"family":"empirical","samples":[0.4,0.2]}"#).unwrap();
        assert_eq!(e.s_max(), 0.4);
        let back: ServiceTimeModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<ServiceTimeModel>(r#"{"family":"weibull","scale":-1,"shape":5,"s_max":1}"#).is_err());
    }
}

//! Capacity, no-blocking, and overflow bounds on the number of busy servers.
//!
//! The central quantity is the log-MGF bound
//!
//! ```text
//! M(θ) = θ g(0) + ∫_{g(0)}^{g(s_max)} log(Φ(x) e^θ + 1 - Φ(x)) dx,   Φ(x) = P(g(S) > x)
//! ```
//!
//! whose Legendre transform at `K` gives the Chernoff bound on `P(Q > K)`.
//! The integral is evaluated in the time domain (`x = g(t)`, `dx = g'(t) dt`)
//! so that the quadrature grid is anchored at the curve's breakpoints.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::curves::BurstinessCurve;
use crate::error::{param, Error, Result};
use crate::quadrature::{self, Integral, QuadDiagnostics, Span, MAX_LEVEL};
use crate::service_time::ServiceTimeModel;

const MGF_REL_TOL: f64 = 1e-12;
const MGF_ABS_TOL: f64 = 1e-13;
const THETA_TOL: f64 = 1e-10;
const THETA_MAX: f64 = 1e8;
const GRADING_STEPS: i32 = 40;

/// Physical servers, each with a capacity per resource type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct ResourcePool {
    servers: Vec<Vec<f64>>,
}

impl ResourcePool {
    pub fn new(servers: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = servers.first() else {
            return Err(param("resource pool needs at least one server"));
        };
        let width = first.len();
        if width == 0 {
            return Err(param("servers need at least one resource type"));
        }
        for (i, s) in servers.iter().enumerate() {
            if s.len() != width {
                return Err(param(format!(
                    "server {i} lists {} resource types, expected {width}",
                    s.len()
                )));
            }
            if s.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
                return Err(param(format!("server {i} has a negative or non-finite capacity")));
            }
        }
        Ok(Self { servers })
    }

    pub fn servers(&self) -> &[Vec<f64>] {
        &self.servers
    }

    pub fn resource_count(&self) -> usize {
        self.servers[0].len()
    }
}

impl TryFrom<Vec<Vec<f64>>> for ResourcePool {
    type Error = Error;
    fn try_from(v: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ResourcePool> for Vec<Vec<f64>> {
    fn from(p: ResourcePool) -> Self {
        p.servers
    }
}

/// A service tier: request envelope, execution cap, per-invocation demand
/// and execution-time law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTier", into = "RawTier")]
pub struct TierSpec {
    pub id: u32,
    pub curve: BurstinessCurve,
    pub s_max: f64,
    pub demand: Vec<f64>,
    pub model: ServiceTimeModel,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTier {
    id: u32,
    curve: BurstinessCurve,
    s_max: f64,
    demand: Vec<f64>,
    model: ServiceTimeModel,
}

impl TryFrom<RawTier> for TierSpec {
    type Error = Error;
    fn try_from(r: RawTier) -> Result<Self> {
        TierSpec::new(r.id, r.curve, r.s_max, r.demand, r.model)
    }
}

impl From<TierSpec> for RawTier {
    fn from(t: TierSpec) -> Self {
        RawTier {
            id: t.id,
            curve: t.curve,
            s_max: t.s_max,
            demand: t.demand,
            model: t.model,
        }
    }
}

impl TierSpec {
    pub fn new(id: u32, curve: BurstinessCurve, s_max: f64, demand: Vec<f64>, model: ServiceTimeModel) -> Result<Self> {
        if !(s_max > 0.0 && s_max.is_finite()) {
            return Err(param(format!("tier {id}: s_max must be positive, got {s_max}")));
        }
        if model.s_max() > s_max * (1.0 + 1e-12) {
            return Err(param(format!(
                "tier {id}: model cap {} exceeds the tier's s_max {s_max}",
                model.s_max()
            )));
        }
        if demand.iter().any(|d| !(d.is_finite() && *d >= 0.0)) || !demand.iter().any(|d| *d > 0.0) {
            return Err(param(format!("tier {id}: demand must be nonnegative with a positive entry")));
        }
        Ok(Self {
            id,
            curve,
            s_max,
            demand,
            model,
        })
    }

    /// Deterministic worst-case occupancy `g(S_max)` of one tenant.
    pub fn requirement(&self) -> f64 {
        self.curve.value(self.s_max)
    }

    /// `max_r d_r / c_r` for one server; `None` if some demanded resource
    /// has zero capacity.
    pub fn scaled_demand(&self, capacity: &[f64]) -> Result<Option<f64>> {
        if capacity.len() != self.demand.len() {
            return Err(param(format!(
                "tier {}: demand has {} resources but the server has {}",
                self.id,
                self.demand.len(),
                capacity.len()
            )));
        }
        let mut worst = 0.0f64;
        for (d, c) in self.demand.iter().zip(capacity) {
            if *d == 0.0 {
                continue;
            }
            if *c == 0.0 {
                return Ok(None);
            }
            worst = worst.max(d / c);
        }
        Ok(Some(worst))
    }
}

/// Outcome of a Chernoff-type bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub probability_bound: f64,
    /// Maximizing θ; `+∞` when the overflow is impossible.
    pub theta_star: f64,
    /// `sup_θ {θ K - M(θ)}`; `probability_bound = min(1, exp(-exponent))`.
    pub exponent: f64,
    pub diagnostics: QuadDiagnostics,
}

impl BoundResult {
    pub(crate) fn certain_overflow_free() -> Self {
        Self {
            probability_bound: 0.0,
            theta_star: f64::INFINITY,
            exponent: f64::INFINITY,
            diagnostics: QuadDiagnostics::default(),
        }
    }

    fn trivial(diagnostics: QuadDiagnostics) -> Self {
        Self {
            probability_bound: 1.0,
            theta_star: 0.0,
            exponent: 0.0,
            diagnostics,
        }
    }
}

/// `K = Σ_i min_r floor(c_{i,r} / d_r)`, skipping resources with `d_r = 0`.
pub fn capacity_servers(pool: &ResourcePool, demand: &[f64]) -> Result<u64> {
    if demand.len() != pool.resource_count() {
        return Err(param(format!(
            "demand lists {} resources, pool has {}",
            demand.len(),
            pool.resource_count()
        )));
    }
    if demand.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(param("demand entries must be finite and nonnegative"));
    }
    if demand.iter().all(|d| *d == 0.0) {
        return Err(param("demand vector is all zero"));
    }
    Ok(pool
        .servers()
        .iter()
        .map(|caps| {
            caps.iter()
                .zip(demand)
                .filter(|(_, d)| **d > 0.0)
                .map(|(c, d)| (c / d + 1e-9).floor() as u64)
                .min()
                .unwrap_or(0)
        })
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoBlocking {
    pub required: f64,
    pub ok: bool,
}

/// Deterministic requirement `Σ_n g_{j(n)}(S_{j(n),max})` against `K` servers.
pub fn no_blocking(tiers: &[(TierSpec, usize)], k: f64) -> Result<NoBlocking> {
    if !(k >= 0.0) {
        return Err(param(format!("server count must be nonnegative, got {k}")));
    }
    let required: f64 = tiers.iter().map(|(t, n)| t.requirement() * *n as f64).sum();
    Ok(NoBlocking {
        required,
        ok: required <= k + 1e-9,
    })
}

/// The log-MGF bound `M(θ)` of one envelope/model pair, with the `Φ`
/// values at each quadrature level cached across θ evaluations.
pub struct LogMgf {
    g0: f64,
    g_max: f64,
    spans: Vec<Span>,
    levels: Vec<OnceLock<Vec<(f64, f64)>>>,
    model: ServiceTimeModel,
}

impl LogMgf {
    pub fn new(curve: &BurstinessCurve, model: &ServiceTimeModel) -> Self {
        let s_max = model.s_max();
        let mut cuts: Vec<f64> = curve.breakpoints().into_iter().filter(|&t| t > 0.0 && t < s_max).collect();
        cuts.extend(model.kinks());
        cuts.push(0.0);
        cuts.push(s_max);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        // Φ vanishes linearly at s_max, which gives log(Φ e^θ + 1 - Φ) a
        // boundary layer of width ~e^-θ there; grade the mesh toward it
        if cuts.len() >= 2 {
            let a = cuts[cuts.len() - 2];
            let width = s_max - a;
            cuts.extend((1..=GRADING_STEPS).map(|k| s_max - width * 0.5f64.powi(k)));
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
        }
        let spans = cuts
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                // slope of g just inside the span
                let rate = curve
                    .pieces()
                    .iter()
                    .min_by(|a, b| a.at(mid).total_cmp(&b.at(mid)))
                    .map(|p| p.rate)
                    .unwrap_or(0.0);
                Span {
                    a: w[0],
                    b: w[1],
                    scale: rate,
                }
            })
            .collect();
        Self {
            g0: curve.at_zero(),
            g_max: curve.value(s_max),
            spans,
            levels: (0..=MAX_LEVEL).map(|_| OnceLock::new()).collect(),
            model: model.clone(),
        }
    }

    /// `g(0)`.
    pub fn floor(&self) -> f64 {
        self.g0
    }

    /// `g(s_max)`, the deterministic maximum of `Q`.
    pub fn ceiling(&self) -> f64 {
        self.g_max
    }

    fn level(&self, level: usize) -> &[(f64, f64)] {
        self.levels[level].get_or_init(|| {
            quadrature::nodes(&self.spans, level)
                .into_iter()
                .map(|(t, w)| (w, self.model.ccdf(t)))
                .collect()
        })
    }

    fn refine<F: Fn(f64) -> f64>(&self, base: f64, f: F) -> Integral {
        let sum = |level: usize| -> f64 { self.level(level).iter().map(|&(w, phi)| w * f(phi)).sum() };
        let mut prev = sum(0);
        let mut out = Integral {
            value: base + prev,
            diagnostics: QuadDiagnostics::default(),
        };
        for level in 1..=MAX_LEVEL {
            let cur = sum(level);
            let err = (cur - prev).abs();
            out = Integral {
                value: base + cur,
                diagnostics: QuadDiagnostics {
                    panels: quadrature::panels_at(level),
                    nodes: self.level(level).len(),
                    est_error: err,
                },
            };
            if err <= MGF_REL_TOL * out.value.abs() + MGF_ABS_TOL {
                break;
            }
            prev = cur;
        }
        out
    }

    /// `M(θ)` with quadrature diagnostics.
    pub fn value(&self, theta: f64) -> Integral {
        if theta == 0.0 {
            return Integral {
                value: 0.0,
                diagnostics: QuadDiagnostics::default(),
            };
        }
        self.refine(theta * self.g0, |phi| log_term(phi, theta))
    }

    /// `M(θ)` at a fixed quadrature level, for convergence checks.
    pub fn value_at_level(&self, theta: f64, level: usize) -> f64 {
        theta * self.g0 + self.level(level).iter().map(|&(w, phi)| w * log_term(phi, theta)).sum::<f64>()
    }

    /// `M'(θ) = g(0) + ∫ Φ e^θ / (Φ e^θ + 1 - Φ) dx`.
    pub fn slope(&self, theta: f64) -> f64 {
        self.refine(self.g0, |phi| tilted(phi, theta)).value
    }

    /// `E g(S) = g(0) + ∫ Φ(x) dx = M'(0)`.
    pub fn expected(&self) -> f64 {
        self.refine(self.g0, |phi| phi).value
    }
}

#[inline]
fn log_term(phi: f64, theta: f64) -> f64 {
    if phi <= 0.0 {
        0.0
    } else if phi >= 1.0 {
        theta
    } else if theta < 30.0 {
        (phi * theta.exp_m1()).ln_1p()
    } else {
        theta + (phi + (1.0 - phi) * (-theta).exp()).ln()
    }
}

#[inline]
fn tilted(phi: f64, theta: f64) -> f64 {
    if phi <= 0.0 {
        0.0
    } else {
        phi / (phi + (1.0 - phi) * (-theta).exp())
    }
}

/// `M(θ)` for one envelope and model.
pub fn log_mgf(curve: &BurstinessCurve, model: &ServiceTimeModel, theta: f64) -> Result<f64> {
    if !(theta >= 0.0) {
        return Err(param(format!("θ must be nonnegative, got {theta}")));
    }
    Ok(LogMgf::new(curve, model).value(theta).value)
}

/// `E g(S)`, the bound on `E Q`.
pub fn expected_g_of_s(curve: &BurstinessCurve, model: &ServiceTimeModel) -> f64 {
    LogMgf::new(curve, model).expected()
}

/// Maximizes `θ level - Σ M(θ)` given its value and slope.
///
/// `mean` and `max` are the slope at 0 and its supremum; the slope is
/// increasing in between, so the optimum is found by bisection on it.
fn legendre<S, V>(level: f64, mean: f64, max: f64, slope: S, value: V) -> Result<BoundResult>
where
    S: Fn(f64) -> f64,
    V: Fn(f64) -> Integral,
{
    if level >= max * (1.0 - 1e-12) {
        return Ok(BoundResult::certain_overflow_free());
    }
    if level <= mean {
        return Ok(BoundResult::trivial(QuadDiagnostics::default()));
    }
    let gradient = |theta: f64| level - slope(theta);
    let (mut lo, mut hi) = (0.0, 1e-8);
    if gradient(hi) > 0.0 {
        lo = hi;
        hi = 1.0;
        while gradient(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > THETA_MAX {
                return Err(Error::Numerical(format!(
                    "could not bracket the optimal θ for level {level} (mean {mean}, max {max}); slope at {lo} is {}",
                    slope(lo)
                )));
            }
        }
    }
    while hi - lo > THETA_TOL {
        let mid = 0.5 * (lo + hi);
        if gradient(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    let m = value(theta);
    let exponent = (theta * level - m.value).max(0.0);
    Ok(BoundResult {
        probability_bound: (-exponent).exp().min(1.0),
        theta_star: theta,
        exponent,
        diagnostics: m.diagnostics,
    })
}

/// Chernoff bound on `P(Q > K)` for an infinite-server system fed by
/// `g`-conformant arrivals with i.i.d. service times.
pub fn chernoff_tail(curve: &BurstinessCurve, model: &ServiceTimeModel, k: f64) -> Result<BoundResult> {
    chernoff_with(&LogMgf::new(curve, model), k)
}

pub fn chernoff_with(mgf: &LogMgf, k: f64) -> Result<BoundResult> {
    if !(k >= 0.0) {
        return Err(param(format!("server count must be nonnegative, got {k}")));
    }
    legendre(k, mgf.expected(), mgf.ceiling(), |t| mgf.slope(t), |t| mgf.value(t))
}

/// Markov bound `min(1, E g(S) / K)`; needs only identically distributed
/// service times.
pub fn markov_tail(curve: &BurstinessCurve, model: &ServiceTimeModel, k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(param(format!("Markov bound needs K > 0, got {k}")));
    }
    Ok((expected_g_of_s(curve, model) / k).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Chernoff,
    Markov,
    NoBlocking,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Chernoff => "chernoff",
            Method::Markov => "markov",
            Method::NoBlocking => "no_blocking",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chernoff" => Ok(Method::Chernoff),
            "markov" => Ok(Method::Markov),
            "no_blocking" | "no-blocking" => Ok(Method::NoBlocking),
            other => Err(param(format!("unknown method {other:?}"))),
        }
    }
}

/// Smallest integer `K` whose bound is at most `epsilon`.
pub fn min_servers(curve: &BurstinessCurve, model: &ServiceTimeModel, epsilon: f64, method: Method) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(param(format!("ε must lie in (0, 1), got {epsilon}")));
    }
    match method {
        Method::NoBlocking => Ok((curve.value(model.s_max()) - 1e-9).ceil().max(0.0) as u64),
        Method::Markov => {
            let eg = expected_g_of_s(curve, model);
            search_min(|k| Ok(k > 0 && (eg / k as f64).min(1.0) <= epsilon))
        }
        Method::Chernoff => {
            let mgf = LogMgf::new(curve, model);
            search_min(|k| Ok(chernoff_with(&mgf, k as f64)?.probability_bound <= epsilon))
        }
    }
}

/// Exponential then binary search for the first `k` with `ok(k)`, given
/// that `ok` is monotone.
fn search_min<F: FnMut(u64) -> Result<bool>>(mut ok: F) -> Result<u64> {
    if ok(0)? {
        return Ok(0);
    }
    let mut lo = 0u64;
    let mut hi = 1u64;
    while !ok(hi)? {
        lo = hi;
        hi = hi
            .checked_mul(2)
            .ok_or_else(|| Error::Numerical("server search overflowed".into()))?;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Overflow bound on one physical server shared by several tiers, each
/// with its own aggregate envelope, model and demand vector.
pub fn multiclass_overflow(capacity: &[f64], tiers: &[TierSpec]) -> Result<BoundResult> {
    let mut parts: Vec<(f64, LogMgf)> = Vec::with_capacity(tiers.len());
    for tier in tiers {
        let w = tier.scaled_demand(capacity)?.ok_or_else(|| {
            param(format!(
                "tier {} demands a resource with zero capacity on this server",
                tier.id
            ))
        })?;
        if w == 0.0 {
            log::warn!("tier {} has zero scaled demand; it does not contribute", tier.id);
            continue;
        }
        parts.push((w, LogMgf::new(&tier.curve, &tier.model)));
    }
    let mean: f64 = parts.iter().map(|(w, m)| w * m.expected()).sum();
    let max: f64 = parts.iter().map(|(w, m)| w * m.ceiling()).sum();
    if max <= 1.0 {
        return Ok(BoundResult::certain_overflow_free());
    }
    legendre(
        1.0,
        mean,
        max,
        |t| parts.iter().map(|(w, m)| w * m.slope(t * w)).sum(),
        |t| {
            let mut value = 0.0;
            let mut diag = QuadDiagnostics::default();
            for (w, m) in &parts {
                let part = m.value(t * w);
                value += part.value;
                diag.panels = diag.panels.max(part.diagnostics.panels);
                diag.nodes += part.diagnostics.nodes;
                diag.est_error += part.diagnostics.est_error;
            }
            Integral { value, diagnostics: diag }
        },
    )
}

/// Erlang-B blocking probability via `B(k) = A B(k-1) / (k + A B(k-1))`.
pub fn erlang_b(offered_load: f64, k: u64) -> Result<f64> {
    if !(offered_load > 0.0 && offered_load.is_finite()) {
        return Err(param(format!("offered load must be positive, got {offered_load}")));
    }
    let mut b = 1.0;
    for i in 1..=k {
        b = offered_load * b / (i as f64 + offered_load * b);
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> (BurstinessCurve, ServiceTimeModel) {
        (
            BurstinessCurve::token_bucket(5.0, 100.0).unwrap(),
            ServiceTimeModel::weibull(1.0, 5.0, 1.4).unwrap(),
        )
    }

    fn reference_tier() -> TierSpec {
        let (g, m) = reference();
        TierSpec::new(1, g, 1.4, vec![1.0], m).unwrap()
    }

    #[test]
    fn capacity_examples() {
        let one = ResourcePool::new(vec![vec![8.0, 16384.0]]).unwrap();
        let demand = [1.0 / 12.0, 128.0];
        assert_eq!(capacity_servers(&one, &demand).unwrap(), 96);
        let two = ResourcePool::new(vec![vec![8.0, 16384.0], vec![8.0, 16384.0]]).unwrap();
        assert_eq!(capacity_servers(&two, &demand).unwrap(), 192);
        assert_eq!(capacity_servers(&one, &[0.0, 128.0]).unwrap(), 128);
        assert!(capacity_servers(&one, &[0.0, 0.0]).is_err());
        assert!(capacity_servers(&one, &[1.0]).is_err());
    }

    #[test]
    fn no_blocking_examples() {
        let t = reference_tier();
        let r = no_blocking(&[(t.clone(), 1)], 145.0).unwrap();
        assert!((r.required - 145.0).abs() < 1e-9 && r.ok);
        let empty = no_blocking(&[], 0.0).unwrap();
        assert_eq!(empty.required, 0.0);
        assert!(empty.ok);
        assert!((no_blocking(&[(t, 2)], 300.0).unwrap().required - 290.0).abs() < 1e-9);
    }

    #[test]
    fn log_mgf_at_zero_and_deterministic_service() {
        let (g, m) = reference();
        assert_eq!(log_mgf(&g, &m, 0.0).unwrap(), 0.0);
        let det = ServiceTimeModel::point_mass(0.8).unwrap();
        for theta in [0.1, 1.0, 3.0] {
            let v = log_mgf(&g, &det, theta).unwrap();
            assert!((v - theta * 85.0).abs() < 1e-9, "{v}");
        }
        assert!(log_mgf(&g, &m, -1.0).is_err());
    }

    #[test]
    fn log_mgf_slope_at_zero_is_expected_g() {
        let (g, m) = reference();
        let h = 1e-6;
        let fd = (log_mgf(&g, &m, h).unwrap() - log_mgf(&g, &m, 0.0).unwrap()) / h;
        let eg = expected_g_of_s(&g, &m);
        assert!((fd - eg).abs() / eg < 1e-4, "{fd} vs {eg}");
    }

    #[test]
    fn expected_g_reference() {
        let (g, m) = reference();
        let eg = expected_g_of_s(&g, &m);
        assert!((eg - 96.5).abs() < 0.1, "{eg}");
        assert!((eg - (5.0 + 100.0 * m.mean())).abs() < 1e-8);
        let det = ServiceTimeModel::point_mass(0.8).unwrap();
        assert!((expected_g_of_s(&g, &det) - 85.0).abs() < 1e-9);
    }

    #[test]
    fn chernoff_extremes() {
        let (g, m) = reference();
        assert_eq!(chernoff_tail(&g, &m, 145.0).unwrap().probability_bound, 0.0);
        let low = chernoff_tail(&g, &m, 90.0).unwrap();
        assert_eq!(low.probability_bound, 1.0);
        assert_eq!(low.theta_star, 0.0);
        assert!(chernoff_tail(&g, &m, -1.0).is_err());
    }

    #[test]
    fn chernoff_optimum_matches_theta_grid() {
        let (g, m) = reference();
        let mgf = LogMgf::new(&g, &m);
        let r = chernoff_with(&mgf, 105.0).unwrap();
        let grid_best = (1..4000)
            .map(|i| i as f64 * 1e-3)
            .map(|t| t * 105.0 - mgf.value(t).value)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(r.exponent >= grid_best - 1e-9);
        assert!(r.exponent - grid_best < 1e-4);
    }

    #[test]
    fn markov_examples() {
        let (g, m) = reference();
        let eg = expected_g_of_s(&g, &m);
        assert!((markov_tail(&g, &m, 9650.0).unwrap() - 0.01).abs() < 1e-4);
        assert!((markov_tail(&g, &m, 9650.0).unwrap() - eg / 9650.0).abs() < 1e-15);
        assert!(markov_tail(&g, &m, 1e12).unwrap() < 1e-9);
        let det = ServiceTimeModel::point_mass(0.8).unwrap();
        assert!((markov_tail(&g, &det, 170.0).unwrap() - 0.5).abs() < 1e-12);
        assert!(markov_tail(&g, &m, 0.0).is_err());
    }

    #[test]
    fn min_servers_reference() {
        let (g, m) = reference();
        let eg = expected_g_of_s(&g, &m);
        assert_eq!(min_servers(&g, &m, 0.01, Method::NoBlocking).unwrap(), 145);
        assert_eq!(min_servers(&g, &m, 0.01, Method::Markov).unwrap(), (eg / 0.01).ceil() as u64);
        let k = min_servers(&g, &m, 0.01, Method::Chernoff).unwrap();
        assert!(chernoff_tail(&g, &m, k as f64).unwrap().probability_bound <= 0.01);
        assert!(chernoff_tail(&g, &m, k as f64 - 1.0).unwrap().probability_bound > 0.01);
        assert!((107..=109).contains(&k), "{k}");
        let half = min_servers(&g, &m, 0.5, Method::Chernoff).unwrap();
        assert!(half as f64 >= eg && half <= k);
        assert!(min_servers(&g, &m, 1.0, Method::Chernoff).is_err());
    }

    #[test]
    fn multiclass_single_tier_reduces_to_chernoff() {
        let t = reference_tier();
        for k in [100.0, 108.0, 120.0] {
            let mc = multiclass_overflow(&[k], std::slice::from_ref(&t)).unwrap();
            let ch = chernoff_tail(&t.curve, &t.model, k).unwrap();
            let rel = (mc.probability_bound - ch.probability_bound).abs() / ch.probability_bound;
            assert!(rel < 1e-8, "K={k}: {} vs {}", mc.probability_bound, ch.probability_bound);
        }
    }

    #[test]
    fn multiclass_deterministic_no_overflow() {
        let t = reference_tier();
        assert_eq!(multiclass_overflow(&[150.0], std::slice::from_ref(&t)).unwrap().probability_bound, 0.0);
        assert!(multiclass_overflow(&[0.0], &[t]).is_err());
    }

    #[test]
    fn erlang_b_examples() {
        assert_eq!(erlang_b(1.0, 1).unwrap(), 0.5);
        assert_eq!(erlang_b(1.0, 0).unwrap(), 1.0);
        // direct summation A^K/K! / Σ A^k/k!
        let a: f64 = 10.0;
        let mut terms = vec![1.0f64];
        for k in 1..=10 {
            let prev = terms[k - 1];
            terms.push(prev * a / k as f64);
        }
        let direct = terms[10] / terms.iter().sum::<f64>();
        assert!((erlang_b(a, 10).unwrap() - direct).abs() < 1e-12);
        assert!(erlang_b(0.0, 3).is_err());
    }
}

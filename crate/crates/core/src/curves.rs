//! Burstiness curves and token-bucket regulation.
//!
//! A [`BurstinessCurve`] is the concave envelope `g(t) = min_k (offset_k +
//! rate_k * t)`. It bounds how many requests may arrive in any window of
//! length `t`. The dual token bucket `min{b + πt, σ + ρt}` is the common
//! two-piece case; aggregate and per-server envelopes are built with
//! [`BurstinessCurve::sum`] and [`BurstinessCurve::scale`].

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// Absolute tolerance for the domination test during canonicalization.
const DOMINATION_TOL: f64 = 1e-12;

/// Slack allowed when comparing fluid token levels against whole requests.
const TOKEN_EPS: f64 = 1e-9;

/// One affine piece `offset + rate * t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub offset: f64,
    pub rate: f64,
}

impl Piece {
    pub fn new(offset: f64, rate: f64) -> Self {
        Self { offset, rate }
    }

    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        self.offset + self.rate * t
    }
}

/// Concave, nondecreasing, nonnegative piecewise-linear envelope.
///
/// Pieces are kept in canonical form: strictly decreasing rate, strictly
/// increasing offset, and every piece is the active minimum somewhere on
/// `t >= 0`. Serialized as a list of `[offset, rate]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct BurstinessCurve {
    pieces: Vec<Piece>,
}

impl TryFrom<Vec<[f64; 2]>> for BurstinessCurve {
    type Error = Error;

    fn try_from(pairs: Vec<[f64; 2]>) -> Result<Self> {
        BurstinessCurve::new(pairs.into_iter().map(|[o, r]| Piece::new(o, r)).collect())
    }
}

impl From<BurstinessCurve> for Vec<[f64; 2]> {
    fn from(c: BurstinessCurve) -> Self {
        c.pieces.iter().map(|p| [p.offset, p.rate]).collect()
    }
}

impl BurstinessCurve {
    /// Builds a curve from arbitrary pieces, dropping every piece that is
    /// never the active minimum on `t >= 0`.
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(param("a burstiness curve needs at least one piece"));
        }
        for p in &pieces {
            if !(p.offset.is_finite() && p.rate.is_finite()) || p.offset < 0.0 || p.rate < 0.0 {
                return Err(param(format!(
                    "curve pieces must be finite and nonnegative, got offset {} rate {}",
                    p.offset, p.rate
                )));
            }
        }
        Ok(Self {
            pieces: canonicalize(pieces),
        })
    }

    /// Single token bucket `offset + rate * t`.
    pub fn token_bucket(depth: f64, rate: f64) -> Result<Self> {
        Self::new(vec![Piece::new(depth, rate)])
    }

    /// Dual token bucket `min{b + πt, σ + ρt}` with `π > ρ > 0` and `σ > b > 0`.
    pub fn dual_token_bucket(b: f64, peak: f64, sigma: f64, rho: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(param(format!("sustainable rate must satisfy ρ > 0 (ρ = {rho})")));
        }
        if !(peak > rho) {
            return Err(param(format!("peak rate must satisfy π > ρ (π = {peak}, ρ = {rho})")));
        }
        if !(b > 0.0) {
            return Err(param(format!("peak bucket depth must satisfy b > 0 (b = {b})")));
        }
        if !(sigma > b) {
            return Err(param(format!("sustainable burst must satisfy σ > b (σ = {sigma}, b = {b})")));
        }
        Self::new(vec![Piece::new(b, peak), Piece::new(sigma, rho)])
    }

    /// The identically zero envelope.
    pub fn zero() -> Self {
        Self {
            pieces: vec![Piece::new(0.0, 0.0)],
        }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// `g(t)`; negative or NaN `t` is a domain error.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("curve evaluated at t = {t}")));
        }
        Ok(self.value(t))
    }

    /// `g(t)` without the domain check; callers guarantee `t >= 0`.
    #[inline]
    pub(crate) fn value(&self, t: f64) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.at(t))
            .fold(f64::INFINITY, f64::min)
    }

    /// `g(0)`, the smallest offset.
    pub fn at_zero(&self) -> f64 {
        self.pieces[0].offset
    }

    /// Long-run rate (slope of the last piece).
    pub fn sustained_rate(&self) -> f64 {
        self.pieces[self.pieces.len() - 1].rate
    }

    /// Times where the active piece changes, in increasing order.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces
            .windows(2)
            .map(|w| (w[1].offset - w[0].offset) / (w[0].rate - w[1].rate))
            .collect()
    }

    /// Smallest `t >= 0` with `g(t) >= y`; `+∞` if `y` exceeds the curve's
    /// supremum. Negative `y` is a domain error.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::Domain(format!("curve inverse at y = {y}")));
        }
        Ok(self.inverse_unchecked(y))
    }

    pub(crate) fn inverse_unchecked(&self, y: f64) -> f64 {
        if y <= self.at_zero() {
            return 0.0;
        }
        let bps = self.breakpoints();
        for (k, p) in self.pieces.iter().enumerate() {
            let end = bps.get(k).copied().unwrap_or(f64::INFINITY);
            let end_value = if end.is_finite() {
                p.at(end)
            } else if p.rate == 0.0 {
                p.offset
            } else {
                f64::INFINITY
            };
            if y <= end_value {
                if p.rate == 0.0 {
                    // flat segment reached exactly at its left endpoint
                    return if k == 0 { 0.0 } else { bps[k - 1] };
                }
                let start = if k == 0 { 0.0 } else { bps[k - 1] };
                return ((y - p.offset) / p.rate).max(start);
            }
            if p.rate == 0.0 {
                return f64::INFINITY;
            }
        }
        f64::INFINITY
    }

    /// Pointwise sum of the curves.
    pub fn sum<'a, I>(curves: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a BurstinessCurve>,
    {
        let curves: Vec<&BurstinessCurve> = curves.into_iter().collect();
        if curves.is_empty() {
            return Err(param("sum of an empty list of curves"));
        }
        let mut taus: Vec<f64> = curves.iter().flat_map(|c| c.breakpoints()).collect();
        taus.sort_by(f64::total_cmp);
        taus.dedup_by(|a, b| (*a - *b).abs() <= DOMINATION_TOL);

        let total = |t: f64| curves.iter().map(|c| c.value(t)).sum::<f64>();
        let slope = |t: f64| -> f64 {
            // rate of each curve's piece active just after t
            curves.iter().map(|c| c.active_piece(t).rate).sum()
        };
        let mut pieces = Vec::with_capacity(taus.len() + 1);
        let mut starts = vec![0.0];
        starts.extend(taus.iter().copied().filter(|&t| t > 0.0));
        for start in starts {
            let s = slope(start);
            let offset = (total(start) - s * start).max(0.0);
            pieces.push(Piece::new(offset, s));
        }
        Self::new(pieces)
    }

    /// Multiplies every offset and rate by `alpha >= 0`.
    pub fn scale(&self, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(param(format!("scale factor must be finite and nonnegative, got {alpha}")));
        }
        Self::new(
            self.pieces
                .iter()
                .map(|p| Piece::new(p.offset * alpha, p.rate * alpha))
                .collect(),
        )
    }

    /// Piece that is active on `[t, t + dt)` for small `dt`.
    fn active_piece(&self, t: f64) -> Piece {
        let bps = self.breakpoints();
        let idx = bps.iter().take_while(|&&b| b <= t + DOMINATION_TOL).count();
        self.pieces[idx]
    }

    /// Whether the sorted trace `(timestamp, count)` satisfies
    /// `A(s, t] <= g(t - s)` for every window.
    ///
    /// Checked per piece with the backlog recursion
    /// `V <- max(V - rate * dt, 0) + count`, which equals the largest excess
    /// `A[i..=j] - rate * (t_j - t_i)` over all window starts.
    pub fn admits_trace(&self, trace: &[(f64, u64)]) -> bool {
        let slack = 1e-6;
        self.pieces.iter().all(|p| {
            let mut backlog = 0.0f64;
            let mut last = f64::NEG_INFINITY;
            trace.iter().all(|&(t, n)| {
                let drained = if last.is_finite() { backlog - p.rate * (t - last) } else { 0.0 };
                backlog = drained.max(0.0) + n as f64;
                last = t;
                backlog <= p.offset + slack
            })
        })
    }
}

/// Lower envelope on `t >= 0`, sorted by strictly decreasing rate.
fn canonicalize(mut pieces: Vec<Piece>) -> Vec<Piece> {
    // decreasing rate; among equal rates the smallest offset first
    pieces.sort_by(|a, b| b.rate.total_cmp(&a.rate).then(a.offset.total_cmp(&b.offset)));
    let mut kept: Vec<Piece> = Vec::with_capacity(pieces.len());
    for p in pieces {
        // drop pieces dominated by an already kept one (offset and rate no smaller)
        if let Some(last) = kept.last() {
            if (last.rate - p.rate).abs() <= DOMINATION_TOL {
                continue;
            }
        }
        // p has a smaller rate than every kept piece; it dominates any kept
        // piece whose offset is not smaller
        while let Some(last) = kept.last() {
            if last.offset >= p.offset - DOMINATION_TOL {
                kept.pop();
            } else {
                break;
            }
        }
        // remove middle pieces that never reach the envelope
        while kept.len() >= 2 {
            let a = kept[kept.len() - 2];
            let m = kept[kept.len() - 1];
            let t_am = (m.offset - a.offset) / (a.rate - m.rate);
            let t_ap = (p.offset - a.offset) / (a.rate - p.rate);
            if t_ap <= t_am + DOMINATION_TOL {
                kept.pop();
            } else {
                break;
            }
        }
        kept.push(p);
    }
    kept
}

/// Runtime regulator enforcing a burstiness curve with one token bucket per
/// piece. Buckets start full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenBucketState {
    buckets: Vec<Bucket>,
    last_update: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Bucket {
    tokens: f64,
    depth: f64,
    rate: f64,
}

impl TokenBucketState {
    pub fn new(curve: &BurstinessCurve, start: f64) -> Self {
        Self {
            buckets: curve
                .pieces()
                .iter()
                .map(|p| Bucket {
                    tokens: p.offset,
                    depth: p.offset,
                    rate: p.rate,
                })
                .collect(),
            last_update: start,
        }
    }

    pub fn last_update(&self) -> f64 {
        self.last_update
    }

    /// Current token level of each bucket, in piece order.
    pub fn tokens(&self) -> Vec<f64> {
        self.buckets.iter().map(|b| b.tokens).collect()
    }

    /// Refills to `now` and admits the largest prefix `m <= batch` that every
    /// bucket can cover. The remaining `batch - m` requests are dropped.
    pub fn regulate(&mut self, now: f64, batch: u64) -> Result<u64> {
        if now < self.last_update {
            return Err(Error::State(format!(
                "regulator time went backwards: {} < {}",
                now, self.last_update
            )));
        }
        let elapsed = now - self.last_update;
        self.last_update = now;
        let mut admit = batch as f64;
        for b in &mut self.buckets {
            b.tokens = (b.tokens + b.rate * elapsed).min(b.depth);
            admit = admit.min((b.tokens + TOKEN_EPS).floor());
        }
        let admit = admit.max(0.0);
        for b in &mut self.buckets {
            b.tokens = (b.tokens - admit).max(0.0);
        }
        Ok(admit as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(pairs: &[[f64; 2]]) -> BurstinessCurve {
        BurstinessCurve::try_from(pairs.to_vec()).unwrap()
    }

    #[test]
    fn dual_bucket_evaluates_min_of_pieces() {
        let g = BurstinessCurve::dual_token_bucket(5.0, 200.0, 40.0, 100.0).unwrap();
        assert_eq!(g.eval(0.0).unwrap(), 5.0);
        assert_eq!(g.eval(10.0).unwrap(), 40.0 + 1000.0);
        assert_eq!(g.pieces().len(), 2);
    }

    #[test]
    fn dual_bucket_rejects_bad_ordering() {
        let err = BurstinessCurve::dual_token_bucket(5.0, 100.0, 40.0, 100.0).unwrap_err();
        assert!(err.to_string().contains("π > ρ"), "{err}");
        let err = BurstinessCurve::dual_token_bucket(40.0, 200.0, 5.0, 100.0).unwrap_err();
        assert!(err.to_string().contains("σ > b"), "{err}");
        assert!(BurstinessCurve::dual_token_bucket(5.0, 200.0, 40.0, 0.0).is_err());
    }

    #[test]
    fn single_bucket_reference_values() {
        let g = c(&[[5.0, 100.0]]);
        assert_eq!(g.eval(0.0).unwrap(), 5.0);
        assert!((g.eval(1.4).unwrap() - 145.0).abs() < 1e-12);
        assert!(matches!(g.eval(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn inverse_examples() {
        let g = c(&[[5.0, 100.0]]);
        assert!((g.inverse(145.0).unwrap() - 1.4).abs() < 1e-12);
        assert_eq!(g.inverse(3.0).unwrap(), 0.0);
        let d = c(&[[5.0, 200.0], [40.0, 100.0]]);
        assert!((d.breakpoints()[0] - 0.35).abs() < 1e-12);
        // brute-force scan for the first crossing of 105
        let scan = (0..=100_000)
            .map(|i| i as f64 * 1e-5)
            .find(|&t| d.value(t) >= 105.0 - 1e-9)
            .unwrap();
        assert!((scan - 0.65).abs() < 2e-5);
        assert!((d.inverse(105.0).unwrap() - 0.65).abs() < 1e-12);
    }

    #[test]
    fn inverse_on_flat_curve() {
        let g = c(&[[2.0, 10.0], [7.0, 0.0]]);
        assert!((g.inverse(7.0).unwrap() - 0.5).abs() < 1e-12);
        assert!(g.inverse(7.5).unwrap().is_infinite());
        assert!(matches!(g.inverse(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn canonical_form_drops_dominated_pieces() {
        let g = c(&[[40.0, 100.0], [50.0, 150.0], [5.0, 200.0], [60.0, 100.0]]);
        assert_eq!(g.pieces(), &[Piece::new(5.0, 200.0), Piece::new(40.0, 100.0)]);
        // middle piece above the envelope of its neighbours
        let h = c(&[[0.0, 10.0], [100.0, 5.0], [10.0, 0.0]]);
        assert_eq!(h.pieces(), &[Piece::new(0.0, 10.0), Piece::new(10.0, 0.0)]);
    }

    #[test]
    fn sum_examples() {
        let g = c(&[[5.0, 100.0]]);
        assert_eq!(BurstinessCurve::sum([&g, &g]).unwrap(), c(&[[10.0, 200.0]]));

        let triple = BurstinessCurve::sum([&g, &g, &g]).unwrap();
        let scaled = g.scale(3.0).unwrap();
        for t in [0.0, 0.3, 1.0, 7.0] {
            assert!((triple.value(t) - scaled.value(t)).abs() < 1e-9);
        }

        let d = c(&[[5.0, 200.0], [40.0, 100.0]]);
        let e = c(&[[10.0, 50.0]]);
        let s = BurstinessCurve::sum([&d, &e]).unwrap();
        for t in [0.0, 0.35, 1.0, 10.0] {
            let want = d.value(t) + e.value(t);
            assert!((s.value(t) - want).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn scale_examples() {
        let g = c(&[[5.0, 100.0]]);
        assert_eq!(g.scale(1.0).unwrap(), g);
        assert_eq!(g.scale(0.5).unwrap(), c(&[[2.5, 50.0]]));
        assert!(g.scale(-0.1).is_err());
        assert_eq!(g.scale(0.0).unwrap(), BurstinessCurve::zero());
    }

    #[test]
    fn regulate_examples() {
        let g = c(&[[5.0, 100.0]]);
        let mut s = TokenBucketState::new(&g, 0.0);
        assert_eq!(s.regulate(0.0, 5).unwrap(), 5);
        assert_eq!(s.regulate(0.0, 5).unwrap(), 0);
        assert_eq!(s.regulate(0.02, 5).unwrap(), 2);
        assert!(matches!(s.regulate(0.01, 1), Err(Error::State(_))));
    }

    #[test]
    fn regulate_matches_discrete_token_count() {
        // integer tokens arriving every 0.01 time units
        let g = c(&[[5.0, 100.0]]);
        let mut s = TokenBucketState::new(&g, 0.0);
        s.regulate(0.0, 5).unwrap();
        let discrete_tokens = (0.02f64 / 0.01).round() as u64;
        assert_eq!(s.regulate(0.02, 5).unwrap(), discrete_tokens.min(5));
    }

    #[test]
    fn dual_regulator_respects_both_buckets() {
        let g = c(&[[5.0, 200.0], [40.0, 100.0]]);
        let mut s = TokenBucketState::new(&g, 0.0);
        let mut trace = Vec::new();
        let mut t = 0.0;
        for _ in 0..400 {
            let m = s.regulate(t, 3).unwrap();
            if m > 0 {
                trace.push((t, m));
            }
            t += 0.004;
        }
        assert!(g.admits_trace(&trace));
        let admitted: u64 = trace.iter().map(|x| x.1).sum();
        // long-run rate 100 over 1.6 time units plus burst 40
        assert!(admitted as f64 <= g.value(t) + 1e-9);
        assert!(admitted > 150);
    }

    #[test]
    fn curve_literal_round_trip() {
        let g: BurstinessCurve = serde_json::from_str("[[5,200],[40,100]]").unwrap();
        assert_eq!(serde_json::to_string(&g).unwrap(), "[[5.0,200.0],[40.0,100.0]]");
        assert!(serde_json::from_str::<BurstinessCurve>("[]").is_err());
        assert!(serde_json::from_str::<BurstinessCurve>("[[-1,2]]").is_err());
    }
}

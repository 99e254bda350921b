//! Tenant admission: deterministic no-blocking checks, single-tier Chernoff
//! overbooking, and per-server multiclass bounds.

use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundResult, ResourcePool, TierSpec};
use crate::curves::BurstinessCurve;
use crate::error::{param, Error, Result};

const WEIGHT_TOL: f64 = 1e-12;
const PROPORTION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tenant {
    pub id: u64,
    pub tier: u32,
    /// Share of the tenant's envelope routed to each server.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TenantRegistry {
    pub epsilon: f64,
    /// Lambda-server count for the single-pool policies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    /// Physical servers for the multiclass policy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub servers: Option<ResourcePool>,
    pub tiers: Vec<TierSpec>,
    #[serde(default)]
    pub tenants: Vec<Tenant>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Admit,
    Reject,
}

/// Outcome of one admission check. `bound_or_slack` is the remaining slack
/// for the no-blocking policy and the overflow bound otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub decision: Verdict,
    pub bound_or_slack: f64,
    pub per_server_bounds: Vec<f64>,
}

impl Decision {
    pub fn admitted(&self) -> bool {
        self.decision == Verdict::Admit
    }
}

impl TenantRegistry {
    pub fn new(epsilon: f64, tiers: Vec<TierSpec>) -> Result<Self> {
        let reg = Self {
            epsilon,
            k: None,
            servers: None,
            tiers,
            tenants: Vec::new(),
        };
        reg.validate()?;
        Ok(reg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(param(format!("ε must lie in (0, 1), got {}", self.epsilon)));
        }
        for (i, t) in self.tiers.iter().enumerate() {
            if self.tiers[..i].iter().any(|u| u.id == t.id) {
                return Err(param(format!("tier {} is listed twice", t.id)));
            }
        }
        for (i, n) in self.tenants.iter().enumerate() {
            self.tier(n.tier)?;
            if self.tenants[..i].iter().any(|m| m.id == n.id) {
                return Err(param(format!("tenant {} is listed twice", n.id)));
            }
            if !n.weights.is_empty() {
                check_weights(&n.weights)?;
                if let Some(pool) = &self.servers {
                    if n.weights.len() != pool.servers().len() {
                        return Err(param(format!(
                            "tenant {} has {} split weights for {} servers",
                            n.id,
                            n.weights.len(),
                            pool.servers().len()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn tier(&self, id: u32) -> Result<&TierSpec> {
        self.tiers.iter().find(|t| t.id == id).ok_or(Error::UnknownTier(id))
    }

    /// `Σ_n g_{j(n)}(S_{j(n),max})` over active tenants.
    pub fn requirement(&self) -> Result<f64> {
        self.tenants
            .iter()
            .map(|n| Ok(self.tier(n.tier)?.requirement()))
            .sum()
    }

    fn next_id(&self) -> u64 {
        self.tenants.iter().map(|n| n.id + 1).max().unwrap_or(1)
    }

    fn push(&mut self, tier: u32, weights: Vec<f64>) -> u64 {
        let id = self.next_id();
        self.tenants.push(Tenant { id, tier, weights });
        id
    }

    pub fn remove_tenant(&mut self, id: u64) -> Result<Tenant> {
        let pos = self
            .tenants
            .iter()
            .position(|n| n.id == id)
            .ok_or_else(|| param(format!("no active tenant with id {id}")))?;
        Ok(self.tenants.remove(pos))
    }

    /// Admits a tenant of `tier` if its worst case fits in what the active
    /// tenants leave of `k` servers.
    pub fn admit_no_blocking(&mut self, tier: u32, k: f64) -> Result<Decision> {
        let need = self.tier(tier)?.requirement();
        let slack = k - self.requirement()? - need;
        let admit = slack >= -1e-9;
        if admit {
            self.push(tier, Vec::new());
        }
        Ok(Decision {
            decision: if admit { Verdict::Admit } else { Verdict::Reject },
            bound_or_slack: if slack.abs() <= 1e-9 { 0.0 } else { slack },
            per_server_bounds: Vec::new(),
        })
    }

    /// Chernoff bound at `k` for the active tenants plus `extra`, all of
    /// which must share one execution-time model.
    pub fn single_tier_bound(&self, extra: Option<u32>, k: f64) -> Result<BoundResult> {
        let ids: Vec<u32> = self.tenants.iter().map(|n| n.tier).chain(extra).collect();
        let Some(first) = ids.first() else {
            return Ok(BoundResult::certain_overflow_free());
        };
        let model = &self.tier(*first)?.model;
        let mut curves = Vec::with_capacity(ids.len());
        for id in &ids {
            let t = self.tier(*id)?;
            if &t.model != model {
                return Err(Error::Config(format!(
                    "tier {id} has a different execution-time model from tier {first}; \
                     single-tier admission needs one shared model, use the multiclass policy"
                )));
            }
            curves.push(&t.curve);
        }
        let aggregate = BurstinessCurve::sum(curves)?;
        bounds::chernoff_tail(&aggregate, model, k)
    }

    /// Admits a tenant of `tier` if the overflow bound for the enlarged
    /// population at `k` servers stays within ε.
    pub fn admit_chernoff(&mut self, tier: u32, k: f64) -> Result<Decision> {
        self.tier(tier)?;
        let bound = self.single_tier_bound(Some(tier), k)?.probability_bound;
        let admit = bound <= self.epsilon;
        if admit {
            self.push(tier, Vec::new());
        }
        Ok(Decision {
            decision: if admit { Verdict::Admit } else { Verdict::Reject },
            bound_or_slack: bound,
            per_server_bounds: Vec::new(),
        })
    }

    /// Overflow bound on every server for the active tenants plus an
    /// optional candidate with its split weights.
    pub fn multiclass_bounds(&self, extra: Option<(u32, &[f64])>) -> Result<Vec<BoundResult>> {
        let pool = self
            .servers
            .as_ref()
            .ok_or_else(|| Error::Config("multiclass admission needs a server list".into()))?;
        let n_servers = pool.servers().len();
        let default = default_weights(n_servers);
        let mut members: Vec<(u32, &[f64])> = self
            .tenants
            .iter()
            .map(|n| {
                let w: &[f64] = if n.weights.is_empty() { &default } else { &n.weights };
                (n.tier, w)
            })
            .collect();
        if let Some((tier, w)) = extra {
            self.tier(tier)?;
            let w = if w.is_empty() { &default[..] } else { w };
            check_weights(w)?;
            if w.len() != n_servers {
                return Err(param(format!("candidate has {} split weights for {n_servers} servers", w.len())));
            }
            members.push((tier, w));
        }
        (0..n_servers)
            .map(|i| {
                let mut routed: Vec<TierSpec> = Vec::new();
                for tier in &self.tiers {
                    let share: f64 = members.iter().filter(|m| m.0 == tier.id).map(|m| m.1[i]).sum();
                    if share <= 0.0 {
                        continue;
                    }
                    let mut t = tier.clone();
                    t.curve = tier.curve.scale(share)?;
                    routed.push(t);
                }
                if routed.is_empty() {
                    return Ok(BoundResult::certain_overflow_free());
                }
                bounds::multiclass_overflow(&pool.servers()[i], &routed)
            })
            .collect()
    }

    /// Admits a tenant of `tier` if every server's multiclass bound stays
    /// within ε. Empty `weights` routes everything to server 0.
    pub fn admit_multiclass(&mut self, tier: u32, weights: &[f64]) -> Result<Decision> {
        let per_server: Vec<f64> = self
            .multiclass_bounds(Some((tier, weights)))?
            .iter()
            .map(|b| b.probability_bound)
            .collect();
        let worst = per_server.iter().copied().fold(0.0, f64::max);
        let admit = per_server.iter().all(|b| *b <= self.epsilon);
        if admit {
            self.push(tier, weights.to_vec());
        }
        Ok(Decision {
            decision: if admit { Verdict::Admit } else { Verdict::Reject },
            bound_or_slack: worst,
            per_server_bounds: per_server,
        })
    }
}

fn default_weights(n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n];
    if let Some(first) = w.first_mut() {
        *first = 1.0;
    }
    w
}

fn check_weights(w: &[f64]) -> Result<()> {
    if w.is_empty() || w.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(param("split weights must be nonnegative"));
    }
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOL * w.len() as f64 {
        return Err(param(format!("split weights sum to {total}, not 1")));
    }
    Ok(())
}

/// Splits an envelope across servers: one `scale(curve, α_i)` per weight.
pub fn split_demand(curve: &BurstinessCurve, weights: &[f64]) -> Result<Vec<BurstinessCurve>> {
    check_weights(weights)?;
    weights.iter().map(|a| curve.scale(*a)).collect()
}

/// Split weights proportional to each server's lambda-server capacity for
/// the given demand vector.
pub fn proportional_weights(pool: &ResourcePool, demand: &[f64]) -> Result<Vec<f64>> {
    let per: Vec<f64> = pool
        .servers()
        .iter()
        .map(|s| bounds::capacity_servers(&ResourcePool::new(vec![s.clone()])?, demand).map(|k| k as f64))
        .collect::<Result<_>>()?;
    let total: f64 = per.iter().sum();
    if total == 0.0 {
        return Err(param("no server can host a single invocation of this demand"));
    }
    Ok(per.iter().map(|k| k / total).collect())
}

/// `κ_j` with `d_j = κ_j d_1` for every tier, where tier 1 is the base.
pub fn atomic_factors(tiers: &[TierSpec]) -> Result<Vec<f64>> {
    let base = tiers
        .iter()
        .find(|t| t.id == 1)
        .ok_or_else(|| param("atomic tiers need a base tier with id 1"))?;
    if base.demand.iter().any(|d| *d <= 0.0) {
        return Err(param("base tier demand must be strictly positive"));
    }
    tiers
        .iter()
        .map(|t| {
            if t.demand.len() != base.demand.len() {
                return Err(param(format!("tier {} lists a different number of resources", t.id)));
            }
            let factors: Vec<f64> = t.demand.iter().zip(&base.demand).map(|(d, b)| d / b).collect();
            let kappa = factors[0];
            for (r, f) in factors.iter().enumerate().skip(1) {
                if (f - kappa).abs() > PROPORTION_TOL * kappa.abs().max(f.abs()) {
                    return Err(Error::NonProportional {
                        tier: t.id as usize,
                        resource_a: 0,
                        resource_b: r,
                        factor_a: kappa,
                        factor_b: *f,
                    });
                }
            }
            Ok(kappa)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::service_time::ServiceTimeModel;

    fn reference_tier(id: u32, demand: Vec<f64>) -> TierSpec {
        TierSpec::new(
            id,
            BurstinessCurve::token_bucket(5.0, 100.0).unwrap(),
            1.4,
            demand,
            ServiceTimeModel::weibull(1.0, 5.0, 1.4).unwrap(),
        )
        .unwrap()
    }

    fn registry() -> TenantRegistry {
        TenantRegistry::new(0.01, vec![reference_tier(1, vec![1.0])]).unwrap()
    }

    #[test]
    fn no_blocking_examples() {
        let mut r = registry();
        let d = r.admit_no_blocking(1, 145.0).unwrap();
        assert!(d.admitted());
        assert_eq!(d.bound_or_slack, 0.0);
        let mut r = registry();
        assert!(!r.admit_no_blocking(1, 144.0).unwrap().admitted());
        assert!(r.tenants.is_empty());
        let mut r = registry();
        assert!(r.admit_no_blocking(1, 290.0).unwrap().admitted());
        assert!(r.admit_no_blocking(1, 290.0).unwrap().admitted());
        assert!(!r.admit_no_blocking(1, 290.0).unwrap().admitted());
        assert!(matches!(r.admit_no_blocking(9, 290.0), Err(Error::UnknownTier(9))));
    }

    #[test]
    fn chernoff_admission_matches_min_servers() {
        let t = reference_tier(1, vec![1.0]);
        let k = bounds::min_servers(&t.curve, &t.model, 0.01, bounds::Method::Chernoff).unwrap() as f64;
        let mut r = registry();
        assert!(r.admit_chernoff(1, k).unwrap().admitted());
        let mut r = registry();
        let d = r.admit_chernoff(1, k - 1.0).unwrap();
        assert!(!d.admitted());
        assert!(d.bound_or_slack > 0.01);
    }

    #[test]
    fn null_candidate_leaves_bound_unchanged() {
        let mut tiers = vec![reference_tier(1, vec![1.0])];
        let mut null = reference_tier(2, vec![1.0]);
        null.curve = BurstinessCurve::zero();
        tiers.push(null);
        let mut r = TenantRegistry::new(0.01, tiers).unwrap();
        r.admit_chernoff(1, 200.0).unwrap();
        let before = r.single_tier_bound(None, 110.0).unwrap().probability_bound;
        let after = r.single_tier_bound(Some(2), 110.0).unwrap().probability_bound;
        assert!((before - after).abs() <= 1e-12 * before.max(1e-300));
        assert!(r.admit_chernoff(2, 110.0).unwrap().admitted());
    }

    #[test]
    fn heterogeneous_models_need_multiclass() {
        let mut other = reference_tier(2, vec![1.0]);
        other.model = ServiceTimeModel::point_mass(0.5).unwrap();
        let mut r = TenantRegistry::new(0.01, vec![reference_tier(1, vec![1.0]), other]).unwrap();
        r.admit_chernoff(1, 500.0).unwrap();
        assert!(matches!(r.admit_chernoff(2, 500.0), Err(Error::Config(_))));
    }

    #[test]
    fn multiclass_single_tier_matches_chernoff() {
        for k in [107.0, 106.0] {
            let mut a = registry();
            a.servers = Some(ResourcePool::new(vec![vec![k]]).unwrap());
            let mut b = registry();
            let da = a.admit_multiclass(1, &[]).unwrap();
            let db = b.admit_chernoff(1, k).unwrap();
            assert_eq!(da.decision, db.decision);
            assert!((da.bound_or_slack - db.bound_or_slack).abs() <= 1e-8 * db.bound_or_slack);
        }
    }

    #[test]
    fn multiclass_routing_halves() {
        let mut r = registry();
        r.servers = Some(ResourcePool::new(vec![vec![60.0], vec![60.0]]).unwrap());
        let bounds = r.multiclass_bounds(Some((1, &[0.5, 0.5]))).unwrap();
        let half = reference_tier(1, vec![1.0]);
        let mut halved = half.clone();
        halved.curve = half.curve.scale(0.5).unwrap();
        let direct = bounds::multiclass_overflow(&[60.0], &[halved]).unwrap();
        assert_eq!(bounds[0], direct);
        assert_eq!(bounds[1], direct);
        assert!(r.multiclass_bounds(Some((1, &[0.4, 0.5]))).is_err());
    }

    #[test]
    fn split_examples() {
        let g = BurstinessCurve::token_bucket(5.0, 100.0).unwrap();
        assert_eq!(split_demand(&g, &[1.0]).unwrap(), vec![g.clone()]);
        let halves = split_demand(&g, &[0.5, 0.5]).unwrap();
        assert_eq!(halves[0], BurstinessCurve::token_bucket(2.5, 50.0).unwrap());
        assert!(split_demand(&g, &[0.5, 0.6]).is_err());
        assert!(split_demand(&g, &[1.5, -0.5]).is_err());
    }

    #[test]
    fn atomic_factor_examples() {
        let base = reference_tier(1, vec![1.0, 128.0]);
        let double = reference_tier(2, vec![2.0, 256.0]);
        assert_eq!(atomic_factors(&[base.clone(), double]).unwrap(), vec![1.0, 2.0]);
        let skew = reference_tier(3, vec![2.0, 384.0]);
        match atomic_factors(&[base, skew]) {
            Err(Error::NonProportional { tier, resource_b, .. }) => assert_eq!((tier, resource_b), (3, 1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn proportional_default() {
        let pool = ResourcePool::new(vec![vec![8.0, 16384.0], vec![4.0, 16384.0]]).unwrap();
        let w = proportional_weights(&pool, &[1.0 / 12.0, 128.0]).unwrap();
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-12 && (w[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn removal_and_registry_round_trip() {
        let mut r = registry();
        r.k = Some(300);
        r.admit_no_blocking(1, 300.0).unwrap();
        r.admit_no_blocking(1, 300.0).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let back: TenantRegistry = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        let first = r.tenants[0].id;
        r.remove_tenant(first).unwrap();
        assert_eq!(r.tenants.len(), 1);
        assert!(r.remove_tenant(first).is_err());
    }
}

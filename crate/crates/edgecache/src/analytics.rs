//! Closed-form hit and occupancy analysis for TTL caching-and-overhearing
//! policies, plus the per-item hit-vs-occupancy tradeoff curves and the
//! analytical bounds used by the optimizer.
//!
//! Time-driven overhearing assumes each item is broadcast as a Poisson
//! process with rate `lambda`, independent of the demand. Event-driven
//! overhearing (broadcasts triggered by cache misses) has no closed form;
//! its curves take a simulation-estimated breakpoint occupancy.

use crate::demand::DemandProfile;
use crate::error::{Error, Result};
use crate::policy::{ItemPolicy, RcoComponent, Ttl};

/// Broadcast rates below this behave as "no overhearing".
pub const MIN_BROADCAST_RATE: f64 = 1e-9;

/// Hit ratio of caching with TTL `tau` (overhearing ignored / absent).
///
/// Zero while `tau` is inside the OFF period; afterwards the cached copy
/// survives until the next request with probability `1 - e^{-beta(tau-s)}`.
pub fn hit_caching(p: DemandProfile, tau: f64) -> f64 {
    if tau <= p.s {
        0.0
    } else {
        -(-p.beta * (tau - p.s)).exp_m1()
    }
}

/// Cache occupancy of caching with TTL `tau`.
///
/// For `tau <= s` the copy is held exactly `tau` out of every `E[X]` time
/// units; past the OFF period the expiry races the next request.
pub fn occupancy_caching(p: DemandProfile, tau: f64) -> f64 {
    if tau <= p.s {
        if tau.is_infinite() {
            1.0
        } else if p.s.is_infinite() {
            0.0
        } else {
            tau / p.mean_interrequest()
        }
    } else {
        1.0 - (-p.beta * (tau - p.s)).exp() / (p.beta * p.mean_interrequest())
    }
}

/// Hit ratio contributed by overhearing with deaf timer `omega` and
/// Poisson(`lambda`) broadcasts (caching timer zero).
pub fn hit_overhearing(p: DemandProfile, lambda: f64, omega: f64) -> f64 {
    if lambda < MIN_BROADCAST_RATE || !p.is_recurrent() {
        return 0.0;
    }
    if omega <= p.s {
        1.0 - p.beta / (lambda + p.beta) * (-lambda * (p.s - omega)).exp()
    } else {
        lambda / (lambda + p.beta) * (-p.beta * (omega - p.s)).exp()
    }
}

/// Occupancy contributed by overheard copies under a deaf timer `omega`.
pub fn occupancy_overhearing(p: DemandProfile, lambda: f64, omega: f64) -> f64 {
    if lambda < MIN_BROADCAST_RATE || !p.is_recurrent() {
        return 0.0;
    }
    let ex = p.mean_interrequest();
    if omega <= p.s {
        let d = p.s - omega;
        // Algebraically equal to beta/(lambda(lambda+beta)) e^{-lambda d}
        // - 1/lambda + d + 1/beta, but stable as lambda -> 0.
        let head = (p.beta * (-lambda * d).exp_m1() - lambda) / (lambda * (lambda + p.beta));
        (head + d + 1.0 / p.beta) / ex
    } else {
        lambda / (p.beta * (lambda + p.beta)) * (-p.beta * (omega - p.s)).exp() / ex
    }
}

/// Hit ratio of the combined policy with caching timer `tau` and deaf timer
/// `omega >= tau`; the two contributions are additive.
pub fn hit_co(p: DemandProfile, lambda: f64, tau: f64, omega: f64) -> f64 {
    hit_caching(p, tau) + hit_overhearing(p, lambda, omega)
}

/// Occupancy of the combined policy, additive like the hit ratio.
pub fn occupancy_co(p: DemandProfile, lambda: f64, tau: f64, omega: f64) -> f64 {
    occupancy_caching(p, tau) + occupancy_overhearing(p, lambda, omega)
}

/// Hit ratio of a randomized policy: the weighted mix of its components
/// (a fresh component is drawn at every request).
pub fn hit_rco(p: DemandProfile, lambda: f64, components: &[RcoComponent]) -> f64 {
    components
        .iter()
        .map(|c| c.weight * hit_co(p, lambda, c.tau.value(), c.omega.value()))
        .sum()
}

/// Occupancy of a randomized policy.
pub fn occupancy_rco(p: DemandProfile, lambda: f64, components: &[RcoComponent]) -> f64 {
    components
        .iter()
        .map(|c| c.weight * occupancy_co(p, lambda, c.tau.value(), c.omega.value()))
        .sum()
}

/// Hit ratio of an arbitrary per-item policy.
pub fn policy_hit(p: DemandProfile, lambda: f64, policy: &ItemPolicy) -> f64 {
    hit_rco(p, lambda, &policy.components())
}

/// Occupancy of an arbitrary per-item policy.
pub fn policy_occupancy(p: DemandProfile, lambda: f64, policy: &ItemPolicy) -> f64 {
    occupancy_rco(p, lambda, &policy.components())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    /// Poisson broadcasts; overhearing plus randomized always-cache.
    TimeDriven,
    /// Miss-triggered broadcasts; two linear pieces around an estimated
    /// breakpoint.
    EventDriven,
    /// No overhearing at all: the straight line h(r) = r.
    CachingOnly,
    /// Overhearing only (no caching of own requests), time-driven.
    OverhearingTimeDriven,
    /// Overhearing only, event-driven. A single linear piece.
    OverhearingEventDriven,
}

/// Best achievable hit ratio of one item as a function of the cache
/// occupancy spent on it. Concave and piecewise smooth; `invert` recovers a
/// policy realizing any feasible point.
#[derive(Debug, Clone)]
pub struct OccupancyCurve {
    kind: CurveKind,
    profile: DemandProfile,
    lambda: f64,
    r_break: f64,
    h_break: f64,
}

impl OccupancyCurve {
    /// Curve under Poisson(`lambda`) broadcasts. The breakpoint is the pure
    /// overhearing policy with deaf timer zero; beyond it the item is
    /// always-cached with growing probability.
    pub fn time_driven(profile: DemandProfile, lambda: f64) -> Result<Self> {
        Self::with_overhearing(CurveKind::TimeDriven, profile, lambda)
    }

    /// Time-driven curve truncated at the breakpoint: no own-request caching.
    pub fn overhearing_time_driven(profile: DemandProfile, lambda: f64) -> Result<Self> {
        Self::with_overhearing(CurveKind::OverhearingTimeDriven, profile, lambda)
    }

    fn with_overhearing(kind: CurveKind, profile: DemandProfile, lambda: f64) -> Result<Self> {
        if !profile.is_recurrent() {
            return Err(Error::InvalidProfile(
                "occupancy curve requires a finite OFF period".into(),
            ));
        }
        if !(lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!("broadcast rate must be nonnegative, got {lambda}")));
        }
        Ok(OccupancyCurve {
            kind,
            profile,
            lambda,
            r_break: occupancy_overhearing(profile, lambda, 0.0),
            h_break: hit_overhearing(profile, lambda, 0.0),
        })
    }

    /// Curve under miss-triggered broadcasts. `r_break_estimate` is the
    /// (simulation-estimated) occupancy of the deaf-timer-`s` overhearing
    /// policy; hits grow at slope `beta*s + 1` up to it, then linearly to
    /// (1, 1) via randomized always-cache.
    pub fn event_driven(profile: DemandProfile, r_break_estimate: f64) -> Result<Self> {
        Self::with_estimate(CurveKind::EventDriven, profile, r_break_estimate)
    }

    /// Event-driven curve truncated at the breakpoint.
    pub fn overhearing_event_driven(profile: DemandProfile, r_break_estimate: f64) -> Result<Self> {
        Self::with_estimate(CurveKind::OverhearingEventDriven, profile, r_break_estimate)
    }

    fn with_estimate(kind: CurveKind, profile: DemandProfile, r_break: f64) -> Result<Self> {
        if !profile.is_recurrent() {
            return Err(Error::InvalidProfile(
                "occupancy curve requires a finite OFF period".into(),
            ));
        }
        if r_break.is_nan() {
            return Err(Error::InvalidConfig("breakpoint estimate is NaN".into()));
        }
        let slope = profile.beta * profile.s + 1.0;
        let r_break = r_break.clamp(0.0, 1.0 / slope);
        Ok(OccupancyCurve {
            kind,
            profile,
            lambda: 0.0,
            r_break,
            h_break: slope * r_break,
        })
    }

    /// The straight line h(r) = r, realized by randomizing between
    /// always-cache and never-cache while ignoring broadcasts.
    pub fn caching_only(profile: DemandProfile) -> Result<Self> {
        if !profile.is_recurrent() {
            return Err(Error::InvalidProfile(
                "occupancy curve requires a finite OFF period".into(),
            ));
        }
        Ok(OccupancyCurve {
            kind: CurveKind::CachingOnly,
            profile,
            lambda: 0.0,
            r_break: 0.0,
            h_break: 0.0,
        })
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn profile(&self) -> DemandProfile {
        self.profile
    }

    pub fn breakpoint(&self) -> (f64, f64) {
        (self.r_break, self.h_break)
    }

    /// Largest occupancy the curve can spend (1 unless overhearing-only).
    pub fn max_occupancy(&self) -> f64 {
        match self.kind {
            CurveKind::OverhearingTimeDriven | CurveKind::OverhearingEventDriven => self.r_break,
            _ => 1.0,
        }
    }

    fn chord(&self, r: f64) -> f64 {
        if 1.0 - self.r_break < 1e-15 {
            r
        } else {
            self.h_break + (1.0 - self.h_break) * (r - self.r_break) / (1.0 - self.r_break)
        }
    }

    /// Best hit ratio at occupancy `r` (clamped to the feasible range).
    pub fn hit_ratio(&self, r: f64) -> f64 {
        let r = r.clamp(0.0, self.max_occupancy());
        if r <= 0.0 {
            return 0.0;
        }
        if r >= 1.0 {
            return 1.0;
        }
        if r >= self.max_occupancy() {
            return self.h_break;
        }
        match self.kind {
            CurveKind::CachingOnly => r,
            CurveKind::EventDriven | CurveKind::OverhearingEventDriven => {
                if r <= self.r_break && self.r_break > 0.0 {
                    self.h_break * r / self.r_break
                } else {
                    self.chord(r)
                }
            }
            CurveKind::TimeDriven | CurveKind::OverhearingTimeDriven => {
                if r <= self.r_break && self.r_break > 0.0 {
                    hit_overhearing(self.profile, self.lambda, self.solve_omega(r))
                } else {
                    self.chord(r)
                }
            }
        }
    }

    /// Deaf timer whose overhearing occupancy equals `r` (bisection; the
    /// occupancy is continuous and strictly decreasing in the timer).
    fn solve_omega(&self, r: f64) -> f64 {
        let p = self.profile;
        let mut lo = 0.0;
        let mut hi = p.s + 60.0 / p.beta;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if occupancy_overhearing(p, self.lambda, mid) > r {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * (1.0 + hi) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// A policy attaining `(r, hit_ratio(r))`.
    pub fn invert(&self, r: f64) -> ItemPolicy {
        let r = r.clamp(0.0, self.max_occupancy());
        let always = RcoComponent::new(0.0, Ttl::INF, Ttl::INF);
        let never = RcoComponent::new(0.0, Ttl::ZERO, Ttl::INF);
        match self.kind {
            CurveKind::CachingOnly => {
                if r >= 1.0 {
                    ItemPolicy::co(Ttl::INF, Ttl::INF)
                } else if r <= 0.0 {
                    ItemPolicy::co(Ttl::ZERO, Ttl::INF)
                } else {
                    ItemPolicy::rco(vec![always.reweight(r), never.reweight(1.0 - r)])
                }
            }
            CurveKind::TimeDriven | CurveKind::OverhearingTimeDriven => {
                if r <= self.r_break {
                    if r <= 0.0 {
                        ItemPolicy::co(Ttl::ZERO, Ttl::INF)
                    } else {
                        let omega = if r >= self.r_break { 0.0 } else { self.solve_omega(r) };
                        ItemPolicy::co(Ttl::ZERO, Ttl::new(omega).unwrap())
                    }
                } else if r >= 1.0 {
                    ItemPolicy::co(Ttl::INF, Ttl::INF)
                } else {
                    let q = (r - self.r_break) / (1.0 - self.r_break);
                    let eager = RcoComponent::new(1.0 - q, Ttl::ZERO, Ttl::ZERO);
                    ItemPolicy::rco(vec![always.reweight(q), eager])
                }
            }
            CurveKind::EventDriven | CurveKind::OverhearingEventDriven => {
                let hold = RcoComponent::new(0.0, Ttl::ZERO, Ttl::new(self.profile.s).unwrap());
                if r <= self.r_break && self.r_break > 0.0 {
                    let q = r / self.r_break;
                    if q >= 1.0 {
                        ItemPolicy::co(hold.tau, hold.omega)
                    } else if q <= 0.0 {
                        ItemPolicy::co(Ttl::ZERO, Ttl::INF)
                    } else {
                        ItemPolicy::rco(vec![hold.reweight(q), never.reweight(1.0 - q)])
                    }
                } else if r >= 1.0 {
                    ItemPolicy::co(Ttl::INF, Ttl::INF)
                } else if r <= 0.0 {
                    ItemPolicy::co(Ttl::ZERO, Ttl::INF)
                } else {
                    let q = (r - self.r_break) / (1.0 - self.r_break);
                    if self.r_break > 0.0 {
                        ItemPolicy::rco(vec![always.reweight(q), hold.reweight(1.0 - q)])
                    } else {
                        ItemPolicy::rco(vec![always.reweight(q), never.reweight(1.0 - q)])
                    }
                }
            }
        }
    }

    /// Piecewise-linear knots `(r, h)` for the allocator, ascending in `r`,
    /// starting at (0, 0) and ending at `max_occupancy`.
    pub fn knots(&self) -> Vec<(f64, f64)> {
        let mut pts = vec![(0.0, 0.0)];
        match self.kind {
            CurveKind::CachingOnly => pts.push((1.0, 1.0)),
            CurveKind::EventDriven => {
                if self.r_break > 0.0 && self.r_break < 1.0 {
                    pts.push((self.r_break, self.h_break));
                }
                pts.push((1.0, 1.0));
            }
            CurveKind::OverhearingEventDriven => {
                if self.r_break > 0.0 {
                    pts.push((self.r_break, self.h_break));
                }
            }
            CurveKind::TimeDriven | CurveKind::OverhearingTimeDriven => {
                if self.r_break > 0.0 {
                    let p = self.profile;
                    let mut omegas = Vec::new();
                    let tail = 10.0 / p.beta;
                    for k in 0..96 {
                        omegas.push(p.s + tail * (1.0 - k as f64 / 96.0));
                    }
                    if p.s > 0.0 {
                        for k in 0..=160 {
                            omegas.push(p.s * (1.0 - k as f64 / 160.0));
                        }
                    } else {
                        omegas.push(0.0);
                    }
                    for w in omegas {
                        let r = occupancy_overhearing(p, self.lambda, w);
                        let h = hit_overhearing(p, self.lambda, w);
                        if r - pts.last().unwrap().0 > 1e-14 {
                            pts.push((r, h));
                        }
                    }
                }
                if self.kind == CurveKind::TimeDriven {
                    pts.push((1.0, 1.0));
                }
            }
        }
        pts
    }
}

/// A fractional-knapsack upper bound on the system hit ratio with average
/// cache budget `b`: item `i` can yield hits at density at most
/// `p_i (beta_i s_i + 1)` per unit of occupancy, capped at `p_i` total.
#[derive(Debug, Clone)]
pub struct UpperBound {
    pub hit_ratio: f64,
    /// Items counted at full weight, in the greedy order used.
    pub full_items: Vec<usize>,
    /// The partially counted item, if the budget ran out mid-item.
    pub fractional_item: Option<usize>,
}

/// Compute the upper bound for items with popularities `p` and budget `b`.
pub fn hit_upper_bound(items: &[DemandProfile], p: &[f64], b: f64) -> Result<UpperBound> {
    if items.len() != p.len() {
        return Err(Error::InvalidConfig("popularity length mismatch".into()));
    }
    if !(b >= 0.0) {
        return Err(Error::InvalidConfig(format!("budget must be nonnegative, got {b}")));
    }
    let mut order: Vec<usize> = (0..items.len()).filter(|&i| p[i] > 0.0).collect();
    let density = |i: usize| p[i] * (items[i].beta * items[i].s + 1.0);
    order.sort_by(|&a, &b| density(b).partial_cmp(&density(a)).unwrap());

    let mut hit = 0.0;
    let mut used = 0.0;
    let mut full_items = Vec::new();
    let mut fractional_item = None;
    for &i in &order {
        let w = 1.0 / (items[i].beta * items[i].s + 1.0);
        if used + w <= b {
            used += w;
            hit += p[i];
            full_items.push(i);
        } else {
            let frac = (b - used) / w;
            if frac > 0.0 {
                hit += p[i] * frac;
                fractional_item = Some(i);
            }
            break;
        }
    }
    Ok(UpperBound { hit_ratio: hit.min(1.0), full_items, fractional_item })
}

/// Worst-case gap between the upper bound and the best single-cache policy
/// serving `m` users, when the cache targets the `K+1` densest items.
pub fn single_cache_gap_bound(items: &[DemandProfile], p: &[f64], b: f64, m: usize) -> Result<f64> {
    let ub = hit_upper_bound(items, p, b)?;
    let candidates = ub.full_items.iter().copied().chain(ub.fractional_item);
    let mut bound: f64 = 0.0;
    for i in candidates {
        bound = bound.max(2.0 * ((items[i].beta * items[i].s + 1.0) / m as f64).sqrt());
    }
    Ok(bound)
}

/// Per-user popular item sets: user `m` keeps its densest items while their
/// weights `1/(beta s + 1)` fit in the budget `b`.
#[derive(Debug, Clone)]
pub struct PopularSets {
    /// `per_user[m]` = items popular for user `m` (original item indices).
    pub per_user: Vec<Vec<usize>>,
    /// `per_item[i]` = users for which item `i` is popular.
    pub per_item: Vec<Vec<usize>>,
}

/// Compute popular sets from per-user profiles `profiles[user][item]`.
pub fn popular_sets(profiles: &[Vec<DemandProfile>], b: f64) -> Result<PopularSets> {
    if profiles.is_empty() || profiles[0].is_empty() {
        return Err(Error::InvalidConfig("popular sets need users and items".into()));
    }
    let n_items = profiles[0].len();
    let mut per_user = Vec::with_capacity(profiles.len());
    let mut per_item = vec![Vec::new(); n_items];
    for (m, user) in profiles.iter().enumerate() {
        let mut order: Vec<usize> = (0..n_items).filter(|&i| user[i].is_recurrent()).collect();
        order.sort_by(|&a, &b| user[b].beta.partial_cmp(&user[a].beta).unwrap());
        let mut used = 0.0;
        let mut keep = Vec::new();
        for &i in &order {
            let w = 1.0 / (user[i].beta * user[i].s + 1.0);
            if used + w > b {
                break;
            }
            used += w;
            keep.push(i);
        }
        for &i in &keep {
            per_item[i].push(m);
        }
        per_user.push(keep);
    }
    Ok(PopularSets { per_user, per_item })
}

/// Worst-case optimality gap of serving each user's popular set from
/// dedicated overhearing policies, with per-cache budget `b`.
pub fn multi_cache_gap_bound(profiles: &[Vec<DemandProfile>], b: f64) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::InvalidConfig(format!("budget must be positive, got {b}")));
    }
    let sets = popular_sets(profiles, b)?;
    let beta_max = profiles
        .iter()
        .flat_map(|u| u.iter().map(|p| p.beta))
        .fold(0.0f64, f64::max);
    let mut worst: f64 = 0.0;
    for (i, users) in sets.per_item.iter().enumerate() {
        if users.is_empty() {
            continue;
        }
        let agg: f64 = users.iter().map(|&m| 1.0 / profiles[m][i].mean_interrequest()).sum();
        worst = worst.max(2.0 * (beta_max / agg).sqrt());
    }
    Ok(1.0 / b + worst)
}

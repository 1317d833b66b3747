//! Hit-ratio maximization: spreads an average cache budget over the
//! per-item occupancy curves, then inverts the targets into policies.

use serde::Serialize;

use crate::analytics::{hit_upper_bound, popular_sets, OccupancyCurve};
use crate::demand::{Catalog, DemandProfile, Population, StartMode};
use crate::error::{Error, Result};
use crate::policy::{CachePolicy, ItemPolicy, Ttl};
use crate::simulator::{self, OverhearMode, SimConfig};

/// The result of one allocation: target occupancies, realizing policies and
/// the analytic objective.
#[derive(Debug, Clone, Serialize)]
pub struct Allocation {
    pub r_star: Vec<f64>,
    pub policies: Vec<ItemPolicy>,
    pub objective: f64,
}

impl Allocation {
    pub fn total_occupancy(&self) -> f64 {
        self.r_star.iter().sum()
    }

    /// Number of occupancies away from every structural level in `levels`
    /// (per item: 0, the breakpoint, and 1). Event-driven optima leave at
    /// most one.
    pub fn fractional_count(&self, breakpoints: &[f64]) -> usize {
        self.r_star
            .iter()
            .zip(breakpoints)
            .filter(|(&r, &rb)| {
                (r - 0.0).abs() > 1e-9 && (r - rb).abs() > 1e-9 && (r - 1.0).abs() > 1e-9
            })
            .count()
    }
}

/// Estimated occupancy of the deaf-timer-`s` overhearing policy for one
/// item under event-driven broadcasts.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OccupancyEstimate {
    pub item: usize,
    pub r_bar: f64,
    pub horizon: f64,
}

/// Maximize `sum_i p[i] * h_i(r_i)` subject to `sum_i r_i <= b` and
/// `0 <= r_i <= 1`, exploiting per-item concavity: fill piecewise-linear
/// segments greedily by value density.
pub fn allocate(curves: &[OccupancyCurve], p: &[f64], b: f64) -> Result<Allocation> {
    if curves.len() != p.len() {
        return Err(Error::InvalidConfig("one curve and popularity per item".into()));
    }
    if !(b >= 0.0) {
        return Err(Error::InvalidConfig(format!("budget must be nonnegative, got {b}")));
    }
    if curves.windows(2).any(|w| w[0].kind() != w[1].kind()) {
        return Err(Error::MixedCurveKinds);
    }

    struct Segment {
        item: usize,
        lo: f64,
        hi: f64,
        density: f64,
    }
    let mut segments = Vec::new();
    for (i, curve) in curves.iter().enumerate() {
        if p[i] <= 0.0 {
            continue;
        }
        let knots = curve.knots();
        let mut prev_density = f64::INFINITY;
        for w in knots.windows(2) {
            let width = w[1].0 - w[0].0;
            if width <= 0.0 {
                continue;
            }
            // Concavity makes per-item densities nonincreasing; clamp away
            // float noise so the sort below never reorders an item's
            // segments against each other.
            let density = (p[i] * (w[1].1 - w[0].1) / width).min(prev_density);
            prev_density = density;
            segments.push(Segment { item: i, lo: w[0].0, hi: w[1].0, density });
        }
    }
    // Within an item earlier (denser) segments come first, so a later
    // segment never fills before its prefix does.
    segments.sort_by(|a, b| {
        b.density
            .partial_cmp(&a.density)
            .unwrap()
            .then(a.item.cmp(&b.item))
            .then(a.lo.partial_cmp(&b.lo).unwrap())
    });

    let mut r_star = vec![0.0; curves.len()];
    let mut remaining = b;
    for seg in &segments {
        if remaining <= 0.0 {
            break;
        }
        let width = seg.hi - seg.lo;
        if remaining >= width - 1e-12 * (1.0 + width) {
            // Land exactly on the knot so structural levels stay exact.
            r_star[seg.item] = seg.hi;
            remaining -= width;
        } else {
            r_star[seg.item] = seg.lo + remaining;
            remaining = 0.0;
        }
    }
    for (r, curve) in r_star.iter_mut().zip(curves) {
        *r = r.clamp(0.0, curve.max_occupancy());
    }

    let objective = r_star.iter().zip(curves).zip(p).map(|((r, c), p)| p * c.hit_ratio(*r)).sum();
    let policies = r_star.iter().zip(curves).map(|(r, c)| c.invert(*r)).collect();
    Ok(Allocation { r_star, policies, objective })
}

/// Exhaustive dynamic program over a per-item occupancy grid (default step
/// 1/256), used as an independent check on `allocate`. Each item may also
/// sit exactly on its breakpoint at the next grid unit's cost.
pub fn grid_oracle(curves: &[OccupancyCurve], p: &[f64], b: f64, step: f64) -> Result<f64> {
    if curves.len() != p.len() {
        return Err(Error::InvalidConfig("one curve and popularity per item".into()));
    }
    if !(step > 0.0) {
        return Err(Error::InvalidConfig(format!("grid step must be positive, got {step}")));
    }
    let total_units = (b / step + 1e-9).floor() as usize;
    let residual = (b - total_units as f64 * step).max(0.0);
    // Two layers: dp[1] allows exactly one item to use the sub-grid budget
    // remainder on top of its grid units.
    let mut dp = [vec![0.0f64; total_units + 1], vec![0.0f64; total_units + 1]];
    for (i, curve) in curves.iter().enumerate() {
        // Candidate (cost in units, value, value with the remainder added).
        let max_units = ((curve.max_occupancy() / step + 1e-9).floor() as usize).min(total_units);
        let mut candidates: Vec<(usize, f64, f64)> = (0..=max_units)
            .map(|k| {
                let r = k as f64 * step;
                (k, p[i] * curve.hit_ratio(r), p[i] * curve.hit_ratio(r + residual))
            })
            .collect();
        let (rb, hb) = curve.breakpoint();
        if rb > 0.0 {
            let cost = (rb / step).ceil() as usize;
            if cost <= total_units {
                let v = p[i] * hb;
                candidates.push((cost, v, v));
            }
        }
        let mut next = dp.clone();
        for &(cost, value, value_res) in &candidates {
            if value_res <= 0.0 {
                continue;
            }
            for j in cost..=total_units {
                let plain = dp[0][j - cost] + value;
                if plain > next[0][j] {
                    next[0][j] = plain;
                }
                let with_res = (dp[1][j - cost] + value).max(dp[0][j - cost] + value_res);
                if with_res > next[1][j] {
                    next[1][j] = with_res;
                }
            }
        }
        dp = next;
    }
    Ok(dp[1][total_units])
}

fn expand_solution(
    n: usize,
    active: &[usize],
    inner: Allocation,
) -> Allocation {
    let mut r_star = vec![0.0; n];
    let mut policies = vec![ItemPolicy::co(Ttl::ZERO, Ttl::INF); n];
    for (k, &i) in active.iter().enumerate() {
        r_star[i] = inner.r_star[k];
        policies[i] = inner.policies[k].clone();
    }
    Allocation { r_star, policies, objective: inner.objective }
}

fn solve_with<F>(items: &[DemandProfile], p: &[f64], b: f64, curve_for: F) -> Result<Allocation>
where
    F: Fn(usize, DemandProfile) -> Result<OccupancyCurve>,
{
    let active: Vec<usize> = (0..items.len()).filter(|&i| items[i].is_recurrent()).collect();
    let curves: Vec<OccupancyCurve> = active
        .iter()
        .map(|&i| curve_for(i, items[i]))
        .collect::<Result<_>>()?;
    let p_active: Vec<f64> = active.iter().map(|&i| p[i]).collect();
    let inner = allocate(&curves, &p_active, b)?;
    Ok(expand_solution(items.len(), &active, inner))
}

/// Optimal policy under Poisson broadcasts with per-item rates `lambdas`.
pub fn solve_time_driven(catalog: &Catalog, lambdas: &[f64], b: f64) -> Result<Allocation> {
    if lambdas.len() != catalog.len() {
        return Err(Error::InvalidConfig("need one broadcast rate per item".into()));
    }
    let p = catalog.popularity()?;
    solve_with(catalog.items(), &p, b, |i, item| OccupancyCurve::time_driven(item, lambdas[i]))
}

/// Near-optimal policy under event-driven broadcasts: each item mixes
/// always-cache with the deaf-timer-`s` overhearing policy, using estimated
/// breakpoint occupancies.
pub fn solve_event_driven(
    catalog: &Catalog,
    b: f64,
    estimates: &[OccupancyEstimate],
) -> Result<Allocation> {
    let r_bar = estimate_map(catalog, estimates)?;
    let p = catalog.popularity()?;
    solve_with(catalog.items(), &p, b, |i, item| OccupancyCurve::event_driven(item, r_bar[i]))
}

fn estimate_map(catalog: &Catalog, estimates: &[OccupancyEstimate]) -> Result<Vec<f64>> {
    let mut r_bar = vec![f64::NAN; catalog.len()];
    for e in estimates {
        if e.item < r_bar.len() {
            r_bar[e.item] = e.r_bar;
        }
    }
    for (i, v) in r_bar.iter().enumerate() {
        if v.is_nan() && catalog.item(i).is_recurrent() {
            return Err(Error::MissingEstimate(i));
        }
    }
    Ok(r_bar)
}

/// Measure each item's occupancy under the all-overhearing configuration
/// (deaf timer `s_i`, event-driven broadcasts), averaged over caches and
/// clipped to the `1/(beta s + 1)` ceiling.
pub fn estimate_occupancies(
    population: &Population,
    horizon: f64,
    seed: u64,
) -> Result<Vec<OccupancyEstimate>> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidConfig(format!("horizon must be positive, got {horizon}")));
    }
    let policies = overhear_only_full(population)?;
    let mut config = SimConfig::new(population.clone(), policies, OverhearMode::EventDriven);
    config.horizon = horizon;
    config.seed = seed;
    config.start = StartMode::Stationary;
    let metrics = simulator::run(&config)?;
    Ok((0..population.n_items())
        .map(|i| {
            let raw = metrics.item_occupancy(i);
            let prof = population.profile(0, i);
            let cap = if prof.is_recurrent() { 1.0 / (prof.beta * prof.s + 1.0) } else { 1.0 };
            OccupancyEstimate { item: i, r_bar: raw.clamp(0.0, cap), horizon }
        })
        .collect())
}

fn overhear_only_full(population: &Population) -> Result<Vec<CachePolicy>> {
    (0..population.n_users())
        .map(|m| {
            let items = population
                .user_profiles(m)
                .iter()
                .map(|prof| Ok(ItemPolicy::OverhearOnly { omega: Ttl::new(prof.s)? }))
                .collect::<Result<_>>()?;
            Ok(CachePolicy::PerItem { items })
        })
        .collect()
}

/// Best policy that never stores broadcast copies: randomized always-cache
/// on the most popular items.
pub fn solve_caching_only(catalog: &Catalog, b: f64) -> Result<Allocation> {
    let p = catalog.popularity()?;
    solve_with(catalog.items(), &p, b, |_, item| OccupancyCurve::caching_only(item))
}

/// Best policy that never caches own requests, Poisson broadcasts.
pub fn solve_overhearing_only_time_driven(
    catalog: &Catalog,
    lambdas: &[f64],
    b: f64,
) -> Result<Allocation> {
    if lambdas.len() != catalog.len() {
        return Err(Error::InvalidConfig("need one broadcast rate per item".into()));
    }
    let p = catalog.popularity()?;
    solve_with(catalog.items(), &p, b, |i, item| {
        OccupancyCurve::overhearing_time_driven(item, lambdas[i])
    })
}

/// Best overhearing-only policy under event-driven broadcasts.
pub fn solve_overhearing_only_event_driven(
    catalog: &Catalog,
    b: f64,
    estimates: &[OccupancyEstimate],
) -> Result<Allocation> {
    let r_bar = estimate_map(catalog, estimates)?;
    let p = catalog.popularity()?;
    solve_with(catalog.items(), &p, b, |i, item| {
        OccupancyCurve::overhearing_event_driven(item, r_bar[i])
    })
}

/// Per-cache time-driven solves for a heterogeneous population: with
/// per-cache budgets the joint problem splits into independent ones.
pub fn solve_heterogeneous_time_driven(
    population: &Population,
    lambdas: &[f64],
    b: f64,
) -> Result<Vec<Allocation>> {
    (0..population.n_users())
        .map(|m| {
            let items = population.user_profiles(m);
            let rates: Vec<f64> = items.iter().map(|p| p.request_rate()).collect();
            let total: f64 = rates.iter().sum();
            if total <= 0.0 {
                return Err(Error::NoRecurrentDemand);
            }
            let p: Vec<f64> = rates.iter().map(|r| r / total).collect();
            solve_with(items, &p, b, |i, item| OccupancyCurve::time_driven(item, lambdas[i]))
        })
        .collect()
}

/// Heterogeneous event-driven rule of thumb: overhear (deaf timer `s`) the
/// items popular for this user, never cache the rest.
pub fn overhear_only_policies(population: &Population, b: f64) -> Result<Vec<Vec<ItemPolicy>>> {
    let profiles: Vec<Vec<DemandProfile>> =
        (0..population.n_users()).map(|m| population.user_profiles(m).to_vec()).collect();
    let sets = popular_sets(&profiles, b)?;
    let mut out = Vec::with_capacity(population.n_users());
    for (m, keep) in sets.per_user.iter().enumerate() {
        let mut items = vec![ItemPolicy::co(Ttl::ZERO, Ttl::INF); population.n_items()];
        for &i in keep {
            items[i] = ItemPolicy::OverhearOnly { omega: Ttl::new(profiles[m][i].s)? };
        }
        out.push(items);
    }
    Ok(out)
}

/// The analytic upper bound matching `hit_upper_bound` for this catalog.
pub fn upper_bound_objective(catalog: &Catalog, b: f64) -> Result<f64> {
    let p = catalog.popularity()?;
    Ok(hit_upper_bound(catalog.items(), &p, b)?.hit_ratio)
}

/// Breakpoint occupancy of each item's curve, for structure checks.
pub fn curve_breakpoints(curves: &[OccupancyCurve]) -> Vec<f64> {
    curves.iter().map(|c| c.breakpoint().0).collect()
}

/// Convenience: event-driven curves for a catalog given estimates.
pub fn event_driven_curves(
    catalog: &Catalog,
    estimates: &[OccupancyEstimate],
) -> Result<Vec<OccupancyCurve>> {
    let r_bar = estimate_map(catalog, estimates)?;
    catalog
        .items()
        .iter()
        .enumerate()
        .filter(|(_, it)| it.is_recurrent())
        .map(|(i, &it)| OccupancyCurve::event_driven(it, r_bar[i]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn profile(s: f64, beta: f64) -> DemandProfile {
        DemandProfile::new(s, beta).unwrap()
    }

    #[test]
    fn single_item_full_budget() {
        let curves = vec![OccupancyCurve::time_driven(profile(1.0, 1.0), 1.0).unwrap()];
        let a = allocate(&curves, &[1.0], 1.0).unwrap();
        assert!((a.r_star[0] - 1.0).abs() < 1e-12);
        assert!((a.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_identical_event_items_fill_breakpoints() {
        let item = profile(1.0, 1.0);
        let curves = vec![
            OccupancyCurve::event_driven(item, 0.5).unwrap(),
            OccupancyCurve::event_driven(item, 0.5).unwrap(),
        ];
        let a = allocate(&curves, &[0.5, 0.5], 1.0).unwrap();
        assert!((a.r_star[0] - 0.5).abs() < 1e-12);
        assert!((a.r_star[1] - 0.5).abs() < 1e-12);
        assert!((a.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixed_curve_kinds_rejected() {
        let item = profile(1.0, 1.0);
        let curves = vec![
            OccupancyCurve::event_driven(item, 0.3).unwrap(),
            OccupancyCurve::caching_only(item).unwrap(),
        ];
        assert!(matches!(allocate(&curves, &[0.5, 0.5], 1.0), Err(Error::MixedCurveKinds)));
    }

    #[test]
    fn full_budget_gives_objective_one() {
        let catalog = Catalog::new(vec![profile(1.0, 1.0), profile(2.0, 0.5)]).unwrap();
        let a = solve_time_driven(&catalog, &[1.0, 1.0], 2.0).unwrap();
        assert!((a.objective - 1.0).abs() < 1e-12);
        assert!(a.policies.iter().all(|p| matches!(
            p,
            ItemPolicy::Co { tau, .. } if tau.is_infinite()
        )));
        let tiny = solve_time_driven(&catalog, &[1.0, 1.0], 1e-6).unwrap();
        assert!(tiny.objective < 1e-4);
    }

    fn random_instance(seed: u64) -> (Vec<DemandProfile>, Vec<f64>, f64) {
        let mut rng = Stream::root(seed);
        let n = 2 + (rng.next_u64() % 5) as usize;
        let items: Vec<DemandProfile> = (0..n)
            .map(|_| {
                let beta = 0.5 + 1.5 * rng.next_f64();
                let s = (0.5 + 1.5 * rng.next_f64()) / beta;
                profile(s, beta)
            })
            .collect();
        let rates: Vec<f64> = items.iter().map(|p| p.request_rate()).collect();
        let total: f64 = rates.iter().sum();
        let p = rates.iter().map(|r| r / total).collect();
        let b = (0.2 + 0.7 * rng.next_f64()) * n as f64;
        (items, p, b)
    }

    #[test]
    fn structured_solver_matches_grid_oracle() {
        for seed in 0..20 {
            let (items, p, b) = random_instance(seed);
            let mut rng = Stream::root(seed ^ 0xabcd);
            let td: Vec<OccupancyCurve> = items
                .iter()
                .map(|&it| OccupancyCurve::time_driven(it, 0.2 + 2.0 * rng.next_f64()).unwrap())
                .collect();
            let ed: Vec<OccupancyCurve> = items
                .iter()
                .map(|&it| {
                    let cap = 1.0 / (it.beta * it.s + 1.0);
                    OccupancyCurve::event_driven(it, cap * rng.next_f64()).unwrap()
                })
                .collect();
            for curves in [&td, &ed] {
                let a = allocate(curves, &p, b).unwrap();
                let oracle = grid_oracle(curves, &p, b, 1.0 / 256.0).unwrap();
                assert!(
                    (a.objective - oracle).abs() <= 1e-3,
                    "seed {seed}: {} vs {oracle}",
                    a.objective
                );
                assert!(a.total_occupancy() <= b + 1e-9);
            }
            // Event-driven optima have at most one non-structural level.
            let a = allocate(&ed, &p, b).unwrap();
            assert!(a.fractional_count(&curve_breakpoints(&ed)) <= 1);
        }
    }

    #[test]
    fn objective_monotone_in_budget() {
        let catalog =
            Catalog::new(vec![profile(1.0, 1.0), profile(2.0, 0.5), profile(0.5, 2.0)]).unwrap();
        let lambdas = vec![0.5; 3];
        let mut prev = -1.0;
        for k in 0..=12 {
            let b = 0.25 * k as f64;
            let a = solve_time_driven(&catalog, &lambdas, b.max(1e-9)).unwrap();
            assert!(a.objective >= prev - 1e-12);
            prev = a.objective;
        }
    }

    #[test]
    fn time_driven_dominates_benchmarks() {
        let catalog =
            Catalog::new(vec![profile(1.0, 1.0), profile(2.0, 0.5), profile(0.5, 2.0)]).unwrap();
        let lambdas = vec![0.8, 0.4, 1.6];
        for b in [0.3, 1.0, 2.0] {
            let full = solve_time_driven(&catalog, &lambdas, b).unwrap();
            let cache = solve_caching_only(&catalog, b).unwrap();
            let over = solve_overhearing_only_time_driven(&catalog, &lambdas, b).unwrap();
            assert!(full.objective >= cache.objective - 1e-9);
            assert!(full.objective >= over.objective - 1e-9);
        }
    }

    #[test]
    fn overhearing_only_zero_rate_gets_nothing() {
        let catalog = Catalog::new(vec![profile(1.0, 1.0)]).unwrap();
        let a = solve_overhearing_only_time_driven(&catalog, &[0.0], 1.0).unwrap();
        assert_eq!(a.objective, 0.0);
    }

    #[test]
    fn event_objective_below_upper_bound() {
        for seed in 20..30 {
            let (items, p, b) = random_instance(seed);
            let mut rng = Stream::root(seed ^ 0x77);
            let curves: Vec<OccupancyCurve> = items
                .iter()
                .map(|&it| {
                    let cap = 1.0 / (it.beta * it.s + 1.0);
                    OccupancyCurve::event_driven(it, cap * rng.next_f64()).unwrap()
                })
                .collect();
            let a = allocate(&curves, &p, b).unwrap();
            let ub = hit_upper_bound(&items, &p, b).unwrap().hit_ratio;
            assert!(a.objective <= ub + 1e-9, "seed {seed}: {} > {ub}", a.objective);
        }
    }

    #[test]
    fn missing_estimate_is_an_error() {
        let catalog = Catalog::new(vec![profile(1.0, 1.0), profile(1.0, 0.5)]).unwrap();
        let est = vec![OccupancyEstimate { item: 0, r_bar: 0.3, horizon: 100.0 }];
        assert!(matches!(
            solve_event_driven(&catalog, 1.0, &est),
            Err(Error::MissingEstimate(1))
        ));
    }

    #[test]
    fn estimates_zero_without_peers() {
        let catalog = Catalog::new(vec![profile(1.0, 1.0)]).unwrap();
        let pop = Population::homogeneous(&catalog, 1).unwrap();
        let est = estimate_occupancies(&pop, 2000.0, 4).unwrap();
        assert_eq!(est[0].r_bar, 0.0);
    }

    #[test]
    fn estimates_respect_ceiling_with_peers() {
        let catalog = Catalog::new(vec![profile(1.0, 1.0)]).unwrap();
        let pop = Population::homogeneous(&catalog, 10).unwrap();
        let est = estimate_occupancies(&pop, 5000.0, 4).unwrap();
        assert!(est[0].r_bar > 0.1, "r_bar {}", est[0].r_bar);
        assert!(est[0].r_bar <= 0.5);
    }

    #[test]
    fn heterogeneous_popular_sets_drive_policies() {
        // Two users with reversed preferences keep disjoint items.
        let u0 = vec![profile(0.5, 2.0), profile(8.0, 0.125)];
        let u1 = vec![profile(8.0, 0.125), profile(0.5, 2.0)];
        let pop = Population::heterogeneous(vec![u0, u1]).unwrap();
        let pol = overhear_only_policies(&pop, 0.6).unwrap();
        assert!(matches!(pol[0][0], ItemPolicy::OverhearOnly { .. }));
        assert!(matches!(pol[0][1], ItemPolicy::Co { .. }));
        assert!(matches!(pol[1][0], ItemPolicy::Co { .. }));
        assert!(matches!(pol[1][1], ItemPolicy::OverhearOnly { .. }));
    }
}

//! Individualized ON-OFF demand model.
//!
//! Each (user, item) pair generates requests as a renewal process: a fixed
//! OFF period of length `s` after every request, followed by Poisson(`beta`)
//! arrivals until the next request renews the cycle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;

/// Demand parameters of one item for one user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandProfile {
    /// OFF-period duration. `+inf` means the item is never requested again
    /// after its first request.
    pub s: f64,
    /// ON-period Poisson request rate.
    pub beta: f64,
}

impl DemandProfile {
    pub fn new(s: f64, beta: f64) -> Result<Self> {
        if !(beta > 0.0) || beta.is_infinite() {
            return Err(Error::InvalidProfile(format!("beta must be positive and finite, got {beta}")));
        }
        if s < 0.0 || s.is_nan() {
            return Err(Error::InvalidProfile(format!("s must be nonnegative, got {s}")));
        }
        Ok(DemandProfile { s, beta })
    }

    /// Expected inter-request time `E[X] = s + 1/beta` (infinite when `s` is).
    pub fn mean_interrequest(&self) -> f64 {
        self.s + 1.0 / self.beta
    }

    /// Long-run request rate `1/E[X]`; zero for non-recurrent items.
    pub fn request_rate(&self) -> f64 {
        if self.s.is_infinite() {
            0.0
        } else {
            1.0 / self.mean_interrequest()
        }
    }

    pub fn is_recurrent(&self) -> bool {
        self.s.is_finite()
    }
}

/// An ordered item set, sorted so `beta` is nonincreasing in index.
#[derive(Debug, Clone)]
pub struct Catalog {
    items: Vec<DemandProfile>,
    /// `permutation[k]` is the original position of the item now at index `k`.
    permutation: Vec<usize>,
}

impl Catalog {
    pub fn new(items: Vec<DemandProfile>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidConfig("catalog must contain at least one item".into()));
        }
        let mut order: Vec<usize> = (0..items.len()).collect();
        // Stable: equal-beta ties keep the original order.
        order.sort_by(|&a, &b| items[b].beta.partial_cmp(&items[a].beta).unwrap());
        let sorted = order.iter().map(|&k| items[k]).collect();
        Ok(Catalog { items: sorted, permutation: order })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[DemandProfile] {
        &self.items
    }

    pub fn item(&self, i: usize) -> DemandProfile {
        self.items[i]
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// Request probability vector `p` (eq. for long-run popularity):
    /// `p_i = (1/(s_i + 1/beta_i)) / sum_j (1/(s_j + 1/beta_j))`.
    /// Items with infinite `s` contribute zero.
    pub fn popularity(&self) -> Result<Vec<f64>> {
        let rates: Vec<f64> = self.items.iter().map(|p| p.request_rate()).collect();
        let total: f64 = rates.iter().sum();
        if total <= 0.0 {
            return Err(Error::NoRecurrentDemand);
        }
        Ok(rates.into_iter().map(|r| r / total).collect())
    }
}

/// A set of `M` users, each with a full per-item profile list.
///
/// Item indices are shared across users. `homogeneous` is true iff every
/// user carries identical profiles.
#[derive(Debug, Clone)]
pub struct Population {
    profiles: Vec<Vec<DemandProfile>>,
    homogeneous: bool,
}

impl Population {
    /// All users share the catalog's (sorted) profiles.
    pub fn homogeneous(catalog: &Catalog, n_users: usize) -> Result<Self> {
        if n_users == 0 {
            return Err(Error::InvalidConfig("population needs at least one user".into()));
        }
        Ok(Population {
            profiles: vec![catalog.items().to_vec(); n_users],
            homogeneous: true,
        })
    }

    /// Heterogeneous population; `profiles[user][item]`, item order preserved
    /// as given (per-user popularity orderings are derived where needed).
    pub fn heterogeneous(profiles: Vec<Vec<DemandProfile>>) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::InvalidConfig("population needs at least one user".into()));
        }
        let n = profiles[0].len();
        if n == 0 || profiles.iter().any(|u| u.len() != n) {
            return Err(Error::InvalidConfig("all users must list the same items".into()));
        }
        let homogeneous = profiles.iter().all(|u| u == &profiles[0]);
        Ok(Population { profiles, homogeneous })
    }

    pub fn n_users(&self) -> usize {
        self.profiles.len()
    }

    pub fn n_items(&self) -> usize {
        self.profiles[0].len()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    pub fn profile(&self, user: usize, item: usize) -> DemandProfile {
        self.profiles[user][item]
    }

    pub fn user_profiles(&self, user: usize) -> &[DemandProfile] {
        &self.profiles[user]
    }

    /// Fraction of all requests generated by each user.
    pub fn user_share(&self) -> Vec<f64> {
        let per_user: Vec<f64> = self
            .profiles
            .iter()
            .map(|u| u.iter().map(|p| p.request_rate()).sum::<f64>())
            .collect();
        let total: f64 = per_user.iter().sum();
        per_user.into_iter().map(|r| r / total).collect()
    }
}

/// How the renewal processes are positioned at t = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StartMode {
    /// Each (user, item) pair starts at a uniformly random phase of its
    /// renewal cycle; no warm-up bias in long-run metrics.
    #[default]
    Stationary,
    /// A virtual request is placed at t = 0 for every pair.
    ColdStart,
}

/// Gap from one request to the next: `s + Exp(beta)`. `None` when `s = +inf`.
pub fn next_request_gap(profile: DemandProfile, rng: &mut Stream) -> Option<f64> {
    if !profile.is_recurrent() {
        return None;
    }
    Some(profile.s + rng.exp(profile.beta))
}

/// Time of the first request after t = 0 under the stationary phase law
/// (the equilibrium forward-recurrence time of the renewal process).
pub fn first_request_time(profile: DemandProfile, mode: StartMode, rng: &mut Stream) -> Option<f64> {
    if !profile.is_recurrent() {
        // Stationary: a non-recurrent item has rate zero, so no request at
        // all; cold start places only the virtual request.
        return None;
    }
    match mode {
        StartMode::ColdStart => Some(profile.s + rng.exp(profile.beta)),
        StartMode::Stationary => {
            let ex = profile.mean_interrequest();
            let u = rng.next_f64();
            if u < profile.s / ex {
                // Inside the OFF period: remaining OFF time is uniform.
                Some(rng.next_f64() * profile.s + rng.exp(profile.beta))
            } else {
                // Inside the ON period: memoryless remainder.
                Some(rng.exp(profile.beta))
            }
        }
    }
}

/// Stationary age (time since the last, virtual, request before t = 0) and
/// residual (time of the first request after t = 0), drawn jointly from
/// the equilibrium cycle law. `None` for non-recurrent items, which have
/// no request in any finite window.
pub fn stationary_age_and_residual(
    profile: DemandProfile,
    rng: &mut Stream,
) -> Option<(f64, f64)> {
    if !profile.is_recurrent() {
        return None;
    }
    let ex = profile.mean_interrequest();
    if rng.next_f64() < profile.s / ex {
        // OFF phase at a uniform position: elapsed OFF time is the age.
        let a = rng.next_f64() * profile.s;
        Some((a, profile.s - a + rng.exp(profile.beta)))
    } else {
        // ON phase: the exponential is memoryless in both directions.
        Some((profile.s + rng.exp(profile.beta), rng.exp(profile.beta)))
    }
}

/// A materialized multi-user request trace.
#[derive(Debug, Clone)]
pub struct RequestStream {
    /// (time, user, item), sorted by time.
    pub events: Vec<(f64, usize, usize)>,
    pub horizon: f64,
}

/// Materialize the population's request processes up to `horizon`.
///
/// Deterministic in `seed`; each (user, item) pair draws from its own
/// substream, so streams are stable under catalog extension.
pub fn generate_stream(
    population: &Population,
    horizon: f64,
    seed: u64,
    mode: StartMode,
) -> RequestStream {
    let mut events = Vec::new();
    for user in 0..population.n_users() {
        for item in 0..population.n_items() {
            let profile = population.profile(user, item);
            let mut rng = Stream::substream(seed, user as u64, item as u64, 0);
            let mut t = match first_request_time(profile, mode, &mut rng) {
                Some(t) => t,
                None => continue,
            };
            while t <= horizon {
                events.push((t, user, item));
                match next_request_gap(profile, &mut rng) {
                    Some(gap) => t += gap,
                    None => break,
                }
            }
        }
    }
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    RequestStream { events, horizon }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(s: f64, beta: f64) -> DemandProfile {
        DemandProfile::new(s, beta).unwrap()
    }

    #[test]
    fn popularity_symmetric() {
        let c = Catalog::new(vec![profile(1.0, 1.0), profile(1.0, 1.0)]).unwrap();
        assert_eq!(c.popularity().unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn popularity_never_requested_again() {
        let c = Catalog::new(vec![profile(f64::INFINITY, 1.0), profile(1.0, 1.0)]).unwrap();
        assert_eq!(c.popularity().unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn popularity_all_infinite_errors() {
        let c = Catalog::new(vec![profile(f64::INFINITY, 1.0)]).unwrap();
        assert!(matches!(c.popularity(), Err(Error::NoRecurrentDemand)));
    }

    #[test]
    fn popularity_zipf_with_s_inverse_beta() {
        // s_i = 1/beta_i makes E[X_i] = 2/beta_i, so p_i = beta_i / sum beta_j.
        let n = 1000;
        let raw: Vec<f64> = (1..=n).map(|i| (i as f64).powf(-0.8)).collect();
        let csum: f64 = raw.iter().sum();
        let betas: Vec<f64> = raw.iter().map(|b| b / csum).collect();
        let items: Vec<DemandProfile> = betas.iter().map(|&b| profile(1.0 / b, b)).collect();
        let c = Catalog::new(items).unwrap();
        let p = c.popularity().unwrap();
        let total_beta: f64 = betas.iter().sum();
        for (i, &pi) in p.iter().enumerate() {
            assert!((pi - betas[i] / total_beta).abs() < 1e-12);
        }
    }

    #[test]
    fn popularity_scale_invariance() {
        // Scaling every per-item rate 1/E[X] by a common factor leaves p
        // untouched; realize the scaling by shrinking (s, 1/beta) jointly.
        let items = vec![profile(1.0, 2.0), profile(3.0, 0.5), profile(0.2, 5.0)];
        let scaled: Vec<DemandProfile> =
            items.iter().map(|p| profile(p.s / 4.0, p.beta * 4.0)).collect();
        let p1 = Catalog::new(items).unwrap().popularity().unwrap();
        let p2 = Catalog::new(scaled).unwrap().popularity().unwrap();
        for (a, b) in p1.iter().zip(&p2) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn catalog_sorts_by_beta_desc() {
        let c = Catalog::new(vec![profile(1.0, 0.5), profile(1.0, 2.0), profile(1.0, 1.0)]).unwrap();
        let betas: Vec<f64> = c.items().iter().map(|p| p.beta).collect();
        assert_eq!(betas, vec![2.0, 1.0, 0.5]);
        assert_eq!(c.permutation(), &[1, 2, 0]);
    }

    #[test]
    fn user_share_examples() {
        let c = Catalog::new(vec![profile(1.0, 1.0), profile(2.0, 0.5)]).unwrap();
        let p = Population::homogeneous(&c, 2).unwrap();
        assert_eq!(p.user_share(), vec![0.5, 0.5]);
        let single = Population::homogeneous(&c, 1).unwrap();
        assert_eq!(single.user_share(), vec![1.0]);

        // User 1 has double the per-item request rate of user 2.
        let u2 = vec![profile(1.0, 1.0), profile(3.0, 1.0)];
        let u1: Vec<DemandProfile> = u2
            .iter()
            .map(|p| profile(p.s / 2.0, p.beta * 2.0))
            .collect();
        let het = Population::heterogeneous(vec![u1, u2]).unwrap();
        let nu = het.user_share();
        assert!((nu[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((nu[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!(!het.is_homogeneous());
    }

    #[test]
    fn gap_respects_off_period() {
        let mut rng = Stream::root(3);
        let p = profile(2.0, 1.0);
        for _ in 0..1000 {
            assert!(next_request_gap(p, &mut rng).unwrap() >= 2.0);
        }
        assert!(next_request_gap(profile(f64::INFINITY, 1.0), &mut rng).is_none());
    }

    #[test]
    fn gap_mean_matches_renewal_mean() {
        let mut rng = Stream::root(5);
        let p = profile(1.0, 2.0);
        let n = 1_000_000u64;
        let mean: f64 = (0..n).map(|_| next_request_gap(p, &mut rng).unwrap()).sum::<f64>() / n as f64;
        // E[X] = 1.5, sd of the exponential part is 0.5.
        let tol = 3.0 * 0.5 / (n as f64).sqrt();
        assert!((mean - 1.5).abs() < tol, "mean {mean}");
    }

    #[test]
    fn stream_is_deterministic_and_gap_constrained() {
        let c = Catalog::new(vec![profile(1.0, 1.0), profile(0.5, 2.0)]).unwrap();
        let pop = Population::homogeneous(&c, 2).unwrap();
        let a = generate_stream(&pop, 500.0, 42, StartMode::Stationary);
        let b = generate_stream(&pop, 500.0, 42, StartMode::Stationary);
        assert_eq!(a.events.len(), b.events.len());
        for (x, y) in a.events.iter().zip(&b.events) {
            assert_eq!(x, y);
        }
        // Per-pair consecutive gaps never undershoot s.
        let mut last = vec![vec![f64::NEG_INFINITY; 2]; 2];
        for &(t, u, i) in &a.events {
            if last[u][i].is_finite() {
                assert!(t - last[u][i] >= pop.profile(u, i).s - 1e-12);
            }
            last[u][i] = t;
        }
    }

    #[test]
    fn stream_rates_and_selection_frequency() {
        let c = Catalog::new(vec![profile(1.0, 1.0), profile(0.25, 1.0), profile(4.0, 0.25)]).unwrap();
        let pop = Population::homogeneous(&c, 3).unwrap();
        let horizon = 40_000.0;
        let s = generate_stream(&pop, horizon, 9, StartMode::Stationary);
        let mut counts = vec![0u64; 3];
        for &(_, _, i) in &s.events {
            counts[i] += 1;
        }
        let p = c.popularity().unwrap();
        let total: u64 = counts.iter().sum();
        for i in 0..3 {
            // Per-item rate: M / E[X_i].
            let expect = 3.0 * horizon / c.item(i).mean_interrequest();
            let sd = expect.sqrt();
            assert!(
                (counts[i] as f64 - expect).abs() < 4.0 * sd,
                "item {i}: {} vs {expect}",
                counts[i]
            );
            let freq = counts[i] as f64 / total as f64;
            let sd_f = (p[i] * (1.0 - p[i]) / total as f64).sqrt();
            assert!((freq - p[i]).abs() < 4.0 * sd_f);
        }
    }
}

//! Discrete-event engine driving one or more caches over generated request
//! streams, with time-driven (Poisson) or event-driven (miss-triggered)
//! broadcast overhearing.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::demand::{first_request_time, stationary_age_and_residual, next_request_gap, Population, StartMode};
use crate::error::{Error, Result};
use crate::policy::{CachePolicy, CacheState, CapacityMode, RequestOutcome, TimerHandle};
use crate::rng::{mix64, Stream};

#[derive(Debug, Clone)]
pub enum OverhearMode {
    /// Broadcasts of item `i` arrive as an independent Poisson process with
    /// rate `lambdas[i]`, heard by every cache.
    TimeDriven { lambdas: Vec<f64> },
    /// Every cache miss triggers a broadcast heard by the other caches.
    EventDriven,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub population: Population,
    /// One policy per cache. Either one cache per user, or a single cache
    /// serving the merged request stream of all users.
    pub policies: Vec<CachePolicy>,
    pub mode: OverhearMode,
    pub horizon: f64,
    pub seed: u64,
    pub capacity: CapacityMode,
    pub start: StartMode,
    /// Fraction of the horizon excluded from metrics. Defaults to 0.1 under
    /// cold start and 0 under stationary start.
    pub warmup: Option<f64>,
    /// Delay between an event-driven miss and the resulting broadcast.
    pub broadcast_delay: f64,
    /// Let LRU/LFU caches store broadcast copies too.
    pub baselines_overhear: bool,
}

impl SimConfig {
    pub fn new(population: Population, policies: Vec<CachePolicy>, mode: OverhearMode) -> Self {
        SimConfig {
            population,
            policies,
            mode,
            horizon: 10_000.0,
            seed: 0,
            capacity: CapacityMode::Average,
            start: StartMode::Stationary,
            warmup: None,
            broadcast_delay: 0.0,
            baselines_overhear: false,
        }
    }

    fn warmup_time(&self) -> f64 {
        let frac = self.warmup.unwrap_or(match self.start {
            StartMode::ColdStart => 0.1,
            StartMode::Stationary => 0.0,
        });
        frac * self.horizon
    }
}

/// Per-run measurements; counters are indexed `[cache][item]`.
#[derive(Debug, Clone, Serialize)]
pub struct SimMetrics {
    pub requests: Vec<Vec<u64>>,
    pub hits: Vec<Vec<u64>>,
    pub misses: Vec<Vec<u64>>,
    /// Time-average resident fraction over the measured window.
    pub occupancy: Vec<Vec<f64>>,
    pub overheard_stores: Vec<Vec<u64>>,
    /// Broadcasts of each item during the measured window.
    pub broadcasts: Vec<u64>,
    /// First and last broadcast instant per item (measured window).
    pub broadcast_span: Vec<Option<(f64, f64)>>,
    /// Length of the measured window.
    pub elapsed: f64,
    pub overall_hit_ratio: f64,
}

impl SimMetrics {
    pub fn n_caches(&self) -> usize {
        self.requests.len()
    }

    pub fn n_items(&self) -> usize {
        self.requests[0].len()
    }

    pub fn total_requests(&self) -> u64 {
        self.requests.iter().flatten().sum()
    }

    /// Hit ratio of one item aggregated over caches (None when unrequested).
    pub fn item_hit_ratio(&self, item: usize) -> Option<f64> {
        let req: u64 = self.requests.iter().map(|c| c[item]).sum();
        if req == 0 {
            return None;
        }
        let hits: u64 = self.hits.iter().map(|c| c[item]).sum();
        Some(hits as f64 / req as f64)
    }

    /// Occupancy of one item averaged over caches.
    pub fn item_occupancy(&self, item: usize) -> f64 {
        self.occupancy.iter().map(|c| c[item]).sum::<f64>() / self.occupancy.len() as f64
    }

    /// CSV rows per (cache, item) plus an aggregate row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cache,item,requests,hits,misses,occupancy,overheard_stores,broadcasts\n");
        for c in 0..self.n_caches() {
            for i in 0..self.n_items() {
                out.push_str(&format!(
                    "{c},{i},{},{},{},{:.6e},{},{}\n",
                    self.requests[c][i],
                    self.hits[c][i],
                    self.misses[c][i],
                    self.occupancy[c][i],
                    self.overheard_stores[c][i],
                    self.broadcasts[i]
                ));
            }
        }
        let hits: u64 = self.hits.iter().flatten().sum();
        let misses: u64 = self.misses.iter().flatten().sum();
        let occ: f64 = self.occupancy.iter().flatten().sum();
        let stores: u64 = self.overheard_stores.iter().flatten().sum();
        let bcasts: u64 = self.broadcasts.iter().sum();
        out.push_str(&format!(
            "all,all,{},{hits},{misses},{:.6e},{stores},{bcasts}\n",
            self.total_requests(),
            occ
        ));
        out
    }
}

/// Mean gap between successive broadcasts per item; `None` for items
/// broadcast fewer than twice.
pub fn interoverhear_stats(metrics: &SimMetrics) -> Vec<Option<f64>> {
    metrics
        .broadcast_span
        .iter()
        .zip(&metrics.broadcasts)
        .map(|(span, &n)| match span {
            Some((first, last)) if n >= 2 => Some((last - first) / (n - 1) as f64),
            _ => None,
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
enum EventKind {
    Timer { cache: usize, handle: TimerHandle },
    Broadcast { item: usize, src: Option<usize> },
    Request { user: usize, item: usize },
}

impl EventKind {
    // Simultaneous events process as timer < broadcast < request: an expiry
    // coinciding with a request is a miss, and a coinciding broadcast is
    // stored before the request is served.
    fn rank(&self) -> u8 {
        match self {
            EventKind::Timer { .. } => 0,
            EventKind::Broadcast { .. } => 1,
            EventKind::Request { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    // Inverted so BinaryHeap pops the earliest event first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.kind.rank().cmp(&self.kind.rank()))
            .then(other.seq.cmp(&self.seq))
    }
}

struct Engine {
    caches: Vec<CacheState>,
    heap: BinaryHeap<Event>,
    seq: u64,
    pair_rng: Vec<Stream>,
    bcast_rng: Vec<Stream>,
    policy_rng: Vec<Stream>,
    n_items: usize,
    shared_cache: bool,
}

impl Engine {
    fn cache_of(&self, user: usize) -> usize {
        if self.shared_cache {
            0
        } else {
            user
        }
    }

    fn push(&mut self, time: f64, kind: EventKind) {
        self.heap.push(Event { time, seq: self.seq, kind });
        self.seq += 1;
    }
}

/// Run one simulation. Deterministic per seed.
pub fn run(config: &SimConfig) -> Result<SimMetrics> {
    let pop = &config.population;
    let n_items = pop.n_items();
    let n_users = pop.n_users();
    let n_caches = config.policies.len();
    if !(config.horizon > 0.0) {
        return Err(Error::InvalidConfig(format!("horizon must be positive, got {}", config.horizon)));
    }
    let shared_cache = match n_caches {
        c if c == n_users => false,
        1 => true,
        c => {
            return Err(Error::InvalidConfig(format!(
                "{c} caches cannot serve {n_users} users: need 1 or one per user"
            )))
        }
    };
    if let OverhearMode::TimeDriven { lambdas } = &config.mode {
        if lambdas.len() != n_items {
            return Err(Error::InvalidConfig(format!(
                "need one broadcast rate per item: got {} for {n_items}",
                lambdas.len()
            )));
        }
        if lambdas.iter().any(|l| !(*l >= 0.0)) {
            return Err(Error::InvalidConfig("broadcast rates must be nonnegative".into()));
        }
    }

    let mut caches = Vec::with_capacity(n_caches);
    for p in &config.policies {
        let mut c = CacheState::new(p.clone(), n_items, config.capacity)?;
        c.set_baselines_overhear(config.baselines_overhear);
        caches.push(c);
    }

    let seed = config.seed;
    let mut engine = Engine {

        caches,
        heap: BinaryHeap::new(),
        seq: 0,
        pair_rng: Vec::with_capacity(n_users * n_items),
        bcast_rng: (0..n_items).map(|i| Stream::substream(seed, i as u64, 1, 2)).collect(),
        policy_rng: (0..n_caches).map(|c| Stream::substream(seed, c as u64, 2, 9)).collect(),
        n_items,
        shared_cache,
    };

    // Seed first requests for every (user, item) pair. Under a stationary
    // start with per-user caches, also install the policy state left over
    // from the virtual request `age` units before t = 0, so deaf windows
    // and cached copies start in steady state rather than empty.
    for user in 0..n_users {
        for item in 0..n_items {
            let mut rng = Stream::substream(seed, user as u64, item as u64, 0);
            let profile = pop.profile(user, item);
            if config.start == StartMode::Stationary && !shared_cache {
                if let Some((age, residual)) = stationary_age_and_residual(profile, &mut rng) {
                    engine.push(residual, EventKind::Request { user, item });
                    let timer =
                        engine.caches[user].init_stationary(item, age, &mut engine.policy_rng[user])?;
                    if let Some(h) = timer {
                        engine.push(h.time, EventKind::Timer { cache: user, handle: h });
                    }
                }
            } else if let Some(t) = first_request_time(profile, config.start, &mut rng) {
                engine.push(t, EventKind::Request { user, item });
            }
            engine.pair_rng.push(rng);
        }
    }

    // Seed time-driven broadcast processes.
    if let OverhearMode::TimeDriven { lambdas } = &config.mode {
        for item in 0..n_items {
            if lambdas[item] >= crate::analytics::MIN_BROADCAST_RATE {
                let t = engine.bcast_rng[item].exp(lambdas[item]);
                engine.push(t, EventKind::Broadcast { item, src: None });
            }
        }
    }

    let horizon = config.horizon;
    let warmup_t = config.warmup_time();
    let mut warmup_done = warmup_t <= 0.0;
    let mut resid_start: Vec<Vec<f64>> = vec![vec![0.0; n_items]; n_caches];

    let mut requests = vec![vec![0u64; n_items]; n_caches];
    let mut hits = vec![vec![0u64; n_items]; n_caches];
    let mut misses = vec![vec![0u64; n_items]; n_caches];
    let mut overheard_stores = vec![vec![0u64; n_items]; n_caches];
    let mut broadcasts = vec![0u64; n_items];
    let mut broadcast_span: Vec<Option<(f64, f64)>> = vec![None; n_items];

    while let Some(ev) = engine.heap.pop() {
        if ev.time > horizon {
            break;
        }
        if !warmup_done && ev.time >= warmup_t {
            for (c, cache) in engine.caches.iter().enumerate() {
                for (i, frac) in cache.audit_occupancy(warmup_t).into_iter().enumerate() {
                    resid_start[c][i] = frac * warmup_t;
                }
            }
            warmup_done = true;
        }
        let measured = ev.time >= warmup_t;
        match ev.kind {
            EventKind::Timer { cache, handle } => engine.caches[cache].on_timer(handle),
            EventKind::Broadcast { item, src } => {
                if src.is_none() {
                    if let OverhearMode::TimeDriven { lambdas } = &config.mode {
                        let gap = engine.bcast_rng[item].exp(lambdas[item]);
                        engine.push(ev.time + gap, EventKind::Broadcast { item, src: None });
                    }
                }
                if measured {
                    broadcasts[item] += 1;
                    broadcast_span[item] = Some(match broadcast_span[item] {
                        None => (ev.time, ev.time),
                        Some((first, _)) => (first, ev.time),
                    });
                }
                for c in 0..engine.caches.len() {
                    if src == Some(c) {
                        continue;
                    }
                    if engine.caches[c].on_overhear(item, ev.time)? && measured {
                        overheard_stores[c][item] += 1;
                    }
                }
            }
            EventKind::Request { user, item } => {
                let cache = engine.cache_of(user);
                let (outcome, timer) =
                    engine.caches[cache].on_request(item, ev.time, &mut engine.policy_rng[cache])?;
                if measured {
                    requests[cache][item] += 1;
                    match outcome {
                        RequestOutcome::Hit => hits[cache][item] += 1,
                        RequestOutcome::Miss => misses[cache][item] += 1,
                    }
                }
                if let Some(h) = timer {
                    engine.push(h.time, EventKind::Timer { cache, handle: h });
                }
                if outcome == RequestOutcome::Miss {
                    if let OverhearMode::EventDriven = config.mode {
                        let t = ev.time + config.broadcast_delay;
                        engine.push(t, EventKind::Broadcast { item, src: Some(cache) });
                    }
                }
                let rng = &mut engine.pair_rng[user * engine.n_items + item];
                if let Some(gap) = next_request_gap(pop.profile(user, item), rng) {
                    let t = ev.time + gap;
                    if t <= horizon {
                        engine.push(t, EventKind::Request { user, item });
                    }
                }
            }
        }
    }

    if !warmup_done {
        for (c, cache) in engine.caches.iter().enumerate() {
            for (i, frac) in cache.audit_occupancy(warmup_t).into_iter().enumerate() {
                resid_start[c][i] = frac * warmup_t;
            }
        }
    }
    let elapsed = horizon - warmup_t;
    let mut occupancy = vec![vec![0.0; n_items]; n_caches];
    for (c, cache) in engine.caches.iter().enumerate() {
        for (i, frac) in cache.audit_occupancy(horizon).into_iter().enumerate() {
            occupancy[c][i] = (frac * horizon - resid_start[c][i]) / elapsed;
        }
    }

    let total_hits: u64 = hits.iter().flatten().sum();
    let total_reqs: u64 = requests.iter().flatten().sum();
    let overall_hit_ratio = if total_reqs == 0 { 0.0 } else { total_hits as f64 / total_reqs as f64 };

    Ok(SimMetrics {
        requests,
        hits,
        misses,
        occupancy,
        overheard_stores,
        broadcasts,
        broadcast_span,
        elapsed,
        overall_hit_ratio,
    })
}

/// Run `n_reps` independent replications (seeds derived from the config
/// seed), in parallel.
pub fn replicate(config: &SimConfig, n_reps: usize) -> Result<Vec<SimMetrics>> {
    use rayon::prelude::*;
    (0..n_reps)
        .into_par_iter()
        .map(|k| {
            let mut c = config.clone();
            c.seed = mix64(config.seed ^ (k as u64).wrapping_mul(0x9E3779B97F4A7C15));
            run(&c)
        })
        .collect()
}

/// Sample mean and standard error. The standard error is NaN for fewer than
/// two samples.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{hit_co, occupancy_co};
    use crate::demand::{Catalog, DemandProfile};
    use crate::policy::{ItemPolicy, Ttl};

    fn profile(s: f64, beta: f64) -> DemandProfile {
        DemandProfile::new(s, beta).unwrap()
    }

    fn co(tau: f64, omega: f64) -> ItemPolicy {
        ItemPolicy::co(Ttl::new(tau).unwrap(), Ttl::new(omega).unwrap())
    }

    fn single_cache_config(item: DemandProfile, policy: ItemPolicy, lambda: f64) -> SimConfig {
        let catalog = Catalog::new(vec![item]).unwrap();
        let pop = Population::homogeneous(&catalog, 1).unwrap();
        SimConfig::new(
            pop,
            vec![CachePolicy::PerItem { items: vec![policy] }],
            OverhearMode::TimeDriven { lambdas: vec![lambda] },
        )
    }

    #[test]
    fn matches_closed_forms_single_item() {
        let p = profile(1.0, 1.0);
        let (tau, omega, lambda) = (0.5, 2.0, 1.0);
        let mut config = single_cache_config(p, co(tau, omega), lambda);
        config.horizon = 40_000.0;
        config.seed = 77;
        let runs = replicate(&config, 8).unwrap();
        let hs: Vec<f64> = runs.iter().map(|m| m.item_hit_ratio(0).unwrap()).collect();
        let rs: Vec<f64> = runs.iter().map(|m| m.occupancy[0][0]).collect();
        let (h_mean, h_se) = mean_stderr(&hs);
        let (r_mean, r_se) = mean_stderr(&rs);
        let h_want = hit_co(p, lambda, tau, omega);
        let r_want = occupancy_co(p, lambda, tau, omega);
        assert!((h_mean - h_want).abs() < 4.0 * h_se.max(1e-4), "h {h_mean} vs {h_want}");
        assert!((r_mean - r_want).abs() < 4.0 * r_se.max(1e-4), "r {r_mean} vs {r_want}");
    }

    #[test]
    fn conservation_and_determinism() {
        let catalog = Catalog::new(vec![profile(1.0, 1.0), profile(0.5, 2.0)]).unwrap();
        let pop = Population::homogeneous(&catalog, 3).unwrap();
        let policies = vec![CachePolicy::PerItem { items: vec![co(1.0, 3.0), co(0.0, 0.5)] }; 3];
        let mut config = SimConfig::new(pop, policies, OverhearMode::EventDriven);
        config.horizon = 2000.0;
        config.seed = 5;
        let a = run(&config).unwrap();
        let b = run(&config).unwrap();
        assert_eq!(a.requests, b.requests);
        assert_eq!(a.hits, b.hits);
        assert_eq!(a.occupancy, b.occupancy);
        for c in 0..3 {
            for i in 0..2 {
                assert_eq!(a.hits[c][i] + a.misses[c][i], a.requests[c][i]);
            }
        }
        // Event-driven causality: broadcasts = misses, exactly.
        for i in 0..2 {
            let miss: u64 = (0..3).map(|c| a.misses[c][i]).sum();
            assert_eq!(a.broadcasts[i], miss);
        }
    }

    #[test]
    fn single_cache_never_overhears_event_driven() {
        let p = profile(1.0, 1.0);
        let catalog = Catalog::new(vec![p]).unwrap();
        let pop = Population::homogeneous(&catalog, 1).unwrap();
        let mut config = SimConfig::new(
            pop,
            vec![CachePolicy::PerItem { items: vec![co(0.0, 1.0)] }],
            OverhearMode::EventDriven,
        );
        config.horizon = 5000.0;
        let m = run(&config).unwrap();
        assert_eq!(m.overheard_stores[0][0], 0);
        assert!(m.requests[0][0] > 0);
        assert_eq!(m.hits[0][0], 0);
    }

    #[test]
    fn zero_horizon_like_guard() {
        let p = profile(10.0, 1.0);
        let mut config = single_cache_config(p, co(1.0, 1.0), 0.0);
        // Horizon far below the first possible request (OFF period 10).
        config.horizon = 1.0;
        config.start = StartMode::ColdStart;
        config.warmup = Some(0.0);
        let m = run(&config).unwrap();
        assert_eq!(m.total_requests(), 0);
        assert_eq!(m.overall_hit_ratio, 0.0);
    }

    #[test]
    fn time_driven_caches_do_not_interact() {
        let catalog = Catalog::new(vec![profile(1.0, 1.0)]).unwrap();
        let pop = Population::homogeneous(&catalog, 2).unwrap();
        let mk = |other: ItemPolicy| {
            let mut c = SimConfig::new(
                pop.clone(),
                vec![CachePolicy::PerItem { items: vec![co(0.5, 2.0)] }, CachePolicy::PerItem { items: vec![other] }],
                OverhearMode::TimeDriven { lambdas: vec![1.0] },
            );
            c.horizon = 3000.0;
            c.seed = 12;
            c
        };
        let a = run(&mk(co(0.0, 0.0))).unwrap();
        let b = run(&mk(ItemPolicy::co(Ttl::INF, Ttl::INF))).unwrap();
        assert_eq!(a.requests[0], b.requests[0]);
        assert_eq!(a.hits[0], b.hits[0]);
        assert_eq!(a.occupancy[0], b.occupancy[0]);
    }

    #[test]
    fn overhear_ratio_slope_event_driven() {
        // Under the deaf-timer-s overhearing policy, hits per unit occupancy
        // concentrate near beta*s + 1.
        let p = profile(2.0, 1.0);
        let catalog = Catalog::new(vec![p]).unwrap();
        let m_users = 20;
        let pop = Population::homogeneous(&catalog, m_users).unwrap();
        let policies = vec![CachePolicy::PerItem { items: vec![co(0.0, p.s)] }; m_users];
        let mut config = SimConfig::new(pop, policies, OverhearMode::EventDriven);
        config.horizon = 20_000.0;
        config.seed = 3;
        let m = run(&config).unwrap();
        let h = m.item_hit_ratio(0).unwrap();
        let r = m.item_occupancy(0);
        let slope = h / r;
        assert!((slope - 3.0).abs() < 0.15, "slope {slope}");
    }

    #[test]
    fn interoverhear_gap_shrinks_with_users() {
        let p = profile(1.0, 1.0);
        let catalog = Catalog::new(vec![p]).unwrap();
        let gap_at = |m_users: usize| {
            let pop = Population::homogeneous(&catalog, m_users).unwrap();
            let policies = vec![CachePolicy::PerItem { items: vec![co(0.0, p.s)] }; m_users];
            let mut config = SimConfig::new(pop, policies, OverhearMode::EventDriven);
            config.horizon = 5000.0;
            config.seed = 8;
            let m = run(&config).unwrap();
            interoverhear_stats(&m)[0].unwrap()
        };
        assert!(gap_at(20) < gap_at(5));
    }

    #[test]
    fn replication_stderr_scaling() {
        let p = profile(1.0, 1.0);
        let mut config = single_cache_config(p, co(0.5, 1.0), 1.0);
        config.horizon = 500.0;
        let short: Vec<f64> = replicate(&config, 40)
            .unwrap()
            .iter()
            .map(|m| m.overall_hit_ratio)
            .collect();
        config.horizon = 2000.0;
        let long: Vec<f64> = replicate(&config, 40)
            .unwrap()
            .iter()
            .map(|m| m.overall_hit_ratio)
            .collect();
        let (_, se_short) = mean_stderr(&short);
        let (_, se_long) = mean_stderr(&long);
        assert!(se_long < se_short, "stderr did not shrink: {se_short} vs {se_long}");
        let (_, one) = mean_stderr(&long[..1]);
        assert!(one.is_nan());
    }
}

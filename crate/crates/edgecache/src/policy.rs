//! Per-item cache-control policies and the runtime cache state machine.
//!
//! A TTL policy loads the requested item with a caching timer `tau` (the
//! copy is evicted when it fires) and a deaf timer `omega >= tau` (broadcast
//! copies are ignored until it fires). An overheard copy carries no timer of
//! its own: it stays until the item's next request is served, which restarts
//! both timers. Randomized policies draw a fresh `(tau, omega)` component at
//! every request.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rng::Stream;

/// A timer duration; finite nonnegative or infinite. Serialized as a JSON
/// number, or the string "inf" for the infinite timer.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Ttl(f64);

impl Ttl {
    pub const ZERO: Ttl = Ttl(0.0);
    pub const INF: Ttl = Ttl(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::InvalidPolicy(format!("timer must be nonnegative, got {value}")));
        }
        Ok(Ttl(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

impl Serialize for Ttl {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Ttl {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let v = match Raw::deserialize(d)? {
            Raw::Num(v) => v,
            Raw::Text(t) if t == "inf" => f64::INFINITY,
            Raw::Text(t) => return Err(D::Error::custom(format!("bad timer value {t:?}"))),
        };
        Ttl::new(v).map_err(D::Error::custom)
    }
}

/// One deterministic component of a randomized policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RcoComponent {
    pub weight: f64,
    pub tau: Ttl,
    pub omega: Ttl,
}

impl RcoComponent {
    pub fn new(weight: f64, tau: Ttl, omega: Ttl) -> Self {
        RcoComponent { weight, tau, omega }
    }

    pub fn reweight(self, weight: f64) -> Self {
        RcoComponent { weight, ..self }
    }
}

/// The control policy of a single item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ItemPolicy {
    /// Caching timer plus deaf timer.
    Co { tau: Ttl, omega: Ttl },
    /// Randomized mixture of timer pairs; a component is drawn per request.
    Rco { components: Vec<RcoComponent> },
    /// Caching only: never stores broadcast copies. Same as `Co(tau, inf)`.
    CacheOnly { tau: Ttl },
    /// Overhearing only: own requests are not cached. Same as `Co(0, omega)`.
    OverhearOnly { omega: Ttl },
}

impl ItemPolicy {
    pub fn co(tau: Ttl, omega: Ttl) -> ItemPolicy {
        ItemPolicy::Co { tau, omega }
    }

    pub fn rco(components: Vec<RcoComponent>) -> ItemPolicy {
        ItemPolicy::Rco { components }
    }

    /// Canonical component list: aliases collapse onto `Co`, and `Co` is a
    /// one-component mixture.
    pub fn components(&self) -> Vec<RcoComponent> {
        match self {
            ItemPolicy::Co { tau, omega } => vec![RcoComponent::new(1.0, *tau, *omega)],
            ItemPolicy::CacheOnly { tau } => vec![RcoComponent::new(1.0, *tau, Ttl::INF)],
            ItemPolicy::OverhearOnly { omega } => vec![RcoComponent::new(1.0, Ttl::ZERO, *omega)],
            ItemPolicy::Rco { components } => components.clone(),
        }
    }

    /// Checks `omega >= tau` on every component and that weights form a
    /// probability distribution.
    pub fn validate(&self) -> Result<()> {
        let comps = self.components();
        if comps.is_empty() {
            return Err(Error::InvalidPolicy("randomized policy needs components".into()));
        }
        let mut total = 0.0;
        for c in &comps {
            if c.omega < c.tau {
                return Err(Error::InvalidPolicy(format!(
                    "deaf timer {} shorter than caching timer {}",
                    c.omega.value(),
                    c.tau.value()
                )));
            }
            if c.weight < 0.0 || c.weight.is_nan() {
                return Err(Error::InvalidPolicy(format!("bad component weight {}", c.weight)));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidPolicy(format!("component weights sum to {total}")));
        }
        Ok(())
    }
}

/// Cache-wide policy: either one TTL policy per item, or a classic
/// capacity-bound eviction baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum CachePolicy {
    PerItem { items: Vec<ItemPolicy> },
    Lru { capacity: usize },
    Lfu { capacity: usize },
}

/// How the cache size constraint is enforced at runtime. TTL policies are
/// sized in expectation by the optimizer; `Hard` additionally rejects or
/// evicts to keep at most `b` items resident.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CapacityMode {
    #[default]
    Average,
    Hard {
        b: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RequestOutcome {
    Hit,
    Miss,
}

/// A caching-timer expiry the simulator must schedule. Stale handles (the
/// item was requested again meanwhile) are ignored by `on_timer`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimerHandle {
    pub item: usize,
    pub time: f64,
    pub generation: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct ItemState {
    cached: bool,
    overheard: bool,
    cache_expire: f64,
    deaf_until: f64,
    generation: u64,
    since: f64,
    resident: f64,
}

impl ItemState {
    fn present(&self) -> bool {
        self.cached || self.overheard
    }
}

#[derive(Debug, Clone)]
enum Mechanism {
    PerItem(Vec<ItemPolicy>),
    Lru {
        capacity: usize,
        // Intrusive doubly-linked list over item indices.
        prev: Vec<usize>,
        next: Vec<usize>,
        head: usize,
        tail: usize,
        len: usize,
    },
    Lfu {
        capacity: usize,
        counts: Vec<u64>,
        heap: std::collections::BinaryHeap<std::cmp::Reverse<(u64, usize)>>,
        len: usize,
    },
}

const NIL: usize = usize::MAX;

/// The live state of one cache.
#[derive(Debug, Clone)]
pub struct CacheState {
    items: Vec<ItemState>,
    mechanism: Mechanism,
    capacity: CapacityMode,
    occupied: usize,
    baselines_overhear: bool,
}

impl CacheState {
    pub fn new(policy: CachePolicy, n_items: usize, capacity: CapacityMode) -> Result<Self> {
        let mechanism = match policy {
            CachePolicy::PerItem { items } => {
                if items.len() != n_items {
                    return Err(Error::InvalidPolicy(format!(
                        "need one policy per item: got {} for {n_items} items",
                        items.len()
                    )));
                }
                for p in &items {
                    p.validate()?;
                }
                Mechanism::PerItem(items)
            }
            CachePolicy::Lru { capacity } => Mechanism::Lru {
                capacity,
                prev: vec![NIL; n_items],
                next: vec![NIL; n_items],
                head: NIL,
                tail: NIL,
                len: 0,
            },
            CachePolicy::Lfu { capacity } => Mechanism::Lfu {
                capacity,
                counts: vec![0; n_items],
                heap: std::collections::BinaryHeap::new(),
                len: 0,
            },
        };
        Ok(CacheState {
            items: vec![ItemState::default(); n_items],
            mechanism,
            capacity,
            occupied: 0,
            baselines_overhear: false,
        })
    }

    /// Let LRU/LFU store broadcast copies too (off by default).
    pub fn set_baselines_overhear(&mut self, yes: bool) {
        self.baselines_overhear = yes;
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn occupied(&self) -> usize {
        self.occupied
    }

    pub fn is_present(&self, item: usize) -> bool {
        self.items[item].present()
    }

    fn check_item(&self, item: usize) -> Result<()> {
        if item >= self.items.len() {
            return Err(Error::InvalidConfig(format!("unknown item index {item}")));
        }
        Ok(())
    }

    fn make_present(&mut self, item: usize, t: f64) {
        let st = &mut self.items[item];
        if !st.present() {
            st.since = t;
            self.occupied += 1;
        }
    }

    fn make_absent(&mut self, item: usize, t: f64) {
        let st = &mut self.items[item];
        if st.present() {
            st.resident += t - st.since;
            self.occupied -= 1;
        }
        st.cached = false;
        st.overheard = false;
    }

    fn hard_capacity(&self) -> Option<usize> {
        match self.capacity {
            CapacityMode::Average => None,
            CapacityMode::Hard { b } => Some(b),
        }
    }

    /// Evict the resident item with the nearest caching deadline (timerless
    /// overheard copies are last in line).
    fn evict_nearest_deadline(&mut self, t: f64) {
        let mut victim = None;
        let mut best = f64::INFINITY;
        for (i, st) in self.items.iter().enumerate() {
            if !st.present() {
                continue;
            }
            let deadline = if st.cached { st.cache_expire } else { f64::INFINITY };
            if victim.is_none() || deadline < best {
                best = deadline;
                victim = Some(i);
            }
        }
        if let Some(i) = victim {
            self.make_absent(i, t);
        }
    }

    /// Install the policy state implied by a virtual request `age` time
    /// units before t = 0, as under a stationary start: the copy is still
    /// cached when the caching timer outlives the age, and the deaf window
    /// keeps running from that request. Per-item policies only; LRU/LFU
    /// start empty. Returns a timer to schedule when a finite caching
    /// deadline is still pending.
    pub fn init_stationary(
        &mut self,
        item: usize,
        age: f64,
        rng: &mut Stream,
    ) -> Result<Option<TimerHandle>> {
        self.check_item(item)?;
        let comp = match &self.mechanism {
            Mechanism::PerItem(policies) => {
                let comps = policies[item].components();
                if comps.len() == 1 {
                    comps[0]
                } else {
                    let weights: Vec<f64> = comps.iter().map(|c| c.weight).collect();
                    comps[rng.categorical(&weights)]
                }
            }
            _ => return Ok(None),
        };
        let tau = comp.tau.value();
        let omega = comp.omega.value();
        let st = &mut self.items[item];
        st.deaf_until = if omega.is_infinite() { f64::INFINITY } else { omega - age };
        st.generation += 1;
        if tau > age {
            if let Some(b) = self.hard_capacity() {
                if self.occupied >= b {
                    return Ok(None);
                }
            }
            self.make_present(item, 0.0);
            let st = &mut self.items[item];
            st.cached = true;
            st.cache_expire = tau - age;
            if tau.is_finite() {
                return Ok(Some(TimerHandle { item, time: tau - age, generation: st.generation }));
            }
        }
        Ok(None)
    }

    /// Serve a request. Returns whether it hit, plus a timer the caller must
    /// schedule when a finite caching deadline was set.
    pub fn on_request(
        &mut self,
        item: usize,
        t: f64,
        rng: &mut Stream,
    ) -> Result<(RequestOutcome, Option<TimerHandle>)> {
        self.check_item(item)?;
        let hit = {
            let st = &self.items[item];
            if (st.cached && t < st.cache_expire) || st.overheard {
                RequestOutcome::Hit
            } else {
                RequestOutcome::Miss
            }
        };
        let timer = match &mut self.mechanism {
            Mechanism::PerItem(policies) => {
                let comps = policies[item].components();
                let comp = if comps.len() == 1 {
                    comps[0]
                } else {
                    let weights: Vec<f64> = comps.iter().map(|c| c.weight).collect();
                    comps[rng.categorical(&weights)]
                };
                let tau = comp.tau.value();
                if tau > 0.0 {
                    if let Some(b) = self.hard_capacity() {
                        if !self.items[item].present() && self.occupied >= b {
                            self.evict_nearest_deadline(t);
                        }
                    }
                    self.make_present(item, t);
                    let st = &mut self.items[item];
                    st.cached = true;
                    st.overheard = false;
                    st.cache_expire = t + tau;
                    st.deaf_until = t + comp.omega.value();
                    st.generation += 1;
                    if tau.is_finite() {
                        Some(TimerHandle { item, time: t + tau, generation: st.generation })
                    } else {
                        None
                    }
                } else {
                    self.make_absent(item, t);
                    let st = &mut self.items[item];
                    st.deaf_until = t + comp.omega.value();
                    st.generation += 1;
                    None
                }
            }
            Mechanism::Lru { capacity, prev, next, head, tail, len } => {
                let cap = *capacity;
                let in_list = self.items[item].present();
                if in_list {
                    // Unlink.
                    let (p, n) = (prev[item], next[item]);
                    if p != NIL {
                        next[p] = n;
                    } else {
                        *head = n;
                    }
                    if n != NIL {
                        prev[n] = p;
                    } else {
                        *tail = p;
                    }
                    *len -= 1;
                }
                // Push to front.
                prev[item] = NIL;
                next[item] = *head;
                if *head != NIL {
                    prev[*head] = item;
                }
                *head = item;
                if *tail == NIL {
                    *tail = item;
                }
                *len += 1;
                let evict = if *len > cap {
                    let victim = *tail;
                    *tail = prev[victim];
                    if *tail != NIL {
                        next[*tail] = NIL;
                    } else {
                        *head = NIL;
                    }
                    *len -= 1;
                    Some(victim)
                } else {
                    None
                };
                if !in_list {
                    self.make_present(item, t);
                    self.items[item].cached = true;
                    self.items[item].cache_expire = f64::INFINITY;
                }
                if let Some(v) = evict {
                    self.make_absent(v, t);
                }
                None
            }
            Mechanism::Lfu { capacity, counts, heap, len } => {
                let cap = *capacity;
                counts[item] += 1;
                if self.items[item].present() {
                    heap.push(std::cmp::Reverse((counts[item], item)));
                } else {
                    let mut victim = None;
                    if *len >= cap {
                        // Lazy pop: skip stale entries and absent items.
                        victim = Some(loop {
                            let std::cmp::Reverse((c, i)) =
                                heap.pop().expect("occupied cache has heap entries");
                            if self.items[i].present() && counts[i] == c {
                                break i;
                            }
                        });
                        *len -= 1;
                    }
                    heap.push(std::cmp::Reverse((counts[item], item)));
                    *len += 1;
                    if let Some(v) = victim {
                        self.make_absent(v, t);
                    }
                    self.make_present(item, t);
                    self.items[item].cached = true;
                    self.items[item].cache_expire = f64::INFINITY;
                }
                None
            }
        };
        Ok((hit, timer))
    }

    /// Fire a caching timer. Stale handles are silently ignored.
    pub fn on_timer(&mut self, handle: TimerHandle) {
        let item = handle.item;
        if item >= self.items.len() {
            return;
        }
        let st = &self.items[item];
        if st.generation != handle.generation || !st.cached {
            return;
        }
        self.make_absent(item, handle.time);
    }

    /// Process a broadcast of `item` heard at time `t`. Returns true when a
    /// copy was stored.
    pub fn on_overhear(&mut self, item: usize, t: f64) -> Result<bool> {
        self.check_item(item)?;
        match &self.mechanism {
            Mechanism::PerItem(_) => {
                let st = &self.items[item];
                if st.present() || t < st.deaf_until {
                    return Ok(false);
                }
                if let Some(b) = self.hard_capacity() {
                    if self.occupied >= b {
                        return Ok(false);
                    }
                }
                self.make_present(item, t);
                self.items[item].overheard = true;
                Ok(true)
            }
            Mechanism::Lru { .. } | Mechanism::Lfu { .. } => {
                if !self.baselines_overhear || self.items[item].present() {
                    return Ok(false);
                }
                // Stored as a regular insertion, counted as zero requests.
                let mut throwaway = Stream::root(0);
                let before = self.occupied;
                self.on_request(item, t, &mut throwaway)?;
                Ok(self.occupied >= before)
            }
        }
    }

    /// Per-item fraction of `[0, t]` the item spent in the cache.
    pub fn audit_occupancy(&self, t: f64) -> Vec<f64> {
        self.items
            .iter()
            .map(|st| {
                let mut r = st.resident;
                if st.present() {
                    r += t - st.since;
                }
                r / t
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn per_item(policies: Vec<ItemPolicy>) -> CacheState {
        let n = policies.len();
        CacheState::new(CachePolicy::PerItem { items: policies }, n, CapacityMode::Average).unwrap()
    }

    fn co(tau: f64, omega: f64) -> ItemPolicy {
        ItemPolicy::co(Ttl::new(tau).unwrap(), Ttl::new(omega).unwrap())
    }

    #[test]
    fn deaf_timer_must_cover_caching_timer() {
        assert!(co(3.0, 7.0).validate().is_ok());
        assert!(co(3.0, 2.0).validate().is_err());
        assert!(ItemPolicy::rco(vec![
            RcoComponent::new(0.5, Ttl::ZERO, Ttl::ZERO),
            RcoComponent::new(0.5, Ttl::INF, Ttl::ZERO),
        ])
        .validate()
        .is_err());
        assert!(ItemPolicy::rco(vec![RcoComponent::new(0.9, Ttl::ZERO, Ttl::ZERO)])
            .validate()
            .is_err());
    }

    #[test]
    fn request_timer_broadcast_walkthrough() {
        // tau = 3, omega = 7, first request at 0.
        let mut rng = Stream::root(1);
        let mut cache = per_item(vec![co(3.0, 7.0)]);
        let (out, timer) = cache.on_request(0, 0.0, &mut rng).unwrap();
        assert_eq!(out, RequestOutcome::Miss);
        let timer = timer.unwrap();
        assert_eq!(timer.time, 3.0);

        // Before the caching timer expires: hit.
        let mut probe = cache.clone();
        let (out, _) = probe.on_request(0, 2.0, &mut rng).unwrap();
        assert_eq!(out, RequestOutcome::Hit);

        // After expiry but before the deaf timer: broadcasts ignored, miss.
        let mut probe = cache.clone();
        probe.on_timer(timer);
        assert!(!probe.is_present(0));
        assert!(!probe.on_overhear(0, 5.0).unwrap());
        let (out, _) = probe.clone().on_request(0, 6.0, &mut rng).unwrap();
        assert_eq!(out, RequestOutcome::Miss);

        // Past the deaf timer a broadcast is stored and the next request hits.
        assert!(probe.on_overhear(0, 8.0).unwrap());
        let (out, _) = probe.on_request(0, 9.0, &mut rng).unwrap();
        assert_eq!(out, RequestOutcome::Hit);
    }

    #[test]
    fn infinite_ttl_always_hits_after_first() {
        let mut rng = Stream::root(2);
        let mut cache = per_item(vec![ItemPolicy::co(Ttl::INF, Ttl::INF)]);
        let (out, timer) = cache.on_request(0, 1.0, &mut rng).unwrap();
        assert_eq!(out, RequestOutcome::Miss);
        assert!(timer.is_none());
        for k in 2..50 {
            let (out, _) = cache.on_request(0, k as f64, &mut rng).unwrap();
            assert_eq!(out, RequestOutcome::Hit);
        }
    }

    #[test]
    fn stale_timer_is_ignored() {
        let mut rng = Stream::root(3);
        let mut cache = per_item(vec![co(3.0, 3.0)]);
        let (_, t1) = cache.on_request(0, 0.0, &mut rng).unwrap();
        let (_, _t2) = cache.on_request(0, 1.0, &mut rng).unwrap();
        cache.on_timer(t1.unwrap());
        assert!(cache.is_present(0));
    }

    #[test]
    fn zero_ttl_keeps_nothing_but_sets_deaf_timer() {
        let mut rng = Stream::root(4);
        let mut cache = per_item(vec![co(0.0, 5.0)]);
        let (out, timer) = cache.on_request(0, 0.0, &mut rng).unwrap();
        assert_eq!(out, RequestOutcome::Miss);
        assert!(timer.is_none());
        assert!(!cache.is_present(0));
        assert!(!cache.on_overhear(0, 4.0).unwrap());
        assert!(cache.on_overhear(0, 5.0).unwrap());
        // The overheard copy survives arbitrarily long, until the request.
        let (out, _) = cache.on_request(0, 100.0, &mut rng).unwrap();
        assert_eq!(out, RequestOutcome::Hit);
        assert!(!cache.is_present(0));
    }

    #[test]
    fn degenerate_mixture_matches_deterministic() {
        let mut rng_a = Stream::root(5);
        let mut rng_b = Stream::root(6);
        let mut a = per_item(vec![co(2.0, 4.0)]);
        let mut b = per_item(vec![ItemPolicy::rco(vec![
            RcoComponent::new(1.0, Ttl::new(2.0).unwrap(), Ttl::new(4.0).unwrap()),
            RcoComponent::new(0.0, Ttl::INF, Ttl::INF),
        ])]);
        for k in 0..200 {
            let t = 0.7 * k as f64;
            let (oa, _) = a.on_request(0, t, &mut rng_a).unwrap();
            let (ob, _) = b.on_request(0, t, &mut rng_b).unwrap();
            assert_eq!(oa, ob);
            assert!(!a.on_overhear(0, t + 0.3).unwrap());
        }
    }

    #[test]
    fn occupancy_audit_counts_residency() {
        let mut rng = Stream::root(7);
        let mut cache = per_item(vec![co(2.0, 2.0), co(0.0, 0.0)]);
        let (_, timer) = cache.on_request(0, 1.0, &mut rng).unwrap();
        cache.on_timer(timer.unwrap());
        // Item 0 resident on [1, 3]; item 1 overheard on [6, 8].
        assert!(cache.on_overhear(1, 6.0).unwrap());
        cache.on_request(1, 8.0, &mut rng).unwrap();
        let occ = cache.audit_occupancy(10.0);
        assert!((occ[0] - 0.2).abs() < 1e-12);
        assert!((occ[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn lru_eviction_order() {
        let mut rng = Stream::root(8);
        let mut cache =
            CacheState::new(CachePolicy::Lru { capacity: 2 }, 4, CapacityMode::Average).unwrap();
        for (t, item) in [(0.0, 0), (1.0, 1), (2.0, 2)] {
            let (out, _) = cache.on_request(item, t, &mut rng).unwrap();
            assert_eq!(out, RequestOutcome::Miss);
        }
        // 0 was least recently used and is gone; 1 and 2 remain.
        assert!(!cache.is_present(0));
        let (out, _) = cache.on_request(1, 3.0, &mut rng).unwrap();
        assert_eq!(out, RequestOutcome::Hit);
        // Insert 3: evicts 2 (1 was refreshed).
        cache.on_request(3, 4.0, &mut rng).unwrap();
        assert!(cache.is_present(1) && cache.is_present(3) && !cache.is_present(2));
        // Broadcasts are ignored by default.
        assert!(!cache.on_overhear(0, 5.0).unwrap());
    }

    #[test]
    fn lfu_keeps_frequent_items() {
        let mut rng = Stream::root(9);
        let mut cache =
            CacheState::new(CachePolicy::Lfu { capacity: 2 }, 3, CapacityMode::Average).unwrap();
        for t in 0..3 {
            cache.on_request(0, t as f64, &mut rng).unwrap();
        }
        cache.on_request(1, 3.0, &mut rng).unwrap();
        // Item 2 displaces the least-frequent resident (item 1).
        cache.on_request(2, 4.0, &mut rng).unwrap();
        assert!(cache.is_present(0) && cache.is_present(2) && !cache.is_present(1));
        let (out, _) = cache.on_request(0, 5.0, &mut rng).unwrap();
        assert_eq!(out, RequestOutcome::Hit);
    }

    #[test]
    fn hard_capacity_rejects_overhears_and_evicts_nearest_deadline() {
        let mut rng = Stream::root(10);
        let mut cache = CacheState::new(
            CachePolicy::PerItem { items: vec![co(10.0, 10.0), co(2.0, 2.0), co(5.0, 5.0)] },
            3,
            CapacityMode::Hard { b: 2 },
        )
        .unwrap();
        cache.on_request(0, 0.0, &mut rng).unwrap();
        cache.on_request(1, 0.5, &mut rng).unwrap();
        assert_eq!(cache.occupied(), 2);
        // Full: a broadcast copy is rejected.
        assert!(!cache.on_overhear(2, 20.0).unwrap());
        // A request-load evicts the nearest deadline (item 1, deadline 2.5).
        cache.on_request(2, 1.0, &mut rng).unwrap();
        assert_eq!(cache.occupied(), 2);
        assert!(cache.is_present(0) && cache.is_present(2) && !cache.is_present(1));
    }

    #[test]
    fn unknown_item_errors() {
        let mut rng = Stream::root(11);
        let mut cache = per_item(vec![co(1.0, 1.0)]);
        assert!(cache.on_request(1, 0.0, &mut rng).is_err());
        assert!(cache.on_overhear(7, 0.0).is_err());
    }

    #[test]
    fn ttl_serde_inf_round_trip() {
        let p = ItemPolicy::co(Ttl::ZERO, Ttl::INF);
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"inf\""));
        let back: ItemPolicy = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        let bad: std::result::Result<Ttl, _> = serde_json::from_str("\"huge\"");
        assert!(bad.is_err());
        let neg: std::result::Result<Ttl, _> = serde_json::from_str("-1.0");
        assert!(neg.is_err());
    }
}

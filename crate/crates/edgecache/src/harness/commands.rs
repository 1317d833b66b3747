//! The `optimize` and `simulate` commands: resolve a JSON config into
//! solver or simulator runs and render a deterministic JSON report.

use serde::Serialize;

use crate::demand::Population;
use crate::error::{Error, Result};
use crate::harness::config::{Config, OverhearSpec, PolicySpec};
use crate::optimizer::{self, Allocation, OccupancyEstimate};
use crate::policy::CachePolicy;
use crate::simulator::{self, mean_stderr, OverhearMode, SimConfig};

#[derive(Serialize)]
struct OptimizeReport<'a> {
    config: &'a Config,
    /// One entry for a shared optimum, one per user when heterogeneous.
    allocations: Vec<AllocationReport>,
    upper_bound: Option<f64>,
}

#[derive(Serialize)]
struct AllocationReport {
    objective: f64,
    total_occupancy: f64,
    r_star: Vec<f64>,
    policies: Vec<crate::policy::ItemPolicy>,
}

impl From<Allocation> for AllocationReport {
    fn from(a: Allocation) -> Self {
        AllocationReport {
            objective: a.objective,
            total_occupancy: a.total_occupancy(),
            r_star: a.r_star,
            policies: a.policies,
        }
    }
}

fn estimates_for(cfg: &Config, pop: &Population) -> Result<Vec<OccupancyEstimate>> {
    optimizer::estimate_occupancies(pop, cfg.estimation_horizon(), cfg.seed)
}

pub fn cmd_optimize(cfg: &Config) -> Result<String> {
    cfg.validate()?;
    let pop = cfg.population()?;
    let b = cfg.cache_size;

    let (allocations, upper_bound) = if pop.is_homogeneous() {
        let catalog = cfg.catalog()?;
        let alloc = match &cfg.overhearing {
            OverhearSpec::TimeDriven { .. } => {
                let lambdas = cfg.lambdas(&catalog)?;
                optimizer::solve_time_driven(&catalog, &lambdas, b)?
            }
            OverhearSpec::EventDriven => {
                let estimates = estimates_for(cfg, &pop)?;
                optimizer::solve_event_driven(&catalog, b, &estimates)?
            }
        };
        let ub = optimizer::upper_bound_objective(&catalog, b)?;
        (vec![alloc.into()], Some(ub))
    } else {
        let lambdas = heterogeneous_lambdas(cfg, &pop)?;
        let allocs = optimizer::solve_heterogeneous_time_driven(&pop, &lambdas, b)?;
        (allocs.into_iter().map(Into::into).collect(), None)
    };

    let report = OptimizeReport { config: cfg, allocations, upper_bound };
    Ok(serde_json::to_string_pretty(&report)? + "\n")
}

fn heterogeneous_lambdas(cfg: &Config, pop: &Population) -> Result<Vec<f64>> {
    match &cfg.overhearing {
        OverhearSpec::TimeDriven { lambdas: Some(ls), .. } => {
            if ls.len() != pop.n_items() {
                return Err(Error::InvalidConfig(format!(
                    "need {} broadcast rates, got {}",
                    pop.n_items(),
                    ls.len()
                )));
            }
            Ok(ls.clone())
        }
        OverhearSpec::TimeDriven { .. } => Err(Error::InvalidConfig(
            "heterogeneous populations need explicit per-item lambdas".into(),
        )),
        OverhearSpec::EventDriven => Err(Error::InvalidConfig(
            "heterogeneous optimization supports time-driven broadcasts only".into(),
        )),
    }
}

/// Resolve the named policy into one concrete policy per cache.
pub fn resolve_policies(cfg: &Config, pop: &Population) -> Result<Vec<CachePolicy>> {
    let spec = cfg
        .policy
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("simulate needs a policy".into()))?;
    let b = cfg.cache_size;
    let m = pop.n_users();
    let cap = b.round().max(1.0) as usize;

    let shared = |alloc: Allocation| -> Vec<CachePolicy> {
        vec![CachePolicy::PerItem { items: alloc.policies }; m]
    };

    match spec {
        PolicySpec::Lru => Ok(vec![CachePolicy::Lru { capacity: cap }; m]),
        PolicySpec::Lfu => Ok(vec![CachePolicy::Lfu { capacity: cap }; m]),
        PolicySpec::Explicit { per_cache } => {
            if per_cache.len() != m && per_cache.len() != 1 {
                return Err(Error::InvalidConfig(format!(
                    "explicit policy needs 1 or {m} cache entries, got {}",
                    per_cache.len()
                )));
            }
            Ok(per_cache.clone())
        }
        PolicySpec::OverhearPopular => {
            let items = optimizer::overhear_only_policies(pop, b)?;
            Ok(items.into_iter().map(|i| CachePolicy::PerItem { items: i }).collect())
        }
        PolicySpec::CachingOnly => {
            if !pop.is_homogeneous() {
                return Err(Error::InvalidConfig(
                    "caching-only resolution needs a homogeneous population".into(),
                ));
            }
            Ok(shared(optimizer::solve_caching_only(&cfg.catalog()?, b)?))
        }
        PolicySpec::TimeDrivenOptimal => {
            if !pop.is_homogeneous() {
                let lambdas = heterogeneous_lambdas(cfg, pop)?;
                let allocs = optimizer::solve_heterogeneous_time_driven(pop, &lambdas, b)?;
                return Ok(allocs
                    .into_iter()
                    .map(|a| CachePolicy::PerItem { items: a.policies })
                    .collect());
            }
            let catalog = cfg.catalog()?;
            let lambdas = cfg.lambdas(&catalog)?;
            Ok(shared(optimizer::solve_time_driven(&catalog, &lambdas, b)?))
        }
        PolicySpec::EventDrivenOptimal => {
            if !matches!(cfg.overhearing, OverhearSpec::EventDriven) {
                return Err(Error::InvalidConfig(
                    "event-driven-optimal needs event-driven overhearing".into(),
                ));
            }
            let catalog = cfg.catalog()?;
            let estimates = estimates_for(cfg, pop)?;
            Ok(shared(optimizer::solve_event_driven(&catalog, b, &estimates)?))
        }
        PolicySpec::OverhearingOnly => {
            let catalog = cfg.catalog()?;
            match &cfg.overhearing {
                OverhearSpec::TimeDriven { .. } => {
                    let lambdas = cfg.lambdas(&catalog)?;
                    Ok(shared(optimizer::solve_overhearing_only_time_driven(
                        &catalog, &lambdas, b,
                    )?))
                }
                OverhearSpec::EventDriven => {
                    let estimates = estimates_for(cfg, pop)?;
                    Ok(shared(optimizer::solve_overhearing_only_event_driven(
                        &catalog, b, &estimates,
                    )?))
                }
            }
        }
    }
}

pub fn sim_config(cfg: &Config) -> Result<SimConfig> {
    cfg.validate()?;
    let pop = cfg.population()?;
    let policies = resolve_policies(cfg, &pop)?;
    let mode = match &cfg.overhearing {
        OverhearSpec::TimeDriven { .. } => {
            let catalog = if pop.is_homogeneous() { Some(cfg.catalog()?) } else { None };
            let lambdas = match (&catalog, &cfg.overhearing) {
                (Some(c), _) => cfg.lambdas(c)?,
                (None, _) => heterogeneous_lambdas(cfg, &pop)?,
            };
            OverhearMode::TimeDriven { lambdas }
        }
        OverhearSpec::EventDriven => OverhearMode::EventDriven,
    };
    let mut sim = SimConfig::new(pop, policies, mode);
    if let Some(h) = cfg.horizon {
        sim.horizon = h;
    }
    sim.seed = cfg.seed;
    sim.warmup = cfg.warmup;
    sim.start = cfg.start;
    sim.capacity = cfg.capacity;
    sim.broadcast_delay = cfg.broadcast_delay;
    sim.baselines_overhear = cfg.baselines_overhear;
    Ok(sim)
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    config: &'a Config,
    replications: usize,
    hit_ratio_mean: f64,
    hit_ratio_stderr: f64,
    occupancy_mean: f64,
    occupancy_stderr: f64,
    per_cache_hit_ratio: Vec<f64>,
    total_requests: u64,
}

pub fn cmd_simulate(cfg: &Config) -> Result<String> {
    let sim = sim_config(cfg)?;
    let runs = simulator::replicate(&sim, cfg.replications)?;
    let hits: Vec<f64> = runs.iter().map(|m| m.overall_hit_ratio).collect();
    let occs: Vec<f64> = runs
        .iter()
        .map(|m| m.occupancy.iter().map(|c| c.iter().sum::<f64>()).sum::<f64>() / m.n_caches() as f64)
        .collect();
    let (h_mean, h_err) = mean_stderr(&hits);
    let (r_mean, r_err) = mean_stderr(&occs);
    let n_caches = runs[0].n_caches();
    let per_cache: Vec<f64> = (0..n_caches)
        .map(|c| {
            let hits: u64 = runs.iter().map(|m| m.hits[c].iter().sum::<u64>()).sum();
            let reqs: u64 = runs.iter().map(|m| m.requests[c].iter().sum::<u64>()).sum();
            if reqs == 0 {
                f64::NAN
            } else {
                hits as f64 / reqs as f64
            }
        })
        .collect();
    let report = SimulateReport {
        config: cfg,
        replications: cfg.replications,
        hit_ratio_mean: h_mean,
        hit_ratio_stderr: if h_err.is_nan() { 0.0 } else { h_err },
        occupancy_mean: r_mean,
        occupancy_stderr: if r_err.is_nan() { 0.0 } else { r_err },
        per_cache_hit_ratio: per_cache,
        total_requests: runs.iter().map(|m| m.total_requests()).sum(),
    };
    Ok(serde_json::to_string_pretty(&report)? + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    const CFG: &str = r#"{
        "seed": 3,
        "population": {"generator": {"n": 20, "zipf_exponent": 0.8, "s_rule": "inverse-beta"}, "users": 2},
        "cache_size": 3.0,
        "overhearing": {"mode": "time-driven", "gamma": 1.0},
        "policy": {"name": "time-driven-optimal"},
        "horizon": 2000.0,
        "replications": 2
    }"#;

    #[test]
    fn optimize_and_simulate_are_deterministic() {
        let cfg = Config::from_str(CFG).unwrap();
        let a = cmd_optimize(&cfg).unwrap();
        let b = cmd_optimize(&cfg).unwrap();
        assert_eq!(a, b);
        let s1 = cmd_simulate(&cfg).unwrap();
        let s2 = cmd_simulate(&cfg).unwrap();
        assert_eq!(s1, s2);
        assert!(s1.contains("hit_ratio_mean"));
    }

    #[test]
    fn simulate_requires_policy() {
        let mut cfg = Config::from_str(CFG).unwrap();
        cfg.policy = None;
        assert!(matches!(cmd_simulate(&cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn event_driven_optimal_round_trip() {
        let ev = CFG
            .replace(
                r#"{"mode": "time-driven", "gamma": 1.0}"#,
                r#"{"mode": "event-driven"}"#,
            )
            .replace("time-driven-optimal", "event-driven-optimal");
        let cfg = Config::from_str(&ev).unwrap();
        let out = cmd_simulate(&cfg).unwrap();
        assert!(out.contains("hit_ratio_mean"));
        let opt = cmd_optimize(&cfg).unwrap();
        assert!(opt.contains("upper_bound"));
    }
}

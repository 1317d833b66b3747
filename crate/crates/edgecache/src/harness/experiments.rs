//! Canned experiments: the shared-LRU user-count study, the Poisson-
//! broadcast policy comparison, and the miss-triggered broadcast scaling
//! study. Each returns one result table per sweep axis.

use crate::demand::{Catalog, Population};
use crate::error::Result;
use crate::harness::config::{GeneratorSpec, SRule};
use crate::harness::table::{ResultRow, ResultTable};
use crate::optimizer::{self, Allocation};
use crate::policy::CachePolicy;
use crate::simulator::{self, mean_stderr, OverhearMode, SimConfig};

/// Overrides for the canned experiments; `None` keeps the default setup.
#[derive(Debug, Clone, Default)]
pub struct ExperimentSpec {
    pub seed: u64,
    pub replications: Option<usize>,
    pub horizon: Option<f64>,
    /// Values of the first sweep axis.
    pub sweep: Option<Vec<f64>>,
    /// Values of the second sweep axis, where the experiment has one.
    pub sweep2: Option<Vec<f64>>,
    /// Event-driven estimation phase length.
    pub estimation_horizon: Option<f64>,
    /// Longer horizons and more replications (slower).
    pub paper_scale: bool,
}

impl ExperimentSpec {
    fn reps(&self, desk: usize) -> usize {
        self.replications.unwrap_or(if self.paper_scale { 2 * desk } else { desk })
    }

    fn horizon(&self, desk: f64) -> f64 {
        self.horizon.unwrap_or(if self.paper_scale { 5.0 * desk } else { desk })
    }
}

fn zipf_catalog(n: usize, exponent: f64, s_rule: SRule) -> Result<Catalog> {
    Catalog::new(GeneratorSpec { n, zipf_exponent: exponent, c: None, s_rule }.profiles()?)
}

fn per_item(alloc: &Allocation) -> CachePolicy {
    CachePolicy::PerItem { items: alloc.policies.clone() }
}

fn measure(
    pop: &Population,
    policy: &CachePolicy,
    n_caches: usize,
    mode: OverhearMode,
    horizon: f64,
    seed: u64,
    reps: usize,
) -> Result<(f64, f64)> {
    let mut cfg = SimConfig::new(pop.clone(), vec![policy.clone(); n_caches], mode);
    cfg.horizon = horizon;
    cfg.warmup = Some(0.1);
    cfg.seed = seed;
    let hits: Vec<f64> =
        simulator::replicate(&cfg, reps)?.iter().map(|m| m.overall_hit_ratio).collect();
    Ok(mean_stderr(&hits))
}

/// One LRU cache of fixed size serving the merged requests of M users,
/// swept over M. With few users the request recurrence gap exceeds what
/// the cache retains and the hit ratio collapses.
pub fn run_fig2(spec: &ExperimentSpec) -> Result<Vec<ResultTable>> {
    let n = 1000;
    let b = 50usize;
    let catalog = zipf_catalog(n, 1.4, SRule::Constant { value: 5000.0 })?;
    let max_mean =
        catalog.items().iter().map(|p| p.mean_interrequest()).fold(0.0f64, f64::max);
    // Each sweep point needs the horizon to span many renewal cycles of
    // even the rarest item.
    let horizon = spec.horizon.unwrap_or(200.0 * max_mean);
    let reps = spec.reps(2);
    let users: Vec<f64> =
        spec.sweep.clone().unwrap_or_else(|| vec![1.0, 10.0, 100.0, 1000.0]);

    let mut table = ResultTable::new("users");
    for &mf in &users {
        let m = mf.round() as usize;
        let pop = Population::homogeneous(&catalog, m)?;
        let policy = CachePolicy::Lru { capacity: b };
        let (mean, err) = measure(
            &pop,
            &policy,
            1,
            OverhearMode::TimeDriven { lambdas: vec![0.0; n] },
            horizon,
            spec.seed,
            reps,
        )?;
        table.push(ResultRow {
            sweep: mf,
            policy: "lru".into(),
            mean_hit_ratio: mean,
            stderr: err,
            analytic: None,
            upper_bound: None,
        });
    }
    Ok(vec![table])
}

/// The five-policy roster under Poisson broadcasts on one cache.
fn exp1_rows(
    catalog: &Catalog,
    gamma: f64,
    b: f64,
    sweep: f64,
    horizon: f64,
    seed: u64,
    reps: usize,
    table: &mut ResultTable,
) -> Result<()> {
    let pop = Population::homogeneous(catalog, 1)?;
    let lambdas: Vec<f64> = catalog.items().iter().map(|p| gamma * p.beta).collect();
    let opt = optimizer::solve_time_driven(catalog, &lambdas, b)?;
    let cache_only = optimizer::solve_caching_only(catalog, b)?;
    let overhear_only = optimizer::solve_overhearing_only_time_driven(catalog, &lambdas, b)?;
    let ub = optimizer::upper_bound_objective(catalog, b)?;
    let cap = b.round() as usize;

    let runs: Vec<(&str, CachePolicy, Option<f64>)> = vec![
        ("optimal", per_item(&opt), Some(opt.objective)),
        ("overhearing-only", per_item(&overhear_only), Some(overhear_only.objective)),
        ("caching-only", per_item(&cache_only), Some(cache_only.objective)),
        ("lfu", CachePolicy::Lfu { capacity: cap }, None),
        ("lru", CachePolicy::Lru { capacity: cap }, None),
    ];
    for (name, policy, analytic) in runs {
        let (mean, err) = measure(
            &pop,
            &policy,
            1,
            OverhearMode::TimeDriven { lambdas: lambdas.clone() },
            horizon,
            seed,
            reps,
        )?;
        table.push(ResultRow {
            sweep,
            policy: name.into(),
            mean_hit_ratio: mean,
            stderr: err,
            analytic,
            upper_bound: Some(ub),
        });
    }
    Ok(())
}

/// Policy comparison under Poisson broadcasts: a sweep over the broadcast
/// intensity gamma at b = 50, and a sweep over the cache size b at
/// gamma = 1.
pub fn run_exp1(spec: &ExperimentSpec) -> Result<Vec<ResultTable>> {
    let n = 1000;
    let catalog = zipf_catalog(n, 0.8, SRule::InverseBeta)?;
    let horizon = spec.horizon(2.0e5);
    let reps = spec.reps(20);
    let gammas: Vec<f64> =
        spec.sweep.clone().unwrap_or_else(|| vec![0.1, 0.5, 1.0, 2.0, 5.0]);
    let budgets: Vec<f64> = spec
        .sweep2
        .clone()
        .unwrap_or_else(|| vec![10.0, 50.0, 100.0, 500.0, 1000.0]);

    let mut by_gamma = ResultTable::new("gamma");
    for &g in &gammas {
        exp1_rows(&catalog, g, 50.0, g, horizon, spec.seed, reps, &mut by_gamma)?;
    }
    let mut by_budget = ResultTable::new("cache_size");
    for &b in &budgets {
        exp1_rows(&catalog, 1.0, b, b, horizon, spec.seed, reps, &mut by_budget)?;
    }
    Ok(vec![by_gamma, by_budget])
}

/// The five-policy roster under miss-triggered broadcasts with M caches.
fn exp2_rows(
    catalog: &Catalog,
    m: usize,
    b: f64,
    sweep: f64,
    horizon: f64,
    est_horizon: f64,
    seed: u64,
    reps: usize,
    table: &mut ResultTable,
) -> Result<()> {
    let pop = Population::homogeneous(catalog, m)?;
    // Estimation phase: a probe run measures inter-overhearing gaps, then
    // every cache adopts the estimated mixture policy.
    let estimates = optimizer::estimate_occupancies(&pop, est_horizon, seed)?;
    let event_opt = optimizer::solve_event_driven(catalog, b, &estimates)?;
    let overhear_only = optimizer::solve_overhearing_only_event_driven(catalog, b, &estimates)?;
    let cache_only = optimizer::solve_caching_only(catalog, b)?;
    let ub = optimizer::upper_bound_objective(catalog, b)?;
    let cap = b.round() as usize;

    let runs: Vec<(&str, CachePolicy, Option<f64>)> = vec![
        ("event-optimal", per_item(&event_opt), Some(event_opt.objective)),
        ("overhearing-only", per_item(&overhear_only), Some(overhear_only.objective)),
        ("caching-only", per_item(&cache_only), Some(cache_only.objective)),
        ("lfu", CachePolicy::Lfu { capacity: cap }, None),
        ("lru", CachePolicy::Lru { capacity: cap }, None),
    ];
    for (name, policy, analytic) in runs {
        let (mean, err) =
            measure(&pop, &policy, m, OverhearMode::EventDriven, horizon, seed, reps)?;
        table.push(ResultRow {
            sweep,
            policy: name.into(),
            mean_hit_ratio: mean,
            stderr: err,
            analytic,
            upper_bound: Some(ub),
        });
    }
    Ok(())
}

/// Miss-triggered broadcasts: a sweep over the number of caches M at
/// b = 50, and a sweep over the cache size b at M = 50.
pub fn run_exp2(spec: &ExperimentSpec) -> Result<Vec<ResultTable>> {
    let n = 1000;
    let catalog = zipf_catalog(n, 0.8, SRule::InverseBeta)?;
    let horizon = spec.horizon(2.0e4);
    let est_horizon = spec.estimation_horizon.unwrap_or(1.0e4);
    let reps = spec.reps(5);
    let ms: Vec<f64> =
        spec.sweep.clone().unwrap_or_else(|| vec![10.0, 25.0, 50.0, 100.0]);
    let budgets: Vec<f64> = spec
        .sweep2
        .clone()
        .unwrap_or_else(|| vec![10.0, 50.0, 100.0, 500.0, 1000.0]);

    let mut by_m = ResultTable::new("caches");
    for &mf in &ms {
        exp2_rows(
            &catalog,
            mf.round() as usize,
            50.0,
            mf,
            horizon,
            est_horizon,
            spec.seed,
            reps,
            &mut by_m,
        )?;
    }
    let mut by_budget = ResultTable::new("cache_size");
    for &b in &budgets {
        exp2_rows(&catalog, 50, b, b, horizon, est_horizon, spec.seed, reps, &mut by_budget)?;
    }
    Ok(vec![by_m, by_budget])
}

/// Render a set of tables as CSV blocks separated by blank lines.
pub fn render_tables(tables: &[ResultTable]) -> String {
    tables.iter().map(|t| t.to_csv()).collect::<Vec<_>>().join("\n")
}

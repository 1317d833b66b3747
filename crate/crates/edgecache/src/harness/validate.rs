//! Self-checks for the closed forms, the solver, and the simulator.
//! Each check is a named pass/fail with a one-line detail.

use crate::analytics::{
    self, hit_caching, hit_co, hit_overhearing, occupancy_caching, occupancy_co,
    occupancy_overhearing, OccupancyCurve,
};
use crate::demand::{Catalog, DemandProfile, Population};
use crate::error::Result;
use crate::optimizer;
use crate::policy::{CachePolicy, ItemPolicy, Ttl};
use crate::rng::Stream;
use crate::simulator::{self, mean_stderr, OverhearMode, SimConfig};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check { name: name.into(), passed, detail }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("{tag}  {:<32} {}\n", c.name, c.detail));
        }
        let n_fail = self.checks.iter().filter(|c| !c.passed).count();
        out.push_str(&format!(
            "{} checks, {} failed\n",
            self.checks.len(),
            n_fail
        ));
        out
    }
}

/// Deliberate perturbations used to prove the checks can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    None,
    /// Adds a constant offset to the short-timer branch of the caching
    /// occupancy, recreating a published formula error this library fixes.
    Case1Offset,
}

fn occupancy_caching_maybe_faulty(p: DemandProfile, tau: f64, fault: Fault) -> f64 {
    let base = occupancy_caching(p, tau);
    match fault {
        Fault::Case1Offset if tau <= p.s => 0.0, // the uncorrected branch
        _ => base,
    }
}

fn random_profile(rng: &mut Stream) -> DemandProfile {
    let s = 0.2 + 5.0 * rng.next_f64();
    let beta = 0.1 + 3.0 * rng.next_f64();
    DemandProfile::new(s, beta).expect("valid random profile")
}

/// Closed forms at the hand-checked reference point s = beta = lambda = 1,
/// tau = omega = 0.
fn check_reference_point() -> Check {
    let p = DemandProfile::new(1.0, 1.0).unwrap();
    let h = hit_co(p, 1.0, 0.0, 0.0);
    let r = occupancy_co(p, 1.0, 0.0, 0.0);
    let h_ref = 1.0 - (-1.0f64).exp() / 2.0;
    let r_ref = ((-1.0f64).exp() / 2.0 + 1.0) / 2.0;
    let ok = (h - h_ref).abs() < 1e-12 && (r - r_ref).abs() < 1e-12;
    Check::new(
        "reference point",
        ok,
        format!("h={h:.6} (want {h_ref:.6}), r={r:.6} (want {r_ref:.6})"),
    )
}

/// The branch formulas must agree where their regions meet (tau = s for
/// caching, omega = s for overhearing), for many random profiles.
fn check_region_continuity(fault: Fault) -> Check {
    let mut rng = Stream::root(2024);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let p = random_profile(&mut rng);
        let lambda = 0.05 + 2.0 * rng.next_f64();
        let eps = 1e-7 * (1.0 + p.s);
        let pairs = [
            (
                occupancy_caching_maybe_faulty(p, p.s - eps, fault),
                occupancy_caching_maybe_faulty(p, p.s + eps, fault),
            ),
            (hit_caching(p, p.s - eps), hit_caching(p, p.s + eps)),
            (
                hit_overhearing(p, lambda, p.s - eps),
                hit_overhearing(p, lambda, p.s + eps),
            ),
            (
                occupancy_overhearing(p, lambda, p.s - eps),
                occupancy_overhearing(p, lambda, p.s + eps),
            ),
        ];
        for (a, b) in pairs {
            worst = worst.max((a - b).abs());
        }
    }
    Check::new(
        "region continuity",
        worst < 1e-5,
        format!("max jump across branch boundaries {worst:.3e}"),
    )
}

/// Hit ratio and occupancy of the combined policy must equal the sum of
/// the caching part and the overhearing part whenever omega >= tau.
fn check_separability() -> Check {
    let mut rng = Stream::root(7);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let p = random_profile(&mut rng);
        let lambda = 0.05 + 2.0 * rng.next_f64();
        let tau = 3.0 * p.s * rng.next_f64();
        let omega = tau + 3.0 * p.s * rng.next_f64();
        let h = hit_co(p, lambda, tau, omega);
        let r = occupancy_co(p, lambda, tau, omega);
        worst = worst.max((h - hit_caching(p, tau) - hit_overhearing(p, lambda, omega)).abs());
        worst = worst.max(
            (r - occupancy_caching(p, tau) - occupancy_overhearing(p, lambda, omega)).abs(),
        );
    }
    Check::new("separability", worst < 1e-12, format!("max residual {worst:.3e}"))
}

/// The hit-vs-occupancy envelope must be concave, nondecreasing, and must
/// dominate the pure-caching envelope pointwise.
fn check_curve_shape() -> Check {
    let mut rng = Stream::root(31);
    let mut ok = true;
    let mut detail = String::from("concave, nondecreasing, dominates caching-only");
    'outer: for _ in 0..60 {
        let p = random_profile(&mut rng);
        let lambda = 0.05 + 2.0 * rng.next_f64();
        let curve = OccupancyCurve::time_driven(p, lambda).unwrap();
        let cache = OccupancyCurve::caching_only(p).unwrap();
        let grid: Vec<f64> = (0..=120).map(|k| k as f64 / 120.0).collect();
        let hs: Vec<f64> = grid.iter().map(|&r| curve.hit_ratio(r)).collect();
        for w in hs.windows(2) {
            if w[1] < w[0] - 1e-9 {
                ok = false;
                detail = "hit curve decreased".into();
                break 'outer;
            }
        }
        for k in 1..grid.len() - 1 {
            let mid = (hs[k - 1] + hs[k + 1]) / 2.0;
            if hs[k] < mid - 1e-9 {
                ok = false;
                detail = format!("convex kink at r={:.4}", grid[k]);
                break 'outer;
            }
        }
        for (&r, &h) in grid.iter().zip(&hs) {
            if h < cache.hit_ratio(r) - 1e-9 {
                ok = false;
                detail = format!("caching-only exceeds envelope at r={r:.4}");
                break 'outer;
            }
        }
    }
    Check::new("curve shape", ok, detail)
}

/// Inverting the envelope must return a policy whose closed-form hit ratio
/// and occupancy land back on the curve.
fn check_invert_round_trip() -> Check {
    let mut rng = Stream::root(99);
    let mut worst = 0.0f64;
    for _ in 0..60 {
        let p = random_profile(&mut rng);
        let lambda = 0.05 + 2.0 * rng.next_f64();
        let curve = OccupancyCurve::time_driven(p, lambda).unwrap();
        for k in 0..=20 {
            let r = curve.max_occupancy() * k as f64 / 20.0;
            let policy = curve.invert(r);
            let h = analytics::policy_hit(p, lambda, &policy);
            let r_back = analytics::policy_occupancy(p, lambda, &policy);
            worst = worst.max((r_back - r).abs()).max((h - curve.hit_ratio(r)).abs());
        }
    }
    Check::new("inverse policies", worst < 1e-6, format!("max round-trip error {worst:.3e}"))
}

/// The greedy allocation must stay within budget and match a fine grid
/// search to 1e-3 on random instances.
fn check_solver_vs_oracle(quick: bool) -> Check {
    let instances = if quick { 10 } else { 40 };
    let mut rng = Stream::root(4242);
    let mut worst = 0.0f64;
    let mut infeasible = 0usize;
    for _ in 0..instances {
        let n = 3 + (rng.next_u64() % 6) as usize;
        let items: Vec<DemandProfile> = (0..n).map(|_| random_profile(&mut rng)).collect();
        let catalog = Catalog::new(items).unwrap();
        let lambdas: Vec<f64> =
            catalog.items().iter().map(|_| 0.05 + 2.0 * rng.next_f64()).collect();
        let b = rng.next_f64() * n as f64;
        let alloc = optimizer::solve_time_driven(&catalog, &lambdas, b).unwrap();
        if alloc.total_occupancy() > b + 1e-9 {
            infeasible += 1;
        }
        let curves: Vec<OccupancyCurve> = catalog
            .items()
            .iter()
            .zip(&lambdas)
            .map(|(&it, &l)| OccupancyCurve::time_driven(it, l).unwrap())
            .collect();
        let p = catalog.popularity().unwrap();
        let oracle = optimizer::grid_oracle(&curves, &p, b, 1.0 / 256.0).unwrap();
        worst = worst.max((alloc.objective - oracle).abs());
    }
    Check::new(
        "solver vs grid oracle",
        worst <= 1e-3 && infeasible == 0,
        format!("max |solver - oracle| {worst:.3e}, {infeasible} infeasible"),
    )
}

/// The fractional bound must sit at or above the solver objective.
fn check_upper_bound() -> Check {
    let mut rng = Stream::root(555);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..40 {
        let n = 3 + (rng.next_u64() % 6) as usize;
        let items: Vec<DemandProfile> = (0..n).map(|_| random_profile(&mut rng)).collect();
        let catalog = Catalog::new(items).unwrap();
        let lambdas: Vec<f64> =
            catalog.items().iter().map(|_| 0.05 + 2.0 * rng.next_f64()).collect();
        let b = rng.next_f64() * n as f64;
        let alloc = optimizer::solve_time_driven(&catalog, &lambdas, b).unwrap();
        let ub = optimizer::upper_bound_objective(&catalog, b).unwrap();
        worst = worst.max(alloc.objective - ub);
    }
    Check::new(
        "fractional upper bound",
        worst <= 1e-9,
        format!("max objective excess over bound {worst:.3e}"),
    )
}

/// A short simulation of a fixed timer policy must land within three
/// standard errors of the closed-form prediction.
fn check_simulation_agreement(quick: bool) -> Check {
    let p = DemandProfile::new(1.0, 1.0).unwrap();
    let catalog = Catalog::new(vec![p]).unwrap();
    let pop = Population::homogeneous(&catalog, 1).unwrap();
    let lambda = 1.0;
    let (tau, omega) = (0.7, 2.0);
    let policy = CachePolicy::PerItem {
        items: vec![ItemPolicy::co(Ttl::new(tau).unwrap(), Ttl::new(omega).unwrap())],
    };
    let mut cfg = SimConfig::new(
        pop,
        vec![policy],
        OverhearMode::TimeDriven { lambdas: vec![lambda] },
    );
    cfg.horizon = if quick { 4.0e3 } else { 2.0e4 };
    cfg.seed = 12345;
    let reps = if quick { 6 } else { 12 };
    let metrics = simulator::replicate(&cfg, reps).unwrap();
    let hits: Vec<f64> = metrics.iter().map(|m| m.overall_hit_ratio).collect();
    let occs: Vec<f64> = metrics.iter().map(|m| m.occupancy[0][0]).collect();
    let (h_mean, h_err) = mean_stderr(&hits);
    let (r_mean, r_err) = mean_stderr(&occs);
    let h_ref = hit_co(p, lambda, tau, omega);
    let r_ref = occupancy_co(p, lambda, tau, omega);
    let ok = (h_mean - h_ref).abs() <= 3.0 * h_err.max(1e-4)
        && (r_mean - r_ref).abs() <= 3.0 * r_err.max(1e-4);
    Check::new(
        "simulation agreement",
        ok,
        format!(
            "hit {h_mean:.4}±{h_err:.4} vs {h_ref:.4}, occ {r_mean:.4}±{r_err:.4} vs {r_ref:.4}"
        ),
    )
}

/// The continuity check must detect the known published-formula error when
/// it is deliberately injected.
fn check_fault_detection() -> Check {
    let faulty = check_region_continuity(Fault::Case1Offset);
    Check::new(
        "fault injection",
        !faulty.passed,
        if faulty.passed {
            "injected branch error went undetected".into()
        } else {
            "injected branch error correctly flagged".into()
        },
    )
}

pub fn run_validation(quick: bool) -> Result<ValidationReport> {
    let mut report = ValidationReport::default();
    report.checks.push(check_reference_point());
    report.checks.push(check_region_continuity(Fault::None));
    report.checks.push(check_separability());
    report.checks.push(check_curve_shape());
    report.checks.push(check_invert_round_trip());
    report.checks.push(check_solver_vs_oracle(quick));
    report.checks.push(check_upper_bound());
    report.checks.push(check_simulation_agreement(quick));
    report.checks.push(check_fault_detection());
    Ok(report)
}

//! Solve for the optimal timer policy under Poisson broadcasts, simulate
//! it, and check the measured hit ratio against the analytic prediction.
//!
//! Run with: cargo run --example simulate_optimal

use edgecache::demand::{Catalog, DemandProfile, Population};
use edgecache::optimizer;
use edgecache::policy::CachePolicy;
use edgecache::simulator::{self, mean_stderr, OverhearMode, SimConfig};

fn main() {
    let n = 50;
    let raw: Vec<f64> = (1..=n).map(|i| (i as f64).powf(-0.8)).collect();
    let c = 1.0 / raw.iter().sum::<f64>();
    let catalog = Catalog::new(
        raw.iter().map(|w| DemandProfile::new(1.0 / (c * w), c * w).unwrap()).collect(),
    )
    .unwrap();
    let lambdas: Vec<f64> = catalog.items().iter().map(|p| p.beta).collect();
    let b = 8.0;

    let alloc = optimizer::solve_time_driven(&catalog, &lambdas, b).unwrap();
    println!("analytic optimum at budget {b}: hit ratio {:.5}", alloc.objective);

    let pop = Population::homogeneous(&catalog, 1).unwrap();
    let mut cfg = SimConfig::new(
        pop,
        vec![CachePolicy::PerItem { items: alloc.policies.clone() }],
        OverhearMode::TimeDriven { lambdas },
    );
    cfg.horizon = 50_000.0;
    cfg.seed = 42;

    let runs = simulator::replicate(&cfg, 8).unwrap();
    let hits: Vec<f64> = runs.iter().map(|m| m.overall_hit_ratio).collect();
    let occs: Vec<f64> = runs
        .iter()
        .map(|m| m.occupancy[0].iter().sum::<f64>())
        .collect();
    let (h, h_err) = mean_stderr(&hits);
    let (r, r_err) = mean_stderr(&occs);

    println!("simulated: hit ratio {h:.5} +- {h_err:.5}, occupancy {r:.4} +- {r_err:.4}");
    println!("targets:   hit ratio {:.5},            occupancy {:.4}", alloc.objective, alloc.total_occupancy());
    assert!((h - alloc.objective).abs() < 4.0 * h_err.max(1e-4), "hit ratio off prediction");
    assert!((r - alloc.total_occupancy()).abs() < 5.0 * r_err.max(1e-3), "occupancy off prediction");
    println!("\nsimulation agrees with the closed-form objective.");
}

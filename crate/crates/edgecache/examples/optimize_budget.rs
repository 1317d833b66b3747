//! Allocate an average cache budget across a Zipf catalog and compare the
//! optimal timer policy against caching-only, overhearing-only, and the
//! fractional upper bound.
//!
//! Run with: cargo run --example optimize_budget

use edgecache::demand::{Catalog, DemandProfile};
use edgecache::optimizer;

fn main() {
    // 100 items, beta_i proportional to i^-0.8 (normalized to sum to 1),
    // s_i = 1/beta_i so every item costs the same 1/2 occupancy when fully
    // overheard.
    let n = 100;
    let raw: Vec<f64> = (1..=n).map(|i| (i as f64).powf(-0.8)).collect();
    let c = 1.0 / raw.iter().sum::<f64>();
    let catalog = Catalog::new(
        raw.iter().map(|w| DemandProfile::new(1.0 / (c * w), c * w).unwrap()).collect(),
    )
    .unwrap();
    let lambdas: Vec<f64> = catalog.items().iter().map(|p| p.beta).collect();

    println!("{:>8} {:>10} {:>12} {:>14} {:>12}", "budget", "optimal", "cache-only", "overhear-only", "upper");
    for b in [2.0, 5.0, 10.0, 25.0, 50.0] {
        let opt = optimizer::solve_time_driven(&catalog, &lambdas, b).unwrap();
        let cache = optimizer::solve_caching_only(&catalog, b).unwrap();
        let over = optimizer::solve_overhearing_only_time_driven(&catalog, &lambdas, b).unwrap();
        let ub = optimizer::upper_bound_objective(&catalog, b).unwrap();
        assert!(opt.total_occupancy() <= b + 1e-9);
        assert!(opt.objective >= cache.objective - 1e-12);
        assert!(opt.objective >= over.objective - 1e-12);
        assert!(opt.objective <= ub + 1e-9);
        println!(
            "{b:>8.1} {:>10.5} {:>12.5} {:>14.5} {:>12.5}",
            opt.objective, cache.objective, over.objective, ub
        );
    }

    // Inspect the structure of one allocation: most items sit either at
    // zero, at their curve breakpoint, or fully cached; at most one is
    // strictly in between.
    let b = 10.0;
    let opt = optimizer::solve_time_driven(&catalog, &lambdas, b).unwrap();
    let full = opt.r_star.iter().filter(|&&r| r >= 1.0 - 1e-9).count();
    let zero = opt.r_star.iter().filter(|&&r| r <= 1e-9).count();
    println!("\nat b = {b}: {full} items fully cached, {zero} untouched, rest at breakpoints");
    println!("objective {:.5}, occupancy used {:.5}", opt.objective, opt.total_occupancy());
}

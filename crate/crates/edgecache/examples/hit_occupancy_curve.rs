//! Trace the best achievable hit ratio as a function of cache occupancy
//! for one item, and recover the policy achieving each point.
//!
//! Run with: cargo run --example hit_occupancy_curve

use edgecache::analytics::{policy_hit, policy_occupancy, OccupancyCurve};
use edgecache::demand::DemandProfile;

fn main() {
    let p = DemandProfile::new(1.5, 1.0).unwrap();
    let lambda = 0.6;
    let curve = OccupancyCurve::time_driven(p, lambda).unwrap();

    let (r_break, h_break) = curve.breakpoint();
    println!("item: s = {}, beta = {}, lambda = {lambda}", p.s, p.beta);
    println!("breakpoint: occupancy {r_break:.5} already earns hit ratio {h_break:.5}");
    println!("initial slope (hits per unit occupancy): {:.5}\n", p.beta * p.s + 1.0);

    println!("{:>10} {:>10} {:>28}", "occupancy", "hit", "achieving policy");
    for k in 0..=10 {
        let r = k as f64 / 10.0;
        let h = curve.hit_ratio(r);
        let policy = curve.invert(r);
        // Round-trip: the recovered policy reproduces the point exactly.
        assert!((policy_hit(p, lambda, &policy) - h).abs() < 1e-9);
        assert!((policy_occupancy(p, lambda, &policy) - r).abs() < 1e-9);
        println!("{r:>10.2} {h:>10.5} {:>28}", summarize(&policy));
    }

    println!("\nBelow the breakpoint the optimum is a pure deaf-timer policy");
    println!("(cheap overheard copies); beyond it, a randomized mixture with");
    println!("always-cache. The curve is concave: the marginal value of");
    println!("occupancy only decreases.");
}

fn summarize(policy: &edgecache::policy::ItemPolicy) -> String {
    use edgecache::policy::ItemPolicy;
    match policy {
        ItemPolicy::Co { tau, omega } => format!("co(tau={:.3}, omega={:.3})", tau.value(), omega.value()),
        ItemPolicy::Rco { components } => {
            let c = &components[0];
            format!("mix: {:.3} always-cache + rest", c.weight)
        }
        ItemPolicy::CacheOnly { tau } => format!("cache-only(tau={:.3})", tau.value()),
        ItemPolicy::OverhearOnly { omega } => format!("overhear-only(omega={:.3})", omega.value()),
    }
}

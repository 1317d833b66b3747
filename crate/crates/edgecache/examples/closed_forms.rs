//! Evaluate the closed-form hit ratio and occupancy of timer policies for
//! one item, across a range of caching and deaf timers.
//!
//! Run with: cargo run --example closed_forms

use edgecache::analytics::{hit_caching, hit_co, hit_overhearing, occupancy_co};
use edgecache::demand::DemandProfile;

fn main() {
    // One item: after each request the user is silent for s = 2, then
    // re-requests at Poisson rate beta = 0.5. Broadcasts arrive at rate 0.8.
    let p = DemandProfile::new(2.0, 0.5).unwrap();
    let lambda = 0.8;

    println!("item: s = {}, beta = {}, mean inter-request = {}", p.s, p.beta, p.mean_interrequest());
    println!("broadcast rate lambda = {lambda}\n");

    println!("{:>6} {:>6} {:>10} {:>10} {:>10} {:>10}", "tau", "omega", "h_cache", "h_over", "h_total", "occupancy");
    for (tau, omega) in [
        (0.0, 0.0),
        (0.0, 2.0),
        (1.0, 1.0),
        (2.0, 4.0),
        (4.0, 4.0),
        (8.0, 8.0),
        (f64::INFINITY, f64::INFINITY),
    ] {
        let h_c = hit_caching(p, tau);
        let h_o = hit_overhearing(p, lambda, omega);
        let h = hit_co(p, lambda, tau, omega);
        let r = occupancy_co(p, lambda, tau, omega);
        println!("{tau:>6.1} {omega:>6.1} {h_c:>10.5} {h_o:>10.5} {h:>10.5} {r:>10.5}");
    }

    println!("\nThe caching part needs tau > s before it contributes hits;");
    println!("the overhearing part is cheapest per unit of occupancy, and the");
    println!("total is exactly the sum of the two parts (omega >= tau).");
}

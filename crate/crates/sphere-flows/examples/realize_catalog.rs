//! Realizes every small target of the three catalogs and prints one line
//! per target with the number of candidate fields tried.
//!
//! ```text
//! cargo run --release --example realize_catalog -- 6
//! ```

use sphere_flows::combinat::{enumerate_nc_trees, planar_trees};
use sphere_flows::portrait::Policies;
use sphere_flows::realize::{
    dual_pair_catalog, realize_antipolynomial, realize_polynomial, realize_rational, RealizationPlan,
    RealizeConfig,
};
use std::time::Instant;

fn report(kind: &str, code: &str, plan: Result<RealizationPlan, sphere_flows::realize::RealizeError>, t: Instant) {
    match plan {
        Ok(p) => {
            let attempts: usize = p.steps.iter().map(|s| s.attempts).sum();
            let min_delta = p.steps.iter().filter_map(|s| s.delta).fold(f64::INFINITY, f64::min);
            println!(
                "{kind:<8} {} attempts={attempts:<3} min_delta={min_delta:.1e} {:>6.2}s  {code}",
                if p.verification.passed { "pass" } else { "FAIL" },
                t.elapsed().as_secs_f64()
            );
        }
        Err(e) => println!("{kind:<8} ERROR {e}  {code}"),
    }
}

fn main() {
    let max_d: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    let cfg = RealizeConfig::default();
    for d in 2..=max_d {
        for (code, tree) in planar_trees(d, Policies::STRICT).expect("within budget") {
            let t = Instant::now();
            report("poly", &code.code, realize_polynomial(&tree, &cfg), t);
        }
    }
    for pair in dual_pair_catalog(2) {
        let t = Instant::now();
        let code = format!("{} | {}", pair.codes()[0], pair.codes()[1]);
        report("rational", &code, realize_rational(&pair, &cfg), t);
    }
    for tree in enumerate_nc_trees(4, true).expect("within budget") {
        let t = Instant::now();
        report("anti", &tree.canonical(false), realize_antipolynomial(&tree, &cfg), t);
    }
}

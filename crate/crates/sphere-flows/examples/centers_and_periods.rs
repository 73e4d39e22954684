//! `w' = w^4 - 1` has centers at `±i`. Their periods come from the
//! residues, and the nondegeneracy check names them as witnesses.

use sphere_flows::field::{build_field, EquilibriumKind, SpherePoint};
use sphere_flows::flow::{check_brouwer, cycle_period, integrate_original, IntegratorConfig};
use sphere_flows::nondeg::{check_nondegeneracy, NondegConfig};
use sphere_flows::poly::C64;
use std::f64::consts::PI;

fn main() {
    let zeros = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)];
    let f = build_field(&zeros, &[], C64::new(1.0, 0.0)).unwrap();
    for r in f.classify().iter().filter(|r| r.kind == EquilibriumKind::Center) {
        println!("center at {}", r.location.value);
    }
    println!("T({{i}})  = {}", cycle_period(&f, &[1]).unwrap());
    println!("T({{-i}}) = {}", cycle_period(&f, &[3]).unwrap());

    let cfg = IntegratorConfig {
        detect_periodic: false,
        ..IntegratorConfig::default()
    };
    let start = C64::new(0.1, 1.0);
    let tr = integrate_original(&f, SpherePoint::w(start), 0.0, PI / 2.0, &cfg).unwrap();
    let end = tr.last().point.as_w().unwrap();
    println!("closure after pi/2: {:.2e}", (end - start).norm());
    let cycle: Vec<C64> = tr.samples.iter().filter_map(|s| s.point.as_w()).collect();
    let (zeros_inside, poles_inside, ok) = check_brouwer(&f, &cycle);
    println!("cycle encloses {zeros_inside} zero(s) and {poles_inside} pole(s), Brouwer relation holds: {ok}");

    let report = check_nondegeneracy(&f, &NondegConfig::default());
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
}

//! The quadratic field `w' = w^2 - 1`: equilibria, real and imaginary time
//! orbits, and the commutation of the two flows.

use sphere_flows::field::{build_field, SpherePoint};
use sphere_flows::flow::{commutation_defect, integrate, IntegratorConfig, Verdict};
use sphere_flows::poly::C64;
use std::f64::consts::PI;

fn main() {
    let f = build_field(&[C64::new(1.0, 0.0), C64::new(-1.0, 0.0)], &[], C64::new(1.0, 0.0)).unwrap();
    for r in f.classify() {
        println!("equilibrium {} at {:?}: {:?}, residue {:?}", r.id, r.location.value, r.kind, r.residue);
    }
    let cfg = IntegratorConfig::default();

    let real = integrate(&f, SpherePoint::w(C64::new(0.0, 0.4)), 0.0, 1e4, &cfg).unwrap();
    println!("real time from 0.4i: {:?} after {} samples", real.verdict, real.samples.len());

    let imag = integrate(&f, SpherePoint::w(C64::new(0.0, 0.1)), PI / 2.0, 10.0, &cfg).unwrap();
    if let Verdict::Periodic { period } = imag.verdict {
        println!("imaginary time from 0.1i: periodic, period {period:.10} (pi = {PI:.10})");
    }

    let defect = commutation_defect(&f, SpherePoint::w(C64::new(0.3, 0.2)), 0.5, 0.5, &cfg).unwrap();
    println!("real/imaginary flow commutation defect: {defect:.2e}");
}

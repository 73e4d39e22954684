//! The cubic example `w' = -(w - 1)(w + q)/w`: pole separatrices, blow-up
//! times, the blow-up and blow-down portraits, and the asymptotic angle
//! gap `2π/(1+q)` of the red separatrices.
//!
//! ```text
//! cargo run --release --example cubic_portraits -- 2.0
//! ```

use sphere_flows::field::build_field;
use sphere_flows::portrait::{build_portraits, check_duality, Policies};
use sphere_flows::poly::C64;
use sphere_flows::separatrix::{blowup_quadrature, crossing_angles, trace_all, Color, SeparatrixConfig};
use std::f64::consts::PI;

fn main() {
    let q: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2.0);
    let f = build_field(&[C64::new(1.0, 0.0), C64::new(-q, 0.0)], &[C64::new(0.0, 0.0)], C64::new(-1.0, 0.0)).unwrap();
    println!("mode {:?}, d = {}, d' = {}", f.mode(), f.d(), f.d_prime());

    let cfg = SeparatrixConfig::default();
    let seps = trace_all(&f, &cfg).unwrap();
    for s in &seps {
        let quad = blowup_quadrature(&f, s).unwrap();
        println!(
            "{:?} {:?}: terminal {:?}, blow-up time {:.8} (integral of omega {:.8})",
            s.color,
            s.branch,
            s.terminal,
            s.blowup_time.unwrap_or(f64::NAN),
            quad.re
        );
    }

    let reds: Vec<_> = seps.iter().filter(|s| s.color == Color::Red).cloned().collect();
    let ang = crossing_angles(&f, 1e3, &reds, &cfg, true).unwrap();
    let gap = (ang[0].1 - ang[1].1).abs();
    println!("red angle gap at |w| = 1000: {gap:.5}, predicted {:.5}", 2.0 * PI / (1.0 + q));

    let p = build_portraits(&f, &seps).unwrap();
    println!("C+ code {}", p.c_plus.canonical_code(Policies::STRICT));
    println!("C- code {}", p.c_minus.canonical_code(Policies::STRICT));
    println!("duality: {:?}", check_duality(&p.c_plus, &p.c_minus));
}

//! `w' = w^4 (1 - w)`: a zero of multiplicity 4 at the origin. Prints the
//! boundary saddles at infinity, the tangencies that bound the separating
//! sectors near 0, and where each boundary separatrix ends.

use sphere_flows::field::RationalField;
use sphere_flows::poly::C64;
use sphere_flows::separatrix::{
    boundary_saddles, circle_tangencies, crossing_angles, trace_boundary_separatrices, SeparatrixConfig,
};

fn main() {
    let d = 4;
    let zeros: Vec<C64> = std::iter::repeat_n(C64::new(0.0, 0.0), d).chain([C64::new(1.0, 0.0)]).collect();
    let f = RationalField::with_multiplicities(zeros, vec![], C64::new(-1.0, 0.0)).unwrap();

    let set = boundary_saddles(&f).unwrap();
    for (k, (a, kind)) in set.angles.iter().zip(&set.kinds).enumerate() {
        println!("boundary saddle {k}: angle {a:.4}, {kind:?}");
    }
    let tang = circle_tangencies(&f, C64::new(0.0, 0.0), 0.01, 3600);
    println!("{} tangencies on |w| = 0.01: {:.4?}", tang.len(), tang);

    let cfg = SeparatrixConfig::default();
    let seps = trace_boundary_separatrices(&f, &cfg).unwrap();
    for (k, s) in seps.iter().enumerate() {
        println!("separatrix {k} ({:?}) ends at {:?}", s.color, s.terminal);
    }
    let pair = [seps[1].clone(), seps[2 * d - 1].clone()];
    for (i, a) in crossing_angles(&f, 0.01, &pair, &cfg, false).unwrap() {
        println!("straddling red separatrix {} crosses |w| = 0.01 at angle {a:+.3e}", if i == 0 { 1 } else { 2 * d - 1 });
    }
}

//! Reduced connection graphs of polynomial fields and their chord
//! diagrams, starting from `w' = w^3 - 1` and a few random quartics.

use rand::{Rng, SeedableRng};
use sphere_flows::combinat::tree_to_chords;
use sphere_flows::field::build_field;
use sphere_flows::portrait::{reduced_connection_graph, Policies};
use sphere_flows::poly::C64;
use sphere_flows::separatrix::{trace_boundary_separatrices, SeparatrixConfig};
use std::f64::consts::PI;

fn show(label: &str, roots: &[C64]) {
    let f = build_field(roots, &[], C64::new(1.0, 0.0)).unwrap();
    let seps = trace_boundary_separatrices(&f, &SeparatrixConfig::default()).unwrap();
    match reduced_connection_graph(&f, &seps) {
        Ok(t) => {
            let chords = tree_to_chords(&t, 0).unwrap();
            println!("{label}: tree {}  chords {:?}", t.uncolored().canonical_code(Policies::STRICT), chords.chords);
        }
        Err(e) => println!("{label}: {e}"),
    }
}

fn main() {
    let cube: Vec<C64> = (0..3).map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / 3.0)).collect();
    show("w^3 - 1", &cube);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for i in 0..4 {
        let roots: Vec<C64> = (0..4).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        show(&format!("random quartic {i}"), &roots);
    }
}

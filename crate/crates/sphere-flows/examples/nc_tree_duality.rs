//! The seven nc-trees with four edges, their duals, and the red/blue trees
//! read off an anti-polynomial field `w' = conj(Q(w))`.

use sphere_flows::combinat::enumerate_nc_trees;
use sphere_flows::field::RationalField;
use sphere_flows::portrait::antipolynomial_trees;
use sphere_flows::poly::{ComplexPoly, C64};
use sphere_flows::separatrix::{trace_all, SeparatrixConfig};

fn main() {
    for t in enumerate_nc_trees(4, true).unwrap() {
        println!(
            "{:<28} dual {:<28} self-dual {}",
            t.canonical(true),
            t.dual().canonical(true),
            t.is_self_dual(true)
        );
    }

    let q = ComplexPoly::from_roots(&[C64::new(0.4, 0.1), C64::new(-0.3, 0.5), C64::new(-0.2, -0.6)], C64::new(1.0, 0.0)).unwrap();
    let f = RationalField::from_antipolynomial(&q, 1e-12).unwrap();
    let ham = f.hamiltonian_data().unwrap();
    println!("saddle values of H: {:?} (distinct: {})", ham.saddle_values, ham.distinct);
    let seps = trace_all(&f, &SeparatrixConfig::default()).unwrap();
    let (red, blue) = antipolynomial_trees(&f, &seps).unwrap();
    println!("red tree  {}", red.canonical(false));
    println!("blue tree {}", blue.canonical(false));
    println!("blue is the dual of red: {}", red.dual() == blue);
}

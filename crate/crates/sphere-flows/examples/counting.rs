//! Closed-form counts of planar trees and nc-trees next to direct
//! enumeration where the enumeration budget allows it.

use sphere_flows::combinat::{
    count_nc_trees, count_planar_trees, enumerate_nc_trees, enumerate_planar_trees, MAX_NC_TREE_EDGES,
    MAX_PLANAR_TREE_VERTICES,
};
use sphere_flows::portrait::Policies;

fn main() {
    println!("planar trees (vertices, closed form, enumerated)");
    for d in 2..=16 {
        let e = (d <= MAX_PLANAR_TREE_VERTICES).then(|| enumerate_planar_trees(d, Policies::STRICT).unwrap().len());
        println!("{d:>3} {:>10} {}", count_planar_trees(d), e.map_or("-".into(), |n| n.to_string()));
    }
    println!("nc-trees (edges, closed form, enumerated)");
    for dp in 1..=13 {
        let e = (dp < MAX_NC_TREE_EDGES).then(|| enumerate_nc_trees(dp, true).unwrap().len());
        println!("{dp:>3} {:>10} {}", count_nc_trees(dp), e.map_or("-".into(), |n| n.to_string()));
    }
}

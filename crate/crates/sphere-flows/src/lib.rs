//! Rational complex flows on the Riemann sphere.

pub mod cli;
pub mod combinat;
pub mod field;
pub mod flow;
pub mod nondeg;
pub mod poly;
pub mod portrait;
pub mod realize;
pub mod separatrix;

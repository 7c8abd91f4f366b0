//! Generalized sprays and nonlinear connections.

pub mod expr;
pub mod geometry;
pub mod integrator;
pub mod expmap;
pub mod calculus;
pub mod torsion;
pub mod probes;
pub mod corpus;
pub mod export;

//! Simulation of weak-value estimation schemes on a qubit system coupled to a
//! qubit pointer, including a linear-optics model and finite-shot sampling.

pub mod analysis;
pub mod montecarlo;
pub mod optics;
pub mod protocols;
pub mod qcore;
pub mod weakval;

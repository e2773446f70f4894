//! Demonstration workloads: Sudoku solving, avoidance decisions and the
//! single-neuron behavior sweep.

pub mod avoidance;
pub mod behavior;
pub mod sudoku;

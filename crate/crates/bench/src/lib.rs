//! Experiment harness: parameter sweeps, divergence and goodness-of-fit
//! statistics, vector coding and plot output.

pub mod checks;
pub mod knn;
pub mod plot;
pub mod stats;
pub mod sweep;
pub mod vector;

//! Driving-style soft sensor.
//!
//! The pipeline turns raw telemetry (accelerations, speed, speed limit) into a
//! per-sample driving-style label. Feature rows are projected onto stored
//! principal components, three Takagi-Sugeno fuzzy systems reconstruct a
//! power-weighted projection target, and the class whose system reconstructs
//! its target with the smallest absolute error wins.

pub mod anfis;
pub mod baselines;
pub mod classifier;
pub mod cli;
pub mod dataset;
pub mod eval;
pub mod fis;
pub mod fixture;
pub mod pca;

pub use classifier::{BehaviorClass, EpsilonTriple, SoftSensor};
pub use dataset::{FeatureMatrix, Variant};

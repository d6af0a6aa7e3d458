//! Deterministic synthetic telemetry: three driving styles generated as
//! distinct noisy 1-D curved manifolds with well-separated speed ranges, so
//! the whole pipeline can be exercised without any external dataset.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::classifier::BehaviorClass;
use crate::dataset::{FeatureMatrix, Variant};

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureConfig {
    pub seed: u64,
    pub rows_per_class: usize,
    pub test_rows_per_class: usize,
    pub variant: Variant,
    /// Multiplier on the built-in per-column noise scales; 0 gives exact
    /// manifolds.
    pub noise: f64,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            rows_per_class: 300,
            test_rows_per_class: 100,
            variant: Variant::B,
            noise: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub train: FeatureMatrix,
    pub test: FeatureMatrix,
}

/// One class manifold: x = base + dir * s + curve * s^2 + noise, s uniform
/// in [0, 1]. Speed ranges are disjoint across classes, which drives the
/// pooled first component apart and gives each class its own projection
/// signature. Each class bends through feature space in its own direction,
/// so no single affine map reproduces a foreign class's trace.
struct Manifold {
    base: [f64; 7],
    dir: [f64; 7],
    curve: [f64; 7],
    vmax: f64,
}

const MANIFOLDS: [Manifold; 3] = [
    // drowsy: slow, gentle accelerations
    Manifold {
        base: [0.005, 0.003, 0.980, 0.0045, 0.0027, 0.9801, 18.0],
        dir: [0.012, 0.008, 0.004, 0.0108, 0.0072, 0.0036, 14.0],
        curve: [0.010, -0.006, 0.003, 0.009, -0.0054, 0.0027, 0.0],
        vmax: 90.0,
    },
    // normal: mid speed band
    Manifold {
        base: [0.030, -0.015, 0.978, 0.027, -0.0135, 0.9783, 62.0],
        dir: [0.040, -0.025, 0.010, 0.036, -0.0225, 0.009, 14.0],
        curve: [-0.055, -0.035, 0.012, -0.0495, -0.0315, 0.0108, 0.0],
        vmax: 100.0,
    },
    // aggressive: fast, strong lateral/longitudinal activity
    Manifold {
        base: [0.110, 0.075, 0.968, 0.099, 0.0675, 0.9687, 106.0],
        dir: [-0.090, 0.065, 0.022, -0.081, 0.0585, 0.0198, 14.0],
        curve: [0.070, -0.050, 0.018, 0.063, -0.045, 0.0162, 0.0],
        vmax: 120.0,
    },
];

/// Per-column noise scale at noise = 1; filtered channels are slightly
/// smoother than raw ones, the speed-limit column is exactly constant per
/// class.
const NOISE_SCALE: [f64; 8] = [2e-4, 2e-4, 2e-4, 1.8e-4, 1.8e-4, 1.8e-4, 0.1, 0.0];

const SAMPLE_PERIOD: f64 = 0.1;

pub fn generate(cfg: &FixtureConfig) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let train = sample_matrix(cfg, cfg.rows_per_class, &mut rng);
    let test = sample_matrix(cfg, cfg.test_rows_per_class, &mut rng);
    Fixture { train, test }
}

fn sample_matrix(cfg: &FixtureConfig, rows_per_class: usize, rng: &mut ChaCha8Rng) -> FeatureMatrix {
    let d = cfg.variant.n_features();
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut t = Vec::with_capacity(3 * rows_per_class);
    let mut data = Vec::with_capacity(3 * rows_per_class * d);
    let mut labels = Vec::with_capacity(3 * rows_per_class);
    for (class, manifold) in BehaviorClass::ALL.iter().zip(&MANIFOLDS) {
        for _ in 0..rows_per_class {
            let s: f64 = rng.gen();
            for (j, &scale) in NOISE_SCALE.iter().enumerate().take(7) {
                let noise = cfg.noise * scale * unit.sample(rng);
                data.push(manifold.base[j] + manifold.dir[j] * s + manifold.curve[j] * s * s + noise);
            }
            if cfg.variant == Variant::A {
                data.push(manifold.vmax);
            }
            t.push(t.len() as f64 * SAMPLE_PERIOD);
            labels.push(*class);
        }
    }
    FeatureMatrix::new(cfg.variant, t, data, labels).expect("generated rows are finite")
}

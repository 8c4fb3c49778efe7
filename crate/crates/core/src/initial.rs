//! Initial data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::algebra::{OCTONION_DIM, OCTONION_LEVEL};
use crate::error::{Error, Result};
use crate::flows::soliton_profile;
use crate::grid::{AlgebraField, Grid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum InitialCondition {
    /// Real KdV soliton `3c sech^2(sqrt(c)/2 (x - x0))`.
    Soliton { c: f64, x0: f64 },
    /// `a_m exp(-d^2 / w^2)` in every component, `d` the periodic distance to `x0`.
    Gaussian { amplitude: [f64; 8], width: f64, x0: f64 },
    /// Zero-mean trigonometric polynomial with Fourier modes `1..=mode_cutoff`
    /// in each of the eight components; coefficients are drawn uniformly from
    /// `[-1, 1]` and damped by `1/k`.
    RandomSmooth { seed: u64, mode_cutoff: usize, amplitude: f64 },
}

impl InitialCondition {
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let bad = |field: &str, why: &str| Err(Error::Config(format!("initial_condition.{field}: {why}")));
        match self {
            InitialCondition::Soliton { c, x0 } => {
                if !(c.is_finite() && *c > 0.0) {
                    return bad("c", "must be positive and finite");
                }
                if !x0.is_finite() {
                    return bad("x0", "must be finite");
                }
            }
            InitialCondition::Gaussian { amplitude, width, x0 } => {
                if amplitude.iter().any(|a| !a.is_finite()) {
                    return bad("amplitude", "must be finite");
                }
                if !(width.is_finite() && *width > 0.0) {
                    return bad("width", "must be positive and finite");
                }
                if !x0.is_finite() {
                    return bad("x0", "must be finite");
                }
            }
            InitialCondition::RandomSmooth { mode_cutoff, amplitude, .. } => {
                if *mode_cutoff == 0 || *mode_cutoff >= grid.n() / 2 {
                    return bad("mode_cutoff", "must lie in 1..n/2");
                }
                if !amplitude.is_finite() {
                    return bad("amplitude", "must be finite");
                }
            }
        }
        Ok(())
    }

    pub fn build(&self, grid: &Grid) -> Result<AlgebraField> {
        self.validate(grid)?;
        let l = grid.length();
        let periodic = move |x: f64, x0: f64| (x - x0 + 0.5 * l).rem_euclid(l) - 0.5 * l;
        match self {
            InitialCondition::Soliton { c, x0 } => Ok(soliton_profile(grid, *c, *x0)),
            InitialCondition::Gaussian { amplitude, width, x0 } => AlgebraField::from_fn(grid, OCTONION_LEVEL, |x| {
                let d = periodic(x, *x0);
                let g = (-(d * d) / (width * width)).exp();
                amplitude.iter().map(|a| a * g).collect()
            }),
            InitialCondition::RandomSmooth { seed, mode_cutoff, amplitude } => {
                Ok(random_smooth(grid, *seed, *mode_cutoff, *amplitude))
            }
        }
    }
}

/// See [`InitialCondition::RandomSmooth`].
pub fn random_smooth(grid: &Grid, seed: u64, mode_cutoff: usize, amplitude: f64) -> AlgebraField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = 2.0 * PI / grid.length();
    let nodes = grid.nodes();
    let comps = (0..OCTONION_DIM)
        .map(|_| {
            let modes: Vec<(f64, f64)> =
                (0..mode_cutoff).map(|_| (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0))).collect();
            nodes
                .iter()
                .map(|&x| {
                    modes
                        .iter()
                        .enumerate()
                        .map(|(k, (a, b))| {
                            let k = (k + 1) as f64;
                            (a * (k * w * x).cos() + b * (k * w * x).sin()) / k
                        })
                        .sum::<f64>()
                        * amplitude
                })
                .collect()
        })
        .collect();
    AlgebraField::from_components(grid, OCTONION_LEVEL, comps).expect("eight components of grid length")
}

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rio_core::operators::{apply_qbar, OperatorSpec};
use rio_core::{quad, Grid, GridFunction, Result, Space, Weight};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Recipe {
    /// Sum of `c·χ_{(a,b)}`.
    Steps(Vec<(f64, f64, f64)>),
    /// `min(t, 2^{-depth})^{-θ}`.
    Power { theta: f64, depth: f64 },
    /// `(ln e/t)^δ`.
    Log { delta: f64 },
    /// `Q̄` of another recipe, with the weight and `r` of the run.
    Qbar(Box<Recipe>),
}

impl Recipe {
    pub fn build(&self, grid: &Arc<Grid>, w: &Weight, r: f64) -> Result<GridFunction> {
        match self {
            Recipe::Steps(s) => GridFunction::from_steps(grid.clone(), s),
            Recipe::Power { theta, depth } => {
                let floor = 2f64.powf(-depth);
                GridFunction::from_fn(grid.clone(), |t| t.max(floor).powf(-theta))
            }
            Recipe::Log { delta } => GridFunction::from_fn(grid.clone(), |t| quad::u_of(t).powf(*delta)),
            Recipe::Qbar(base) => apply_qbar(&OperatorSpec::qbar(*w, r)?, &base.build(grid, w, r)?),
        }
    }
}

/// Test functions drawn from a seed; the recipes do not depend on the grid,
/// so the same corpus can be sampled at several resolutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub seed: u64,
    pub recipes: Vec<Recipe>,
}

impl Corpus {
    /// Leads with a fixed family of indicators of `(0,a)`, then random
    /// members; `depth` bounds `log2(1/t)` of step endpoints and power
    /// exponents stay below the lower Boyd index of `x`.
    pub fn generate(seed: u64, size: usize, x: &Space, depth: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lower = x.boyd_indices().lower;
        let theta_max = if lower > 0.0 { 0.9 * lower.min(1.0) } else { 0.5 };
        let mut recipes: Vec<Recipe> = structured_indicators(depth).into_iter().take(size).collect();
        let random: Vec<Recipe> = (recipes.len()..size)
            .map(|_| {
                let pick: f64 = rng.gen();
                if pick < 0.75 {
                    base_recipe(&mut rng, pick / 0.75, theta_max, depth)
                } else {
                    let p: f64 = rng.gen();
                    Recipe::Qbar(Box::new(base_recipe(&mut rng, p, theta_max, depth)))
                }
            })
            .collect();
        recipes.extend(random);
        Corpus { seed, recipes }
    }

    pub fn len(&self) -> usize {
        self.recipes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recipes.is_empty()
    }

    pub fn build(&self, grid: &Arc<Grid>, w: &Weight, r: f64) -> Result<Vec<GridFunction>> {
        self.recipes.par_iter().map(|c| c.build(grid, w, r)).collect()
    }
}

/// `χ_(0,a)` with `1 − a` on a half-octave sweep, then a few deep scales.
fn structured_indicators(depth: f64) -> Vec<Recipe> {
    let near_one = (2..=16).map(|k| 1.0 - 2f64.powf(-(k as f64) / 2.0));
    let deep = [2.0, 4.0, 8.0, 16.0, 32.0].into_iter().filter(|&k| k < depth).map(|k: f64| 2f64.powf(-k));
    near_one.chain(deep).map(|a| Recipe::Steps(vec![(0.0, a, 1.0)])).collect()
}

fn base_recipe(rng: &mut ChaCha8Rng, pick: f64, theta_max: f64, depth: f64) -> Recipe {
    let depth = depth.max(1.0);
    if pick < 0.45 {
        let levels = rng.gen_range(5..=50);
        Recipe::Steps(
            (0..levels)
                .map(|_| {
                    let (x, y) = (rng.gen_range(0.0..depth), rng.gen_range(0.0..depth));
                    let (a, b) = (2f64.powf(-x.max(y) - 0.05), 2f64.powf(-x.min(y) - 0.01));
                    (a, b, rng.gen_range(0.0..10.0))
                })
                .collect(),
        )
    } else if pick < 0.6 {
        let k = rng.gen_range(1.0..depth);
        Recipe::Steps(vec![(0.0, 2f64.powf(-k), rng.gen_range(0.5..5.0))])
    } else if pick < 0.8 {
        Recipe::Power { theta: rng.gen_range(0.0..theta_max), depth: rng.gen_range(4.0..depth.max(5.0)) }
    } else {
        Recipe::Log { delta: rng.gen_range(-1.0..0.5) }
    }
}

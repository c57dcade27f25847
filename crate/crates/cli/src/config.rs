use std::path::PathBuf;
use std::sync::Arc;

use clap::Args;
use rio_core::{Grid, Space, Weight};

use crate::error::CliError;

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Space descriptor, e.g. `Lp:2`, `Lorentz:3,2`, `Zygmund:2,1`, `ExpL:1`.
    #[arg(long)]
    pub space: String,
    /// Weight descriptor `psi:gamma=..[,delta=..]`.
    #[arg(long)]
    pub weight: String,
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, default_value_t = 4096)]
    pub grid_n: usize,
    /// Smallest node is `2^-k`.
    #[arg(long, default_value_t = 40.0)]
    pub grid_tmin_log2: f64,
    #[arg(long, default_value_t = 100)]
    pub corpus: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub n_terms: usize,
    /// Target of `berezhnoi` and `theorem-inclu`: a space descriptor,
    /// `hansson` or `const`.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub space: Space,
    pub weight: Weight,
    pub r: f64,
    pub alpha: Option<f64>,
    pub rho: Option<f64>,
    pub grid_n: usize,
    pub grid_tmin_log2: f64,
    pub corpus_size: usize,
    pub seed: u64,
    pub n_terms: usize,
    pub target: Option<String>,
}

impl RunConfig {
    pub fn new(space: Space, weight: Weight, r: f64) -> Self {
        RunConfig {
            space,
            weight,
            r,
            alpha: None,
            rho: None,
            grid_n: 4096,
            grid_tmin_log2: 40.0,
            corpus_size: 100,
            seed: 0,
            n_terms: 10,
            target: None,
        }
    }

    pub fn grid(&self) -> Result<Arc<Grid>, CliError> {
        Ok(Arc::new(Grid::new(self.grid_n, 2f64.powf(-self.grid_tmin_log2))?))
    }

    pub fn grid_tmin(&self) -> f64 {
        2f64.powf(-self.grid_tmin_log2)
    }

    /// `--alpha`, or the catalogued lower estimate order of the space.
    pub fn alpha(&self) -> Result<f64, CliError> {
        self.alpha
            .or(self.space.estimate_orders().lower)
            .ok_or_else(|| CliError::Parse(format!("--alpha is required: {} has no catalogued lower estimate", self.space)))
    }
}

impl TryFrom<&RunArgs> for RunConfig {
    type Error = CliError;

    fn try_from(a: &RunArgs) -> Result<Self, CliError> {
        let space: Space = a.space.parse()?;
        let weight: Weight = a.weight.parse()?;
        if !(a.r > 0.0 && a.r <= 1.0) {
            return Err(CliError::Parse(format!("--r must lie in (0, 1], got {}", a.r)));
        }
        if a.grid_n < 2 || !(a.grid_tmin_log2 > 0.0 && a.grid_tmin_log2 <= 1000.0) {
            return Err(CliError::Parse("grid needs at least 2 nodes and 0 < tmin-log2 <= 1000".into()));
        }
        Ok(RunConfig {
            space,
            weight,
            r: a.r,
            alpha: a.alpha,
            rho: a.rho,
            grid_n: a.grid_n,
            grid_tmin_log2: a.grid_tmin_log2,
            corpus_size: a.corpus,
            seed: a.seed,
            n_terms: a.n_terms,
            target: a.target.clone(),
        })
    }
}

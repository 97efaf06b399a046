//! The alternating max/min game with ±1 cookies on the d-ary tree.
//!
//! Vertices are addressed by `(level, index)` with the root at `(0, 0)` and the
//! `k`-th child of `(l, i)` at `(l + 1, i·d + k)`. Even levels maximise, odd
//! levels minimise.

pub mod isoperimetry;
pub mod montecarlo;
pub mod rng;
pub mod solver;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cdf::{BoundarySpec, Cdf, CdfError};

pub use isoperimetry::{
    boundary_parity_counts, isoperimetry_trials, predicted_parity_counts, ConnectedSet,
    IsoperimetryReport,
};
pub use montecarlo::{
    monte_carlo, monte_carlo_values, paired_monte_carlo, stabilization_check, tau_boundary_game, MonteCarloReport,
    PairedReport, PmfEntry, StabilizationReport,
};
pub use solver::{
    full_evaluation, solve_sample, solve_sample_paired, solve_with, CookieSource, DefectStats,
    ForcedCookies, FullEvaluation, HashedCookies, PairedValues, SampleOutcome,
};

pub const DEFAULT_NODE_BUDGET: u64 = 100_000_000;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("branching factor must be at least 2, got {0}")]
    InvalidDegree(u32),
    #[error("tree with {required} leaves exceeds the node budget of {budget}")]
    BudgetExceeded { required: u128, budget: u64 },
    #[error("sample count must be positive")]
    NoSamples,
    #[error("{0} requires a Bernoulli boundary")]
    NeedsBernoulli(&'static str),
    #[error("invalid vertex set: {0}")]
    InvalidSet(String),
    #[error(transparent)]
    Boundary(#[from] CdfError),
    #[error("cannot build thread pool: {0}")]
    ThreadPool(String),
}

/// Where boundary values are placed: level `2n` (the game `V_n`) or `2n + 1`
/// (the shifted game `V'_n`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryLevel {
    Even,
    Odd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub d: u32,
    pub n: u32,
    pub boundary: BoundarySpec,
    pub boundary_level: BoundaryLevel,
    pub seed: u64,
    pub node_budget: u64,
}

impl GameConfig {
    pub fn new(d: u32, n: u32) -> Self {
        Self {
            d,
            n,
            boundary: BoundarySpec::Zero,
            boundary_level: BoundaryLevel::Even,
            seed: 0,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_boundary(mut self, boundary: BoundarySpec) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_boundary_level(mut self, level: BoundaryLevel) -> Self {
        self.boundary_level = level;
        self
    }

    /// Absolute level of the boundary.
    pub fn leaf_level(&self) -> u32 {
        match self.boundary_level {
            BoundaryLevel::Even => 2 * self.n,
            BoundaryLevel::Odd => 2 * self.n + 1,
        }
    }

    pub fn validate(&self) -> Result<BoundaryLaw, GameError> {
        if self.d < 2 {
            return Err(GameError::InvalidDegree(self.d));
        }
        check_budget(self.d, self.leaf_level(), self.node_budget)?;
        Ok(BoundaryLaw::new(&self.boundary)?)
    }
}

pub(crate) fn check_budget(d: u32, depth: u32, budget: u64) -> Result<(), GameError> {
    // Vertex indices are packed next to the level in one 64-bit counter.
    let budget = budget.min(1 << 50);
    let required = (d as u128).checked_pow(depth).unwrap_or(u128::MAX);
    if required > budget as u128 {
        return Err(GameError::BudgetExceeded { required, budget });
    }
    Ok(())
}

/// Sampling table for boundary values: `(value, F(value))` pairs in
/// increasing order with the last `F` equal to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryLaw {
    table: Vec<(i64, f64)>,
}

impl BoundaryLaw {
    pub fn new(spec: &BoundarySpec) -> Result<Self, CdfError> {
        spec.validate()?;
        let table = match spec {
            BoundarySpec::Zero => vec![(0, 1.0)],
            BoundarySpec::Constant { value } => vec![(*value, 1.0)],
            BoundarySpec::Bernoulli { p } => vec![(0, *p), (2, 1.0)],
            BoundarySpec::Explicit { cdf } => Self::cdf_table(cdf),
        };
        Ok(Self { table })
    }

    fn cdf_table(cdf: &Cdf) -> Vec<(i64, f64)> {
        let mut table: Vec<(i64, f64)> = Vec::new();
        let mut prev = 0.0;
        for i in cdf.indices().chain(std::iter::once(cdf.hi_index() + 2)) {
            let f = cdf.at(i);
            if f > prev {
                table.push((i, f));
                prev = f;
            }
        }
        if let Some(last) = table.last_mut() {
            last.1 = 1.0;
        }
        table
    }

    /// Value whose CDF step contains `u ∈ [0, 1)`.
    pub fn sample(&self, u: f64) -> i64 {
        self.table
            .iter()
            .find(|&&(_, f)| u < f)
            .unwrap_or(self.table.last().expect("non-empty law"))
            .0
    }

    pub fn min_value(&self) -> i64 {
        self.table[0].0
    }

    pub fn max_value(&self) -> i64 {
        self.table[self.table.len() - 1].0
    }

    pub fn is_deterministic(&self) -> bool {
        self.table.len() == 1
    }
}

//! Parallel Monte-Carlo estimation over independent samples.
//!
//! Sample `i` always uses the cookie stream derived from `(seed, i)`, and
//! per-worker tallies are merged by integer addition, so results do not
//! depend on the number of threads.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::solver::{paired_law, paired_with, run, stabilization_with, HashedCookies, Stabilization};
use super::{GameConfig, GameError};
use crate::cdf::BoundarySpec;

fn pool(threads: usize) -> Result<rayon::ThreadPool, GameError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| GameError::ThreadPool(e.to_string()))
}

/// Map every sample index through `f` and merge the results.
fn fold_samples<T, F, M>(samples: u64, threads: usize, f: F, merge: M) -> Result<T, GameError>
where
    T: Default + Send,
    F: Fn(&mut T, u64) + Sync,
    M: Fn(T, T) -> T + Sync,
{
    if samples == 0 {
        return Err(GameError::NoSamples);
    }
    Ok(pool(threads)?.install(|| {
        (0..samples)
            .into_par_iter()
            .fold(T::default, |mut acc, i| {
                f(&mut acc, i);
                acc
            })
            .reduce(T::default, &merge)
    }))
}

fn merge_counts<K: Ord>(mut a: BTreeMap<K, u64>, b: BTreeMap<K, u64>) -> BTreeMap<K, u64> {
    for (k, v) in b {
        *a.entry(k).or_insert(0) += v;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmfEntry {
    pub value: i64,
    pub prob: f64,
    pub stderr: f64,
}

pub fn pmf_from_counts(counts: &BTreeMap<i64, u64>, samples: u64) -> Vec<PmfEntry> {
    let n = samples as f64;
    counts
        .iter()
        .map(|(&value, &c)| {
            let p = c as f64 / n;
            PmfEntry {
                value,
                prob: p,
                stderr: (p * (1.0 - p) / n).sqrt(),
            }
        })
        .collect()
}

#[derive(Default)]
struct Tally {
    values: BTreeMap<i64, u64>,
    defects: BTreeMap<usize, u64>,
    cumulative: BTreeMap<usize, u64>,
    splus: u64,
    sminus: u64,
    nodes: u64,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            values: merge_counts(self.values, o.values),
            defects: merge_counts(self.defects, o.defects),
            cumulative: merge_counts(self.cumulative, o.cumulative),
            splus: self.splus + o.splus,
            sminus: self.sminus + o.sminus,
            nodes: self.nodes + o.nodes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub config: GameConfig,
    pub samples: u64,
    /// Whether the defect fields below were collected.
    pub defects_tracked: bool,
    /// Empirical law of the root value.
    pub pmf: Vec<PmfEntry>,
    /// `(size, count)` of the root's atypical component in the `n`-round game.
    pub defect_hist: Vec<(usize, u64)>,
    /// `(size, count)` of the root's component in the union over `m <= n`.
    pub cumulative_defect_hist: Vec<(usize, u64)>,
    pub splus_count: u64,
    pub sminus_count: u64,
    pub nodes: u64,
}

impl MonteCarloReport {
    pub fn prob(&self, value: i64) -> f64 {
        self.pmf
            .iter()
            .find(|e| e.value == value)
            .map_or(0.0, |e| e.prob)
    }

    /// Empirical `P(V <= k)`.
    pub fn cdf_at(&self, k: i64) -> f64 {
        self.pmf.iter().filter(|e| e.value <= k).map(|e| e.prob).sum()
    }
}

pub fn monte_carlo(cfg: &GameConfig, samples: u64, threads: usize) -> Result<MonteCarloReport, GameError> {
    monte_carlo_with(cfg, samples, threads, true)
}

/// Root values only, skipping the defect-set search.
pub fn monte_carlo_values(cfg: &GameConfig, samples: u64, threads: usize) -> Result<MonteCarloReport, GameError> {
    monte_carlo_with(cfg, samples, threads, false)
}

fn monte_carlo_with(
    cfg: &GameConfig,
    samples: u64,
    threads: usize,
    defects: bool,
) -> Result<MonteCarloReport, GameError> {
    let law = cfg.validate()?;
    let t = fold_samples(
        samples,
        threads,
        |acc: &mut Tally, i| {
            let out = run(cfg, &law, &HashedCookies::new(cfg.seed, i), defects);
            *acc.values.entry(out.root_value).or_insert(0) += 1;
            acc.nodes += out.nodes;
            if let Some(d) = out.defects {
                *acc.defects.entry(d.component_size).or_insert(0) += 1;
                *acc.cumulative.entry(d.cumulative_component_size).or_insert(0) += 1;
                acc.splus += d.in_splus as u64;
                acc.sminus += d.in_sminus as u64;
            }
        },
        Tally::merge,
    )?;
    Ok(MonteCarloReport {
        config: cfg.clone(),
        samples,
        defects_tracked: defects,
        pmf: pmf_from_counts(&t.values, samples),
        defect_hist: t.defects.into_iter().collect(),
        cumulative_defect_hist: t.cumulative.into_iter().collect(),
        splus_count: t.splus,
        sminus_count: t.sminus,
        nodes: t.nodes,
    })
}

/// Monte-Carlo with i.i.d. Bernoulli leaf values on `{0, 2}`.
pub fn tau_boundary_game(cfg: &GameConfig, samples: u64, threads: usize) -> Result<MonteCarloReport, GameError> {
    if !matches!(cfg.boundary, BoundarySpec::Bernoulli { .. }) {
        return Err(GameError::NeedsBernoulli("tau_boundary_game"));
    }
    monte_carlo(cfg, samples, threads)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedReport {
    pub samples: u64,
    /// Samples where some child of the root has values more than 1 apart.
    pub violations: u64,
    pub max_gap: i64,
    /// Law of the first child's value with the boundary at level `2n + 1`.
    pub odd_child_pmf: Vec<PmfEntry>,
}

#[derive(Default)]
struct PairTally {
    violations: u64,
    max_gap: i64,
    odd: BTreeMap<i64, u64>,
}

pub fn paired_monte_carlo(cfg: &GameConfig, samples: u64, threads: usize) -> Result<PairedReport, GameError> {
    let law = paired_law(cfg)?;
    let t = fold_samples(
        samples,
        threads,
        |acc: &mut PairTally, i| {
            let p = paired_with(cfg, &law, &HashedCookies::new(cfg.seed, i));
            let gap = p.max_gap();
            acc.violations += (gap > 1) as u64;
            acc.max_gap = acc.max_gap.max(gap);
            *acc.odd.entry(p.odd[0]).or_insert(0) += 1;
        },
        |a, b| PairTally {
            violations: a.violations + b.violations,
            max_gap: a.max_gap.max(b.max_gap),
            odd: merge_counts(a.odd, b.odd),
        },
    )?;
    Ok(PairedReport {
        samples,
        violations: t.violations,
        max_gap: t.max_gap,
        odd_child_pmf: pmf_from_counts(&t.odd, samples),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizationReport {
    pub samples: u64,
    /// Samples whose root component stays within levels `0..=2n-2`.
    pub eligible: u64,
    /// Eligible samples whose root value is unchanged by one more round.
    pub agree: u64,
    pub disagree: u64,
}

/// Re-solve each sample with `n + 1` rounds and compare root values on the
/// samples whose root component is shallow.
pub fn stabilization_check(cfg: &GameConfig, samples: u64, threads: usize) -> Result<StabilizationReport, GameError> {
    let mut next = cfg.clone();
    next.n += 1;
    next.validate()?;
    let law = cfg.validate()?;
    let mut r = fold_samples(
        samples,
        threads,
        |acc: &mut StabilizationReport, i| match stabilization_with(cfg, &law, &HashedCookies::new(cfg.seed, i)) {
            Stabilization::NotEligible => {}
            Stabilization::Agree => {
                acc.eligible += 1;
                acc.agree += 1;
            }
            Stabilization::Disagree => {
                acc.eligible += 1;
                acc.disagree += 1;
            }
        },
        |a, b| StabilizationReport {
            samples: 0,
            eligible: a.eligible + b.eligible,
            agree: a.agree + b.agree,
            disagree: a.disagree + b.disagree,
        },
    )?;
    r.samples = samples;
    Ok(r)
}

//! Parity counts of the outer boundary of finite subtrees.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::rng::CounterRng;
use super::GameError;

pub type Vertex = (u32, u64);

/// A finite connected set of vertices containing the root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectedSet {
    d: u32,
    vertices: BTreeSet<Vertex>,
}

impl ConnectedSet {
    pub fn new(d: u32, vertices: impl IntoIterator<Item = Vertex>) -> Result<Self, GameError> {
        if d < 2 {
            return Err(GameError::InvalidDegree(d));
        }
        let vertices: BTreeSet<Vertex> = vertices.into_iter().collect();
        if !vertices.contains(&(0, 0)) {
            return Err(GameError::InvalidSet("root missing".into()));
        }
        for &(level, index) in &vertices {
            let width = (d as u64).checked_pow(level);
            if width.is_none_or(|w| index >= w) {
                return Err(GameError::InvalidSet(format!(
                    "vertex ({level}, {index}) does not exist"
                )));
            }
            if level > 0 && !vertices.contains(&(level - 1, index / d as u64)) {
                return Err(GameError::InvalidSet(format!(
                    "vertex ({level}, {index}) is disconnected from the root"
                )));
            }
        }
        Ok(Self { d, vertices })
    }

    /// The union of the root-to-vertex paths given as child-index sequences.
    pub fn from_paths(d: u32, paths: &[Vec<u32>]) -> Result<Self, GameError> {
        let mut vertices = vec![(0, 0)];
        for path in paths {
            let mut index = 0u64;
            for (depth, &k) in path.iter().enumerate() {
                if k >= d {
                    return Err(GameError::InvalidSet(format!("child index {k} >= d")));
                }
                index = index * d as u64 + k as u64;
                vertices.push((depth as u32 + 1, index));
            }
        }
        Self::new(d, vertices)
    }

    /// Grow from the root by repeatedly adding a uniformly chosen child of the
    /// current set until it has `size` vertices.
    pub fn random(d: u32, size: usize, rng: &CounterRng) -> Result<Self, GameError> {
        if size == 0 {
            return Err(GameError::InvalidSet("empty set".into()));
        }
        let mut set = BTreeSet::from([(0u32, 0u64)]);
        let mut frontier: Vec<Vertex> = (0..d as u64).map(|k| (1, k)).collect();
        let mut draw = 0u64;
        while set.len() < size {
            let pick = rng.below(draw, frontier.len() as u64) as usize;
            draw += 1;
            let (level, index) = frontier.swap_remove(pick);
            set.insert((level, index));
            frontier.extend((0..d as u64).map(|k| (level + 1, index * d as u64 + k)));
        }
        Self::new(d, set)
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.vertices.iter().copied()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.vertices.contains(&v)
    }

    /// `(|A ∩ Even|, |A ∩ Odd|)`.
    pub fn parity_sizes(&self) -> (u64, u64) {
        let even = self.vertices.iter().filter(|v| v.0 % 2 == 0).count() as u64;
        (even, self.len() as u64 - even)
    }
}

/// `(|∂A ∩ Even|, |∂A ∩ Odd|)` where `∂A` is the set of children of `A`
/// lying outside `A`.
pub fn boundary_parity_counts(a: &ConnectedSet) -> (u64, u64) {
    let d = a.d as u64;
    let mut counts = (0, 0);
    for (level, index) in a.vertices() {
        for child in index * d..(index + 1) * d {
            if !a.contains((level + 1, child)) {
                if (level + 1) % 2 == 0 {
                    counts.0 += 1;
                } else {
                    counts.1 += 1;
                }
            }
        }
    }
    counts
}

/// Closed form `(d|A∩Odd| - |A∩Even| + 1, d|A∩Even| - |A∩Odd|)`.
pub fn predicted_parity_counts(a: &ConnectedSet) -> (i64, i64) {
    let (even, odd) = a.parity_sizes();
    let d = a.d as i64;
    let (even, odd) = (even as i64, odd as i64);
    (d * odd - even + 1, d * even - odd)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsoperimetryReport {
    pub d: u32,
    pub trials: u64,
    pub max_size: usize,
    pub matches: u64,
}

/// Compare counted and predicted boundaries on `trials` random sets with
/// sizes uniform in `1..=max_size`.
pub fn isoperimetry_trials(d: u32, trials: u64, max_size: usize, seed: u64) -> Result<IsoperimetryReport, GameError> {
    let base = CounterRng::new(seed).derive(d as u64);
    let mut matches = 0;
    for t in 0..trials {
        let rng = base.derive(t);
        let size = 1 + rng.below(u64::MAX, max_size as u64) as usize;
        let a = ConnectedSet::random(d, size, &rng)?;
        let (e, o) = boundary_parity_counts(&a);
        if predicted_parity_counts(&a) == (e as i64, o as i64) {
            matches += 1;
        }
    }
    Ok(IsoperimetryReport {
        d,
        trials,
        max_size,
        matches,
    })
}

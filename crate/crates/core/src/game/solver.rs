//! Exact solving of one sampled game by depth-first alpha-beta search.
//!
//! Cookies are never stored: each is recomputed from its vertex address when
//! the search reaches it, so memory is proportional to the depth.

use std::cell::Cell;
use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::rng::CounterRng;
use super::{check_budget, BoundaryLaw, BoundaryLevel, GameConfig, GameError};
use crate::cdf::BoundarySpec;

/// Supplies the cookie on every edge and the boundary value at every leaf.
pub trait CookieSource {
    /// Cookie (±1) on the edge from the parent of `(level, index)` down to it.
    fn cookie(&self, level: u32, index: u64) -> i64;
    /// Boundary value at `(level, index)`, which must lie in the support of `law`.
    fn boundary_value(&self, level: u32, index: u64, law: &BoundaryLaw) -> i64;
}

const COOKIE_STREAM: u64 = 0;
const BOUNDARY_STREAM: u64 = 1;

#[inline]
fn counter(stream: u64, level: u32, index: u64) -> u64 {
    (stream << 63) | ((level as u64) << 56) | index
}

/// Uniform random cookies for one Monte-Carlo sample.
#[derive(Debug, Clone, Copy)]
pub struct HashedCookies {
    rng: CounterRng,
}

impl HashedCookies {
    pub fn new(seed: u64, sample: u64) -> Self {
        Self {
            rng: CounterRng::new(seed).derive(sample),
        }
    }
}

impl CookieSource for HashedCookies {
    #[inline]
    fn cookie(&self, level: u32, index: u64) -> i64 {
        if self.rng.bits(counter(COOKIE_STREAM, level, index)) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    fn boundary_value(&self, level: u32, index: u64, law: &BoundaryLaw) -> i64 {
        if law.is_deterministic() {
            law.min_value()
        } else {
            law.sample(self.rng.uniform(counter(BOUNDARY_STREAM, level, index)))
        }
    }
}

/// Every cookie equal to a fixed value; random boundaries take their median.
#[derive(Debug, Clone, Copy)]
pub struct ForcedCookies(pub i64);

impl CookieSource for ForcedCookies {
    fn cookie(&self, _level: u32, _index: u64) -> i64 {
        self.0
    }

    fn boundary_value(&self, _level: u32, _index: u64, law: &BoundaryLaw) -> i64 {
        law.sample(0.5)
    }
}

const INF: i64 = 1 << 40;

fn typical(level: u32) -> i64 {
    if level.is_multiple_of(2) {
        0
    } else {
        -1
    }
}

pub(crate) struct Game<'a, C: CookieSource> {
    d: u64,
    leaf: u32,
    law: &'a BoundaryLaw,
    src: &'a C,
    min_leaf: i64,
    max_leaf: i64,
    nodes: Cell<u64>,
}

impl<'a, C: CookieSource> Game<'a, C> {
    pub(crate) fn new(d: u32, leaf: u32, law: &'a BoundaryLaw, src: &'a C) -> Self {
        Self {
            d: d as u64,
            leaf,
            law,
            src,
            min_leaf: law.min_value(),
            max_leaf: law.max_value(),
            nodes: Cell::new(0),
        }
    }

    pub(crate) fn nodes(&self) -> u64 {
        self.nodes.get()
    }

    /// Fail-soft alpha-beta. Children whose cookie favours the player to move
    /// are searched first.
    fn search(&self, level: u32, index: u64, mut alpha: i64, mut beta: i64) -> i64 {
        self.nodes.set(self.nodes.get() + 1);
        if level >= self.leaf {
            return self.src.boundary_value(level, index, self.law);
        }
        let r = (self.leaf - level) as i64;
        let (lo, hi) = (self.min_leaf - r, self.max_leaf + r);
        if hi <= alpha {
            return hi;
        }
        if lo >= beta {
            return lo;
        }
        let maximize = level.is_multiple_of(2);
        let preferred = if maximize { 1 } else { -1 };
        let first = index * self.d;
        let mut best = if maximize { -INF } else { INF };
        for pass in 0..2 {
            for child in first..first + self.d {
                let c = self.src.cookie(level + 1, child);
                if (c == preferred) != (pass == 0) {
                    continue;
                }
                let v = c + self.search(level + 1, child, alpha - c, beta - c);
                if maximize {
                    best = best.max(v);
                    alpha = alpha.max(best);
                    if best >= beta || best >= hi {
                        return best;
                    }
                } else {
                    best = best.min(v);
                    beta = beta.min(best);
                    if best <= alpha || best <= lo {
                        return best;
                    }
                }
            }
        }
        best
    }

    pub(crate) fn value(&self, level: u32, index: u64) -> i64 {
        self.search(level, index, -INF, INF)
    }

    /// Whether the value at a vertex differs from the typical value of its
    /// level, decided by a null-window search.
    fn is_atypical(&self, level: u32, index: u64) -> bool {
        let t = typical(level);
        let v = self.search(level, index, t - 1, t + 1);
        v != t
    }

    /// Size and deepest level of the root's connected component among
    /// atypical vertices of levels `0..=radius`.
    fn root_component(&self, radius: u32) -> (usize, Option<u32>) {
        component(self.d, radius, |level, index| self.is_atypical(level, index))
    }
}

fn component(
    d: u64,
    radius: u32,
    mut atypical: impl FnMut(u32, u64) -> bool,
) -> (usize, Option<u32>) {
    if !atypical(0, 0) {
        return (0, None);
    }
    let mut queue = VecDeque::from([(0u32, 0u64)]);
    let mut size = 0;
    let mut deepest = 0;
    while let Some((level, index)) = queue.pop_front() {
        size += 1;
        deepest = deepest.max(level);
        if level < radius {
            for child in index * d..(index + 1) * d {
                if atypical(level + 1, child) {
                    queue.push_back((level + 1, child));
                }
            }
        }
    }
    (size, Some(deepest))
}

/// Defect information about the root of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectStats {
    pub root_value: i64,
    /// Size of the root's component among vertices of the `2n`-ball whose
    /// `n`-round value is atypical (`> 0`, or `< -1`).
    pub component_size: usize,
    /// Deepest level reached by that component.
    pub component_depth: Option<u32>,
    /// Same component, but in the union of the atypical sets of all games
    /// with `m <= n` rounds.
    pub cumulative_component_size: usize,
    pub in_splus: bool,
    pub in_sminus: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub root_value: i64,
    pub defects: Option<DefectStats>,
    /// Search nodes visited.
    pub nodes: u64,
}

fn leaf_for(cfg: &GameConfig, m: u32) -> u32 {
    match cfg.boundary_level {
        BoundaryLevel::Even => 2 * m,
        BoundaryLevel::Odd => 2 * m + 1,
    }
}

pub(crate) fn run<C: CookieSource>(
    cfg: &GameConfig,
    law: &BoundaryLaw,
    src: &C,
    defects: bool,
) -> SampleOutcome {
    let game = Game::new(cfg.d, cfg.leaf_level(), law, src);
    let root_value = game.value(0, 0);
    if !defects {
        return SampleOutcome {
            root_value,
            defects: None,
            nodes: game.nodes(),
        };
    }
    let radius = 2 * cfg.n;
    let (component_size, component_depth) = game.root_component(radius);
    let games: Vec<_> = (0..=cfg.n)
        .map(|m| Game::new(cfg.d, leaf_for(cfg, m), law, src))
        .collect();
    let (cumulative_component_size, _) = component(cfg.d as u64, radius, |level, index| {
        games[level.div_ceil(2) as usize..]
            .iter()
            .any(|g| g.is_atypical(level, index))
    });
    let nodes = game.nodes() + games.iter().map(Game::nodes).sum::<u64>();
    SampleOutcome {
        root_value,
        defects: Some(DefectStats {
            root_value,
            component_size,
            component_depth,
            cumulative_component_size,
            in_splus: root_value > 0,
            in_sminus: root_value < -1,
        }),
        nodes,
    }
}

/// Solve one game with caller-supplied cookies and boundary values.
pub fn solve_with<C: CookieSource>(cfg: &GameConfig, src: &C) -> Result<SampleOutcome, GameError> {
    let law = cfg.validate()?;
    Ok(run(cfg, &law, src, true))
}

/// Solve sample number `sample` of the random game described by `cfg`.
pub fn solve_sample(cfg: &GameConfig, sample: u64) -> Result<SampleOutcome, GameError> {
    solve_with(cfg, &HashedCookies::new(cfg.seed, sample))
}

/// Values of every child of the root with the boundary at level `2n` and at
/// level `2n + 1`, on the same cookies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairedValues {
    pub even: Vec<i64>,
    pub odd: Vec<i64>,
}

impl PairedValues {
    pub fn max_gap(&self) -> i64 {
        self.even
            .iter()
            .zip(&self.odd)
            .map(|(a, b)| (a - b).abs())
            .max()
            .unwrap_or(0)
    }
}

pub(crate) fn paired_with<C: CookieSource>(
    cfg: &GameConfig,
    law: &BoundaryLaw,
    src: &C,
) -> PairedValues {
    let even = Game::new(cfg.d, 2 * cfg.n, law, src);
    let odd = Game::new(cfg.d, 2 * cfg.n + 1, law, src);
    let children = 0..cfg.d as u64;
    PairedValues {
        even: children.clone().map(|k| even.value(1, k)).collect(),
        odd: children.map(|k| odd.value(1, k)).collect(),
    }
}

pub(crate) fn paired_law(cfg: &GameConfig) -> Result<BoundaryLaw, GameError> {
    let law = cfg.validate()?;
    check_budget(cfg.d, 2 * cfg.n + 1, cfg.node_budget)?;
    Ok(law)
}

/// Pathwise comparison of the two boundary placements for sample `sample`.
pub fn solve_sample_paired(cfg: &GameConfig, sample: u64) -> Result<PairedValues, GameError> {
    let law = paired_law(cfg)?;
    Ok(paired_with(cfg, &law, &HashedCookies::new(cfg.seed, sample)))
}

/// Result of evaluating every vertex without pruning.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FullEvaluation {
    pub root_value: i64,
    pub splus: u64,
    pub sminus: u64,
    /// Whether the structural checks below apply (zero boundary at level `2n`).
    pub structure_checked: bool,
    /// Vertices of value `> 0` violating: an even one has no child of value
    /// `> 0`, or an odd one has a child of value `<= 0` that is not a
    /// `+1`-cookie child of value exactly 0.
    pub structure_violations: u64,
}

struct FullEval<'a, C: CookieSource> {
    game: Game<'a, C>,
    radius: u32,
    check: bool,
    out: FullEvaluation,
}

impl<C: CookieSource> FullEval<'_, C> {
    fn record(&mut self, level: u32, v: i64) {
        if level <= self.radius {
            if v > 0 {
                self.out.splus += 1;
            }
            if v < -1 {
                self.out.sminus += 1;
            }
        }
    }

    fn eval(&mut self, level: u32, index: u64) -> i64 {
        let g = &self.game;
        if level >= g.leaf {
            let v = g.src.boundary_value(level, index, g.law);
            self.record(level, v);
            return v;
        }
        let d = g.d;
        let maximize = level.is_multiple_of(2);
        let mut children = Vec::with_capacity(d as usize);
        for child in index * d..(index + 1) * d {
            let c = self.game.src.cookie(level + 1, child);
            children.push((c, self.eval(level + 1, child)));
        }
        let sums = children.iter().map(|&(c, v)| c + v);
        let value = if maximize {
            sums.max()
        } else {
            sums.min()
        }
        .expect("d >= 2");
        if self.check && value > 0 {
            let ok = if maximize {
                children.iter().any(|&(_, v)| v > 0)
            } else {
                children.iter().all(|&(c, v)| v > 0 || (v == 0 && c == 1))
            };
            if !ok {
                self.out.structure_violations += 1;
            }
        }
        self.record(level, value);
        value
    }
}

/// Evaluate every vertex of the sample, counting the atypical sets and
/// checking their local structure along the way.
pub fn full_evaluation<C: CookieSource>(
    cfg: &GameConfig,
    src: &C,
) -> Result<FullEvaluation, GameError> {
    let law = cfg.validate()?;
    let check = cfg.boundary == BoundarySpec::Zero && cfg.boundary_level == BoundaryLevel::Even;
    let mut ev = FullEval {
        game: Game::new(cfg.d, cfg.leaf_level(), &law, src),
        radius: 2 * cfg.n,
        check,
        out: FullEvaluation {
            structure_checked: check,
            ..FullEvaluation::default()
        },
    };
    ev.out.root_value = ev.eval(0, 0);
    Ok(ev.out)
}

/// Outcome of re-solving one sample with one more round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stabilization {
    /// The root component reaches below level `2n - 2`.
    NotEligible,
    Agree,
    Disagree,
}

pub(crate) fn stabilization_with<C: CookieSource>(
    cfg: &GameConfig,
    law: &BoundaryLaw,
    src: &C,
) -> Stabilization {
    let now = Game::new(cfg.d, leaf_for(cfg, cfg.n), law, src);
    let next = Game::new(cfg.d, leaf_for(cfg, cfg.n + 1), law, src);
    let (_, depth) = now.root_component(2 * cfg.n);
    let contained = match depth {
        None => true,
        Some(l) => l + 2 <= 2 * cfg.n,
    };
    if !contained {
        Stabilization::NotEligible
    } else if now.value(0, 0) == next.value(0, 0) {
        Stabilization::Agree
    } else {
        Stabilization::Disagree
    }
}

//! Floating-point iteration of the value-distribution recursion.
//!
//! A [`Cdf`] lives on one residue class mod 2 and stores both `F(i)` and the
//! survival value `1 - F(i)` for every index in its window. Carrying the
//! complement separately keeps upper-tail probabilities accurate far below
//! `f64::EPSILON`, which matters once tails decay double-exponentially.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default half-width `K` of the symmetric window `[-2K, 2K]`.
pub const DEFAULT_HALF_WIDTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CdfError {
    #[error("invalid CDF: {0}")]
    Invalid(String),
    #[error("branching factor {d} not allowed here (need d >= {min})")]
    InvalidDegree { d: u32, min: u32 },
    #[error("probability {0} outside the allowed range")]
    InvalidProbability(f64),
    #[error("two-parameter family needs alpha <= beta <= h(alpha) = {upper}, got beta = {beta}")]
    BetaOutOfRange { beta: f64, upper: f64 },
    #[error("iterate of 2x^(1/d) - x never exceeded 1 within {0} steps")]
    BlowupNotReached(u64),
    #[error("cannot parse boundary spec {0:?}")]
    BoundaryParse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(i: i64) -> Parity {
        if i.rem_euclid(2) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

/// CDF of an integer random variable supported on one parity class.
///
/// `values[k] = F(lo_index + 2k)`. Below the window `F = 0`, above it `F = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CdfRepr", into = "CdfRepr")]
pub struct Cdf {
    parity: Parity,
    lo_index: i64,
    values: Vec<f64>,
    survival: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CdfRepr {
    parity: Parity,
    lo_index: i64,
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    survival: Option<Vec<f64>>,
}

impl TryFrom<CdfRepr> for Cdf {
    type Error = CdfError;

    fn try_from(r: CdfRepr) -> Result<Self, CdfError> {
        if Parity::of(r.lo_index) != r.parity {
            return Err(CdfError::Invalid(format!(
                "lo_index {} does not have {:?} parity",
                r.lo_index, r.parity
            )));
        }
        match r.survival {
            None => Cdf::new(r.lo_index, r.values),
            Some(s) => Cdf::with_survival(r.lo_index, r.values, s),
        }
    }
}

impl From<Cdf> for CdfRepr {
    fn from(c: Cdf) -> Self {
        CdfRepr {
            parity: c.parity,
            lo_index: c.lo_index,
            values: c.values,
            survival: Some(c.survival),
        }
    }
}

fn validate(values: &[f64], survival: &[f64]) -> Result<(), CdfError> {
    if values.is_empty() {
        return Err(CdfError::Invalid("empty window".into()));
    }
    if values.len() != survival.len() {
        return Err(CdfError::Invalid("values and survival differ in length".into()));
    }
    for (k, (&v, &s)) in values.iter().zip(survival).enumerate() {
        if !(0.0..=1.0).contains(&v) || !(0.0..=1.0).contains(&s) {
            return Err(CdfError::Invalid(format!("entry {k} outside [0, 1]")));
        }
        if (v + s - 1.0).abs() > 1e-9 {
            return Err(CdfError::Invalid(format!(
                "entry {k}: value and survival do not sum to 1"
            )));
        }
        if k > 0 && (v < values[k - 1] || s > survival[k - 1]) {
            return Err(CdfError::Invalid(format!("not monotone at entry {k}")));
        }
    }
    Ok(())
}

impl Cdf {
    pub fn new(lo_index: i64, values: Vec<f64>) -> Result<Self, CdfError> {
        let survival = values.iter().map(|v| 1.0 - v).collect();
        Self::with_survival(lo_index, values, survival)
    }

    /// Build from explicitly supplied `F` and `1 - F` columns.
    pub fn with_survival(
        lo_index: i64,
        values: Vec<f64>,
        survival: Vec<f64>,
    ) -> Result<Self, CdfError> {
        validate(&values, &survival)?;
        Ok(Self {
            parity: Parity::of(lo_index),
            lo_index,
            values,
            survival,
        })
    }

    fn from_parts(lo_index: i64, values: Vec<f64>, survival: Vec<f64>) -> Self {
        debug_assert!(validate(&values, &survival).is_ok());
        Self {
            parity: Parity::of(lo_index),
            lo_index,
            values,
            survival,
        }
    }

    /// Point mass at `at`, on a window of half-width `half_width` around 0
    /// (grown if needed so that `at` lies inside).
    pub fn delta(at: i64, half_width: usize) -> Self {
        let k = half_width as i64;
        let shift = at.rem_euclid(2);
        let lo = (-2 * k + shift).min(at);
        let hi = (2 * k + shift).max(at);
        let n = ((hi - lo) / 2 + 1) as usize;
        let mut values = Vec::with_capacity(n);
        let mut survival = Vec::with_capacity(n);
        for j in 0..n {
            let i = lo + 2 * j as i64;
            let (v, s) = if i >= at { (1.0, 0.0) } else { (0.0, 1.0) };
            values.push(v);
            survival.push(s);
        }
        Self::from_parts(lo, values, survival)
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn lo_index(&self) -> i64 {
        self.lo_index
    }

    pub fn hi_index(&self) -> i64 {
        self.lo_index + 2 * (self.values.len() as i64 - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn survival(&self) -> &[f64] {
        &self.survival
    }

    /// Indices covered by the window.
    pub fn indices(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.values.len()).map(move |k| self.lo_index + 2 * k as i64)
    }

    /// Window slot of the largest same-parity index `<= i`, if any.
    fn slot(&self, i: i64) -> Option<Result<usize, ()>> {
        let j = if Parity::of(i) == self.parity { i } else { i - 1 };
        if j < self.lo_index {
            None
        } else if j > self.hi_index() {
            Some(Err(()))
        } else {
            Some(Ok(((j - self.lo_index) / 2) as usize))
        }
    }

    /// `F(i)` for any integer `i`, using the implicit 0/1 extension.
    pub fn at(&self, i: i64) -> f64 {
        match self.slot(i) {
            None => 0.0,
            Some(Err(())) => 1.0,
            Some(Ok(k)) => self.values[k],
        }
    }

    /// `1 - F(i)` for any integer `i`, computed without cancellation.
    pub fn survival_at(&self, i: i64) -> f64 {
        match self.slot(i) {
            None => 1.0,
            Some(Err(())) => 0.0,
            Some(Ok(k)) => self.survival[k],
        }
    }

    /// `P(V = i)` for `i` on this CDF's parity class.
    pub fn mass_at(&self, i: i64) -> f64 {
        let lower = self.at(i);
        if lower <= 0.5 {
            (lower - self.at(i - 2)).max(0.0)
        } else {
            (self.survival_at(i - 2) - self.survival_at(i)).max(0.0)
        }
    }

    /// Probability mass function over the window plus the top overflow atom.
    pub fn pmf(&self) -> Vec<(i64, f64)> {
        (0..=self.values.len())
            .map(|k| {
                let i = self.lo_index + 2 * k as i64;
                (i, self.mass_at(i))
            })
            .collect()
    }

    pub fn mean(&self) -> f64 {
        self.pmf().iter().map(|&(i, p)| i as f64 * p).sum()
    }

    /// Sup-norm distance between two CDFs over every integer where either
    /// window is informative.
    pub fn sup_distance(&self, other: &Cdf) -> f64 {
        let lo = self.lo_index.min(other.lo_index) - 2;
        let hi = self.hi_index().max(other.hi_index()) + 2;
        (lo..=hi)
            .map(|i| {
                let a = self.at(i);
                let b = other.at(i);
                if a.max(b) > 0.5 {
                    (self.survival_at(i) - other.survival_at(i)).abs()
                } else {
                    (a - b).abs()
                }
            })
            .fold(0.0, f64::max)
    }

    /// Restrict (or extend with implicit values) to `[lo, hi]`.
    pub fn with_window(&self, lo: i64, hi: i64) -> Cdf {
        assert_eq!(Parity::of(lo), self.parity, "window start has wrong parity");
        assert!(lo <= hi);
        let n = ((hi - lo) / 2 + 1) as usize;
        let idx = (0..n).map(|k| lo + 2 * k as i64);
        let values = idx.clone().map(|i| self.at(i)).collect();
        let survival = idx.map(|i| self.survival_at(i)).collect();
        Cdf::from_parts(lo, values, survival)
    }
}

impl fmt::Display for Cdf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cdf[{:?}; {}..={}]", self.parity, self.lo_index, self.hi_index())
    }
}

/// `(x^d, 1 - x^d)` from an accurate pair `(x, 1 - x)`.
#[inline]
fn power_pair(x: f64, xc: f64, d: u32) -> (f64, f64) {
    if x <= 0.5 {
        let p = x.powi(d as i32);
        (p, 1.0 - p)
    } else {
        let l = d as f64 * (-xc).ln_1p();
        (l.exp(), -l.exp_m1())
    }
}

#[inline]
fn max_step(lo: f64, lo_c: f64, hi: f64, hi_c: f64, d: u32) -> (f64, f64) {
    power_pair(0.5 * (lo + hi), 0.5 * (lo_c + hi_c), d)
}

#[inline]
fn min_step(lo: f64, lo_c: f64, hi: f64, hi_c: f64, d: u32) -> (f64, f64) {
    let (c, v) = power_pair(0.5 * (lo_c + hi_c), 0.5 * (lo + hi), d);
    (v, c)
}

fn neighbour_step(
    f: &Cdf,
    d: u32,
    step: fn(f64, f64, f64, f64, u32) -> (f64, f64),
) -> Cdf {
    let lo = f.lo_index - 1;
    let n = f.len() + 1;
    let mut values = Vec::with_capacity(n);
    let mut survival = Vec::with_capacity(n);
    for k in 0..n {
        let i = lo + 2 * k as i64;
        let (v, s) = step(
            f.at(i - 1),
            f.survival_at(i - 1),
            f.at(i + 1),
            f.survival_at(i + 1),
            d,
        );
        values.push(v);
        survival.push(s);
    }
    Cdf::from_parts(lo, values, survival)
}

/// One max step: `(ΦF)(i) = ((F(i-1) + F(i+1)) / 2)^d`.
///
/// The window grows by one index on each side; this is exact with respect to
/// the implicit 0/1 extension.
pub fn phi_step(f: &Cdf, d: u32) -> Cdf {
    neighbour_step(f, d, max_step)
}

/// One min step: `(Φ'F)(i) = 1 - (1 - (F(i-1) + F(i+1)) / 2)^d`.
pub fn phi_prime_step(f: &Cdf, d: u32) -> Cdf {
    neighbour_step(f, d, min_step)
}

/// `g(x, y, z) = [1 - ½(1 - (x+y)/2)^d - ½(1 - (y+z)/2)^d]^d`.
pub fn g(x: f64, y: f64, z: f64, d: u32) -> f64 {
    let di = d as i32;
    let h = 1.0 - 0.5 * (1.0 - 0.5 * (x + y)).powi(di) - 0.5 * (1.0 - 0.5 * (y + z)).powi(di);
    h.powi(di)
}

/// Upper-tail counterpart `h(x, y, z) = 1 - g(1-x, 1-y, 1-z)`.
pub fn h_upper(x: f64, y: f64, z: f64, d: u32) -> f64 {
    let di = d as i32;
    let inner = 1.0 - 0.5 * (0.5 * (x + y)).powi(di) - 0.5 * (0.5 * (y + z)).powi(di);
    1.0 - inner.powi(di)
}

/// One full round `Ψ = Φ ∘ Φ'`, evaluated directly through `g` on the same
/// window (values that would fall outside it are truncated).
pub fn psi_step(f: &Cdf, d: u32) -> Cdf {
    let n = f.len();
    let mut values = Vec::with_capacity(n);
    let mut survival = Vec::with_capacity(n);
    for k in 0..n {
        let i = f.lo_index + 2 * k as i64;
        let (x, xc) = (f.at(i - 2), f.survival_at(i - 2));
        let (y, yc) = (f.values[k], f.survival[k]);
        let (z, zc) = (f.at(i + 2), f.survival_at(i + 2));
        let (a, ac) = min_step(x, xc, y, yc, d);
        let (b, bc) = min_step(y, yc, z, zc, d);
        let (v, s) = max_step(a, ac, b, bc, d);
        values.push(v);
        survival.push(s);
    }
    Cdf::from_parts(f.lo_index, values, survival)
}

#[derive(Debug, Clone)]
pub struct Iteration {
    pub cdf: Cdf,
    /// `F_0, F_2, ..., F_{2n}` when recording was requested.
    pub trajectory: Option<Vec<Cdf>>,
}

pub fn iterate(f: &Cdf, d: u32, rounds: usize, record: bool) -> Iteration {
    let mut trajectory = record.then(|| Vec::with_capacity(rounds + 1));
    let mut cur = f.clone();
    for _ in 0..rounds {
        let next = psi_step(&cur, d);
        if let Some(t) = trajectory.as_mut() {
            t.push(cur);
        }
        cur = next;
    }
    if let Some(t) = trajectory.as_mut() {
        t.push(cur.clone());
    }
    Iteration {
        cdf: cur,
        trajectory,
    }
}

#[derive(Debug, Clone)]
pub struct Convergence {
    pub cdf: Cdf,
    pub rounds: usize,
    pub converged: bool,
    /// Sup-norm change produced by the last round.
    pub last_change: f64,
}

/// Iterate until successive iterates differ by less than `tol` in sup norm.
pub fn iterate_to_convergence(f: &Cdf, d: u32, tol: f64, max_rounds: usize) -> Convergence {
    let mut cur = f.clone();
    let mut last_change = f64::INFINITY;
    for r in 1..=max_rounds {
        let next = psi_step(&cur, d);
        last_change = next.sup_distance(&cur);
        cur = next;
        if last_change < tol {
            return Convergence {
                cdf: cur,
                rounds: r,
                converged: true,
                last_change,
            };
        }
    }
    Convergence {
        cdf: cur,
        rounds: max_rounds,
        converged: false,
        last_change,
    }
}

/// `(S^s F)(i) = F(i + s)`: the law of `V - s`.
pub fn shift(f: &Cdf, s: i64) -> Cdf {
    Cdf::from_parts(f.lo_index - s, f.values.clone(), f.survival.clone())
}

/// `(RF)(i) = 1 - F(-i-2)`: the law of `-(V + 1)`.
pub fn reflect_r(f: &Cdf) -> Cdf {
    let lo = -f.hi_index() - 3;
    let n = f.len() + 1;
    let mut values = Vec::with_capacity(n);
    let mut survival = Vec::with_capacity(n);
    for k in 0..n {
        let src = -(lo + 2 * k as i64) - 3;
        values.push(f.survival_at(src));
        survival.push(f.at(src));
    }
    Cdf::from_parts(lo, values, survival)
}

/// `h(x) = 2√x - x`.
pub fn h_d2(x: f64) -> f64 {
    2.0 * x.sqrt() - x
}

/// Inverse of [`h_d2`] on `[0, 1]`: `(1 - √(1-y))²`, written to avoid
/// cancellation for small `y`.
pub fn h_d2_inv(y: f64) -> f64 {
    let t = y / (1.0 + (1.0 - y).sqrt());
    t * t
}

fn check_open_unit(p: f64) -> Result<(), CdfError> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(CdfError::InvalidProbability(p))
    }
}

/// Orbit `F(0) = start`, `F(2i) = h^i(start)` on `[-2·half_width, 2·half_width]`
/// shifted by `offset`. Survival values use `1 - h(x) = h⁻¹(1 - x)`.
fn h_orbit(start: f64, half_width: usize, offset: i64) -> Cdf {
    let k = half_width;
    let mut values = vec![0.0; 2 * k + 1];
    let mut survival = vec![0.0; 2 * k + 1];
    values[k] = start;
    survival[k] = 1.0 - start;
    for j in 1..=k {
        let (x, s) = (values[k + j - 1], survival[k + j - 1]);
        let s_next = h_d2_inv(s);
        survival[k + j] = s_next;
        values[k + j] = if s_next < 0.5 { 1.0 - s_next } else { h_d2(x) };
        let (y, yc) = (values[k - j + 1], survival[k - j + 1]);
        let y_prev = h_d2_inv(y);
        values[k - j] = y_prev;
        survival[k - j] = if y_prev < 0.5 { 1.0 - y_prev } else { h_d2(yc) };
    }
    Cdf::from_parts(offset - 2 * k as i64, values, survival)
}

/// The `d = 2` fixed point `F_α` with `F_α(0) = α` and `F_α(2i) = h^i(α)`.
pub fn fixed_family_d2(alpha: f64, half_width: usize) -> Result<Cdf, CdfError> {
    check_open_unit(alpha)?;
    Ok(h_orbit(alpha, half_width, 0))
}

/// Two-parameter fixed point `F_{α,β}` split into its even and odd parts;
/// requires `α <= β <= h(α)`.
pub fn fixed_family_d2_pair(
    alpha: f64,
    beta: f64,
    half_width: usize,
) -> Result<(Cdf, Cdf), CdfError> {
    check_open_unit(alpha)?;
    let upper = h_d2(alpha);
    if !(alpha..=upper).contains(&beta) || beta >= 1.0 {
        return Err(CdfError::BetaOutOfRange { beta, upper });
    }
    Ok((h_orbit(alpha, half_width, 0), h_orbit(beta, half_width, 1)))
}

/// Number of steps of `x ↦ 2x^{1/d} - x` from `alpha` until the iterate
/// exceeds 1. Such a step always exists for `d >= 3`.
pub fn hd_blowup_certificate(d: u32, alpha: f64) -> Result<u64, CdfError> {
    const CAP: u64 = 1_000_000;
    if d < 3 {
        return Err(CdfError::InvalidDegree { d, min: 3 });
    }
    check_open_unit(alpha)?;
    let inv = 1.0 / d as f64;
    let mut x = alpha;
    for step in 1..=CAP {
        x = 2.0 * x.powf(inv) - x;
        if x > 1.0 {
            return Ok(step);
        }
    }
    Err(CdfError::BlowupNotReached(CAP))
}

/// Law of the values placed at the boundary level of the game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BoundarySpec {
    Zero,
    Constant { value: i64 },
    /// Value 0 with probability `p`, value 2 otherwise.
    Bernoulli { p: f64 },
    Explicit { cdf: Cdf },
}

impl BoundarySpec {
    pub fn validate(&self) -> Result<(), CdfError> {
        match self {
            BoundarySpec::Zero => Ok(()),
            BoundarySpec::Constant { value } if value.rem_euclid(2) == 0 => Ok(()),
            BoundarySpec::Constant { value } => Err(CdfError::Invalid(format!(
                "constant boundary {value} is not even"
            ))),
            BoundarySpec::Bernoulli { p } if (0.0..=1.0).contains(p) => Ok(()),
            BoundarySpec::Bernoulli { p } => Err(CdfError::InvalidProbability(*p)),
            BoundarySpec::Explicit { cdf } if cdf.parity() == Parity::Even => Ok(()),
            BoundarySpec::Explicit { .. } => {
                Err(CdfError::Invalid("explicit boundary CDF must be even".into()))
            }
        }
    }

    pub fn to_cdf(&self, half_width: usize) -> Result<Cdf, CdfError> {
        self.validate()?;
        Ok(match self {
            BoundarySpec::Zero => Cdf::delta(0, half_width),
            BoundarySpec::Constant { value } => Cdf::delta(*value, half_width),
            BoundarySpec::Bernoulli { p } => {
                let base = Cdf::delta(0, half_width);
                let values = base
                    .indices()
                    .map(|i| if i < 0 { 0.0 } else if i == 0 { *p } else { 1.0 })
                    .collect();
                let survival = base
                    .indices()
                    .map(|i| if i < 0 { 1.0 } else if i == 0 { 1.0 - p } else { 0.0 })
                    .collect();
                Cdf::from_parts(base.lo_index(), values, survival)
            }
            BoundarySpec::Explicit { cdf } => cdf.clone(),
        })
    }
}

pub fn boundary_to_cdf(spec: &BoundarySpec, half_width: usize) -> Result<Cdf, CdfError> {
    spec.to_cdf(half_width)
}

impl fmt::Display for BoundarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundarySpec::Zero => write!(f, "zero"),
            BoundarySpec::Constant { value } => write!(f, "const:{value}"),
            BoundarySpec::Bernoulli { p } => write!(f, "bernoulli:{p:?}"),
            BoundarySpec::Explicit { cdf } => write!(
                f,
                "explicit:{}",
                serde_json::to_string(cdf).map_err(|_| fmt::Error)?
            ),
        }
    }
}

/// Parses `zero`, `const:<even int>`, `bernoulli:<p>` or `explicit:<cdf json>`.
impl FromStr for BoundarySpec {
    type Err = CdfError;

    fn from_str(s: &str) -> Result<Self, CdfError> {
        let s = s.trim();
        let bad = || CdfError::BoundaryParse(s.to_string());
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (s, None),
        };
        let spec = match (kind.to_ascii_lowercase().as_str(), arg) {
            ("zero", None) => BoundarySpec::Zero,
            ("const" | "constant", Some(a)) => BoundarySpec::Constant {
                value: a.parse().map_err(|_| bad())?,
            },
            ("bernoulli", Some(a)) => {
                let p: f64 = a.parse().map_err(|_| bad())?;
                BoundarySpec::Bernoulli { p }
            }
            ("explicit", Some(a)) => BoundarySpec::Explicit {
                cdf: serde_json::from_str(a).map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

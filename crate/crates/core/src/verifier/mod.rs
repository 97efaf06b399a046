//! Interval-arithmetic certificate that one round of the recursion is a
//! contraction near its fixed point.
//!
//! The pipeline tracks a rigorous enclosure of `F(i)` for `i ∈ {-4,…,4}`,
//! checks that one more round maps the enclosure into itself, encloses the
//! derivative of the round map on it, conjugates by an approximate eigenvector
//! basis and bounds the resulting row-sum norm together with the tail
//! correction for the truncated coordinates.

pub mod eigen;
pub mod matrix;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::{add_up, mul_up, Interval, IntervalError};
pub use eigen::{real_basis, BasisKind, ColumnNorm, RealBasis};
pub use matrix::IntervalMatrix;

pub const DEFAULT_ROUNDS: usize = 1000;
/// Tracked grid points `-4, -2, 0, 2, 4`.
pub const GRID: [i64; 5] = [-4, -2, 0, 2, 4];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("conjugation matrix numerically singular (pivot in column {column} contains 0)")]
    Singular { column: usize },
    #[error("branching factor must be at least 2, got {0}")]
    InvalidDegree(u32),
    #[error("at least one round is required")]
    NoRounds,
    #[error(transparent)]
    Interval(#[from] IntervalError),
}

/// Enclosures of the CDF at the five grid points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EnclosureVector(pub [Interval; 5]);

impl EnclosureVector {
    /// The point mass at 0.
    pub fn delta() -> Self {
        let (z, o) = (Interval::ZERO, Interval::ONE);
        Self([z, z, o, o, o])
    }

    /// Entry at grid index `i ∈ {-4, -2, 0, 2, 4}`.
    pub fn at(&self, i: i64) -> Interval {
        let k = GRID.iter().position(|&g| g == i).expect("index on the grid");
        self.0[k]
    }

    pub fn is_subset(&self, other: &EnclosureVector) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a.is_subset(b))
    }

    /// Ordering sanity check: `entry(i).lo <= entry(j).hi` for `i < j`.
    pub fn is_ordered(&self) -> bool {
        (0..5).all(|i| (i + 1..5).all(|j| self.0[i].lo() <= self.0[j].hi()))
    }
}

impl fmt::Display for EnclosureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in GRID.iter().zip(&self.0) {
            writeln!(f, "  z[{i:>2}] = [{:?}, {:?}]", e.lo(), e.hi())?;
        }
        Ok(())
    }
}

/// Interval extension of `g(x,y,z) = [1 - ½(1-(x+y)/2)^d - ½(1-(y+z)/2)^d]^d`.
pub fn g_interval(x: Interval, y: Interval, z: Interval, d: u32) -> Result<Interval, VerifyError> {
    let half = Interval::point(0.5);
    let two = Interval::point(2.0);
    let one = Interval::ONE;
    let a = one.checked_sub(x.checked_add(y)?.checked_div(two)?)?.checked_powi(d)?;
    let b = one.checked_sub(y.checked_add(z)?.checked_div(two)?)?.checked_powi(d)?;
    let inner = one.checked_sub(half.checked_mul(a)?)?.checked_sub(half.checked_mul(b)?)?;
    Ok(inner.checked_powi(d)?)
}

/// One round on the enclosure; the neighbours outside the grid are
/// `[0, z(-4).hi]` and `[z(4).lo, 1]`.
pub fn z_step(z: &EnclosureVector, d: u32) -> Result<EnclosureVector, VerifyError> {
    let e = &z.0;
    let left = Interval::new(0.0, e[0].hi())?;
    let right = Interval::new(e[4].lo(), 1.0)?;
    let mut out = [Interval::ZERO; 5];
    for i in 0..5 {
        let x = if i == 0 { left } else { e[i - 1] };
        let w = if i == 4 { right } else { e[i + 1] };
        out[i] = g_interval(x, e[i], w, d)?;
    }
    Ok(EnclosureVector(out))
}

/// `z_{2·rounds}` starting from the point mass at 0.
pub fn z_iterate(d: u32, rounds: usize) -> Result<EnclosureVector, VerifyError> {
    if d < 2 {
        return Err(VerifyError::InvalidDegree(d));
    }
    let mut z = EnclosureVector::delta();
    for _ in 0..rounds {
        z = z_step(&z, d)?;
    }
    Ok(z)
}

/// Whether one more round maps `z` into itself.
pub fn check_invariance(z: &EnclosureVector, d: u32) -> Result<bool, VerifyError> {
    Ok(z_step(z, d)?.is_subset(z))
}

/// `H(x, y, z) = 1 - ½(1-(x+y)/2)^d - ½(1-(y+z)/2)^d` at a point, enclosed.
fn h_point(x: f64, y: f64, z: f64, d: u32) -> Result<Interval, VerifyError> {
    let (half, two, one) = (Interval::point(0.5), Interval::point(2.0), Interval::ONE);
    let (x, y, z) = (Interval::point(x), Interval::point(y), Interval::point(z));
    let a = one.checked_sub(x.checked_add(y)?.checked_div(two)?)?.checked_powi(d)?;
    let b = one.checked_sub(y.checked_add(z)?.checked_div(two)?)?.checked_powi(d)?;
    Ok(one.checked_sub(half.checked_mul(a)?)?.checked_sub(half.checked_mul(b)?)?)
}

/// `j(x, y) = (1 - (x+y)/2)^{d-1}` at a point, enclosed.
fn j_point(x: f64, y: f64, d: u32) -> Result<Interval, VerifyError> {
    let (x, y) = (Interval::point(x), Interval::point(y));
    Ok(Interval::ONE
        .checked_sub(x.checked_add(y)?.checked_div(Interval::point(2.0))?)?
        .checked_powi(d - 1)?)
}

#[derive(Debug, Clone, Copy)]
enum Partial {
    X,
    Y,
    Z,
}

/// Bracket for one partial derivative of `g` over the box with lower corner
/// `lo` and upper corner `hi`: `H` is non-decreasing and `j` non-increasing in
/// every argument, so the lower end uses `H(lo)` with `j(hi)` and vice versa.
fn partial(which: Partial, lo: [f64; 3], hi: [f64; 3], d: u32) -> Result<Interval, VerifyError> {
    let coef = Interval::point((d * d) as f64).checked_div(Interval::point(4.0))?;
    let js = |p: [f64; 3]| -> Result<Interval, VerifyError> {
        Ok(match which {
            Partial::X => j_point(p[0], p[1], d)?,
            Partial::Y => j_point(p[0], p[1], d)?.checked_add(j_point(p[1], p[2], d)?)?,
            Partial::Z => j_point(p[1], p[2], d)?,
        })
    };
    let lower = coef
        .checked_mul(h_point(lo[0], lo[1], lo[2], d)?.checked_powi(d - 1)?)?
        .checked_mul(js(hi)?)?;
    let upper = coef
        .checked_mul(h_point(hi[0], hi[1], hi[2], d)?.checked_powi(d - 1)?)?
        .checked_mul(js(lo)?)?;
    Ok(Interval::new(lower.lo(), upper.hi())?)
}

/// Enclosure of the 5×5 derivative of one round over the box `z`.
///
/// The first and last rows fold in the neighbour outside the grid: for `-4`
/// the `x`-derivative is added to the diagonal (lower corner `0`), for `4`
/// the `z`-derivative is (upper corner `1`).
pub fn derivative_enclosure(z: &EnclosureVector, d: u32) -> Result<IntervalMatrix, VerifyError> {
    let a: Vec<f64> = z.0.iter().map(Interval::lo).collect();
    let b: Vec<f64> = z.0.iter().map(Interval::hi).collect();
    let mut m = IntervalMatrix::zeros(5, 5);
    for i in 0..5 {
        let (lo, hi) = match i {
            0 => ([0.0, a[0], a[1]], [b[0], b[0], b[1]]),
            4 => ([a[3], a[4], a[4]], [b[3], b[4], 1.0]),
            _ => ([a[i - 1], a[i], a[i + 1]], [b[i - 1], b[i], b[i + 1]]),
        };
        let dx = partial(Partial::X, lo, hi, d)?;
        let dy = partial(Partial::Y, lo, hi, d)?;
        let dz = partial(Partial::Z, lo, hi, d)?;
        match i {
            0 => {
                m[(0, 0)] = dx.checked_add(dy)?;
                m[(0, 1)] = dz;
            }
            4 => {
                m[(4, 3)] = dx;
                m[(4, 4)] = dy.checked_add(dz)?;
            }
            _ => {
                m[(i, i - 1)] = dx;
                m[(i, i)] = dy;
                m[(i, i + 1)] = dz;
            }
        }
    }
    Ok(m)
}

/// Upper bound on `d²(1-a)^{d-1} + d²(1-(1-b)^d)^{d-1}` with `a = z(4).lo`
/// and `b = z(-4).hi`, bounding the influence of the untracked coordinates.
pub fn tail_error(z: &EnclosureVector, d: u32) -> Result<f64, VerifyError> {
    tail_error_at(z.0[4].lo(), z.0[0].hi(), d)
}

pub fn tail_error_at(a: f64, b: f64, d: u32) -> Result<f64, VerifyError> {
    let dd = Interval::point((d * d) as f64);
    let one = Interval::ONE;
    let (a, b) = (Interval::point(a), Interval::point(b));
    let upper = dd.checked_mul(one.checked_sub(a)?.checked_powi(d - 1)?)?;
    let lower = dd.checked_mul(
        one.checked_sub(one.checked_sub(b)?.checked_powi(d)?)?
            .checked_powi(d - 1)?,
    )?;
    Ok(add_up(upper.hi(), lower.hi())?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conjugation {
    pub e: IntervalMatrix,
    pub e_inv: IntervalMatrix,
    pub e_max: f64,
    pub kind: BasisKind,
}

/// Approximate eigenvector basis of the entrywise upper endpoints of `dapprox`,
/// with a rigorous enclosure of its inverse. Falls back to the orthogonal
/// Schur basis if the eigenvector matrix cannot be inverted.
pub fn conjugation_matrix(dapprox: &IntervalMatrix, norm: ColumnNorm) -> Result<Conjugation, VerifyError> {
    let upper = dapprox.upper();
    let basis = real_basis(&upper, norm);
    let attempt = |m: &[Vec<f64>], kind| -> Result<Conjugation, VerifyError> {
        let e = IntervalMatrix::from_points(m);
        let e_inv = e.inverse()?;
        Ok(Conjugation {
            e_max: e.max_mag().max(e_inv.max_mag()),
            e,
            e_inv,
            kind,
        })
    };
    match attempt(&basis.matrix, basis.kind) {
        Err(VerifyError::Singular { .. }) if basis.kind == BasisKind::Eigenvectors => {
            attempt(&eigen::schur_vectors(&upper, norm), BasisKind::Schur)
        }
        other => other,
    }
}

/// `M + 5·err·e_max`, rounded upward.
pub fn certified_bound(m: f64, err: f64, e_max: f64) -> Result<f64, VerifyError> {
    Ok(add_up(m, mul_up(mul_up(5.0, err)?, e_max)?)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub d: u32,
    pub rounds: usize,
    pub z: EnclosureVector,
    pub invariance_ok: bool,
    /// Row-sum norm of the conjugated derivative enclosure.
    #[serde(rename = "M")]
    pub m: f64,
    pub err: f64,
    pub e_max: f64,
    pub bound: f64,
    pub pass: bool,
    pub basis: BasisKind,
    pub column_norm: ColumnNorm,
    /// Outside the range `3..=15` where the certificate is expected to hold.
    pub exploratory: bool,
}

impl VerificationReport {
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        s += &format!("d = {}, rounds = {}\n", self.d, self.rounds);
        s += &format!("Enclosures after {} rounds:\n{}", self.rounds, self.z);
        s += &format!(
            "All intervals contained: {}\n",
            if self.invariance_ok { "True" } else { "False" }
        );
        s += &format!("M: {:.10}\n", self.m);
        s += &format!("Err_{}: {:e}\n", self.rounds, self.err);
        s += &format!("E_max: {:.9}\n", self.e_max);
        s += &format!("M + 5 Err E_max <= {:.10}\n", self.bound);
        s += &format!(
            "Contraction verified: {}{}\n",
            if self.pass { "True" } else { "False" },
            if self.exploratory { " (exploratory d)" } else { "" }
        );
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub rounds: usize,
    pub column_norm: ColumnNorm,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            rounds: DEFAULT_ROUNDS,
            column_norm: ColumnNorm::Euclidean,
        }
    }
}

pub fn verify(d: u32, rounds: usize) -> Result<VerificationReport, VerifyError> {
    verify_with(
        d,
        VerifyOptions {
            rounds,
            ..VerifyOptions::default()
        },
    )
}

pub fn verify_with(d: u32, opts: VerifyOptions) -> Result<VerificationReport, VerifyError> {
    if opts.rounds == 0 {
        return Err(VerifyError::NoRounds);
    }
    let z = z_iterate(d, opts.rounds)?;
    let invariance_ok = check_invariance(&z, d)?;
    let dmat = derivative_enclosure(&z, d)?;
    let conj = conjugation_matrix(&dmat, opts.column_norm)?;
    let conjugated = conj.e_inv.checked_mul(&dmat)?.checked_mul(&conj.e)?;
    let m = conjugated.row_sum_norm();
    let err = tail_error(&z, d)?;
    let bound = certified_bound(m, err, conj.e_max)?;
    Ok(VerificationReport {
        d,
        rounds: opts.rounds,
        z,
        invariance_ok,
        m,
        err,
        e_max: conj.e_max,
        bound,
        pass: invariance_ok && bound < 1.0,
        basis: conj.kind,
        column_norm: opts.column_norm,
        exploratory: !(3..=15).contains(&d),
    })
}

//! Derived checks on iterated laws: tail recursions, stochastic dominance,
//! reflection symmetry, large-degree asymptotics and the boundary phase scan.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cdf::{
    iterate, iterate_to_convergence, phi_prime_step, phi_step, psi_step, reflect_r, shift,
    BoundarySpec, Cdf, CdfError, DEFAULT_HALF_WIDTH,
};

/// `(√5 - 1) / 2`.
pub const GOLDEN_MEAN: f64 = 0.618_033_988_749_894_8;

/// Successive-iterate sup-norm below which a law counts as converged.
pub const CONVERGENCE_TOL: f64 = 1e-14;

/// Distances above this leave a phase-scan point unclassified.
pub const UNRESOLVED_BAND: f64 = 0.1;

fn check_degree(d: u32, min: u32) -> Result<(), CdfError> {
    if d < min {
        return Err(CdfError::InvalidDegree { d, min });
    }
    Ok(())
}

/// `ln(scale * base^(d^k))`, with `0 * ∞` read as 0 when `base == 1`.
fn log_power_bound(scale: f64, base: f64, d: u32, k: i64) -> f64 {
    if base == 0.0 {
        return f64::NEG_INFINITY;
    }
    let lb = base.ln();
    let exp = (d as f64).powi(k as i32);
    let tail = if lb == 0.0 { 0.0 } else { exp * lb };
    scale.ln() + tail
}

/// `ln(1 - (1 - x^d)^d)`.
fn log_h_diag(x: f64, d: u32) -> f64 {
    let xd = x.powi(d as i32);
    (-(d as f64 * (-xd).ln_1p()).exp_m1()).ln()
}

/// `ln((1 - (1 - x)^d)^d)`.
fn log_g_diag(x: f64, d: u32) -> f64 {
    let inner = -(d as f64 * (-x).ln_1p()).exp_m1();
    d as f64 * inner.ln()
}

/// `h(x,x,x) <= d x^d` and `g(x,x,x) <= (dx)^d`, compared in log space.
pub fn one_step_bounds_hold(x: f64, d: u32) -> bool {
    if x <= 0.0 {
        return true;
    }
    let df = d as f64;
    let slack = 1e-12;
    let h_ok = log_h_diag(x, d) <= df.ln() + df * x.ln() + slack;
    let g_ok = log_g_diag(x, d) <= df * (df * x).ln() + slack;
    h_ok && g_ok
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub d: u32,
    pub rounds: usize,
    pub ks: Vec<i64>,
    /// `sup_n P(V_n >= 2k)` over the computed iterates.
    pub p_plus: Vec<f64>,
    /// `sup_n P(V_n <= 2k)`.
    pub p_minus: Vec<f64>,
    /// Smallest `ln(rhs) - ln(lhs)` of the upper-tail recursion.
    pub upper_margin: f64,
    /// Smallest `ln(rhs) - ln(lhs)` of the lower-tail recursion.
    pub lower_margin: f64,
    pub pairs_checked: u64,
    pub one_step_ok: bool,
    /// `sup_n P(V_n >= 2)`.
    pub p_plus_one: f64,
    pub monotone: bool,
}

impl TailReport {
    pub fn margins_ok(&self) -> bool {
        self.upper_margin >= 0.0 && self.lower_margin >= 0.0
    }

    pub fn p_plus_at(&self, k: i64) -> f64 {
        self.ks
            .iter()
            .position(|&x| x == k)
            .map_or(0.0, |i| self.p_plus[i])
    }
}

/// Tail suprema and recursion margins of the iterates from a zero boundary.
pub fn tail_check(d: u32, rounds: usize) -> Result<TailReport, CdfError> {
    tail_check_window(d, rounds, DEFAULT_HALF_WIDTH)
}

pub fn tail_check_window(d: u32, rounds: usize, half_width: usize) -> Result<TailReport, CdfError> {
    check_degree(d, 2)?;
    let start = Cdf::delta(0, half_width);
    let traj = iterate(&start, d, rounds, true).trajectory.expect("recorded");
    let k_lo = start.lo_index() / 2;
    let k_hi = start.hi_index() / 2 + 1;
    let ks: Vec<i64> = (k_lo..=k_hi).collect();
    let mut p_plus = vec![0.0f64; ks.len()];
    let mut p_minus = vec![0.0f64; ks.len()];
    for f in &traj {
        for (j, &k) in ks.iter().enumerate() {
            p_plus[j] = p_plus[j].max(f.survival_at(2 * k - 2));
            p_minus[j] = p_minus[j].max(f.at(2 * k));
        }
    }

    let mut upper_margin = f64::INFINITY;
    let mut lower_margin = f64::INFINITY;
    let mut pairs = 0u64;
    let n = ks.len();
    let two_d = 2.0 * d as f64;
    for m in 0..n {
        for k in 1..n {
            if m + k < n && p_plus[m + k] > 0.0 {
                let rhs = log_power_bound(0.5, 2.0 * p_plus[m], d, k as i64);
                upper_margin = upper_margin.min(rhs - p_plus[m + k].ln());
                pairs += 1;
            }
            if m >= k && p_minus[m - k] > 0.0 {
                let rhs = log_power_bound(1.0 / two_d, two_d * p_minus[m], d, k as i64);
                lower_margin = lower_margin.min(rhs - p_minus[m - k].ln());
                pairs += 1;
            }
        }
    }
    let one_step_ok = p_plus
        .iter()
        .chain(&p_minus)
        .all(|&x| one_step_bounds_hold(x, d));
    let monotone = p_plus.windows(2).all(|w| w[1] <= w[0]) && p_minus.windows(2).all(|w| w[0] <= w[1]);
    let p_plus_one = p_plus[ks.iter().position(|&k| k == 1).expect("k = 1 in window")];
    Ok(TailReport {
        d,
        rounds,
        ks,
        p_plus,
        p_minus,
        upper_margin,
        lower_margin,
        pairs_checked: pairs,
        one_step_ok,
        p_plus_one,
        monotone,
    })
}

/// `min_k (1 - F(-k-4)) - F(k)` over even `k`: nonnegative iff `V >= -V - 2`
/// stochastically.
pub fn dominance_margin(f: &Cdf) -> f64 {
    let span = f.lo_index().abs().max(f.hi_index().abs()) + 6;
    let span = span + span.rem_euclid(2);
    (-span..=span)
        .step_by(2)
        .map(|k| f.survival_at(-k - 4) - f.at(k))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub d: u32,
    pub rounds: usize,
    pub min_margin: f64,
    pub worst_round: usize,
}

impl DominanceReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.min_margin >= -tol
    }
}

pub fn dominance_check(d: u32, rounds: usize) -> Result<DominanceReport, CdfError> {
    check_degree(d, 2)?;
    let traj = iterate(&Cdf::delta(0, DEFAULT_HALF_WIDTH), d, rounds, true)
        .trajectory
        .expect("recorded");
    let (worst_round, min_margin) = traj
        .iter()
        .map(dominance_margin)
        .enumerate()
        .fold((0, f64::INFINITY), |best, (n, m)| if m < best.1 { (n, m) } else { best });
    Ok(DominanceReport {
        d,
        rounds,
        min_margin,
        worst_round,
    })
}

/// `|F(i) - G(j)|`, taken on survival values in the upper half so that
/// tails near 1 keep their relative accuracy.
fn point_gap(f: &Cdf, i: i64, g: &Cdf, j: i64) -> f64 {
    let (a, b) = (f.at(i), g.at(j));
    if a.max(b) > 0.5 {
        (f.survival_at(i) - g.survival_at(j)).abs()
    } else {
        (a - b).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointResiduals {
    /// `max |ΨF(i) - F(i)|` over the interior of the window.
    pub psi: f64,
    /// `max |ΦF(i) - F(i-1)|` over the interior of the window.
    pub phi_shift: f64,
}

/// Residuals of `F` as a fixed point of `Ψ` and of `ΦF = S⁻¹F`, skipping
/// `margin` grid points at each end of the window.
pub fn fixed_point_residuals(f: &Cdf, d: u32, margin: usize) -> FixedPointResiduals {
    let lo = f.lo_index() + 2 * margin as i64;
    let hi = f.hi_index() - 2 * margin as i64;
    let psi = psi_step(f, d);
    let phi = phi_step(f, d);
    let mut r = FixedPointResiduals {
        psi: 0.0,
        phi_shift: 0.0,
    };
    let mut i = lo;
    while i <= hi {
        r.psi = r.psi.max(point_gap(&psi, i, f, i));
        r.phi_shift = r.phi_shift.max(point_gap(&phi, i + 1, f, i));
        i += 2;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub d: u32,
    pub rounds: usize,
    /// `sup_i |F(i) - (R Φ'F)(i)|`.
    pub deviation: f64,
}

pub fn r_symmetry_check(d: u32, rounds: usize) -> Result<SymmetryReport, CdfError> {
    check_degree(d, 2)?;
    let f = iterate(&Cdf::delta(0, DEFAULT_HALF_WIDTH), d, rounds, false).cdf;
    let rf = reflect_r(&phi_prime_step(&f, d));
    Ok(SymmetryReport {
        d,
        rounds,
        deviation: f.sup_distance(&rf),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsRow {
    pub d: u32,
    pub rounds: usize,
    pub converged: bool,
    pub pmf_minus2: f64,
    pub pmf_0: f64,
    pub pmf_2: f64,
    pub mean: f64,
    /// `d^3 2^(-2d)`.
    pub scale: f64,
    pub ratio_minus2: f64,
    pub ratio_0: f64,
    pub ratio_2: f64,
    pub ratio_mean: f64,
}

impl AsymptoticsRow {
    pub fn max_ratio(&self) -> f64 {
        self.ratio_minus2
            .max(self.ratio_0)
            .max(self.ratio_2)
            .max(self.ratio_mean)
    }
}

pub const ASYMPTOTICS_MAX_ROUNDS: usize = 100_000;

pub fn asymptotics_row(d: u32) -> Result<AsymptoticsRow, CdfError> {
    check_degree(d, 2)?;
    let conv = iterate_to_convergence(
        &Cdf::delta(0, DEFAULT_HALF_WIDTH),
        d,
        CONVERGENCE_TOL,
        ASYMPTOTICS_MAX_ROUNDS,
    );
    let f = &conv.cdf;
    let df = d as f64;
    let two = (-df).exp2();
    let scale = df.powi(3) * (-2.0 * df).exp2();
    let (pm2, p0, p2, mean) = (f.mass_at(-2), f.mass_at(0), f.mass_at(2), f.mean());
    Ok(AsymptoticsRow {
        d,
        rounds: conv.rounds,
        converged: conv.converged,
        pmf_minus2: pm2,
        pmf_0: p0,
        pmf_2: p2,
        mean,
        scale,
        ratio_minus2: (pm2 - two).abs() / scale,
        ratio_0: (p0 - (1.0 - (df / 2.0 + 1.0) * two)).abs() / scale,
        ratio_2: (p2 - df / 2.0 * two).abs() / scale,
        ratio_mean: (mean - (df - 2.0) * two).abs() / scale,
    })
}

pub fn asymptotics_check(ds: &[u32]) -> Result<Vec<AsymptoticsRow>, CdfError> {
    ds.par_iter().map(|&d| asymptotics_row(d)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseClass {
    /// Same limit as the zero boundary.
    Zero,
    /// The zero-boundary limit shifted up by 2.
    Shifted,
    Unresolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub p: f64,
    pub class: PhaseClass,
    pub dist_zero: f64,
    pub dist_shifted: f64,
    /// Classification agrees with the one at twice the rounds.
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseScanResult {
    pub d: u32,
    pub rounds: usize,
    pub grid: Vec<PhasePoint>,
    pub trace: Vec<PhasePoint>,
    /// Last bracket `[lo, hi]` with `lo` shifted and `hi` zero.
    pub bracket: (f64, f64),
    pub p_c: Option<f64>,
    pub heuristic_root: f64,
}

/// Root of `p = (1 - p/2)^d` by Newton's method from `2 ln(d) / d`.
pub fn heuristic_root(d: u32) -> f64 {
    let df = d as f64;
    let mut p = (2.0 * df.ln() / df).clamp(1e-6, 1.0);
    for _ in 0..100 {
        let q = 1.0 - p / 2.0;
        let f = p - q.powi(d as i32);
        let fp = 1.0 + df / 2.0 * q.powi(d as i32 - 1);
        let next = (p - f / fp).clamp(0.0, 1.0);
        if (next - p).abs() < 1e-16 {
            return next;
        }
        p = next;
    }
    p
}

struct Targets {
    zero: Cdf,
    shifted: Cdf,
}

fn targets(d: u32) -> Targets {
    let zero = iterate_to_convergence(
        &Cdf::delta(0, DEFAULT_HALF_WIDTH),
        d,
        CONVERGENCE_TOL,
        ASYMPTOTICS_MAX_ROUNDS,
    )
    .cdf;
    let shifted = shift(&zero, -2);
    Targets { zero, shifted }
}

fn classify_once(t: &Targets, d: u32, p: f64, rounds: usize) -> Result<(PhaseClass, f64, f64), CdfError> {
    let start = BoundarySpec::Bernoulli { p }.to_cdf(DEFAULT_HALF_WIDTH)?;
    let f = iterate(&start, d, rounds, false).cdf;
    let (a, b) = (f.sup_distance(&t.zero), f.sup_distance(&t.shifted));
    let class = if a.min(b) > UNRESOLVED_BAND {
        PhaseClass::Unresolved
    } else if a < b {
        PhaseClass::Zero
    } else {
        PhaseClass::Shifted
    };
    Ok((class, a, b))
}

fn classify(t: &Targets, d: u32, p: f64, rounds: usize) -> Result<PhasePoint, CdfError> {
    let (class, dist_zero, dist_shifted) = classify_once(t, d, p, rounds)?;
    let (again, _, _) = classify_once(t, d, p, 2 * rounds)?;
    Ok(PhasePoint {
        p,
        class,
        dist_zero,
        dist_shifted,
        stable: class == again,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseScanOptions {
    pub rounds: usize,
    pub grid_points: usize,
    pub bisect_tol: f64,
    pub max_bisect: usize,
}

impl Default for PhaseScanOptions {
    fn default() -> Self {
        Self {
            rounds: 1000,
            grid_points: 11,
            bisect_tol: 1e-7,
            max_bisect: 60,
        }
    }
}

/// Classify the limit from a Bernoulli boundary on a uniform grid of `p`,
/// then bisect between the last shifted and first zero grid points.
pub fn phase_scan(d: u32, opts: &PhaseScanOptions) -> Result<PhaseScanResult, CdfError> {
    check_degree(d, 3)?;
    if opts.rounds == 0 {
        return Err(CdfError::Invalid("phase scan needs at least one round".into()));
    }
    let t = targets(d);
    let m = opts.grid_points.max(2);
    let grid = (0..m)
        .into_par_iter()
        .map(|i| classify(&t, d, i as f64 / (m - 1) as f64, opts.rounds))
        .collect::<Result<Vec<_>, _>>()?;

    let mut lo = 0.0;
    let mut hi = 1.0;
    for w in grid.windows(2) {
        if w[0].class == PhaseClass::Shifted && w[1].class == PhaseClass::Zero {
            lo = w[0].p;
            hi = w[1].p;
            break;
        }
    }
    let mut trace = Vec::new();
    let mut resolved = true;
    for _ in 0..opts.max_bisect {
        if hi - lo <= opts.bisect_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let pt = classify(&t, d, mid, opts.rounds)?;
        trace.push(pt);
        match pt.class {
            PhaseClass::Zero => hi = mid,
            PhaseClass::Shifted => lo = mid,
            PhaseClass::Unresolved => {
                resolved = false;
                break;
            }
        }
    }
    let monotone_grid = grid.first().map(|p| p.class) == Some(PhaseClass::Shifted)
        && grid.last().map(|p| p.class) == Some(PhaseClass::Zero);
    Ok(PhaseScanResult {
        d,
        rounds: opts.rounds,
        grid,
        trace,
        bracket: (lo, hi),
        p_c: (resolved && monotone_grid).then_some(0.5 * (lo + hi)),
        heuristic_root: heuristic_root(d),
    })
}

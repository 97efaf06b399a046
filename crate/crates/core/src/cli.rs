//! Command-line front end.
//!
//! Every subcommand builds a serialisable report and renders it as JSON, CSV
//! or a plain-text table. Exit codes: 0 success, 1 numeric or assertion
//! failure, 2 usage error.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::analysis::{
    asymptotics_check, dominance_check, fixed_point_residuals, phase_scan, r_symmetry_check,
    tail_check_window, AsymptoticsRow, DominanceReport, FixedPointResiduals, PhaseScanOptions,
    PhaseScanResult, SymmetryReport, TailReport,
};
use crate::cdf::{
    fixed_family_d2, fixed_family_d2_pair, iterate, BoundarySpec, Cdf, CdfError, DEFAULT_HALF_WIDTH,
};
use crate::game::{
    isoperimetry_trials, monte_carlo, monte_carlo_values, paired_monte_carlo, BoundaryLevel,
    GameConfig, GameError, IsoperimetryReport, MonteCarloReport, PairedReport, DEFAULT_NODE_BUDGET,
};
use crate::verifier::{verify_with, ColumnNorm, VerificationReport, VerifyError, VerifyOptions};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Cdf(#[from] CdfError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_)
            | CliError::Cdf(
                CdfError::InvalidDegree { .. }
                | CdfError::InvalidProbability(_)
                | CdfError::BetaOutOfRange { .. }
                | CdfError::BoundaryParse(_),
            )
            | CliError::Game(
                GameError::InvalidDegree(_)
                | GameError::BudgetExceeded { .. }
                | GameError::NoSamples
                | GameError::NeedsBernoulli(_),
            ) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Euclidean,
    Max,
}

impl From<NormArg> for ColumnNorm {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Euclidean => ColumnNorm::Euclidean,
            NormArg::Max => ColumnNorm::Max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Even,
    Odd,
}

/// Parses `3`, `3..15` (inclusive), `3..=15` or a comma list such as `2,5,10`.
pub fn parse_d_range(s: &str) -> Result<Vec<u32>, String> {
    const MAX_D: u32 = 1000;
    let s = s.trim();
    let one = |t: &str| -> Result<u32, String> {
        let d: u32 = t.trim().parse().map_err(|_| format!("invalid degree `{t}`"))?;
        if !(2..=MAX_D).contains(&d) {
            return Err(format!("degree {d} outside 2..={MAX_D}"));
        }
        Ok(d)
    };
    let out: Vec<u32> = if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b) = (one(a)?, one(b)?);
        if a > b {
            return Err(format!("empty degree range {a}..{b}"));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(one).collect::<Result<_, _>>()?
    };
    if out.is_empty() {
        return Err("no degrees given".into());
    }
    Ok(out)
}

/// A list of degrees given as one argument.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Degrees(pub Vec<u32>);

fn parse_degrees(s: &str) -> Result<Degrees, String> {
    parse_d_range(s).map(Degrees)
}

fn parse_boundary(s: &str) -> Result<BoundarySpec, String> {
    if let Some(path) = s.trim().strip_prefix("explicit:@") {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
        let cdf: Cdf = serde_json::from_str(&text).map_err(|e| format!("{path}: {e}"))?;
        let spec = BoundarySpec::Explicit { cdf };
        spec.validate().map_err(|e| e.to_string())?;
        return Ok(spec);
    }
    s.parse().map_err(|e: CdfError| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "minmax", version, about = "Noisy min-max game on the d-ary tree")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, env = "MINMAX_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 picks the number of available cores.
    #[arg(long, global = true, env = "MINMAX_THREADS", default_value_t = 0)]
    pub threads: usize,
    /// Half-width K of the CDF window (indices -2K..=2K).
    #[arg(long, global = true, default_value_t = DEFAULT_HALF_WIDTH)]
    pub window: usize,
    #[arg(long, global = true, default_value_t = 1000)]
    pub rounds: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Iterate the one-round operator from a boundary law.
    Iterate {
        #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
        d: u32,
        #[arg(long, default_value = "zero", value_parser = parse_boundary)]
        boundary: BoundarySpec,
    },
    /// Interval-arithmetic contraction certificate.
    Verify {
        #[arg(long, value_parser = parse_degrees)]
        d: Degrees,
        #[arg(long, value_enum, default_value = "euclidean")]
        column_norm: NormArg,
    },
    /// Monte-Carlo estimate of the root value law.
    Simulate {
        #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
        d: u32,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value = "zero", value_parser = parse_boundary)]
        boundary: BoundarySpec,
        #[arg(long, value_enum, default_value = "even")]
        boundary_level: LevelArg,
        /// Solve each sample with boundaries at 2n and 2n+1 and compare.
        #[arg(long)]
        paired: bool,
        /// Skip the defect-set search.
        #[arg(long)]
        no_defects: bool,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        node_budget: u64,
        /// Include wall-clock time in the report.
        #[arg(long)]
        timing: bool,
    },
    /// Members of the binary-tree fixed-point family.
    FixedFamily {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 16)]
        half_width: usize,
    },
    /// Tail suprema, recursion margins and stochastic dominance.
    Tails {
        #[arg(long, value_parser = parse_degrees)]
        d: Degrees,
    },
    /// Reflection-symmetry deviation of the zero-boundary limit.
    Symmetry {
        #[arg(long, value_parser = parse_degrees)]
        d: Degrees,
    },
    /// Locate the flip of the limit law under a Bernoulli boundary.
    ScanBoundary {
        #[arg(long, value_parser = clap::value_parser!(u32).range(3..))]
        d: u32,
        #[arg(long, default_value_t = 11)]
        grid: usize,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Compare the limit law with its large-d leading terms.
    Asymptotics {
        #[arg(long, value_parser = parse_degrees, default_value = "6..15")]
        d: Degrees,
    },
    /// Check the boundary parity identities on random subtrees.
    Isoperimetry {
        #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
        d: u32,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 50)]
        max_size: usize,
    },
    /// Value laws for d in {2,3,4,5,10}, the d=3 and d=4 certificates and
    /// the d=3..15 bound table.
    Reproduce,
}

/// A report that can be rendered in every output format.
trait Report: Serialize {
    fn header(&self) -> Vec<&'static str>;
    fn rows(&self) -> Vec<Vec<String>>;
    fn text(&self) -> String;
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn render<R: Report>(r: &R, format: Format) -> Result<Vec<u8>, CliError> {
    Ok(match format {
        Format::Json => {
            let mut v = serde_json::to_vec_pretty(r)?;
            v.push(b'\n');
            v
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(r.header())?;
            for row in r.rows() {
                w.write_record(&row)?;
            }
            w.into_inner().map_err(|e| CliError::Io(e.into_error()))?
        }
        Format::Text => r.text().into_bytes(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PmfRow {
    pub value: i64,
    pub prob: f64,
    pub cdf: f64,
    pub survival: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterateReport {
    pub d: u32,
    pub rounds: usize,
    pub window: usize,
    pub boundary: String,
    pub pmf: Vec<PmfRow>,
}

impl IterateReport {
    pub fn new(d: u32, rounds: usize, window: usize, boundary: &BoundarySpec) -> Result<Self, CdfError> {
        let f = iterate(&boundary.to_cdf(window)?, d, rounds, false).cdf;
        let pmf = f
            .pmf()
            .into_iter()
            .filter(|&(_, p)| p > 0.0)
            .map(|(value, prob)| PmfRow {
                value,
                prob,
                cdf: f.at(value),
                survival: f.survival_at(value),
            })
            .collect();
        Ok(Self {
            d,
            rounds,
            window,
            boundary: boundary.to_string(),
            pmf,
        })
    }

    pub fn prob(&self, value: i64) -> f64 {
        self.pmf.iter().find(|r| r.value == value).map_or(0.0, |r| r.prob)
    }
}

impl Report for IterateReport {
    fn header(&self) -> Vec<&'static str> {
        vec!["d", "rounds", "value", "prob", "cdf", "survival"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.pmf
            .iter()
            .map(|r| {
                vec![
                    self.d.to_string(),
                    self.rounds.to_string(),
                    r.value.to_string(),
                    num(r.prob),
                    num(r.cdf),
                    num(r.survival),
                ]
            })
            .collect()
    }

    fn text(&self) -> String {
        let mut s = format!("d = {}, rounds = {}, boundary = {}\n", self.d, self.rounds, self.boundary);
        for r in &self.pmf {
            let _ = writeln!(s, "{:>5}  {:.6e}", r.value, r.prob);
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifySweep {
    pub reports: Vec<VerificationReport>,
    pub all_pass: bool,
}

impl Report for VerifySweep {
    fn header(&self) -> Vec<&'static str> {
        vec!["d", "rounds", "invariance_ok", "M", "err", "e_max", "bound", "pass", "exploratory"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.reports
            .iter()
            .map(|r| {
                vec![
                    r.d.to_string(),
                    r.rounds.to_string(),
                    r.invariance_ok.to_string(),
                    num(r.m),
                    num(r.err),
                    num(r.e_max),
                    num(r.bound),
                    r.pass.to_string(),
                    r.exploratory.to_string(),
                ]
            })
            .collect()
    }

    fn text(&self) -> String {
        if let [r] = self.reports.as_slice() {
            return r.render_text();
        }
        let mut s = String::from(" d   bound          M              pass\n");
        for r in &self.reports {
            let _ = writeln!(
                s,
                "{:>2}   {:<13.10} {:<13.10}  {}",
                r.d,
                r.bound,
                r.m,
                if r.pass { "PASS" } else { "FAIL" }
            );
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    #[serde(flatten)]
    pub mc: MonteCarloReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
}

impl Report for SimulateReport {
    fn header(&self) -> Vec<&'static str> {
        vec!["value", "prob", "stderr"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.mc
            .pmf
            .iter()
            .map(|e| vec![e.value.to_string(), num(e.prob), num(e.stderr)])
            .collect()
    }

    fn text(&self) -> String {
        let c = &self.mc.config;
        let mut s = format!("d = {}, n = {}, samples = {}, seed = {}\n", c.d, c.n, self.mc.samples, c.seed);
        for e in &self.mc.pmf {
            let _ = writeln!(s, "{:>5}  {:.6}  ± {:.6}", e.value, e.prob, e.stderr);
        }
        if self.mc.defects_tracked {
            s += "component size histogram:\n";
            for (k, c) in &self.mc.defect_hist {
                let _ = writeln!(s, "{k:>5}  {c}");
            }
        }
        if let Some(t) = self.runtime_seconds {
            let _ = writeln!(s, "runtime {t:.3} s");
        }
        s
    }
}

impl Report for PairedReport {
    fn header(&self) -> Vec<&'static str> {
        vec!["value", "prob", "stderr"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.odd_child_pmf
            .iter()
            .map(|e| vec![e.value.to_string(), num(e.prob), num(e.stderr)])
            .collect()
    }

    fn text(&self) -> String {
        format!(
            "samples = {}, violations = {}, max gap = {}\n",
            self.samples, self.violations, self.max_gap
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyReport {
    pub alpha: f64,
    pub beta: Option<f64>,
    pub half_width: usize,
    /// `(index, F(index))` over the even and, with `beta`, odd indices.
    pub values: Vec<(i64, f64)>,
    pub residuals: FixedPointResiduals,
}

impl FamilyReport {
    pub fn new(alpha: f64, beta: Option<f64>, half_width: usize) -> Result<Self, CdfError> {
        let (even, odd) = match beta {
            Some(b) => {
                let (e, o) = fixed_family_d2_pair(alpha, b, half_width)?;
                (e, Some(o))
            }
            None => (fixed_family_d2(alpha, half_width)?, None),
        };
        let mut values: Vec<(i64, f64)> = even.indices().map(|i| (i, even.at(i))).collect();
        if let Some(o) = &odd {
            values.extend(o.indices().map(|i| (i, o.at(i))));
            values.sort_by_key(|v| v.0);
        }
        Ok(Self {
            alpha,
            beta,
            half_width,
            values,
            residuals: fixed_point_residuals(&even, 2, 2),
        })
    }
}

impl Report for FamilyReport {
    fn header(&self) -> Vec<&'static str> {
        vec!["index", "cdf"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.values.iter().map(|(i, v)| vec![i.to_string(), num(*v)]).collect()
    }

    fn text(&self) -> String {
        let mut s = format!("alpha = {}", self.alpha);
        if let Some(b) = self.beta {
            let _ = write!(s, ", beta = {b}");
        }
        s.push('\n');
        for (i, v) in &self.values {
            let _ = writeln!(s, "{i:>5}  {v:.15}");
        }
        let _ = writeln!(
            s,
            "residuals: psi {:.3e}, phi-shift {:.3e}",
            self.residuals.psi, self.residuals.phi_shift
        );
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TailsEntry {
    pub tails: TailReport,
    pub dominance: DominanceReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailsReport {
    pub entries: Vec<TailsEntry>,
}

impl TailsReport {
    pub fn ok(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.tails.margins_ok() && e.tails.one_step_ok && e.tails.monotone)
    }
}

impl Report for TailsReport {
    fn header(&self) -> Vec<&'static str> {
        vec!["d", "k", "p_plus", "p_minus"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let mut out = Vec::new();
        for e in &self.entries {
            let t = &e.tails;
            for (j, k) in t.ks.iter().enumerate() {
                out.push(vec![t.d.to_string(), k.to_string(), num(t.p_plus[j]), num(t.p_minus[j])]);
            }
        }
        out
    }

    fn text(&self) -> String {
        let mut s = String::from(" d   P(V>=2) sup   upper margin  lower margin  one-step  dominance\n");
        for e in &self.entries {
            let t = &e.tails;
            let _ = writeln!(
                s,
                "{:>2}   {:<12.6}  {:<12.4}  {:<12.4}  {:<8}  {:.3e}",
                t.d, t.p_plus_one, t.upper_margin, t.lower_margin, t.one_step_ok, e.dominance.min_margin
            );
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryTable {
    pub entries: Vec<SymmetryReport>,
}

impl Report for SymmetryTable {
    fn header(&self) -> Vec<&'static str> {
        vec!["d", "rounds", "deviation"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.entries
            .iter()
            .map(|e| vec![e.d.to_string(), e.rounds.to_string(), num(e.deviation)])
            .collect()
    }

    fn text(&self) -> String {
        let mut s = String::from(" d   deviation\n");
        for e in &self.entries {
            let _ = writeln!(s, "{:>2}   {:.3e}", e.d, e.deviation);
        }
        s
    }
}

impl Report for PhaseScanResult {
    fn header(&self) -> Vec<&'static str> {
        vec!["p", "class", "dist_zero", "dist_shifted", "stable"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.grid
            .iter()
            .chain(&self.trace)
            .map(|pt| {
                vec![
                    num(pt.p),
                    serde_json::to_value(pt.class)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_string))
                        .unwrap_or_default(),
                    num(pt.dist_zero),
                    num(pt.dist_shifted),
                    pt.stable.to_string(),
                ]
            })
            .collect()
    }

    fn text(&self) -> String {
        let mut s = format!("d = {}, rounds = {}\n", self.d, self.rounds);
        for pt in &self.grid {
            let _ = writeln!(
                s,
                "p = {:.3}  {:?}  ({:.3e}, {:.3e})",
                pt.p, pt.class, pt.dist_zero, pt.dist_shifted
            );
        }
        match self.p_c {
            Some(p) => {
                let _ = writeln!(s, "flip point {p:.8} (bracket {:.8}..{:.8})", self.bracket.0, self.bracket.1);
            }
            None => s += "flip point unresolved\n",
        }
        let _ = writeln!(s, "root of p = (1 - p/2)^d: {:.8}", self.heuristic_root);
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticsTable {
    pub rows: Vec<AsymptoticsRow>,
}

impl Report for AsymptoticsTable {
    fn header(&self) -> Vec<&'static str> {
        vec![
            "d", "rounds", "pmf_minus2", "pmf_0", "pmf_2", "mean", "scale", "ratio_minus2", "ratio_0",
            "ratio_2", "ratio_mean",
        ]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.d.to_string(),
                    r.rounds.to_string(),
                    num(r.pmf_minus2),
                    num(r.pmf_0),
                    num(r.pmf_2),
                    num(r.mean),
                    num(r.scale),
                    num(r.ratio_minus2),
                    num(r.ratio_0),
                    num(r.ratio_2),
                    num(r.ratio_mean),
                ]
            })
            .collect()
    }

    fn text(&self) -> String {
        let mut s = String::from(" d   P(-2)      P(0)       P(2)       mean       max ratio\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>2}   {:.8} {:.8} {:.8} {:.8} {:.3}",
                r.d,
                r.pmf_minus2,
                r.pmf_0,
                r.pmf_2,
                r.mean,
                r.max_ratio()
            );
        }
        s
    }
}

impl Report for IsoperimetryReport {
    fn header(&self) -> Vec<&'static str> {
        vec!["d", "trials", "max_size", "matches"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        vec![vec![
            self.d.to_string(),
            self.trials.to_string(),
            self.max_size.to_string(),
            self.matches.to_string(),
        ]]
    }

    fn text(&self) -> String {
        format!("d = {}: {}/{} exact matches\n", self.d, self.matches, self.trials)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproduceReport {
    pub laws: Vec<IterateReport>,
    pub certificates: VerifySweep,
}

impl Report for ReproduceReport {
    fn header(&self) -> Vec<&'static str> {
        vec!["section", "d", "key", "value"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let mut out = Vec::new();
        for l in &self.laws {
            for r in &l.pmf {
                out.push(vec!["pmf".into(), l.d.to_string(), r.value.to_string(), num(r.prob)]);
            }
        }
        for r in &self.certificates.reports {
            out.push(vec!["bound".into(), r.d.to_string(), "bound".into(), num(r.bound)]);
            out.push(vec!["bound".into(), r.d.to_string(), "M".into(), num(r.m)]);
        }
        out
    }

    fn text(&self) -> String {
        let mut s = String::from("Value laws after the iteration (entries at -6..6):\n     ");
        for l in &self.laws {
            let _ = write!(s, "{:>14}", format!("d={}", l.d));
        }
        s.push('\n');
        for v in (-6..=6).step_by(2) {
            let _ = write!(s, "{v:>4} ");
            for l in &self.laws {
                let _ = write!(s, "{:>14.6e}", l.prob(v));
            }
            s.push('\n');
        }
        s.push('\n');
        for r in self.certificates.reports.iter().filter(|r| r.d == 3 || r.d == 4) {
            s += &r.render_text();
            s.push('\n');
        }
        s += &self.certificates.text();
        s
    }
}

fn verify_sweep(ds: &[u32], rounds: usize, norm: ColumnNorm) -> Result<VerifySweep, CliError> {
    let opts = VerifyOptions {
        rounds,
        column_norm: norm,
    };
    let reports = ds
        .iter()
        .map(|&d| verify_with(d, opts))
        .collect::<Result<Vec<_>, _>>()?;
    let all_pass = reports.iter().all(|r| r.pass);
    Ok(VerifySweep { reports, all_pass })
}

fn threads(n: usize) -> usize {
    if n > 0 {
        n
    } else {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    }
}

/// Result of a command: the rendered report plus whether its checks passed.
struct Outcome {
    bytes: Vec<u8>,
    ok: bool,
    note: Option<String>,
}

fn outcome<R: Report>(r: &R, format: Format, ok: bool) -> Result<Outcome, CliError> {
    Ok(Outcome {
        bytes: render(r, format)?,
        ok,
        note: None,
    })
}

fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    let g = &cli.global;
    if g.window == 0 {
        return Err(CliError::Usage("--window must be positive".into()));
    }
    let fmt = g.format;
    match &cli.command {
        Command::Iterate { d, boundary } => {
            let r = IterateReport::new(*d, g.rounds, g.window, boundary)?;
            outcome(&r, fmt, true)
        }
        Command::Verify { d, column_norm } => {
            if g.rounds == 0 {
                return Err(CliError::Usage("--rounds must be positive".into()));
            }
            let sweep = verify_sweep(&d.0, g.rounds, (*column_norm).into())?;
            let failed: Vec<String> = sweep
                .reports
                .iter()
                .filter(|r| !r.pass)
                .map(|r| {
                    if r.exploratory {
                        format!("d={} failed (exploratory: outside 3..=15)", r.d)
                    } else {
                        format!("d={} failed", r.d)
                    }
                })
                .collect();
            let mut o = outcome(&sweep, fmt, sweep.all_pass)?;
            o.note = (!failed.is_empty()).then(|| failed.join("\n"));
            Ok(o)
        }
        Command::Simulate {
            d,
            n,
            samples,
            boundary,
            boundary_level,
            paired,
            no_defects,
            node_budget,
            timing,
        } => {
            let mut cfg = GameConfig::new(*d, *n)
                .with_seed(g.seed)
                .with_boundary(boundary.clone())
                .with_boundary_level(match boundary_level {
                    LevelArg::Even => BoundaryLevel::Even,
                    LevelArg::Odd => BoundaryLevel::Odd,
                });
            cfg.node_budget = *node_budget;
            let t = threads(g.threads);
            if *paired {
                let r = paired_monte_carlo(&cfg, *samples, t)?;
                return outcome(&r, fmt, true);
            }
            let start = Instant::now();
            let mc = if *no_defects {
                monte_carlo_values(&cfg, *samples, t)?
            } else {
                monte_carlo(&cfg, *samples, t)?
            };
            let r = SimulateReport {
                mc,
                runtime_seconds: timing.then(|| start.elapsed().as_secs_f64()),
            };
            outcome(&r, fmt, true)
        }
        Command::FixedFamily {
            alpha,
            beta,
            half_width,
        } => {
            let r = FamilyReport::new(*alpha, *beta, *half_width)?;
            outcome(&r, fmt, true)
        }
        Command::Tails { d } => {
            let entries = d
                .0
                .iter()
                .map(|&d| {
                    Ok(TailsEntry {
                        tails: tail_check_window(d, g.rounds, g.window)?,
                        dominance: dominance_check(d, g.rounds)?,
                    })
                })
                .collect::<Result<Vec<_>, CdfError>>()?;
            let r = TailsReport { entries };
            let ok = r.ok();
            outcome(&r, fmt, ok)
        }
        Command::Symmetry { d } => {
            let entries = d
                .0
                .iter()
                .map(|&d| r_symmetry_check(d, g.rounds))
                .collect::<Result<Vec<_>, _>>()?;
            outcome(&SymmetryTable { entries }, fmt, true)
        }
        Command::ScanBoundary { d, grid, tol } => {
            if g.rounds == 0 || *grid < 2 || tol.is_nan() || *tol <= 0.0 {
                return Err(CliError::Usage("scan needs rounds > 0, grid >= 2 and tol > 0".into()));
            }
            let opts = PhaseScanOptions {
                rounds: g.rounds,
                grid_points: *grid,
                bisect_tol: *tol,
                ..PhaseScanOptions::default()
            };
            let r = phase_scan(*d, &opts)?;
            let ok = r.p_c.is_some();
            outcome(&r, fmt, ok)
        }
        Command::Asymptotics { d } => {
            let r = AsymptoticsTable {
                rows: asymptotics_check(&d.0)?,
            };
            let ok = r.rows.iter().all(|r| r.converged);
            outcome(&r, fmt, ok)
        }
        Command::Isoperimetry {
            d,
            trials,
            max_size,
        } => {
            if *max_size == 0 {
                return Err(CliError::Usage("--max-size must be positive".into()));
            }
            let r = isoperimetry_trials(*d, *trials, *max_size, g.seed)?;
            let ok = r.matches == r.trials;
            outcome(&r, fmt, ok)
        }
        Command::Reproduce => {
            let laws = [2, 3, 4, 5, 10]
                .iter()
                .map(|&d| IterateReport::new(d, g.rounds, g.window, &BoundarySpec::Zero))
                .collect::<Result<Vec<_>, _>>()?;
            let ds: Vec<u32> = (3..=15).collect();
            let certificates = verify_sweep(&ds, g.rounds.max(1), ColumnNorm::Euclidean)?;
            let ok = certificates.all_pass;
            outcome(&ReproduceReport { laws, certificates }, fmt, ok)
        }
    }
}

fn write_output(path: Option<&PathBuf>, bytes: &[u8]) -> io::Result<()> {
    match path {
        Some(p) => File::create(p)?.write_all(bytes),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()
        }
    }
}

/// Run a parsed command line and return the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let result = dispatch(cli).and_then(|o| {
        write_output(cli.global.output.as_ref(), &o.bytes)?;
        Ok(o)
    });
    match result {
        Ok(o) => {
            if let Some(note) = o.note {
                eprintln!("{note}");
            }
            if o.ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Parse `args` and run; help and version exit 0, parse errors exit 2.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            code
        }
    }
}

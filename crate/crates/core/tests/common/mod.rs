//! Exact reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Sub};

use noisy_minmax::cdf::Cdf;
use noisy_minmax::game::{BoundaryLaw, CookieSource};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact `num / 2^exp`, kept with odd `num` or `exp == 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: BigInt,
    exp: u64,
}

impl Dyadic {
    pub fn zero() -> Self {
        Self::new(BigInt::zero(), 0)
    }

    pub fn one() -> Self {
        Self::new(BigInt::one(), 0)
    }

    pub fn new(num: BigInt, exp: u64) -> Self {
        let mut d = Dyadic { num, exp };
        d.normalize();
        d
    }

    pub fn from_int(n: i64) -> Self {
        Self::new(BigInt::from(n), 0)
    }

    /// `n / 2^exp`.
    pub fn ratio(n: i64, exp: u64) -> Self {
        Self::new(BigInt::from(n), exp)
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.exp = 0;
            return;
        }
        let tz = self.num.trailing_zeros().unwrap_or(0).min(self.exp);
        if tz > 0 {
            self.num >>= tz as usize;
            self.exp -= tz;
        }
    }

    /// Exact value of a finite float.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite());
        if x == 0.0 {
            return Self::zero();
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1 } else { 1 };
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if biased == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), biased - 1075)
        };
        let num = BigInt::from(sign) * BigInt::from(mant);
        if e >= 0 {
            Self::new(num << e as usize, 0)
        } else {
            Self::new(num, (-e) as u64)
        }
    }

    pub fn half(&self) -> Self {
        Self::new(self.num.clone(), self.exp + 1)
    }

    pub fn pow(&self, k: u32) -> Self {
        Self::new(self.num.pow(k), self.exp * k as u64)
    }

    pub fn is_negative(&self) -> bool {
        self.num.is_negative()
    }

    pub fn numer(&self) -> &BigInt {
        &self.num
    }

    /// `(numerator, 2^exp)` as machine integers when they fit.
    pub fn as_fraction(&self) -> Option<(i64, u64)> {
        Some((self.num.to_i64()?, 1u64.checked_shl(self.exp as u32)?))
    }

    pub fn to_f64(&self) -> f64 {
        // Keep 80 significant bits before converting.
        let bits = self.num.bits();
        let drop = bits.saturating_sub(80);
        let top = (&self.num >> drop as usize).to_f64().unwrap_or(0.0);
        top * 2f64.powi(drop as i32 - self.exp.min(i32::MAX as u64) as i32)
    }

    fn aligned(&self, other: &Self) -> (BigInt, BigInt, u64) {
        let e = self.exp.max(other.exp);
        (
            &self.num << (e - self.exp) as usize,
            &other.num << (e - other.exp) as usize,
            e,
        )
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, o: &Dyadic) -> Dyadic {
        let (a, b, e) = self.aligned(o);
        Dyadic::new(a + b, e)
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;
    fn sub(self, o: &Dyadic) -> Dyadic {
        let (a, b, e) = self.aligned(o);
        Dyadic::new(a - b, e)
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;
    fn mul(self, o: &Dyadic) -> Dyadic {
        Dyadic::new(&self.num * &o.num, self.exp + o.exp)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

/// An exact CDF on integers of one parity: `values[k] = F(lo + 2k)`, with
/// 0 below and 1 above the stored range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactCdf {
    pub lo: i64,
    pub values: Vec<Dyadic>,
}

impl ExactCdf {
    pub fn delta(at: i64) -> Self {
        ExactCdf {
            lo: at,
            values: vec![Dyadic::one()],
        }
    }

    pub fn hi(&self) -> i64 {
        self.lo + 2 * (self.values.len() as i64 - 1)
    }

    /// `F(i)` for `i` of either parity.
    pub fn at(&self, i: i64) -> Dyadic {
        if i < self.lo {
            return Dyadic::zero();
        }
        if i >= self.hi() {
            return Dyadic::one();
        }
        let k = (i - self.lo).div_euclid(2);
        self.values[k as usize].clone()
    }

    pub fn from_pmf(pmf: &BTreeMap<i64, Dyadic>) -> Self {
        let lo = *pmf.keys().next().expect("non-empty law");
        let hi = *pmf.keys().last().unwrap();
        let mut acc = Dyadic::zero();
        let mut values = Vec::new();
        let mut i = lo;
        while i <= hi {
            if let Some(p) = pmf.get(&i) {
                acc = &acc + p;
            }
            values.push(acc.clone());
            i += 2;
        }
        ExactCdf { lo, values }
    }

    pub fn pmf(&self) -> BTreeMap<i64, Dyadic> {
        let mut out = BTreeMap::new();
        let mut prev = Dyadic::zero();
        for (k, v) in self.values.iter().enumerate() {
            let p = v - &prev;
            if p != Dyadic::zero() {
                out.insert(self.lo + 2 * k as i64, p);
            }
            prev = v.clone();
        }
        out
    }
}

fn avg_step(f: &ExactCdf, d: u32, max: bool) -> ExactCdf {
    let lo = f.lo - 1;
    let hi = f.hi() + 1;
    let one = Dyadic::one();
    let mut values = Vec::new();
    let mut i = lo;
    while i <= hi {
        let m = (&f.at(i - 1) + &f.at(i + 1)).half();
        values.push(if max {
            m.pow(d)
        } else {
            &one - &(&one - &m).pow(d)
        });
        i += 2;
    }
    ExactCdf { lo, values }
}

/// One full round, exact and without truncation.
pub fn exact_psi(f: &ExactCdf, d: u32) -> ExactCdf {
    avg_step(&avg_step(f, d, false), d, true)
}

pub fn exact_iterate(f: &ExactCdf, d: u32, rounds: usize) -> ExactCdf {
    (0..rounds).fold(f.clone(), |acc, _| exact_psi(&acc, d))
}

/// Cookies and boundary values read from explicit per-level tables.
pub struct TableCookies {
    pub d: u64,
    /// `cookies[level - 1][index]` for levels `1..=leaf`.
    pub cookies: Vec<Vec<i64>>,
    pub boundary: Vec<i64>,
}

impl TableCookies {
    /// Level widths `d, d^2, ..., d^leaf`.
    pub fn widths(d: u64, leaf: u32) -> Vec<usize> {
        (1..=leaf).map(|l| d.pow(l) as usize).collect()
    }

    /// Cookie tables from the low bits of `bits` (bit set means +1).
    pub fn from_bits(d: u64, leaf: u32, bits: u64, boundary: Vec<i64>) -> Self {
        let mut k = 0;
        let cookies = Self::widths(d, leaf)
            .into_iter()
            .map(|w| {
                (0..w)
                    .map(|_| {
                        let c = if bits >> k & 1 == 1 { 1 } else { -1 };
                        k += 1;
                        c
                    })
                    .collect()
            })
            .collect();
        TableCookies { d, cookies, boundary }
    }
}

impl CookieSource for TableCookies {
    fn cookie(&self, level: u32, index: u64) -> i64 {
        self.cookies[level as usize - 1][index as usize]
    }

    fn boundary_value(&self, _level: u32, index: u64, _law: &BoundaryLaw) -> i64 {
        self.boundary[index as usize]
    }
}

/// Law of the root value of the `n`-round game with zero boundary found by
/// running the solver on every cookie assignment.
pub fn enumerate_law(d: u32, n: u32) -> BTreeMap<i64, Dyadic> {
    let leaf = 2 * n;
    let edges: usize = TableCookies::widths(d as u64, leaf).iter().sum();
    assert!(edges <= 24, "too many cookies to enumerate");
    let cfg = noisy_minmax::game::GameConfig::new(d, n);
    let zeros = vec![0; (d as usize).pow(leaf)];
    let mut counts: BTreeMap<i64, i64> = BTreeMap::new();
    for bits in 0..(1u64 << edges) {
        let src = TableCookies::from_bits(d as u64, leaf, bits, zeros.clone());
        let v = noisy_minmax::game::solve_with(&cfg, &src).unwrap().root_value;
        *counts.entry(v).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .map(|(v, c)| (v, Dyadic::ratio(c, edges as u64)))
        .collect()
}

/// Law of the root value of the `(n+1)`-round game: the top two levels of
/// cookies and the i.i.d. values of the subgames rooted at level 2 (with law
/// `sub`) are enumerated jointly and fed to the solver as boundary values.
pub fn enumerate_law_factored(d: u32, sub: &BTreeMap<i64, Dyadic>) -> BTreeMap<i64, Dyadic> {
    let widths = TableCookies::widths(d as u64, 2);
    let edges: usize = widths.iter().sum();
    let slots = widths[1];
    let support: Vec<(i64, Dyadic)> = sub.iter().map(|(v, p)| (*v, p.clone())).collect();
    let explicit = ExactCdf::from_pmf(sub);
    let f64_cdf = Cdf::new(
        explicit.lo,
        explicit.values.iter().map(Dyadic::to_f64).collect(),
    )
    .unwrap();
    let cfg = noisy_minmax::game::GameConfig::new(d, 1)
        .with_boundary(noisy_minmax::cdf::BoundarySpec::Explicit { cdf: f64_cdf });
    let cookie_weight = Dyadic::ratio(1, edges as u64);
    let mut out: BTreeMap<i64, Dyadic> = BTreeMap::new();
    let total = support.len().pow(slots as u32);
    for combo in 0..total {
        let mut c = combo;
        let mut boundary = Vec::with_capacity(slots);
        let mut weight = cookie_weight.clone();
        for _ in 0..slots {
            let (v, p) = &support[c % support.len()];
            c /= support.len();
            boundary.push(*v);
            weight = &weight * p;
        }
        for bits in 0..(1u64 << edges) {
            let src = TableCookies::from_bits(d as u64, 2, bits, boundary.clone());
            let v = noisy_minmax::game::solve_with(&cfg, &src).unwrap().root_value;
            let e = out.entry(v).or_insert_with(Dyadic::zero);
            *e = &*e + &weight;
        }
    }
    out
}

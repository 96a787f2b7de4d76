//! Growth functions and their comparison order.
//!
//! `f preceq g` means `f(k) <= scale * g(k + shift)` for some naturals
//! `scale`, `shift` and all `k`; note there is no multiplicative factor
//! inside the argument, so exponentials with different bases are
//! inequivalent.  Comparisons between the symbolic families are decided
//! exactly; comparisons involving tabulated prefixes return a verdict valid
//! on the checked range or `Undetermined`.  No floating point is used
//! anywhere: stretched-exponential values are pinned down with rational
//! bounds on `exp`.

use std::collections::VecDeque;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indexed_graph::{EdgeIndexedGraph, Part};
use crate::num_util::{format_ratio, from_biguint, parse_ratio};
use crate::weights::AdmissibleSequence;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GrowthError {
    #[error("unknown basepoint {0:?}")]
    UnknownVertex(String),
    #[error("radius {k_max} exceeds the reliable truncation radius {reliable}")]
    TruncationTooShallow { k_max: u32, reliable: u32 },
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("need one group order per vertex: got {got}, expected {expected}")]
    OrdersLengthMismatch { got: usize, expected: usize },
    #[error("invalid growth family: {0}")]
    InvalidFamily(String),
}

/// A growth function: one of the symbolic families, or a finite table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GrowthData", into = "GrowthData")]
pub enum GrowthFunction {
    /// Finite prefix `g(0..=d)`.
    Tabulated { values: Vec<BigUint> },
    /// `min(2^j, (j+1)^degree)`: polynomial type with the doubling bound
    /// satisfied pointwise.
    Polynomial { degree: u32 },
    /// `ceil(base^j)` for rational `base > 1`.
    Exponential { base: BigRational },
    /// `ceil(exp(j^beta))` for `beta` in `(0, 1)`.
    Stretched { beta_num: u32, beta_den: u32 },
    /// The weight products `(s_1 - 1) ... (s_j - 1)` of a divisor sequence.
    Product { seq: AdmissibleSequence },
    /// `f(0) = 1; f(j) = min(inner(j), 2 f(j-1))`: the doubling-clamped
    /// companion of `inner`, equivalent to it whenever the inner ratios
    /// eventually stay at most 2.
    Clamped { inner: Box<GrowthFunction> },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
enum GrowthData {
    Tabulated { values: Vec<String> },
    Polynomial { degree: u32 },
    Exponential { base: String },
    Stretched { beta: String },
    Product { seq: AdmissibleSequence },
    Clamped { inner: Box<GrowthData> },
}

impl TryFrom<GrowthData> for GrowthFunction {
    type Error = GrowthError;
    fn try_from(data: GrowthData) -> Result<Self, Self::Error> {
        match data {
            GrowthData::Tabulated { values } => {
                let parsed: Result<Vec<BigUint>, _> =
                    values.iter().map(|v| v.parse::<BigUint>()).collect();
                GrowthFunction::tabulated(
                    parsed.map_err(|_| GrowthError::InvalidFamily("bad table entry".into()))?,
                )
            }
            GrowthData::Polynomial { degree } => Ok(GrowthFunction::Polynomial { degree }),
            GrowthData::Exponential { base } => {
                GrowthFunction::exponential(parse_ratio(&base).map_err(GrowthError::InvalidFamily)?)
            }
            GrowthData::Stretched { beta } => {
                let (a, b) = beta
                    .split_once('/')
                    .ok_or_else(|| GrowthError::InvalidFamily(format!("bad beta {beta:?}")))?;
                let a: u32 = a
                    .trim()
                    .parse()
                    .map_err(|_| GrowthError::InvalidFamily(format!("bad beta {beta:?}")))?;
                let b: u32 = b
                    .trim()
                    .parse()
                    .map_err(|_| GrowthError::InvalidFamily(format!("bad beta {beta:?}")))?;
                GrowthFunction::stretched(a, b)
            }
            GrowthData::Product { seq } => Ok(GrowthFunction::Product { seq }),
            GrowthData::Clamped { inner } => Ok(GrowthFunction::Clamped {
                inner: Box::new((*inner).try_into()?),
            }),
        }
    }
}

impl From<GrowthFunction> for GrowthData {
    fn from(f: GrowthFunction) -> Self {
        match f {
            GrowthFunction::Tabulated { values } => GrowthData::Tabulated {
                values: values.iter().map(|v| v.to_string()).collect(),
            },
            GrowthFunction::Polynomial { degree } => GrowthData::Polynomial { degree },
            GrowthFunction::Exponential { base } => GrowthData::Exponential {
                base: format_ratio(&base),
            },
            GrowthFunction::Stretched { beta_num, beta_den } => GrowthData::Stretched {
                beta: format!("{beta_num}/{beta_den}"),
            },
            GrowthFunction::Product { seq } => GrowthData::Product { seq },
            GrowthFunction::Clamped { inner } => GrowthData::Clamped {
                inner: Box::new((*inner).into()),
            },
        }
    }
}

impl GrowthFunction {
    pub fn tabulated(values: Vec<BigUint>) -> Result<Self, GrowthError> {
        if values.is_empty() {
            return Err(GrowthError::InvalidFamily("empty table".into()));
        }
        if values.iter().any(Zero::is_zero) {
            return Err(GrowthError::InvalidFamily(
                "growth values must be >= 1".into(),
            ));
        }
        Ok(GrowthFunction::Tabulated { values })
    }

    pub fn exponential(base: BigRational) -> Result<Self, GrowthError> {
        if base <= BigRational::one() {
            return Err(GrowthError::InvalidFamily(format!(
                "exponential base must exceed 1, got {}",
                format_ratio(&base)
            )));
        }
        Ok(GrowthFunction::Exponential { base })
    }

    pub fn stretched(beta_num: u32, beta_den: u32) -> Result<Self, GrowthError> {
        if beta_num == 0 || beta_num >= beta_den {
            return Err(GrowthError::InvalidFamily(format!(
                "stretched exponent must be in (0,1), got {beta_num}/{beta_den}"
            )));
        }
        Ok(GrowthFunction::Stretched { beta_num, beta_den })
    }

    pub fn clamped(inner: GrowthFunction) -> Self {
        GrowthFunction::Clamped {
            inner: Box::new(inner),
        }
    }

    /// Exact value at `j`; panics for tabulated functions beyond their table.
    pub fn eval(&self, j: u32) -> BigUint {
        match self {
            GrowthFunction::Tabulated { values } => values
                .get(j as usize)
                .unwrap_or_else(|| panic!("tabulated growth has no value at {j}"))
                .clone(),
            GrowthFunction::Polynomial { degree } => {
                let poly = BigUint::from(j + 1).pow(*degree);
                let exp = BigUint::one() << j;
                poly.min(exp)
            }
            GrowthFunction::Exponential { base } => ceil_rational(&base_pow(base, j)),
            GrowthFunction::Stretched { beta_num, beta_den } => {
                stretched_value(j, *beta_num, *beta_den)
            }
            GrowthFunction::Product { seq } => seq.weight(j),
            GrowthFunction::Clamped { .. } => self.table(j)[j as usize].clone(),
        }
    }

    /// Values `f(0..=k_max)`.
    pub fn table(&self, k_max: u32) -> Vec<BigUint> {
        match self {
            GrowthFunction::Clamped { inner } => {
                let mut out: Vec<BigUint> = Vec::with_capacity(k_max as usize + 1);
                for j in 0..=k_max {
                    let raw = inner.eval(j);
                    let v = if j == 0 {
                        BigUint::one()
                    } else {
                        raw.min(&out[j as usize - 1] * 2u32)
                    };
                    out.push(v);
                }
                out
            }
            _ => (0..=k_max).map(|j| self.eval(j)).collect(),
        }
    }

    /// Largest index with a defined value, for tabulated functions.
    pub fn table_len(&self) -> Option<u32> {
        match self {
            GrowthFunction::Tabulated { values } => Some(values.len() as u32 - 1),
            _ => None,
        }
    }
}

/// Parses the CLI syntax for growth families: `exp:3/2`, `poly:2`,
/// `stretched:1/2`, `product:6:3,6` (n, then the period), `clamp:<inner>`,
/// `table:1,2,3`.
pub fn parse_growth(text: &str) -> Result<GrowthFunction, GrowthError> {
    let bad = |msg: String| GrowthError::InvalidFamily(msg);
    let (family, rest) = text
        .split_once(':')
        .ok_or_else(|| bad(format!("expected family:params, got {text:?}")))?;
    match family {
        "exp" => {
            GrowthFunction::exponential(parse_ratio(rest).map_err(GrowthError::InvalidFamily)?)
        }
        "poly" => {
            let degree: u32 = rest
                .parse()
                .map_err(|_| bad(format!("bad polynomial degree {rest:?}")))?;
            Ok(GrowthFunction::Polynomial { degree })
        }
        "stretched" => {
            let (a, b) = rest
                .split_once('/')
                .ok_or_else(|| bad(format!("bad stretched exponent {rest:?}")))?;
            GrowthFunction::stretched(
                a.parse()
                    .map_err(|_| bad(format!("bad exponent {rest:?}")))?,
                b.parse()
                    .map_err(|_| bad(format!("bad exponent {rest:?}")))?,
            )
        }
        "product" => {
            let (n, period) = rest
                .split_once(':')
                .ok_or_else(|| bad(format!("expected product:n:period, got {rest:?}")))?;
            let n: u64 = n.parse().map_err(|_| bad(format!("bad n {n:?}")))?;
            let period: Result<Vec<u64>, _> =
                period.split(',').map(|p| p.trim().parse::<u64>()).collect();
            let period = period.map_err(|_| bad(format!("bad period {rest:?}")))?;
            let seq =
                AdmissibleSequence::new(n, Vec::new(), period).map_err(|e| bad(e.to_string()))?;
            Ok(GrowthFunction::Product { seq })
        }
        "clamp" => Ok(GrowthFunction::clamped(parse_growth(rest)?)),
        "table" => {
            let values: Result<Vec<BigUint>, _> = rest
                .split(',')
                .map(|v| v.trim().parse::<BigUint>())
                .collect();
            GrowthFunction::tabulated(values.map_err(|_| bad(format!("bad table {rest:?}")))?)
        }
        other => Err(bad(format!("unknown growth family {other:?}"))),
    }
}

/// `base^j` as an exact rational.
fn base_pow(base: &BigRational, j: u32) -> BigRational {
    BigRational::new(base.numer().pow(j), base.denom().pow(j))
}

fn ceil_rational(r: &BigRational) -> BigUint {
    r.ceil()
        .to_integer()
        .to_biguint()
        .expect("positive growth value")
}

fn floor_rational(r: &BigRational) -> BigInt {
    r.floor().to_integer()
}

// ---------------------------------------------------------------------------
// Exact bounds on exp
// ---------------------------------------------------------------------------

/// Rational bounds `lo <= e^x <= hi` for `x >= 0` via Taylor summation with
/// argument halving; `level` raises the working precision.
pub fn exp_bounds(x: &BigRational, level: u32) -> (BigRational, BigRational) {
    assert!(x >= &BigRational::zero());
    // Halve until the argument is at most 1, then square back up.
    let mut halvings = 0u32;
    let mut y = x.clone();
    while y > BigRational::one() {
        y /= BigRational::from_integer(2.into());
        halvings += 1;
    }
    let terms = 24 + 8 * level;
    let mut sum = BigRational::one();
    let mut term = BigRational::one();
    for i in 1..=terms {
        term = term * &y / BigRational::from_integer(i.into());
        sum += &term;
    }
    // Tail bound: next term divided by (1 - y/(terms+2)) dominates the rest.
    let next = term * &y / BigRational::from_integer((terms + 1).into());
    let tail = &next / (BigRational::one() - &y / BigRational::from_integer((terms + 2).into()));
    let mut lo = sum.clone();
    let mut hi = sum + tail;
    for _ in 0..halvings {
        lo = &lo * &lo;
        hi = &hi * &hi;
    }
    (lo, hi)
}

/// Rational bounds on `j^(a/b)` with denominator `2^precision`.
fn root_power_bounds(j: u32, a: u32, b: u32, precision: u32) -> (BigRational, BigRational) {
    let t = BigUint::from(j).pow(a) << (precision * b);
    // Find m with m^b <= j^a * 2^(precision*b) < (m+1)^b.
    let mut lo = BigUint::zero();
    let mut hi = (BigUint::from(j) + BigUint::one()) << precision;
    while &hi - &lo > BigUint::one() {
        let mid: BigUint = (&lo + &hi) >> 1;
        if mid.pow(b) <= t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let denom = BigInt::from(BigUint::one() << precision);
    (
        BigRational::new(BigInt::from(lo), denom.clone()),
        BigRational::new(BigInt::from(hi), denom),
    )
}

/// `ceil(exp(j^(a/b)))`, refined until the enclosing interval contains no
/// integer (it always terminates: `exp` of a nonzero algebraic number is
/// never an integer).
fn stretched_value(j: u32, a: u32, b: u32) -> BigUint {
    if j == 0 {
        return BigUint::one();
    }
    for level in 0.. {
        let precision = 16 + 16 * level;
        let (x_lo, x_hi) = root_power_bounds(j, a, b, precision);
        let (e_lo, _) = exp_bounds(&x_lo, level);
        let (_, e_hi) = exp_bounds(&x_hi, level);
        if floor_rational(&e_lo) == floor_rational(&e_hi) {
            return ceil_rational(&e_hi);
        }
    }
    unreachable!()
}

// ---------------------------------------------------------------------------
// The comparison order
// ---------------------------------------------------------------------------

/// Constants witnessing `f(k) <= scale * g(k + shift)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(with = "crate::num_util::biguint_string")]
    pub scale: BigUint,
    pub shift: u32,
    pub range: WitnessRange,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum WitnessRange {
    /// Valid for every k.
    Symbolic,
    /// Verified for k in `0..=k_max`.
    Prefix { k_max: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Holds(Witness),
    Fails { certificate: String },
    Undetermined { reason: String },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds(_))
    }
}

/// Rank of a symbolic family in the dominance order, with exact rate
/// comparison inside the exponential band.
#[derive(Debug, Clone, PartialEq)]
enum Class {
    Poly(u32),
    Stretched(BigRational),
    /// Exponential band: rate is `value^(1/period)`.
    Exp {
        value: BigRational,
        period: u32,
    },
}

impl Class {
    fn of(f: &GrowthFunction) -> Option<Class> {
        match f {
            GrowthFunction::Tabulated { .. } => None,
            GrowthFunction::Polynomial { degree } => Some(Class::Poly(*degree)),
            GrowthFunction::Stretched { beta_num, beta_den } => Some(Class::Stretched(
                BigRational::new((*beta_num).into(), (*beta_den).into()),
            )),
            GrowthFunction::Exponential { base } => Some(Class::Exp {
                value: base.clone(),
                period: 1,
            }),
            GrowthFunction::Product { seq } => Some(Class::Exp {
                value: from_biguint(&seq.period_product()),
                period: seq.period_len(),
            }),
            GrowthFunction::Clamped { inner } => {
                // The clamp only lowers values until the inner ratios drop to
                // 2, so the asymptotic class is inherited except that rates
                // above 2 are cut to exactly 2.
                let two = BigRational::from_integer(2.into());
                match Class::of(inner)? {
                    Class::Exp { value, period } => {
                        if rate_cmp(&value, period, &two, 1) == std::cmp::Ordering::Greater {
                            Some(Class::Exp {
                                value: two,
                                period: 1,
                            })
                        } else {
                            Some(Class::Exp { value, period })
                        }
                    }
                    other => Some(other),
                }
            }
        }
    }
}

/// Compares `a^(1/la)` with `b^(1/lb)` exactly via `a^lb` vs `b^la`.
fn rate_cmp(a: &BigRational, la: u32, b: &BigRational, lb: u32) -> std::cmp::Ordering {
    base_pow(a, lb).cmp(&base_pow(b, la))
}

fn class_cmp(a: &Class, b: &Class) -> std::cmp::Ordering {
    use std::cmp::Ordering::*;
    match (a, b) {
        (Class::Poly(d), Class::Poly(e)) => d.cmp(e),
        (Class::Poly(_), _) => Less,
        (_, Class::Poly(_)) => Greater,
        (Class::Stretched(x), Class::Stretched(y)) => x.cmp(y),
        (Class::Stretched(_), _) => Less,
        (_, Class::Stretched(_)) => Greater,
        (
            Class::Exp {
                value: a,
                period: la,
            },
            Class::Exp {
                value: b,
                period: lb,
            },
        ) => rate_cmp(a, *la, b, *lb),
    }
}

/// How far to tabulate when producing prefix evidence.
const PREFIX_RANGE: u32 = 40;
const PREFIX_SCALE_CAP: u64 = 1 << 20;
const PREFIX_SHIFT_CAP: u32 = 8;

/// Decides `f preceq g`.
pub fn preceq(f: &GrowthFunction, g: &GrowthFunction) -> Verdict {
    if f == g {
        return Verdict::Holds(Witness {
            scale: BigUint::one(),
            shift: 0,
            range: WitnessRange::Symbolic,
        });
    }
    match (Class::of(f), Class::of(g)) {
        (Some(cf), Some(cg)) => match class_cmp(&cf, &cg) {
            std::cmp::Ordering::Greater => Verdict::Fails {
                certificate: format!(
                    "{} strictly dominates {}: the ratio f(k)/g(k+shift) is unbounded for every fixed shift",
                    describe_class(&cf),
                    describe_class(&cg)
                ),
            },
            _ => Verdict::Holds(symbolic_witness(f, g)),
        },
        _ => prefix_preceq(f, g),
    }
}

fn describe_class(c: &Class) -> String {
    match c {
        Class::Poly(d) => format!("polynomial degree {d}"),
        Class::Stretched(b) => format!("stretched exponent {}", format_ratio(b)),
        Class::Exp { value, period } => {
            if *period == 1 {
                format!("exponential rate {}", format_ratio(value))
            } else {
                format!("exponential rate {}^(1/{period})", format_ratio(value))
            }
        }
    }
}

/// Upper limit for exact window maximization; beyond it we fall back to a
/// prefix-verified witness rather than grind out astronomically large scans.
const SETTLE_CAP: u32 = 4096;

/// Produces an explicit `(scale, shift)` valid for all k when
/// `class(f) <= class(g)`.
///
/// Strategy: scale-1 pointwise dominations are recognized directly; a clamp
/// on the left delegates to its inner function (the clamp only lowers
/// values); otherwise the scale is the exact maximum of a smooth upper
/// envelope of `f` against a smooth lower envelope of `g` over a window past
/// which the envelope ratio is provably nonincreasing.  When no tractable
/// window exists the witness is verified on a prefix instead.
fn symbolic_witness(f: &GrowthFunction, g: &GrowthFunction) -> Witness {
    if pointwise_scale_one(f, g) {
        return Witness {
            scale: BigUint::one(),
            shift: 0,
            range: WitnessRange::Symbolic,
        };
    }
    if let GrowthFunction::Clamped { inner } = f {
        // f(k) <= inner(k) for every k, so any witness for the inner
        // function transfers.
        return symbolic_witness(inner, g);
    }
    match settle_index(f, g) {
        Some(settle) => {
            let mut max_ratio = BigRational::zero();
            for k in 0..=settle {
                let r = upper_envelope(f, k) / lower_envelope(g, k);
                if r > max_ratio {
                    max_ratio = r;
                }
            }
            let scale = ceil_rational(&max_ratio).max(BigUint::one());
            Witness {
                scale,
                shift: 0,
                range: WitnessRange::Symbolic,
            }
        }
        None => prefix_witness(f, g),
    }
}

/// Exact maximum ratio on the comparison prefix, reported as a
/// prefix-verified witness.
fn prefix_witness(f: &GrowthFunction, g: &GrowthFunction) -> Witness {
    let limit = PREFIX_RANGE;
    let ftab = f.table(limit);
    let gtab = g.table(limit);
    let mut scale = BigUint::one();
    for k in 0..=limit as usize {
        let q = ftab[k].div_ceil(&gtab[k]);
        if q > scale {
            scale = q;
        }
    }
    Witness {
        scale,
        shift: 0,
        range: WitnessRange::Prefix { k_max: limit },
    }
}

/// Recognizes pairs with `f(k) <= g(k)` for every k outright.
fn pointwise_scale_one(f: &GrowthFunction, g: &GrowthFunction) -> bool {
    use GrowthFunction as GF;
    let two = BigRational::from_integer(2.into());
    match (f, g) {
        (GF::Polynomial { degree: d }, GF::Polynomial { degree: e }) => d <= e,
        (GF::Exponential { base: a }, GF::Exponential { base: b }) => a <= b,
        (
            GF::Stretched {
                beta_num: a,
                beta_den: b,
            },
            GF::Stretched {
                beta_num: c,
                beta_den: d,
            },
        ) => u64::from(*a) * u64::from(*d) <= u64::from(*c) * u64::from(*b),
        // min(2^k, ..) <= 2^k <= the weight product / a base >= 2.
        (GF::Polynomial { .. }, GF::Product { .. }) => true,
        (GF::Polynomial { .. }, GF::Exponential { base }) => base >= &two,
        // A clamped function is bounded by 2^k, and by its inner function.
        (GF::Clamped { .. }, GF::Product { .. }) => true,
        (GF::Clamped { .. }, GF::Exponential { base }) if base >= &two => true,
        (GF::Clamped { inner }, _) => pointwise_scale_one(inner, g),
        _ => false,
    }
}

/// Rational upper envelope `U(k) >= f(k)` with controlled step ratios:
/// `(k+1)^d` for polynomials, `base^k + 1` for exponentials, exact weights
/// for products, and an upper bound on `2 e^(k^beta)` for stretched
/// exponentials.
fn upper_envelope(f: &GrowthFunction, k: u32) -> BigRational {
    match f {
        GrowthFunction::Polynomial { degree } => from_biguint(&BigUint::from(k + 1).pow(*degree)),
        GrowthFunction::Exponential { base } => base_pow(base, k) + BigRational::one(),
        GrowthFunction::Product { seq } => from_biguint(&seq.weight(k)),
        GrowthFunction::Stretched { beta_num, beta_den } => {
            let (_, x_hi) = root_power_bounds(k, *beta_num, *beta_den, 24);
            let (_, e_hi) = exp_bounds(&x_hi, 1);
            e_hi * BigRational::from_integer(2.into())
        }
        // Tabulated never reaches the envelope path; a clamp delegates
        // before envelopes are taken.  Exact values are a safe fallback.
        _ => from_biguint(&f.eval(k)),
    }
}

/// Rational lower envelope `L(k) <= g(k)`.
fn lower_envelope(g: &GrowthFunction, k: u32) -> BigRational {
    match g {
        GrowthFunction::Exponential { base } => base_pow(base, k),
        GrowthFunction::Product { seq } => from_biguint(&seq.weight(k)),
        GrowthFunction::Stretched { beta_num, beta_den } => {
            let (x_lo, _) = root_power_bounds(k, *beta_num, *beta_den, 24);
            let (e_lo, _) = exp_bounds(&x_lo, 1);
            e_lo
        }
        _ => from_biguint(&g.eval(k)),
    }
}

/// Largest dyadic `1/2^p` with a certified `e^(1/2^p) <= target`, or zero
/// when `target` is too close to 1 to certify cheaply.
fn log_floor_dyadic(target: &BigRational) -> BigRational {
    for p in 1..=40u32 {
        let cand = BigRational::new(BigInt::one(), BigInt::from(BigUint::one() << p));
        let (_, hi) = exp_bounds(&cand, 1);
        if &hi <= target {
            return cand;
        }
    }
    BigRational::zero()
}

/// Per-step growth floor of the lower envelope of `g` in the exponential
/// band: `base` for an exponential, 2 for weight products (every factor is
/// `s - 1 >= 2`).
fn step_floor(g: &GrowthFunction) -> Option<BigRational> {
    match g {
        GrowthFunction::Exponential { base } => Some(base.clone()),
        GrowthFunction::Product { .. } => Some(BigRational::from_integer(2.into())),
        _ => None,
    }
}

/// A window end past which the envelope ratio `U_f / L_g` is provably
/// nonincreasing, or `None` when intractable.
fn settle_index(f: &GrowthFunction, g: &GrowthFunction) -> Option<u32> {
    use GrowthFunction as GF;
    match (f, g) {
        (GF::Clamped { .. }, _) | (_, GF::Clamped { .. }) => None,
        (GF::Polynomial { degree }, GF::Stretched { beta_num, beta_den }) => {
            // The envelope ratio decreases once
            // (k+1)^beta >= (2^d - 1) / beta, because the step of U is
            // (1 + 1/(k+1))^d <= 1 + (2^d - 1)/(k+1) while the step of L is
            // e^((k+1)^beta - k^beta) >= 1 + beta (k+1)^(beta-1); the
            // condition is persistent since its left side increases.
            let threshold = from_biguint(&((BigUint::one() << *degree) - BigUint::one()))
                * BigRational::new((*beta_den).into(), (*beta_num).into());
            let target = base_pow(&threshold.max(BigRational::one()), *beta_den);
            (0..=SETTLE_CAP).find(|&k| from_biguint(&BigUint::from(k + 1).pow(*beta_num)) >= target)
        }
        (GF::Polynomial { degree }, _) => {
            // Step of U is at most 1 + (2^d - 1)/(k+1); settles once that
            // drops below the step floor of g.
            let gamma = step_floor(g)?;
            let excess = gamma - BigRational::one();
            if excess <= BigRational::zero() {
                return None;
            }
            let bound = from_biguint(&((BigUint::one() << *degree) - BigUint::one())) / excess;
            u32::try_from(floor_rational(&bound).max(BigInt::zero()))
                .ok()
                .filter(|k| *k <= SETTLE_CAP)
                .map(|k| k + 1)
        }
        (GF::Stretched { beta_num, beta_den }, _) => {
            // Step of U is e^(delta(k)) with delta(k) = (k+1)^b - k^b
            // decreasing in k; settles at the first k with a certified
            // delta(k) <= delta0 where e^(delta0) <= step floor of g.
            let gamma = step_floor(g)?;
            let delta0 = log_floor_dyadic(&gamma);
            if delta0.is_zero() {
                return None;
            }
            (1..=SETTLE_CAP).find(|&k| {
                let (_, hi_next) = root_power_bounds(k + 1, *beta_num, *beta_den, 24);
                let (lo_here, _) = root_power_bounds(k, *beta_num, *beta_den, 24);
                hi_next - lo_here <= delta0
            })
        }
        _ => {
            // Exponential band against exponential band: one combined period
            // past both preperiods; per-block envelope factors are <= 1 when
            // rate(f) <= rate(g).
            let (pre_f, len_f) = band_shape(f)?;
            let (pre_g, len_g) = band_shape(g)?;
            let window = pre_f + pre_g + len_f.lcm(&len_g);
            (window <= SETTLE_CAP).then_some(window)
        }
    }
}

/// `(preperiod, period)` of an exponential-band family.
fn band_shape(f: &GrowthFunction) -> Option<(u32, u32)> {
    match f {
        GrowthFunction::Exponential { .. } => Some((0, 1)),
        GrowthFunction::Product { seq } => Some((seq.period_start(), seq.period_len())),
        _ => None,
    }
}

/// Prefix comparison used when at least one side is tabulated.
fn prefix_preceq(f: &GrowthFunction, g: &GrowthFunction) -> Verdict {
    let limit = [f.table_len(), g.table_len(), Some(PREFIX_RANGE)]
        .into_iter()
        .flatten()
        .min()
        .unwrap();
    let ftab = f.table(limit);
    for shift in 0..=PREFIX_SHIFT_CAP.min(limit) {
        let gtab = g.table(limit + shift);
        let mut needed = BigUint::one();
        for k in 0..=limit as usize {
            let bound = &gtab[k + shift as usize];
            // smallest scale with f(k) <= scale * bound
            let q = ftab[k].div_ceil(bound);
            if q > needed {
                needed = q;
            }
        }
        if needed <= BigUint::from(PREFIX_SCALE_CAP) {
            return Verdict::Holds(Witness {
                scale: needed,
                shift,
                range: WitnessRange::Prefix { k_max: limit },
            });
        }
    }
    Verdict::Undetermined {
        reason: format!(
            "no witness with scale <= {PREFIX_SCALE_CAP} and shift <= {PREFIX_SHIFT_CAP} on the prefix 0..={limit}"
        ),
    }
}

/// Two-sided comparison.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceVerdict {
    pub forward: Verdict,
    pub backward: Verdict,
}

impl EquivalenceVerdict {
    /// `Some(true)` / `Some(false)` when decided, `None` when either
    /// direction is undetermined.
    pub fn decided(&self) -> Option<bool> {
        match (&self.forward, &self.backward) {
            (Verdict::Holds(_), Verdict::Holds(_)) => Some(true),
            (Verdict::Fails { .. }, _) | (_, Verdict::Fails { .. }) => Some(false),
            _ => None,
        }
    }
}

pub fn equivalent(f: &GrowthFunction, g: &GrowthFunction) -> EquivalenceVerdict {
    EquivalenceVerdict {
        forward: preceq(f, g),
        backward: preceq(g, f),
    }
}

// ---------------------------------------------------------------------------
// Acceptability
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AcceptVerdict {
    Yes,
    No,
    Undetermined,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AcceptabilityReport {
    pub verdict: AcceptVerdict,
    pub reasons: Vec<String>,
}

impl AcceptabilityReport {
    pub fn is_acceptable(&self) -> bool {
        self.verdict == AcceptVerdict::Yes
    }
}

/// Checks `f(0) = 1`, the doubling bounds `1 <= f(j+1) <= 2 f(j)`, and
/// convergence of `sum f(j)/2^j`, symbolically per family and pointwise on
/// tabulated prefixes.
pub fn is_acceptable(f: &GrowthFunction) -> AcceptabilityReport {
    let mut reasons = Vec::new();
    let scan_to = match f.table_len() {
        Some(len) => len,
        None => PREFIX_RANGE,
    };
    let tab = f.table(scan_to);
    if !tab[0].is_one() {
        reasons.push(format!("f(0) = {} instead of 1", tab[0]));
        return AcceptabilityReport {
            verdict: AcceptVerdict::No,
            reasons,
        };
    }
    for j in 1..tab.len() {
        if tab[j] > &tab[j - 1] * 2u32 {
            reasons.push(format!(
                "doubling bound fails at j = {j}: f({j}) = {} > 2 f({}) = {}",
                tab[j],
                j - 1,
                &tab[j - 1] * 2u32
            ));
            return AcceptabilityReport {
                verdict: AcceptVerdict::No,
                reasons,
            };
        }
    }
    // The prefix satisfies the pointwise bounds; settle the tail per family.
    let verdict = match f {
        GrowthFunction::Tabulated { .. } => {
            reasons.push("tabulated prefix satisfies the pointwise bounds".into());
            reasons.push("no tail rule: convergence of sum f(j)/2^j undetermined".into());
            AcceptVerdict::Undetermined
        }
        GrowthFunction::Polynomial { degree } => {
            reasons.push(format!(
                "min(2^j, (j+1)^{degree}) keeps ratios <= 2 at every j and sum f(j)/2^j converges"
            ));
            AcceptVerdict::Yes
        }
        GrowthFunction::Exponential { base } => {
            let two = BigRational::from_integer(2.into());
            if base < &two {
                reasons.push(format!(
                    "base {} < 2: ratios stay <= 2 and sum f(j)/2^j converges geometrically",
                    format_ratio(base)
                ));
                AcceptVerdict::Yes
            } else {
                reasons.push(format!(
                    "base {} >= 2: sum f(j)/2^j diverges",
                    format_ratio(base)
                ));
                AcceptVerdict::No
            }
        }
        GrowthFunction::Stretched { .. } => {
            // Unreachable in practice: the doubling scan fails at j = 1
            // because ceil(e) = 3 > 2.  Kept for completeness.
            AcceptVerdict::No
        }
        GrowthFunction::Product { .. } => {
            reasons.push("weights grow at least like 2^j, so sum f(j)/2^j diverges".into());
            AcceptVerdict::No
        }
        GrowthFunction::Clamped { inner } => match &**inner {
            GrowthFunction::Tabulated { .. } => {
                reasons.push("clamped tabulated prefix: tail undetermined".into());
                AcceptVerdict::Undetermined
            }
            GrowthFunction::Product { .. } | GrowthFunction::Exponential { .. }
                if matches!(
                    Class::of(f),
                    Some(Class::Exp { value, period })
                        if rate_cmp(&value, period, &BigRational::from_integer(2.into()), 1)
                            != std::cmp::Ordering::Less
                ) =>
            {
                reasons.push(
                    "clamp saturates at 2^j because the inner rate is >= 2: sum diverges".into(),
                );
                AcceptVerdict::No
            }
            _ => {
                reasons.push(
                    "clamp enforces the doubling bounds; the inner family dominates the clamp, so sum f(j)/2^j converges"
                        .into(),
                );
                AcceptVerdict::Yes
            }
        },
    };
    if verdict == AcceptVerdict::No && reasons.is_empty() {
        reasons.push("doubling bound fails beyond the scanned prefix".into());
    }
    AcceptabilityReport { verdict, reasons }
}

// ---------------------------------------------------------------------------
// p-orders
// ---------------------------------------------------------------------------

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Largest power of the prime `p` dividing `n`.
pub fn p_order(n: &BigUint, p: u64) -> Result<BigUint, GrowthError> {
    if !is_prime(p) {
        return Err(GrowthError::NotPrime(p));
    }
    let p = BigUint::from(p);
    let mut power = BigUint::one();
    let mut rest = n.clone();
    while (&rest % &p).is_zero() {
        rest /= &p;
        power *= &p;
    }
    Ok(power)
}

// ---------------------------------------------------------------------------
// Tabulated growth of graphs
// ---------------------------------------------------------------------------

/// A tabulated growth function `g(0..=k_max)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tabulation {
    #[serde(with = "crate::num_util::biguint_vec_string")]
    pub values: Vec<BigUint>,
}

impl Tabulation {
    pub fn to_growth(&self) -> GrowthFunction {
        GrowthFunction::Tabulated {
            values: self.values.clone(),
        }
    }

    pub fn k_max(&self) -> u32 {
        self.values.len() as u32 - 1
    }
}

/// Distances in half-edge units: every edge has length 1/2, so a ball of
/// radius k contains the vertices within 2k graph edges.
fn half_edge_reach(graph: &EdgeIndexedGraph, base: usize) -> Vec<Option<u32>> {
    let mut dist = vec![None; graph.vertex_count()];
    dist[base] = Some(0);
    let mut queue = VecDeque::from([base]);
    while let Some(v) = queue.pop_front() {
        let d = dist[v].unwrap();
        for &e in graph.edges_into(v) {
            let u = graph.origin(e);
            if dist[u].is_none() {
                dist[u] = Some(d + 1);
                queue.push_back(u);
            }
        }
    }
    dist
}

/// Number of vertices in the radius-k ball around `basepoint` in the
/// half-edge metric, for k = 0..=k_max.  `reliable_radius` caps the radius a
/// truncated graph can answer for.
pub fn ball_growth(
    graph: &EdgeIndexedGraph,
    basepoint: &str,
    k_max: u32,
    reliable_radius: Option<u32>,
) -> Result<Tabulation, GrowthError> {
    if let Some(reliable) = reliable_radius {
        if k_max > reliable {
            return Err(GrowthError::TruncationTooShallow { k_max, reliable });
        }
    }
    let base = graph
        .vertex_by_id(basepoint)
        .ok_or_else(|| GrowthError::UnknownVertex(basepoint.to_string()))?;
    let dist = half_edge_reach(graph, base);
    let mut counts = vec![0u64; k_max as usize + 1];
    for d in dist.into_iter().flatten() {
        let k = u32::div_ceil(d, 2);
        if k <= k_max {
            counts[k as usize] += 1;
        }
    }
    let mut values = Vec::with_capacity(counts.len());
    let mut acc = 0u64;
    for c in counts {
        acc += c;
        values.push(BigUint::from(acc));
    }
    Ok(Tabulation { values })
}

/// Largest group order in the radius-k ball, for k = 0..=k_max; `orders`
/// gives a group order per vertex (e.g. integral ordering values).  With
/// `v0_only` the maximum ranges over part-0 vertices only.
pub fn stabilizer_growth(
    graph: &EdgeIndexedGraph,
    orders: &[BigUint],
    basepoint: &str,
    k_max: u32,
    v0_only: bool,
    reliable_radius: Option<u32>,
) -> Result<Tabulation, GrowthError> {
    if orders.len() != graph.vertex_count() {
        return Err(GrowthError::OrdersLengthMismatch {
            got: orders.len(),
            expected: graph.vertex_count(),
        });
    }
    if let Some(reliable) = reliable_radius {
        if k_max > reliable {
            return Err(GrowthError::TruncationTooShallow { k_max, reliable });
        }
    }
    let base = graph
        .vertex_by_id(basepoint)
        .ok_or_else(|| GrowthError::UnknownVertex(basepoint.to_string()))?;
    let dist = half_edge_reach(graph, base);
    let mut best_at = vec![BigUint::zero(); k_max as usize + 1];
    for (v, d) in dist.iter().enumerate() {
        let Some(d) = d else { continue };
        if v0_only && graph.vertex_part(v) != Some(Part::Zero) {
            continue;
        }
        let k = u32::div_ceil(*d, 2);
        if k <= k_max && orders[v] > best_at[k as usize] {
            best_at[k as usize] = orders[v].clone();
        }
    }
    let mut values = Vec::with_capacity(best_at.len());
    let mut acc = BigUint::zero();
    for b in best_at {
        if b > acc {
            acc = b;
        }
        values.push(acc.clone());
    }
    Ok(Tabulation { values })
}

/// As [`stabilizer_growth`] but with every order replaced by its p-part.
pub fn p_stabilizer_growth(
    graph: &EdgeIndexedGraph,
    orders: &[BigUint],
    basepoint: &str,
    p: u64,
    k_max: u32,
    v0_only: bool,
    reliable_radius: Option<u32>,
) -> Result<Tabulation, GrowthError> {
    let p_orders: Result<Vec<BigUint>, GrowthError> =
        orders.iter().map(|o| p_order(o, p)).collect();
    stabilizer_growth(
        graph,
        &p_orders?,
        basepoint,
        k_max,
        v0_only,
        reliable_radius,
    )
}

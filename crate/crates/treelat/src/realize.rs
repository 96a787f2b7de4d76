//! Realization algorithms: star trees with prescribed covolume, quotient
//! growth, and stabilizer growth.
//!
//! Covolume targets above the ray covolume are hit by greedy digit
//! expansions over the weight sequence (gluing a depth-`e_j` block at level
//! `j` adds exactly `e_j / w(j)`); a growth tree glued at a sufficiently
//! deep level carries the quotient growth type; and covolumes at or below
//! the ray value are reached by rebuilding every group as `G_level x| H`
//! for the unit group `H` of the residues mod `w(k)`, which divides the
//! covolume by `|H|` exactly while keeping the action faithful.

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grouping::{FiniteGrouping, GroupDesc, InjectionDesc};
use crate::growth::{equivalent, is_acceptable, EquivalenceVerdict, GrowthFunction, Tabulation};
use crate::indexed_graph::Part;
use crate::num_util::{euler_phi, format_ratio, from_biguint, recip_uint};
use crate::star_tree::{
    build_star_ray, calibration_residual, growth_gluing_interval, Block, CovolumeValue,
    IndexedStarTree, PeriodicGluings, StarTreeError, StarTreeSpec, Truncation,
};
use crate::weights::AdmissibleSequence;

#[derive(Debug, Error)]
pub enum RealizeError {
    #[error("covolume {kappa} is not above the ray covolume {kappa0}; use the semidirect shrink (realize_full) for small targets")]
    KappaTooSmall { kappa: String, kappa0: String },
    #[error("covolume target must be positive, got {0}")]
    KappaNotPositive(String),
    #[error("growth function is not acceptable: {0}")]
    NotAcceptable(String),
    #[error("digit expansion failed: {0}")]
    Digits(#[from] DigitError),
    #[error(transparent)]
    StarTree(#[from] StarTreeError),
    #[error("grouping is not faithful: the tree has no vertex at level {level}")]
    NotFaithful { level: u32 },
    #[error("tower groups exceed the enumeration bound {bound}")]
    TowerTooLarge { bound: u64 },
    #[error("no tower parameter k <= {limit} makes kappa * |H| exceed the ray covolume")]
    NoShrinkParameter { limit: u32 },
    #[error("sampler could not produce {want} distinct sequences within {attempts} moves")]
    SamplerExhausted { want: usize, attempts: u32 },
}

#[derive(Debug, Error, PartialEq)]
pub enum DigitError {
    #[error("target must be nonnegative, got {0}")]
    NegativeTarget(String),
    #[error("greedy remainder neither vanished nor cycled within {horizon} levels")]
    HorizonExceeded { horizon: u32 },
    #[error("internal: closed-form digit sum {sum} differs from the target {target}")]
    SumMismatch { sum: String, target: String },
}

/// The covolume of the plain star ray under the given weights,
/// `sum_{j>=0} 1/w(j)`; the threshold above which digit realization works
/// directly.
pub fn ray_covolume(seq: &AdmissibleSequence) -> BigRational {
    seq.ray_covolume()
}

/// Default digit bound `2 (n - 1)`; realization raises it when the first
/// digit of the target needs more room.
pub fn default_digit_bound(n: u64) -> u64 {
    2 * (n - 1)
}

const DIGIT_HORIZON: u32 = 8192;

/// Digits of a greedy expansion `target = sum_{j>=1} e_j / w(j)`, stored as
/// a finite prefix plus an optional repeating cycle, with `e_k` forced to 0
/// at the skipped level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigitSequence {
    pub seq: AdmissibleSequence,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skip: Option<u32>,
    /// `e_1 ..= e_prefix.len()`
    pub prefix: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<DigitCycle>,
    #[serde(with = "crate::num_util::ratio_string")]
    pub target: BigRational,
}

/// Digits repeat with this pattern from level `start` on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitCycle {
    pub start: u32,
    pub digits: Vec<u64>,
}

impl DigitSequence {
    pub fn digit(&self, level: u32) -> u64 {
        if level == 0 || Some(level) == self.skip {
            return 0;
        }
        let idx = (level - 1) as usize;
        if idx < self.prefix.len() {
            return self.prefix[idx];
        }
        match &self.cycle {
            Some(cycle) if level >= cycle.start => {
                cycle.digits[((level - cycle.start) as usize) % cycle.digits.len()]
            }
            _ => 0,
        }
    }

    pub fn max_digit(&self) -> u64 {
        self.prefix
            .iter()
            .chain(self.cycle.iter().flat_map(|c| c.digits.iter()))
            .copied()
            .max()
            .unwrap_or(0)
    }

    /// Exact closed-form sum of the whole series.
    pub fn sum(&self) -> BigRational {
        let mut total = BigRational::zero();
        for (i, &e) in self.prefix.iter().enumerate() {
            if e > 0 {
                total += BigRational::from_integer(e.into())
                    * recip_uint(&self.seq.weight(i as u32 + 1));
            }
        }
        if let Some(cycle) = &self.cycle {
            let digits = cycle.digits.clone();
            let start = cycle.start;
            let len = digits.len() as u32;
            let coeff = move |level: u32| -> BigRational {
                BigRational::from_integer(digits[((level - start) as usize) % digits.len()].into())
            };
            total += self
                .seq
                .weighted_tail(start, &coeff, start, len)
                .expect("digit series converges");
        }
        total
    }

    /// Digits `e_1 ..= e_horizon` as a plain vector.
    pub fn digits_to(&self, horizon: u32) -> Vec<u64> {
        (1..=horizon).map(|j| self.digit(j)).collect()
    }

    /// Applies the digits to a spec: a weighted block of depth `e_j` at
    /// every level `j` with `e_j > 0`.
    pub fn apply_to(&self, spec: &StarTreeSpec) -> Result<StarTreeSpec, StarTreeError> {
        let mut out = spec.clone();
        for (i, &e) in self.prefix.iter().enumerate() {
            if e > 0 {
                let depth = u32::try_from(e).expect("digit bounds fit u32");
                out = out.glue(Block::Weighted { depth }, i as u32 + 1)?;
            }
        }
        if let Some(cycle) = &self.cycle {
            debug_assert!(out.periodic.is_none(), "one digit rule per spec");
            out.periodic = Some(PeriodicGluings {
                start: cycle.start,
                depths: cycle
                    .digits
                    .iter()
                    .map(|&d| u32::try_from(d).expect("digit bounds fit u32"))
                    .collect(),
            });
        }
        Ok(out)
    }
}

/// Greedy base-`w` expansion: `e_j = min(bound, floor(remainder * w(j)))`
/// with the remainder updated exactly; terminates with equality when the
/// expansion is finite and otherwise detects the repeating remainder state,
/// returning an eventually periodic sequence with exact closed-form sum.
pub fn digit_sequence(
    target: &BigRational,
    seq: &AdmissibleSequence,
    digit_bound: u64,
    skip: Option<u32>,
) -> Result<DigitSequence, DigitError> {
    if target.is_negative() {
        return Err(DigitError::NegativeTarget(format_ratio(target)));
    }
    let mut digits: Vec<u64> = Vec::new();
    let mut remainder = target.clone();
    // Seen normalized states `remainder * w(level)` keyed with the level
    // phase; a repeat means the digits cycle from there on.
    let mut seen: std::collections::BTreeMap<(String, u32, bool), u32> =
        std::collections::BTreeMap::new();
    let phase_len = seq.period_len();
    let mut cycle = None;
    for level in 1..=DIGIT_HORIZON {
        if remainder.is_zero() {
            break;
        }
        let weight = seq.weight(level);
        let skipped = Some(level) == skip;
        let digit = if skipped {
            0u64
        } else {
            let scaled = (&remainder * from_biguint(&weight)).floor().to_integer();
            let wanted = scaled.to_biguint().expect("nonnegative remainder");
            match u64::try_from(&wanted) {
                Ok(d) => d.min(digit_bound),
                Err(_) => digit_bound,
            }
        };
        remainder -= BigRational::from_integer(digit.into()) * recip_uint(&weight);
        digits.push(digit);
        // State after emitting the digit for `level`; the next state is a
        // pure function of it, the phase, and whether the skip has passed.
        let past_skip = skip.map(|k| level >= k).unwrap_or(true);
        let state = (
            format_ratio(&(&remainder * from_biguint(&weight))),
            level % phase_len,
            past_skip,
        );
        if let Some(&first) = seen.get(&state) {
            // digits for levels first+1 ..= level repeat forever
            let cycle_digits: Vec<u64> = digits[(first as usize)..(level as usize)].to_vec();
            digits.truncate(first as usize);
            if cycle_digits.iter().any(|&d| d > 0) {
                cycle = Some(DigitCycle {
                    start: first + 1,
                    digits: cycle_digits,
                });
            }
            remainder = BigRational::zero();
            break;
        }
        seen.insert(state, level);
    }
    if !remainder.is_zero() {
        return Err(DigitError::HorizonExceeded {
            horizon: DIGIT_HORIZON,
        });
    }
    // Drop trailing zeros of a finite expansion.
    if cycle.is_none() {
        while digits.last() == Some(&0) {
            digits.pop();
        }
    }
    let result = DigitSequence {
        seq: seq.clone(),
        skip,
        prefix: digits,
        cycle,
        target: target.clone(),
    };
    let sum = result.sum();
    if &sum != target {
        return Err(DigitError::SumMismatch {
            sum: format_ratio(&sum),
            target: format_ratio(target),
        });
    }
    Ok(result)
}

// ---------------------------------------------------------------------------
// Realization of covolume and growth
// ---------------------------------------------------------------------------

/// A realized lattice description: the star tree, its indexing, and the
/// exact covolume, with the optional semidirect shrink for small targets.
#[derive(Debug, Clone)]
pub struct Realization {
    pub spec: StarTreeSpec,
    pub seq: AdmissibleSequence,
    pub digits: DigitSequence,
    /// Level where the growth tree was glued, if any.
    pub growth_level: Option<u32>,
    /// Exact calibrated contribution of the growth tree.
    pub growth_target: Option<BigRational>,
    pub growth: Option<GrowthFunction>,
    /// Exact part-0 covolume of the spec (before any shrink).
    pub spec_covolume: BigRational,
    /// Exact covolume of the realized lattice (after any shrink).
    pub covolume: BigRational,
    pub shrink: Option<ShrunkGrouping>,
    pub notes: Vec<String>,
}

fn kappa0_guard(
    kappa: &BigRational,
    seq: &AdmissibleSequence,
) -> Result<BigRational, RealizeError> {
    if !kappa.is_positive() {
        return Err(RealizeError::KappaNotPositive(format_ratio(kappa)));
    }
    let kappa0 = seq.ray_covolume();
    if kappa <= &kappa0 {
        return Err(RealizeError::KappaTooSmall {
            kappa: format_ratio(kappa),
            kappa0: format_ratio(&kappa0),
        });
    }
    Ok(kappa0)
}

/// Star tree whose canonical grouping has covolume exactly `kappa`, for
/// `kappa` above the ray covolume: the ray with a depth-`e_j` block glued at
/// level `j` per the greedy digits of `kappa - kappa0`.
pub fn realize_covolume(kappa: &BigRational, m: u64, n: u64) -> Result<Realization, RealizeError> {
    let seq =
        AdmissibleSequence::canonical(n).map_err(|e| RealizeError::NotAcceptable(e.to_string()))?;
    realize_digits_only(kappa, &seq, m)
}

fn realize_digits_only(
    kappa: &BigRational,
    seq: &AdmissibleSequence,
    m: u64,
) -> Result<Realization, RealizeError> {
    let kappa0 = kappa0_guard(kappa, seq)?;
    let rho = kappa - &kappa0;
    let digits = digit_sequence(&rho, seq, adaptive_bound(&rho, seq, None), None)?;
    let spec = digits.apply_to(&build_star_ray(m)?)?;
    let covolume = spec
        .covolume_v0(seq)?
        .exact()
        .expect("digit specs have closed-form covolume")
        .clone();
    debug_assert_eq!(&covolume, kappa);
    Ok(Realization {
        spec,
        seq: seq.clone(),
        digits,
        growth_level: None,
        growth_target: None,
        growth: None,
        spec_covolume: covolume.clone(),
        covolume,
        shrink: None,
        notes: Vec::new(),
    })
}

fn adaptive_bound(rho: &BigRational, seq: &AdmissibleSequence, skip: Option<u32>) -> u64 {
    // First level that actually carries a digit.
    let first_level = if skip == Some(1) { 2 } else { 1 };
    let first = (rho * from_biguint(&seq.weight(first_level)))
        .floor()
        .to_integer();
    let needed = u64::try_from(&first.to_biguint().unwrap_or_default()).unwrap_or(u64::MAX);
    default_digit_bound(seq.n()).max(needed)
}

/// Star tree with covolume exactly `kappa` and quotient growth type `f`:
/// a volume-calibrated growth tree glued at the smallest workable level,
/// digits filling the exact remainder.
pub fn realize_covolume_growth(
    kappa: &BigRational,
    f: &GrowthFunction,
    m: u64,
    n: u64,
) -> Result<Realization, RealizeError> {
    let seq =
        AdmissibleSequence::canonical(n).map_err(|e| RealizeError::NotAcceptable(e.to_string()))?;
    realize_growth_with_sequence(kappa, f, &seq, m)
}

fn realize_growth_with_sequence(
    kappa: &BigRational,
    f: &GrowthFunction,
    seq: &AdmissibleSequence,
    m: u64,
) -> Result<Realization, RealizeError> {
    let report = is_acceptable(f);
    if !report.is_acceptable() {
        return Err(RealizeError::NotAcceptable(report.reasons.join("; ")));
    }
    let kappa0 = kappa0_guard(kappa, seq)?;
    let budget = kappa - &kappa0;
    let mut notes = Vec::new();
    // Smallest level whose calibrated growth-tree volume fits the budget
    // with room for the digit remainder.
    for level in 1..=64u32 {
        let (_, upper) = growth_gluing_interval(f, seq, level)?;
        if upper >= budget {
            continue;
        }
        // Round the calibration target up to a coarse grid so the digit
        // remainder keeps a small denominator.
        let slack = recip_uint(&(seq.weight(level + 2) * BigUint::from(4u32)));
        let grid = from_biguint(&(seq.weight(level + 2) * BigUint::from(1024u32)));
        let raw = &upper + &slack;
        let target = BigRational::from_integer((&raw * &grid).ceil().to_integer()) / &grid;
        if target >= budget {
            continue;
        }
        let rho = &budget - &target;
        let digits = digit_sequence(
            &rho,
            seq,
            adaptive_bound(&rho, seq, Some(level)),
            Some(level),
        )?;
        let spec = digits.apply_to(&build_star_ray(m)?)?.glue(
            Block::Calibrated {
                f: f.clone(),
                target: target.clone(),
            },
            level,
        )?;
        // Certify the calibration converges to its target: the depth-64
        // residual is exact, nonnegative, and monotone in depth.
        let (residual, bound) = calibration_residual(f, seq, level, &target, 64)?;
        debug_assert!(!residual.is_negative() && residual <= bound);
        notes.push(format!(
            "growth tree calibrated to volume {} at level {level}; remaining mass after 64 levels is exactly {}",
            format_ratio(&target),
            format_ratio(&residual)
        ));
        let covolume = spec
            .covolume_v0(seq)?
            .exact()
            .expect("calibrated spec has exact covolume")
            .clone();
        debug_assert_eq!(&covolume, kappa);
        return Ok(Realization {
            spec,
            seq: seq.clone(),
            digits,
            growth_level: Some(level),
            growth_target: Some(target),
            growth: Some(f.clone()),
            spec_covolume: covolume.clone(),
            covolume,
            shrink: None,
            notes,
        });
    }
    Err(RealizeError::NoShrinkParameter { limit: 64 })
}

/// Full realization: covolume `kappa`, quotient growth `f`, stabilizer
/// growth along the weights of `s`.  Targets at or below the ray covolume
/// are reached by realizing `kappa * |H|` and shrinking by the tower's unit
/// group.
pub fn realize_full(
    kappa: &BigRational,
    f: &GrowthFunction,
    seq: &AdmissibleSequence,
    m: u64,
) -> Result<Realization, RealizeError> {
    let kappa0 = seq.ray_covolume();
    if !kappa.is_positive() {
        return Err(RealizeError::KappaNotPositive(format_ratio(kappa)));
    }
    if kappa > &kappa0 {
        return realize_growth_with_sequence(kappa, f, seq, m);
    }
    // Find the smallest tower parameter whose unit group pushes the
    // pre-shrink target above the ray covolume.
    let limit = 64u32;
    for k in 1..=limit {
        let h = euler_phi(&seq.weight(k));
        let scaled = kappa * from_biguint(&h);
        if scaled <= kappa0 {
            continue;
        }
        let mut realization = realize_growth_with_sequence(&scaled, f, seq, m)?;
        let depth = realization.growth_level.unwrap_or(1).max(k).max(6);
        let shrunk = shrink_covolume(&realization.spec, seq, k, depth + 2)?;
        realization.covolume = shrunk
            .covolume
            .exact()
            .expect("shrunk ray specs have exact covolume")
            .clone();
        debug_assert_eq!(&realization.covolume, kappa);
        realization.notes.push(format!(
            "covolume shrunk by the unit group of the residues mod w({k}), order {h}"
        ));
        realization.shrink = Some(shrunk);
        return Ok(realization);
    }
    Err(RealizeError::NoShrinkParameter { limit })
}

// ---------------------------------------------------------------------------
// The semidirect tower
// ---------------------------------------------------------------------------

/// The tower `G_0 -> G_1 -> ...` with `|G_j| = w(j)`, acted on by the unit
/// group `H` of the residues mod `w(k)`: below `k` the groups are cyclic and
/// `H` acts by multiplication; above, the first factor freezes at `Z/w(k)`
/// and the inclusion multiplies the second factor by the weight step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemidirectTower {
    pub seq: AdmissibleSequence,
    pub k: u32,
}

/// Elements of `G_j` as pairs: `a` in `Z/w(min(j,k))`, `b` in
/// `Z/(w(j)/w(k))` (zero when `j <= k`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TowerElement {
    pub a: u64,
    pub b: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TowerReport {
    pub unit_order: String,
    pub levels_checked: u32,
    pub pairs_checked: u64,
    /// `(h, g, h . g)` with `h . g != g`, one per nontrivial unit.
    pub faithfulness_witnesses: Vec<(u64, u64, u64)>,
}

impl SemidirectTower {
    pub fn new(seq: AdmissibleSequence, k: u32) -> Self {
        SemidirectTower { seq, k }
    }

    /// Tower for the canonical weights `(n-1)^j`.
    pub fn canonical(n: u64, k: u32) -> Result<Self, RealizeError> {
        let seq = AdmissibleSequence::canonical(n)
            .map_err(|e| RealizeError::NotAcceptable(e.to_string()))?;
        Ok(SemidirectTower { seq, k })
    }

    pub fn unit_group_order(&self) -> BigUint {
        euler_phi(&self.seq.weight(self.k))
    }

    pub fn group_order(&self, level: u32) -> BigUint {
        self.seq.weight(level)
    }

    fn modulus_a(&self, level: u32) -> Result<u64, RealizeError> {
        u64::try_from(&self.seq.weight(level.min(self.k)))
            .map_err(|_| RealizeError::TowerTooLarge { bound: u64::MAX })
    }

    fn modulus_b(&self, level: u32) -> Result<u64, RealizeError> {
        if level <= self.k {
            Ok(1)
        } else {
            u64::try_from(&(self.seq.weight(level) / self.seq.weight(self.k)))
                .map_err(|_| RealizeError::TowerTooLarge { bound: u64::MAX })
        }
    }

    /// The units of the residues mod `w(k)`.
    pub fn units(&self) -> Result<Vec<u64>, RealizeError> {
        let modulus = self.modulus_a(self.k)?;
        Ok((1..=modulus).filter(|&h| h.gcd(&modulus) == 1).collect())
    }

    /// All elements of `G_level` (for enumerable moduli).
    pub fn elements(&self, level: u32, bound: u64) -> Result<Vec<TowerElement>, RealizeError> {
        let ma = self.modulus_a(level)?;
        let mb = self.modulus_b(level)?;
        if ma.saturating_mul(mb) > bound {
            return Err(RealizeError::TowerTooLarge { bound });
        }
        let mut out = Vec::with_capacity((ma * mb) as usize);
        for a in 0..ma {
            for b in 0..mb {
                out.push(TowerElement { a, b });
            }
        }
        Ok(out)
    }

    /// The inclusion `G_level -> G_(level+1)`.
    pub fn include(&self, level: u32, el: TowerElement) -> Result<TowerElement, RealizeError> {
        let step = self.seq.entry(level + 1) - 1;
        if level < self.k {
            // multiplication by the weight step inside a larger cyclic group
            let ma_next = self.modulus_a(level + 1)?;
            Ok(TowerElement {
                a: (el.a as u128 * step as u128 % ma_next as u128) as u64,
                b: 0,
            })
        } else {
            // identity on the first factor, multiplication on the second
            let mb_next = self.modulus_b(level + 1)?;
            Ok(TowerElement {
                a: el.a,
                b: (el.b as u128 * step as u128 % mb_next as u128) as u64,
            })
        }
    }

    /// The action of a unit `h` on `G_level`.
    pub fn act(&self, level: u32, h: u64, el: TowerElement) -> Result<TowerElement, RealizeError> {
        let ma = self.modulus_a(level)?;
        Ok(TowerElement {
            a: (h as u128 * el.a as u128 % ma as u128) as u64,
            b: el.b,
        })
    }

    /// Exhaustively verifies inclusion injectivity, the homomorphism and
    /// equivariance laws, and faithfulness of the `H`-action on `G_k`, on
    /// levels `0 ..= k + levels_beyond`.
    pub fn verify(&self, levels_beyond: u32, bound: u64) -> Result<TowerReport, RealizeError> {
        let units = self.units()?;
        let top = self.k + levels_beyond;
        let mut pairs = 0u64;
        for level in 0..top {
            let elements = self.elements(level, bound)?;
            // injectivity of the inclusion
            let mut images = std::collections::BTreeSet::new();
            for &g in &elements {
                let image = self.include(level, g)?;
                if !images.insert((image.a, image.b)) {
                    return Err(RealizeError::NotAcceptable(format!(
                        "tower inclusion at level {level} is not injective"
                    )));
                }
            }
            for &h in &units {
                // homomorphism in g: h.(g1 + g2) = h.g1 + h.g2
                let ma = self.modulus_a(level)?;
                let mb = self.modulus_b(level)?;
                for &g1 in &elements {
                    for &g2 in &elements {
                        let sum = TowerElement {
                            a: (g1.a + g2.a) % ma,
                            b: (g1.b + g2.b) % mb.max(1),
                        };
                        let lhs = self.act(level, h, sum)?;
                        let r1 = self.act(level, h, g1)?;
                        let r2 = self.act(level, h, g2)?;
                        let rhs = TowerElement {
                            a: (r1.a + r2.a) % ma,
                            b: (r1.b + r2.b) % mb.max(1),
                        };
                        if lhs != rhs {
                            return Err(RealizeError::NotAcceptable(format!(
                                "unit {h} does not act by automorphisms at level {level}"
                            )));
                        }
                        pairs += 1;
                    }
                }
                // equivariance with the inclusion
                for &g in &elements {
                    let lhs = self.include(level, self.act(level, h, g)?)?;
                    let rhs = self.act(level + 1, h, self.include(level, g)?)?;
                    if lhs != rhs {
                        return Err(RealizeError::NotAcceptable(format!(
                            "equivariance fails at level {level} for unit {h}"
                        )));
                    }
                    pairs += 1;
                }
            }
        }
        // faithfulness on G_k: every nontrivial unit moves the generator
        let mut witnesses = Vec::new();
        for &h in &units {
            if h == 1 {
                continue;
            }
            let moved = self.act(self.k, h, TowerElement { a: 1, b: 0 })?;
            if moved.a == 1 {
                return Err(RealizeError::NotAcceptable(format!(
                    "unit {h} acts trivially on the level-{} group",
                    self.k
                )));
            }
            witnesses.push((h, 1, moved.a));
        }
        Ok(TowerReport {
            unit_order: self.unit_group_order().to_string(),
            levels_checked: top,
            pairs_checked: pairs,
            faithfulness_witnesses: witnesses,
        })
    }
}

/// Canonical-weight tower (`G_j = Z/(n-1)^j` below `k`).
pub fn build_semidirect_tower(n: u64, k: u32) -> Result<SemidirectTower, RealizeError> {
    SemidirectTower::canonical(n, k)
}

// ---------------------------------------------------------------------------
// Covolume shrinking
// ---------------------------------------------------------------------------

/// A grouping on a truncation whose groups are tower semidirect products:
/// covolume is the spec's divided by the unit group order, exactly.
#[derive(Debug, Clone)]
pub struct ShrunkGrouping {
    pub grouping: FiniteGrouping,
    pub truncation: Truncation,
    pub tower: SemidirectTower,
    pub unit_order: BigUint,
    /// Covolume of the shrunk lattice (part-0 selector), exact for
    /// closed-form specs.
    pub covolume: CovolumeValue,
}

/// Builds the semidirect grouping of the indexed spec for tower parameter
/// `k`: part-0 vertices carry `G_level x| H`, degree-one joints add a
/// `Z/n` factor, degree-two joints sit one tower level up (times `Z/(n/s)`
/// for non-canonical indexings).  Faithful exactly when the tree reaches
/// level `k`.
pub fn shrink_covolume(
    spec: &StarTreeSpec,
    seq: &AdmissibleSequence,
    k: u32,
    depth: u32,
) -> Result<ShrunkGrouping, RealizeError> {
    let counts = spec.level_counts(seq, k.max(1))?;
    if counts[k as usize].is_zero() {
        return Err(RealizeError::NotFaithful { level: k });
    }
    let tower = SemidirectTower::new(seq.clone(), k);
    let unit_order = tower.unit_group_order();
    let tree = IndexedStarTree::with_sequence(spec.clone(), seq.clone())?;
    let truncation = tree.truncate(depth.max(k))?;
    let graph = &truncation.graph;

    let semidirect = |level: u32, extra: Option<u64>| GroupDesc::Semidirect {
        seq: seq.clone(),
        k,
        level,
        extra_factor: extra,
    };
    let mut vertex_groups = vec![GroupDesc::trivial(); graph.vertex_count()];
    let mut level_of = vec![0u32; graph.vertex_count()];
    for (id, level) in &truncation.center_levels {
        let v = graph.vertex_by_id(id).expect("center in truncation");
        vertex_groups[v] = semidirect(*level, None);
        level_of[v] = *level;
    }
    // Joints: degree-one joints get the extra Z/n factor at the adjacent
    // center's level; degree-two joints sit at the far center's level with
    // the cofactor as extra factor when it is nontrivial.
    for v in 0..graph.vertex_count() {
        if graph.vertex_part(v) != Some(Part::One) {
            continue;
        }
        let centers: Vec<usize> = graph
            .edges_into(v)
            .iter()
            .map(|&e| graph.origin(e))
            .collect();
        match centers.len() {
            1 => {
                let level = level_of[centers[0]];
                vertex_groups[v] = semidirect(level, Some(seq.n()));
            }
            2 => {
                let far = level_of[centers[0]].max(level_of[centers[1]]);
                let cofactor = seq.cofactor(far);
                let extra = (cofactor > 1).then_some(cofactor);
                vertex_groups[v] = semidirect(far, extra);
            }
            other => unreachable!("star tree joints have degree 1 or 2, got {other}"),
        }
    }
    // Edge pairs: group of the adjacent center's vertex group; injections
    // are identities into centers, first-factor into degree-one joints, and
    // tower steps into degree-two joints from the near side.
    let mut edge_groups = vec![GroupDesc::trivial(); graph.edge_count()];
    let mut injections = vec![InjectionDesc::Identity; graph.edge_count()];
    for e in 0..graph.edge_count() {
        let (o, t) = (graph.origin(e), graph.terminus(e));
        let center = if graph.vertex_part(o) == Some(Part::Zero) {
            o
        } else {
            t
        };
        edge_groups[e] = semidirect(level_of[center], None);
        let joint = if center == o { t } else { o };
        injections[e] = if t == center {
            InjectionDesc::Identity
        } else {
            // into the joint
            match graph.edges_into(joint).len() {
                1 => InjectionDesc::FirstFactor,
                _ => {
                    let joint_level = {
                        let centers: Vec<usize> = graph
                            .edges_into(joint)
                            .iter()
                            .map(|&f| graph.origin(f))
                            .collect();
                        level_of[centers[0]].max(level_of[centers[1]])
                    };
                    if level_of[center] < joint_level {
                        InjectionDesc::TowerStep
                    } else {
                        // far side: identity into the first factor
                        InjectionDesc::FirstFactor
                    }
                }
            }
        };
    }
    let grouping = FiniteGrouping {
        graph: graph.clone(),
        vertex_groups,
        edge_groups,
        injections,
    };
    let covolume = match spec.covolume_v0(seq)? {
        CovolumeValue::Exact(v) => CovolumeValue::Exact(v / from_biguint(&unit_order)),
        CovolumeValue::Interval { lower, upper } => CovolumeValue::Interval {
            lower: lower / from_biguint(&unit_order),
            upper: upper / from_biguint(&unit_order),
        },
    };
    Ok(ShrunkGrouping {
        grouping,
        truncation,
        tower,
        unit_order,
        covolume,
    })
}

// ---------------------------------------------------------------------------
// Seeded digit-sequence sampler
// ---------------------------------------------------------------------------

/// Deterministically samples `count` pairwise distinct bounded digit
/// sequences with the exact sum `kappa - kappa0`, by walking exchange moves
/// `e_j -= 1, e_(j+1) += s_(j+1) - 1` (each preserves the sum exactly) from
/// the greedy expansion.
pub fn sample_digit_sequences(
    kappa: &BigRational,
    seq: &AdmissibleSequence,
    count: usize,
    seed: u64,
) -> Result<Vec<DigitSequence>, RealizeError> {
    let kappa0 = kappa0_guard(kappa, seq)?;
    let rho = kappa - &kappa0;
    let base = digit_sequence(&rho, seq, adaptive_bound(&rho, seq, None), None)?;
    const WINDOW: u32 = 16;
    let horizon = WINDOW
        + base
            .cycle
            .as_ref()
            .map(|c| c.digits.len() as u32)
            .unwrap_or(0)
        + 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<DigitSequence> = Vec::with_capacity(count);
    let mut seen = std::collections::BTreeSet::new();
    // Current state: explicit digits on the window, base sequence beyond.
    let mut window: Vec<u64> = (1..=WINDOW).map(|j| base.digit(j)).collect();
    let snapshot = |window: &[u64], base: &DigitSequence| -> DigitSequence {
        let mut prefix: Vec<u64> = window.to_vec();
        // keep the base prefix beyond the window
        for j in WINDOW + 1..=(base.prefix.len() as u32) {
            prefix.push(base.digit(j));
        }
        let mut cycle = base.cycle.clone();
        if let Some(c) = &mut cycle {
            if c.start <= WINDOW {
                // unroll the cycle across the window boundary
                let mut digits = Vec::new();
                let len = c.digits.len() as u32;
                for t in 0..len {
                    digits.push(base.digit(WINDOW + 1 + t));
                }
                *c = DigitCycle {
                    start: WINDOW + 1,
                    digits,
                };
                while prefix.len() as u32 > WINDOW {
                    prefix.pop();
                }
            }
        }
        DigitSequence {
            seq: base.seq.clone(),
            skip: base.skip,
            prefix,
            cycle,
            target: base.target.clone(),
        }
    };
    let mut attempts = 0u32;
    let max_attempts = (count as u32) * 200 + 1000;
    while out.len() < count {
        attempts += 1;
        if attempts > max_attempts {
            return Err(RealizeError::SamplerExhausted {
                want: count,
                attempts,
            });
        }
        let j = rng.gen_range(0..WINDOW - 1) as usize;
        if window[j] == 0 {
            continue;
        }
        window[j] -= 1;
        window[j + 1] += seq.entry(j as u32 + 2) - 1;
        let candidate = snapshot(&window, &base);
        let key = candidate.digits_to(horizon);
        if seen.insert(key) {
            debug_assert_eq!(candidate.sum(), rho);
            out.push(candidate);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// JSON-facing realization report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealizationReport {
    pub kappa: String,
    pub m: u64,
    pub n: u64,
    pub sequence: AdmissibleSequence,
    pub ray_covolume: String,
    pub digits_prefix: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub digit_cycle: Option<DigitCycle>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth_level: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth_target: Option<String>,
    pub covolume: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth_equivalence: Option<EquivalenceVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shrink: Option<ShrinkReport>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShrinkReport {
    pub k: u32,
    pub unit_order: String,
    pub covolume: String,
    pub faithfulness_witnesses: Vec<(u64, u64, u64)>,
}

impl Realization {
    /// Tabulated ball growth of the realized tree from the level counts.
    pub fn ball_growth(&self, k_max: u32) -> Result<Tabulation, RealizeError> {
        let tree = IndexedStarTree::with_sequence(self.spec.clone(), self.seq.clone())?;
        Ok(tree.level_ball_growth(k_max))
    }

    pub fn report(&self, m: u64) -> Result<RealizationReport, RealizeError> {
        let growth_equivalence = match (&self.growth, self.growth_level) {
            (Some(f), Some(_)) => {
                let tab = self.ball_growth(20)?.to_growth();
                Some(equivalent(&tab, f))
            }
            _ => None,
        };
        let shrink = match &self.shrink {
            Some(s) => {
                let report = s.tower.verify(1, 1 << 16)?;
                Some(ShrinkReport {
                    k: s.tower.k,
                    unit_order: s.unit_order.to_string(),
                    covolume: match &s.covolume {
                        CovolumeValue::Exact(v) => format_ratio(v),
                        CovolumeValue::Interval { lower, upper } => {
                            format!("[{}, {}]", format_ratio(lower), format_ratio(upper))
                        }
                    },
                    faithfulness_witnesses: report.faithfulness_witnesses,
                })
            }
            None => None,
        };
        Ok(RealizationReport {
            kappa: format_ratio(&self.covolume),
            m,
            n: self.seq.n(),
            sequence: self.seq.clone(),
            ray_covolume: format_ratio(&self.seq.ray_covolume()),
            digits_prefix: self.digits.prefix.clone(),
            digit_cycle: self.digits.cycle.clone(),
            growth_level: self.growth_level,
            growth_target: self.growth_target.as_ref().map(format_ratio),
            covolume: format_ratio(&self.covolume),
            growth_equivalence,
            shrink,
            notes: self.notes.clone(),
        })
    }
}

/// Tabulated stabilizer growth of an indexed spec (the ordering route).
pub fn stabilizer_growth_of(
    spec: &StarTreeSpec,
    seq: &AdmissibleSequence,
    k_max: u32,
    v0_only: bool,
) -> Result<Tabulation, RealizeError> {
    let tree = IndexedStarTree::with_sequence(spec.clone(), seq.clone())?;
    Ok(tree.level_stabilizer_growth(k_max, v0_only))
}

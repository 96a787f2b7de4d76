//! Divisor sequences and their weight products.
//!
//! An admissible sequence for `n` is `s = (s_k)` with every `s_k` a divisor
//! of `n` and `2 < s_k <= n`, stored as a finite prefix plus a repeating
//! period. Its weight sequence is the product `w(k) = (s_1 - 1) ... (s_k - 1)`
//! with `w(0) = 1`; the constant sequence `s == n` gives the canonical
//! weights `(n - 1)^k`.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num_util::{from_biguint, recip_uint};
use crate::series::{eventually_periodic_sum, SeriesError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SequenceError {
    #[error("n must be at least 3, got {0}")]
    DegreeTooSmall(u64),
    #[error("period must be nonempty")]
    EmptyPeriod,
    #[error("entry {entry} at position {pos} is not admissible for n={n}: need a divisor of n with 2 < entry <= n")]
    NotAdmissible { entry: u64, pos: usize, n: u64 },
}

/// Eventually periodic sequence of divisors of `n`, entries in `(2, n]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSequence", into = "RawSequence")]
pub struct AdmissibleSequence {
    n: u64,
    prefix: Vec<u64>,
    period: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct RawSequence {
    n: u64,
    #[serde(default)]
    prefix: Vec<u64>,
    period: Vec<u64>,
}

impl TryFrom<RawSequence> for AdmissibleSequence {
    type Error = SequenceError;
    fn try_from(raw: RawSequence) -> Result<Self, Self::Error> {
        AdmissibleSequence::new(raw.n, raw.prefix, raw.period)
    }
}

impl From<AdmissibleSequence> for RawSequence {
    fn from(seq: AdmissibleSequence) -> Self {
        RawSequence {
            n: seq.n,
            prefix: seq.prefix,
            period: seq.period,
        }
    }
}

impl AdmissibleSequence {
    pub fn new(n: u64, prefix: Vec<u64>, period: Vec<u64>) -> Result<Self, SequenceError> {
        if n < 3 {
            return Err(SequenceError::DegreeTooSmall(n));
        }
        if period.is_empty() {
            return Err(SequenceError::EmptyPeriod);
        }
        for (pos, &entry) in prefix.iter().chain(period.iter()).enumerate() {
            if entry <= 2 || entry > n || !n.is_multiple_of(entry) {
                return Err(SequenceError::NotAdmissible { entry, pos, n });
            }
        }
        Ok(AdmissibleSequence { n, prefix, period })
    }

    /// The constant sequence `s == n`, giving weights `(n - 1)^k`.
    pub fn canonical(n: u64) -> Result<Self, SequenceError> {
        Self::new(n, Vec::new(), vec![n])
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn is_canonical(&self) -> bool {
        self.prefix.iter().all(|&s| s == self.n) && self.period.iter().all(|&s| s == self.n)
    }

    /// `s_k` for `k >= 1`.
    pub fn entry(&self, k: u32) -> u64 {
        assert!(k >= 1, "sequence entries are indexed from 1");
        let i = (k - 1) as usize;
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.period[(i - self.prefix.len()) % self.period.len()]
        }
    }

    /// `n / s_k`, the complementary factor at position `k`.
    pub fn cofactor(&self, k: u32) -> u64 {
        self.n / self.entry(k)
    }

    /// Weight `w(k) = (s_1 - 1) ... (s_k - 1)`, with `w(0) = 1`.
    pub fn weight(&self, k: u32) -> BigUint {
        let mut w = BigUint::one();
        for i in 1..=k {
            w *= BigUint::from(self.entry(i) - 1);
        }
        w
    }

    /// Index from which the weight sequence scales periodically, i.e. the
    /// smallest `j0` with `w(j + L) = P * w(j)` for all `j >= j0`.
    pub fn period_start(&self) -> u32 {
        self.prefix.len() as u32
    }

    pub fn period_len(&self) -> u32 {
        self.period.len() as u32
    }

    /// Per-period weight growth `P = prod over the period of (s - 1)`.
    pub fn period_product(&self) -> BigUint {
        self.period.iter().map(|&s| BigUint::from(s - 1)).product()
    }

    /// Smallest per-step weight factor `s_k - 1` over the whole sequence;
    /// at least 2.
    pub fn min_step(&self) -> u64 {
        self.prefix
            .iter()
            .chain(self.period.iter())
            .map(|&s| s - 1)
            .min()
            .expect("period is nonempty")
    }

    /// Exact `sum_{j >= from} coeff(j) / w(j)` for a coefficient function that
    /// is periodic with period `coeff_period` from index `coeff_start` on.
    ///
    /// `coeff` must be nonnegative; convergence holds because each weight
    /// factor is at least 2, so per-block ratios are at most
    /// `max_coeff / 2^L < 1` once the coefficient period is absorbed.
    pub fn weighted_tail(
        &self,
        from: u32,
        coeff: &dyn Fn(u32) -> BigRational,
        coeff_start: u32,
        coeff_period: u32,
    ) -> Result<BigRational, SeriesError> {
        assert!(coeff_period >= 1);
        let start = from.max(self.period_start()).max(coeff_start);
        let block_len = lcm_u32(self.period_len(), coeff_period);
        let mut prefix_terms = Vec::new();
        for j in from..start {
            prefix_terms.push(coeff(j) * recip_uint(&self.weight(j)));
        }
        let mut first_period = Vec::new();
        for j in start..start + block_len {
            first_period.push(coeff(j) * recip_uint(&self.weight(j)));
        }
        // w(j + block_len) = P^(block_len / L) * w(j) for j >= period_start,
        // and coeff(j + block_len) = coeff(j), so consecutive blocks scale by
        // the reciprocal of that weight growth.
        let growth = self.period_product().pow(block_len / self.period_len());
        let ratio = BigRational::one() / from_biguint(&growth);
        eventually_periodic_sum(&prefix_terms, &first_period, &ratio)
    }

    /// Exact `sum_{j >= from} 1 / w(j)`.
    pub fn reciprocal_tail(&self, from: u32) -> BigRational {
        self.weighted_tail(from, &|_| BigRational::one(), 0, 1)
            .expect("reciprocal weight series always converges")
    }

    /// The covolume of the plain star ray under these weights,
    /// `sum_{j >= 0} 1 / w(j)`; equals `(n - 1) / (n - 2)` for the canonical
    /// sequence.
    pub fn ray_covolume(&self) -> BigRational {
        self.reciprocal_tail(0)
    }
}

fn lcm_u32(a: u32, b: u32) -> u32 {
    num_integer::Integer::lcm(&a, &b)
}

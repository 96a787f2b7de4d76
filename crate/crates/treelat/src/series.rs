//! Exact summation of eventually periodic series.
//!
//! Every convergent series this crate needs has the shape
//! `sum(prefix) + sum_{t>=0} ratio^t * sum(block)` for a finite prefix, a
//! finite periodic block, and a rational per-period ratio in `[0, 1)`.

use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SeriesError {
    #[error("series diverges: per-period ratio {0} is not < 1")]
    Divergent(String),
}

/// `sum_{t>=0} first * ratio^t` for `0 <= ratio < 1`.
pub fn geometric_sum(first: &BigRational, ratio: &BigRational) -> Result<BigRational, SeriesError> {
    if ratio < &BigRational::zero() || ratio >= &BigRational::one() {
        return Err(SeriesError::Divergent(ratio.to_string()));
    }
    Ok(first / (BigRational::one() - ratio))
}

/// Exact sum of `prefix` followed by the periodic tail whose first period has
/// the given term values and whose consecutive periods scale by `ratio`.
pub fn eventually_periodic_sum(
    prefix: &[BigRational],
    first_period: &[BigRational],
    ratio: &BigRational,
) -> Result<BigRational, SeriesError> {
    let head: BigRational = prefix.iter().sum();
    if first_period.is_empty() {
        return Ok(head);
    }
    let block: BigRational = first_period.iter().sum();
    Ok(head + geometric_sum(&block, ratio)?)
}

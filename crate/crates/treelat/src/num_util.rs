//! Small helpers on top of the `num` stack: construction, gcd/lcm folds,
//! and the `p/q` text form used by the CLI.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// `a/b` as an exact rational.
pub fn ratio(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

/// Integer `n` as a rational.
pub fn int(n: i64) -> BigRational {
    BigRational::from(BigInt::from(n))
}

/// `BigUint` value as a rational.
pub fn from_biguint(n: &BigUint) -> BigRational {
    BigRational::from(BigInt::from(n.clone()))
}

/// Reciprocal of a positive integer.
pub fn recip_uint(n: &BigUint) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(n.clone()))
}

/// True if the rational has denominator 1.
pub fn is_integral(r: &BigRational) -> bool {
    r.denom().is_one()
}

/// The value as a `BigUint`, if it is a nonnegative integer.
pub fn to_biguint(r: &BigRational) -> Option<BigUint> {
    if is_integral(r) && !r.is_negative() {
        r.numer().to_biguint()
    } else {
        None
    }
}

/// gcd of a nonempty iterator of positive integers (0 for an empty one).
pub fn gcd_all<'a>(values: impl IntoIterator<Item = &'a BigUint>) -> BigUint {
    let mut g = BigUint::zero();
    for v in values {
        g = g.gcd(v);
        if g.is_one() {
            break;
        }
    }
    g
}

/// lcm of an iterator of positive integers (1 for an empty one).
pub fn lcm_all<'a>(values: impl IntoIterator<Item = &'a BigUint>) -> BigUint {
    let mut l = BigUint::one();
    for v in values {
        l = l.lcm(v);
    }
    l
}

/// Renders a rational as `p/q` with `q > 0` and `gcd(p, q) = 1`, always
/// including the denominator (`2` prints as `2/1`).
pub fn format_ratio(r: &BigRational) -> String {
    let reduced = r.reduced();
    format!("{}/{}", reduced.numer(), reduced.denom())
}

/// Parses `p/q` or a bare integer `p` into an exact rational.
pub fn parse_ratio(text: &str) -> Result<BigRational, String> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let n: BigInt = num
        .parse()
        .map_err(|_| format!("invalid numerator in rational {text:?}"))?;
    let d: BigInt = den
        .parse()
        .map_err(|_| format!("invalid denominator in rational {text:?}"))?;
    if d.is_zero() {
        return Err(format!("zero denominator in rational {text:?}"));
    }
    Ok(BigRational::new(n, d))
}

/// `base^exp` over `BigUint`.
pub fn upow(base: &BigUint, exp: u32) -> BigUint {
    base.pow(exp)
}

/// Euler's totient by trial division; intended for smooth numbers (products
/// of small factors), where it is fast.
pub fn euler_phi(n: &BigUint) -> BigUint {
    let mut rest = n.clone();
    let mut phi = BigUint::one();
    let mut p = BigUint::from(2u32);
    while &p * &p <= rest {
        if (&rest % &p).is_zero() {
            let mut power = BigUint::one();
            while (&rest % &p).is_zero() {
                rest /= &p;
                power *= &p;
            }
            phi *= &power / &p * (&p - BigUint::one());
        }
        p += BigUint::one();
    }
    if rest > BigUint::one() {
        phi *= &rest - BigUint::one();
    }
    phi
}

/// Serde adapter rendering a `BigUint` as a decimal string.
pub mod biguint_string {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &BigUint, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&value.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<BigUint, D::Error> {
        let text = String::deserialize(de)?;
        text.parse()
            .map_err(|_| serde::de::Error::custom(format!("invalid integer {text:?}")))
    }
}

/// Serde adapter rendering a `Vec<BigUint>` as decimal strings.
pub mod biguint_vec_string {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(values: &[BigUint], ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_seq(values.iter().map(|v| v.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<BigUint>, D::Error> {
        let texts = Vec::<String>::deserialize(de)?;
        texts
            .iter()
            .map(|t| {
                t.parse()
                    .map_err(|_| serde::de::Error::custom(format!("invalid integer {t:?}")))
            })
            .collect()
    }
}

/// Serde adapter rendering a `BigRational` as `p/q`.
pub mod ratio_string {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &BigRational, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&super::format_ratio(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<BigRational, D::Error> {
        let text = String::deserialize(de)?;
        super::parse_ratio(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_always_shows_denominator() {
        assert_eq!(format_ratio(&int(2)), "2/1");
        assert_eq!(format_ratio(&ratio(6, 4)), "3/2");
        assert_eq!(format_ratio(&ratio(-6, 4)), "-3/2");
    }

    #[test]
    fn parse_roundtrip() {
        for s in ["5/4", "7", "-3/9", "0"] {
            let r = parse_ratio(s).unwrap();
            let again = parse_ratio(&format_ratio(&r)).unwrap();
            assert_eq!(r, again);
        }
        assert!(parse_ratio("1/0").is_err());
        assert!(parse_ratio("x/2").is_err());
    }

    #[test]
    fn euler_phi_values() {
        let cases: [(u64, u64); 7] = [(1, 1), (2, 1), (8, 4), (9, 6), (12, 4), (81, 54), (100, 40)];
        for (n, expect) in cases {
            assert_eq!(
                euler_phi(&BigUint::from(n)),
                BigUint::from(expect),
                "phi({n})"
            );
        }
    }

    #[test]
    fn gcd_lcm_folds() {
        let vals: Vec<BigUint> = [6u32, 10, 15].iter().map(|&v| BigUint::from(v)).collect();
        assert_eq!(gcd_all(vals.iter()), BigUint::from(1u32));
        assert_eq!(lcm_all(vals.iter()), BigUint::from(30u32));
    }
}

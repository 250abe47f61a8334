//! Exact rationals used by every inequality the certifier checks.

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, Zero};

pub type Rational = Ratio<i128>;

pub fn int(n: i128) -> Rational {
    Rational::from_integer(n)
}

pub fn ratio(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

/// Least integer `>= r`.
pub fn ceil_int(r: &Rational) -> i128 {
    r.ceil().to_integer()
}

/// Least integer `k >= 1` with `k * step >= target`; `step` must be positive.
pub fn least_multiple(step: &Rational, target: &Rational) -> i128 {
    assert!(step.is_positive(), "step must be positive");
    if !target.is_positive() {
        return 1;
    }
    ceil_int(&(target / step)).max(1)
}

pub fn render(r: &Rational) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: i128 = n.trim().parse().ok()?;
            let d: i128 = d.trim().parse().ok()?;
            (!d.is_zero()).then(|| Rational::new(n, d))
        }
        None => s.parse::<i128>().ok().map(Rational::from_integer),
    }
}

pub fn ceil_div(a: i128, b: i128) -> i128 {
    Integer::div_ceil(&a, &b)
}

/// Serde adapter storing a rational as its `p/q` string.
pub mod serde_str {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::render(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        super::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}")))
    }
}

pub mod serde_opt_str {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&super::render(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        let s: Option<String> = Option::deserialize(d)?;
        match s {
            None => Ok(None),
            Some(s) => super::parse(&s)
                .map(Some)
                .ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn least_multiple_examples() {
        assert_eq!(least_multiple(&int(1), &int(110_000)), 110_000);
        assert_eq!(least_multiple(&int(2), &int(121_000)), 60_500);
        assert_eq!(least_multiple(&int(3), &int(0)), 1);
        assert_eq!(least_multiple(&ratio(1, 2), &int(3)), 6);
    }

    #[test]
    fn render_parse() {
        for r in [int(5), ratio(7, 3), ratio(-1, 4)] {
            assert_eq!(parse(&render(&r)), Some(r));
        }
        assert_eq!(parse("1/0"), None);
    }
}

//! `p/q` text form for exact rationals, plus serde adapters.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serializer};

use crate::error::{Error, Result};
use crate::Q;

pub fn fmt_q(q: &Q) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parse `p/q`, a bare integer, or a decimal like `0.02`.
pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::OutOfRange(format!("cannot parse rational {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| bad())?;
        let q: i64 = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        return Ok(Q::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.len() > 12 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = whole.starts_with('-');
        let w: i64 = if whole.is_empty() || whole == "-" { 0 } else { whole.parse().map_err(|_| bad())? };
        let den = 10i64.pow(frac.len() as u32);
        let f: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let mag = Q::new(w.abs() * den + f, den);
        return Ok(if neg { -mag } else { mag });
    }
    s.parse::<i64>().map(Q::from_integer).map_err(|_| bad())
}

pub fn to_f64(q: &Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// Distance from `x` to the nearest integer multiple of `unit`.
pub fn dist_to_lattice(x: Q, unit: Q) -> Q {
    if unit.is_zero() {
        return x.abs();
    }
    let r = x / unit;
    let lo = r.floor();
    ((r - lo).min(lo + 1 - r)) * unit.abs()
}

/// Circle distance of `x` to 0 on `R / Z`.
pub fn circle_norm(x: Q) -> Q {
    dist_to_lattice(x, Q::from_integer(1))
}

/// `x mod unit`, in `[0, unit)`.
pub fn modulo(x: Q, unit: Q) -> Q {
    x - (x / unit).floor() * unit
}

/// Exact `sqrt(a) <= b` for `a, b >= 0`.
pub fn sqrt_le(a: Q, b: Q) -> bool {
    !b.is_negative() && a <= b * b
}

pub mod serde_q {
    use super::*;

    pub fn serialize<S: Serializer>(q: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_q(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        parse_q(&s).map_err(serde::de::Error::custom)
    }
}

pub mod serde_q_opt {
    use super::*;

    pub fn serialize<S: Serializer>(q: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match q {
            Some(q) => s.serialize_some(&fmt_q(q)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Q>, D::Error> {
        Option::<String>::deserialize(d)?.map(|s| parse_q(&s).map_err(serde::de::Error::custom)).transpose()
    }
}

pub mod serde_q_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for q in v {
            seq.serialize_element(&fmt_q(q))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Q>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| parse_q(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

pub mod serde_q_pairs {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[(usize, Q)], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for (k, q) in v {
            seq.serialize_element(&(k, fmt_q(q)))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<(usize, Q)>, D::Error> {
        Vec::<(usize, String)>::deserialize(d)?
            .into_iter()
            .map(|(k, s)| parse_q(&s).map(|q| (k, q)).map_err(serde::de::Error::custom))
            .collect()
    }
}

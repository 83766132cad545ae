//! Nonnegative extended reals, the codomain of dissimilarities and haziness values.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A value in `[0, +inf]`.
///
/// Backed by a plain `f64` with the native infinity; NaN and negative values
/// are rejected at construction, which makes the ordering total.
#[derive(Clone, Copy, PartialEq, Default)]
pub struct ExtendedValue(f64);

impl ExtendedValue {
    pub const ZERO: Self = Self(0.0);
    pub const INFINITY: Self = Self(f64::INFINITY);

    /// Checked constructor.
    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() {
            return Err(Error::InvalidValue("NaN is not an extended value".into()));
        }
        if value < 0.0 {
            return Err(Error::InvalidValue(format!("negative value {value}")));
        }
        // normalise -0.0
        Ok(Self(value + 0.0))
    }

    /// Constructor for values already known to lie in `[0, inf]`.
    ///
    /// Debug builds still assert the invariant.
    #[inline]
    pub(crate) fn new_unchecked(value: f64) -> Self {
        debug_assert!(value >= 0.0, "extended value out of range: {value}");
        Self(value)
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_infinite(self) -> bool {
        self.0 == f64::INFINITY
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0 != f64::INFINITY
    }

    #[inline]
    pub fn min(self, other: Self) -> Self {
        if other.0 < self.0 {
            other
        } else {
            self
        }
    }

    #[inline]
    pub fn max(self, other: Self) -> Self {
        if other.0 > self.0 {
            other
        } else {
            self
        }
    }
}

impl Eq for ExtendedValue {}

impl PartialOrd for ExtendedValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedValue {
    fn cmp(&self, other: &Self) -> Ordering {
        // no NaN by construction
        self.0.partial_cmp(&other.0).unwrap_or(Ordering::Equal)
    }
}

impl Add for ExtendedValue {
    type Output = Self;

    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

/// Scaling by a nonnegative finite factor; `0 * inf` is taken as `0`.
impl Mul<f64> for ExtendedValue {
    type Output = Self;

    fn mul(self, rhs: f64) -> Self {
        debug_assert!(rhs >= 0.0 && rhs.is_finite());
        if rhs == 0.0 {
            Self::ZERO
        } else {
            Self(self.0 * rhs)
        }
    }
}

impl TryFrom<f64> for ExtendedValue {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<ExtendedValue> for f64 {
    fn from(value: ExtendedValue) -> f64 {
        value.0
    }
}

impl fmt::Debug for ExtendedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Finite values print with 17 significant digits so that parsing the text
/// back reproduces the same bits; infinity prints as `inf`.
impl fmt::Display for ExtendedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{:.16e}", self.0)
        }
    }
}

impl FromStr for ExtendedValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "+infinity" => Ok(Self::INFINITY),
            _ => {
                let v: f64 = t
                    .parse()
                    .map_err(|_| Error::Parse(format!("not a number: {t:?}")))?;
                Self::new(v)
            }
        }
    }
}

impl Serialize for ExtendedValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Num(v) => Self::new(v).map_err(serde::de::Error::custom),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

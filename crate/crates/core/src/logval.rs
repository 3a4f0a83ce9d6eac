//! Log-domain representation of positive scalars.
//!
//! The quantities this library manipulates collapse doubly exponentially:
//! the model extremal solution takes values near `exp(-exp(k+1))`, which
//! underflows `f64` already at `k = 4`. A [`LogVal`] stores the natural
//! logarithm of a positive value and never materializes the value itself
//! unless explicitly asked to.
//!
//! `LogVal::from_ln(f64::NEG_INFINITY)` represents exact zero; it is accepted
//! where a degenerate infimum is meaningful (classical ratios return an
//! infinite sentinel for it).

use crate::error::{Error, Result};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A nonnegative scalar stored as its natural logarithm.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LogVal {
    ln: f64,
}

impl LogVal {
    /// Wraps a plain positive value. Zero and negatives are rejected;
    /// use [`LogVal::zero`] to represent an exact zero deliberately.
    pub fn from_value(v: f64) -> Result<Self> {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::domain(format!(
                "LogVal::from_value requires a finite positive value, got {v}"
            )));
        }
        Ok(LogVal { ln: v.ln() })
    }

    /// Wraps a value given directly as `ln v`. Any finite `f64` is valid;
    /// `-inf` encodes zero. `NaN` and `+inf` are rejected.
    pub fn from_ln(ln: f64) -> Result<Self> {
        if ln.is_nan() || ln == f64::INFINITY {
            return Err(Error::domain(format!(
                "LogVal::from_ln requires a finite log or -inf, got {ln}"
            )));
        }
        Ok(LogVal { ln })
    }

    /// Exact zero (log is `-inf`).
    pub fn zero() -> Self {
        LogVal {
            ln: f64::NEG_INFINITY,
        }
    }

    pub fn one() -> Self {
        LogVal { ln: 0.0 }
    }

    /// The stored logarithm.
    pub fn ln(self) -> f64 {
        self.ln
    }

    /// The represented value. May underflow to `0.0` or overflow to `inf`;
    /// callers that care about extreme scales must stay in the log domain.
    pub fn value(self) -> f64 {
        self.ln.exp()
    }

    pub fn is_zero(self) -> bool {
        self.ln == f64::NEG_INFINITY
    }
}

/// Serialized with an explicit `log` key so a reader can never mistake a
/// log-domain number for a plain one: `{"log": -2980.958}`.
impl Serialize for LogVal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("LogVal", 1)?;
        s.serialize_field("log", &self.ln)?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for LogVal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            log: f64,
        }
        let r = Repr::deserialize(deserializer)?;
        LogVal::from_ln(r.log).map_err(serde::de::Error::custom)
    }
}

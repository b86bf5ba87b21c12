//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
///
/// Dyadic rationals with small denominators are represented exactly by both,
/// which is what the tent-map grids rely on.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Display
    + Debug
    + LowerExp
    + FromStr
    + Sum
    + Send
    + Sync
    + serde::Serialize
    + 'static
{
    /// Converts an `f64` literal. Panics only if the target cannot represent
    /// finite `f64` values at all, which never happens for `f32`/`f64`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("scalar conversion from f64")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("scalar conversion from usize")
    }

    /// Default absolute tolerance for metric-value comparisons.
    fn metric_tol() -> Self {
        Self::lit(1e-9)
    }

    /// Default absolute tolerance for modulus audits.
    fn audit_tol() -> Self {
        Self::lit(1e-12)
    }
}

impl Scalar for f32 {
    fn metric_tol() -> Self {
        1e-5
    }

    fn audit_tol() -> Self {
        1e-6
    }
}

impl Scalar for f64 {}

/// `a <= b` up to an absolute tolerance.
#[inline]
pub fn le_tol<S: Scalar>(a: S, b: S, tol: S) -> bool {
    a <= b + tol
}

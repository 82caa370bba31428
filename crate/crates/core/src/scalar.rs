//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All economic quantities (bundle coordinates, utilities, prices, masses) are
//! stored as a [`Scalar`]. The tolerances used by the demand layer scale with
//! the precision of the underlying float, so the same code runs on `f32` for
//! quick exploration and on `f64` for certificates.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Absolute slack on budget inequalities `<p, x> <= <p, w>`.
    fn budget_eps() -> Self;
    /// Relative slack on utility comparisons (scaled by the utility span).
    fn util_eps() -> Self;
    /// Slack for identities that hold up to rounding only (probability sums,
    /// mass conservation).
    fn exact_eps() -> Self;

    #[inline]
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable")
    }
}

impl Scalar for f64 {
    fn budget_eps() -> Self {
        1e-9
    }
    fn util_eps() -> Self {
        1e-9
    }
    fn exact_eps() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    fn budget_eps() -> Self {
        1e-4
    }
    fn util_eps() -> Self {
        1e-4
    }
    fn exact_eps() -> Self {
        1e-5
    }
}

/// `<a, b>` for equal-length slices.
#[inline]
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm2<S: Scalar>(v: &[S]) -> S {
    dot(v, v).sqrt()
}

/// Euclidean norm of the positive part `max(v, 0)`.
#[inline]
pub fn positive_part_norm<S: Scalar>(v: &[S]) -> S {
    v.iter()
        .map(|&x| if x > S::zero() { x * x } else { S::zero() })
        .sum::<S>()
        .sqrt()
}

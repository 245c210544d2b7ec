//! Scalar abstraction shared by every numerical module.
//!
//! All model, feature, operator and fixed-point code is written against
//! [`Real`], so the same routines run in `f64` (the default used by the
//! experiment harness) or `f32`.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the solvers and learners.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + LowerExp + Send + Sync + 'static
{
    /// Tolerance for probability-vector checks (row sums, simplex membership).
    fn prob_tol() -> Self;

    /// Relative tolerance used by rank and conditioning checks.
    fn rank_tol() -> Self;

    /// Relative residual accepted from a direct linear solve.
    fn solve_tol() -> Self;

    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts an index or count.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn prob_tol() -> Self {
        1e-12
    }

    fn rank_tol() -> Self {
        1e-10
    }

    fn solve_tol() -> Self {
        1e-10
    }
}

impl Real for f32 {
    fn prob_tol() -> Self {
        1e-5
    }

    fn rank_tol() -> Self {
        1e-5
    }

    fn solve_tol() -> Self {
        1e-4
    }
}

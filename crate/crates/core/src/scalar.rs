//! The floating-point scalar the solver stack is generic over.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar used throughout the crate: `f64` for production use, `f32`
/// for smoke-testing the generic code paths.
///
/// Tolerances live here because their sensible magnitude depends on the
/// precision of the type.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    /// Primal feasibility tolerance for linear rows and polynomial constraints.
    fn feas_tol() -> Self;
    /// Reduced-cost (dual feasibility) tolerance of the simplex.
    fn dual_tol() -> Self;
    /// Smallest pivot magnitude the simplex accepts.
    fn pivot_tol() -> Self;
    /// Threshold under which coefficients are treated as zero.
    fn zero_tol() -> Self;
    /// Integrality tolerance.
    fn int_tol() -> Self;
    /// Relative outward rounding applied by interval arithmetic.
    fn round_eps() -> Self;
}

impl Scalar for f64 {
    fn lit(v: f64) -> Self {
        v
    }
    fn feas_tol() -> Self {
        1e-7
    }
    fn dual_tol() -> Self {
        1e-9
    }
    fn pivot_tol() -> Self {
        1e-10
    }
    fn zero_tol() -> Self {
        1e-12
    }
    fn int_tol() -> Self {
        1e-6
    }
    fn round_eps() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    fn feas_tol() -> Self {
        1e-4
    }
    fn dual_tol() -> Self {
        1e-5
    }
    fn pivot_tol() -> Self {
        1e-6
    }
    fn zero_tol() -> Self {
        1e-7
    }
    fn int_tol() -> Self {
        1e-4
    }
    fn round_eps() -> Self {
        1e-6
    }
}

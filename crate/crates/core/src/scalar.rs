//! Scalar traits the rest of the crate is generic over.

use std::fmt::{Debug, Display};

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, NumAssign, Signed, ToPrimitive};

/// Floating point: `f32` or `f64`. Used for everything that touches a state vector.
pub trait Real:
    Float + FromPrimitive + NumAssign + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; all literals in the crate go through this.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Real type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Coupling values of a classical Ising/LHZ problem.
///
/// Floats and exact rationals both qualify, so the classical oracles can be run
/// without rounding (the uniform antiferromagnet bound is exactly 1/6).
pub trait Coupling: Clone + Num + Signed + PartialOrd + ToPrimitive + Debug + Send + Sync + 'static {
    /// The value `num / den`.
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Largest difference between two energies of magnitude `scale` that still
    /// counts as a tie. Zero for exact types.
    fn tie_tolerance(scale: &Self) -> Self;
}

impl Coupling for f32 {
    fn from_ratio(num: i64, den: i64) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn tie_tolerance(scale: &Self) -> Self {
        1e-5 * scale.abs().max(1.0)
    }
}

impl Coupling for f64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn tie_tolerance(scale: &Self) -> Self {
        1e-12 * scale.abs().max(1.0)
    }
}

impl Coupling for Ratio<i64> {
    fn from_ratio(num: i64, den: i64) -> Self {
        Ratio::new(num, den)
    }

    fn tie_tolerance(_: &Self) -> Self {
        Ratio::from_integer(0)
    }
}

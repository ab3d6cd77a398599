//! Scalar abstraction shared by the statevector engine and the observable builders.

use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real field the engine is generic over (`f32` or `f64`).
///
/// The two tolerance constants are the precision-appropriate stand-ins for
/// "exact algebraic identity" and "composed analytic result" checks.
pub trait Real:
    'static
    + Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
{
    /// Tolerance for identities such as unitarity, idempotence, unit norm.
    const IDENTITY_TOL: f64;
    /// Tolerance for results built out of several floating-point steps.
    const COMPOSED_TOL: f64;

    /// Converts an `f64` literal. Panics only for values the type cannot hold.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn identity_tol() -> Self {
        Self::lit(Self::IDENTITY_TOL)
    }

    fn composed_tol() -> Self {
        Self::lit(Self::COMPOSED_TOL)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    const IDENTITY_TOL: f64 = 1e-12;
    const COMPOSED_TOL: f64 = 1e-9;
}

impl Real for f32 {
    const IDENTITY_TOL: f64 = 1e-5;
    const COMPOSED_TOL: f64 = 1e-4;
}

pub type C<T> = Complex<T>;

#[inline]
pub fn c<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline]
pub fn re<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}

#[inline]
pub fn zero<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub fn one<T: Real>() -> C<T> {
    Complex::new(T::one(), T::zero())
}

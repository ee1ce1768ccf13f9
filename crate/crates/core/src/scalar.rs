//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real field used for atoms, weights, costs and distances.
///
/// Implemented for `f32` and `f64`. Everything in the crate is generic over
/// this trait; the crate root exposes `f64` aliases for the common case.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only if the literal is not representable,
    /// which cannot happen for finite literals with `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// A tolerance of `base`, widened so it never drops below a few ulps of 1.
    ///
    /// Tolerances in this crate are written against `f64`. For `f32` they are
    /// floored at `64·ε` so the same checks remain meaningful.
    #[inline]
    fn tol(base: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(64.0);
        let b = Self::lit(base);
        if b > floor {
            b
        } else {
            floor
        }
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).unwrap_or_else(Self::infinity)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `2^k` in the scalar type.
#[inline]
pub(crate) fn pow2<T: Real>(k: i32) -> T {
    T::lit(2.0).powi(k)
}

/// Squared Euclidean distance between two equal-length points.
#[inline]
pub(crate) fn sq_dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .fold(T::zero(), |acc, v| acc + v)
}

/// `‖a−b‖^p`; uses the squared norm directly when `p = 2` so that cost
/// evaluation stays exact for the common quadratic case.
#[inline]
pub(crate) fn dist_pow<T: Real>(a: &[T], b: &[T], p: T) -> T {
    let sq = sq_dist(a, b);
    if p == T::lit(2.0) {
        sq
    } else {
        sq.sqrt().powf(p)
    }
}

/// `‖v‖^p` for a displacement vector.
#[inline]
pub(crate) fn norm_pow<T: Real>(v: &[T], p: T) -> T {
    let sq = v.iter().fold(T::zero(), |acc, &x| acc + x * x);
    if p == T::lit(2.0) {
        sq
    } else {
        sq.sqrt().powf(p)
    }
}

/// Inverse of `norm_pow` applied to an accumulated cost.
#[inline]
pub(crate) fn root<T: Real>(value: T, p: T) -> T {
    if value <= T::zero() {
        T::zero()
    } else if p == T::lit(2.0) {
        value.sqrt()
    } else if p == T::one() {
        value
    } else {
        value.powf(p.recip())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_floor_for_f32() {
        assert_eq!(<f64 as Real>::tol(1e-9), 1e-9);
        assert!(<f32 as Real>::tol(1e-12) > 1e-12);
        assert!(<f32 as Real>::tol(1e-12) < 1e-4);
    }

    #[test]
    fn dist_pow_matches_definition() {
        let a = [0.0, 0.0];
        let b = [3.0, 4.0];
        assert_eq!(dist_pow(&a, &b, 2.0), 25.0);
        assert!((dist_pow(&a, &b, 1.0) - 5.0_f64).abs() < 1e-15);
        assert!((dist_pow(&a, &b, 3.0) - 125.0_f64).abs() < 1e-12);
        assert_eq!(root(25.0, 2.0), 5.0);
    }
}

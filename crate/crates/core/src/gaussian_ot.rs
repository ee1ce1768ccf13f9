//! Closed-form quadratic transport between one-dimensional Gaussians.
//!
//! The optimal map from `N(m0, s0)` to `N(m1, s1)` (variances `s0`, `s1`) is
//! affine, `x ↦ m1 + √(s1/s0)(x − m0)`, so differences, sums and geodesics all
//! stay inside the Gaussian family and reduce to arithmetic on parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::GaussianMeasure;
use crate::scalar::Real;

/// `ψ(x) = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct AffineMap<T> {
    pub slope: T,
    pub intercept: T,
}

impl<T: Real> AffineMap<T> {
    pub fn new(slope: T, intercept: T) -> Self {
        Self { slope, intercept }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.slope == T::zero() && self.intercept == T::zero()
    }

    pub fn apply(&self, x: T) -> T {
        self.slope * x + self.intercept
    }

    /// Lipschitz constant of `I + ψ`.
    pub fn pushforward_lipschitz(&self) -> T {
        (T::one() + self.slope).abs()
    }
}

impl<T: Real> std::ops::Sub for AffineMap<T> {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        Self::new(self.slope - rhs.slope, self.intercept - rhs.intercept)
    }
}

/// `W_2` between two Gaussians.
pub fn gaussian_w2<T: Real>(mu0: &GaussianMeasure<T>, mu1: &GaussianMeasure<T>) -> T {
    let dm = mu0.mean() - mu1.mean();
    let ds = mu0.std() - mu1.std();
    (dm * dm + ds * ds).sqrt()
}

/// `nu ⊖ mu`: the optimal map from `mu` to `nu` minus the identity.
pub fn gaussian_ominus<T: Real>(nu: &GaussianMeasure<T>, mu: &GaussianMeasure<T>) -> AffineMap<T> {
    let ratio = (nu.variance() / mu.variance()).sqrt();
    AffineMap::new(ratio - T::one(), nu.mean() - ratio * mu.mean())
}

/// `mu ⊕ ψ = (I + ψ)_# mu`. Rejects slopes `≤ −1`.
pub fn gaussian_oplus<T: Real>(
    mu: &GaussianMeasure<T>,
    psi: &AffineMap<T>,
) -> Result<GaussianMeasure<T>> {
    let scale = psi.slope + T::one();
    if !(scale > T::zero()) {
        return Err(Error::DegenerateMap {
            slope: psi.slope.as_f64(),
        });
    }
    GaussianMeasure::new(psi.intercept + mu.mean() * scale, mu.variance() * scale * scale)
}

/// Point at parameter `t ∈ [0, 1]` on the geodesic from `mu0` to `mu1`.
pub fn gaussian_mccann<T: Real>(
    mu0: &GaussianMeasure<T>,
    mu1: &GaussianMeasure<T>,
    t: T,
) -> Result<GaussianMeasure<T>> {
    check_unit_interval(t)?;
    if t == T::zero() {
        return Ok(*mu0);
    }
    if t == T::one() {
        return Ok(*mu1);
    }
    let mean = (T::one() - t) * mu0.mean() + t * mu1.mean();
    let factor = T::one() + t * ((mu1.variance() / mu0.variance()).sqrt() - T::one());
    GaussianMeasure::new(mean, factor * factor * mu0.variance())
}

pub(crate) fn check_unit_interval<T: Real>(t: T) -> Result<()> {
    if !(t >= T::zero() && t <= T::one()) {
        return Err(Error::BadParameter(format!("interpolation parameter {t} outside [0, 1]")));
    }
    Ok(())
}

/// `‖ψ‖_{L²(mu)} = √((A·m + B)² + A²σ)`. Only `p = 2` has a closed form.
pub fn affine_lp_norm<T: Real>(psi: &AffineMap<T>, mu: &GaussianMeasure<T>, p: T) -> Result<T> {
    require_quadratic(p)?;
    let shift = psi.slope * mu.mean() + psi.intercept;
    Ok((shift * shift + psi.slope * psi.slope * mu.variance()).sqrt())
}

pub(crate) fn require_quadratic<T: Real>(p: T) -> Result<()> {
    if p != T::lit(2.0) {
        return Err(Error::UnsupportedExponent(p.as_f64()));
    }
    Ok(())
}

//! Synthetic sequences: smooth, noisy and discontinuous Gaussian curves, the
//! weighted family between a curve and its endpoint geodesic, and point clouds
//! advected by the field of an electric dipole.
//!
//! Randomness comes from `ChaCha8Rng` (`rand_chacha` 0.9) seeded with
//! `seed_from_u64`, and normal draws from `rand_distr` 0.5, so a seed
//! reproduces the same sequence on every platform.

mod dipole;
mod gaussian_curve;

pub use dipole::{dipole_field, simulate_dipole, simulate_particles, DipoleSpec, CHARGE_RADIUS};
pub use gaussian_curve::{
    gen_gaussian_curve, gen_gaussian_curve_with_stats, gen_weighted_family, CurveOutput,
    GaussianCurveSpec, JumpSpec, NoiseSpec, MIN_VARIANCE,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian_ot::gaussian_mccann;
use crate::measures::{default_levels, GaussianMeasure, MeasureSequence};
use crate::scalar::Real;

/// Variances are clamped from below at this value.
pub const MIN_VARIANCE: f64 = 1e-6;

/// Independent perturbations of every interior sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct NoiseSpec<T> {
    /// Standard deviation of the additive noise on the mean.
    pub mean_sigma: T,
    /// Standard deviation of the additive noise on the variance.
    pub var_sigma: T,
    /// Scale the noise by `sin(πt)` so it fades out towards the endpoints.
    #[serde(default = "yes")]
    pub taper: bool,
}

fn yes() -> bool {
    true
}

/// Multiplies the variances with `t ∈ [1/3, 2/3]` by `variance_scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct JumpSpec<T> {
    pub variance_scale: T,
}

/// Parameters of a synthetic Gaussian curve sampled at `t_i = i/(n−1)`.
///
/// Without bump, noise and jump the samples lie on the geodesic between the
/// endpoints. The bump adds `a·sin²(πt)` to the variance and the cubic
/// `a·(m1 − m0)·t(1 − t)(1 − 2t)` to the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GaussianCurveSpec<T> {
    pub endpoints: (GaussianMeasure<T>, GaussianMeasure<T>),
    pub n_samples: usize,
    #[serde(default = "T::zero")]
    pub bump_amplitude: T,
    #[serde(default)]
    pub noise: Option<NoiseSpec<T>>,
    #[serde(default)]
    pub jump: Option<JumpSpec<T>>,
    #[serde(default)]
    pub rng_seed: u64,
}

impl<T: Real> Default for GaussianCurveSpec<T> {
    fn default() -> Self {
        Self {
            endpoints: (
                GaussianMeasure::new(T::zero(), T::lit(1.884)).expect("valid"),
                GaussianMeasure::new(T::one(), T::lit(0.1084)).expect("valid"),
            ),
            n_samples: 65,
            bump_amplitude: T::zero(),
            noise: None,
            jump: None,
            rng_seed: 0,
        }
    }
}

impl<T: Real> GaussianCurveSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 3 {
            return Err(Error::BadSpec(format!("n_samples = {} < 3", self.n_samples)));
        }
        for e in [&self.endpoints.0, &self.endpoints.1] {
            // Deserialized endpoints have not been through the constructor.
            GaussianMeasure::new(e.mean(), e.variance())
                .map_err(|err| Error::BadSpec(format!("endpoint: {err}")))?;
        }
        if !self.bump_amplitude.is_finite() {
            return Err(Error::BadSpec("bump amplitude must be finite".into()));
        }
        if let Some(n) = &self.noise {
            let ok = |x: T| x.is_finite() && x >= T::zero();
            if !ok(n.mean_sigma) || !ok(n.var_sigma) {
                return Err(Error::BadSpec("noise levels must be finite and >= 0".into()));
            }
        }
        if let Some(j) = &self.jump {
            if !(j.variance_scale > T::zero()) || !j.variance_scale.is_finite() {
                return Err(Error::BadSpec("jump variance scale must be finite and > 0".into()));
            }
        }
        Ok(())
    }
}

/// A generated curve plus the number of variances that had to be clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveOutput<T> {
    pub sequence: MeasureSequence<T>,
    pub clamped: usize,
}

/// Samples the curve described by `spec`.
pub fn gen_gaussian_curve<T: Real>(spec: &GaussianCurveSpec<T>) -> Result<MeasureSequence<T>> {
    Ok(gen_gaussian_curve_with_stats(spec)?.sequence)
}

pub fn gen_gaussian_curve_with_stats<T: Real>(spec: &GaussianCurveSpec<T>) -> Result<CurveOutput<T>> {
    spec.validate()?;
    let (mu0, mu1) = spec.endpoints;
    let n = spec.n_samples;
    let last = n - 1;
    let pi = T::lit(std::f64::consts::PI);
    let third = T::one() / T::lit(3.0);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let std_normal = Normal::new(0.0f64, 1.0).expect("unit normal");
    let mut clamped = 0;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if i == 0 {
            out.push(mu0);
            continue;
        }
        if i == last {
            out.push(mu1);
            continue;
        }
        let t = T::from_usize_lossy(i) / T::from_usize_lossy(last);
        let geo = gaussian_mccann(&mu0, &mu1, t)?;
        let a = spec.bump_amplitude;
        let s = (pi * t).sin();
        let mut mean =
            geo.mean() + a * (mu1.mean() - mu0.mean()) * t * (T::one() - t) * (T::one() - t - t);
        let mut var = geo.variance() + a * s * s;
        if let Some(noise) = &spec.noise {
            let scale = if noise.taper { s } else { T::one() };
            let dm = T::lit(std_normal.sample(&mut rng));
            let dv = T::lit(std_normal.sample(&mut rng));
            mean = mean + noise.mean_sigma * scale * dm;
            var = var + noise.var_sigma * scale * dv;
        }
        if let Some(jump) = &spec.jump {
            if t >= third && t <= T::one() - third {
                var = var * jump.variance_scale;
            }
        }
        let floor = T::lit(MIN_VARIANCE);
        if !(var >= floor) {
            var = floor;
            clamped += 1;
        }
        out.push(GaussianMeasure::new(mean, var)?);
    }
    if clamped > 0 {
        log::warn!("clamped {clamped} variances to {MIN_VARIANCE}");
    }
    let sequence = MeasureSequence::gaussians(out, default_levels(n))?;
    Ok(CurveOutput { sequence, clamped })
}

/// `μ^[k]`: parameter-wise convex combination of the endpoint geodesic of
/// `smooth` (weight `1 − k`) and `smooth` itself (weight `k`), applied to the
/// means and to the standard deviations.
pub fn gen_weighted_family<T: Real>(smooth: &MeasureSequence<T>, k: T) -> Result<MeasureSequence<T>> {
    if !(k >= T::zero() && k <= T::one()) {
        return Err(Error::BadParameter(format!("family parameter {k} outside [0, 1]")));
    }
    let g = smooth
        .gaussian_elements()
        .ok_or_else(|| Error::BadParameter("the weighted family needs a Gaussian sequence".into()))?;
    if k == T::one() {
        return Ok(smooth.clone());
    }
    let last = g.len() - 1;
    let (a, b) = (g[0], g[last]);
    let out = g
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let t = T::from_usize_lossy(i) / T::from_usize_lossy(last);
            let geo = gaussian_mccann(&a, &b, t)?;
            if k == T::zero() {
                return Ok(geo);
            }
            let mean = (T::one() - k) * geo.mean() + k * x.mean();
            let std = (T::one() - k) * geo.std() + k * x.std();
            GaussianMeasure::from_std(mean, std)
        })
        .collect::<Result<Vec<_>>>()?;
    MeasureSequence::new(
        out.into_iter().map(Into::into).collect(),
        smooth.level(),
        smooth.grid_origin(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_curve_is_the_geodesic() {
        let spec = GaussianCurveSpec::<f64>::default();
        let seq = gen_gaussian_curve(&spec).unwrap();
        assert_eq!(seq.len(), 65);
        assert_eq!(seq.level(), 6);
        let g = seq.gaussian_elements().unwrap();
        let mid = gaussian_mccann(&g[0], &g[64], 0.5).unwrap();
        assert!((g[32].mean() - mid.mean()).abs() < 1e-15);
        assert!((g[32].variance() - mid.variance()).abs() < 1e-15);
    }

    #[test]
    fn endpoints_exact_and_seed_deterministic() {
        let spec = GaussianCurveSpec {
            bump_amplitude: 0.5,
            noise: Some(NoiseSpec {
                mean_sigma: 0.05,
                var_sigma: 0.05,
                taper: false,
            }),
            rng_seed: 9,
            ..GaussianCurveSpec::<f64>::default()
        };
        let a = gen_gaussian_curve(&spec).unwrap();
        let b = gen_gaussian_curve(&spec).unwrap();
        assert_eq!(a, b);
        let g = a.gaussian_elements().unwrap();
        assert_eq!(g[0], spec.endpoints.0);
        assert_eq!(g[64], spec.endpoints.1);
    }

    #[test]
    fn crushed_variances_are_clamped_and_counted() {
        let spec = GaussianCurveSpec {
            jump: Some(JumpSpec {
                variance_scale: 1e-9,
            }),
            ..GaussianCurveSpec::<f64>::default()
        };
        let out = gen_gaussian_curve_with_stats(&spec).unwrap();
        assert!(out.clamped > 0);
    }

    #[test]
    fn bad_specs_rejected() {
        let spec = GaussianCurveSpec {
            n_samples: 2,
            ..GaussianCurveSpec::<f64>::default()
        };
        assert!(matches!(gen_gaussian_curve(&spec), Err(Error::BadSpec(_))));
    }

    #[test]
    fn family_endpoints() {
        let spec = GaussianCurveSpec {
            bump_amplitude: 0.8,
            ..GaussianCurveSpec::<f64>::default()
        };
        let smooth = gen_gaussian_curve(&spec).unwrap();
        assert_eq!(gen_weighted_family(&smooth, 1.0).unwrap(), smooth);
        let geo = gen_weighted_family(&smooth, 0.0).unwrap();
        let plain = gen_gaussian_curve(&GaussianCurveSpec::default()).unwrap();
        assert_eq!(geo, plain);
        assert!(gen_weighted_family(&smooth, 1.5).is_err());
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{default_levels, DiscreteMeasure, MeasureSequence};
use crate::scalar::Real;

/// Particles closer than this to a charge stop the simulation.
pub const CHARGE_RADIUS: f64 = 1e-3;

/// Particle cloud advected through the dipole field with explicit Euler steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DipoleSpec<T> {
    pub n_particles: usize,
    pub start_center: [T; 2],
    /// Half-width of the square the starting points are drawn from uniformly.
    pub start_spread: T,
    pub timestep: T,
    pub n_steps: usize,
    /// Standard deviation of the per-step, per-coordinate field noise.
    #[serde(default = "T::zero")]
    pub field_noise_sigma: T,
    #[serde(default)]
    pub rng_seed: u64,
}

impl<T: Real> Default for DipoleSpec<T> {
    fn default() -> Self {
        Self {
            n_particles: 10,
            start_center: [T::lit(-2.5), T::one()],
            start_spread: T::lit(0.5),
            timestep: T::lit(0.15),
            n_steps: 640,
            field_noise_sigma: T::zero(),
            rng_seed: 0,
        }
    }
}

impl<T: Real> DipoleSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles == 0 {
            return Err(Error::BadSpec("need at least one particle".into()));
        }
        if !(self.timestep > T::zero()) || !self.timestep.is_finite() {
            return Err(Error::BadSpec(format!("timestep {} must be > 0", self.timestep)));
        }
        if self.n_steps == 0 {
            return Err(Error::BadSpec("need at least one step".into()));
        }
        if !(self.start_spread >= T::zero()) || !self.start_spread.is_finite() {
            return Err(Error::BadSpec("start spread must be finite and >= 0".into()));
        }
        if self.start_center.iter().any(|x| !x.is_finite()) {
            return Err(Error::BadSpec("start center must be finite".into()));
        }
        if !(self.field_noise_sigma >= T::zero()) || !self.field_noise_sigma.is_finite() {
            return Err(Error::BadSpec("noise sigma must be finite and >= 0".into()));
        }
        Ok(())
    }
}

fn charges<T: Real>() -> [[T; 2]; 2] {
    [[-T::one(), T::zero()], [T::one(), T::zero()]]
}

/// Field of a unit positive charge at `(−1, 0)` and a unit negative charge at
/// `(1, 0)`: `r₊^{−3/2}(x+1, y) − r₋^{−3/2}(x−1, y)` with `r± = (x±1)² + y²`.
pub fn dipole_field<T: Real>(x: T, y: T) -> Result<[T; 2]> {
    let rp = (x + T::one()) * (x + T::one()) + y * y;
    let rm = (x - T::one()) * (x - T::one()) + y * y;
    if rp == T::zero() || rm == T::zero() {
        return Err(Error::SingularPoint {
            x: x.as_f64(),
            y: y.as_f64(),
        });
    }
    let three_halves = T::lit(1.5);
    let (ap, am) = (rp.powf(-three_halves), rm.powf(-three_halves));
    Ok([ap * (x + T::one()) - am * (x - T::one()), ap * y - am * y])
}

/// Simulates the dipole experiment: one uniform measure over the particle
/// positions per step, `n_steps + 1` measures in total.
pub fn simulate_dipole<T: Real>(spec: &DipoleSpec<T>) -> Result<MeasureSequence<T>> {
    simulate_particles(spec, dipole_field, &charges())
}

/// Euler integration of `spec`'s particles through an arbitrary field.
/// Starting points within [`CHARGE_RADIUS`] of a point in `obstacles` are
/// redrawn; reaching one later is an error.
pub fn simulate_particles<T, F>(spec: &DipoleSpec<T>, field: F, obstacles: &[[T; 2]]) -> Result<MeasureSequence<T>>
where
    T: Real,
    F: Fn(T, T) -> Result<[T; 2]>,
{
    spec.validate()?;
    let radius_sq = T::lit(CHARGE_RADIUS * CHARGE_RADIUS);
    let near = |p: &[T; 2]| {
        obstacles.iter().any(|c| {
            let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
            dx * dx + dy * dy <= radius_sq
        })
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let half = spec.start_spread.as_f64();
    let mut pos: Vec<[T; 2]> = Vec::with_capacity(spec.n_particles);
    while pos.len() < spec.n_particles {
        let p = [
            spec.start_center[0] + T::lit(rng.random_range(-1.0..=1.0) * half),
            spec.start_center[1] + T::lit(rng.random_range(-1.0..=1.0) * half),
        ];
        if !near(&p) {
            pos.push(p);
        }
    }
    let noise = (spec.field_noise_sigma > T::zero())
        .then(|| Normal::new(0.0f64, spec.field_noise_sigma.as_f64()).expect("sigma checked"));

    let snapshot = |pos: &[[T; 2]]| {
        let atoms = pos.iter().map(|p| p.to_vec()).collect();
        DiscreteMeasure::uniform(atoms)
    };
    let mut out = Vec::with_capacity(spec.n_steps + 1);
    out.push(snapshot(&pos)?);
    for step in 1..=spec.n_steps {
        for (k, p) in pos.iter_mut().enumerate() {
            let mut v = field(p[0], p[1])?;
            if let Some(n) = &noise {
                v[0] = v[0] + T::lit(n.sample(&mut rng));
                v[1] = v[1] + T::lit(n.sample(&mut rng));
            }
            p[0] = p[0] + spec.timestep * v[0];
            p[1] = p[1] + spec.timestep * v[1];
            if !p[0].is_finite() || !p[1].is_finite() || near(p) {
                return Err(Error::ParticleHitCharge { particle: k, step });
            }
        }
        out.push(snapshot(&pos)?);
    }
    let n = out.len();
    MeasureSequence::discretes(out, default_levels(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_at_origin_and_axis() {
        assert_eq!(dipole_field(0.0, 0.0).unwrap(), [2.0, 0.0]);
        let y: f64 = 0.7;
        let v = dipole_field(0.0, y).unwrap();
        assert!((v[0] - 2.0 * (1.0 + y * y).powf(-1.5)).abs() < 1e-15);
        assert_eq!(v[1], 0.0);
    }

    #[test]
    fn field_vanishes_far_away() {
        let v = dipole_field(1e3f64, 0.0).unwrap();
        assert!((v[0] * v[0] + v[1] * v[1]).sqrt() < 1e-5);
    }

    #[test]
    fn field_singular_at_charges() {
        assert!(matches!(dipole_field(1.0, 0.0), Err(Error::SingularPoint { .. })));
        assert!(matches!(dipole_field(-1.0, 0.0), Err(Error::SingularPoint { .. })));
    }

    #[test]
    fn default_run_shape() {
        let seq = simulate_dipole(&DipoleSpec::<f64>::default()).unwrap();
        assert_eq!(seq.len(), 641);
        assert_eq!(seq.level(), 6);
        assert_eq!(seq.elements()[0].as_discrete().unwrap().len(), 10);
    }

    #[test]
    fn zero_field_is_constant() {
        let spec = DipoleSpec::<f64> {
            n_steps: 16,
            ..DipoleSpec::default()
        };
        let seq = simulate_particles(&spec, |_, _| Ok([0.0, 0.0]), &[]).unwrap();
        assert!(seq.elements().iter().all(|m| m == &seq.elements()[0]));
    }

    #[test]
    fn particle_hitting_a_sink_is_reported() {
        let spec = DipoleSpec::<f64> {
            n_particles: 1,
            start_center: [0.0, 0.0],
            start_spread: 0.0,
            timestep: 1.0,
            n_steps: 4,
            ..DipoleSpec::default()
        };
        let sink = |x: f64, y: f64| Ok([1.0 - x, -y]);
        assert!(matches!(
            simulate_particles(&spec, sink, &[[1.0, 0.0]]),
            Err(Error::ParticleHitCharge { .. })
        ));
    }
}

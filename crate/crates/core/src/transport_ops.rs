//! Difference (`⊖`), sum (`⊕`) and geodesic averaging of measures, plus norms
//! of the resulting details. Gaussian inputs use the closed forms from
//! [`crate::gaussian_ot`]; discrete inputs go through an optimal plan.

use rayon::prelude::*;

use crate::discrete_ot::{solve_kantorovich, wasserstein_distance, Coupling, MARGINAL_TOL};
use crate::error::{Error, Result};
use crate::gaussian_ot::{
    affine_lp_norm, check_unit_interval, gaussian_mccann, gaussian_ominus, gaussian_oplus,
    gaussian_w2, require_quadratic, AffineMap,
};
use crate::measures::{DiscreteMeasure, Measure, MeasureSequence};
use crate::scalar::{norm_pow, pow2, root, Real};

/// Distances below this make `⊖` return [`Detail::Zero`].
pub const ZERO_DETAIL_TOL: f64 = 1e-12;

/// Displacement field `d_ij = y_j − x_i` together with the plan it is defined on.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportDetail<T> {
    dim: usize,
    displacements: Vec<T>,
    plan: Coupling<T>,
}

impl<T: Real> TransportDetail<T> {
    /// `displacements` is a flat `rows × cols × dim` buffer.
    pub fn new(dim: usize, displacements: Vec<T>, plan: Coupling<T>) -> Result<Self> {
        if dim == 0 || displacements.len() != plan.rows() * plan.cols() * dim {
            return Err(Error::IncompatibleDetail(format!(
                "{} displacement coordinates for a {}x{} plan in dimension {dim}",
                displacements.len(),
                plan.rows(),
                plan.cols()
            )));
        }
        if displacements.iter().any(|x| !x.is_finite()) {
            return Err(Error::IncompatibleDetail("non-finite displacement".into()));
        }
        Ok(Self {
            dim,
            displacements,
            plan,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.plan.rows()
    }

    pub fn cols(&self) -> usize {
        self.plan.cols()
    }

    pub fn plan(&self) -> &Coupling<T> {
        &self.plan
    }

    pub fn displacements(&self) -> &[T] {
        &self.displacements
    }

    pub fn displacement(&self, i: usize, j: usize) -> &[T] {
        let k = (i * self.plan.cols() + j) * self.dim;
        &self.displacements[k..k + self.dim]
    }

    /// `(Σ λ_ij ‖d_ij‖^p)^{1/p}` with `p` the plan's cost exponent.
    pub fn norm(&self) -> T {
        let p = self.plan.cost_exponent();
        let s: T = self
            .plan
            .support()
            .map(|(i, j, w)| w * norm_pow(self.displacement(i, j), p))
            .sum();
        root(s, p)
    }
}

/// A detail coefficient: the output of `⊖`.
#[derive(Debug, Clone, PartialEq)]
pub enum Detail<T> {
    /// Identically zero; compatible with any base measure.
    Zero,
    /// Gaussian detail `x ↦ A x + B`.
    Affine(AffineMap<T>),
    /// Discrete detail.
    Transport(TransportDetail<T>),
}

impl<T: Real> Detail<T> {
    pub fn is_zero(&self) -> bool {
        matches!(self, Detail::Zero)
    }

    /// Replaces the detail by [`Detail::Zero`].
    pub fn clear(&mut self) {
        *self = Detail::Zero;
    }
}

/// Details of one refinement level, indexed like the level's sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailLayer<T> {
    pub level: u32,
    pub details: Vec<Detail<T>>,
}

/// Norm summary of a detail layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorms<T> {
    /// `Σ_k ‖ψ_k‖`.
    pub one: T,
    /// `max_k ‖ψ_k‖`.
    pub inf: T,
    pub per_index: Vec<T>,
}

fn kind_error() -> Error {
    Error::KindMismatch
}

/// `W_p(a, b)`. Gaussian pairs require `p = 2`.
pub fn distance<T: Real>(a: &Measure<T>, b: &Measure<T>, p: T) -> Result<T> {
    match (a, b) {
        (Measure::Gaussian(x), Measure::Gaussian(y)) => {
            require_quadratic(p)?;
            Ok(gaussian_w2(x, y))
        }
        (Measure::Discrete(x), Measure::Discrete(y)) => wasserstein_distance(x, y, p),
        _ => Err(kind_error()),
    }
}

/// `nu ⊖ mu`: the optimal displacement taking `mu` to `nu`.
pub fn ominus<T: Real>(nu: &Measure<T>, mu: &Measure<T>, p: T) -> Result<Detail<T>> {
    match (nu, mu) {
        (Measure::Gaussian(n), Measure::Gaussian(m)) => {
            require_quadratic(p)?;
            if gaussian_w2(n, m) < T::tol(ZERO_DETAIL_TOL) {
                return Ok(Detail::Zero);
            }
            Ok(Detail::Affine(gaussian_ominus(n, m)))
        }
        (Measure::Discrete(n), Measure::Discrete(m)) => discrete_ominus(n, m, p),
        _ => Err(kind_error()),
    }
}

fn discrete_ominus<T: Real>(
    nu: &DiscreteMeasure<T>,
    mu: &DiscreteMeasure<T>,
    p: T,
) -> Result<Detail<T>> {
    let (plan, cost) = solve_kantorovich(mu, nu, p)?;
    if cost.distance < T::tol(ZERO_DETAIL_TOL) {
        return Ok(Detail::Zero);
    }
    let dim = mu.dim();
    let mut disp = Vec::with_capacity(mu.len() * nu.len() * dim);
    for x in mu.atoms() {
        for y in nu.atoms() {
            disp.extend(y.iter().zip(x).map(|(&b, &a)| b - a));
        }
    }
    Ok(Detail::Transport(TransportDetail {
        dim,
        displacements: disp,
        plan,
    }))
}

/// `mu ⊕ ψ`: pushes `mu` forward along the detail.
///
/// Discrete output atoms are emitted column by column, so that
/// `mu ⊕ (nu ⊖ mu)` lists its atoms in `nu`'s order.
pub fn oplus<T: Real>(mu: &Measure<T>, psi: &Detail<T>) -> Result<Measure<T>> {
    match (mu, psi) {
        (_, Detail::Zero) => Ok(mu.clone()),
        (Measure::Gaussian(g), Detail::Affine(a)) => Ok(Measure::Gaussian(gaussian_oplus(g, a)?)),
        (Measure::Discrete(d), Detail::Transport(t)) => Ok(Measure::Discrete(discrete_oplus(d, t)?)),
        _ => Err(Error::IncompatibleDetail(format!(
            "detail cannot be applied to a {} measure",
            mu.kind()
        ))),
    }
}

fn check_compatible<T: Real>(mu: &DiscreteMeasure<T>, psi: &TransportDetail<T>) -> Result<()> {
    if psi.rows() != mu.len() || psi.dim != mu.dim() {
        return Err(Error::IncompatibleDetail(format!(
            "detail of shape {}x{} in dimension {} does not fit a measure with {} atoms in dimension {}",
            psi.rows(),
            psi.cols(),
            psi.dim,
            mu.len(),
            mu.dim()
        )));
    }
    let sums = psi.plan.row_sums();
    let tol = T::tol(MARGINAL_TOL);
    if let Some(i) = (0..mu.len()).find(|&i| (sums[i] - mu.weights()[i]).abs() > tol) {
        return Err(Error::IncompatibleDetail(format!(
            "plan row {i} carries mass {} but the atom has weight {}",
            sums[i],
            mu.weights()[i]
        )));
    }
    Ok(())
}

fn discrete_oplus<T: Real>(
    mu: &DiscreteMeasure<T>,
    psi: &TransportDetail<T>,
) -> Result<DiscreteMeasure<T>> {
    check_compatible(mu, psi)?;
    let dim = mu.dim();
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for j in 0..psi.cols() {
        for i in 0..psi.rows() {
            let w = psi.plan.get(i, j);
            if w > T::zero() {
                points.extend(mu.atom(i).iter().zip(psi.displacement(i, j)).map(|(&x, &d)| x + d));
                weights.push(w);
            }
        }
    }
    Ok(DiscreteMeasure::from_masses(dim, points, weights))
}

/// Point at parameter `t` on a `W_p` geodesic from `mu` to `nu`.
pub fn mccann_average<T: Real>(mu: &Measure<T>, nu: &Measure<T>, t: T, p: T) -> Result<Measure<T>> {
    match (mu, nu) {
        (Measure::Gaussian(a), Measure::Gaussian(b)) => {
            require_quadratic(p)?;
            Ok(Measure::Gaussian(gaussian_mccann(a, b, t)?))
        }
        (Measure::Discrete(a), Measure::Discrete(b)) => {
            check_unit_interval(t)?;
            if t == T::zero() {
                return Ok(mu.clone());
            }
            if t == T::one() {
                return Ok(nu.clone());
            }
            let (plan, _) = solve_kantorovich(a, b, p)?;
            Ok(Measure::Discrete(interpolate_along(a, b, &plan, t)?.measure))
        }
        _ => Err(kind_error()),
    }
}

/// Displacement interpolant of a plan together with the plans it induces
/// between the interpolant and each endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpolant<T> {
    pub measure: DiscreteMeasure<T>,
    /// Plan from the left endpoint to `measure`.
    pub from_source: Coupling<T>,
    /// Plan from `measure` to the right endpoint.
    pub to_target: Coupling<T>,
}

/// Interpolates along a given plan: mass `λ_ij` sits at `(1 − t)x_i + t y_j`.
pub fn interpolate_along<T: Real>(
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
    plan: &Coupling<T>,
    t: T,
) -> Result<Interpolant<T>> {
    check_unit_interval(t)?;
    if plan.rows() != mu.len() || plan.cols() != nu.len() || mu.dim() != nu.dim() {
        return Err(Error::IncompatibleDetail(format!(
            "{}x{} plan does not join measures with {} and {} atoms",
            plan.rows(),
            plan.cols(),
            mu.len(),
            nu.len()
        )));
    }
    let dim = mu.dim();
    let s = T::one() - t;
    let cells: Vec<(usize, usize, T)> = plan.support().collect();
    let mut points = Vec::with_capacity(cells.len() * dim);
    let mut weights = Vec::with_capacity(cells.len());
    for &(i, j, w) in &cells {
        points.extend(mu.atom(i).iter().zip(nu.atom(j)).map(|(&x, &y)| s * x + t * y));
        weights.push(w);
    }
    let (measure, slot) = DiscreteMeasure::from_masses_mapped(dim, points, weights);
    let k = measure.len();
    let p = plan.cost_exponent();
    let mut left = vec![T::zero(); mu.len() * k];
    let mut right = vec![T::zero(); k * nu.len()];
    for (c, &(i, j, w)) in cells.iter().enumerate() {
        let q = slot[c];
        left[i * k + q] = left[i * k + q] + w;
        right[q * nu.len() + j] = right[q * nu.len() + j] + w;
    }
    Ok(Interpolant {
        measure,
        from_source: Coupling::from_entries(mu.len(), k, left, p),
        to_target: Coupling::from_entries(k, nu.len(), right, p),
    })
}

/// `‖ψ‖_{L^p(mu)}`.
pub fn detail_norm<T: Real>(psi: &Detail<T>, mu: &Measure<T>, p: T) -> Result<T> {
    match (psi, mu) {
        (Detail::Zero, _) => Ok(T::zero()),
        (Detail::Affine(a), Measure::Gaussian(g)) => affine_lp_norm(a, g, p),
        (Detail::Transport(t), Measure::Discrete(d)) => {
            if t.rows() != d.len() || t.dim != d.dim() {
                return Err(Error::IncompatibleDetail(format!(
                    "detail with {} rows measured against {} atoms",
                    t.rows(),
                    d.len()
                )));
            }
            if t.plan.cost_exponent() != p {
                return Err(Error::BadParameter(format!(
                    "detail built for exponent {} measured with exponent {p}",
                    t.plan.cost_exponent()
                )));
            }
            Ok(t.norm())
        }
        _ => Err(Error::IncompatibleDetail(format!(
            "detail cannot be measured against a {} measure",
            mu.kind()
        ))),
    }
}

/// `‖ψ − ψ̃‖_{L^p(mu)}`. Transport details must share their plan shape; the
/// plan of `psi` (or of `psi_tilde`, if `psi` is zero) is used as the measure.
pub fn detail_difference_norm<T: Real>(
    psi: &Detail<T>,
    psi_tilde: &Detail<T>,
    mu: &Measure<T>,
    p: T,
) -> Result<T> {
    match (psi, psi_tilde) {
        (Detail::Zero, Detail::Zero) => Ok(T::zero()),
        (Detail::Zero, other) | (other, Detail::Zero) => detail_norm(other, mu, p),
        (Detail::Affine(a), Detail::Affine(b)) => detail_norm(&Detail::Affine(*a - *b), mu, p),
        (Detail::Transport(a), Detail::Transport(b)) => {
            if a.rows() != b.rows() || a.cols() != b.cols() || a.dim != b.dim {
                return Err(Error::IncompatibleDetail("detail shapes differ".into()));
            }
            let disp: Vec<T> = a
                .displacements
                .iter()
                .zip(&b.displacements)
                .map(|(&x, &y)| x - y)
                .collect();
            let diff = TransportDetail {
                dim: a.dim,
                displacements: disp,
                plan: a.plan.clone(),
            };
            detail_norm(&Detail::Transport(diff), mu, p)
        }
        _ => Err(kind_error()),
    }
}

/// Lipschitz estimate of `I + ψ` on the support of its base measure.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzEstimate<T> {
    pub constant: T,
    /// Atoms whose mass the plan splits; `I + ψ` is not a map there and they
    /// are excluded from the estimate.
    pub split_atoms: Vec<usize>,
}

/// Lipschitz constant of `I + ψ` as a map on `mu`. Zero details count as the
/// identity (constant 1). Discrete details use the largest difference quotient
/// over pairs of atoms that are sent to a single target.
pub fn pushforward_lipschitz<T: Real>(psi: &Detail<T>, mu: &Measure<T>) -> Result<LipschitzEstimate<T>> {
    match (psi, mu) {
        (Detail::Zero, _) => Ok(LipschitzEstimate {
            constant: T::one(),
            split_atoms: Vec::new(),
        }),
        (Detail::Affine(a), Measure::Gaussian(_)) => Ok(LipschitzEstimate {
            constant: a.pushforward_lipschitz(),
            split_atoms: Vec::new(),
        }),
        (Detail::Transport(t), Measure::Discrete(d)) => {
            check_compatible(d, t)?;
            let mut split = Vec::new();
            let mut images: Vec<(usize, Vec<T>)> = Vec::new();
            for i in 0..d.len() {
                let targets: Vec<usize> =
                    (0..t.cols()).filter(|&j| t.plan.get(i, j) > T::zero()).collect();
                if targets.len() == 1 {
                    let j = targets[0];
                    let y = d.atom(i).iter().zip(t.displacement(i, j)).map(|(&x, &v)| x + v).collect();
                    images.push((i, y));
                } else {
                    split.push(i);
                }
            }
            let mut constant = T::zero();
            for (a, (ia, ya)) in images.iter().enumerate() {
                for (ib, yb) in &images[a + 1..] {
                    let dx = crate::scalar::sq_dist(d.atom(*ia), d.atom(*ib)).sqrt();
                    let dy = crate::scalar::sq_dist(ya, yb).sqrt();
                    if dx > T::zero() {
                        constant = constant.max(dy / dx);
                    }
                }
            }
            Ok(LipschitzEstimate {
                constant,
                split_atoms: split,
            })
        }
        _ => Err(Error::IncompatibleDetail(format!(
            "detail cannot act on a {} measure",
            mu.kind()
        ))),
    }
}

/// `W_p` between consecutive elements, computed in parallel.
pub fn consecutive_distances<T: Real>(seq: &MeasureSequence<T>, p: T) -> Result<Vec<T>> {
    let e = seq.elements();
    (1..e.len())
        .into_par_iter()
        .map(|k| distance(&e[k - 1], &e[k], p))
        .collect()
}

/// `Δμ = max_k W_p(μ_k, μ_{k+1})`.
pub fn seq_delta<T: Real>(seq: &MeasureSequence<T>, p: T) -> Result<T> {
    if seq.len() < 2 {
        return Err(Error::TooShort {
            len: seq.len(),
            needed: 2,
        });
    }
    Ok(consecutive_distances(seq, p)?
        .into_iter()
        .fold(T::zero(), T::max))
}

/// Discrete velocity norms `W_p(μ_k, μ_{k+1}) · 2^level`.
pub fn discrete_velocity_norms<T: Real>(seq: &MeasureSequence<T>, p: T) -> Result<Vec<T>> {
    let scale = pow2::<T>(seq.level() as i32);
    Ok(consecutive_distances(seq, p)?
        .into_iter()
        .map(|d| d * scale)
        .collect())
}

/// Norms of every detail in `layer`, each measured against the matching
/// element of `base`.
pub fn layer_norms<T: Real>(layer: &DetailLayer<T>, base: &[Measure<T>], p: T) -> Result<LayerNorms<T>> {
    if layer.details.len() != base.len() {
        return Err(Error::Misaligned(format!(
            "{} details against {} base measures",
            layer.details.len(),
            base.len()
        )));
    }
    let per_index: Vec<T> = layer
        .details
        .par_iter()
        .zip(base.par_iter())
        .map(|(d, m)| detail_norm(d, m, p))
        .collect::<Result<_>>()?;
    let one = per_index.iter().copied().sum();
    let inf = per_index.iter().copied().fold(T::zero(), T::max);
    Ok(LayerNorms {
        one,
        inf,
        per_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::GaussianMeasure;

    fn g(m: f64, v: f64) -> Measure<f64> {
        Measure::Gaussian(GaussianMeasure::new(m, v).unwrap())
    }

    fn line(points: &[f64], w: &[f64]) -> Measure<f64> {
        Measure::Discrete(
            DiscreteMeasure::new(points.iter().map(|&x| vec![x]).collect(), w.to_vec()).unwrap(),
        )
    }

    #[test]
    fn discrete_round_trip_is_exact() {
        let mu = line(&[0.0, 1.0, 4.0], &[0.2, 0.5, 0.3]);
        let nu = line(&[0.5, 3.0], &[0.6, 0.4]);
        let psi = ominus(&nu, &mu, 2.0).unwrap();
        let back = oplus(&mu, &psi).unwrap();
        let (b, n) = (back.as_discrete().unwrap(), nu.as_discrete().unwrap());
        assert_eq!(b.points(), n.points());
        for (x, y) in b.weights().iter().zip(n.weights()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_measures_give_zero() {
        let mu = line(&[0.0, 1.0], &[0.5, 0.5]);
        assert!(ominus(&mu, &mu, 2.0).unwrap().is_zero());
        assert!(ominus(&g(1.0, 2.0), &g(1.0, 2.0), 2.0).unwrap().is_zero());
    }

    #[test]
    fn discrete_norm_equals_distance() {
        let mu = line(&[0.0, 1.0], &[0.5, 0.5]);
        let nu = line(&[2.0, 5.0], &[0.5, 0.5]);
        let psi = ominus(&nu, &mu, 2.0).unwrap();
        let n = detail_norm(&psi, &mu, 2.0).unwrap();
        let d = distance(&mu, &nu, 2.0).unwrap();
        assert!((n - d).abs() < 1e-14);
        assert!((n - 10f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn oplus_rejects_wrong_base() {
        let mu = line(&[0.0, 1.0], &[0.5, 0.5]);
        let nu = line(&[2.0], &[1.0]);
        let psi = ominus(&nu, &mu, 2.0).unwrap();
        let other = line(&[0.0, 1.0, 2.0], &[0.2, 0.3, 0.5]);
        assert!(matches!(oplus(&other, &psi), Err(Error::IncompatibleDetail(_))));
        assert!(matches!(oplus(&g(0.0, 1.0), &psi), Err(Error::IncompatibleDetail(_))));
    }

    #[test]
    fn mccann_midpoint_of_two_diracs() {
        let mu = line(&[0.0], &[1.0]);
        let nu = line(&[2.0], &[1.0]);
        let mid = mccann_average(&mu, &nu, 0.5, 2.0).unwrap();
        assert_eq!(mid.as_discrete().unwrap().points(), &[1.0]);
        assert_eq!(mccann_average(&mu, &nu, 0.0, 2.0).unwrap(), mu);
        assert_eq!(mccann_average(&mu, &nu, 1.0, 2.0).unwrap(), nu);
    }

    #[test]
    fn interpolant_links_have_the_right_marginals() {
        let a = DiscreteMeasure::new(vec![vec![0.0], vec![2.0]], vec![0.5, 0.5]).unwrap();
        let b = DiscreteMeasure::new(vec![vec![1.0]], vec![1.0]).unwrap();
        let (plan, _) = solve_kantorovich(&a, &b, 2.0).unwrap();
        let it = interpolate_along(&a, &b, &plan, 0.5).unwrap();
        assert_eq!(it.measure.points(), &[0.5, 1.5]);
        assert!(it.from_source.marginal_residual(a.weights(), it.measure.weights()) < 1e-15);
        assert!(it.to_target.marginal_residual(it.measure.weights(), b.weights()) < 1e-15);
    }

    #[test]
    fn delta_and_velocity() {
        let elems = [0.0, 1.0, 3.0].map(|m| GaussianMeasure::new(m, 1.0).unwrap());
        let seq = MeasureSequence::gaussians(elems.to_vec(), 1).unwrap();
        assert_eq!(seq_delta(&seq, 2.0).unwrap(), 2.0);
        assert_eq!(discrete_velocity_norms(&seq, 2.0).unwrap(), vec![2.0, 4.0]);
    }

    #[test]
    fn lipschitz_of_affine_and_discrete() {
        let mu = g(0.0, 1.0);
        let psi = ominus(&g(1.0, 4.0), &mu, 2.0).unwrap();
        assert_eq!(pushforward_lipschitz(&psi, &mu).unwrap().constant, 2.0);
        let a = line(&[0.0, 1.0], &[0.5, 0.5]);
        let b = line(&[0.0, 3.0], &[0.5, 0.5]);
        let psi = ominus(&b, &a, 2.0).unwrap();
        let est = pushforward_lipschitz(&psi, &a).unwrap();
        assert!((est.constant - 3.0).abs() < 1e-12);
        assert!(est.split_atoms.is_empty());
    }

    #[test]
    fn layer_norms_reject_misaligned_input() {
        let layer = DetailLayer {
            level: 1,
            details: vec![Detail::<f64>::Zero; 3],
        };
        assert!(matches!(
            layer_norms(&layer, &[g(0.0, 1.0)], 2.0),
            Err(Error::Misaligned(_))
        ));
    }
}

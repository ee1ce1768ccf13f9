//! Exact discrete optimal transport.
//!
//! [`solve_kantorovich`] solves the Kantorovich linear program between two
//! [`DiscreteMeasure`]s with cost `‖x − y‖^p` using a network simplex.
//! [`brute_force_ot`] is an independent exhaustive solver for small inputs.

mod oracle;
mod simplex;

pub use oracle::brute_force_ot;

use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;
use crate::scalar::{dist_pow, root, Real};

/// Plan entries below this are stored as exact zeros.
pub const PLAN_PRUNE_TOL: f64 = 1e-12;
/// Tolerance on marginal constraints of a returned plan.
pub const MARGINAL_TOL: f64 = 1e-8;

/// Row-major `rows × cols` transport plan.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling<T> {
    rows: usize,
    cols: usize,
    entries: Vec<T>,
    cost_exponent: T,
}

impl<T: Real> Coupling<T> {
    /// Builds a plan from raw entries. Entries must be finite and nonnegative;
    /// values below [`PLAN_PRUNE_TOL`] are set to zero.
    pub fn new(rows: usize, cols: usize, mut entries: Vec<T>, cost_exponent: T) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::IncompatibleDetail(format!(
                "{} plan entries for a {rows}x{cols} plan",
                entries.len()
            )));
        }
        if entries.iter().any(|x| !x.is_finite() || *x < T::zero()) {
            return Err(Error::IncompatibleDetail(
                "plan entries must be finite and nonnegative".into(),
            ));
        }
        prune(&mut entries);
        Ok(Self {
            rows,
            cols,
            entries,
            cost_exponent,
        })
    }

    pub(crate) fn from_entries(rows: usize, cols: usize, entries: Vec<T>, cost_exponent: T) -> Self {
        Self {
            rows,
            cols,
            entries,
            cost_exponent,
        }
    }

    /// Diagonal plan of a measure with itself.
    pub fn identity(weights: &[T], cost_exponent: T) -> Self {
        let n = weights.len();
        let mut entries = vec![T::zero(); n * n];
        for (i, &w) in weights.iter().enumerate() {
            entries[i * n + i] = w;
        }
        Self::from_entries(n, n, entries, cost_exponent)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cost_exponent(&self) -> T {
        self.cost_exponent
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    /// Nonzero entries as `(i, j, mass)` in row-major order.
    pub fn support(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        let cols = self.cols;
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, &x)| x > T::zero())
            .map(move |(k, &x)| (k / cols, k % cols, x))
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.rows).map(|i| self.row(i).iter().copied().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<T> {
        let mut s = vec![T::zero(); self.cols];
        for (k, &x) in self.entries.iter().enumerate() {
            s[k % self.cols] = s[k % self.cols] + x;
        }
        s
    }

    /// Largest deviation of the plan's marginals from the given weights.
    pub fn marginal_residual(&self, source: &[T], target: &[T]) -> T {
        let r = self
            .row_sums()
            .iter()
            .zip(source)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()));
        self.col_sums()
            .iter()
            .zip(target)
            .fold(r, |acc, (&a, &b)| acc.max((a - b).abs()))
    }

    /// `Σ λ_ij ‖x_i − y_j‖^p` for the given endpoint measures.
    pub fn cost(&self, mu: &DiscreteMeasure<T>, nu: &DiscreteMeasure<T>) -> T {
        self.support()
            .map(|(i, j, w)| w * dist_pow(mu.atom(i), nu.atom(j), self.cost_exponent))
            .sum()
    }
}

fn prune<T: Real>(entries: &mut [T]) {
    let tol = T::tol(PLAN_PRUNE_TOL);
    for x in entries.iter_mut() {
        if *x < tol {
            *x = T::zero();
        }
    }
}

/// Optimal value of the transport functional and the matching distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportCost<T> {
    /// `Σ λ_ij ‖x_i − y_j‖^p` at the optimum.
    pub value: T,
    /// `value^{1/p}`.
    pub distance: T,
}

impl<T: Real> TransportCost<T> {
    pub(crate) fn from_value(value: T, p: T) -> Self {
        let value = value.max(T::zero());
        Self {
            value,
            distance: root(value, p),
        }
    }
}

pub(crate) fn check_exponent<T: Real>(p: T) -> Result<()> {
    if !(p >= T::one()) || !p.is_finite() {
        return Err(Error::BadParameter(format!("cost exponent must be >= 1, got {p}")));
    }
    Ok(())
}

fn check_dims<T: Real>(mu: &DiscreteMeasure<T>, nu: &DiscreteMeasure<T>) -> Result<()> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            found: nu.dim(),
        });
    }
    Ok(())
}

/// Row-major matrix of `‖x_i − y_j‖^p`.
pub fn cost_matrix<T: Real>(mu: &DiscreteMeasure<T>, nu: &DiscreteMeasure<T>, p: T) -> Vec<T> {
    let mut c = Vec::with_capacity(mu.len() * nu.len());
    for x in mu.atoms() {
        for y in nu.atoms() {
            c.push(dist_pow(x, y, p));
        }
    }
    c
}

/// Solves the discrete Kantorovich problem between `mu` and `nu`.
///
/// The returned plan has rows indexed by `mu`'s atoms and columns by `nu`'s.
pub fn solve_kantorovich<T: Real>(
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
    p: T,
) -> Result<(Coupling<T>, TransportCost<T>)> {
    check_dims(mu, nu)?;
    check_exponent(p)?;
    let cost = cost_matrix(mu, nu, p);
    let mut flow = simplex::solve_transport(mu.weights(), nu.weights(), &cost)?;
    prune(&mut flow);
    let plan = Coupling::from_entries(mu.len(), nu.len(), flow, p);
    let value = plan
        .entries
        .iter()
        .zip(&cost)
        .map(|(&w, &c)| w * c)
        .sum::<T>();
    Ok((plan, TransportCost::from_value(value, p)))
}

/// `W_p(mu, nu)`.
pub fn wasserstein_distance<T: Real>(
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
    p: T,
) -> Result<T> {
    Ok(solve_kantorovich(mu, nu, p)?.1.distance)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dm(atoms: &[&[f64]], w: &[f64]) -> DiscreteMeasure<f64> {
        DiscreteMeasure::new(atoms.iter().map(|a| a.to_vec()).collect(), w.to_vec()).unwrap()
    }

    #[test]
    fn single_atoms_cost_is_squared_distance() {
        let mu = dm(&[&[0.0, 0.0]], &[1.0]);
        let nu = dm(&[&[3.0, 4.0]], &[1.0]);
        let (plan, cost) = solve_kantorovich(&mu, &nu, 2.0).unwrap();
        assert_eq!(cost.value, 25.0);
        assert_eq!(cost.distance, 5.0);
        assert_eq!(plan.entries(), &[1.0]);
    }

    #[test]
    fn two_halves_to_midpoint() {
        let mu = dm(&[&[0.0], &[1.0]], &[0.5, 0.5]);
        let nu = dm(&[&[0.5]], &[1.0]);
        let (_, cost) = solve_kantorovich(&mu, &nu, 2.0).unwrap();
        assert!((cost.value - 0.25).abs() < 1e-15);
        assert!((cost.distance - 0.5).abs() < 1e-15);
    }

    #[test]
    fn self_distance_is_exactly_zero() {
        let mu = dm(&[&[0.0, 1.0], &[2.0, -1.0], &[0.5, 0.5]], &[0.2, 0.3, 0.5]);
        assert_eq!(wasserstein_distance(&mu, &mu, 2.0).unwrap(), 0.0);
        assert_eq!(wasserstein_distance(&mu, &mu, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let mu = dm(&[&[0.0]], &[1.0]);
        let nu = dm(&[&[0.0, 0.0]], &[1.0]);
        assert!(matches!(
            solve_kantorovich(&mu, &nu, 2.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn exponent_below_one_rejected() {
        let mu = dm(&[&[0.0]], &[1.0]);
        assert!(matches!(
            solve_kantorovich(&mu, &mu, 0.5),
            Err(Error::BadParameter(_))
        ));
    }

    #[test]
    fn plan_marginals_match_weights() {
        let mu = dm(&[&[0.0], &[1.0], &[5.0]], &[0.2, 0.5, 0.3]);
        let nu = dm(&[&[0.3], &[4.0]], &[0.6, 0.4]);
        let (plan, cost) = solve_kantorovich(&mu, &nu, 2.0).unwrap();
        assert!(plan.marginal_residual(mu.weights(), nu.weights()) <= 1e-12);
        assert!((plan.cost(&mu, &nu) - cost.value).abs() < 1e-12);
    }
}

//! Value types for the two supported measure classes and sequences of them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{pow2, sq_dist, Real};

/// Atoms closer than this (Euclidean) are merged into one.
pub const ATOM_MERGE_TOL: f64 = 1e-12;
/// Maximum deviation of a weight sum from 1 that is silently renormalized.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;
/// Cap on the automatically chosen number of analysis levels.
pub const MAX_DEFAULT_LEVELS: u32 = 6;

/// One-dimensional Gaussian law `N(mean, variance)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GaussianMeasure<T> {
    mean: T,
    variance: T,
}

impl<T: Real> GaussianMeasure<T> {
    pub fn new(mean: T, variance: T) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::BadMeasure(format!("non-finite mean {mean}")));
        }
        if !(variance > T::zero()) || !variance.is_finite() {
            return Err(Error::BadMeasure(format!(
                "Gaussian variance must be finite and > 0, got {variance}"
            )));
        }
        Ok(Self { mean, variance })
    }

    /// Builds from mean and standard deviation.
    pub fn from_std(mean: T, std: T) -> Result<Self> {
        Self::new(mean, std * std)
    }

    pub fn mean(&self) -> T {
        self.mean
    }

    pub fn variance(&self) -> T {
        self.variance
    }

    pub fn std(&self) -> T {
        self.variance.sqrt()
    }
}

/// Finitely supported probability measure `Σ w_i δ_{x_i}` on ℝ^d.
///
/// Construction canonicalizes the input: zero-weight atoms are dropped,
/// atoms within [`ATOM_MERGE_TOL`] of an earlier atom are merged into it, and
/// the weights are rescaled so that their left-to-right sum is exactly one.
/// Atom order otherwise follows the input.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure<T> {
    dim: usize,
    points: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> DiscreteMeasure<T> {
    pub fn new(atoms: Vec<Vec<T>>, weights: Vec<T>) -> Result<Self> {
        let dim = atoms.first().map(Vec::len).unwrap_or(0);
        let mut points = Vec::with_capacity(atoms.len() * dim);
        for a in &atoms {
            if a.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: a.len(),
                });
            }
            points.extend_from_slice(a);
        }
        Self::from_flat(dim, points, weights)
    }

    /// Builds from a row-major `m × dim` point buffer.
    pub fn from_flat(dim: usize, points: Vec<T>, weights: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::BadMeasure("atoms must have dimension >= 1".into()));
        }
        if weights.is_empty() {
            return Err(Error::BadMeasure("a discrete measure needs at least one atom".into()));
        }
        if points.len() != weights.len() * dim {
            return Err(Error::BadMeasure(format!(
                "{} coordinates do not describe {} atoms of dimension {dim}",
                points.len(),
                weights.len()
            )));
        }
        if let Some(x) = points.iter().find(|x| !x.is_finite()) {
            return Err(Error::BadMeasure(format!("non-finite atom coordinate {x}")));
        }
        let neg_tol = -T::tol(ATOM_MERGE_TOL);
        for &w in &weights {
            if !w.is_finite() || w < neg_tol {
                return Err(Error::BadWeights(format!("weight {w} is negative or non-finite")));
            }
        }
        let total: T = weights.iter().copied().sum();
        if (total - T::one()).abs() > T::tol(WEIGHT_SUM_TOL) {
            return Err(Error::BadWeights(format!("weights sum to {total}, not 1")));
        }
        Ok(Self::canonicalize(dim, points, weights))
    }

    /// Builds from masses that are known to be nonnegative and to sum to one up to
    /// accumulated rounding (outputs of pushforwards and interpolation).
    pub(crate) fn from_masses(dim: usize, points: Vec<T>, weights: Vec<T>) -> Self {
        Self::canonicalize(dim, points, weights)
    }

    /// Like [`Self::from_masses`], also returning for every input atom the index
    /// of the output atom it ended up in (`usize::MAX` for dropped atoms).
    pub(crate) fn from_masses_mapped(
        dim: usize,
        points: Vec<T>,
        weights: Vec<T>,
    ) -> (Self, Vec<usize>) {
        Self::canonicalize_mapped(dim, points, weights)
    }

    pub fn uniform(atoms: Vec<Vec<T>>) -> Result<Self> {
        let n = atoms.len();
        if n == 0 {
            return Err(Error::BadMeasure("a discrete measure needs at least one atom".into()));
        }
        let w = T::one() / T::from_usize_lossy(n);
        Self::new(atoms, vec![w; n])
    }

    pub fn dirac(point: Vec<T>) -> Result<Self> {
        Self::new(vec![point], vec![T::one()])
    }

    fn canonicalize(dim: usize, points: Vec<T>, weights: Vec<T>) -> Self {
        Self::canonicalize_mapped(dim, points, weights).0
    }

    fn canonicalize_mapped(dim: usize, points: Vec<T>, weights: Vec<T>) -> (Self, Vec<usize>) {
        let m = weights.len();
        let tol = T::tol(ATOM_MERGE_TOL);
        let tol_sq = tol * tol;
        let keep: Vec<usize> = (0..m).filter(|&k| weights[k] > T::zero()).collect();

        // Candidate neighbours are found through an ordering on the first coordinate.
        let first = |k: usize| points[k * dim];
        let mut order = keep.clone();
        order.sort_by(|&a, &b| {
            first(a)
                .partial_cmp(&first(b))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mut rank = vec![0usize; m];
        for (r, &k) in order.iter().enumerate() {
            rank[k] = r;
        }
        let atom = |k: usize| &points[k * dim..(k + 1) * dim];
        let mut rep: Vec<usize> = (0..m).collect();
        for &k in &keep {
            let mut best: Option<usize> = None;
            let mut scan = |q: usize| {
                if q < k && rep[q] == q && sq_dist(atom(q), atom(k)) <= tol_sq {
                    best = Some(best.map_or(q, |b: usize| b.min(q)));
                }
            };
            let r = rank[k];
            for &q in order[..r].iter().rev() {
                if first(k) - first(q) > tol {
                    break;
                }
                scan(q);
            }
            for &q in &order[r + 1..] {
                if first(q) - first(k) > tol {
                    break;
                }
                scan(q);
            }
            if let Some(q) = best {
                rep[k] = q;
            }
        }

        let mut slot = vec![usize::MAX; m];
        let mut out_points = Vec::with_capacity(keep.len() * dim);
        let mut out_weights: Vec<T> = Vec::with_capacity(keep.len());
        for &k in &keep {
            if rep[k] == k {
                slot[k] = out_weights.len();
                out_points.extend_from_slice(atom(k));
                out_weights.push(weights[k]);
            }
        }
        for &k in &keep {
            if rep[k] != k {
                let s = slot[rep[k]];
                slot[k] = s;
                out_weights[s] = out_weights[s] + weights[k];
            }
        }
        normalize_exact(&mut out_weights);
        let measure = Self {
            dim,
            points: out_points,
            weights: out_weights,
        };
        (measure, slot)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of atoms.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn atom(&self, i: usize) -> &[T] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn atoms(&self) -> impl Iterator<Item = &[T]> + '_ {
        self.points.chunks_exact(self.dim)
    }

    /// Row-major `len × dim` coordinate buffer.
    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Pushforward through a point map `f`; coincident images are merged.
    pub fn pushforward<F>(&self, mut f: F) -> Self
    where
        F: FnMut(&[T]) -> Vec<T>,
    {
        let mut points = Vec::with_capacity(self.points.len());
        let mut dim = self.dim;
        for (k, a) in self.atoms().enumerate() {
            let y = f(a);
            if k == 0 {
                dim = y.len();
            }
            assert_eq!(y.len(), dim, "pushforward map changed output dimension");
            points.extend(y);
        }
        Self::canonicalize(dim, points, self.weights.clone())
    }

    /// Copy with atoms sorted lexicographically; used to compare measures
    /// irrespective of atom order.
    pub fn sorted(&self) -> Self {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            self.atom(a)
                .iter()
                .zip(self.atom(b))
                .map(|(x, y)| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut points = Vec::with_capacity(self.points.len());
        let mut weights = Vec::with_capacity(self.len());
        for &i in &idx {
            points.extend_from_slice(self.atom(i));
            weights.push(self.weights[i]);
        }
        Self {
            dim: self.dim,
            points,
            weights,
        }
    }
}

/// Rescales `w` so that `w.iter().sum() == 1` exactly in floating point.
///
/// After dividing by the total, the last weight is replaced by `1 − prefix`,
/// where `prefix` is the left-to-right sum of the others. For `prefix ≤ 1` the
/// rounded sum `prefix + (1 − prefix)` is exactly one.
fn normalize_exact<T: Real>(w: &mut [T]) {
    let Some(last) = w.len().checked_sub(1) else {
        return;
    };
    let total: T = w.iter().copied().sum();
    if total == T::one() {
        return;
    }
    for x in w.iter_mut() {
        *x = *x / total;
    }
    let prefix: T = w[..last].iter().copied().sum();
    if prefix <= T::one() {
        w[last] = T::one() - prefix;
        return;
    }
    // Only reachable when the last weight is below rounding level.
    let big = (0..w.len())
        .max_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    for _ in 0..8 {
        let s: T = w.iter().copied().sum();
        if s == T::one() {
            return;
        }
        w[big] = w[big] + (T::one() - s);
    }
}

/// Tag for the two measure classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Gaussian,
    Discrete,
}

impl std::fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MeasureKind::Gaussian => "gaussian",
            MeasureKind::Discrete => "discrete",
        })
    }
}

/// A measure of either supported class.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure<T> {
    Gaussian(GaussianMeasure<T>),
    Discrete(DiscreteMeasure<T>),
}

impl<T: Real> Measure<T> {
    pub fn kind(&self) -> MeasureKind {
        match self {
            Measure::Gaussian(_) => MeasureKind::Gaussian,
            Measure::Discrete(_) => MeasureKind::Discrete,
        }
    }

    /// Ambient dimension (1 for Gaussians).
    pub fn dim(&self) -> usize {
        match self {
            Measure::Gaussian(_) => 1,
            Measure::Discrete(d) => d.dim(),
        }
    }

    pub fn as_gaussian(&self) -> Option<&GaussianMeasure<T>> {
        match self {
            Measure::Gaussian(g) => Some(g),
            _ => None,
        }
    }

    pub fn as_discrete(&self) -> Option<&DiscreteMeasure<T>> {
        match self {
            Measure::Discrete(d) => Some(d),
            _ => None,
        }
    }
}

impl<T> From<GaussianMeasure<T>> for Measure<T> {
    fn from(g: GaussianMeasure<T>) -> Self {
        Measure::Gaussian(g)
    }
}

impl<T> From<DiscreteMeasure<T>> for Measure<T> {
    fn from(d: DiscreteMeasure<T>) -> Self {
        Measure::Discrete(d)
    }
}

/// Finite window of a sequence indexed by the dyadic grid `2^{-level}ℤ`.
///
/// Element `i` sits at time `grid_origin + i·2^{-level}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSequence<T> {
    elements: Vec<Measure<T>>,
    level: u32,
    grid_origin: T,
}

impl<T: Real> MeasureSequence<T> {
    pub fn new(elements: Vec<Measure<T>>, level: u32, grid_origin: T) -> Result<Self> {
        let seq = Self {
            elements,
            level,
            grid_origin,
        };
        validate_sequence(&seq)?;
        Ok(seq)
    }

    /// Sequence at the largest admissible level (capped at
    /// [`MAX_DEFAULT_LEVELS`]) with origin 0.
    pub fn with_default_level(elements: Vec<Measure<T>>) -> Result<Self> {
        let level = default_levels(elements.len());
        Self::new(elements, level, T::zero())
    }

    /// Skips the dyadic length check; kind and dimension are trusted.
    pub(crate) fn from_parts(elements: Vec<Measure<T>>, level: u32, grid_origin: T) -> Self {
        Self {
            elements,
            level,
            grid_origin,
        }
    }

    pub fn gaussians(elements: Vec<GaussianMeasure<T>>, level: u32) -> Result<Self> {
        Self::new(elements.into_iter().map(Measure::Gaussian).collect(), level, T::zero())
    }

    pub fn discretes(elements: Vec<DiscreteMeasure<T>>, level: u32) -> Result<Self> {
        Self::new(elements.into_iter().map(Measure::Discrete).collect(), level, T::zero())
    }

    /// Same elements on a different grid level.
    pub fn with_level(&self, level: u32) -> Result<Self> {
        Self::new(self.elements.clone(), level, self.grid_origin)
    }

    pub fn with_origin(mut self, grid_origin: T) -> Self {
        self.grid_origin = grid_origin;
        self
    }

    pub fn elements(&self) -> &[Measure<T>] {
        &self.elements
    }

    pub fn into_elements(self) -> Vec<Measure<T>> {
        self.elements
    }

    pub fn get(&self, i: usize) -> Option<&Measure<T>> {
        self.elements.get(i)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn grid_origin(&self) -> T {
        self.grid_origin
    }

    pub fn kind(&self) -> Option<MeasureKind> {
        self.elements.first().map(Measure::kind)
    }

    pub fn dim(&self) -> Option<usize> {
        self.elements.first().map(Measure::dim)
    }

    /// Grid time of element `i`.
    pub fn time(&self, i: usize) -> T {
        self.grid_origin + T::from_usize_lossy(i) * pow2::<T>(-(self.level as i32))
    }

    pub fn gaussian_elements(&self) -> Option<Vec<GaussianMeasure<T>>> {
        self.elements.iter().map(|m| m.as_gaussian().copied()).collect()
    }
}

/// Largest `J ≤ 6` with `n ≡ 1 (mod 2^J)` and `n ≥ 2^J + 1`.
pub fn default_levels(n: usize) -> u32 {
    (0..=MAX_DEFAULT_LEVELS)
        .rev()
        .find(|&j| dyadic_ok(n, j))
        .unwrap_or(0)
}

pub(crate) fn dyadic_ok(n: usize, level: u32) -> bool {
    let step = 1usize.checked_shl(level).unwrap_or(usize::MAX);
    n > step && (n - 1).is_multiple_of(step)
}

/// Checks every sequence invariant: homogeneous kind, shared dimension,
/// valid weights and the dyadic length condition.
pub fn validate_sequence<T: Real>(seq: &MeasureSequence<T>) -> Result<()> {
    let Some(first) = seq.elements.first() else {
        return Err(Error::LengthNotDyadic {
            len: 0,
            level: seq.level,
        });
    };
    let kind = first.kind();
    let dim = first.dim();
    for m in &seq.elements {
        if m.kind() != kind {
            return Err(Error::MixedKinds);
        }
        if m.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: m.dim(),
            });
        }
        match m {
            Measure::Gaussian(g) => {
                if !(g.variance > T::zero()) {
                    return Err(Error::BadMeasure("non-positive variance".into()));
                }
            }
            Measure::Discrete(d) => {
                if d.weights.iter().any(|&w| w < T::zero() || !w.is_finite()) {
                    return Err(Error::BadWeights("negative weight".into()));
                }
                let s: T = d.weights.iter().copied().sum();
                if (s - T::one()).abs() > T::tol(WEIGHT_SUM_TOL) {
                    return Err(Error::BadWeights(format!("weights sum to {s}")));
                }
            }
        }
    }
    if !seq.grid_origin.is_finite() {
        return Err(Error::BadParameter("grid origin must be finite".into()));
    }
    if !dyadic_ok(seq.elements.len(), seq.level) {
        return Err(Error::LengthNotDyadic {
            len: seq.elements.len(),
            level: seq.level,
        });
    }
    Ok(())
}

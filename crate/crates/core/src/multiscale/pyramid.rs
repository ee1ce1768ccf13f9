use crate::error::{Error, Result};
use crate::measures::{MeasureKind, MeasureSequence};
use crate::multiscale::{reconstruct_levels, validate_exponent};
use crate::scalar::Real;
use crate::transport_ops::{Detail, DetailLayer};

/// Coarse sequence plus detail layers `ψ^(1), …, ψ^(J)`.
///
/// `norms[ℓ−1][i]` caches `‖ψ^(ℓ)_i‖` measured against the prediction it was
/// computed from, so thresholding and reporting never re-solve transport.
#[derive(Debug, Clone, PartialEq)]
pub struct Pyramid<T> {
    pub(crate) coarse: MeasureSequence<T>,
    pub(crate) layers: Vec<DetailLayer<T>>,
    pub(crate) p: T,
    pub(crate) norms: Vec<Vec<T>>,
}

impl<T: Real> Pyramid<T> {
    /// Assembles a pyramid from parts, recomputing detail norms by walking the
    /// synthesis.
    pub fn new(coarse: MeasureSequence<T>, layers: Vec<DetailLayer<T>>, p: T) -> Result<Self> {
        check_structure(&coarse, &layers, p)?;
        let (_, norms) = reconstruct_levels(&coarse, &layers, p, true)?;
        Ok(Self {
            coarse,
            layers,
            p,
            norms,
        })
    }

    /// Assembles a pyramid whose detail norms are already known.
    pub fn with_norms(
        coarse: MeasureSequence<T>,
        layers: Vec<DetailLayer<T>>,
        p: T,
        norms: Vec<Vec<T>>,
    ) -> Result<Self> {
        check_structure(&coarse, &layers, p)?;
        if norms.len() != layers.len()
            || norms.iter().zip(&layers).any(|(n, l)| n.len() != l.details.len())
        {
            return Err(Error::Misaligned("norm table does not match the layers".into()));
        }
        if norms.iter().flatten().any(|&x| !(x >= T::zero()) || !x.is_finite()) {
            return Err(Error::Misaligned("norm table holds a negative or non-finite value".into()));
        }
        Ok(Self {
            coarse,
            layers,
            p,
            norms,
        })
    }

    pub fn coarse(&self) -> &MeasureSequence<T> {
        &self.coarse
    }

    pub fn layers(&self) -> &[DetailLayer<T>] {
        &self.layers
    }

    /// Layer `ψ^(ℓ)` for `ℓ ∈ 1..=levels()`.
    pub fn layer(&self, level: u32) -> Option<&DetailLayer<T>> {
        (level as usize).checked_sub(1).and_then(|k| self.layers.get(k))
    }

    pub fn levels(&self) -> u32 {
        self.layers.len() as u32
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn kind(&self) -> MeasureKind {
        self.coarse.kind().expect("coarse sequence is nonempty")
    }

    pub fn norms(&self) -> &[Vec<T>] {
        &self.norms
    }

    /// Cached norms of layer `ℓ`.
    pub fn layer_norms(&self, level: u32) -> Option<&[T]> {
        (level as usize)
            .checked_sub(1)
            .and_then(|k| self.norms.get(k))
            .map(Vec::as_slice)
    }

    /// `(‖ψ^(ℓ)‖_1, ‖ψ^(ℓ)‖_∞)` for each level, finest last.
    pub fn level_summaries(&self) -> Vec<(T, T)> {
        self.norms
            .iter()
            .map(|n| {
                (
                    n.iter().copied().sum(),
                    n.iter().copied().fold(T::zero(), T::max),
                )
            })
            .collect()
    }

    /// Grid time of index `i` in layer `ℓ`.
    pub fn time(&self, level: u32, i: usize) -> T {
        self.coarse.grid_origin()
            + T::from_usize_lossy(i) * crate::scalar::pow2::<T>(-(level as i32))
    }

    /// Length of the sequence the pyramid synthesizes to.
    pub fn finest_len(&self) -> usize {
        level_len(self.coarse.len(), self.levels())
    }

    /// Number of nonzero details over all layers.
    pub fn nonzero_details(&self) -> usize {
        self.layers
            .iter()
            .flat_map(|l| &l.details)
            .filter(|d| !d.is_zero())
            .count()
    }
}

/// Length of the refined sequence `ℓ` levels above a coarse one of length `n0`.
pub(crate) fn level_len(n0: usize, level: u32) -> usize {
    ((n0 - 1) << level) + 1
}

fn check_structure<T: Real>(coarse: &MeasureSequence<T>, layers: &[DetailLayer<T>], p: T) -> Result<()> {
    let kind = coarse
        .kind()
        .ok_or_else(|| Error::Misaligned("empty coarse sequence".into()))?;
    validate_exponent(kind, p)?;
    if coarse.len() < 2 {
        return Err(Error::Misaligned("coarse sequence needs two elements".into()));
    }
    for (k, layer) in layers.iter().enumerate() {
        let level = k as u32 + 1;
        if layer.level != level {
            return Err(Error::Misaligned(format!(
                "layer {k} is labelled level {} instead of {level}",
                layer.level
            )));
        }
        let want = level_len(coarse.len(), level);
        if layer.details.len() != want {
            return Err(Error::Misaligned(format!(
                "level {level} has {} details, expected {want}",
                layer.details.len()
            )));
        }
        for (i, d) in layer.details.iter().enumerate() {
            if i % 2 == 0 && !d.is_zero() {
                return Err(Error::Misaligned(format!(
                    "level {level} has a nonzero detail at even index {i}"
                )));
            }
            let ok = matches!(
                (d, kind),
                (Detail::Zero, _)
                    | (Detail::Affine(_), MeasureKind::Gaussian)
                    | (Detail::Transport(_), MeasureKind::Discrete)
            );
            if !ok {
                return Err(Error::IncompatibleDetail(format!(
                    "level {level} index {i} does not match the {kind} coarse sequence"
                )));
            }
        }
    }
    Ok(())
}

use crate::error::{Error, Result};
use crate::measures::MeasureSequence;
use crate::multiscale::{analyze, Pyramid};
use crate::scalar::Real;

/// Options for [`optimality_number`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OmegaOptions<T> {
    /// Also analyze the window shifted by one index and average both values.
    pub shift_averaged: bool,
    /// Per-level factors `w_1, …, w_J`; all ones when absent.
    pub weights: Option<Vec<T>>,
}

/// Result of [`optimality_number`].
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaReport<T> {
    /// The reported value: `unshifted`, or the mean with `shifted`.
    pub omega: T,
    pub unshifted: T,
    pub shifted: Option<T>,
    /// Elements left out of the shifted window at the start and at the end.
    pub dropped_leading: usize,
    pub dropped_trailing: usize,
}

/// `ω = Σ_ℓ w_ℓ ‖ψ^(ℓ)‖_1` of an already computed pyramid.
pub fn pyramid_omega<T: Real>(pyr: &Pyramid<T>, weights: Option<&[T]>) -> Result<T> {
    let sums = pyr.level_summaries();
    if let Some(w) = weights {
        if w.len() != sums.len() {
            return Err(Error::BadParameter(format!(
                "{} level weights for {} levels",
                w.len(),
                sums.len()
            )));
        }
        if w.iter().any(|&x| !(x >= T::zero()) || !x.is_finite()) {
            return Err(Error::BadParameter("level weights must be finite and >= 0".into()));
        }
    }
    Ok(sums
        .iter()
        .enumerate()
        .map(|(k, &(one, _))| weights.map_or(one, |w| w[k] * one))
        .sum())
}

/// Optimality number of `seq` analyzed with `levels` layers.
///
/// The shifted variant analyzes elements `1 ..= (m−1)·2^J + 1` of a sequence of
/// length `m·2^J + 1`: the first element and the last `2^J − 1` are dropped so
/// the window stays dyadic. It needs `m ≥ 2`.
pub fn optimality_number<T: Real>(
    seq: &MeasureSequence<T>,
    levels: u32,
    p: T,
    opts: &OmegaOptions<T>,
) -> Result<OmegaReport<T>> {
    let weights = opts.weights.as_deref();
    let unshifted = pyramid_omega(&analyze(seq, levels, p)?, weights)?;
    if !opts.shift_averaged {
        return Ok(OmegaReport {
            omega: unshifted,
            unshifted,
            shifted: None,
            dropped_leading: 0,
            dropped_trailing: 0,
        });
    }
    let step = 1usize << levels;
    let n = seq.len();
    let blocks = (n - 1) / step;
    if blocks < 2 {
        return Err(Error::LengthNotDyadic {
            len: n - 1,
            level: levels,
        });
    }
    let window_len = (blocks - 1) * step + 1;
    let window = MeasureSequence::from_parts(
        seq.elements()[1..1 + window_len].to_vec(),
        levels,
        seq.time(1),
    );
    let shifted = pyramid_omega(&analyze(&window, levels, p)?, weights)?;
    Ok(OmegaReport {
        omega: (unshifted + shifted) * T::lit(0.5),
        unshifted,
        shifted: Some(shifted),
        dropped_leading: 1,
        dropped_trailing: n - 1 - window_len,
    })
}

/// Returns a copy of `pyr` in which every detail whose cached norm exceeds
/// `threshold` is replaced by zero. The coarse sequence is kept.
pub fn threshold_details<T: Real>(pyr: &Pyramid<T>, threshold: T) -> Pyramid<T> {
    let mut out = pyr.clone();
    for (layer, norms) in out.layers.iter_mut().zip(out.norms.iter_mut()) {
        for (d, n) in layer.details.iter_mut().zip(norms.iter_mut()) {
            if *n > threshold {
                d.clear();
                *n = T::zero();
            }
        }
    }
    out
}

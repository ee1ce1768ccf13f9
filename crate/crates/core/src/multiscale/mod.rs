//! Interpolating midpoint subdivision in Wasserstein space and the multiscale
//! transform built on it.
//!
//! Analysis of a sequence at level `J`:
//!
//! ```text
//! μ^(ℓ−1) = D μ^(ℓ),   ψ^(ℓ) = μ^(ℓ) ⊖ S μ^(ℓ−1),   ℓ = J, …, 1
//! ```
//!
//! and synthesis inverts it with `μ^(ℓ) = S μ^(ℓ−1) ⊕ ψ^(ℓ)`. `S` keeps even
//! samples and inserts geodesic midpoints; `D` keeps even samples.

mod anomaly;
mod omega;
mod pyramid;

pub use anomaly::{detect_anomalies, AnomalyFlag, DEFAULT_K_SIGMA};
pub use omega::{optimality_number, threshold_details, OmegaOptions, OmegaReport};
pub use pyramid::Pyramid;

use rayon::prelude::*;

use crate::discrete_ot::{solve_kantorovich, Coupling};
use crate::error::{Error, Result};
use crate::gaussian_ot::require_quadratic;
use crate::measures::{dyadic_ok, Measure, MeasureKind, MeasureSequence};
use crate::scalar::Real;
use crate::transport_ops::{detail_norm, interpolate_along, mccann_average, ominus, oplus, DetailLayer};

pub(crate) fn validate_exponent<T: Real>(kind: MeasureKind, p: T) -> Result<()> {
    match kind {
        MeasureKind::Gaussian => require_quadratic(p),
        MeasureKind::Discrete => crate::discrete_ot::check_exponent(p),
    }
}

fn half<T: Real>() -> T {
    T::lit(0.5)
}

/// One step of the elementary scheme: even outputs copy the input, odd outputs
/// are geodesic midpoints of neighbours. The level goes up by one.
pub fn subdivide<T: Real>(seq: &MeasureSequence<T>, p: T) -> Result<MeasureSequence<T>> {
    let e = seq.elements();
    if e.len() < 2 {
        return Err(Error::TooShort {
            len: e.len(),
            needed: 2,
        });
    }
    let out = refine(e, p)?;
    Ok(MeasureSequence::from_parts(out, seq.level() + 1, seq.grid_origin()))
}

fn refine<T: Real>(e: &[Measure<T>], p: T) -> Result<Vec<Measure<T>>> {
    let mids: Vec<Measure<T>> = (0..e.len() - 1)
        .into_par_iter()
        .map(|i| mccann_average(&e[i], &e[i + 1], half(), p))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(2 * e.len() - 1);
    for (i, m) in e.iter().enumerate() {
        out.push(m.clone());
        if let Some(mid) = mids.get(i) {
            out.push(mid.clone());
        }
    }
    Ok(out)
}

/// `r`-fold subdivision.
///
/// Discrete midpoints after the first step are taken along the couplings
/// induced by the previous step rather than from fresh solves, so every
/// output lies on the McCann interpolant of the original consecutive pair.
pub fn subdivide_r<T: Real>(seq: &MeasureSequence<T>, r: u32, p: T) -> Result<MeasureSequence<T>> {
    if r == 0 {
        return Ok(seq.clone());
    }
    let e = seq.elements();
    if e.len() < 2 {
        return Err(Error::TooShort {
            len: e.len(),
            needed: 2,
        });
    }
    if seq.kind() == Some(MeasureKind::Gaussian) {
        let mut cur = seq.clone();
        for _ in 0..r {
            cur = subdivide(&cur, p)?;
        }
        return Ok(cur);
    }
    crate::discrete_ot::check_exponent(p)?;
    let mut elems: Vec<Measure<T>> = e.to_vec();
    let mut links: Vec<Coupling<T>> = (0..e.len() - 1)
        .into_par_iter()
        .map(|i| {
            let (a, b) = (discrete(&e[i]), discrete(&e[i + 1]));
            Ok(solve_kantorovich(a, b, p)?.0)
        })
        .collect::<Result<_>>()?;
    for _ in 0..r {
        let parts: Vec<_> = (0..elems.len() - 1)
            .into_par_iter()
            .map(|i| interpolate_along(discrete(&elems[i]), discrete(&elems[i + 1]), &links[i], half()))
            .collect::<Result<_>>()?;
        let mut next = Vec::with_capacity(2 * elems.len() - 1);
        let mut next_links = Vec::with_capacity(2 * links.len());
        for (i, m) in elems.into_iter().enumerate() {
            next.push(m);
            if let Some(part) = parts.get(i) {
                next.push(Measure::Discrete(part.measure.clone()));
                next_links.push(part.from_source.clone());
                next_links.push(part.to_target.clone());
            }
        }
        elems = next;
        links = next_links;
    }
    Ok(MeasureSequence::from_parts(elems, seq.level() + r, seq.grid_origin()))
}

fn discrete<T>(m: &Measure<T>) -> &crate::measures::DiscreteMeasure<T> {
    match m {
        Measure::Discrete(d) => d,
        Measure::Gaussian(_) => unreachable!("sequence kinds are homogeneous"),
    }
}

/// Keeps even-index elements; the level goes down by one.
pub fn downsample<T: Real>(seq: &MeasureSequence<T>) -> Result<MeasureSequence<T>> {
    let n = seq.len();
    if n.is_multiple_of(2) {
        return Err(Error::BadLength(format!("length {n} is even")));
    }
    if seq.level() == 0 {
        return Err(Error::BadLength("sequence is already at level 0".into()));
    }
    let out = seq.elements().iter().step_by(2).cloned().collect();
    Ok(MeasureSequence::from_parts(out, seq.level() - 1, seq.grid_origin()))
}

/// Forward transform with `levels` layers. The input is read as living on the
/// grid `2^{-levels}ℤ` starting at its own origin, so the coarse sequence sits
/// on integer times.
pub fn analyze<T: Real>(seq: &MeasureSequence<T>, levels: u32, p: T) -> Result<Pyramid<T>> {
    let n = seq.len();
    if !dyadic_ok(n, levels) {
        return Err(Error::LengthNotDyadic { len: n, level: levels });
    }
    let kind = seq.kind().expect("validated sequences are nonempty");
    validate_exponent(kind, p)?;

    let mut cur = MeasureSequence::from_parts(seq.elements().to_vec(), levels, seq.grid_origin());
    let mut layers = Vec::with_capacity(levels as usize);
    let mut norms = Vec::with_capacity(levels as usize);
    for level in (1..=levels).rev() {
        let coarse = downsample(&cur)?;
        let pred = subdivide(&coarse, p)?;
        let fine = cur.elements();
        let computed: Vec<_> = (0..fine.len())
            .into_par_iter()
            .map(|i| {
                if i % 2 == 0 {
                    return Ok((crate::transport_ops::Detail::Zero, T::zero()));
                }
                let base = &pred.elements()[i];
                let d = ominus(&fine[i], base, p)?;
                let norm = detail_norm(&d, base, p)?;
                Ok((d, norm))
            })
            .collect::<Result<_>>()?;
        let (details, layer_norms): (Vec<_>, Vec<_>) = computed.into_iter().unzip();
        layers.push(DetailLayer { level, details });
        norms.push(layer_norms);
        cur = coarse;
    }
    layers.reverse();
    norms.reverse();
    Ok(Pyramid {
        coarse: cur,
        layers,
        p,
        norms,
    })
}

/// Inverse transform: the sequence at the finest level.
pub fn synthesize<T: Real>(pyr: &Pyramid<T>) -> Result<MeasureSequence<T>> {
    Ok(reconstruct_levels(pyr.coarse(), pyr.layers(), pyr.p(), false)?.0)
}

/// Runs the synthesis recursion; optionally also returns the norm of every
/// detail against its prediction.
pub(crate) fn reconstruct_levels<T: Real>(
    coarse: &MeasureSequence<T>,
    layers: &[DetailLayer<T>],
    p: T,
    with_norms: bool,
) -> Result<(MeasureSequence<T>, Vec<Vec<T>>)> {
    let mut cur = coarse.clone();
    let mut norms = Vec::new();
    for layer in layers {
        let pred = subdivide(&cur, p)?;
        if pred.len() != layer.details.len() {
            return Err(Error::Misaligned(format!(
                "level {} has {} details for {} predicted elements",
                layer.level,
                layer.details.len(),
                pred.len()
            )));
        }
        let pe = pred.elements();
        let out: Vec<(Measure<T>, T)> = (0..pe.len())
            .into_par_iter()
            .map(|i| {
                let d = &layer.details[i];
                let norm = if with_norms { detail_norm(d, &pe[i], p)? } else { T::zero() };
                Ok((oplus(&pe[i], d)?, norm))
            })
            .collect::<Result<_>>()?;
        let (elems, layer_norms): (Vec<_>, Vec<_>) = out.into_iter().unzip();
        norms.push(layer_norms);
        cur = MeasureSequence::from_parts(elems, pred.level(), pred.grid_origin());
    }
    Ok((cur, norms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{DiscreteMeasure, GaussianMeasure};

    fn dirac(x: f64) -> DiscreteMeasure<f64> {
        DiscreteMeasure::dirac(vec![x]).unwrap()
    }

    fn g(m: f64, v: f64) -> GaussianMeasure<f64> {
        GaussianMeasure::new(m, v).unwrap()
    }

    fn points(seq: &MeasureSequence<f64>) -> Vec<f64> {
        seq.elements()
            .iter()
            .map(|m| m.as_discrete().unwrap().points()[0])
            .collect()
    }

    #[test]
    fn subdivide_two_diracs() {
        let seq = MeasureSequence::discretes(vec![dirac(0.0), dirac(1.0)], 0).unwrap();
        let s = subdivide(&seq, 2.0).unwrap();
        assert_eq!(points(&s), vec![0.0, 0.5, 1.0]);
        assert_eq!(s.level(), 1);
    }

    #[test]
    fn subdivide_gaussians() {
        let seq = MeasureSequence::gaussians(vec![g(0.0, 1.0), g(1.0, 4.0)], 0).unwrap();
        let s = subdivide(&seq, 2.0).unwrap();
        assert_eq!(s.elements()[1], Measure::Gaussian(g(0.5, 2.25)));
    }

    #[test]
    fn subdivide_r_quarters() {
        let seq = MeasureSequence::discretes(vec![dirac(0.0), dirac(1.0)], 0).unwrap();
        assert_eq!(subdivide_r(&seq, 0, 2.0).unwrap(), seq);
        let s = subdivide_r(&seq, 2, 2.0).unwrap();
        assert_eq!(points(&s), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn downsample_rules() {
        let seq = MeasureSequence::discretes((0..5).map(|k| dirac(k as f64)).collect(), 2).unwrap();
        assert_eq!(points(&downsample(&seq).unwrap()), vec![0.0, 2.0, 4.0]);
        let s = subdivide(&seq, 2.0).unwrap();
        assert_eq!(downsample(&s).unwrap(), seq);
        let two = MeasureSequence::discretes(vec![dirac(0.0), dirac(1.0)], 0).unwrap();
        assert!(matches!(downsample(&two), Err(Error::BadLength(_))));
    }

    #[test]
    fn analyze_geodesic_gives_zero_details() {
        let seq = MeasureSequence::gaussians(
            (0..=8).map(|k| k as f64 / 8.0).map(|t| g(t, (1.0 + t).powi(2))).collect(),
            3,
        )
        .unwrap();
        let pyr = analyze(&seq, 3, 2.0).unwrap();
        assert_eq!(pyr.nonzero_details(), 0);
        assert_eq!(pyr.coarse().len(), 2);
    }

    #[test]
    fn single_perturbed_midpoint() {
        let seq = MeasureSequence::discretes(vec![dirac(0.0), dirac(0.7), dirac(1.0)], 1).unwrap();
        let pyr = analyze(&seq, 1, 2.0).unwrap();
        let n = pyr.layer_norms(1).unwrap();
        assert_eq!(n[0], 0.0);
        assert!((n[1] - 0.2).abs() < 1e-12);
        assert_eq!(n[2], 0.0);
        let back = synthesize(&pyr).unwrap();
        assert!((points(&back)[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn analyze_rejects_bad_length() {
        let seq = MeasureSequence::discretes((0..6).map(|k| dirac(k as f64)).collect(), 0).unwrap();
        assert!(matches!(analyze(&seq, 2, 2.0), Err(Error::LengthNotDyadic { .. })));
    }

    #[test]
    fn pyramid_new_recomputes_norms() {
        let seq = MeasureSequence::discretes(vec![dirac(0.0), dirac(0.7), dirac(1.0)], 1).unwrap();
        let pyr = analyze(&seq, 1, 2.0).unwrap();
        let rebuilt = Pyramid::new(pyr.coarse().clone(), pyr.layers().to_vec(), 2.0).unwrap();
        assert_eq!(rebuilt, pyr);
    }
}

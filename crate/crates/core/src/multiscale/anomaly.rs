use crate::multiscale::Pyramid;
use crate::scalar::Real;

/// Default multiplier of the median absolute deviation.
pub const DEFAULT_K_SIGMA: f64 = 3.0;

/// A detail flagged as unusually large for its level.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyFlag<T> {
    pub level: u32,
    pub index: usize,
    pub norm: T,
    pub time: T,
}

/// Flags odd-index details whose norm exceeds `median + k_sigma·MAD` of the
/// other nonzero norms on the same level. Leaving the candidate out keeps a
/// level with only a few large details from hiding them. Flags are sorted by
/// norm, largest first; ties keep level and index order.
pub fn detect_anomalies<T: Real>(pyr: &Pyramid<T>, k_sigma: T) -> Vec<AnomalyFlag<T>> {
    let mut flags = Vec::new();
    for (k, norms) in pyr.norms().iter().enumerate() {
        let level = k as u32 + 1;
        let nonzero: Vec<(usize, T)> = norms
            .iter()
            .copied()
            .enumerate()
            .filter(|&(i, n)| i % 2 == 1 && n > T::zero())
            .collect();
        for &(i, n) in &nonzero {
            let others: Vec<T> = nonzero.iter().filter(|&&(j, _)| j != i).map(|&(_, x)| x).collect();
            let (med, mad) = median_mad(&others);
            if n > med + k_sigma * mad {
                flags.push(AnomalyFlag {
                    level,
                    index: i,
                    norm: n,
                    time: pyr.time(level, i),
                });
            }
        }
    }
    flags.sort_by(|a, b| b.norm.partial_cmp(&a.norm).unwrap_or(std::cmp::Ordering::Equal));
    flags
}

/// Median and median absolute deviation; both zero for an empty slice.
pub(crate) fn median_mad<T: Real>(xs: &[T]) -> (T, T) {
    if xs.is_empty() {
        return (T::zero(), T::zero());
    }
    let med = median(xs.to_vec());
    let dev: Vec<T> = xs.iter().map(|&x| (x - med).abs()).collect();
    (med, median(dev))
}

fn median<T: Real>(mut v: Vec<T>) -> T {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) * T::lit(0.5)
    }
}

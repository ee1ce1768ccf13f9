//! Random instance generators and independent reference computations shared
//! by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wmt_core::{Discrete64, Gaussian64, Measure64, Sequence64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random weights bounded away from zero, normalized to sum to one.
pub fn weights(r: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| r.random_range(0.1..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|w| w / s).collect()
}

pub fn discrete(r: &mut ChaCha8Rng, m: usize, dim: usize, spread: f64) -> Discrete64 {
    let atoms = (0..m)
        .map(|_| (0..dim).map(|_| r.random_range(-spread..spread)).collect())
        .collect();
    Discrete64::new(atoms, weights(r, m)).unwrap()
}

pub fn gaussian(r: &mut ChaCha8Rng) -> Gaussian64 {
    Gaussian64::new(r.random_range(-2.0..2.0), r.random_range(0.2..3.0)).unwrap()
}

/// Random walk of discrete measures: each element moves every atom of the
/// previous one and occasionally changes the atom count.
pub fn discrete_sequence(r: &mut ChaCha8Rng, n: usize, level: u32, dim: usize) -> Sequence64 {
    let elems = (0..n)
        .map(|_| {
            let m = r.random_range(1..=5);
            discrete(r, m, dim, 2.0)
        })
        .collect();
    Sequence64::discretes(elems, level).unwrap()
}

pub fn gaussian_sequence(r: &mut ChaCha8Rng, n: usize, level: u32) -> Sequence64 {
    Sequence64::gaussians((0..n).map(|_| gaussian(r)).collect(), level).unwrap()
}

/// `W_p^p` between one-dimensional discrete measures by integrating the
/// difference of quantile functions over `(0, 1)`.
pub fn quantile_cost(mu: &Discrete64, nu: &Discrete64, p: f64) -> f64 {
    assert!(mu.dim() == 1 && nu.dim() == 1);
    let sorted = |d: &Discrete64| {
        let mut v: Vec<(f64, f64)> = d.points().iter().copied().zip(d.weights().iter().copied()).collect();
        v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        v
    };
    let (a, b) = (sorted(mu), sorted(nu));
    let cum = |v: &[(f64, f64)]| {
        let mut acc = 0.0;
        v.iter().map(|&(_, w)| { acc += w; acc }).collect::<Vec<f64>>()
    };
    let (ca, cb) = (cum(&a), cum(&b));
    let mut cuts: Vec<f64> = ca.iter().chain(&cb).map(|&c| c.min(1.0)).collect();
    cuts.push(0.0);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let quantile = |v: &[(f64, f64)], c: &[f64], u: f64| {
        let k = c.iter().position(|&x| x >= u).unwrap_or(v.len() - 1);
        v[k].0
    };
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let u = 0.5 * (w[0] + w[1]);
        total += len * (quantile(&a, &ca, u) - quantile(&b, &cb, u)).abs().powf(p);
    }
    total
}

/// Gaussian `W_2` as the Euclidean distance of `(mean, std)` pairs.
pub fn gaussian_w2_ref(a: &Gaussian64, b: &Gaussian64) -> f64 {
    let ds = a.variance().sqrt() - b.variance().sqrt();
    ((a.mean() - b.mean()).powi(2) + ds * ds).sqrt()
}

/// Continuous piecewise-affine map `x ↦ x·s + Σ_k c_k max(0, ⟨a_k, x⟩ − β_k)`.
pub struct PiecewiseAffine {
    scale: f64,
    hinges: Vec<(Vec<f64>, f64, Vec<f64>)>,
}

impl PiecewiseAffine {
    pub fn random(r: &mut ChaCha8Rng, dim: usize) -> Self {
        let k = r.random_range(1..=4);
        let hinges = (0..k)
            .map(|_| {
                let a = (0..dim).map(|_| r.random_range(-1.0..1.0)).collect();
                let beta = r.random_range(-1.0..1.0);
                let c = (0..dim).map(|_| r.random_range(-1.5..1.5)).collect();
                (a, beta, c)
            })
            .collect();
        Self {
            scale: r.random_range(0.3..2.0),
            hinges,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = x.iter().map(|v| v * self.scale).collect();
        for (a, beta, c) in &self.hinges {
            let s: f64 = a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() - beta;
            if s > 0.0 {
                for (yk, ck) in y.iter_mut().zip(c) {
                    *yk += ck * s;
                }
            }
        }
        y
    }
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Largest difference quotient of `f` over pairs of distinct points.
pub fn discrete_lipschitz(f: &PiecewiseAffine, points: &[Vec<f64>]) -> f64 {
    let images: Vec<Vec<f64>> = points.iter().map(|p| f.apply(p)).collect();
    let mut l: f64 = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let dx = euclid(&points[i], &points[j]);
            if dx > 0.0 {
                l = l.max(euclid(&images[i], &images[j]) / dx);
            }
        }
    }
    l
}

pub fn max_elementwise_distance(a: &Sequence64, b: &Sequence64, p: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    a.elements()
        .iter()
        .zip(b.elements())
        .map(|(x, y)| wmt_core::transport_ops::distance(x, y, p).unwrap())
        .fold(0.0, f64::max)
}

pub fn as_discrete(m: &Measure64) -> &Discrete64 {
    m.as_discrete().unwrap()
}

/// Bound check for one perturbation of a Gaussian pyramid.
///
/// Both pyramids are synthesized level by level. With `d_ℓ` the largest
/// elementwise distance at level `ℓ`, `K` the largest observed ratio
/// `𝒲(Sμ, Sμ̃)/𝒲(μ, μ̃)`, `C` the largest `|1 + A|` and `e_ℓ` the largest
/// detail difference measured on the perturbed prediction, the triangle
/// inequality gives `d_ℓ ≤ C·K·d_{ℓ−1} + e_ℓ`, hence
/// `d_J ≤ max(1, (KC)^J)·(d_0 + Σ e_ℓ)`.
pub struct StabilityTrial {
    pub reconstruction: f64,
    pub bound: f64,
}

pub fn stability_trial(r: &mut ChaCha8Rng, levels: u32) -> StabilityTrial {
    use wmt_core::gaussian_ot::AffineMap;
    use wmt_core::multiscale::{analyze, subdivide, Pyramid};
    use wmt_core::transport_ops::{detail_difference_norm, oplus, Detail, DetailLayer};

    let blocks = r.random_range(1..=2usize);
    let seq = gaussian_sequence(r, (blocks << levels) + 1, levels);
    let pyr = analyze(&seq, levels, 2.0).unwrap();

    let coarse: Vec<Gaussian64> = pyr
        .coarse()
        .elements()
        .iter()
        .map(|m| {
            let g = m.as_gaussian().unwrap();
            let std = g.std() * (1.0 + r.random_range(-0.05..0.05));
            Gaussian64::from_std(g.mean() + r.random_range(-0.05..0.05), std).unwrap()
        })
        .collect();
    let coarse = Sequence64::gaussians(coarse, 0).unwrap();
    let layers: Vec<DetailLayer<f64>> = pyr
        .layers()
        .iter()
        .map(|layer| DetailLayer {
            level: layer.level,
            details: layer
                .details
                .iter()
                .map(|d| match d {
                    Detail::Affine(a) => Detail::Affine(AffineMap::new(
                        (a.slope + r.random_range(-0.05..0.05)).max(-0.9),
                        a.intercept + r.random_range(-0.05..0.05),
                    )),
                    other => other.clone(),
                })
                .collect(),
        })
        .collect();
    let other = Pyramid::new(coarse, layers, 2.0).unwrap();

    let lip = |d: &Detail<f64>| match d {
        Detail::Affine(a) => (1.0 + a.slope).abs(),
        _ => 1.0,
    };
    let c = pyr
        .layers()
        .iter()
        .chain(other.layers())
        .flat_map(|l| &l.details)
        .map(lip)
        .fold(1.0, f64::max);

    let (mut a, mut b) = (pyr.coarse().clone(), other.coarse().clone());
    let d0 = max_elementwise_distance(&a, &b, 2.0);
    let mut k: f64 = 0.0;
    let mut errors = 0.0;
    for (la, lb) in pyr.layers().iter().zip(other.layers()) {
        let before = max_elementwise_distance(&a, &b, 2.0);
        let (sa, sb) = (subdivide(&a, 2.0).unwrap(), subdivide(&b, 2.0).unwrap());
        let after = max_elementwise_distance(&sa, &sb, 2.0);
        if before > 0.0 {
            k = k.max(after / before);
        }
        let mut e: f64 = 0.0;
        let mut na = Vec::new();
        let mut nb = Vec::new();
        for (i, (da, db)) in la.details.iter().zip(&lb.details).enumerate() {
            let base = &sb.elements()[i];
            e = e.max(detail_difference_norm(da, db, base, 2.0).unwrap());
            na.push(oplus(&sa.elements()[i], da).unwrap());
            nb.push(oplus(base, db).unwrap());
        }
        errors += e;
        a = Sequence64::new(na, sa.level(), 0.0).unwrap();
        b = Sequence64::new(nb, sb.level(), 0.0).unwrap();
    }
    let factor = (k * c).powi(levels as i32).max(1.0);
    StabilityTrial {
        reconstruction: max_elementwise_distance(&a, &b, 2.0),
        bound: factor * (d0 + errors),
    }
}

/// Slack by which the two pushforward inequalities hold on one random
/// instance (both values are `rhs − lhs`, so nonnegative means satisfied).
pub fn pushforward_trial(r: &mut ChaCha8Rng) -> (f64, f64) {
    use wmt_core::discrete_ot::{solve_kantorovich, wasserstein_distance};
    use wmt_core::transport_ops::{detail_difference_norm, distance, ominus, oplus, Detail, TransportDetail};

    let dim = r.random_range(1..=3);
    let (m, n) = (r.random_range(1..=6), r.random_range(1..=6));
    let mu = discrete(r, m, dim, 2.0);
    let nu = discrete(r, n, dim, 2.0);
    let f = PiecewiseAffine::random(r, dim);
    let p = if r.random_bool(0.5) { 2.0 } else { 1.0 };

    // Two details on the same plan: ψ moves x_i to y_j, ψ̃ moves it to f(y_j).
    let base = Measure64::Discrete(mu.clone());
    let psi = match ominus(&Measure64::Discrete(nu.clone()), &base, p).unwrap() {
        Detail::Transport(t) => t,
        _ => {
            let (plan, _) = solve_kantorovich(&mu, &nu, p).unwrap();
            TransportDetail::new(dim, vec![0.0; m * n * dim], plan).unwrap()
        }
    };
    let mut moved = Vec::with_capacity(m * n * dim);
    for i in 0..m {
        for j in 0..n {
            let fy = f.apply(nu.atom(j));
            moved.extend(fy.iter().zip(mu.atom(i)).map(|(a, b)| a - b));
        }
    }
    let other = Detail::Transport(TransportDetail::new(dim, moved, psi.plan().clone()).unwrap());
    let psi = Detail::Transport(psi);
    let lhs1 = distance(&oplus(&base, &psi).unwrap(), &oplus(&base, &other).unwrap(), p).unwrap();
    let rhs1 = detail_difference_norm(&psi, &other, &base, p).unwrap();

    let points: Vec<Vec<f64>> = mu.atoms().chain(nu.atoms()).map(<[f64]>::to_vec).collect();
    let lip = discrete_lipschitz(&f, &points);
    let fmu = mu.pushforward(|x| f.apply(x));
    let fnu = nu.pushforward(|x| f.apply(x));
    let lhs2 = wasserstein_distance(&fmu, &fnu, p).unwrap();
    let rhs2 = lip * wasserstein_distance(&mu, &nu, p).unwrap();
    (rhs1 - lhs1, rhs2 - lhs2)
}

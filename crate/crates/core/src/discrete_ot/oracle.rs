//! Exhaustive optimal transport for tiny instances, used as a test oracle.
//!
//! Uniform square problems enumerate permutations (the vertices of the
//! Birkhoff polytope). General problems search the vertices of the
//! transportation polytope: every vertex is reached by some order of
//! saturating cells, where a step sends `min(r_i, c_j)` through a live cell
//! and retires its row or column. The search is branch and bound: a branch is
//! cut only when its accumulated cost plus an admissible lower bound on the
//! remainder already reaches the incumbent, or when the same residual state
//! was reached before at no greater cost. Both cuts keep the result exact.

use std::collections::HashMap;

use crate::discrete_ot::{check_exponent, cost_matrix, TransportCost};
use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;
use crate::scalar::Real;

const MAX_ATOMS: usize = 6;

/// Provably optimal transport cost for measures with at most 6 atoms each.
pub fn brute_force_ot<T: Real>(
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
    p: T,
) -> Result<TransportCost<T>> {
    let (m, n) = (mu.len(), nu.len());
    if m > MAX_ATOMS || n > MAX_ATOMS {
        return Err(Error::TooLarge { rows: m, cols: n });
    }
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            found: nu.dim(),
        });
    }
    check_exponent(p)?;
    let cost = cost_matrix(mu, nu, p);
    let value = if m == n && is_uniform(mu.weights()) && is_uniform(nu.weights()) {
        best_permutation(&cost, n) / T::from_usize_lossy(n)
    } else {
        VertexSearch::new(&cost, n).best(mu.weights(), nu.weights())
    };
    Ok(TransportCost::from_value(value, p))
}

fn is_uniform<T: Real>(w: &[T]) -> bool {
    let target = T::one() / T::from_usize_lossy(w.len());
    w.iter().all(|&x| (x - target).abs() <= T::tol(1e-12))
}

fn best_permutation<T: Real>(cost: &[T], n: usize) -> T {
    fn go<T: Real>(cost: &[T], n: usize, row: usize, used: &mut [bool], acc: T, best: &mut T) {
        if row == n {
            if acc < *best {
                *best = acc;
            }
            return;
        }
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                go(cost, n, row + 1, used, acc + cost[row * n + j], best);
                used[j] = false;
            }
        }
    }
    let mut best = T::infinity();
    go(cost, n, 0, &mut vec![false; n], T::zero(), &mut best);
    best
}

/// Residuals are compared after rounding to this many units per mass unit.
const STATE_SCALE: f64 = 1e12;

type StateKey = (u8, u8, Vec<i64>);

struct VertexSearch<'a, T> {
    cost: &'a [T],
    cols: usize,
    best: T,
    seen: HashMap<StateKey, T>,
}

impl<'a, T: Real> VertexSearch<'a, T> {
    fn new(cost: &'a [T], cols: usize) -> Self {
        Self {
            cost,
            cols,
            best: T::infinity(),
            seen: HashMap::new(),
        }
    }

    fn best(mut self, supply: &[T], demand: &[T]) -> T {
        let rows = (1u8 << supply.len()) - 1;
        let cols = (1u8 << demand.len()) - 1;
        self.descend(rows, cols, &mut supply.to_vec(), &mut demand.to_vec(), T::zero());
        self.best
    }

    fn descend(&mut self, rows: u8, cols: u8, r: &mut [T], c: &mut [T], acc: T) {
        if rows == 0 || cols == 0 {
            if acc < self.best {
                self.best = acc;
            }
            return;
        }
        if acc + self.lower_bound(rows, cols, r, c) >= self.best {
            return;
        }
        let key = (rows, cols, quantize(rows, cols, r, c));
        match self.seen.get(&key) {
            Some(&prev) if prev <= acc => return,
            _ => {
                self.seen.insert(key, acc);
            }
        }
        let mut cells: Vec<(usize, usize)> = live(rows)
            .flat_map(|i| live(cols).map(move |j| (i, j)))
            .collect();
        cells.sort_by(|a, b| self.at(a.0, a.1).as_f64().total_cmp(&self.at(b.0, b.1).as_f64()));
        for (i, j) in cells {
            let x = r[i].min(c[j]);
            let (ri, cj) = (r[i], c[j]);
            r[i] = ri - x;
            c[j] = cj - x;
            let step = acc + x * self.at(i, j);
            if ri <= cj {
                self.descend(rows & !(1 << i), cols, r, c, step);
            } else {
                self.descend(rows, cols & !(1 << j), r, c, step);
            }
            r[i] = ri;
            c[j] = cj;
        }
    }

    /// Every unit of remaining supply (or demand) pays at least the cheapest
    /// live cost on its line.
    fn lower_bound(&self, rows: u8, cols: u8, r: &[T], c: &[T]) -> T {
        let by_row: T = live(rows)
            .map(|i| r[i] * live(cols).map(|j| self.at(i, j)).fold(T::infinity(), T::min))
            .sum();
        let by_col: T = live(cols)
            .map(|j| c[j] * live(rows).map(|i| self.at(i, j)).fold(T::infinity(), T::min))
            .sum();
        by_row.max(by_col)
    }

    fn at(&self, i: usize, j: usize) -> T {
        self.cost[i * self.cols + j]
    }
}

fn live(mask: u8) -> impl Iterator<Item = usize> {
    (0..8).filter(move |k| mask & (1 << k) != 0)
}

fn quantize<T: Real>(rows: u8, cols: u8, r: &[T], c: &[T]) -> Vec<i64> {
    live(rows)
        .map(|i| r[i])
        .chain(live(cols).map(|j| c[j]))
        .map(|x| (x.as_f64() * STATE_SCALE).round() as i64)
        .collect()
}

//! Network simplex for the transportation problem.
//!
//! The basis is a spanning tree of the bipartite graph with `m` supply nodes
//! and `n` demand nodes. Pricing and ratio tests follow Bland's rule
//! (lowest-index improving cell enters, lowest-index blocking cell leaves),
//! which rules out cycling and makes the result a deterministic function of
//! the input.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Returns a row-major `m × n` optimal flow for supplies `a`, demands `b`
/// and costs `cost` (row-major). `a` and `b` must have equal totals.
pub(crate) fn solve_transport<T: Real>(a: &[T], b: &[T], cost: &[T]) -> Result<Vec<T>> {
    let m = a.len();
    let n = b.len();
    debug_assert_eq!(cost.len(), m * n);
    if m == 0 || n == 0 {
        return Ok(Vec::new());
    }
    let mut tree = Basis::northwest_corner(a, b);
    if m == 1 || n == 1 {
        return Ok(tree.flow);
    }

    let scale = cost.iter().fold(T::zero(), |acc, &c| acc.max(c.abs()));
    let eps = scale * T::epsilon() * T::from_usize_lossy(4 * (m + n));
    let max_pivots = 50 * m * n * (m + n) + 1000;

    let mut u = vec![T::zero(); m];
    let mut v = vec![T::zero(); n];
    for _ in 0..max_pivots {
        tree.potentials(cost, &mut u, &mut v);
        let entering = (0..m * n).find(|&c| {
            !tree.is_basic[c] && cost[c] - u[c / n] - v[c % n] < -eps
        });
        let Some(entering) = entering else {
            return Ok(tree.flow);
        };
        tree.pivot(entering);
    }
    Err(Error::SolverFailure {
        iterations: max_pivots,
    })
}

struct Basis<T> {
    m: usize,
    n: usize,
    flow: Vec<T>,
    is_basic: Vec<bool>,
    cells: Vec<usize>,
}

impl<T: Real> Basis<T> {
    fn northwest_corner(a: &[T], b: &[T]) -> Self {
        let (m, n) = (a.len(), b.len());
        let mut flow = vec![T::zero(); m * n];
        let mut is_basic = vec![false; m * n];
        let mut cells = Vec::with_capacity(m + n - 1);
        let (mut i, mut j) = (0, 0);
        let (mut ra, mut rb) = (a[0], b[0]);
        loop {
            let x = ra.min(rb).max(T::zero());
            let c = i * n + j;
            flow[c] = x;
            is_basic[c] = true;
            cells.push(c);
            ra = ra - x;
            rb = rb - x;
            if i == m - 1 && j == n - 1 {
                break;
            }
            let next_row = if i == m - 1 {
                false
            } else if j == n - 1 {
                true
            } else {
                ra <= rb
            };
            if next_row {
                i += 1;
                ra = a[i];
            } else {
                j += 1;
                rb = b[j];
            }
        }
        Self {
            m,
            n,
            flow,
            is_basic,
            cells,
        }
    }

    /// Adjacency of the spanning tree: nodes `0..m` are rows, `m..m+n` columns.
    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.m + self.n];
        for &c in &self.cells {
            let (i, j) = (c / self.n, c % self.n);
            adj[i].push((self.m + j, c));
            adj[self.m + j].push((i, c));
        }
        adj
    }

    /// Dual potentials with `u_0 = 0` and `u_i + v_j = c_ij` on basic cells.
    fn potentials(&self, cost: &[T], u: &mut [T], v: &mut [T]) {
        let adj = self.adjacency();
        let mut seen = vec![false; self.m + self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        u[0] = T::zero();
        while let Some(node) = queue.pop_front() {
            for &(next, c) in &adj[node] {
                if seen[next] {
                    continue;
                }
                seen[next] = true;
                if next >= self.m {
                    v[next - self.m] = cost[c] - u[node];
                } else {
                    u[next] = cost[c] - v[node - self.m];
                }
                queue.push_back(next);
            }
        }
    }

    fn pivot(&mut self, entering: usize) {
        let (ei, ej) = (entering / self.n, entering % self.n);
        let adj = self.adjacency();
        // Tree path from column node `ej` back to row node `ei`.
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; self.m + self.n];
        let mut seen = vec![false; self.m + self.n];
        let mut queue = VecDeque::from([ei]);
        seen[ei] = true;
        while let Some(node) = queue.pop_front() {
            for &(next, c) in &adj[node] {
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = Some((node, c));
                    queue.push_back(next);
                }
            }
        }
        let mut path = Vec::new();
        let mut node = self.m + ej;
        while node != ei {
            let (prev, c) = parent[node].expect("basis is a spanning tree");
            path.push(c);
            node = prev;
        }

        // Cells at even positions on the path lose flow, odd ones gain it.
        let mut theta = T::infinity();
        let mut leaving = usize::MAX;
        for &c in path.iter().step_by(2) {
            let f = self.flow[c];
            if f < theta || (f == theta && c < leaving) {
                theta = f;
                leaving = c;
            }
        }
        self.flow[entering] = theta;
        for (k, &c) in path.iter().enumerate() {
            if k % 2 == 0 {
                self.flow[c] = (self.flow[c] - theta).max(T::zero());
            } else {
                self.flow[c] = self.flow[c] + theta;
            }
        }
        self.flow[leaving] = T::zero();
        self.is_basic[leaving] = false;
        self.is_basic[entering] = true;
        let slot = self
            .cells
            .iter()
            .position(|&c| c == leaving)
            .expect("leaving cell is basic");
        self.cells[slot] = entering;
    }
}

//! Transportation simplex on a dense cost matrix.
//!
//! The basis is a spanning tree of the bipartite row/column graph with
//! `m + n - 1` cells, started from the northwest corner. Entering cells use
//! the most negative reduced cost (ties: smallest `(i, j)`); after a run of
//! degenerate pivots the rule falls back to Bland's first-improving cell,
//! which cannot cycle. Leaving cells are the smallest `(i, j)` among the
//! minimizers of the ratio test.

use std::collections::VecDeque;

use crate::error::{invalid, Result};

/// Optimal flows `(i, j, x)` with `x > 0` for supplies `a`, demands `b`
/// (equal totals) and row-major costs.
pub fn solve(a: &[f64], b: &[f64], cost: &[f64]) -> Result<Vec<(usize, usize, f64)>> {
    let (m, n) = (a.len(), b.len());
    if m == 0 || n == 0 || cost.len() != m * n {
        return Err(invalid("transport problem needs nonempty supports and an m×n cost matrix"));
    }
    let mut flow = vec![0.0; m * n];
    let mut basic = northwest(a, b, &mut flow);
    let mut in_basis = vec![false; m * n];
    for &(i, j) in &basic {
        in_basis[i * n + j] = true;
    }
    let cmax = cost.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
    let tol = 1e-13 * (1.0 + cmax);
    let max_iter = 100 * (m + n) * (m + n) + 1000;
    let mut degenerate_run = 0usize;
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    for _ in 0..max_iter {
        let adj = adjacency(&basic, m, n);
        potentials(&adj, cost, m, &mut u, &mut v);
        let bland = degenerate_run > m + n;
        let Some((p, q)) = entering(cost, &in_basis, &u, &v, m, n, tol, bland) else {
            return Ok((0..m * n).filter(|&c| flow[c] > 0.0).map(|c| (c / n, c % n, flow[c])).collect());
        };
        let cycle = cycle_cells(&adj, p, q, m, n);
        // cycle[0] is the entering cell (+); signs alternate from there.
        let (mut theta, mut leave) = (f64::INFINITY, usize::MAX);
        for &cell in cycle.iter().skip(1).step_by(2) {
            let x = flow[cell];
            if x < theta || (x == theta && cell < leave) {
                theta = x;
                leave = cell;
            }
        }
        for (k, &cell) in cycle.iter().enumerate() {
            if k % 2 == 0 {
                flow[cell] += theta;
            } else {
                flow[cell] -= theta;
            }
        }
        flow[leave] = 0.0;
        in_basis[leave] = false;
        in_basis[p * n + q] = true;
        let pos = basic.iter().position(|&(i, j)| i * n + j == leave).expect("leaving cell is basic");
        basic[pos] = (p, q);
        degenerate_run = if theta == 0.0 { degenerate_run + 1 } else { 0 };
    }
    Err(invalid(format!("transport simplex did not converge in {max_iter} pivots")))
}

fn northwest(a: &[f64], b: &[f64], flow: &mut [f64]) -> Vec<(usize, usize)> {
    let (m, n) = (a.len(), b.len());
    let (mut ra, mut rb) = (a.to_vec(), b.to_vec());
    let (mut i, mut j) = (0, 0);
    let mut basic = Vec::with_capacity(m + n - 1);
    loop {
        let x = ra[i].min(rb[j]).max(0.0);
        flow[i * n + j] = x;
        basic.push((i, j));
        ra[i] -= x;
        rb[j] -= x;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if i == m - 1 {
            j += 1;
        } else if j == n - 1 || ra[i] <= rb[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    basic
}

/// Node `i < m` is row `i`, node `m + j` is column `j`; edges carry the cell.
fn adjacency(basic: &[(usize, usize)], m: usize, n: usize) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); m + n];
    for &(i, j) in basic {
        adj[i].push((m + j, i * n + j));
        adj[m + j].push((i, i * n + j));
    }
    adj
}

fn potentials(adj: &[Vec<(usize, usize)>], cost: &[f64], m: usize, u: &mut [f64], v: &mut [f64]) {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    u[0] = 0.0;
    while let Some(node) = queue.pop_front() {
        for &(next, cell) in &adj[node] {
            if seen[next] {
                continue;
            }
            seen[next] = true;
            if node < m {
                v[next - m] = cost[cell] - u[node];
            } else {
                u[next] = cost[cell] - v[node - m];
            }
            queue.push_back(next);
        }
    }
    debug_assert!(seen.iter().all(|s| *s), "basis is not spanning");
}

#[allow(clippy::too_many_arguments)]
fn entering(
    cost: &[f64],
    in_basis: &[bool],
    u: &[f64],
    v: &[f64],
    m: usize,
    n: usize,
    tol: f64,
    bland: bool,
) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut best_r = -tol;
    for i in 0..m {
        for j in 0..n {
            let c = i * n + j;
            if in_basis[c] {
                continue;
            }
            let r = cost[c] - u[i] - v[j];
            if r < best_r {
                if bland {
                    return Some((i, j));
                }
                best_r = r;
                best = Some((i, j));
            }
        }
    }
    best
}

/// Cells of the cycle closed by entering `(p, q)`: the entering cell first,
/// then the tree path from column `q` back to row `p`.
fn cycle_cells(adj: &[Vec<(usize, usize)>], p: usize, q: usize, m: usize, n: usize) -> Vec<usize> {
    let mut parent = vec![(usize::MAX, usize::MAX); m + n];
    let mut seen = vec![false; m + n];
    let mut queue = VecDeque::from([p]);
    seen[p] = true;
    while let Some(node) = queue.pop_front() {
        if node == m + q {
            break;
        }
        for &(next, cell) in &adj[node] {
            if !seen[next] {
                seen[next] = true;
                parent[next] = (node, cell);
                queue.push_back(next);
            }
        }
    }
    let mut cells = vec![p * n + q];
    let mut node = m + q;
    while node != p {
        let (prev, cell) = parent[node];
        cells.push(cell);
        node = prev;
    }
    cells
}

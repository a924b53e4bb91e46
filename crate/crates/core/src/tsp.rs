//! Tour ordering: exact Held-Karp up to [`EXACT_LIMIT`] nodes, nearest
//! neighbor plus 2-opt beyond that.
//!
//! Orders are open lists starting at the depot `0`; the closing leg back to
//! the depot is implied.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::metrics::{euclidean, manhattan};

/// Largest node count solved exactly (2^15 subsets x 15 end nodes).
pub const EXACT_LIMIT: usize = 16;

const IMPROVE_EPS: f64 = 1e-10;

pub type DistMatrix = Vec<Vec<f64>>;

pub fn tour_cost(order: &[usize], dist: &[Vec<f64>]) -> f64 {
    let n = order.len();
    (0..n).map(|k| dist[order[k]][order[(k + 1) % n]]).sum()
}

pub fn distance_matrix(points: &[Point], f: impl Fn(Point, Point) -> f64) -> DistMatrix {
    points
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            points
                .iter()
                .enumerate()
                .map(|(j, &q)| if i == j { 0.0 } else { f(p, q) })
                .collect()
        })
        .collect()
}

fn check_matrix(dist: &[Vec<f64>]) -> Result<()> {
    let n = dist.len();
    for (i, row) in dist.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidArgument("distance matrix must be square".into()));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("distance matrix has non-finite entries".into()));
        }
        if row[i] != 0.0 {
            return Err(Error::InvalidArgument("distance matrix diagonal must be zero".into()));
        }
    }
    Ok(())
}

/// Exact minimum cycle through all nodes, starting at node 0.
pub fn held_karp(dist: &[Vec<f64>]) -> Result<(Vec<usize>, f64)> {
    let n = dist.len();
    if !(2..=EXACT_LIMIT).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "held_karp handles 2..={EXACT_LIMIT} nodes, got {n}"
        )));
    }
    check_matrix(dist)?;
    // Subsets over nodes 1..n, bit k <-> node k + 1.
    let k = n - 1;
    let full = (1usize << k) - 1;
    let mut best = vec![f64::INFINITY; (full + 1) * k];
    let mut parent = vec![usize::MAX; (full + 1) * k];
    for j in 0..k {
        best[(1 << j) * k + j] = dist[0][j + 1];
    }
    for mask in 1..=full {
        for j in 0..k {
            if mask & (1 << j) == 0 {
                continue;
            }
            let cur = best[mask * k + j];
            if !cur.is_finite() {
                continue;
            }
            for next in 0..k {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let nm = mask | (1 << next);
                let cand = cur + dist[j + 1][next + 1];
                if cand < best[nm * k + next] {
                    best[nm * k + next] = cand;
                    parent[nm * k + next] = j;
                }
            }
        }
    }
    let (mut last, mut cost) = (0, f64::INFINITY);
    for j in 0..k {
        let c = best[full * k + j] + dist[j + 1][0];
        if c < cost {
            cost = c;
            last = j;
        }
    }
    let mut rev = Vec::with_capacity(k);
    let mut mask = full;
    let mut j = last;
    while j != usize::MAX {
        rev.push(j + 1);
        let p = parent[mask * k + j];
        mask &= !(1 << j);
        j = p;
    }
    let mut order = vec![0];
    order.extend(rev.into_iter().rev());
    Ok((order, cost))
}

fn nearest_neighbor(dist: &[Vec<f64>]) -> Vec<usize> {
    let n = dist.len();
    let mut visited = vec![false; n];
    visited[0] = true;
    let mut order = vec![0];
    let mut cur = 0;
    for _ in 1..n {
        let mut pick = usize::MAX;
        for j in 0..n {
            if !visited[j] && (pick == usize::MAX || dist[cur][j] < dist[cur][pick]) {
                pick = j;
            }
        }
        visited[pick] = true;
        order.push(pick);
        cur = pick;
    }
    order
}

/// First-improvement 2-opt on a symmetric matrix, depot kept at position 0.
pub fn two_opt(order: &mut [usize], dist: &[Vec<f64>]) {
    let n = order.len();
    if n < 4 {
        return;
    }
    let mut improved = true;
    while improved {
        improved = false;
        for i in 1..n - 1 {
            for j in i + 1..n {
                let (a, b) = (order[i - 1], order[i]);
                let (c, e) = (order[j], order[(j + 1) % n]);
                let delta = dist[a][c] + dist[b][e] - dist[a][b] - dist[c][e];
                if delta < -IMPROVE_EPS {
                    order[i..=j].reverse();
                    improved = true;
                }
            }
        }
    }
}

/// Nearest neighbor from the depot (ties to the lowest id), then 2-opt to a
/// local optimum. Expects a symmetric matrix.
pub fn nn_two_opt(dist: &[Vec<f64>]) -> Result<(Vec<usize>, f64)> {
    if dist.len() < 2 {
        return Err(Error::InvalidArgument("a tour needs at least 2 nodes".into()));
    }
    check_matrix(dist)?;
    let mut order = nearest_neighbor(dist);
    two_opt(&mut order, dist);
    let cost = tour_cost(&order, dist);
    Ok((order, cost))
}

/// Exact for small inputs, heuristic otherwise. A single node is the
/// trivial tour.
pub fn solve_tour(dist: &[Vec<f64>]) -> Result<(Vec<usize>, f64)> {
    match dist.len() {
        0 => Err(Error::InvalidArgument("empty distance matrix".into())),
        1 => Ok((vec![0], 0.0)),
        n if n <= EXACT_LIMIT => held_karp(dist),
        _ => nn_two_opt(dist),
    }
}

/// A visiting order with its hitting points and both true metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteState {
    /// Node ids from the depot; the tour closes back to 0.
    pub order: Vec<usize>,
    /// Position of each node in `order`, indexed by node id.
    pub u: Vec<usize>,
    /// Hitting point per node id.
    pub hitting_points: Vec<Point>,
    pub manhattan_cost: f64,
    pub euclidean_cost: f64,
}

pub fn cycle_cost(order: &[usize], points: &[Point], f: impl Fn(Point, Point) -> f64) -> f64 {
    let n = order.len();
    (0..n)
        .map(|k| f(points[order[k]], points[order[(k + 1) % n]]))
        .sum()
}

impl RouteState {
    pub fn new(order: Vec<usize>, hitting_points: Vec<Point>) -> Self {
        let mut u = vec![usize::MAX; hitting_points.len()];
        for (pos, &node) in order.iter().enumerate() {
            if node < u.len() {
                u[node] = pos;
            }
        }
        let manhattan_cost = cycle_cost(&order, &hitting_points, manhattan);
        let euclidean_cost = cycle_cost(&order, &hitting_points, euclidean);
        Self {
            order,
            u,
            hitting_points,
            manhattan_cost,
            euclidean_cost,
        }
    }

    /// Hamiltonian cycle from the depot with consistent positions.
    pub fn is_valid_cycle(&self) -> bool {
        let n = self.hitting_points.len();
        if self.order.len() != n || n == 0 || self.order[0] != 0 || self.u.len() != n {
            return false;
        }
        let mut seen = vec![false; n];
        for (pos, &node) in self.order.iter().enumerate() {
            if node >= n || seen[node] || self.u[node] != pos {
                return false;
            }
            seen[node] = true;
        }
        true
    }

    /// Closed polyline of hitting points, depot first and last.
    pub fn closed_path(&self) -> Vec<Point> {
        let mut path: Vec<Point> = self.order.iter().map(|&i| self.hitting_points[i]).collect();
        if let Some(&first) = path.first() {
            path.push(first);
        }
        path
    }
}

//! Fragmented relocation solver.
//!
//! 1. Build one inscribed region per sensor.
//! 2. Merge overlapping disks into super-nodes: every member of a group
//!    starts from one shared point in the intersection of their regions.
//! 3. Order the nodes with a TSP over Euclidean distances of those points.
//! 4. Sweep the route relocating each hitting point against its neighbors
//!    (one hop, then two hops), each move followed by a pull toward the
//!    line joining the neighbors. Repeat while the surrogate cost improves.
//! 5. Re-run the TSP on the moved points under the surrogate cost and loop
//!    again if the new order is cheaper.
//!
//! Every move is accepted only if it does not increase the surrogate cost
//! of the legs it touches, so the tour cost never goes up.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{foot_of_perpendicular, ConvexRegion, Point, RegionKind, CONTAINS_TOL};
use crate::instance::Instance;
use crate::lp::{abs_gadget, solve_lp, LpProblem, LpStatus, Sense};
use crate::metrics::{euclidean, EdgeCost, ObjectiveConfig, RegressionModel};
use crate::milp::Linearization;
use crate::tsp::{cycle_cost, distance_matrix, solve_tour, tour_cost, two_opt, RouteState};

/// Initial "old cost" of the relocation loop. Instances whose first tour is
/// already more expensive start from infinity instead.
pub const INITIAL_COST_SENTINEL: f64 = 1_200_000.0;

/// Relocation passes allowed per TSP round.
pub const MAX_INNER_PASSES: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub region_kind: RegionKind,
    pub obj_cfg: ObjectiveConfig,
    pub regression: Option<RegressionModel>,
    /// How the absolute values of the relocation subproblems are encoded.
    /// Both encodings have the same optimum.
    pub linearization: Linearization,
    pub max_outer_iters: usize,
    pub improvement_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            region_kind: RegionKind::Hexagon,
            obj_cfg: ObjectiveConfig::default(),
            regression: None,
            linearization: Linearization::Lin2,
            max_outer_iters: 50,
            improvement_tol: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn new(region_kind: RegionKind, obj_cfg: ObjectiveConfig) -> Self {
        Self {
            region_kind,
            obj_cfg,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iters == 0 {
            return Err(Error::InvalidArgument("max_outer_iters must be positive".into()));
        }
        if !(self.improvement_tol > 0.0) {
            return Err(Error::InvalidArgument("improvement_tol must be positive".into()));
        }
        let ec = self.edge_cost()?;
        if let Some(m) = ec.model {
            if m.c_dx < 0.0 || m.c_dy < 0.0 {
                return Err(Error::InvalidArgument(
                    "regression coefficients must be nonnegative for a convex relocation".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn edge_cost(&self) -> Result<EdgeCost> {
        EdgeCost::new(self.obj_cfg, self.regression.as_ref())
    }

    /// Short tag such as `PH-Lin2-Reg-Proj`.
    pub fn label(&self) -> String {
        let mut s = format!(
            "{}-{}",
            match self.region_kind {
                RegionKind::Square => "PS",
                RegionKind::Hexagon => "PH",
            },
            self.linearization.label()
        );
        if self.obj_cfg.mode == crate::metrics::ObjectiveMode::Regression {
            s.push_str("-Reg");
        }
        if self.obj_cfg.projection8 {
            s.push_str("-Proj");
        }
        s
    }
}

pub fn build_regions(inst: &Instance, kind: RegionKind) -> Vec<ConvexRegion> {
    inst.sensors
        .iter()
        .map(|s| ConvexRegion::inscribe(kind, s.center(), s.radius))
        .collect()
}

/// Minimizes `Σ cost(anchor, p)` over the intersection of `regions`.
///
/// When the optimum is not unique, the x coordinate is the midpoint of the
/// optimal x-range and y the midpoint of the optimal y-range at that x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub cost: EdgeCost,
    pub lin: Linearization,
}

struct PlacementLp {
    lp: LpProblem,
    x: usize,
    y: usize,
}

impl Placement {
    pub fn new(cost: EdgeCost, lin: Linearization) -> Self {
        Self { cost, lin }
    }

    pub fn manhattan() -> Self {
        Self::new(EdgeCost::manhattan(), Linearization::Lin2)
    }

    pub fn total(&self, anchors: &[Point], p: Point) -> f64 {
        anchors.iter().map(|&a| self.cost.cost(a, p)).sum()
    }

    /// `None` when the regions do not intersect.
    pub fn place(&self, anchors: &[Point], regions: &[&ConvexRegion]) -> Option<Point> {
        let (x0, x1, y0, y1) = regions.iter().fold(
            (f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY),
            |(a, b, c, d), r| {
                (
                    a.max(r.x_bounds.0),
                    b.min(r.x_bounds.1),
                    c.max(r.y_bounds.0),
                    d.min(r.y_bounds.1),
                )
            },
        );
        if x0 > x1 || y0 > y1 {
            return None;
        }
        if anchors.is_empty() {
            return self.centered_feasible(regions, (x0, x1), (y0, y1));
        }
        if self.cost.is_pure_manhattan() && regions.iter().all(|r| r.is_box()) {
            let xs: Vec<f64> = anchors.iter().map(|a| a.x).collect();
            let ys: Vec<f64> = anchors.iter().map(|a| a.y).collect();
            return Some(Point::new(
                median_in_interval(&xs, x0, x1),
                median_in_interval(&ys, y0, y1),
            ));
        }
        self.place_lp(anchors, regions, (x0, x1), (y0, y1))
    }

    fn base_lp(&self, regions: &[&ConvexRegion], xb: (f64, f64), yb: (f64, f64)) -> PlacementLp {
        let mut lp = LpProblem::new();
        let x = lp.add_var(xb.0, xb.1, 0.0);
        let y = lp.add_var(yb.0, yb.1, 0.0);
        for r in regions {
            for h in r.half_planes.iter().map(|h| h.as_le()) {
                lp.add_row(&[(x, h.a), (y, h.b)], Sense::Le, h.c);
            }
        }
        PlacementLp { lp, x, y }
    }

    /// `|terms + constant|` priced at `weight`; returns the variables whose
    /// sum equals the absolute value at an optimum.
    fn abs_term(&self, lp: &mut LpProblem, terms: &[(usize, f64)], constant: f64, weight: f64) -> Vec<usize> {
        match self.lin {
            Linearization::Lin1 => {
                let g = abs_gadget(lp, terms, constant, weight);
                vec![g.plus, g.minus]
            }
            Linearization::Lin2 => {
                // d >= expr and d >= -expr
                let d = lp.add_var(0.0, f64::INFINITY, weight);
                let mut pos = vec![(d, 1.0)];
                pos.extend(terms.iter().map(|&(j, a)| (j, -a)));
                lp.add_row(&pos, Sense::Ge, constant);
                let mut neg = vec![(d, 1.0)];
                neg.extend(terms.iter().copied());
                lp.add_row(&neg, Sense::Ge, -constant);
                vec![d]
            }
        }
    }

    fn place_lp(
        &self,
        anchors: &[Point],
        regions: &[&ConvexRegion],
        xb: (f64, f64),
        yb: (f64, f64),
    ) -> Option<Point> {
        let PlacementLp { mut lp, x, y } = self.base_lp(regions, xb, yb);
        for a in anchors {
            match &self.cost.model {
                None => {
                    self.abs_term(&mut lp, &[(x, 1.0)], -a.x, 1.0);
                    self.abs_term(&mut lp, &[(y, 1.0)], -a.y, 1.0);
                }
                Some(m) => {
                    // e >= 0, e >= c_dx |dx| + c_dy |dy| + offset
                    let dx = self.abs_term(&mut lp, &[(x, 1.0)], -a.x, 0.0);
                    let dy = self.abs_term(&mut lp, &[(y, 1.0)], -a.y, 0.0);
                    let e = lp.add_var(0.0, f64::INFINITY, 1.0);
                    let mut row = vec![(e, 1.0)];
                    row.extend(dx.iter().map(|&v| (v, -m.c_dx)));
                    row.extend(dy.iter().map(|&v| (v, -m.c_dy)));
                    lp.add_row(&row, Sense::Ge, m.offset());
                }
            }
            if self.cost.cfg.projection8 && self.cost.cfg.projection_weight > 0.0 {
                for axis in crate::geometry::projection_axes() {
                    self.abs_term(
                        &mut lp,
                        &[(x, axis.x), (y, axis.y)],
                        -(axis.x * a.x + axis.y * a.y),
                        self.cost.cfg.projection_weight,
                    );
                }
            }
        }
        let sol = solve_lp(&lp);
        if sol.status != LpStatus::Optimal {
            return None;
        }
        let first = Point::new(sol.values[x], sol.values[y]);
        Some(self.center_on_face(&lp, x, y, sol.objective_value).unwrap_or(first))
    }

    /// Midpoint tie-break over the optimal face of `lp`.
    fn center_on_face(&self, lp: &LpProblem, x: usize, y: usize, best: f64) -> Option<Point> {
        let mut face = lp.clone();
        let obj: Vec<(usize, f64)> = lp
            .objective
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, &c)| (j, c))
            .collect();
        face.add_row(&obj, Sense::Le, best + 1e-9 * best.abs().max(1.0));
        face.objective.iter_mut().for_each(|c| *c = 0.0);
        let cx = extent_mid(&mut face, x)?;
        face.bounds[x] = (cx, cx);
        let cy = extent_mid(&mut face, y)?;
        Some(Point::new(cx, cy))
    }

    fn centered_feasible(&self, regions: &[&ConvexRegion], xb: (f64, f64), yb: (f64, f64)) -> Option<Point> {
        let PlacementLp { mut lp, x, y } = self.base_lp(regions, xb, yb);
        let cx = extent_mid(&mut lp, x)?;
        lp.bounds[x] = (cx, cx);
        let cy = extent_mid(&mut lp, y)?;
        Some(Point::new(cx, cy))
    }
}

/// Midpoint of `[min var, max var]` over the feasible set of `lp`; leaves
/// the objective zeroed.
fn extent_mid(lp: &mut LpProblem, var: usize) -> Option<f64> {
    lp.objective.iter_mut().for_each(|c| *c = 0.0);
    lp.objective[var] = 1.0;
    let lo = solve_lp(lp);
    lp.objective[var] = -1.0;
    let hi = solve_lp(lp);
    lp.objective[var] = 0.0;
    if lo.is_optimal() && hi.is_optimal() {
        Some(0.5 * (lo.values[var] + hi.values[var]))
    } else {
        None
    }
}

/// Midpoint of the minimizers of `Σ |v - a|` over `[lo, hi]`.
fn median_in_interval(anchors: &[f64], lo: f64, hi: f64) -> f64 {
    let mut v = anchors.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    let (m_lo, m_hi) = (v[(k - 1) / 2], v[k / 2]);
    if m_hi <= lo {
        lo
    } else if m_lo >= hi {
        hi
    } else {
        0.5 * (m_lo.max(lo) + m_hi.min(hi))
    }
}

/// Super-node assignment: one point per sensor, shared inside each group.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperNodes {
    pub points: Vec<Point>,
    /// Groups actually merged (after splitting infeasible ones), size >= 2.
    pub merged: Vec<Vec<usize>>,
}

/// Groups of overlapping disks collapse to one point minimizing the summed
/// Manhattan distance to the members' centers, inside every member region.
/// If the inscribed regions of a group do not share a point, the group is
/// split greedily: seed with the most-overlapping pair whose regions meet,
/// add further members while the intersection stays nonempty, repeat.
pub fn super_nodes(inst: &Instance, regions: &[ConvexRegion]) -> SuperNodes {
    let placement = Placement::manhattan();
    let mut points = inst.centers();
    let mut merged = Vec::new();
    let groups = crate::geometry::disk_overlap_groups(inst);
    for group in groups.groups.iter().filter(|g| g.len() >= 2) {
        for cluster in split_group(inst, regions, group, &placement) {
            if cluster.len() < 2 {
                continue;
            }
            let anchors: Vec<Point> = cluster.iter().map(|&k| inst.sensors[k].center()).collect();
            let regs: Vec<&ConvexRegion> = cluster.iter().map(|&k| &regions[k]).collect();
            let p = placement
                .place(&anchors, &regs)
                .expect("cluster regions were checked to intersect");
            for &k in &cluster {
                points[k] = p;
            }
            merged.push(cluster);
        }
    }
    SuperNodes { points, merged }
}

fn disk_overlap(inst: &Instance, i: usize, j: usize) -> f64 {
    let (a, b) = (&inst.sensors[i], &inst.sensors[j]);
    a.radius + b.radius - euclidean(a.center(), b.center())
}

fn split_group(
    inst: &Instance,
    regions: &[ConvexRegion],
    group: &[usize],
    placement: &Placement,
) -> Vec<Vec<usize>> {
    let feasible = |members: &[usize]| {
        let regs: Vec<&ConvexRegion> = members.iter().map(|&k| &regions[k]).collect();
        placement.place(&[], &regs).is_some()
    };
    if feasible(group) {
        return vec![group.to_vec()];
    }
    let mut remaining: Vec<usize> = group.to_vec();
    let mut out = Vec::new();
    loop {
        let mut seed: Option<(usize, usize, f64)> = None;
        for (a, &i) in remaining.iter().enumerate() {
            for &j in &remaining[a + 1..] {
                let ov = disk_overlap(inst, i, j);
                if ov > 0.0 && seed.is_none_or(|(_, _, best)| ov > best) && feasible(&[i, j]) {
                    seed = Some((i, j, ov));
                }
            }
        }
        let Some((i, j, _)) = seed else {
            out.extend(remaining.iter().map(|&k| vec![k]));
            break;
        };
        let mut cluster = vec![i, j];
        remaining.retain(|&k| k != i && k != j);
        // Candidates by decreasing best overlap with the cluster.
        let mut cands: Vec<(usize, f64)> = remaining
            .iter()
            .map(|&k| (k, cluster.iter().map(|&c| disk_overlap(inst, k, c)).fold(f64::MIN, f64::max)))
            .collect();
        cands.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for (k, ov) in cands {
            if ov <= 0.0 {
                continue;
            }
            cluster.push(k);
            if feasible(&cluster) {
                remaining.retain(|&r| r != k);
            } else {
                cluster.pop();
            }
        }
        cluster.sort_unstable();
        out.push(cluster);
        if remaining.is_empty() {
            break;
        }
    }
    out.sort_by_key(|c| c[0]);
    out
}

/// Best point of `region` for the legs `prev -> p -> next`.
pub fn relocate_geo(prev_pt: Point, next_pt: Point, region: &ConvexRegion, cfg: &SolverConfig) -> Result<Point> {
    let placement = Placement::new(cfg.edge_cost()?, cfg.linearization);
    Ok(relocate_with(&placement, prev_pt, next_pt, region))
}

/// Same subproblem with the neighbors two hops away along the route.
pub fn relocate_geo1(prev2_pt: Point, next2_pt: Point, region: &ConvexRegion, cfg: &SolverConfig) -> Result<Point> {
    relocate_geo(prev2_pt, next2_pt, region, cfg)
}

fn relocate_with(placement: &Placement, a: Point, b: Point, region: &ConvexRegion) -> Point {
    placement
        .place(&[a, b], &[region])
        .expect("a nonempty region always admits a placement")
}

/// Pulls `current` toward the foot of its perpendicular on the line
/// `prev -> next`, stopping at the region boundary, and keeps the move only
/// if the two legs do not get more expensive.
pub fn ubiquit(
    prev_pt: Point,
    next_pt: Point,
    current: Point,
    region: &ConvexRegion,
    cfg: &SolverConfig,
) -> Result<Point> {
    ubiquit_with(&cfg.edge_cost()?, prev_pt, next_pt, current, region)
}

fn ubiquit_with(cost: &EdgeCost, prev: Point, next: Point, current: Point, region: &ConvexRegion) -> Result<Point> {
    let foot = if prev == next {
        prev
    } else {
        foot_of_perpendicular(current, prev, next)?
    };
    let cand = region.clip_toward(current, foot)?;
    let legs = |p: Point| cost.cost(prev, p) + cost.cost(p, next);
    Ok(if legs(cand) <= legs(current) { cand } else { current })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MfOutcome {
    pub state: RouteState,
    /// Final surrogate tour cost under the configured objective.
    pub surrogate_cost: f64,
    /// Surrogate cost after the initial ordering, each relocation pass and
    /// each accepted re-ordering.
    pub surrogate_trace: Vec<f64>,
    /// Relocation passes performed.
    pub iterations: usize,
    /// TSP re-orderings attempted.
    pub tsp_rounds: usize,
    pub merged_groups: Vec<Vec<usize>>,
    pub elapsed: Duration,
}

struct Sweep<'a> {
    regions: &'a [ConvexRegion],
    cost: EdgeCost,
    placement: Placement,
}

impl Sweep<'_> {
    fn tour(&self, order: &[usize], points: &[Point]) -> f64 {
        cycle_cost(order, points, |p, q| self.cost.cost(p, q))
    }

    /// One relocation sweep in route order with neighbors `hop` positions
    /// away, each move followed by the perpendicular pull.
    fn pass(&self, order: &[usize], points: &mut [Point], hop: usize) -> Result<()> {
        let n = order.len();
        if hop >= n {
            return Ok(());
        }
        for pos in 0..n {
            let node = order[pos];
            if node == 0 {
                continue;
            }
            let prev = points[order[(pos + n - 1) % n]];
            let next = points[order[(pos + 1) % n]];
            let legs = |p: Point| self.cost.cost(prev, p) + self.cost.cost(p, next);
            let region = &self.regions[node];
            let a = points[order[(pos + n - hop) % n]];
            let b = points[order[(pos + hop) % n]];
            let cand = relocate_with(&self.placement, a, b, region);
            if legs(cand) <= legs(points[node]) {
                points[node] = cand;
            }
            points[node] = ubiquit_with(&self.cost, prev, next, points[node], region)?;
            debug_assert!(region.contains(points[node], CONTAINS_TOL));
        }
        Ok(())
    }
}

fn non_increasing(before: f64, after: f64) -> bool {
    after <= before + 1e-9 * before.abs().max(1.0)
}

pub fn solve_mf(inst: &Instance, cfg: &SolverConfig) -> Result<MfOutcome> {
    let start = Instant::now();
    inst.validate()?;
    cfg.validate()?;
    if inst.num_nodes() < 2 {
        return Err(Error::InvalidArgument("need the depot and at least one sensor".into()));
    }
    let cost = cfg.edge_cost()?;
    let regions = build_regions(inst, cfg.region_kind);
    let sn = super_nodes(inst, &regions);
    let mut points = sn.points;

    let (mut order, _) = solve_tour(&distance_matrix(&points, euclidean))?;
    let sweep = Sweep {
        regions: &regions,
        cost,
        placement: Placement::new(cost, cfg.linearization),
    };
    let mut current = sweep.tour(&order, &points);
    let mut trace = vec![current];
    let (mut iterations, mut tsp_rounds) = (0, 0);

    loop {
        let mut old = if current > INITIAL_COST_SENTINEL {
            f64::INFINITY
        } else {
            INITIAL_COST_SENTINEL
        };
        let mut passes = 0;
        while old - current > cfg.improvement_tol && passes < MAX_INNER_PASSES {
            old = current;
            sweep.pass(&order, &mut points, 1)?;
            sweep.pass(&order, &mut points, 2)?;
            current = sweep.tour(&order, &points);
            debug_assert!(non_increasing(old, current), "{old} -> {current}");
            trace.push(current);
            passes += 1;
        }
        iterations += passes;

        if tsp_rounds >= cfg.max_outer_iters {
            break;
        }
        tsp_rounds += 1;
        let dist = distance_matrix(&points, |p, q| cost.cost(p, q));
        let (mut cand, mut cand_cost) = solve_tour(&dist)?;
        if order.len() > crate::tsp::EXACT_LIMIT {
            let mut improved = order.clone();
            two_opt(&mut improved, &dist);
            let c = tour_cost(&improved, &dist);
            if c < cand_cost {
                (cand, cand_cost) = (improved, c);
            }
        }
        let cand_cost = sweep.tour(&cand, &points).min(cand_cost);
        if current - cand_cost > cfg.improvement_tol {
            order = cand;
            current = sweep.tour(&order, &points);
            trace.push(current);
        } else {
            break;
        }
    }

    Ok(MfOutcome {
        state: RouteState::new(order, points),
        surrogate_cost: current,
        surrogate_trace: trace,
        iterations,
        tsp_rounds,
        merged_groups: sn.merged,
        elapsed: start.elapsed(),
    })
}

/// Per-check result of [`validate_solution`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Sensors whose hitting point is outside the original disk.
    pub outside_disk: Vec<usize>,
    pub route_valid: bool,
    pub manhattan_matches: bool,
    pub euclidean_matches: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.outside_disk.is_empty() && self.route_valid && self.manhattan_matches && self.euclidean_matches
    }
}

/// Checks the hitting points against the original circles (not the inner
/// regions), the route, and the stored costs.
pub fn validate_solution(inst: &Instance, rs: &RouteState, tol: f64) -> ValidationReport {
    let outside_disk = inst
        .sensors
        .iter()
        .filter(|s| {
            rs.hitting_points
                .get(s.id)
                .is_none_or(|p| p.sub(s.center()).norm_sq() > s.radius * s.radius + tol)
        })
        .map(|s| s.id)
        .collect();
    let route_valid = rs.hitting_points.len() == inst.num_nodes() && rs.is_valid_cycle();
    let (man, euc) = if route_valid {
        let fresh = RouteState::new(rs.order.clone(), rs.hitting_points.clone());
        (fresh.manhattan_cost, fresh.euclidean_cost)
    } else {
        (f64::NAN, f64::NAN)
    };
    ValidationReport {
        outside_disk,
        route_valid,
        manhattan_matches: (man - rs.manhattan_cost).abs() <= 1e-6,
        euclidean_matches: (euc - rs.euclidean_cost).abs() <= 1e-6,
    }
}

/// On-disk solution record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub instance: String,
    pub config: SolverConfig,
    /// Closed route, depot first and last.
    pub route: Vec<usize>,
    pub hitting_points: Vec<Point>,
    pub manhattan_cost: f64,
    pub euclidean_cost: f64,
    pub time_ms: f64,
    pub iterations: usize,
}

impl SolutionRecord {
    pub fn new(inst: &Instance, cfg: &SolverConfig, out: &MfOutcome) -> Self {
        let mut route = out.state.order.clone();
        route.push(0);
        Self {
            instance: inst.name.clone(),
            config: cfg.clone(),
            route,
            hitting_points: out.state.hitting_points.clone(),
            manhattan_cost: out.state.manhattan_cost,
            euclidean_cost: out.state.euclidean_cost,
            time_ms: out.elapsed.as_secs_f64() * 1e3,
            iterations: out.iterations,
        }
    }

    pub fn route_state(&self) -> Result<RouteState> {
        let mut order = self.route.clone();
        if order.len() > 1 && order.last() == Some(&0) {
            order.pop();
        }
        let rs = RouteState::new(order, self.hitting_points.clone());
        if !rs.is_valid_cycle() {
            return Err(Error::InvalidArgument("solution route is not a Hamiltonian cycle".into()));
        }
        Ok(rs)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("solution: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{inscribe_hexagon, inscribe_square};
    use crate::metrics::{manhattan, ObjectiveMode};
    use crate::rng::SplitMix64;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::SQRT_2;

    fn boxed(x0: f64, x1: f64, y0: f64, y1: f64) -> ConvexRegion {
        ConvexRegion {
            kind: RegionKind::Square,
            center: Point::new(0.5 * (x0 + x1), 0.5 * (y0 + y1)),
            radius: f64::NAN,
            x_bounds: (x0, x1),
            y_bounds: (y0, y1),
            half_planes: vec![],
        }
    }

    fn manhattan_cfg(kind: RegionKind) -> SolverConfig {
        SolverConfig::new(kind, ObjectiveConfig::default())
    }

    #[test]
    fn geo_midpoint_tie_break() {
        let cfg = manhattan_cfg(RegionKind::Square);
        let region = boxed(2.0, 4.0, -1.0, 1.0);
        let (a, b) = (Point::new(0.0, 0.0), Point::new(10.0, 0.0));
        let p = relocate_geo(a, b, &region, &cfg).unwrap();
        assert_eq!(p, Point::new(3.0, 0.0));
        assert_eq!(manhattan(a, p) + manhattan(p, b), 10.0);
        assert_eq!(relocate_geo1(a, b, &region, &cfg).unwrap(), Point::new(3.0, 0.0));

        let q = Point::new(5.0, 5.0);
        let p = relocate_geo(q, q, &boxed(0.0, 1.0, 0.0, 1.0), &cfg).unwrap();
        assert_eq!(p, Point::new(1.0, 1.0));
        assert_eq!(2.0 * manhattan(q, p), 16.0);

        // Neighbors above and below: y is the clamped median midpoint.
        let p = relocate_geo1(Point::new(3.0, 10.0), Point::new(3.0, -10.0), &region, &cfg).unwrap();
        assert_eq!(p, Point::new(3.0, 0.0));

        let depot = inscribe_square(Point::new(7.0, 8.0), 0.0);
        assert_eq!(relocate_geo(a, b, &depot, &cfg).unwrap(), Point::new(7.0, 8.0));
        let depot_hex = inscribe_hexagon(Point::new(7.0, 8.0), 0.0);
        let p = relocate_geo(a, b, &depot_hex, &manhattan_cfg(RegionKind::Hexagon)).unwrap();
        assert_abs_diff_eq!(p.x, 7.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.y, 8.0, epsilon = 1e-9);
    }

    #[test]
    fn closed_form_matches_lp_route() {
        // Same boxes solved through the LP (Lin1 and Lin2) and the closed form.
        let mut rng = SplitMix64::new(77);
        let closed = Placement::manhattan();
        for _ in 0..300 {
            let (cx, cy) = (rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0));
            let (hw, hh) = (rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0));
            let region = boxed(cx - hw, cx + hw, cy - hh, cy + hh);
            let anchors: Vec<Point> = (0..1 + (rng.next_u64() % 4) as usize)
                .map(|_| Point::new(rng.uniform(-80.0, 80.0), rng.uniform(-80.0, 80.0)))
                .collect();
            let want = closed.place(&anchors, &[&region]).unwrap();
            for lin in [Linearization::Lin1, Linearization::Lin2] {
                let lp = Placement::new(EdgeCost::manhattan(), lin);
                let got = lp
                    .place_lp(&anchors, &[&region], region.x_bounds, region.y_bounds)
                    .unwrap();
                assert_abs_diff_eq!(closed.total(&anchors, got), closed.total(&anchors, want), epsilon = 1e-6);
                assert_abs_diff_eq!(got.x, want.x, epsilon = 1e-5);
                assert_abs_diff_eq!(got.y, want.y, epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn lp_placement_is_optimal_on_hexagons() {
        // Dense sampling of the hexagon never beats the LP placement.
        let mut rng = SplitMix64::new(5);
        let model = crate::metrics::fit_regression(2000, 200.0, 1).unwrap();
        for (mode, proj) in [
            (ObjectiveMode::Manhattan, false),
            (ObjectiveMode::Manhattan, true),
            (ObjectiveMode::Regression, false),
            (ObjectiveMode::Regression, true),
        ] {
            let obj = ObjectiveConfig {
                mode,
                projection8: proj,
                projection_weight: 0.7,
            };
            let place = Placement::new(EdgeCost::new(obj, Some(&model)).unwrap(), Linearization::Lin2);
            for _ in 0..20 {
                let c = Point::new(rng.uniform(0.0, 100.0), rng.uniform(0.0, 100.0));
                let hex = inscribe_hexagon(c, rng.uniform(1.0, 30.0));
                let anchors = [
                    Point::new(rng.uniform(-50.0, 150.0), rng.uniform(-50.0, 150.0)),
                    Point::new(rng.uniform(-50.0, 150.0), rng.uniform(-50.0, 150.0)),
                ];
                let p = place.place(&anchors, &[&hex]).unwrap();
                assert!(hex.contains(p, 1e-7));
                let best = place.total(&anchors, p);
                for _ in 0..2000 {
                    let q = Point::new(
                        rng.uniform(hex.x_bounds.0, hex.x_bounds.1),
                        rng.uniform(hex.y_bounds.0, hex.y_bounds.1),
                    );
                    if hex.contains(q, 0.0) {
                        assert!(place.total(&anchors, q) >= best - 1e-6 * best.max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn ubiquit_cases() {
        let cfg = manhattan_cfg(RegionKind::Square);
        let region = boxed(-1.0, 1.0, 0.0, 2.0);
        let (prev, next) = (Point::new(-5.0, 0.0), Point::new(5.0, 0.0));
        let cur = Point::new(0.0, 1.0);
        let moved = ubiquit(prev, next, cur, &region, &cfg).unwrap();
        assert_eq!(moved, Point::new(0.0, 0.0));
        assert_eq!(manhattan(prev, cur) + manhattan(cur, next), 12.0);
        assert_eq!(manhattan(prev, moved) + manhattan(moved, next), 10.0);

        let on_line = Point::new(0.5, 0.0);
        assert_eq!(ubiquit(prev, next, on_line, &region, &cfg).unwrap(), on_line);

        // Foot lies outside; the clipped candidate is worse, so stay.
        let region = boxed(0.0, 2.0, 0.0, 2.0);
        let (prev, next) = (Point::new(0.0, 3.0), Point::new(3.0, 0.0));
        let cur = Point::new(2.0, 2.0);
        // Line x + y = 3, foot (1.5, 1.5) is inside and cost-neutral.
        assert_eq!(ubiquit(prev, next, cur, &region, &cfg).unwrap(), Point::new(1.5, 1.5));
        let (prev, next) = (Point::new(10.0, 0.5), Point::new(10.0, 10.0));
        let cur = Point::new(2.0, 0.5);
        // Foot (10, 0.5) clips to (2, 0.5) = current.
        assert_eq!(ubiquit(prev, next, cur, &region, &cfg).unwrap(), cur);
        let cfg_proj = SolverConfig::new(RegionKind::Square, ObjectiveConfig::default().with_projection(true));
        let (prev, next) = (Point::new(-3.0, -3.0), Point::new(-3.0, 5.0));
        let cur = Point::new(0.0, 2.0);
        let got = ubiquit(prev, next, cur, &region, &cfg_proj).unwrap();
        let ec = cfg_proj.edge_cost().unwrap();
        let legs = |p: Point| ec.cost(prev, p) + ec.cost(p, next);
        assert!(legs(got) <= legs(cur));
        assert!(ubiquit(prev, next, Point::new(9.0, 9.0), &region, &cfg).is_err());
    }

    #[test]
    fn super_node_cases() {
        let inst = Instance::from_records(
            "",
            &[(50.0, 50.0, 0.0), (0.0, 0.0, 1.5 * SQRT_2), (1.0, 0.0, 1.5 * SQRT_2)],
        )
        .unwrap();
        let regions = build_regions(&inst, RegionKind::Square);
        let sn = super_nodes(&inst, &regions);
        assert_abs_diff_eq!(sn.points[1].x, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(sn.points[1].y, 0.0, epsilon = 1e-12);
        assert_eq!(sn.points[1], sn.points[2]);
        let p = sn.points[1];
        assert_abs_diff_eq!(manhattan(p, inst.sensors[1].center()) + manhattan(p, inst.sensors[2].center()), 1.0);
        assert_eq!(sn.points[0], Point::new(50.0, 50.0));

        // Disks overlap (4 < 5) but squares of half-side 1.768 do not.
        let inst = Instance::from_records("", &[(50.0, 50.0, 0.0), (0.0, 0.0, 2.5), (4.0, 0.0, 2.5)]).unwrap();
        let sn = super_nodes(&inst, &build_regions(&inst, RegionKind::Square));
        assert!(sn.merged.is_empty());
        assert_eq!(sn.points[1], Point::new(0.0, 0.0));
        assert_eq!(sn.points[2], Point::new(4.0, 0.0));
    }

    #[test]
    fn infeasible_group_is_split() {
        // Chain 1-2-3: 1 and 2 share region space, 3 only overlaps 2's disk.
        let inst = Instance::from_records(
            "",
            &[(100.0, 100.0, 0.0), (0.0, 0.0, 3.0), (1.0, 0.0, 3.0), (6.0, 0.0, 2.6)],
        )
        .unwrap();
        let regions = build_regions(&inst, RegionKind::Square);
        let sn = super_nodes(&inst, &regions);
        assert_eq!(sn.merged, vec![vec![1, 2]]);
        for k in 1..=3 {
            assert!(regions[k].contains(sn.points[k], 1e-9));
        }
        assert_eq!(sn.points[3], Point::new(6.0, 0.0));
    }

    #[test]
    fn single_sensor_analytic() {
        let inst = Instance::from_records("", &[(0.0, 0.0, 0.0), (10.0, 0.0, SQRT_2)]).unwrap();
        let cfg = manhattan_cfg(RegionKind::Square);
        let out = solve_mf(&inst, &cfg).unwrap();
        assert_eq!(out.state.order, vec![0, 1]);
        assert_abs_diff_eq!(out.state.hitting_points[1].x, 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.state.hitting_points[1].y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.state.manhattan_cost, 18.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.state.euclidean_cost, 18.0, epsilon = 1e-12);
        assert_eq!(solve_mf(&inst, &cfg).unwrap().state, out.state);
        let depot_only = Instance::from_records("", &[(0.0, 0.0, 0.0)]).unwrap();
        assert!(solve_mf(&depot_only, &cfg).is_err());
    }

    #[test]
    fn validation_flags_problems() {
        let inst = Instance::from_records("", &[(0.0, 0.0, 0.0), (10.0, 0.0, 1.0), (0.0, 10.0, 1.0)]).unwrap();
        let good = RouteState::new(
            vec![0, 1, 2],
            vec![Point::new(0.0, 0.0), Point::new(9.5, 0.0), Point::new(0.0, 9.0)],
        );
        assert!(validate_solution(&inst, &good, 1e-9).passed());
        let mut bad = good.clone();
        bad.hitting_points[2] = Point::new(0.0, 8.0);
        bad = RouteState::new(bad.order, bad.hitting_points);
        assert_eq!(validate_solution(&inst, &bad, 1e-9).outside_disk, vec![2]);
        let mut tampered = good.clone();
        tampered.euclidean_cost += 1.0;
        let rep = validate_solution(&inst, &tampered, 1e-9);
        assert!(!rep.euclidean_matches && rep.manhattan_matches);
    }

    #[test]
    fn labels() {
        let mut cfg = manhattan_cfg(RegionKind::Hexagon);
        assert_eq!(cfg.label(), "PH-Lin2");
        cfg.obj_cfg.mode = ObjectiveMode::Regression;
        cfg.obj_cfg.projection8 = true;
        assert_eq!(cfg.label(), "PH-Lin2-Reg-Proj");
        assert!(cfg.validate().is_err());
    }
}

//! Dense two-phase simplex.
//!
//! Sized for the small continuous subproblems of the relocation heuristic
//! and the fixed-order oracle (tens of variables and rows). Bland's rule is
//! used for both entering and leaving choices, so the method always
//! terminates and is fully deterministic.
//!
//! An [`LpSolution`] with status [`LpStatus::Optimal`] satisfies every
//! constraint and bound within [`FEASIBILITY_TOL`] (scaled by the magnitude
//! of the right-hand sides).

use serde::{Deserialize, Serialize};

/// Feasibility tolerance, relative to `max(1, |rhs|)`.
pub const FEASIBILITY_TOL: f64 = 1e-7;
const PIVOT_EPS: f64 = 1e-9;
const COST_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    /// Dense coefficients; entries past the end are zero.
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, v)| a * v).sum()
    }
}

/// `minimize objective · x` subject to rows and per-variable bounds.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LpProblem {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective_value: f64,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

impl LpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable with bounds `[lo, hi]` (either may be infinite) and
    /// objective coefficient `cost`. Returns its index.
    pub fn add_var(&mut self, lo: f64, hi: f64, cost: f64) -> usize {
        self.num_vars += 1;
        self.objective.push(cost);
        self.bounds.push((lo, hi));
        self.num_vars - 1
    }

    pub fn add_row(&mut self, terms: &[(usize, f64)], sense: Sense, rhs: f64) {
        let mut coeffs = vec![0.0; self.num_vars];
        for &(j, a) in terms {
            coeffs[j] += a;
        }
        self.constraints.push(Constraint { coeffs, sense, rhs });
    }

    pub fn add_cost(&mut self, var: usize, cost: f64) {
        self.objective[var] += cost;
    }

    pub fn objective_of(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Most negative slack over rows and bounds; 0 when all hold exactly.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for c in &self.constraints {
            let act = c.activity(x);
            let v = match c.sense {
                Sense::Le => act - c.rhs,
                Sense::Ge => c.rhs - act,
                Sense::Eq => (act - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (v, &(lo, hi)) in x.iter().zip(&self.bounds) {
            worst = worst.max(lo - v).max(v - hi);
        }
        worst
    }
}

/// Auxiliaries `plus - minus = expr`, both nonnegative and both priced at
/// `weight` in a minimized objective, so that at an optimum
/// `plus + minus = |expr|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AbsGadget {
    pub plus: usize,
    pub minus: usize,
}

impl AbsGadget {
    pub fn value(&self, x: &[f64]) -> f64 {
        x[self.plus] + x[self.minus]
    }
}

/// Adds `|Σ terms + constant|` to the objective with the given weight.
pub fn abs_gadget(p: &mut LpProblem, terms: &[(usize, f64)], constant: f64, weight: f64) -> AbsGadget {
    let plus = p.add_var(0.0, f64::INFINITY, weight);
    let minus = p.add_var(0.0, f64::INFINITY, weight);
    let mut row: Vec<(usize, f64)> = vec![(plus, 1.0), (minus, -1.0)];
    row.extend(terms.iter().map(|&(j, a)| (j, -a)));
    p.add_row(&row, Sense::Eq, constant);
    AbsGadget { plus, minus }
}

/// Original variable = offset + Σ coef * standard column.
struct VarMap {
    offset: f64,
    cols: Vec<(usize, f64)>,
}

struct Tableau {
    rows: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [f64]) {
        let w = self.width;
        let p = self.data[r * w + c];
        for v in &mut self.data[r * w..(r + 1) * w] {
            *v /= p;
        }
        let (before, rest) = self.data.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        let f = obj[c];
        if f != 0.0 {
            for (v, pv) in obj.iter_mut().zip(prow.iter()) {
                *v -= f * pv;
            }
            obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Reduced-cost row for `costs` (length `width`, last entry 0).
    fn price(&self, costs: &[f64]) -> Vec<f64> {
        let mut obj = costs.to_vec();
        for (r, &b) in self.basis.iter().enumerate() {
            let f = obj[b];
            if f != 0.0 {
                let row = &self.data[r * self.width..(r + 1) * self.width];
                for (v, a) in obj.iter_mut().zip(row) {
                    *v -= f * a;
                }
            }
        }
        obj
    }

    /// Bland's-rule primal simplex over columns `< allowed`. Returns false
    /// when unbounded.
    fn optimize(&mut self, obj: &mut [f64], allowed: usize) -> bool {
        loop {
            let Some(enter) = (0..allowed).find(|&j| obj[j] < -COST_EPS) else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, enter);
                if a > PIVOT_EPS {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-12
                                || (ratio <= lratio + 1e-12 && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return false,
                Some((r, _)) => self.pivot(r, enter, obj),
            }
        }
    }
}

pub fn solve_lp(p: &LpProblem) -> LpSolution {
    let n = p.num_vars;
    let fail = |status| LpSolution {
        status,
        values: vec![f64::NAN; n],
        objective_value: f64::NAN,
    };

    // Shift every variable into nonnegative standard columns.
    let mut maps = Vec::with_capacity(n);
    let mut n_std = 0usize;
    let mut upper_rows: Vec<(usize, f64)> = Vec::new();
    for &(lo, hi) in &p.bounds {
        if lo > hi {
            return fail(LpStatus::Infeasible);
        }
        let map = if lo.is_finite() {
            if hi.is_finite() {
                upper_rows.push((n_std, hi - lo));
            }
            VarMap {
                offset: lo,
                cols: vec![(n_std, 1.0)],
            }
        } else if hi.is_finite() {
            VarMap {
                offset: hi,
                cols: vec![(n_std, -1.0)],
            }
        } else {
            n_std += 1;
            VarMap {
                offset: 0.0,
                cols: vec![(n_std - 1, 1.0), (n_std, -1.0)],
            }
        };
        n_std += 1;
        maps.push(map);
    }

    // Rows in standard columns, rhs made nonnegative.
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::new();
    for c in &p.constraints {
        let mut coeffs = vec![0.0; n_std];
        let mut rhs = c.rhs;
        for (j, &a) in c.coeffs.iter().enumerate() {
            if a != 0.0 {
                rhs -= a * maps[j].offset;
                for &(col, k) in &maps[j].cols {
                    coeffs[col] += a * k;
                }
            }
        }
        rows.push((coeffs, c.sense, rhs));
    }
    for &(col, ub) in &upper_rows {
        let mut coeffs = vec![0.0; n_std];
        coeffs[col] = 1.0;
        rows.push((coeffs, Sense::Le, ub));
    }
    for (coeffs, sense, rhs) in &mut rows {
        if *rhs < 0.0 {
            coeffs.iter_mut().for_each(|v| *v = -*v);
            *rhs = -*rhs;
            *sense = match *sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Sense::Le).count();
    let art_start = n_std + n_slack;
    let width = art_start + n_art + 1;
    let mut t = Tableau {
        rows: m,
        width,
        data: vec![0.0; m * width],
        basis: vec![0; m],
    };
    let (mut slack, mut art) = (n_std, art_start);
    let scale = rows.iter().fold(1.0f64, |s, r| s.max(r.2.abs()));
    for (r, (coeffs, sense, rhs)) in rows.iter().enumerate() {
        let row = &mut t.data[r * width..(r + 1) * width];
        row[..n_std].copy_from_slice(coeffs);
        row[width - 1] = *rhs;
        match sense {
            Sense::Le => {
                row[slack] = 1.0;
                t.basis[r] = slack;
                slack += 1;
            }
            Sense::Ge => {
                row[slack] = -1.0;
                slack += 1;
                row[art] = 1.0;
                t.basis[r] = art;
                art += 1;
            }
            Sense::Eq => {
                row[art] = 1.0;
                t.basis[r] = art;
                art += 1;
            }
        }
    }

    if n_art > 0 {
        let mut costs = vec![0.0; width];
        costs[art_start..art_start + n_art].iter_mut().for_each(|c| *c = 1.0);
        let mut obj = t.price(&costs);
        t.optimize(&mut obj, width - 1);
        let infeas = -obj[width - 1];
        if infeas > FEASIBILITY_TOL * scale {
            return fail(LpStatus::Infeasible);
        }
        // Drive remaining artificials out of the basis where possible.
        for r in 0..m {
            if t.basis[r] >= art_start {
                if let Some(c) = (0..art_start).find(|&c| t.at(r, c).abs() > PIVOT_EPS) {
                    t.pivot(r, c, &mut obj);
                }
            }
        }
    }

    let mut costs = vec![0.0; width];
    for (j, map) in maps.iter().enumerate() {
        for &(col, k) in &map.cols {
            costs[col] += p.objective[j] * k;
        }
    }
    let mut obj = t.price(&costs);
    if !t.optimize(&mut obj, art_start) {
        return fail(LpStatus::Unbounded);
    }

    let mut std_vals = vec![0.0; width - 1];
    for (r, &b) in t.basis.iter().enumerate() {
        std_vals[b] = t.rhs(r);
    }
    let values: Vec<f64> = maps
        .iter()
        .map(|m| m.offset + m.cols.iter().map(|&(c, k)| k * std_vals[c]).sum::<f64>())
        .collect();
    LpSolution {
        status: LpStatus::Optimal,
        objective_value: p.objective_of(&values),
        values,
    }
}

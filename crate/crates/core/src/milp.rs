//! Full mixed-integer CETSP models and their CPLEX LP export.
//!
//! With `N` nodes (depot 0 plus `n = N - 1` sensors) and `A = N (N - 1)`
//! arcs, a model has:
//!
//! | block            | variables      | rows                 |
//! |------------------|----------------|----------------------|
//! | arcs `x_i_j`     | `A` binaries   |                      |
//! | order `u_i`      | `n` generals, plus `u_0` fixed | |
//! | points `cx`,`cy` | `2N`           |                      |
//! | degree           |                | `2N`                 |
//! | antisymmetry     |                | `A / 2`              |
//! | MTZ              |                | `n^2`                |
//! | regions          |                | `4n` square, `6n` hexagon |
//! | Lin1             | `4A`           | `2A`                 |
//! | Lin2             | `2A`           | `4A`                 |
//! | projection       | `8A`           | `16A`                |
//!
//! The depot is fixed through its bounds, so it has no region rows.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{projection_axes, ConvexRegion, Point, RegionKind};
use crate::instance::Instance;
use crate::lp::Sense;
use crate::metrics::{ObjectiveConfig, ObjectiveMode, RegressionModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linearization {
    /// Split every arc difference into two nonnegative parts.
    Lin1,
    /// Gate the absolute differences with a big-M on the arc binary.
    #[default]
    Lin2,
}

impl Linearization {
    pub fn as_str(self) -> &'static str {
        match self {
            Linearization::Lin1 => "lin1",
            Linearization::Lin2 => "lin2",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Linearization::Lin1 => "Lin1",
            Linearization::Lin2 => "Lin2",
        }
    }
}

impl FromStr for Linearization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lin1" | "1" => Ok(Linearization::Lin1),
            "lin2" | "2" => Ok(Linearization::Lin2),
            other => Err(Error::InvalidArgument(format!("unknown linearization `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    General,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Var {
    pub name: String,
    pub kind: VarKind,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    /// Nonnegative when satisfied; an equality reports minus its residual.
    pub fn slack(&self, values: &[f64]) -> f64 {
        let lhs: f64 = self.terms.iter().map(|&(j, a)| a * values[j]).sum();
        match self.sense {
            Sense::Le => self.rhs - lhs,
            Sense::Ge => lhs - self.rhs,
            Sense::Eq => -(lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    pub name: String,
    pub region_kind: RegionKind,
    pub lin: Linearization,
    pub obj_cfg: ObjectiveConfig,
    pub num_nodes: usize,
    pub vars: Vec<Var>,
    pub rows: Vec<Row>,
    /// Minimized.
    pub objective: Vec<(usize, f64)>,
    pub big_m: f64,
    index: BTreeMap<String, usize>,
}

/// Largest axis extent between any two centers plus room for both radii.
pub fn big_m(inst: &Instance) -> f64 {
    if inst.sensors.is_empty() {
        return 0.0;
    }
    let (x0, y0, x1, y1) = inst.center_bbox();
    (x1 - x0).max(y1 - y0) + 2.0 * inst.max_radius()
}

/// Scale of the projection big-M over the plain one: the largest
/// `|cos| + |sin|` of the axes.
pub fn projection_m_factor() -> f64 {
    projection_axes()
        .iter()
        .map(|a| a.x.abs() + a.y.abs())
        .fold(0.0, f64::max)
}

struct Builder {
    width: usize,
    vars: Vec<Var>,
    rows: Vec<Row>,
    objective: Vec<(usize, f64)>,
    index: BTreeMap<String, usize>,
}

impl Builder {
    fn id(&self, i: usize) -> String {
        format!("{i:0w$}", w = self.width)
    }

    fn arc(&self, i: usize, j: usize) -> String {
        format!("{}_{}", self.id(i), self.id(j))
    }

    fn var(&mut self, name: String, kind: VarKind, lo: f64, hi: f64) -> usize {
        let k = self.vars.len();
        self.index.insert(name.clone(), k);
        self.vars.push(Var { name, kind, lo, hi });
        k
    }

    fn row(&mut self, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(Row {
            name,
            terms,
            sense,
            rhs,
        });
    }

    fn cost(&mut self, var: usize, c: f64) {
        if c != 0.0 {
            self.objective.push((var, c));
        }
    }
}

pub fn build_model(
    inst: &Instance,
    region_kind: RegionKind,
    lin: Linearization,
    obj_cfg: &ObjectiveConfig,
    model: Option<&RegressionModel>,
) -> Result<MilpModel> {
    inst.validate()?;
    obj_cfg.validate()?;
    let nn = inst.num_nodes();
    if nn < 2 {
        return Err(Error::InvalidArgument("a model needs the depot and at least one sensor".into()));
    }
    let reg = match obj_cfg.mode {
        ObjectiveMode::Manhattan => None,
        ObjectiveMode::Regression => Some(model.ok_or(Error::MissingRegression)?),
    };
    let n = nn - 1;
    let m = big_m(inst);
    let mut b = Builder {
        width: n.to_string().len(),
        vars: Vec::new(),
        rows: Vec::new(),
        objective: Vec::new(),
        index: BTreeMap::new(),
    };
    let arcs: Vec<(usize, usize)> = (0..nn)
        .flat_map(|i| (0..nn).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();

    let mut x = BTreeMap::new();
    for &(i, j) in &arcs {
        let name = format!("x_{}", b.arc(i, j));
        x.insert((i, j), b.var(name, VarKind::Binary, 0.0, 1.0));
    }
    let u: Vec<usize> = (0..nn)
        .map(|i| {
            let name = format!("u_{}", b.id(i));
            if i == 0 {
                b.var(name, VarKind::Continuous, 0.0, 0.0)
            } else {
                b.var(name, VarKind::General, 1.0, n as f64)
            }
        })
        .collect();
    let (mut cx, mut cy) = (Vec::new(), Vec::new());
    for s in &inst.sensors {
        let (lo_x, hi_x, lo_y, hi_y) = if s.id == 0 {
            (s.center_x, s.center_x, s.center_y, s.center_y)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY)
        };
        let name = format!("cx_{}", b.id(s.id));
        cx.push(b.var(name, VarKind::Continuous, lo_x, hi_x));
        let name = format!("cy_{}", b.id(s.id));
        cy.push(b.var(name, VarKind::Continuous, lo_y, hi_y));
    }

    for i in 0..nn {
        let out = (0..nn).filter(|&j| j != i).map(|j| (x[&(i, j)], 1.0)).collect();
        let name = format!("out_{}", b.id(i));
        b.row(name, out, Sense::Eq, 1.0);
        let inc = (0..nn).filter(|&j| j != i).map(|j| (x[&(j, i)], 1.0)).collect();
        let name = format!("in_{}", b.id(i));
        b.row(name, inc, Sense::Eq, 1.0);
    }
    for &(i, j) in arcs.iter().filter(|(i, j)| i < j) {
        let name = format!("anti_{}", b.arc(i, j));
        b.row(name, vec![(x[&(i, j)], 1.0), (x[&(j, i)], 1.0)], Sense::Le, 1.0);
    }
    for &(i, j) in arcs.iter().filter(|(_, j)| *j != 0) {
        // u_i - u_j + n x_ij <= n - 1
        let name = format!("mtz_{}", b.arc(i, j));
        let terms = vec![(u[i], 1.0), (u[j], -1.0), (x[&(i, j)], n as f64)];
        b.row(name, terms, Sense::Le, n as f64 - 1.0);
    }

    for s in inst.sensors.iter().skip(1) {
        let region = ConvexRegion::inscribe(region_kind, s.center(), s.radius);
        let (i, vx, vy) = (s.id, cx[s.id], cy[s.id]);
        let id = b.id(i);
        if region_kind == RegionKind::Square {
            b.row(format!("reg_{id}_xlo"), vec![(vx, 1.0)], Sense::Ge, region.x_bounds.0);
            b.row(format!("reg_{id}_xhi"), vec![(vx, 1.0)], Sense::Le, region.x_bounds.1);
        }
        b.row(format!("reg_{id}_ylo"), vec![(vy, 1.0)], Sense::Ge, region.y_bounds.0);
        b.row(format!("reg_{id}_yhi"), vec![(vy, 1.0)], Sense::Le, region.y_bounds.1);
        for (tag, h) in ["ab", "cd", "de", "fa"].iter().zip(&region.half_planes) {
            let le = h.as_le();
            b.row(format!("reg_{id}_{tag}"), vec![(vx, le.a), (vy, le.b)], Sense::Le, le.c);
        }
    }

    let (wx, wy, off) = match reg {
        None => (1.0, 1.0, 0.0),
        Some(r) => (r.c_dx, r.c_dy, r.offset()),
    };
    for &(i, j) in &arcs {
        let a = b.arc(i, j);
        let xij = x[&(i, j)];
        match lin {
            Linearization::Lin1 => {
                // t1 - t2 = c_j - c_i
                for (axis, c, w) in [("x", &cx, wx), ("y", &cy, wy)] {
                    let t1 = b.var(format!("t{axis}1_{a}"), VarKind::Continuous, 0.0, f64::INFINITY);
                    let t2 = b.var(format!("t{axis}2_{a}"), VarKind::Continuous, 0.0, f64::INFINITY);
                    let terms = vec![(t1, 1.0), (t2, -1.0), (c[j], -1.0), (c[i], 1.0)];
                    b.row(format!("e{axis}_{a}"), terms, Sense::Eq, 0.0);
                    b.cost(t1, w);
                    b.cost(t2, w);
                }
            }
            Linearization::Lin2 => {
                // d >= ±(c_i - c_j) - M (1 - x_ij)
                for (axis, c, w) in [("x", &cx, wx), ("y", &cy, wy)] {
                    let d = b.var(format!("d{axis}_{a}"), VarKind::Continuous, 0.0, f64::INFINITY);
                    for (tag, sgn) in [("p", 1.0), ("m", -1.0)] {
                        let terms = vec![(d, 1.0), (c[i], -sgn), (c[j], sgn), (xij, -m)];
                        b.row(format!("d{axis}{tag}_{a}"), terms, Sense::Ge, -m);
                    }
                    b.cost(d, w);
                }
            }
        }
        b.cost(xij, off);
        if obj_cfg.projection8 && obj_cfg.projection_weight > 0.0 {
            let mp = m * projection_m_factor();
            for (k, ax) in projection_axes().iter().enumerate() {
                let g = b.var(format!("g{}_{a}", k + 1), VarKind::Continuous, 0.0, f64::INFINITY);
                for (tag, sgn) in [("p", 1.0), ("m", -1.0)] {
                    // g >= ±<c_j - c_i, axis> - M' (1 - x_ij)
                    let terms = vec![
                        (g, 1.0),
                        (cx[j], -sgn * ax.x),
                        (cx[i], sgn * ax.x),
                        (cy[j], -sgn * ax.y),
                        (cy[i], sgn * ax.y),
                        (xij, -mp),
                    ];
                    b.row(format!("g{}{tag}_{a}", k + 1), terms, Sense::Ge, -mp);
                }
                b.cost(g, obj_cfg.projection_weight);
            }
        }
    }

    Ok(MilpModel {
        name: inst.name.clone(),
        region_kind,
        lin,
        obj_cfg: *obj_cfg,
        num_nodes: nn,
        vars: b.vars,
        rows: b.rows,
        objective: b.objective,
        big_m: m,
        index: b.index,
    })
}

impl MilpModel {
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn count(&self, kind: VarKind) -> usize {
        self.vars.iter().filter(|v| v.kind == kind).count()
    }

    fn id(&self, i: usize) -> String {
        format!("{i:0w$}", w = (self.num_nodes - 1).to_string().len())
    }

    fn arc(&self, i: usize, j: usize) -> String {
        format!("{}_{}", self.id(i), self.id(j))
    }

    /// `<instance>__<region>__<lin>[__reg][__proj8].lp`
    pub fn file_name(&self) -> String {
        let mut s = format!(
            "{}__{}__{}",
            if self.name.is_empty() { "instance" } else { &self.name },
            self.region_kind.as_str(),
            self.lin.as_str()
        );
        if self.obj_cfg.mode == ObjectiveMode::Regression {
            s.push_str("__reg");
        }
        if self.obj_cfg.projection8 {
            s.push_str("__proj8");
        }
        s.push_str(".lp");
        s
    }

    /// Variable values of the integral solution given by a tour and its
    /// hitting points. Auxiliaries take their tightest feasible values.
    pub fn assignment_from_tour(&self, order: &[usize], points: &[Point]) -> Result<Vec<f64>> {
        let nn = self.num_nodes;
        if order.len() != nn || points.len() != nn || order.first() != Some(&0) {
            return Err(Error::InvalidArgument("tour does not match the model".into()));
        }
        let mut v = vec![0.0; self.vars.len()];
        let mut set = |name: String, value: f64| -> Result<()> {
            let k = self
                .var_index(&name)
                .ok_or_else(|| Error::InvalidArgument(format!("no variable {name}")))?;
            v[k] = value;
            Ok(())
        };
        let mut next = vec![usize::MAX; nn];
        for (pos, &node) in order.iter().enumerate() {
            next[node] = order[(pos + 1) % nn];
            set(format!("u_{}", self.id(node)), pos as f64)?;
            set(format!("cx_{}", self.id(node)), points[node].x)?;
            set(format!("cy_{}", self.id(node)), points[node].y)?;
        }
        for i in 0..nn {
            for j in (0..nn).filter(|&j| j != i) {
                let a = self.arc(i, j);
                let on = next[i] == j;
                set(format!("x_{a}"), if on { 1.0 } else { 0.0 })?;
                let d = points[j].sub(points[i]);
                match self.lin {
                    Linearization::Lin1 => {
                        set(format!("tx1_{a}"), d.x.max(0.0))?;
                        set(format!("tx2_{a}"), (-d.x).max(0.0))?;
                        set(format!("ty1_{a}"), d.y.max(0.0))?;
                        set(format!("ty2_{a}"), (-d.y).max(0.0))?;
                    }
                    Linearization::Lin2 => {
                        set(format!("dx_{a}"), if on { d.x.abs() } else { 0.0 })?;
                        set(format!("dy_{a}"), if on { d.y.abs() } else { 0.0 })?;
                    }
                }
                if self.obj_cfg.projection8 && self.obj_cfg.projection_weight > 0.0 {
                    for (k, ax) in projection_axes().iter().enumerate() {
                        let g = if on { d.dot(*ax).abs() } else { 0.0 };
                        set(format!("g{}_{a}", k + 1), g)?;
                    }
                }
            }
        }
        Ok(v)
    }

    /// `(row name, slack)` for every row.
    pub fn row_slacks(&self, values: &[f64]) -> Vec<(String, f64)> {
        self.rows.iter().map(|r| (r.name.clone(), r.slack(values))).collect()
    }

    /// Largest amount by which `values` leaves its variable bounds.
    pub fn bound_violation(&self, values: &[f64]) -> f64 {
        self.vars
            .iter()
            .zip(values)
            .map(|(var, &x)| (var.lo - x).max(x - var.hi).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(j, c)| c * values[j]).sum()
    }
}

/// `%.9g`-style number.
pub fn format_g9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.8e}");
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..9).contains(&exp) {
        format!("{}e{}{:02}", trim(mant), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (8 - exp).max(0) as usize;
        trim(&format!("{v:.decimals$}"))
    }
}

fn write_expr(out: &mut String, terms: &mut [(String, f64)], indent: &str) {
    terms.sort_by(|a, b| a.0.cmp(&b.0));
    if terms.is_empty() {
        out.push_str(" 0");
        return;
    }
    for (k, (name, c)) in terms.iter().enumerate() {
        if k > 0 && k % 6 == 0 {
            out.push('\n');
            out.push_str(indent);
        }
        let sign = if *c < 0.0 { "-" } else { "+" };
        if k == 0 && *c >= 0.0 {
            write!(out, " {} {}", format_g9(*c), name).unwrap();
        } else {
            write!(out, " {} {} {}", sign, format_g9(c.abs()), name).unwrap();
        }
    }
}

/// CPLEX LP text with rows and variables sorted by name.
pub fn export_lp(m: &MilpModel) -> String {
    let name = |j: usize| m.vars[j].name.clone();
    let mut out = String::new();
    writeln!(out, "\\ {}", m.file_name()).unwrap();
    out.push_str("Minimize\n obj:");
    let mut obj: Vec<(String, f64)> = m.objective.iter().map(|&(j, c)| (name(j), c)).collect();
    write_expr(&mut out, &mut obj, "     ");
    out.push_str("\nSubject To\n");
    let mut rows: Vec<&Row> = m.rows.iter().collect();
    rows.sort_by(|a, b| a.name.cmp(&b.name));
    for r in rows {
        write!(out, " {}:", r.name).unwrap();
        let mut terms: Vec<(String, f64)> = r.terms.iter().map(|&(j, c)| (name(j), c)).collect();
        write_expr(&mut out, &mut terms, "   ");
        let op = match r.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        writeln!(out, " {} {}", op, format_g9(r.rhs)).unwrap();
    }
    out.push_str("Bounds\n");
    let mut vars: Vec<&Var> = m.vars.iter().collect();
    vars.sort_by(|a, b| a.name.cmp(&b.name));
    for v in vars.iter().filter(|v| v.kind != VarKind::Binary) {
        match (v.lo, v.hi) {
            (lo, hi) if lo == hi => writeln!(out, " {} = {}", v.name, format_g9(lo)),
            (lo, hi) if lo == f64::NEG_INFINITY && hi == f64::INFINITY => writeln!(out, " {} free", v.name),
            (lo, hi) if hi == f64::INFINITY => writeln!(out, " {} >= {}", v.name, format_g9(lo)),
            (lo, hi) => writeln!(out, " {} <= {} <= {}", format_g9(lo), v.name, format_g9(hi)),
        }
        .unwrap();
    }
    for (title, kind) in [("Generals", VarKind::General), ("Binaries", VarKind::Binary)] {
        writeln!(out, "{title}").unwrap();
        for v in vars.iter().filter(|v| v.kind == kind) {
            writeln!(out, " {}", v.name).unwrap();
        }
    }
    out.push_str("End\n");
    out
}

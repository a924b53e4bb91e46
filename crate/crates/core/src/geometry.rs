//! Inscribed convex regions and the small planar primitives the solver needs.

use std::f64::consts::{FRAC_PI_3, FRAC_PI_8, SQRT_2};
use std::fmt;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;

/// Default inclusive tolerance for boundary tests, meters.
pub const CONTAINS_TOL: f64 = 1e-9;

/// Strict-overlap margin for disk intersection, meters.
pub const OVERLAP_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn sub(self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }

    pub fn add(self, other: Point) -> Point {
        Point::new(self.x + other.x, self.y + other.y)
    }

    pub fn scale(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    /// Counter-clockwise rotation by `angle` radians.
    pub fn rotate(self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    Square,
    Hexagon,
}

impl RegionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RegionKind::Square => "square",
            RegionKind::Hexagon => "hexagon",
        }
    }
}

impl std::str::FromStr for RegionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "square" | "ps" => Ok(RegionKind::Square),
            "hexagon" | "ph" => Ok(RegionKind::Hexagon),
            other => Err(Error::InvalidArgument(format!("unknown region kind `{other}`"))),
        }
    }
}

/// Which side of the line `y = slope * x + intercept` is kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineSide {
    /// `cy <= slope * cx + intercept`
    Below,
    /// `cy >= slope * cx + intercept`
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub slope: f64,
    pub intercept: f64,
    pub side: LineSide,
}

impl HalfPlane {
    /// Line through two points with the two-point slope and `y1 - s * x1`
    /// intercept.
    pub fn through(p1: Point, p2: Point, side: LineSide) -> Self {
        let slope = (p2.y - p1.y) / (p2.x - p1.x);
        let intercept = p1.y - slope * p1.x;
        Self {
            slope,
            intercept,
            side,
        }
    }

    /// `slope * x + intercept - y`; nonnegative when `Below` holds.
    pub fn value(&self, p: Point) -> f64 {
        self.slope * p.x + self.intercept - p.y
    }

    /// The constraint as `a * x + b * y <= c`.
    pub fn as_le(&self) -> LinearLe {
        match self.side {
            LineSide::Below => LinearLe {
                a: -self.slope,
                b: 1.0,
                c: self.intercept,
            },
            LineSide::Above => LinearLe {
                a: self.slope,
                b: -1.0,
                c: -self.intercept,
            },
        }
    }
}

/// `a * x + b * y <= c`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearLe {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl LinearLe {
    pub fn slack(&self, p: Point) -> f64 {
        self.c - (self.a * p.x + self.b * p.y)
    }

    fn norm(&self) -> f64 {
        self.a.hypot(self.b)
    }
}

/// A square or hexagon inscribed in a sensor disk, described as axis bounds
/// plus a list of half-planes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexRegion {
    pub kind: RegionKind,
    pub center: Point,
    pub radius: f64,
    pub x_bounds: (f64, f64),
    pub y_bounds: (f64, f64),
    pub half_planes: Vec<HalfPlane>,
}

/// Axis-aligned square of half-side `r / sqrt(2)`; its corners lie on the
/// circle.
pub fn inscribe_square(center: Point, r: f64) -> ConvexRegion {
    let l = r / SQRT_2;
    ConvexRegion {
        kind: RegionKind::Square,
        center,
        radius: r,
        x_bounds: (center.x - l, center.x + l),
        y_bounds: (center.y - l, center.y + l),
        half_planes: Vec::new(),
    }
}

/// Hexagon vertices `A..F` counter-clockwise from `A = (m + r, n)`.
pub fn hexagon_vertices(center: Point, r: f64) -> [Point; 6] {
    let a = r * FRAC_PI_3.cos();
    let b = r * FRAC_PI_3.sin();
    let (m, n) = (center.x, center.y);
    [
        Point::new(m + r, n),
        Point::new(m + a, n + b),
        Point::new(m - a, n + b),
        Point::new(m - r, n),
        Point::new(m - a, n - b),
        Point::new(m + a, n - b),
    ]
}

/// Regular hexagon with circumradius `r`. The slanted edges AB, CD, DE and
/// FA become half-planes; the horizontal edges BC and EF are the y bounds.
pub fn inscribe_hexagon(center: Point, r: f64) -> ConvexRegion {
    let [a, b, c, d, e, f] = hexagon_vertices(center, r);
    let half_planes = if r > 0.0 {
        vec![
            HalfPlane::through(a, b, LineSide::Below),
            HalfPlane::through(c, d, LineSide::Below),
            HalfPlane::through(d, e, LineSide::Above),
            HalfPlane::through(f, a, LineSide::Above),
        ]
    } else {
        // Zero-length edges have no two-point slope; use the limiting lines
        // through the center, which pin the region to that point.
        let s = 3f64.sqrt();
        let line = |slope: f64, side| HalfPlane {
            slope,
            intercept: center.y - slope * center.x,
            side,
        };
        vec![
            line(-s, LineSide::Below),
            line(s, LineSide::Below),
            line(-s, LineSide::Above),
            line(s, LineSide::Above),
        ]
    };
    let hb = r * FRAC_PI_3.sin();
    ConvexRegion {
        kind: RegionKind::Hexagon,
        center,
        radius: r,
        x_bounds: (center.x - r, center.x + r),
        y_bounds: (center.y - hb, center.y + hb),
        half_planes,
    }
}

impl ConvexRegion {
    pub fn inscribe(kind: RegionKind, center: Point, r: f64) -> Self {
        match kind {
            RegionKind::Square => inscribe_square(center, r),
            RegionKind::Hexagon => inscribe_hexagon(center, r),
        }
    }

    /// Every constraint of the region in `a x + b y <= c` form, bounds first.
    pub fn linear_constraints(&self) -> Vec<LinearLe> {
        let (x0, x1) = self.x_bounds;
        let (y0, y1) = self.y_bounds;
        let mut out = vec![
            LinearLe { a: 1.0, b: 0.0, c: x1 },
            LinearLe { a: -1.0, b: 0.0, c: -x0 },
            LinearLe { a: 0.0, b: 1.0, c: y1 },
            LinearLe { a: 0.0, b: -1.0, c: -y0 },
        ];
        out.extend(self.half_planes.iter().map(HalfPlane::as_le));
        out
    }

    pub fn is_box(&self) -> bool {
        self.half_planes.is_empty()
    }

    /// Boundary is inclusive; `tol` is a perpendicular distance in meters.
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        self.linear_constraints()
            .iter()
            .all(|h| h.slack(p) >= -tol * h.norm())
    }

    /// Polygon outline, counter-clockwise.
    pub fn vertices(&self) -> Vec<Point> {
        match self.kind {
            RegionKind::Square => {
                let (x0, x1) = self.x_bounds;
                let (y0, y1) = self.y_bounds;
                vec![
                    Point::new(x1, y0),
                    Point::new(x1, y1),
                    Point::new(x0, y1),
                    Point::new(x0, y0),
                ]
            }
            RegionKind::Hexagon => hexagon_vertices(self.center, self.radius).to_vec(),
        }
    }

    /// Furthest point of the segment `from -> target` that stays inside the
    /// region.
    pub fn clip_toward(&self, from: Point, target: Point) -> Result<Point> {
        if !self.contains(from, CONTAINS_TOL) {
            return Err(Error::OutsideRegion((from.x, from.y)));
        }
        if self.contains(target, CONTAINS_TOL) {
            return Ok(target);
        }
        let dir = target.sub(from);
        let mut t = 1.0f64;
        for h in self.linear_constraints() {
            let rate = h.a * dir.x + h.b * dir.y;
            if rate > 0.0 {
                t = t.min((h.slack(from) / rate).max(0.0));
            }
        }
        Ok(from.add(dir.scale(t)))
    }
}

pub fn clip_toward(region: &ConvexRegion, from: Point, target: Point) -> Result<Point> {
    region.clip_toward(from, target)
}

/// Partition of sensors `1..n` into maximal groups connected by pairwise
/// disk overlap. The depot is never grouped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapGroups {
    /// Each group sorted ascending; groups ordered by their smallest member.
    pub groups: Vec<Vec<usize>>,
}

/// Two disks overlap when their centers are closer than `r_i + r_j - 1e-9`;
/// tangent disks stay apart.
pub fn disk_overlap_groups(inst: &Instance) -> OverlapGroups {
    let n = inst.num_nodes();
    let mut uf = UnionFind::<usize>::new(n);
    for i in 1..n {
        for j in (i + 1)..n {
            let (a, b) = (&inst.sensors[i], &inst.sensors[j]);
            let dist = a.center().sub(b.center()).norm_sq().sqrt();
            if dist < a.radius + b.radius - OVERLAP_EPS {
                uf.union(i, j);
            }
        }
    }
    let mut by_root: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 1..n {
        by_root.entry(uf.find(i)).or_default().push(i);
    }
    let mut groups: Vec<Vec<usize>> = by_root.into_values().collect();
    groups.sort_by_key(|g| g[0]);
    OverlapGroups { groups }
}

/// Orthogonal projection of `p` onto the line through `a` and `b`.
pub fn foot_of_perpendicular(p: Point, a: Point, b: Point) -> Result<Point> {
    let dir = b.sub(a);
    let len_sq = dir.norm_sq();
    if len_sq == 0.0 {
        return Err(Error::Degenerate("line through two identical points".into()));
    }
    let t = p.sub(a).dot(dir) / len_sq;
    Ok(a.add(dir.scale(t)))
}

/// Unit vectors at angles `k * pi / 8`, `k = 1..=8`.
pub fn projection_axes() -> [Point; 8] {
    std::array::from_fn(|i| {
        let theta = (i + 1) as f64 * FRAC_PI_8;
        Point::new(theta.cos(), theta.sin())
    })
}

/// Absolute projections of `delta` on the eight axes.
pub fn projection_lengths_8(delta: Point) -> [f64; 8] {
    projection_axes().map(|axis| delta.dot(axis).abs())
}

//! Exact Manhattan optimum of tiny instances by enumerating visit orders.

use itertools::Itertools;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{ConvexRegion, Point, RegionKind};
use crate::instance::{generate_instance, GeneratorParams, Instance};
use crate::lp::{abs_gadget, solve_lp, LpProblem, LpStatus, Sense};

/// Largest node count (depot included) accepted by [`brute_force_opt`].
pub const BRUTE_FORCE_LIMIT: usize = 8;

/// Optimal hitting points for a fixed cyclic order, from one LP over all
/// points with `|dx| + |dy|` on every leg.
pub fn optimal_fixed_order(
    inst: &Instance,
    order: &[usize],
    regions: &[ConvexRegion],
) -> Result<(Vec<Point>, f64)> {
    let nn = inst.num_nodes();
    if order.len() != nn || regions.len() != nn || order.first() != Some(&0) {
        return Err(Error::InvalidArgument("order must visit every node once from the depot".into()));
    }
    let mut seen = vec![false; nn];
    for &k in order {
        if k >= nn || std::mem::replace(&mut seen[k], true) {
            return Err(Error::InvalidArgument("order is not a permutation".into()));
        }
    }
    if nn == 1 {
        return Ok((vec![inst.sensors[0].center()], 0.0));
    }
    let mut lp = LpProblem::new();
    let mut xy = Vec::with_capacity(nn);
    for (k, r) in regions.iter().enumerate() {
        let (lo_x, hi_x, lo_y, hi_y) = if k == 0 {
            let c = inst.sensors[0].center();
            (c.x, c.x, c.y, c.y)
        } else {
            (r.x_bounds.0, r.x_bounds.1, r.y_bounds.0, r.y_bounds.1)
        };
        let x = lp.add_var(lo_x, hi_x, 0.0);
        let y = lp.add_var(lo_y, hi_y, 0.0);
        if k > 0 {
            for h in r.half_planes.iter().map(|h| h.as_le()) {
                lp.add_row(&[(x, h.a), (y, h.b)], Sense::Le, h.c);
            }
        }
        xy.push((x, y));
    }
    for (pos, &a) in order.iter().enumerate() {
        let b = order[(pos + 1) % nn];
        abs_gadget(&mut lp, &[(xy[a].0, 1.0), (xy[b].0, -1.0)], 0.0, 1.0);
        abs_gadget(&mut lp, &[(xy[a].1, 1.0), (xy[b].1, -1.0)], 0.0, 1.0);
    }
    let sol = solve_lp(&lp);
    if sol.status != LpStatus::Optimal {
        return Err(Error::Lp(format!("fixed-order LP ended {:?}", sol.status)));
    }
    let points = xy.iter().map(|&(x, y)| Point::new(sol.values[x], sol.values[y])).collect();
    Ok((points, sol.objective_value))
}

/// Global Manhattan optimum over all directed orders starting at the depot.
/// Ties go to the lexicographically smallest order.
pub fn brute_force_opt(inst: &Instance, regions: &[ConvexRegion]) -> Result<(Vec<usize>, Vec<Point>, f64)> {
    let nn = inst.num_nodes();
    if nn == 0 || nn > BRUTE_FORCE_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "brute force handles 1..={BRUTE_FORCE_LIMIT} nodes, got {nn}"
        )));
    }
    let orders: Vec<Vec<usize>> = (1..nn)
        .permutations(nn - 1)
        .map(|tail| std::iter::once(0).chain(tail).collect())
        .collect();
    let solved: Vec<(Vec<usize>, Vec<Point>, f64)> = orders
        .into_par_iter()
        .map(|order| optimal_fixed_order(inst, &order, regions).map(|(p, c)| (order, p, c)))
        .collect::<Result<_>>()?;
    Ok(solved
        .into_iter()
        .min_by(|a, b| a.2.total_cmp(&b.2).then_with(|| a.0.cmp(&b.0)))
        .expect("at least one order"))
}

/// One certified optimum of a generated instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureEntry {
    pub seed: u64,
    pub n: usize,
    pub optimal_cost: f64,
}

/// Brute-force optima of a family of generated instances, stored as CSV
/// with `#` lines carrying the generator settings.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleFixture {
    pub width: f64,
    pub height: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub region: RegionKind,
    /// Largest median relative gap the heuristic may show on this family.
    pub median_gap_threshold: f64,
    pub entries: Vec<FixtureEntry>,
}

impl OracleFixture {
    pub fn params(&self, n: usize) -> GeneratorParams {
        GeneratorParams {
            sensors: n,
            width: self.width,
            height: self.height,
            r_min: self.r_min,
            r_max: self.r_max,
        }
    }

    pub fn instance(&self, entry: &FixtureEntry) -> Result<Instance> {
        generate_instance(&self.params(entry.n), entry.seed)
    }

    /// Solves every seed with [`brute_force_opt`].
    pub fn build(
        width: f64,
        height: f64,
        r_range: (f64, f64),
        region: RegionKind,
        n: usize,
        seeds: impl IntoIterator<Item = u64>,
        median_gap_threshold: f64,
    ) -> Result<Self> {
        let mut fx = Self {
            width,
            height,
            r_min: r_range.0,
            r_max: r_range.1,
            region,
            median_gap_threshold,
            entries: Vec::new(),
        };
        for seed in seeds {
            let inst = generate_instance(&fx.params(n), seed)?;
            let regions = crate::mf::build_regions(&inst, region);
            let (_, _, optimal_cost) = brute_force_opt(&inst, &regions)?;
            fx.entries.push(FixtureEntry { seed, n, optimal_cost });
        }
        Ok(fx)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# generator: width={} height={} r_min={} r_max={}\n# region: {}\n# objective: manhattan\n# median_gap_threshold: {}\n",
            self.width,
            self.height,
            self.r_min,
            self.r_max,
            self.region.as_str(),
            self.median_gap_threshold
        );
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["seed", "n", "optimal_cost"]).expect("in-memory write");
        for e in &self.entries {
            w.write_record([e.seed.to_string(), e.n.to_string(), format!("{:.9}", e.optimal_cost)])
                .expect("in-memory write");
        }
        out.push_str(std::str::from_utf8(&w.into_inner().expect("in-memory flush")).expect("UTF-8"));
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |m: String| Error::InvalidArgument(format!("oracle fixture: {m}"));
        let mut settings = std::collections::BTreeMap::new();
        for line in text.lines().filter_map(|l| l.strip_prefix('#')) {
            let Some((key, value)) = line.split_once(':') else { continue };
            if key.trim() == "generator" {
                for kv in value.split_whitespace() {
                    if let Some((k, v)) = kv.split_once('=') {
                        settings.insert(k.to_string(), v.to_string());
                    }
                }
            } else {
                settings.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        let num = |k: &str| -> Result<f64> {
            settings
                .get(k)
                .ok_or_else(|| bad(format!("missing {k}")))?
                .parse()
                .map_err(|e| bad(format!("{k}: {e}")))
        };
        let region = settings
            .get("region")
            .ok_or_else(|| bad("missing region".into()))?
            .parse()?;
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let mut entries = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let field = |i: usize| rec.get(i).ok_or_else(|| bad("short record".into()));
            entries.push(FixtureEntry {
                seed: field(0)?.parse().map_err(|e| bad(format!("seed: {e}")))?,
                n: field(1)?.parse().map_err(|e| bad(format!("n: {e}")))?,
                optimal_cost: field(2)?.parse().map_err(|e| bad(format!("cost: {e}")))?,
            });
        }
        Ok(Self {
            width: num("width")?,
            height: num("height")?,
            r_min: num("r_min")?,
            r_max: num("r_max")?,
            region,
            median_gap_threshold: num("median_gap_threshold")?,
            entries,
        })
    }
}

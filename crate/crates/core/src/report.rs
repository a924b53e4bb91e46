//! Benchmark tables and SVG trajectory plots.
//!
//! Bench CSV schema, one header row then:
//!
//! ```text
//! instance,config,manhattan,euclidean,time_s,re,best
//! ns5,PH-Lin2,1234.500000,1100.250000,0.012,0.000000,1
//! ARE,PH-Lin2,,,,0.013400,
//! ```
//!
//! Costs and `re` carry 6 decimals, `time_s` 3. `re` compares the Euclidean
//! cost with the cheapest Euclidean cost any config reached on that
//! instance, and `best` is 1 on the rows that reached it. Data rows are
//! sorted by instance file name, then config order; the `ARE` rows close
//! the table, one per config.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConvexRegion, Point, RegionKind};
use crate::instance::{parse_instance, Instance};
use crate::mf::{solve_mf, SolverConfig};
use crate::tsp::RouteState;

/// `(ac - bc) / bc`
pub fn relative_error(ac: f64, bc: f64) -> Result<f64> {
    if !(bc > 0.0) {
        return Err(Error::InvalidArgument(format!("best cost must be positive, got {bc}")));
    }
    Ok((ac - bc) / bc)
}

/// Mean of the relative errors over a suite.
pub fn average_relative_error(res: &[f64]) -> Result<f64> {
    if res.is_empty() {
        return Err(Error::InvalidArgument("empty suite".into()));
    }
    Ok(res.iter().sum::<f64>() / res.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    pub config: String,
    pub manhattan: f64,
    pub euclidean: f64,
    pub time_s: f64,
    pub re: f64,
    pub best: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// `(config label, ARE)` in config order.
    pub are: Vec<(String, f64)>,
    /// Files that could not be read or solved.
    pub skipped: Vec<(PathBuf, String)>,
}

/// Instance files of a directory: every regular `.txt` file, sorted.
pub fn instance_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::InvalidArgument(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "txt"))
        .collect();
    files.sort();
    Ok(files)
}

/// Reads an instance file; an unnamed instance takes the file stem.
pub fn load_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
    let mut inst = parse_instance(&text)?;
    if inst.name.is_empty() {
        inst.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    }
    Ok(inst)
}

pub fn bench(dir: &Path, configs: &[SolverConfig]) -> Result<BenchReport> {
    if configs.is_empty() {
        return Err(Error::InvalidArgument("no solver configurations".into()));
    }
    let files = instance_files(dir)?;
    if files.is_empty() {
        return Err(Error::InvalidArgument(format!("no .txt instances in {}", dir.display())));
    }
    let mut skipped = Vec::new();
    let mut instances = Vec::new();
    for f in files {
        match load_instance(&f) {
            Ok(inst) => instances.push((f, inst)),
            Err(e) => skipped.push((f, e.to_string())),
        }
    }
    let jobs: Vec<(usize, usize)> = (0..instances.len())
        .flat_map(|i| (0..configs.len()).map(move |c| (i, c)))
        .collect();
    let results: Vec<(usize, usize, Result<(RouteState, f64)>)> = jobs
        .into_par_iter()
        .map(|(i, c)| {
            let start = Instant::now();
            let out = solve_mf(&instances[i].1, &configs[c]).map(|o| (o.state, start.elapsed().as_secs_f64()));
            (i, c, out)
        })
        .collect();

    let mut per_instance: Vec<Vec<Option<(RouteState, f64)>>> = vec![vec![None; configs.len()]; instances.len()];
    for (i, c, out) in results {
        match out {
            Ok(v) => per_instance[i][c] = Some(v),
            Err(e) => skipped.push((instances[i].0.clone(), format!("{}: {e}", configs[c].label()))),
        }
    }
    let labels: Vec<String> = configs.iter().map(SolverConfig::label).collect();
    let mut rows = Vec::new();
    let mut res: Vec<Vec<f64>> = vec![Vec::new(); configs.len()];
    for ((_, inst), solved) in instances.iter().zip(&per_instance) {
        let best = solved
            .iter()
            .flatten()
            .map(|(s, _)| s.euclidean_cost)
            .fold(f64::INFINITY, f64::min);
        for (c, entry) in solved.iter().enumerate() {
            let Some((state, time_s)) = entry else { continue };
            let re = if best > 0.0 {
                relative_error(state.euclidean_cost, best)?
            } else {
                0.0
            };
            res[c].push(re);
            rows.push(BenchRow {
                instance: inst.name.clone(),
                config: labels[c].clone(),
                manhattan: state.manhattan_cost,
                euclidean: state.euclidean_cost,
                time_s: *time_s,
                re,
                best: state.euclidean_cost == best,
            });
        }
    }
    let are = labels
        .into_iter()
        .zip(&res)
        .filter(|(_, r)| !r.is_empty())
        .map(|(l, r)| Ok((l, average_relative_error(r)?)))
        .collect::<Result<_>>()?;
    skipped.sort();
    Ok(BenchReport { rows, are, skipped })
}

pub const CSV_HEADER: [&str; 7] = ["instance", "config", "manhattan", "euclidean", "time_s", "re", "best"];

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

pub fn write_bench_csv(report: &BenchReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in &report.rows {
        w.write_record([
            r.instance.clone(),
            r.config.clone(),
            format!("{:.6}", r.manhattan),
            format!("{:.6}", r.euclidean),
            format!("{:.3}", r.time_s),
            format!("{:.6}", r.re),
            if r.best { "1" } else { "0" }.to_string(),
        ])
        .expect("in-memory write");
    }
    for (label, are) in &report.are {
        w.write_record(["ARE", label, "", "", "", &format!("{are:.6}"), ""])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

/// Data rows of a bench table; summary rows are skipped.
pub fn read_bench_csv(text: &str) -> Result<Vec<BenchRow>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::InvalidArgument("unexpected bench header".into()));
    }
    let num = |s: &str| s.parse::<f64>().map_err(csv_err);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        if &rec[0] == "ARE" {
            continue;
        }
        rows.push(BenchRow {
            instance: rec[0].to_string(),
            config: rec[1].to_string(),
            manhattan: num(&rec[2])?,
            euclidean: num(&rec[3])?,
            time_s: num(&rec[4])?,
            re: num(&rec[5])?,
            best: &rec[6] == "1",
        });
    }
    Ok(rows)
}

/// Static plot of an instance and a route: disks, inscribed regions,
/// hitting points, the closed route and a depot marker.
pub fn render_svg(inst: &Instance, rs: &RouteState, kind: RegionKind) -> String {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut grow = |p: Point, r: f64| {
        lo = Point::new(lo.x.min(p.x - r), lo.y.min(p.y - r));
        hi = Point::new(hi.x.max(p.x + r), hi.y.max(p.y + r));
    };
    for s in &inst.sensors {
        grow(s.center(), s.radius);
    }
    for p in &rs.hitting_points {
        grow(*p, 0.0);
    }
    let span = (hi.x - lo.x).max(hi.y - lo.y).max(1.0);
    let margin = 0.05 * span;
    let unit = span / 200.0;
    let (w, h) = (hi.x - lo.x + 2.0 * margin, hi.y - lo.y + 2.0 * margin);
    // SVG y grows downward.
    let tx = |p: Point| (p.x - lo.x + margin, hi.y - p.y + margin);
    let f = |v: f64| {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" { "0".to_string() } else { s.to_string() }
    };

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="0 0 {} {}" width="800" height="{}">"#,
        f(w),
        f(h),
        f(800.0 * h / w)
    )
    .unwrap();
    writeln!(out, r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#, f(w), f(h)).unwrap();
    writeln!(out, r##"<g fill="none" stroke="#8aa" stroke-width="{}">"##, f(unit * 0.5)).unwrap();
    for s in inst.sensors.iter().skip(1) {
        let (x, y) = tx(s.center());
        writeln!(out, r#"<circle cx="{}" cy="{}" r="{}"/>"#, f(x), f(y), f(s.radius)).unwrap();
    }
    out.push_str("</g>\n");
    writeln!(out, r##"<g fill="#dde8f4" stroke="#48c" stroke-width="{}">"##, f(unit * 0.4)).unwrap();
    for s in inst.sensors.iter().skip(1) {
        let pts: Vec<String> = ConvexRegion::inscribe(kind, s.center(), s.radius)
            .vertices()
            .into_iter()
            .map(|p| {
                let (x, y) = tx(p);
                format!("{},{}", f(x), f(y))
            })
            .collect();
        writeln!(out, r#"<polygon points="{}"/>"#, pts.join(" ")).unwrap();
    }
    out.push_str("</g>\n");
    let path: Vec<String> = rs
        .closed_path()
        .into_iter()
        .map(|p| {
            let (x, y) = tx(p);
            format!("{},{}", f(x), f(y))
        })
        .collect();
    writeln!(
        out,
        r##"<polyline fill="none" stroke="#c33" stroke-width="{}" points="{}"/>"##,
        f(unit),
        path.join(" ")
    )
    .unwrap();
    writeln!(out, r##"<g fill="#222">"##).unwrap();
    for p in rs.hitting_points.iter().skip(1) {
        let (x, y) = tx(*p);
        let half = 1.2 * unit;
        writeln!(
            out,
            r#"<rect x="{}" y="{}" width="{}" height="{}"/>"#,
            f(x - half),
            f(y - half),
            f(2.0 * half),
            f(2.0 * half)
        )
        .unwrap();
    }
    out.push_str("</g>\n");
    let (dx, dy) = tx(inst.depot().center());
    writeln!(
        out,
        r##"<circle cx="{}" cy="{}" r="{}" fill="#2a2" stroke="black" stroke-width="{}"/>"##,
        f(dx),
        f(dy),
        f(2.5 * unit),
        f(unit * 0.3)
    )
    .unwrap();
    out.push_str("</svg>\n");
    out
}

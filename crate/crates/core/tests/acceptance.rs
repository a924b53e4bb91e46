//! Acceptance gates, one line per criterion. Runs as a plain binary so the
//! lines are always shown; exits nonzero if any gate fails.

use std::f64::consts::{PI, SQRT_2};
use std::time::Instant;

use itertools::Itertools;

use cetsp::geometry::{projection_lengths_8, ConvexRegion};
use cetsp::instance::{generate_instance, GeneratorParams};
use cetsp::lp::{solve_lp, LpProblem, LpStatus, Sense};
use cetsp::metrics::{draw_samples, fit_regression};
use cetsp::mf::{build_regions, validate_solution};
use cetsp::milp::build_model;
use cetsp::oracle::{brute_force_opt, optimal_fixed_order, OracleFixture};
use cetsp::rng::SplitMix64;
use cetsp::tsp::{held_karp, tour_cost};
use cetsp::{solve_mf, Instance, Linearization, ObjectiveConfig, Point, RegionKind, SolverConfig};

type Gate = Result<String, String>;

fn check(ok: bool, detail: String) -> Gate {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

#[allow(clippy::approx_constant)]
fn area_ratios() -> Gate {
    let start = Instant::now();
    let mut rng = SplitMix64::new(2024);
    let sq = ConvexRegion::inscribe(RegionKind::Square, Point::new(0.0, 0.0), 1.0);
    let hx = ConvexRegion::inscribe(RegionKind::Hexagon, Point::new(0.0, 0.0), 1.0);
    let (mut disk, mut in_sq, mut in_hx) = (0u32, 0u32, 0u32);
    for _ in 0..100_000 {
        let p = Point::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
        if p.norm_sq() <= 1.0 {
            disk += 1;
            in_sq += sq.contains(p, 0.0) as u32;
            in_hx += hx.contains(p, 0.0) as u32;
        }
    }
    let (rs, rh) = (in_sq as f64 / disk as f64, in_hx as f64 / disk as f64);
    let secs = start.elapsed().as_secs_f64();
    check(
        (rs - 0.6366).abs() <= 0.01 && (rh - 0.8270).abs() <= 0.01 && secs < 1.0,
        format!("square/circle {rs:.4} (0.6366), hexagon/circle {rh:.4} (0.8270), {secs:.3} s"),
    )
}

fn containment() -> Gate {
    let mut rng = SplitMix64::new(7);
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for kind in [RegionKind::Square, RegionKind::Hexagon] {
        let mut sampled = 0;
        while sampled < 10_000 {
            let c = Point::new(rng.uniform(-1000.0, 1000.0), rng.uniform(-1000.0, 1000.0));
            let r = rng.uniform(0.1, 200.0);
            let region = ConvexRegion::inscribe(kind, c, r);
            for v in region.vertices() {
                worst = worst.max(v.sub(c).norm_sq().sqrt() - r);
            }
            for _ in 0..100 {
                let p = Point::new(
                    rng.uniform(region.x_bounds.0, region.x_bounds.1),
                    rng.uniform(region.y_bounds.0, region.y_bounds.1),
                );
                if !region.contains(p, 0.0) {
                    continue;
                }
                sampled += 1;
                let excess = p.sub(c).norm_sq().sqrt() - r;
                worst = worst.max(excess);
                if excess > 1e-9 {
                    violations += 1;
                }
            }
        }
    }
    check(
        violations == 0,
        format!("20000 region points and all vertices, {violations} outside their disk (max excess {worst:.2e})"),
    )
}

/// Grid search over every variable but the last, which is solved exactly
/// on its feasible interval. The grid starts at box/2000 and zooms on the
/// incumbent.
fn grid_oracle(p: &LpProblem) -> Option<f64> {
    let n = p.num_vars;
    let last = n - 1;
    let inner = |x: &mut [f64]| -> Option<f64> {
        let (mut lo, mut hi) = p.bounds[last];
        for c in &p.constraints {
            let a = c.coeffs.get(last).copied().unwrap_or(0.0);
            let rest: f64 = c.coeffs.iter().take(last).zip(x.iter()).map(|(a, v)| a * v).sum();
            let (le, ge) = match c.sense {
                Sense::Le => (true, false),
                Sense::Ge => (false, true),
                Sense::Eq => (true, true),
            };
            for (on, sgn) in [(le, 1.0), (ge, -1.0)] {
                if !on {
                    continue;
                }
                // sgn * (a v + rest) <= sgn * rhs
                let (aa, bb) = (sgn * a, sgn * (c.rhs - rest));
                if aa.abs() < 1e-15 {
                    if bb < -1e-12 {
                        return None;
                    }
                } else if aa > 0.0 {
                    hi = hi.min(bb / aa);
                } else {
                    lo = lo.max(bb / aa);
                }
            }
        }
        if lo > hi + 1e-12 {
            return None;
        }
        let c = p.objective[last];
        x[last] = if c >= 0.0 { lo } else { hi.max(lo) };
        Some(p.objective_of(x))
    };
    let mut window: Vec<(f64, f64)> = p.bounds[..last].to_vec();
    let mut steps = 2000usize;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _level in 0..12 {
        let mut x = vec![0.0; n];
        let counts = vec![steps + 1; last];
        let total: usize = counts.iter().product();
        for flat in 0..total {
            let mut k = flat;
            for d in 0..last {
                let i = k % counts[d];
                k /= counts[d];
                let (lo, hi) = window[d];
                x[d] = lo + (hi - lo) * i as f64 / steps as f64;
            }
            if let Some(v) = inner(&mut x) {
                if best.as_ref().is_none_or(|(b, _)| v < *b) {
                    best = Some((v, x.clone()));
                }
            }
        }
        if last == 0 {
            break;
        }
        let Some((_, bx)) = &best else { break };
        window = (0..last)
            .map(|d| {
                let (lo, hi) = window[d];
                let step = (hi - lo) / steps as f64;
                let (b0, b1) = p.bounds[d];
                ((bx[d] - 2.0 * step).max(b0), (bx[d] + 2.0 * step).min(b1))
            })
            .collect();
        steps = 40;
    }
    best.map(|(v, _)| v)
}

fn lp_engine() -> Gate {
    let mut rng = SplitMix64::new(31337);
    let (mut worst, mut status_mismatch, mut infeasible) = (0.0f64, 0, 0);
    for _ in 0..100 {
        let n = 1 + (rng.next_u64() % 3) as usize;
        let m = 1 + (rng.next_u64() % 6) as usize;
        let mut p = LpProblem::new();
        let anchor: Vec<f64> = (0..n).map(|_| rng.uniform(-5.0, 5.0)).collect();
        for _ in 0..n {
            let lo = rng.uniform(-10.0, 0.0);
            let hi = rng.uniform(0.0, 10.0);
            p.add_var(lo, hi, rng.uniform(-1.0, 1.0));
        }
        for _ in 0..m {
            let terms: Vec<(usize, f64)> = (0..n).map(|j| (j, rng.uniform(-1.0, 1.0))).collect();
            let at: f64 = terms.iter().map(|&(j, a)| a * anchor[j]).sum();
            // Mostly slack at the anchor; some rows cut it off.
            let rhs = at + rng.uniform(-1.5, 4.0);
            if rng.next_u64() % 2 == 0 {
                p.add_row(&terms, Sense::Le, rhs);
            } else {
                let neg: Vec<(usize, f64)> = terms.iter().map(|&(j, a)| (j, -a)).collect();
                p.add_row(&neg, Sense::Ge, -rhs);
            }
        }
        let sol = solve_lp(&p);
        let grid = grid_oracle(&p);
        match (sol.status, grid) {
            (LpStatus::Optimal, Some(g)) => worst = worst.max((sol.objective_value - g).abs()),
            (LpStatus::Infeasible, None) => infeasible += 1,
            _ => status_mismatch += 1,
        }
    }
    check(
        worst <= 1e-3 && status_mismatch == 0,
        format!("100 LPs ({infeasible} infeasible), max objective gap {worst:.2e}, {status_mismatch} status disagreements"),
    )
}

fn tsp_exact() -> Gate {
    let mut rng = SplitMix64::new(8);
    let mut mismatches = 0;
    for _ in 0..50 {
        // Integer weights keep every summation order exact.
        let d: Vec<Vec<f64>> = (0..8)
            .map(|i| {
                (0..8)
                    .map(|j| if i == j { 0.0 } else { (1 + rng.next_u64() % 1000) as f64 })
                    .collect()
            })
            .collect();
        let (order, cost) = held_karp(&d).map_err(|e| e.to_string())?;
        let brute = (1..8)
            .permutations(7)
            .map(|t| {
                let o: Vec<usize> = std::iter::once(0).chain(t).collect();
                tour_cost(&o, &d)
            })
            .fold(f64::INFINITY, f64::min);
        if cost != brute || tour_cost(&order, &d) != brute {
            mismatches += 1;
        }
    }
    check(mismatches == 0, format!("50 random 8-node matrices, {mismatches} mismatches"))
}

fn single_sensor() -> Gate {
    let inst = Instance::from_records("", &[(0.0, 0.0, 0.0), (10.0, 0.0, SQRT_2)]).map_err(|e| e.to_string())?;
    let cfg = SolverConfig::new(RegionKind::Square, ObjectiveConfig::default());
    let out = solve_mf(&inst, &cfg).map_err(|e| e.to_string())?;
    let regions = build_regions(&inst, RegionKind::Square);
    let (pts, cost) = optimal_fixed_order(&inst, &[0, 1], &regions).map_err(|e| e.to_string())?;
    let p = out.state.hitting_points[1];
    let ok = (out.state.manhattan_cost - 18.0).abs() <= 1e-6
        && (cost - 18.0).abs() <= 1e-6
        && p.sub(Point::new(9.0, 0.0)).norm_sq().sqrt() <= 1e-6
        && pts[1].sub(Point::new(9.0, 0.0)).norm_sq().sqrt() <= 1e-6;
    check(
        ok,
        format!(
            "solver {:.9} at ({:.6}, {:.6}), oracle {:.9} at ({:.6}, {:.6})",
            out.state.manhattan_cost, p.x, p.y, cost, pts[1].x, pts[1].y
        ),
    )
}

fn optimality_gap() -> Gate {
    let start = Instant::now();
    let text = include_str!("fixtures/oracle_n6.csv");
    let fx = OracleFixture::from_csv(text).map_err(|e| e.to_string())?;
    let cfg = SolverConfig::new(fx.region, ObjectiveConfig::default());
    let mut gaps = Vec::new();
    let (mut below, mut stale) = (0, 0);
    for e in &fx.entries {
        let inst = fx.instance(e).map_err(|e| e.to_string())?;
        let regions = build_regions(&inst, fx.region);
        let (_, _, fresh) = brute_force_opt(&inst, &regions).map_err(|e| e.to_string())?;
        if (fresh - e.optimal_cost).abs() > 1e-6 {
            stale += 1;
        }
        let out = solve_mf(&inst, &cfg).map_err(|e| e.to_string())?;
        if out.state.manhattan_cost < e.optimal_cost - 1e-6 {
            below += 1;
        }
        gaps.push((out.state.manhattan_cost - e.optimal_cost) / e.optimal_cost);
    }
    gaps.sort_by(f64::total_cmp);
    let k = gaps.len();
    let median = 0.5 * (gaps[(k - 1) / 2] + gaps[k / 2]);
    let secs = start.elapsed().as_secs_f64();
    check(
        k == 20 && below == 0 && stale == 0 && median <= fx.median_gap_threshold && secs < 120.0,
        format!(
            "{k} instances, median gap {:.4}% (limit {:.0}%), max {:.4}%, {below} below optimum, {stale} stale optima, {secs:.2} s",
            100.0 * median,
            100.0 * fx.median_gap_threshold,
            100.0 * gaps[k - 1]
        ),
    )
}

fn monotone_and_deterministic() -> Gate {
    let model = fit_regression(20_000, 1200.0, 3).map_err(|e| e.to_string())?;
    let mut runs = 0;
    let (mut rises, mut differs) = (0, 0);
    for seed in 1..=6 {
        let params = GeneratorParams {
            sensors: 8 + 4 * seed as usize,
            width: 1000.0,
            height: 1000.0,
            r_min: 20.0,
            r_max: 90.0,
        };
        let inst = generate_instance(&params, seed).map_err(|e| e.to_string())?;
        for (kind, lin, reg, proj) in [
            (RegionKind::Hexagon, Linearization::Lin2, false, false),
            (RegionKind::Square, Linearization::Lin1, false, true),
            (RegionKind::Hexagon, Linearization::Lin2, true, true),
        ] {
            let mut cfg = SolverConfig::new(kind, ObjectiveConfig::default().with_projection(proj));
            cfg.linearization = lin;
            if reg {
                cfg.obj_cfg.mode = cetsp::ObjectiveMode::Regression;
                cfg.regression = Some(model);
            }
            let a = solve_mf(&inst, &cfg).map_err(|e| e.to_string())?;
            let b = solve_mf(&inst, &cfg).map_err(|e| e.to_string())?;
            runs += 1;
            rises += a
                .surrogate_trace
                .windows(2)
                .filter(|w| w[1] > w[0] + 1e-9 * w[0].abs().max(1.0))
                .count();
            if a.state != b.state || a.surrogate_trace != b.surrogate_trace {
                differs += 1;
            }
        }
    }
    check(
        rises == 0 && differs == 0,
        format!("{runs} solves, {rises} cost increases, {differs} nondeterministic reruns"),
    )
}

fn big_m_soundness() -> Gate {
    let mut worst = f64::INFINITY;
    let mut checked = 0;
    for seed in 1..=10u64 {
        let params = GeneratorParams {
            sensors: 2 + (seed % 4) as usize,
            width: 500.0,
            height: 300.0,
            r_min: 10.0,
            r_max: 60.0,
        };
        let inst = generate_instance(&params, seed).map_err(|e| e.to_string())?;
        for kind in [RegionKind::Square, RegionKind::Hexagon] {
            let regions = build_regions(&inst, kind);
            let (order, points, _) = brute_force_opt(&inst, &regions).map_err(|e| e.to_string())?;
            for proj in [false, true] {
                let cfg = ObjectiveConfig::default().with_projection(proj);
                let m = build_model(&inst, kind, Linearization::Lin2, &cfg, None).map_err(|e| e.to_string())?;
                let v = m.assignment_from_tour(&order, &points).map_err(|e| e.to_string())?;
                if m.bound_violation(&v) > 1e-7 {
                    return Err(format!("seed {seed}: bounds violated"));
                }
                for (_, s) in m.row_slacks(&v) {
                    worst = worst.min(s);
                    checked += 1;
                }
            }
        }
    }
    check(worst >= -1e-7, format!("{checked} rows over 10 instances, min slack {worst:.2e}"))
}

fn regression_quality() -> Gate {
    let model = fit_regression(100_000, 1200.0, 1).map_err(|e| e.to_string())?;
    let r2 = model.r_squared(&draw_samples(10_000, 1200.0, 2));
    let band = 0.60..=0.85;
    check(
        r2 >= 0.95 && band.contains(&model.c_dx) && band.contains(&model.c_dy),
        format!("held-out R^2 {r2:.4}, c_dx {:.4}, c_dy {:.4}", model.c_dx, model.c_dy),
    )
}

fn projection_invariance() -> Gate {
    let mut rng = SplitMix64::new(99);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let d = Point::new(rng.uniform(-500.0, 500.0), rng.uniform(-500.0, 500.0));
        let base: f64 = projection_lengths_8(d).iter().sum();
        for k in 1..16 {
            let s: f64 = projection_lengths_8(d.rotate(k as f64 * PI / 8.0)).iter().sum();
            worst = worst.max((s - base).abs() / base);
        }
    }
    check(worst <= 1e-9, format!("1000 deltas x 15 rotations, max relative change {worst:.2e}"))
}

fn end_to_end() -> Gate {
    let params = GeneratorParams {
        sensors: 50,
        width: 1000.0,
        height: 1000.0,
        r_min: 20.0,
        r_max: 80.0,
    };
    let inst = generate_instance(&params, 50).map_err(|e| e.to_string())?;
    let cfg = SolverConfig::new(RegionKind::Hexagon, ObjectiveConfig::default().with_projection(true));
    let start = Instant::now();
    let out = solve_mf(&inst, &cfg).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let valid = validate_solution(&inst, &out.state, 1e-7).passed();
    check(
        secs < 60.0 && valid,
        format!(
            "51 nodes, euclidean {:.3}, valid {valid}, {secs:.2} s",
            out.state.euclidean_cost
        ),
    )
}

fn main() {
    let gates: [(&str, fn() -> Gate); 11] = [
        ("geometry fidelity", area_ratios),
        ("containment chain", containment),
        ("LP engine vs grid search", lp_engine),
        ("TSP exactness", tsp_exact),
        ("fixed-order oracle vs solver", single_sensor),
        ("global optimality gap", optimality_gap),
        ("monotonicity and determinism", monotone_and_deterministic),
        ("Lin2 big-M soundness", big_m_soundness),
        ("regression quality", regression_quality),
        ("projection invariance", projection_invariance),
        ("end-to-end scale", end_to_end),
    ];
    let mut failed = 0;
    for (k, (name, gate)) in gates.iter().enumerate() {
        match gate() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", k + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", gates.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

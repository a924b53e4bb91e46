use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cetsp::instance::{generate_instance, write_instance, GeneratorParams};
use cetsp::metrics::{draw_samples, fit_regression};
use cetsp::mf::{build_regions, validate_solution, SolutionRecord};
use cetsp::milp::{build_model, export_lp};
use cetsp::oracle::{brute_force_opt, OracleFixture};
use cetsp::report::{bench, load_instance, render_svg, write_bench_csv};
use cetsp::{solve_mf, Linearization, ObjectiveConfig, ObjectiveMode, RegionKind, RegressionModel, SolverConfig};

#[derive(Parser)]
#[command(name = "cetsp", version, about = "Close Enough TSP solver with inscribed-region surrogates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance with the fragmented relocation method.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the solution JSON here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also render the route as SVG.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Write the full MILP of an instance as a CPLEX LP file.
    ExportLp {
        instance: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Directory for `<instance>__<region>__<lin>[__reg][__proj8].lp`.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Print to stdout instead of writing a file.
        #[arg(long)]
        stdout: bool,
    },
    /// Fit the |dx|,|dy| -> Euclidean regression on uniform random pairs.
    FitReg {
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Coordinates are drawn from [0, range).
        #[arg(long, default_value_t = 1200.0)]
        range: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Held-out samples for R², drawn with seed + 1.
        #[arg(long, default_value_t = 10_000)]
        holdout: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate a random instance.
    Gen {
        #[arg(long)]
        sensors: usize,
        #[command(flatten)]
        box_args: BoxArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Render a solution as SVG.
    Render {
        instance: PathBuf,
        solution: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Exact Manhattan optimum by order enumeration (at most 7 sensors), or
    /// a fixture of optima for generated instances.
    Oracle {
        instance: Option<PathBuf>,
        #[arg(long, default_value = "hexagon")]
        region: RegionKind,
        /// Build a fixture for seeds 1..=N instead of solving one file.
        #[arg(long)]
        fixture_seeds: Option<u64>,
        #[arg(long, default_value_t = 6)]
        sensors: usize,
        #[command(flatten)]
        box_args: BoxArgs,
        #[arg(long, default_value_t = 0.25)]
        median_gap_threshold: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve every `.txt` instance of a directory under several configs.
    Bench {
        dir: PathBuf,
        /// `basic`: PS/PH x Lin1/Lin2. `full`: also every regression and
        /// projection variant.
        #[arg(long, default_value = "basic")]
        suite: String,
        /// JSON list of solver configs, replacing the suite.
        #[arg(long)]
        configs: Option<PathBuf>,
        /// Regression model JSON for the `full` suite; fitted with `--seed`
        /// when absent.
        #[arg(long)]
        regression: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BoxArgs {
    #[arg(long, default_value_t = 1000.0)]
    width: f64,
    #[arg(long, default_value_t = 1000.0)]
    height: f64,
    #[arg(long, default_value_t = 20.0)]
    r_min: f64,
    #[arg(long, default_value_t = 80.0)]
    r_max: f64,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value = "hexagon")]
    region: RegionKind,
    #[arg(long, default_value = "lin2")]
    lin: Linearization,
    /// Use the regression surrogate instead of Manhattan.
    #[arg(long)]
    regression: Option<PathBuf>,
    /// Add the eight-axis projection term.
    #[arg(long)]
    proj8: bool,
    #[arg(long, default_value_t = 1.0)]
    proj_weight: f64,
    #[arg(long, default_value_t = 50)]
    max_outer_iters: usize,
    /// JSON solver config; its fields override the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl SolverArgs {
    fn resolve(&self) -> Result<SolverConfig> {
        let regression = self.regression.as_deref().map(read_model).transpose()?;
        let mut cfg = SolverConfig {
            region_kind: self.region,
            obj_cfg: ObjectiveConfig {
                mode: if regression.is_some() {
                    ObjectiveMode::Regression
                } else {
                    ObjectiveMode::Manhattan
                },
                projection8: self.proj8,
                projection_weight: self.proj_weight,
            },
            regression,
            linearization: self.lin,
            max_outer_iters: self.max_outer_iters,
            ..SolverConfig::default()
        };
        if let Some(path) = &self.config {
            let overrides: serde_json::Value = serde_json::from_str(&read(path)?)
                .with_context(|| format!("parsing {}", path.display()))?;
            let mut base = serde_json::to_value(&cfg)?;
            merge(&mut base, overrides);
            cfg = serde_json::from_value(base).with_context(|| format!("config {}", path.display()))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn merge(base: &mut serde_json::Value, over: serde_json::Value) {
    match (base, over) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (k, v) in o {
                merge(b.entry(k).or_insert(serde_json::Value::Null), v);
            }
        }
        (b, o) => *b = o,
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_model(path: &Path) -> Result<RegressionModel> {
    Ok(RegressionModel::from_json(&read(path)?)?)
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn with_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve {
            instance,
            solver,
            output,
            svg,
        } => {
            let inst = load_instance(&instance)?;
            let cfg = solver.resolve()?;
            let out = solve_mf(&inst, &cfg)?;
            let report = validate_solution(&inst, &out.state, 1e-7);
            if !report.passed() {
                bail!("solution failed validation: {report:?}");
            }
            let record = SolutionRecord::new(&inst, &cfg, &out);
            eprintln!(
                "{} {}: manhattan {:.6} euclidean {:.6} in {:.3} s",
                inst.name,
                cfg.label(),
                record.manhattan_cost,
                record.euclidean_cost,
                out.elapsed.as_secs_f64()
            );
            if let Some(p) = svg {
                fs::write(&p, render_svg(&inst, &out.state, cfg.region_kind))?;
            }
            emit(output.as_deref(), &with_newline(record.to_json()))
        }
        Command::ExportLp {
            instance,
            solver,
            out_dir,
            stdout,
        } => {
            let inst = load_instance(&instance)?;
            let cfg = solver.resolve()?;
            let model = build_model(
                &inst,
                cfg.region_kind,
                cfg.linearization,
                &cfg.obj_cfg,
                cfg.regression.as_ref(),
            )?;
            let text = export_lp(&model);
            if stdout {
                print!("{text}");
            } else {
                let path = out_dir.join(model.file_name());
                fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::FitReg {
            samples,
            range,
            seed,
            holdout,
            output,
        } => {
            let model = fit_regression(samples, range, seed)?;
            let r2 = model.r_squared(&draw_samples(holdout, range, seed.wrapping_add(1)));
            eprintln!(
                "c_dx {:.6} c_dy {:.6} bias {:.6} held-out R^2 {:.6}",
                model.c_dx, model.c_dy, model.bias, r2
            );
            emit(output.as_deref(), &with_newline(model.to_json()))
        }
        Command::Gen {
            sensors,
            box_args,
            seed,
            output,
        } => {
            let params = GeneratorParams {
                sensors,
                width: box_args.width,
                height: box_args.height,
                r_min: box_args.r_min,
                r_max: box_args.r_max,
            };
            emit(output.as_deref(), &write_instance(&generate_instance(&params, seed)?))
        }
        Command::Render {
            instance,
            solution,
            output,
        } => {
            let inst = load_instance(&instance)?;
            let record = SolutionRecord::from_json(&read(&solution)?)?;
            let rs = record.route_state()?;
            if rs.hitting_points.len() != inst.num_nodes() {
                bail!("solution has {} points, instance has {} nodes", rs.hitting_points.len(), inst.num_nodes());
            }
            emit(output.as_deref(), &render_svg(&inst, &rs, record.config.region_kind))
        }
        Command::Oracle {
            instance,
            region,
            fixture_seeds,
            sensors,
            box_args,
            median_gap_threshold,
            output,
        } => match (instance, fixture_seeds) {
            (Some(path), None) => {
                let inst = load_instance(&path)?;
                let (order, points, cost) = brute_force_opt(&inst, &build_regions(&inst, region))?;
                let mut text = format!("cost {cost:.6}\norder");
                for k in order.iter().chain([&0]) {
                    text.push_str(&format!(" {k}"));
                }
                text.push('\n');
                for (k, p) in points.iter().enumerate() {
                    text.push_str(&format!("{k} {:.6} {:.6}\n", p.x, p.y));
                }
                emit(output.as_deref(), &text)
            }
            (None, Some(n_seeds)) => {
                let fx = OracleFixture::build(
                    box_args.width,
                    box_args.height,
                    (box_args.r_min, box_args.r_max),
                    region,
                    sensors,
                    1..=n_seeds,
                    median_gap_threshold,
                )?;
                emit(output.as_deref(), &fx.to_csv())
            }
            _ => bail!("give either an instance file or --fixture-seeds"),
        },
        Command::Bench {
            dir,
            suite,
            configs,
            regression,
            seed,
            output,
        } => {
            let configs = match configs {
                Some(p) => serde_json::from_str::<Vec<SolverConfig>>(&read(&p)?)
                    .with_context(|| format!("parsing {}", p.display()))?,
                None => {
                    let model = match (&regression, suite.as_str()) {
                        (Some(p), _) => Some(read_model(p)?),
                        (None, "full") => Some(fit_regression(100_000, 1200.0, seed)?),
                        _ => None,
                    };
                    suite_configs(&suite, model)?
                }
            };
            let report = bench(&dir, &configs)?;
            for (path, err) in &report.skipped {
                eprintln!("skipped {}: {err}", path.display());
            }
            emit(output.as_deref(), &write_bench_csv(&report))
        }
    }
}

fn suite_configs(name: &str, model: Option<RegressionModel>) -> Result<Vec<SolverConfig>> {
    let objectives: Vec<(ObjectiveMode, bool)> = match name {
        "basic" => vec![(ObjectiveMode::Manhattan, false)],
        "full" => vec![
            (ObjectiveMode::Manhattan, false),
            (ObjectiveMode::Manhattan, true),
            (ObjectiveMode::Regression, false),
            (ObjectiveMode::Regression, true),
        ],
        other => bail!("unknown suite `{other}` (basic, full)"),
    };
    let mut out = Vec::new();
    for region in [RegionKind::Square, RegionKind::Hexagon] {
        for lin in [Linearization::Lin1, Linearization::Lin2] {
            for &(mode, proj) in &objectives {
                out.push(SolverConfig {
                    region_kind: region,
                    obj_cfg: ObjectiveConfig {
                        mode,
                        projection8: proj,
                        projection_weight: 1.0,
                    },
                    regression: (mode == ObjectiveMode::Regression).then_some(model).flatten(),
                    linearization: lin,
                    ..SolverConfig::default()
                });
            }
        }
    }
    Ok(out)
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
